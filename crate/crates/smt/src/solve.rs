use crate::blast::{eliminate_arrays, BitBlaster};
use crate::constraints::ConstraintSet;
use crate::error::SmtError;
use crate::eval::{eval, Model, Value};
use crate::expr::Expr;
use crate::session::ExternalSession;
use crate::simplify::simplify;
use num_bigint::BigUint;
use num_traits::One;
use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

/// Verdict of a satisfiability query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverResult {
    Sat,
    Unsat,
    /// The solver could not decide within its budget. Never coerced to
    /// Unsat; callers must treat it as "don't know".
    Unknown,
}

impl fmt::Display for SolverResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverResult::Sat => write!(f, "sat"),
            SolverResult::Unsat => write!(f, "unsat"),
            SolverResult::Unknown => write!(f, "unknown"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    /// The configured solver cannot run at all (spawn failure, protocol
    /// breakdown). Distinct from [`SolverError::Unknown`].
    #[error("solver unavailable: {0}")]
    Unavailable(String),
    /// A query timed out or the solver answered `unknown`.
    #[error("solver could not decide the query")]
    Unknown,
    /// A model was requested but the constraints are unsatisfiable.
    #[error("no model: constraints are unsatisfiable")]
    NoModel,
    /// Malformed traffic on an external session (internal; usually mapped
    /// to `Unavailable` after fallback).
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Smt(#[from] SmtError),
}

/// How to reach a solver.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// External solver command line (argv). `None` selects the built-in
    /// bit-blasting engine.
    pub command: Option<Vec<String>>,
    /// Per-query budget. External processes are killed when it expires;
    /// the built-in engine checks it around SAT calls.
    pub timeout: Duration,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            command: None,
            timeout: Duration::from_secs(30),
        }
    }
}

impl SolverConfig {
    pub fn builtin() -> SolverConfig {
        SolverConfig::default()
    }

    /// Parse a command string like `"z3 -smt2 -in"` (whitespace split).
    pub fn external(command_line: &str, timeout: Duration) -> Option<SolverConfig> {
        let argv: Vec<String> = command_line
            .split_whitespace()
            .map(str::to_string)
            .collect();
        if argv.is_empty() {
            return None;
        }
        Some(SolverConfig {
            command: Some(argv),
            timeout,
        })
    }
}

enum Backend {
    Builtin,
    External(Box<ExternalSession>),
}

/// Solver facade: satisfiability checks, model extraction with the
/// zero-completion rule, value enumeration, and range bounding, over either
/// the built-in engine or an external SMT-LIB 2 process.
pub struct Solver {
    backend: Backend,
    timeout: Duration,
}

impl Solver {
    pub fn new(config: &SolverConfig) -> Solver {
        let backend = match &config.command {
            None => Backend::Builtin,
            Some(argv) => Backend::External(Box::new(ExternalSession::new(
                argv.clone(),
                config.timeout,
            ))),
        };
        Solver {
            backend,
            timeout: config.timeout,
        }
    }

    pub fn is_external(&self) -> bool {
        matches!(self.backend, Backend::External(_))
    }

    /// Satisfiability of `cs` plus the extra constraints.
    pub fn check(&mut self, cs: &ConstraintSet, extra: &[Expr]) -> Result<SolverResult, SolverError> {
        match &mut self.backend {
            Backend::Builtin => {
                let (verdict, _) = builtin_query(cs, extra, self.timeout, false)?;
                Ok(verdict)
            }
            Backend::External(session) => {
                let (verdict, _) = session.query(cs, extra, &[])?;
                Ok(verdict)
            }
        }
    }

    /// Model for the requested variables, or `None` when unsatisfiable.
    /// Variables that do not occur in any assertion are completed to zero,
    /// so identical constraint sets yield identical models on every backend.
    pub fn model(
        &mut self,
        cs: &ConstraintSet,
        extra: &[Expr],
        names: &BTreeSet<String>,
    ) -> Result<Option<Model>, SolverError> {
        let mut constrained = cs.constrained_variables();
        for e in extra {
            constrained.extend(e.variables());
        }
        let queried: Vec<String> = names.intersection(&constrained).cloned().collect();
        let solved: Vec<(String, BigUint)> = match &mut self.backend {
            Backend::Builtin => {
                let (verdict, model) = builtin_query(cs, extra, self.timeout, true)?;
                match verdict {
                    SolverResult::Unsat => return Ok(None),
                    SolverResult::Unknown => return Err(SolverError::Unknown),
                    SolverResult::Sat => {
                        let model = model.unwrap_or_default();
                        queried
                            .iter()
                            .map(|n| (n.clone(), model.value_of(n)))
                            .collect()
                    }
                }
            }
            Backend::External(session) => {
                let (verdict, values) = session.query(cs, extra, &queried)?;
                match verdict {
                    SolverResult::Unsat => return Ok(None),
                    SolverResult::Unknown => return Err(SolverError::Unknown),
                    SolverResult::Sat => values,
                }
            }
        };
        let mut model = Model::new();
        for (name, value) in solved {
            model.insert(name, value);
        }
        for name in names {
            if model.get(name).is_none() {
                model.insert(name.clone(), BigUint::from(0u8));
            }
        }
        Ok(Some(model))
    }

    /// One concrete value of `expr` in some model of `cs` + `extra`.
    pub fn get_value_with(
        &mut self,
        cs: &ConstraintSet,
        extra: &[Expr],
        expr: &Expr,
    ) -> Result<BigUint, SolverError> {
        let expr = simplify(expr);
        if let Some(v) = expr.as_bv_const() {
            match self.check(cs, extra)? {
                SolverResult::Sat => return Ok(v.clone()),
                SolverResult::Unsat => return Err(SolverError::NoModel),
                SolverResult::Unknown => return Err(SolverError::Unknown),
            }
        }
        let names = expr.variables();
        match self.model(cs, extra, &names)? {
            None => Err(SolverError::NoModel),
            Some(model) => Ok(match eval(&expr, &model) {
                Value::Bool(b) => {
                    if b {
                        BigUint::one()
                    } else {
                        BigUint::from(0u8)
                    }
                }
                v => v.into_bits(),
            }),
        }
    }

    pub fn get_value(&mut self, cs: &ConstraintSet, expr: &Expr) -> Result<BigUint, SolverError> {
        self.get_value_with(cs, &[], expr)
    }

    /// Is `cond` true in at least one model?
    pub fn can_be_true(&mut self, cs: &ConstraintSet, cond: &Expr) -> Result<bool, SolverError> {
        match self.check(cs, std::slice::from_ref(cond))? {
            SolverResult::Sat => Ok(true),
            SolverResult::Unsat => Ok(false),
            SolverResult::Unknown => Err(SolverError::Unknown),
        }
    }

    /// Is `cond` true in every model?
    pub fn must_be_true(&mut self, cs: &ConstraintSet, cond: &Expr) -> Result<bool, SolverError> {
        match self.check(cs, &[cond.not()])? {
            SolverResult::Sat => Ok(false),
            SolverResult::Unsat => Ok(true),
            SolverResult::Unknown => Err(SolverError::Unknown),
        }
    }

    /// Up to `cap` distinct feasible values of `expr` (ascending), plus a
    /// flag reporting whether more values exist beyond the cap.
    pub fn all_values(
        &mut self,
        cs: &ConstraintSet,
        expr: &Expr,
        cap: usize,
    ) -> Result<(Vec<BigUint>, bool), SolverError> {
        let expr = simplify(expr);
        let width = expr.width();
        let mut found: Vec<BigUint> = Vec::new();
        let mut blockers: Vec<Expr> = Vec::new();
        loop {
            match self.check(cs, &blockers)? {
                SolverResult::Unsat => break,
                SolverResult::Unknown => return Err(SolverError::Unknown),
                SolverResult::Sat => {}
            }
            if found.len() == cap {
                found.sort();
                return Ok((found, true));
            }
            let v = self.get_value_with(cs, &blockers, &expr)?;
            let v_expr = Expr::bv(v.clone(), width).map_err(SmtError::from)?;
            blockers.push(expr.ne(&v_expr));
            found.push(v);
        }
        found.sort();
        Ok((found, false))
    }

    /// Minimum and maximum feasible value of `expr` under `cs`, by binary
    /// search. Errors with NoModel when `cs` is unsatisfiable.
    pub fn minmax(
        &mut self,
        cs: &ConstraintSet,
        expr: &Expr,
    ) -> Result<(BigUint, BigUint), SolverError> {
        let expr = simplify(expr);
        let width = expr.width();
        match self.check(cs, &[])? {
            SolverResult::Unsat => return Err(SolverError::NoModel),
            SolverResult::Unknown => return Err(SolverError::Unknown),
            SolverResult::Sat => {}
        }
        if let Some(v) = expr.as_bv_const() {
            return Ok((v.clone(), v.clone()));
        }
        let max = crate::expr::width_mask(width);
        let bv = |v: &BigUint| Expr::bv(v.clone(), width).expect("bounded by width mask");

        let mut lo = BigUint::from(0u8);
        let mut hi = max.clone();
        while lo < hi {
            let mid = (&lo + &hi) >> 1;
            match self.check(cs, &[expr.ule(&bv(&mid))])? {
                SolverResult::Sat => hi = mid,
                SolverResult::Unsat => lo = mid + BigUint::one(),
                SolverResult::Unknown => return Err(SolverError::Unknown),
            }
        }
        let min_val = lo;

        let mut lo = min_val.clone();
        let mut hi = max;
        while lo < hi {
            let mid = (&lo + &hi + BigUint::one()) >> 1;
            match self.check(cs, &[bv(&mid).ule(&expr)])? {
                SolverResult::Sat => lo = mid,
                SolverResult::Unsat => hi = mid - BigUint::one(),
                SolverResult::Unknown => return Err(SolverError::Unknown),
            }
        }
        Ok((min_val, lo))
    }
}

/// Simplify, eliminate arrays, bit-blast, and run the SAT engine.
pub(crate) fn builtin_query(
    cs: &ConstraintSet,
    extra: &[Expr],
    timeout: Duration,
    want_model: bool,
) -> Result<(SolverResult, Option<Model>), SolverError> {
    let started = Instant::now();
    let mut live = Vec::new();
    for a in cs.assertions().iter().chain(extra.iter()) {
        let s = simplify(a);
        match s.as_bool_const() {
            Some(true) => {}
            Some(false) => return Ok((SolverResult::Unsat, None)),
            None => live.push(s),
        }
    }
    let rewritten = eliminate_arrays(&live)?;
    let mut blaster = BitBlaster::new();
    for e in &rewritten {
        blaster.assert(&simplify(e))?;
    }
    let sat = blaster.solve()?;
    if started.elapsed() > timeout {
        return Ok((SolverResult::Unknown, None));
    }
    if !sat {
        return Ok((SolverResult::Unsat, None));
    }
    let model = want_model.then(|| {
        blaster
            .model()
            .into_iter()
            .filter(|(name, _)| !name.starts_with("__sel_"))
            .collect::<Model>()
    });
    Ok((SolverResult::Sat, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sort::Sort;

    fn solver() -> Solver {
        Solver::new(&SolverConfig::builtin())
    }

    #[test]
    fn empty_set_is_sat() {
        let cs = ConstraintSet::new();
        assert_eq!(solver().check(&cs, &[]).unwrap(), SolverResult::Sat);
    }

    #[test]
    fn contradiction_is_unsat() {
        let mut cs = ConstraintSet::new();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        cs.assert(Expr::bv_u64(5, 8).ult(&x)).unwrap();
        cs.assert(x.ult(&Expr::bv_u64(3, 8))).unwrap();
        assert_eq!(solver().check(&cs, &[]).unwrap(), SolverResult::Unsat);
    }

    #[test]
    fn unique_value_extracted() {
        let mut cs = ConstraintSet::new();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        cs.assert(x.add(&Expr::bv_u64(1, 8)).eq(&Expr::bv_u64(10, 8)))
            .unwrap();
        assert_eq!(
            solver().get_value(&cs, &x).unwrap(),
            BigUint::from(9u8)
        );
    }

    #[test]
    fn get_value_of_constant_expression() {
        let cs = ConstraintSet::new();
        assert_eq!(
            solver().get_value(&cs, &Expr::bv_u64(42, 32)).unwrap(),
            BigUint::from(42u8)
        );
    }

    #[test]
    fn all_values_enumerates_and_sorts() {
        let mut cs = ConstraintSet::new();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        cs.assert(x.ult(&Expr::bv_u64(3, 8))).unwrap();
        let (vals, truncated) = solver().all_values(&cs, &x, 64).unwrap();
        assert_eq!(
            vals,
            vec![BigUint::from(0u8), BigUint::from(1u8), BigUint::from(2u8)]
        );
        assert!(!truncated);
    }

    #[test]
    fn all_values_respects_cap() {
        let mut cs = ConstraintSet::new();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        cs.assert(x.ult(&Expr::bv_u64(100, 8))).unwrap();
        let (vals, truncated) = solver().all_values(&cs, &x, 5).unwrap();
        assert_eq!(vals.len(), 5);
        assert!(truncated);
    }

    #[test]
    fn all_values_on_unsat_is_empty() {
        let mut cs = ConstraintSet::new();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        cs.assert(x.ne(&x)).unwrap();
        let (vals, truncated) = solver().all_values(&cs, &x, 64).unwrap();
        assert!(vals.is_empty());
        assert!(!truncated);
    }

    #[test]
    fn can_and_must() {
        let mut cs = ConstraintSet::new();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        cs.assert(x.ult(&Expr::bv_u64(10, 8))).unwrap();
        let mut s = solver();
        assert!(s.can_be_true(&cs, &x.eq(&Expr::bv_u64(3, 8))).unwrap());
        assert!(!s.can_be_true(&cs, &x.eq(&Expr::bv_u64(11, 8))).unwrap());
        assert!(s.must_be_true(&cs, &x.ult(&Expr::bv_u64(20, 8))).unwrap());
        assert!(!s.must_be_true(&cs, &x.ult(&Expr::bv_u64(5, 8))).unwrap());
    }

    #[test]
    fn minmax_by_binary_search() {
        let mut cs = ConstraintSet::new();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        cs.assert(Expr::bv_u64(17, 8).ule(&x)).unwrap();
        cs.assert(x.ule(&Expr::bv_u64(200, 8))).unwrap();
        cs.assert(x.ne(&Expr::bv_u64(17, 8))).unwrap();
        let (min, max) = solver().minmax(&cs, &x).unwrap();
        assert_eq!(min, BigUint::from(18u8));
        assert_eq!(max, BigUint::from(200u8));
    }

    #[test]
    fn model_completion_zeroes_unconstrained() {
        let mut cs = ConstraintSet::new();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        cs.declare("free", Sort::BitVec(8)).unwrap();
        cs.assert(x.eq(&Expr::bv_u64(9, 8))).unwrap();
        let names: BTreeSet<String> = ["x".to_string(), "free".to_string()].into();
        let model = solver().model(&cs, &[], &names).unwrap().unwrap();
        assert_eq!(model.value_of("x"), BigUint::from(9u8));
        assert_eq!(model.value_of("free"), BigUint::from(0u8));
    }

    #[test]
    fn model_none_when_unsat() {
        let mut cs = ConstraintSet::new();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        cs.assert(x.ne(&x)).unwrap();
        let names: BTreeSet<String> = ["x".to_string()].into();
        assert!(solver().model(&cs, &[], &names).unwrap().is_none());
    }
}
