use crate::error::SmtError;
use crate::expr::Expr;
use crate::sort::Sort;
use std::collections::{BTreeMap, BTreeSet};

/// A set of declared variables plus boolean assertions over them: the path
/// predicate of an execution state. Forking clones the set; the clone
/// remembers how many assertions were inherited so the delta added since the
/// fork can be inspected (and sent incrementally to a solver).
#[derive(Clone, Debug, Default)]
pub struct ConstraintSet {
    decls: BTreeMap<String, Sort>,
    assertions: Vec<Expr>,
    inherited: usize,
    fresh_counter: u64,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-')
}

impl ConstraintSet {
    pub fn new() -> ConstraintSet {
        ConstraintSet::default()
    }

    /// Declare a new variable and return an expression referring to it.
    /// Names must be unique within the set and SMT-LIB friendly.
    pub fn declare(&mut self, name: impl Into<String>, sort: Sort) -> Result<Expr, SmtError> {
        let name = name.into();
        if !valid_name(&name) {
            return Err(SmtError::InvalidName(name));
        }
        if self.decls.contains_key(&name) {
            return Err(SmtError::DuplicateVariable(name));
        }
        self.decls.insert(name.clone(), sort);
        Ok(Expr::var(name, sort))
    }

    /// Declare a variable with a unique generated name `<prefix>_<n>`.
    pub fn declare_fresh(&mut self, prefix: &str, sort: Sort) -> Result<Expr, SmtError> {
        loop {
            let name = format!("{prefix}_{}", self.fresh_counter);
            self.fresh_counter += 1;
            if !self.decls.contains_key(&name) {
                return self.declare(name, sort);
            }
        }
    }

    pub fn sort_of(&self, name: &str) -> Option<Sort> {
        self.decls.get(name).copied()
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.decls.contains_key(name)
    }

    /// Add a boolean assertion. Every variable mentioned must already be
    /// declared in this set.
    pub fn assert(&mut self, expr: Expr) -> Result<(), SmtError> {
        if !expr.sort().is_bool() {
            return Err(SmtError::Sort(format!(
                "assertions must be Bool, got {}",
                expr.sort()
            )));
        }
        for name in expr.variables() {
            if !self.decls.contains_key(&name) {
                return Err(SmtError::UndeclaredVariable(name));
            }
        }
        self.assertions.push(expr);
        Ok(())
    }

    /// Clone for a forked state; the clone records the inheritance point.
    pub fn fork(&self) -> ConstraintSet {
        let mut child = self.clone();
        child.inherited = child.assertions.len();
        child
    }

    /// Number of assertions inherited from the parent at the last fork.
    pub fn inherited_len(&self) -> usize {
        self.inherited
    }

    /// Bookkeeping counters, exposed so a set rebuilt from its serialized
    /// text form behaves identically to the original (fresh-name generation
    /// continues where it left off, inheritance marker survives).
    pub fn counters(&self) -> (usize, u64) {
        (self.inherited, self.fresh_counter)
    }

    pub fn restore_counters(&mut self, inherited: usize, fresh_counter: u64) {
        self.inherited = inherited.min(self.assertions.len());
        self.fresh_counter = fresh_counter;
    }

    /// Assertions added since the last fork.
    pub fn added_since_fork(&self) -> &[Expr] {
        &self.assertions[self.inherited..]
    }

    pub fn assertions(&self) -> &[Expr] {
        &self.assertions
    }

    pub fn declarations(&self) -> impl Iterator<Item = (&String, &Sort)> {
        self.decls.iter()
    }

    pub fn num_declarations(&self) -> usize {
        self.decls.len()
    }

    /// Names of variables that appear in at least one assertion. Declared
    /// variables outside this set are unconstrained and complete to zero in
    /// any model.
    pub fn constrained_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in &self.assertions {
            out.extend(a.variables());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declare_rejects_duplicates_and_bad_names() {
        let mut cs = ConstraintSet::new();
        cs.declare("x", Sort::BitVec(8)).unwrap();
        assert!(matches!(
            cs.declare("x", Sort::Bool),
            Err(SmtError::DuplicateVariable(_))
        ));
        assert!(matches!(
            cs.declare("3x", Sort::Bool),
            Err(SmtError::InvalidName(_))
        ));
        assert!(matches!(
            cs.declare("a b", Sort::Bool),
            Err(SmtError::InvalidName(_))
        ));
    }

    #[test]
    fn assert_requires_declared_vars() {
        let mut cs = ConstraintSet::new();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        let y = Expr::var("y", Sort::BitVec(8));
        assert!(cs.assert(x.eq(&Expr::bv_u64(1, 8))).is_ok());
        assert!(matches!(
            cs.assert(y.eq(&Expr::bv_u64(1, 8))),
            Err(SmtError::UndeclaredVariable(_))
        ));
        assert!(cs.assert(x.clone()).is_err()); // not Bool
    }

    #[test]
    fn fork_tracks_inheritance() {
        let mut cs = ConstraintSet::new();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        cs.assert(x.ult(&Expr::bv_u64(10, 8))).unwrap();
        let mut child = cs.fork();
        assert_eq!(child.inherited_len(), 1);
        child.assert(x.ne(&Expr::bv_u64(3, 8))).unwrap();
        assert_eq!(child.added_since_fork().len(), 1);
        assert_eq!(cs.assertions().len(), 1);
        assert_eq!(child.assertions().len(), 2);
    }

    #[test]
    fn fresh_names_do_not_collide() {
        let mut cs = ConstraintSet::new();
        cs.declare("tmp_0", Sort::Bool).unwrap();
        let v = cs.declare_fresh("tmp", Sort::Bool).unwrap();
        assert_ne!(v.as_var(), Some("tmp_0"));
    }
}
