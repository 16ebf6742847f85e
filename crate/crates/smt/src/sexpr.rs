use crate::error::SmtError;
use std::fmt;

/// Minimal s-expression tree for SMT-LIB 2 text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s) => Some(s),
            SExpr::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::Atom(_) => None,
            SExpr::List(items) => Some(items),
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(s) => write!(f, "{s}"),
            SExpr::List(items) => {
                write!(f, "(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn tokenize(input: &str) -> Result<Vec<String>, SmtError> {
    let mut tokens = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '(' => tokens.push("(".to_string()),
            ')' => tokens.push(")".to_string()),
            '"' => {
                let mut s = String::from("\"");
                loop {
                    match chars.next() {
                        Some('"') => {
                            // SMT-LIB escapes a quote by doubling it.
                            if chars.peek() == Some(&'"') {
                                s.push('"');
                                chars.next();
                            } else {
                                s.push('"');
                                break;
                            }
                        }
                        Some(c) => s.push(c),
                        None => return Err(SmtError::Parse("unterminated string".into())),
                    }
                }
                tokens.push(s);
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::new();
                s.push(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    s.push(n);
                    chars.next();
                }
                tokens.push(s);
            }
        }
    }
    Ok(tokens)
}

/// Parse every complete s-expression in the input.
pub fn parse_all(input: &str) -> Result<Vec<SExpr>, SmtError> {
    let tokens = tokenize(input)?;
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < tokens.len() {
        let (sx, next) = parse_at(&tokens, pos)?;
        out.push(sx);
        pos = next;
    }
    Ok(out)
}

/// Parse exactly one s-expression.
pub fn parse_one(input: &str) -> Result<SExpr, SmtError> {
    let all = parse_all(input)?;
    match all.len() {
        1 => Ok(all.into_iter().next().unwrap()),
        n => Err(SmtError::Parse(format!("expected 1 s-expression, got {n}"))),
    }
}

fn parse_at(tokens: &[String], pos: usize) -> Result<(SExpr, usize), SmtError> {
    match tokens.get(pos).map(String::as_str) {
        None => Err(SmtError::Parse("unexpected end of input".into())),
        Some("(") => {
            let mut items = Vec::new();
            let mut pos = pos + 1;
            loop {
                match tokens.get(pos).map(String::as_str) {
                    None => return Err(SmtError::Parse("unbalanced parenthesis".into())),
                    Some(")") => return Ok((SExpr::List(items), pos + 1)),
                    Some(_) => {
                        let (sx, next) = parse_at(tokens, pos)?;
                        items.push(sx);
                        pos = next;
                    }
                }
            }
        }
        Some(")") => Err(SmtError::Parse("unexpected closing parenthesis".into())),
        Some(atom) => Ok((SExpr::Atom(atom.to_string()), pos + 1)),
    }
}

/// True when the buffer holds at least one complete top-level s-expression
/// (parentheses balanced and at least one token outside a comment).
pub fn is_complete(input: &str) -> bool {
    let mut depth = 0i64;
    let mut in_comment = false;
    let mut in_string = false;
    let mut saw_token = false;
    for c in input.chars() {
        if in_comment {
            if c == '\n' {
                in_comment = false;
            }
            continue;
        }
        if in_string {
            if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            ';' => in_comment = true,
            '"' => {
                in_string = true;
                saw_token = true;
            }
            '(' => {
                depth += 1;
                saw_token = true;
            }
            ')' => depth -= 1,
            c if !c.is_whitespace() => saw_token = true,
            _ => {}
        }
    }
    saw_token && depth <= 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_lists() {
        let sx = parse_one("(assert (= x (_ bv9 8)))").unwrap();
        let items = sx.list().unwrap();
        assert_eq!(items[0].atom(), Some("assert"));
        assert_eq!(items[1].list().unwrap().len(), 3);
    }

    #[test]
    fn skips_comments() {
        let all = parse_all("; header\n(a b) ; trailing\n(c)").unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn roundtrips_display() {
        let text = "(a (b c) (_ bv9 8))";
        let sx = parse_one(text).unwrap();
        assert_eq!(sx.to_string(), text);
    }

    #[test]
    fn detects_balance() {
        assert!(is_complete("(check-sat)"));
        assert!(!is_complete("(assert (= x"));
        assert!(is_complete("sat"));
        assert!(!is_complete("   ; nothing\n"));
    }
}
