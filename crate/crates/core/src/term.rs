//! Ground and non-ground terms shared by every layer: fluents, actions,
//! formula and program names, and the atoms of ground logic programs.

use std::fmt;
use std::sync::Arc;

/// A first-order term.
///
/// Constants are `Sym`, integers are `Int`, compound terms are `App`.
/// `Var` only appears before grounding.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Int(i64),
    Sym(Arc<str>),
    App(Arc<str>, Arc<[Term]>),
    Var(Arc<str>),
}

impl Term {
    pub fn sym(name: &str) -> Term {
        Term::Sym(Arc::from(name))
    }

    pub fn int(v: i64) -> Term {
        Term::Int(v)
    }

    pub fn var(name: &str) -> Term {
        Term::Var(Arc::from(name))
    }

    /// Builds `name(args)`, or the constant `name` when `args` is empty.
    pub fn app(name: &str, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::sym(name)
        } else {
            Term::App(Arc::from(name), Arc::from(args))
        }
    }

    /// Same as [`Term::app`] but reuses an already shared name.
    pub fn app_shared(name: Arc<str>, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Sym(name)
        } else {
            Term::App(name, Arc::from(args))
        }
    }

    /// Functor name; `None` for integers and variables.
    pub fn name(&self) -> Option<&str> {
        match self {
            Term::Sym(s) | Term::App(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App(_, a) => a,
            _ => &[],
        }
    }

    pub fn arity(&self) -> usize {
        self.args().len()
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, a) => a.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Collects variable names in left-to-right order, without duplicates.
    pub fn vars_into(&self, out: &mut Vec<Arc<str>>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::App(_, a) => a.iter().for_each(|t| t.vars_into(out)),
            _ => {}
        }
    }

    /// Replaces variables bound by `subst`; unbound variables stay.
    pub fn substitute(&self, subst: &dyn Fn(&str) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => subst(v).unwrap_or_else(|| self.clone()),
            Term::App(n, a) if !self.is_ground() => Term::App(
                n.clone(),
                a.iter().map(|t| t.substitute(subst)).collect::<Vec<_>>().into(),
            ),
            _ => self.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(v) => write!(f, "{v}"),
            Term::Sym(s) | Term::Var(s) => f.write_str(s),
            Term::App(n, a) => {
                write!(f, "{n}(")?;
                for (i, t) in a.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl From<i64> for Term {
    fn from(v: i64) -> Self {
        Term::Int(v)
    }
}

impl From<usize> for Term {
    fn from(v: usize) -> Self {
        Term::Int(v as i64)
    }
}

impl From<&str> for Term {
    fn from(s: &str) -> Self {
        Term::sym(s)
    }
}

/// Shorthand for building compound terms in code and tests:
/// `term!(holds, f, 0)` is `holds(f,0)`.
#[macro_export]
macro_rules! term {
    ($name:ident) => { $crate::term::Term::sym(stringify!($name)) };
    ($name:ident, $($arg:expr),+ $(,)?) => {
        $crate::term::Term::app(stringify!($name), vec![$($crate::term::Term::from($arg)),+])
    };
}

impl From<&Term> for Term {
    fn from(t: &Term) -> Self {
        t.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_has_no_spaces() {
        let t = Term::app("holds", vec![Term::app("up", vec![Term::sym("l1")]), Term::int(0)]);
        assert_eq!(t.to_string(), "holds(up(l1),0)");
    }

    #[test]
    fn nullary_app_is_constant() {
        assert_eq!(Term::app("f", vec![]), Term::sym("f"));
    }

    #[test]
    fn integers_order_numerically() {
        assert!(Term::int(2) < Term::int(10));
        assert!(term!(holds, "f", 2i64) < term!(holds, "f", 10i64));
    }

    #[test]
    fn substitution_binds_vars() {
        let t = Term::app("up", vec![Term::var("N")]);
        let g = t.substitute(&|v| (v == "N").then(|| Term::int(3)));
        assert_eq!(g.to_string(), "up(3)");
        assert!(g.is_ground());
        assert!(!t.is_ground());
    }
}
