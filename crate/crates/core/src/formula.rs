//! Fluent formulas and temporal constraints: quantifier grounding, state
//! evaluation, satisfaction over finite state sequences and the fact
//! encoding used by the logic programs.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::action::{Domain, Lit, Literal, State};
use crate::term::Term;

/// Fluent formulas and temporal constraints share one syntax tree.
/// A formula is a fluent formula when it uses no temporal operator and no `goal`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Lit(Literal),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Next(Box<Formula>),
    Always(Box<Formula>),
    Eventually(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Goal(Box<Formula>),
    Forall(Arc<str>, Vec<Term>, Box<Formula>),
    Exists(Arc<str>, Vec<Term>, Box<Formula>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("quantifier over {0} has an empty constant set")]
    EmptyQuantifier(String),
    #[error("formula still contains a quantifier")]
    Quantified,
    #[error("formula mentions unknown fluent {0}")]
    UnknownFluent(Term),
    #[error("free variable {0} in formula")]
    FreeVariable(String),
    #[error("temporal operator or goal inside a fluent formula")]
    NotFluentFormula,
    #[error("goal operator nested inside goal")]
    NestedGoal,
    #[error("goal argument {0} is not a literal")]
    GoalNotLiteral(String),
    #[error("goal-dependent formula needs a goal")]
    MissingGoal,
}

impl Formula {
    pub fn lit(l: Literal) -> Formula {
        Formula::Lit(l)
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn next(a: Formula) -> Formula {
        Formula::Next(Box::new(a))
    }

    pub fn always(a: Formula) -> Formula {
        Formula::Always(Box::new(a))
    }

    pub fn eventually(a: Formula) -> Formula {
        Formula::Eventually(Box::new(a))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn goal(a: Formula) -> Formula {
        Formula::Goal(Box::new(a))
    }

    /// `implies(a, b)` is sugar for `or(negation(a), b)`.
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(Formula::not(a), b)
    }

    fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Lit(_) => vec![],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => vec![a, b],
            Formula::Not(a)
            | Formula::Next(a)
            | Formula::Always(a)
            | Formula::Eventually(a)
            | Formula::Goal(a)
            | Formula::Forall(_, _, a)
            | Formula::Exists(_, _, a) => vec![a],
        }
    }

    /// No temporal operators and no goal operator.
    pub fn is_fluent(&self) -> bool {
        match self {
            Formula::Next(_) | Formula::Always(_) | Formula::Eventually(_) | Formula::Until(..) | Formula::Goal(_) => {
                false
            }
            _ => self.children().into_iter().all(Formula::is_fluent),
        }
    }

    pub fn is_goal_dependent(&self) -> bool {
        matches!(self, Formula::Goal(_)) || self.children().into_iter().any(Formula::is_goal_dependent)
    }

    pub fn is_quantifier_free(&self) -> bool {
        !matches!(self, Formula::Forall(..) | Formula::Exists(..))
            && self.children().into_iter().all(Formula::is_quantifier_free)
    }

    /// Nesting depth; a literal has depth 0.
    pub fn depth(&self) -> usize {
        self.children().into_iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }

    /// Literals occurring in the formula, in order of first occurrence.
    pub fn literals(&self) -> Vec<Literal> {
        let mut out = Vec::new();
        self.literals_into(&mut out);
        out
    }

    fn literals_into(&self, out: &mut Vec<Literal>) {
        if let Formula::Lit(l) = self {
            if !out.contains(l) {
                out.push(l.clone());
            }
        }
        for c in self.children() {
            c.literals_into(out);
        }
    }

    /// Replaces free variables; variables bound by an inner quantifier are left alone.
    pub fn substitute(&self, subst: &dyn Fn(&str) -> Option<Term>) -> Formula {
        let rec = |f: &Formula| Box::new(f.substitute(subst));
        match self {
            Formula::Lit(l) => Formula::Lit(Literal { fluent: l.fluent.substitute(subst), positive: l.positive }),
            Formula::And(a, b) => Formula::And(rec(a), rec(b)),
            Formula::Or(a, b) => Formula::Or(rec(a), rec(b)),
            Formula::Until(a, b) => Formula::Until(rec(a), rec(b)),
            Formula::Not(a) => Formula::Not(rec(a)),
            Formula::Next(a) => Formula::Next(rec(a)),
            Formula::Always(a) => Formula::Always(rec(a)),
            Formula::Eventually(a) => Formula::Eventually(rec(a)),
            Formula::Goal(a) => Formula::Goal(rec(a)),
            Formula::Forall(v, cs, a) | Formula::Exists(v, cs, a) => {
                let v2 = v.clone();
                let inner = move |x: &str| if x == &*v2 { None } else { subst(x) };
                let body = Box::new(a.substitute(&inner));
                if matches!(self, Formula::Forall(..)) {
                    Formula::Forall(v.clone(), cs.clone(), body)
                } else {
                    Formula::Exists(v.clone(), cs.clone(), body)
                }
            }
        }
    }

    /// Free variables, in order of first occurrence.
    pub fn free_vars(&self) -> Vec<Arc<str>> {
        let mut out = Vec::new();
        self.free_vars_into(&mut Vec::new(), &mut out);
        out
    }

    fn free_vars_into(&self, bound: &mut Vec<Arc<str>>, out: &mut Vec<Arc<str>>) {
        match self {
            Formula::Lit(l) => {
                let mut vs = Vec::new();
                l.fluent.vars_into(&mut vs);
                for v in vs {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            Formula::Forall(v, _, a) | Formula::Exists(v, _, a) => {
                bound.push(v.clone());
                a.free_vars_into(bound, out);
                bound.pop();
            }
            _ => {
                for c in self.children() {
                    c.free_vars_into(bound, out);
                }
            }
        }
    }

    /// Expands `forall` into right-nested `and` chains and `exists` into
    /// right-nested `or` chains, in the listed constant order.
    pub fn ground_quantifiers(&self) -> Result<Formula, FormulaError> {
        let rec = |f: &Formula| f.ground_quantifiers().map(Box::new);
        Ok(match self {
            Formula::Lit(_) => self.clone(),
            Formula::And(a, b) => Formula::And(rec(a)?, rec(b)?),
            Formula::Or(a, b) => Formula::Or(rec(a)?, rec(b)?),
            Formula::Until(a, b) => Formula::Until(rec(a)?, rec(b)?),
            Formula::Not(a) => Formula::Not(rec(a)?),
            Formula::Next(a) => Formula::Next(rec(a)?),
            Formula::Always(a) => Formula::Always(rec(a)?),
            Formula::Eventually(a) => Formula::Eventually(rec(a)?),
            Formula::Goal(a) => Formula::Goal(rec(a)?),
            Formula::Forall(v, cs, a) | Formula::Exists(v, cs, a) => {
                if cs.is_empty() {
                    return Err(FormulaError::EmptyQuantifier(v.to_string()));
                }
                let conj = matches!(self, Formula::Forall(..));
                let mut parts = Vec::with_capacity(cs.len());
                for c in cs {
                    let inst = a.substitute(&|x| (x == &**v).then(|| c.clone()));
                    parts.push(inst.ground_quantifiers()?);
                }
                let mut acc = parts.pop().expect("nonempty");
                while let Some(p) = parts.pop() {
                    acc = if conj { Formula::and(p, acc) } else { Formula::or(p, acc) };
                }
                acc
            }
        })
    }

    /// Rejects nested goals and non-literal goal arguments.
    pub fn check_goal_usage(&self) -> Result<(), FormulaError> {
        if let Formula::Goal(a) = self {
            if a.is_goal_dependent() {
                return Err(FormulaError::NestedGoal);
            }
            if !matches!(**a, Formula::Lit(_)) {
                return Err(FormulaError::GoalNotLiteral(a.to_string()));
            }
        }
        self.children().into_iter().try_for_each(Formula::check_goal_usage)
    }

    /// The canonical name used in logic programs. Literals name themselves.
    pub fn name(&self) -> Term {
        let un = |op: &str, a: &Formula| Term::app(op, vec![a.name()]);
        let bin = |op: &str, a: &Formula, b: &Formula| Term::app(op, vec![a.name(), b.name()]);
        match self {
            Formula::Lit(l) => l.to_term(),
            Formula::And(a, b) => bin("and", a, b),
            Formula::Or(a, b) => bin("or", a, b),
            Formula::Until(a, b) => bin("until", a, b),
            Formula::Not(a) => un("negation", a),
            Formula::Next(a) => un("next", a),
            Formula::Always(a) => un("always", a),
            Formula::Eventually(a) => un("eventually", a),
            Formula::Goal(a) => un("goal", a),
            Formula::Forall(v, cs, a) | Formula::Exists(v, cs, a) => {
                let op = if matches!(self, Formula::Forall(..)) { "forall" } else { "exists" };
                Term::app(op, vec![Term::Var(v.clone()), Term::app("set", cs.clone()), a.name()])
            }
        }
    }

    /// Truth in a complete state. The formula must be a quantifier-free fluent formula.
    pub fn eval_state(&self, d: &Domain, s: &State) -> Result<bool, FormulaError> {
        Ok(match self {
            Formula::Lit(l) => s.holds(resolve(d, l)?),
            Formula::And(a, b) => a.eval_state(d, s)? && b.eval_state(d, s)?,
            Formula::Or(a, b) => a.eval_state(d, s)? || b.eval_state(d, s)?,
            Formula::Not(a) => !a.eval_state(d, s)?,
            Formula::Forall(..) | Formula::Exists(..) => return Err(FormulaError::Quantified),
            _ => return Err(FormulaError::NotFluentFormula),
        })
    }
}

fn resolve(d: &Domain, l: &Literal) -> Result<Lit, FormulaError> {
    if !l.fluent.is_ground() {
        let mut vs = Vec::new();
        l.fluent.vars_into(&mut vs);
        return Err(FormulaError::FreeVariable(vs[0].to_string()));
    }
    d.lit(l).map_err(|_| FormulaError::UnknownFluent(l.fluent.clone()))
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Lit(l) => write!(f, "{l}"),
            Formula::And(a, b) => write!(f, "and({a}, {b})"),
            Formula::Or(a, b) => write!(f, "or({a}, {b})"),
            Formula::Until(a, b) => write!(f, "until({a}, {b})"),
            Formula::Not(a) => write!(f, "negation({a})"),
            Formula::Next(a) => write!(f, "next({a})"),
            Formula::Always(a) => write!(f, "always({a})"),
            Formula::Eventually(a) => write!(f, "eventually({a})"),
            Formula::Goal(a) => write!(f, "goal({a})"),
            Formula::Forall(v, cs, a) | Formula::Exists(v, cs, a) => {
                let op = if matches!(self, Formula::Forall(..)) { "forall" } else { "exists" };
                let cs: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
                write!(f, "{op}({v}, {{{}}}, {a})", cs.join(", "))
            }
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, Copy, Debug)]
enum Node {
    Lit(Lit),
    Const(bool),
    And(usize, usize),
    Or(usize, usize),
    Not(usize),
    Next(usize),
    Always(usize),
    Eventually(usize),
    Until(usize, usize),
}

/// A formula resolved against a domain and goal, with shared subformulas
/// merged. Nodes are stored children-first.
#[derive(Clone, Debug)]
pub struct CompiledFormula {
    nodes: Vec<Node>,
    names: Vec<Term>,
    root: usize,
}

impl CompiledFormula {
    pub fn new(d: &Domain, f: &Formula, goal: Option<&BTreeSet<Literal>>) -> Result<CompiledFormula, FormulaError> {
        if !f.is_quantifier_free() {
            return Err(FormulaError::Quantified);
        }
        f.check_goal_usage()?;
        if f.is_goal_dependent() && goal.is_none() {
            return Err(FormulaError::MissingGoal);
        }
        let mut c = CompiledFormula { nodes: Vec::new(), names: Vec::new(), root: 0 };
        let mut index = HashMap::new();
        c.root = c.add(d, f, goal, &mut index)?;
        Ok(c)
    }

    fn add(
        &mut self,
        d: &Domain,
        f: &Formula,
        goal: Option<&BTreeSet<Literal>>,
        index: &mut HashMap<Term, usize>,
    ) -> Result<usize, FormulaError> {
        let name = f.name();
        if let Some(&i) = index.get(&name) {
            return Ok(i);
        }
        let mut sub = |g: &Formula| self.add(d, g, goal, index);
        let node = match f {
            Formula::Lit(l) => Node::Lit(resolve(d, l)?),
            Formula::And(a, b) => Node::And(sub(a)?, sub(b)?),
            Formula::Or(a, b) => Node::Or(sub(a)?, sub(b)?),
            Formula::Until(a, b) => Node::Until(sub(a)?, sub(b)?),
            Formula::Not(a) => Node::Not(sub(a)?),
            Formula::Next(a) => Node::Next(sub(a)?),
            Formula::Always(a) => Node::Always(sub(a)?),
            Formula::Eventually(a) => Node::Eventually(sub(a)?),
            Formula::Goal(a) => match &**a {
                Formula::Lit(l) => Node::Const(goal.is_some_and(|g| g.contains(l))),
                _ => return Err(FormulaError::GoalNotLiteral(a.to_string())),
            },
            Formula::Forall(..) | Formula::Exists(..) => return Err(FormulaError::Quantified),
        };
        self.nodes.push(node);
        self.names.push(name.clone());
        index.insert(name, self.nodes.len() - 1);
        Ok(self.nodes.len() - 1)
    }

    /// Truth of every subformula at every time point `0..=n` of `states`
    /// under the stutter extension. Row order matches [`CompiledFormula::names`].
    pub fn table(&self, states: &[State]) -> Vec<Vec<bool>> {
        assert!(!states.is_empty(), "a state sequence has at least one state");
        let n = states.len() - 1;
        let mut v: Vec<Vec<bool>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let row: Vec<bool> = match *node {
                Node::Lit(l) => states.iter().map(|s| s.holds(l)).collect(),
                Node::Const(c) => vec![c; n + 1],
                Node::And(a, b) => (0..=n).map(|t| v[a][t] && v[b][t]).collect(),
                Node::Or(a, b) => (0..=n).map(|t| v[a][t] || v[b][t]).collect(),
                Node::Not(a) => (0..=n).map(|t| !v[a][t]).collect(),
                Node::Next(a) => (0..=n).map(|t| v[a][(t + 1).min(n)]).collect(),
                Node::Always(a) => suffix(n, |t, later| v[a][t] && later.unwrap_or(true)),
                Node::Eventually(a) => suffix(n, |t, later| v[a][t] || later.unwrap_or(false)),
                Node::Until(a, b) => suffix(n, |t, later| v[b][t] || (v[a][t] && later.unwrap_or(false))),
            };
            v.push(row);
        }
        v
    }

    pub fn names(&self) -> &[Term] {
        &self.names
    }

    pub fn root_index(&self) -> usize {
        self.root
    }

    pub fn eval(&self, states: &[State]) -> bool {
        self.table(states)[self.root][0]
    }
}

// Fills a row from time n down to 0 where the value at t may depend on the value at t+1
// (`None` at n, where the stutter makes t+1 indistinguishable from t).
fn suffix(n: usize, step: impl Fn(usize, Option<bool>) -> bool) -> Vec<bool> {
    let mut row = vec![false; n + 1];
    row[n] = step(n, None);
    for t in (0..n).rev() {
        row[t] = step(t, Some(row[t + 1]));
    }
    row
}

/// `I ⊨ f` over the stutter extension of `states`. A goal is required iff `f`
/// is goal-dependent; `goal(l)` holds iff `l` is in the goal.
pub fn sat(d: &Domain, states: &[State], f: &Formula, goal: Option<&BTreeSet<Literal>>) -> Result<bool, FormulaError> {
    Ok(CompiledFormula::new(d, f, goal)?.eval(states))
}

/// Named facts describing formulas to a logic program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FormulaTable {
    facts: Vec<Term>,
    seen: BTreeSet<Term>,
    goal_literals: Vec<Literal>,
}

impl FormulaTable {
    pub fn new() -> FormulaTable {
        FormulaTable::default()
    }

    /// Adds the facts describing `f` and its subformulas; returns the name of `f`.
    pub fn add(&mut self, f: &Formula) -> Term {
        let name = f.name();
        if self.seen.contains(&name) {
            return name;
        }
        let fact = |pred: &str, args: Vec<Term>| Term::app(pred, args);
        let emit = |this: &mut FormulaTable, pred: &str, args: Vec<Term>| {
            this.facts.push(fact("formula", vec![name.clone()]));
            let mut all = vec![name.clone()];
            all.extend(args);
            this.facts.push(fact(pred, all));
        };
        match f {
            Formula::Lit(_) => {}
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
                let (na, nb) = (self.add(a), self.add(b));
                let pred = match f {
                    Formula::And(..) => "and",
                    Formula::Or(..) => "or",
                    _ => "until",
                };
                emit(self, pred, vec![na, nb]);
            }
            Formula::Not(a) | Formula::Next(a) | Formula::Always(a) | Formula::Eventually(a) => {
                let na = self.add(a);
                let pred = match f {
                    Formula::Not(_) => "negation",
                    Formula::Next(_) => "next",
                    Formula::Always(_) => "always",
                    _ => "eventually",
                };
                emit(self, pred, vec![na]);
            }
            Formula::Goal(a) => {
                if let Formula::Lit(l) = &**a {
                    if !self.goal_literals.contains(l) {
                        self.goal_literals.push(l.clone());
                    }
                }
            }
            Formula::Forall(..) | Formula::Exists(..) => {}
        }
        self.seen.insert(name.clone());
        name
    }

    /// Facts in emission order (children before parents).
    pub fn facts(&self) -> &[Term] {
        &self.facts
    }

    /// Literals `l` with `goal(l)` somewhere in the added formulas.
    pub fn goal_literals(&self) -> &[Literal] {
        &self.goal_literals
    }

    /// Names of every added compound formula, in emission order.
    pub fn compound_names(&self) -> impl Iterator<Item = &Term> {
        self.facts.iter().filter(|f| f.name() == Some("formula")).map(|f| &f.args()[0])
    }

    /// Facts with the given predicate.
    pub fn facts_of<'a>(&'a self, pred: &'a str) -> impl Iterator<Item = &'a Term> + 'a {
        self.facts.iter().filter(move |f| f.name() == Some(pred))
    }
}

/// Encodes one formula.
pub fn encode_formula(f: &Formula) -> FormulaTable {
    let mut t = FormulaTable::new();
    t.add(f);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn p(s: &str) -> Formula {
        corpus::parse_formula(s)
    }

    #[test]
    fn exists_expands_to_right_nested_or() {
        let f = p("exists(N, {0, 1}, on(N))").ground_quantifiers().unwrap();
        assert_eq!(f.to_string(), "or(on(0), on(1))");
        let f = p("forall(X, {a, b, c}, p(X))").ground_quantifiers().unwrap();
        assert_eq!(f.to_string(), "and(p(a), and(p(b), p(c)))");
        assert_eq!(p("forall(X, {a}, p(X))").ground_quantifiers().unwrap().to_string(), "p(a)");
        assert_eq!(p("f").ground_quantifiers().unwrap(), p("f"));
    }

    #[test]
    fn empty_quantifier_is_an_error() {
        let f = Formula::Forall(Arc::from("X"), vec![], Box::new(p("p(X)")));
        assert_eq!(f.ground_quantifiers(), Err(FormulaError::EmptyQuantifier("X".into())));
    }

    #[test]
    fn inner_quantifier_shadows() {
        let f = p("forall(X, {a}, and(p(X), exists(X, {b}, p(X))))").ground_quantifiers().unwrap();
        assert_eq!(f.to_string(), "and(p(a), p(b))");
    }

    #[test]
    fn eval_in_suitcase_s0() {
        let (d, g) = corpus::suitcase();
        let s0 = d.initial_state(&g).unwrap();
        assert!(p("and(up(l1), negation(up(l2)))").eval_state(&d, &s0).unwrap());
        assert!(!p("and(up(l1), up(l2))").eval_state(&d, &s0).unwrap());
        assert!(p("or(up(l2), negation(up(l2)))").eval_state(&d, &s0).unwrap());
        assert_eq!(p("next(up(l1))").eval_state(&d, &s0), Err(FormulaError::NotFluentFormula));
    }

    #[test]
    fn until_holds_when_right_side_arrives() {
        let (d, _) = corpus::toggle2();
        let s0 = d.state_from_literals(&[corpus::parse_literal("f"), corpus::parse_literal("-g")]).unwrap();
        let s1 = d.state_from_literals(&[corpus::parse_literal("-f"), corpus::parse_literal("g")]).unwrap();
        assert!(sat(&d, &[s0.clone(), s1.clone()], &p("until(f, g)"), None).unwrap());
        assert!(sat(&d, std::slice::from_ref(&s0), &p("eventually(f)"), None).unwrap());
        assert!(!sat(&d, &[s0.clone(), s1.clone()], &p("always(f)"), None).unwrap());
        // next at the last state looks at the last state again
        assert!(sat(&d, std::slice::from_ref(&s1), &p("next(g)"), None).unwrap());
        assert!(sat(&d, &[s0, s1], &p("next(next(g))"), None).unwrap());
    }

    #[test]
    fn goal_operator_needs_goal() {
        let (d, g) = corpus::suitcase();
        let s0 = d.initial_state(&g).unwrap();
        let f = p("goal(up(l1))");
        assert_eq!(sat(&d, std::slice::from_ref(&s0), &f, None), Err(FormulaError::MissingGoal));
        let goal: BTreeSet<Literal> = [corpus::parse_literal("up(l1)")].into();
        assert!(sat(&d, std::slice::from_ref(&s0), &f, Some(&goal)).unwrap());
        let bad = p("goal(and(up(l1), up(l2)))");
        assert!(matches!(sat(&d, &[s0], &bad, Some(&goal)), Err(FormulaError::GoalNotLiteral(_))));
    }

    #[test]
    fn encoding_matches_recursion() {
        let t = encode_formula(&p("and(f, and(g, h))"));
        let facts: Vec<String> = t.facts().iter().map(|f| f.to_string()).collect();
        assert_eq!(
            facts,
            vec!["formula(and(g,h))", "and(and(g,h),g,h)", "formula(and(f,and(g,h)))", "and(and(f,and(g,h)),f,and(g,h))"]
        );
        assert!(encode_formula(&p("f")).facts().is_empty());
        let facts: Vec<String> = encode_formula(&p("always(f)")).facts().iter().map(|f| f.to_string()).collect();
        assert_eq!(facts, vec!["formula(always(f))", "always(always(f),f)"]);
        let t = encode_formula(&p("negation(-f)"));
        assert_eq!(t.facts()[1].to_string(), "negation(negation(neg(f)),neg(f))");
    }

    #[test]
    fn shared_subformulas_share_names() {
        let f = p("and(or(f, g), next(or(f, g)))");
        let t = encode_formula(&f);
        assert_eq!(t.facts_of("or").count(), 1);
        assert_eq!(encode_formula(&f), t);
    }
}
