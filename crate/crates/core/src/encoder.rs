//! Ground logic programs for planning: the base encoding of a planning
//! problem, temporal constraints, procedural programs and HTN programs.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::action::{Domain, InitialState, Lit, LitSet, Literal, State};
use crate::formula::{Formula, FormulaError, FormulaTable};
use crate::ground::{Atom, GroundProgram, Head, Rule, RuleFamily};
use crate::program::{GeneralProgram, GroundKind, HtnNode, Node, NodeId, ProgramError, ProgramGraph};
use crate::syntax::Knowledge;
use crate::term::Term;

/// How action occurrences are generated.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum OccEncoding {
    /// `occ(A,T) <- ..., not nocc(A,T)` with `nocc` from the other actions.
    #[default]
    Rules,
    /// One `0 {occ(A,T) : action(A)} 1` rule per time step plus guards.
    Choice,
}

/// How HTN begin and end times are chosen.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum HtnChoice {
    /// `1 {begin(N,I,T3,T1,T2) : between(T3,T1,T2)} 1` choice rules.
    #[default]
    Cardinality,
    /// Normal rules with `nbegin` and `nend` atoms instead of choice heads.
    Normal,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct EncodeOptions {
    pub occ: OccEncoding,
    pub htn_choice: HtnChoice,
    /// Emit the until, next and HTN rules exactly in their textbook form,
    /// without the corrections this encoder applies by default.
    pub verbatim: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("unknown fluent in literal {0}")]
    UnknownFluent(String),
    #[error("the formula uses the goal operator but the problem has no goal")]
    GoalRequired,
    #[error("HTN constructs need the HTN encoding")]
    HtnNotAllowed,
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Program(#[from] ProgramError),
}

fn app(p: &str, args: Vec<Term>) -> Term {
    Term::app(p, args)
}

fn tm(t: usize) -> Term {
    Term::int(t as i64)
}

/// Name of the ground atom `holds(l,t)`.
pub fn holds_term(l: &Literal, t: usize) -> Term {
    app("holds", vec![l.to_term(), tm(t)])
}

/// Name of the ground atom `occ(a,t)`.
pub fn occ_term(a: &Term, t: usize) -> Term {
    app("occ", vec![a.clone(), tm(t)])
}

struct Enc<'a> {
    g: GroundProgram,
    d: &'a Domain,
    n: usize,
    opts: EncodeOptions,
}

impl<'a> Enc<'a> {
    fn new(d: &'a Domain, n: usize, opts: EncodeOptions) -> Enc<'a> {
        Enc { g: GroundProgram::new(), d, n, opts }
    }

    fn from(g: GroundProgram, d: &'a Domain, n: usize, opts: EncodeOptions) -> Enc<'a> {
        Enc { g, d, n, opts }
    }

    fn atoms(&mut self, ts: Vec<Term>) -> Vec<Atom> {
        ts.into_iter().map(|t| self.g.atom(t)).collect()
    }

    fn rule(&mut self, f: RuleFamily, head: Term, pos: Vec<Term>, neg: Vec<Term>) {
        let h = self.g.atom(head);
        let (pos, neg) = (self.atoms(pos), self.atoms(neg));
        self.g.add(Rule::normal(h, pos, neg), f);
    }

    fn constraint(&mut self, f: RuleFamily, pos: Vec<Term>, neg: Vec<Term>) {
        let (pos, neg) = (self.atoms(pos), self.atoms(neg));
        self.g.add(Rule::constraint(pos, neg), f);
    }

    fn choice(&mut self, f: RuleFamily, lower: u32, heads: Vec<Term>, pos: Vec<Term>) {
        let atoms = self.atoms(heads);
        let pos = self.atoms(pos);
        self.g.add(Rule { head: Head::Choice { lower, upper: 1, atoms }, pos, neg: vec![] }, f);
    }

    fn fact(&mut self, f: RuleFamily, t: Term) {
        self.g.fact(t, f);
    }

    fn lit_term(&self, l: Lit) -> Term {
        self.d.literal(l).to_term()
    }

    fn holds(&self, l: Lit, t: usize) -> Term {
        app("holds", vec![self.lit_term(l), tm(t)])
    }

    fn literals(&self) -> Vec<(Term, Term)> {
        let mut v = Vec::new();
        for f in 0..self.d.fluent_count() {
            let (p, q) = (Lit::new(f, true), Lit::new(f, false));
            v.push((self.lit_term(p), self.lit_term(q)));
            v.push((self.lit_term(q), self.lit_term(p)));
        }
        v
    }

    fn base(&mut self, gamma: &InitialState, goal: &[Literal]) -> Result<(), EncodeError> {
        use RuleFamily as F;
        let (d, n) = (self.d, self.n);
        let known = |l: &Literal| d.lit(l).map_err(|_| EncodeError::UnknownFluent(l.to_string()));
        for l in gamma.facts.iter().chain(goal) {
            known(l)?;
        }
        for t in 0..=n {
            self.fact(F::TimeFact, app("time", vec![tm(t)]));
        }
        for f in d.fluents() {
            self.fact(F::FluentFact, app("fluent", vec![f.clone()]));
        }
        for a in d.actions() {
            self.fact(F::ActionFact, app("action", vec![a.clone()]));
        }
        for fid in 0..d.fluent_count() {
            let f = app("fluent", vec![d.fluent(fid).clone()]);
            let (p, q) = (self.lit_term(Lit::new(fid, true)), self.lit_term(Lit::new(fid, false)));
            self.rule(F::LiteralDef, app("literal", vec![p.clone()]), vec![f.clone()], vec![]);
            self.rule(F::LiteralDef, app("literal", vec![q.clone()]), vec![f.clone()], vec![]);
            self.rule(F::ContraryDef, app("contrary", vec![p.clone(), q.clone()]), vec![f.clone()], vec![]);
            self.rule(F::ContraryDef, app("contrary", vec![q, p]), vec![f], vec![]);
        }
        for l in &gamma.facts {
            self.fact(F::Initial, holds_term(l, 0));
        }
        for t in 0..n {
            for e in d.executables() {
                let mut body = vec![app("time", vec![tm(t)])];
                body.extend(e.cond.iter().map(|&l| self.holds(l, t)));
                self.rule(F::Possible, app("possible", vec![d.action(e.action).clone(), tm(t)]), body, vec![]);
            }
            for law in d.dynamics() {
                let a = d.action(law.action).clone();
                let mut body =
                    vec![app("time", vec![tm(t)]), occ_term(&a, t), app("possible", vec![a.clone(), tm(t)])];
                body.extend(law.pre.iter().map(|&l| self.holds(l, t)));
                self.rule(F::Dynamic, self.holds(law.effect, t + 1), body, vec![]);
            }
        }
        for t in 0..=n {
            for law in d.statics() {
                let mut body = vec![app("time", vec![tm(t)])];
                body.extend(law.body.iter().map(|&l| self.holds(l, t)));
                self.rule(F::Static, self.holds(law.head, t), body, vec![]);
            }
        }
        for t in 0..n {
            let time = app("time", vec![tm(t)]);
            for a in d.actions() {
                let (occ, nocc) = (occ_term(a, t), app("nocc", vec![a.clone(), tm(t)]));
                let (act, possible) = (app("action", vec![a.clone()]), app("possible", vec![a.clone(), tm(t)]));
                if self.opts.occ == OccEncoding::Rules {
                    self.rule(
                        F::Occurrence,
                        occ.clone(),
                        vec![act.clone(), time.clone(), possible.clone()],
                        vec![nocc.clone()],
                    );
                } else {
                    self.constraint(F::OccChoiceGuard, vec![occ.clone()], vec![possible.clone()]);
                    self.constraint(F::OccChoiceGuard, vec![possible.clone()], vec![occ.clone(), nocc.clone()]);
                }
                for b in d.actions().iter().filter(|b| *b != a) {
                    let body = vec![act.clone(), app("action", vec![b.clone()]), time.clone(), occ_term(b, t)];
                    self.rule(F::NonOccurrence, nocc.clone(), body, vec![]);
                }
            }
            if self.opts.occ == OccEncoding::Choice {
                let heads = d.actions().iter().map(|a| occ_term(a, t)).collect();
                self.choice(F::OccChoice, 0, heads, vec![time.clone()]);
            }
        }
        for t in 0..n {
            for (l, g) in self.literals() {
                let body = vec![
                    app("literal", vec![l.clone()]),
                    app("literal", vec![g.clone()]),
                    app("time", vec![tm(t)]),
                    app("contrary", vec![l.clone(), g.clone()]),
                    app("holds", vec![l.clone(), tm(t)]),
                ];
                self.rule(F::Inertia, app("holds", vec![l, tm(t + 1)]), body, vec![app("holds", vec![g, tm(t + 1)])]);
            }
        }
        for t in 0..=n {
            for fid in 0..d.fluent_count() {
                let body = vec![
                    app("fluent", vec![d.fluent(fid).clone()]),
                    self.holds(Lit::new(fid, true), t),
                    self.holds(Lit::new(fid, false), t),
                ];
                self.constraint(F::Consistency, body, vec![]);
            }
        }
        let body = goal.iter().map(|l| holds_term(l, n)).collect();
        self.rule(F::Goal, Term::sym("goal"), body, vec![]);
        self.constraint(F::GoalConstraint, vec![], vec![Term::sym("goal")]);
        Ok(())
    }

    /// Rules evaluating every formula in `table` at every time point.
    fn formulas(&mut self, table: &FormulaTable, goal: Option<&[Literal]>) -> Result<(), EncodeError> {
        use RuleFamily as F;
        let n = self.n;
        for f in table.facts() {
            self.fact(F::FormulaFact, f.clone());
        }
        for (l, _) in self.literals() {
            self.rule(F::FormulaLiteral, app("formula", vec![l.clone()]), vec![app("literal", vec![l.clone()])], vec![]);
            for t in 0..=n {
                let body = vec![app("literal", vec![l.clone()]), app("holds", vec![l.clone(), tm(t)])];
                self.rule(F::HfLiteral, app("hf", vec![l.clone(), tm(t)]), body, vec![]);
            }
        }
        let hf = |x: &Term, t: usize| app("hf", vec![x.clone(), tm(t)]);
        let during = |x: &Term, a: usize, b: usize| app("hf_during", vec![x.clone(), tm(a), tm(b)]);
        let mut during_args: BTreeSet<Term> = BTreeSet::new();
        for fact in table.facts() {
            let Some(pred) = fact.name() else { continue };
            if pred == "formula" {
                continue;
            }
            let args = fact.args();
            let nm = &args[0];
            let form = app("formula", vec![nm.clone()]);
            for t in 0..=n {
                let head = hf(nm, t);
                match pred {
                    "and" => {
                        let body = vec![form.clone(), fact.clone(), hf(&args[1], t), hf(&args[2], t)];
                        self.rule(F::HfAnd, head, body, vec![]);
                    }
                    "or" => {
                        for k in [1, 2] {
                            self.rule(F::HfOr, head.clone(), vec![form.clone(), fact.clone(), hf(&args[k], t)], vec![]);
                        }
                    }
                    "negation" => {
                        self.rule(F::HfNegation, head, vec![form.clone(), fact.clone()], vec![hf(&args[1], t)]);
                    }
                    "until" => {
                        during_args.insert(args[1].clone());
                        if self.opts.verbatim {
                            for t2 in t..=n {
                                let body = vec![form.clone(), fact.clone(), during(&args[1], t, t2), hf(&args[2], t2)];
                                self.rule(F::HfUntil, head.clone(), body, vec![]);
                            }
                        } else {
                            self.rule(F::HfUntil, head.clone(), vec![form.clone(), fact.clone(), hf(&args[2], t)], vec![]);
                            for t2 in t + 1..=n {
                                let body =
                                    vec![form.clone(), fact.clone(), during(&args[1], t, t2 - 1), hf(&args[2], t2)];
                                self.rule(F::HfUntil, head.clone(), body, vec![]);
                            }
                        }
                    }
                    "always" => {
                        during_args.insert(args[1].clone());
                        self.rule(F::HfAlways, head, vec![form.clone(), fact.clone(), during(&args[1], t, n)], vec![]);
                    }
                    "eventually" => {
                        for t2 in t..=n {
                            let body = vec![form.clone(), fact.clone(), hf(&args[1], t2)];
                            self.rule(F::HfEventually, head.clone(), body, vec![]);
                        }
                    }
                    "next" => {
                        if t < n {
                            self.rule(F::HfNext, head, vec![form.clone(), fact.clone(), hf(&args[1], t + 1)], vec![]);
                        } else if !self.opts.verbatim {
                            self.rule(F::HfNext, head, vec![form.clone(), fact.clone(), hf(&args[1], t)], vec![]);
                        }
                    }
                    _ => {}
                }
            }
        }
        for x in &during_args {
            for t in 0..=n {
                self.rule(F::HfDuring, during(x, t, t), vec![hf(x, t)], vec![]);
                for t2 in t + 1..=n {
                    self.rule(F::HfDuring, during(x, t, t2), vec![hf(x, t), during(x, t + 1, t2)], vec![]);
                }
            }
        }
        if !table.goal_literals().is_empty() {
            let goal = goal.ok_or(EncodeError::GoalRequired)?;
            for l in table.goal_literals() {
                let nm = app("goal", vec![l.to_term()]);
                self.fact(F::FormulaFact, app("formula", vec![nm.clone()]));
                if goal.contains(l) {
                    for t in 0..=n {
                        self.rule(F::HfGoal, hf(&nm, t), vec![app("time", vec![tm(t)])], vec![]);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Grounds quantifiers and checks fluents and goal usage.
fn prepare_formula(d: &Domain, phi: &Formula) -> Result<Formula, EncodeError> {
    let f = phi.ground_quantifiers()?;
    f.check_goal_usage()?;
    for l in f.literals() {
        d.lit(&l).map_err(|_| EncodeError::UnknownFluent(l.to_string()))?;
    }
    Ok(f)
}

/// The base program for `(D, Γ, Δ)` and horizon `n`.
pub fn encode_base(
    d: &Domain,
    gamma: &InitialState,
    goal: &[Literal],
    n: usize,
    opts: EncodeOptions,
) -> Result<GroundProgram, EncodeError> {
    let mut e = Enc::new(d, n, opts);
    e.base(gamma, goal)?;
    Ok(e.g)
}

/// Adds the rules for the temporal constraint `phi` to `base`.
pub fn encode_temporal(
    base: GroundProgram,
    d: &Domain,
    phi: &Formula,
    goal: &[Literal],
    n: usize,
    opts: EncodeOptions,
) -> Result<GroundProgram, EncodeError> {
    let f = prepare_formula(d, phi)?;
    let mut table = FormulaTable::new();
    let name = table.add(&f);
    let mut e = Enc::from(base, d, n, opts);
    e.formulas(&table, (!goal.is_empty()).then_some(goal))?;
    e.constraint(RuleFamily::TemporalConstraint, vec![], vec![app("hf", vec![name, tm(0)])]);
    Ok(e.g)
}

/// The formula-evaluation program over a fixed state sequence: holds facts
/// for every state, the formula facts and the hf rules, without constraints.
/// Returns the program and the name of every added formula.
pub fn formula_program(
    d: &Domain,
    states: &[State],
    formulas: &[Formula],
    goal: Option<&[Literal]>,
    opts: EncodeOptions,
) -> Result<(GroundProgram, Vec<Term>), EncodeError> {
    let n = states.len().saturating_sub(1);
    let mut e = Enc::new(d, n, opts);
    for t in 0..=n {
        e.fact(RuleFamily::TimeFact, app("time", vec![tm(t)]));
    }
    for fid in 0..d.fluent_count() {
        let f = app("fluent", vec![d.fluent(fid).clone()]);
        e.fact(RuleFamily::FluentFact, f.clone());
        for pos in [true, false] {
            let l = e.lit_term(Lit::new(fid, pos));
            e.rule(RuleFamily::LiteralDef, app("literal", vec![l]), vec![f.clone()], vec![]);
        }
    }
    for (t, s) in states.iter().enumerate() {
        for l in s.lits() {
            let h = e.holds(l, t);
            e.fact(RuleFamily::Input, h);
        }
    }
    let mut table = FormulaTable::new();
    let mut names = Vec::new();
    for f in formulas {
        let f = prepare_formula(d, f)?;
        names.push(table.add(&f));
    }
    e.formulas(&table, goal)?;
    Ok((e.g, names))
}

/// The program whose answer sets are the closure of `y` under the static
/// laws of `d`: one rule per law, a fact per literal of `y` and the
/// consistency constraints, all at time `k`.
pub fn closure_program(d: &Domain, y: &LitSet, k: usize) -> GroundProgram {
    let mut e = Enc::new(d, k, EncodeOptions::default());
    for law in d.statics() {
        let body = law.body.iter().map(|&l| e.holds(l, k)).collect();
        let h = e.holds(law.head, k);
        e.rule(RuleFamily::Closure, h, body, vec![]);
    }
    for l in y.iter() {
        let h = e.holds(l, k);
        e.fact(RuleFamily::Closure, h);
    }
    for fid in 0..d.fluent_count() {
        let f = app("fluent", vec![d.fluent(fid).clone()]);
        e.fact(RuleFamily::FluentFact, f.clone());
        let body = vec![f, e.holds(Lit::new(fid, true), k), e.holds(Lit::new(fid, false), k)];
        e.constraint(RuleFamily::Consistency, body, vec![]);
    }
    e.g
}

/// Possible trace lengths of a node: minimum and optional maximum.
fn length_ranges(graph: &ProgramGraph) -> Vec<(usize, Option<usize>)> {
    fn go(graph: &ProgramGraph, id: NodeId, memo: &mut HashMap<NodeId, (usize, Option<usize>)>) -> (usize, Option<usize>) {
        if let Some(&r) = memo.get(&id) {
            return r;
        }
        let add = |a: (usize, Option<usize>), b: (usize, Option<usize>)| (a.0 + b.0, a.1.zip(b.1).map(|(x, y)| x + y));
        let join = |rs: Vec<(usize, Option<usize>)>| {
            let lo = rs.iter().map(|r| r.0).min().unwrap_or(0);
            let hi = rs.iter().try_fold(0, |m, r| r.1.map(|h| m.max(h)));
            (lo, hi)
        };
        let r = match graph.node(id) {
            Node::Action(_) => (1, Some(1)),
            Node::Test(_) | Node::Null => (0, Some(0)),
            &Node::Seq(a, b) => {
                let (x, y) = (go(graph, a, memo), go(graph, b, memo));
                add(x, y)
            }
            Node::Choice(cs) | Node::Pick(cs) => {
                let rs = cs.iter().map(|&c| go(graph, c, memo)).collect();
                join(rs)
            }
            &Node::If(_, a, b) => {
                let rs = vec![go(graph, a, memo), go(graph, b, memo)];
                join(rs)
            }
            Node::While(..) => (0, None),
            Node::Htn(h) => {
                let mut acc = (0, Some(0));
                for &t in &h.tasks {
                    acc = add(acc, go(graph, t, memo));
                }
                acc
            }
        };
        memo.insert(id, r);
        r
    }
    let mut memo = HashMap::new();
    graph.ids().map(|id| go(graph, id, &mut memo)).collect()
}

struct ProgramEnc<'g> {
    graph: &'g ProgramGraph,
    lens: Vec<(usize, Option<usize>)>,
}

impl ProgramEnc<'_> {
    fn fits(&self, id: NodeId, t1: usize, t2: usize) -> bool {
        let (lo, hi) = self.lens[id];
        t2 >= t1 && t2 - t1 >= lo && hi.is_none_or(|h| t2 - t1 <= h)
    }

    fn trans(&self, id: NodeId, t1: usize, t2: usize) -> Term {
        app("trans", vec![self.graph.name(id).clone(), tm(t1), tm(t2)])
    }
}

fn trans_t(x: &Term, t1: usize, t2: usize) -> Term {
    app("trans", vec![x.clone(), tm(t1), tm(t2)])
}

fn add_program(e: &mut Enc, graph: &ProgramGraph) -> Result<(), EncodeError> {
    use RuleFamily as F;
    let n = e.n;
    let mut table = FormulaTable::new();
    for f in graph.formulas() {
        table.add(f);
    }
    e.formulas(&table, None)?;
    let pe = ProgramEnc { graph, lens: length_ranges(graph) };
    let hf = |x: &Term, t: usize| app("hf", vec![x.clone(), tm(t)]);
    for t in 0..n {
        for a in e.d.actions() {
            let body = vec![app("action", vec![a.clone()]), occ_term(a, t)];
            e.rule(F::TransAction, trans_t(a, t, t + 1), body, vec![]);
        }
    }
    for f in graph.formulas() {
        let nm = f.name();
        for t in 0..=n {
            e.rule(F::TransFormula, trans_t(&nm, t, t), vec![app("formula", vec![nm.clone()]), hf(&nm, t)], vec![]);
        }
    }
    for t in 0..=n {
        e.fact(F::TransNull, trans_t(&Term::sym("null"), t, t));
    }
    let intervals: Vec<(usize, usize)> = (0..=n).flat_map(|a| (a..=n).map(move |b| (a, b))).collect();
    for id in graph.ids() {
        let nm = graph.name(id).clone();
        let name = |x: NodeId| graph.name(x).clone();
        match graph.node(id) {
            Node::Action(_) | Node::Test(_) | Node::Null => {}
            &Node::Seq(a, b) => {
                let fact = app("sequence", vec![nm.clone(), name(a), name(b)]);
                e.fact(F::ProgramFact, fact.clone());
                for &(t1, t2) in &intervals {
                    if !pe.fits(id, t1, t2) {
                        continue;
                    }
                    for tp in t1..=t2 {
                        if pe.fits(a, t1, tp) && pe.fits(b, tp, t2) {
                            let body = vec![fact.clone(), pe.trans(a, t1, tp), pe.trans(b, tp, t2)];
                            e.rule(F::TransSequence, pe.trans(id, t1, t2), body, vec![]);
                        }
                    }
                }
            }
            Node::Choice(cs) => {
                let ca = app("choiceAction", vec![nm.clone()]);
                e.fact(F::ProgramFact, ca.clone());
                for &c in cs {
                    let inf = app("in", vec![name(c), nm.clone()]);
                    e.fact(F::ProgramFact, inf.clone());
                    for &(t1, t2) in &intervals {
                        if pe.fits(c, t1, t2) {
                            let body = vec![ca.clone(), inf.clone(), pe.trans(c, t1, t2)];
                            e.rule(F::TransChoice, pe.trans(id, t1, t2), body, vec![]);
                        }
                    }
                }
            }
            &Node::If(f, a, b) => {
                let fname = graph.formula(f).name();
                let fact = app("if", vec![nm.clone(), fname.clone(), name(a), name(b)]);
                e.fact(F::ProgramFact, fact.clone());
                for &(t1, t2) in &intervals {
                    if pe.fits(a, t1, t2) {
                        let body = vec![fact.clone(), hf(&fname, t1), pe.trans(a, t1, t2)];
                        e.rule(F::TransIfTrue, pe.trans(id, t1, t2), body, vec![]);
                    }
                    if pe.fits(b, t1, t2) {
                        let body = vec![fact.clone(), pe.trans(b, t1, t2)];
                        e.rule(F::TransIfFalse, pe.trans(id, t1, t2), body, vec![hf(&fname, t1)]);
                    }
                }
            }
            &Node::While(f, p) => {
                let fname = graph.formula(f).name();
                let fact = app("while", vec![nm.clone(), fname.clone(), name(p)]);
                e.fact(F::ProgramFact, fact.clone());
                for &(t1, t2) in &intervals {
                    for tp in t1 + 1..=t2 {
                        if pe.fits(p, t1, tp) {
                            let body = vec![fact.clone(), hf(&fname, t1), pe.trans(p, t1, tp), pe.trans(id, tp, t2)];
                            e.rule(F::TransWhileTrue, pe.trans(id, t1, t2), body, vec![]);
                        }
                    }
                }
                for t in 0..=n {
                    e.rule(F::TransWhileFalse, pe.trans(id, t, t), vec![fact.clone()], vec![hf(&fname, t)]);
                }
            }
            Node::Pick(cs) => {
                for &c in cs {
                    let fact = app("choiceArgs", vec![nm.clone(), name(c)]);
                    e.fact(F::ProgramFact, fact.clone());
                    for &(t1, t2) in &intervals {
                        if pe.fits(c, t1, t2) {
                            e.rule(F::TransPick, pe.trans(id, t1, t2), vec![fact.clone(), pe.trans(c, t1, t2)], vec![]);
                        }
                    }
                }
            }
            Node::Htn(h) => add_htn(e, &pe, id, h, &intervals),
        }
    }
    let root = graph.root();
    e.constraint(F::TraceConstraint, vec![], vec![pe.trans(root, 0, n)]);
    Ok(())
}

fn add_htn(e: &mut Enc, pe: &ProgramEnc, id: NodeId, h: &HtnNode, intervals: &[(usize, usize)]) {
    use RuleFamily as F;
    let graph = pe.graph;
    let nm = graph.name(id).clone();
    let verbatim = e.opts.verbatim;
    let s = app("tasks", vec![nm.clone()]);
    let c = app("constraints", vec![nm.clone()]);
    let htn = app("htn", vec![nm.clone(), s.clone(), c.clone()]);
    e.fact(F::ProgramFact, htn.clone());
    e.fact(F::ProgramFact, app("set", vec![s.clone()]));
    e.fact(F::ProgramFact, app("set", vec![c.clone()]));
    // Task terms; a program listed twice gets distinct copies.
    let mut task_terms: Vec<Term> = Vec::new();
    for (k, &t) in h.tasks.iter().enumerate() {
        let tn = graph.name(t).clone();
        let dup = h.tasks.iter().filter(|&&x| x == t).count() > 1;
        let term = if dup { app("copy", vec![tm(k), tn.clone()]) } else { tn.clone() };
        if dup {
            let ca = app("choiceAction", vec![term.clone()]);
            let inf = app("in", vec![tn.clone(), term.clone()]);
            e.fact(F::ProgramFact, ca.clone());
            e.fact(F::ProgramFact, inf.clone());
            for &(t1, t2) in intervals {
                if pe.fits(t, t1, t2) {
                    let body = vec![ca.clone(), inf.clone(), pe.trans(t, t1, t2)];
                    e.rule(F::TransChoice, trans_t(&term, t1, t2), body, vec![]);
                }
            }
        }
        e.fact(F::ProgramFact, app("in", vec![term.clone(), s.clone()]));
        task_terms.push(term);
    }
    let hf = |x: &Term, t: usize| app("hf", vec![x.clone(), tm(t)]);
    let mut cons: Vec<(Term, GroundKind)> = Vec::new();
    for gc in &h.constraints {
        let fact = match &gc.kind {
            GroundKind::Order(a, b) => app("order", vec![gc.name.clone(), task_terms[*a].clone(), task_terms[*b].clone()]),
            GroundKind::Pre(f, i) => {
                app("precondition", vec![gc.name.clone(), graph.formula(*f).name(), task_terms[*i].clone()])
            }
            GroundKind::Post(i, f) => {
                app("postcondition", vec![gc.name.clone(), graph.formula(*f).name(), task_terms[*i].clone()])
            }
            GroundKind::Maintain(a, f, b) => app(
                "maintain",
                vec![gc.name.clone(), graph.formula(*f).name(), task_terms[*a].clone(), task_terms[*b].clone()],
            ),
        };
        e.fact(F::ProgramFact, app("in", vec![gc.name.clone(), c.clone()]));
        e.fact(F::ProgramFact, fact.clone());
        cons.push((fact, gc.kind.clone()));
    }
    let cyclic = !verbatim && has_cycle(h.tasks.len(), &h.order);
    let k = h.tasks.len();
    for &(t1, t2) in intervals {
        if !pe.fits(id, t1, t2) {
            continue;
        }
        let (a1, a2) = (tm(t1), tm(t2));
        let nok = app("nok", vec![nm.clone(), a1.clone(), a2.clone()]);
        let trans = pe.trans(id, t1, t2);
        for t3 in t1..=t2 {
            e.fact(F::Between, app("between", vec![tm(t3), a1.clone(), a2.clone()]));
        }
        e.rule(F::TransHtn, trans.clone(), vec![htn.clone()], vec![nok.clone()]);
        if cyclic {
            e.rule(F::NokOrder, nok.clone(), vec![htn.clone()], vec![]);
        }
        let begin = |i: usize, b: usize| app("begin", vec![nm.clone(), task_terms[i].clone(), tm(b), tm(t1), tm(t2)]);
        let end = |i: usize, b: usize| app("end", vec![nm.clone(), task_terms[i].clone(), tm(b), tm(t1), tm(t2)]);
        let inn = |i: usize| app("in", vec![task_terms[i].clone(), s.clone()]);
        let time_at = |p: &str, t: usize| app(p, vec![nm.clone(), tm(t), tm(t1), tm(t2)]);
        for i in 0..k {
            let body = vec![htn.clone(), inn(i), trans.clone()];
            match e.opts.htn_choice {
                HtnChoice::Cardinality => {
                    let heads = (t1..=t2).map(|t| begin(i, t)).collect();
                    e.choice(F::HtnBegin, 1, heads, body.clone());
                    let heads = (t1..=t2).map(|t| end(i, t)).collect();
                    e.choice(F::HtnEnd, 1, heads, body.clone());
                }
                HtnChoice::Normal => {
                    let kinds: [(&str, &dyn Fn(usize, usize) -> Term); 2] = [("nbegin", &begin), ("nend", &end)];
                    for (npred, mk) in kinds {
                        for t in t1..=t2 {
                            let neg_atom = app(npred, vec![nm.clone(), task_terms[i].clone(), tm(t), tm(t1), tm(t2)]);
                            e.rule(F::HtnChoiceNormal, mk(i, t), vec![trans.clone()], vec![neg_atom.clone()]);
                            for t3 in (t1..=t2).filter(|&x| x != t) {
                                e.rule(F::HtnChoiceNormal, neg_atom.clone(), vec![trans.clone(), mk(i, t3)], vec![]);
                            }
                        }
                    }
                }
            }
            for b in t1..=t2 {
                for en in t1..=t2 {
                    let pair = vec![htn.clone(), inn(i), begin(i, b), end(i, en)];
                    if b > en {
                        e.rule(F::NokEndBeforeBegin, nok.clone(), pair, vec![]);
                        continue;
                    }
                    let tt = trans_t(&task_terms[i], b, en);
                    e.rule(F::NokNotTrace, nok.clone(), pair.clone(), vec![tt]);
                    for t in b..=en {
                        e.rule(F::HtnUsed, time_at("used", t), pair.clone(), vec![]);
                    }
                    if !verbatim {
                        for t in b..en {
                            e.rule(F::HtnUsed, time_at("step_used", t), pair.clone(), vec![]);
                        }
                    }
                }
            }
        }
        for t in t1..=t2 {
            e.rule(F::HtnNotUsed, time_at("not_used", t), vec![], vec![time_at("used", t)]);
            e.rule(F::NokUnused, nok.clone(), vec![htn.clone(), time_at("not_used", t)], vec![]);
            e.rule(F::NokOverlap, nok.clone(), vec![htn.clone(), time_at("overlap", t)], vec![]);
            if !verbatim && t < t2 {
                e.rule(F::NokUnused, nok.clone(), vec![htn.clone()], vec![time_at("step_used", t)]);
            }
        }
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                for b1 in t1..=t2 {
                    for e1 in b1..=t2 {
                        for b2 in t1..=t2 {
                            for e2 in b2..=t2 {
                                let body = vec![
                                    htn.clone(),
                                    inn(i),
                                    begin(i, b1),
                                    end(i, e1),
                                    inn(j),
                                    begin(j, b2),
                                    end(j, e2),
                                ];
                                for t in (b1 + 1).max(b2 + 1)..=e1.min(e2) {
                                    e.rule(F::HtnOverlap, time_at("overlap", t), body.clone(), vec![]);
                                }
                                if !verbatim && b2 == e2 && b1 < b2 && b2 < e1 {
                                    e.rule(F::NokZeroInside, nok.clone(), body, vec![]);
                                }
                            }
                        }
                    }
                }
            }
        }
        let in_c = |f: &Term| app("in", vec![f.args()[0].clone(), c.clone()]);
        for (fact, kind) in &cons {
            match kind {
                &GroundKind::Order(i, j) | &GroundKind::Maintain(i, _, j) => {
                    let is_order = matches!(kind, GroundKind::Order(..));
                    if is_order || !verbatim {
                        for x in t1..=t2 {
                            for y in t1..=t2 {
                                let (pi, violated) = if verbatim {
                                    (begin(i, x), x > y)
                                } else {
                                    (end(i, x), x > y)
                                };
                                if violated {
                                    let body =
                                        vec![htn.clone(), inn(i), pi, inn(j), begin(j, y), in_c(fact), fact.clone()];
                                    e.rule(F::NokOrder, nok.clone(), body, vec![]);
                                }
                            }
                        }
                    }
                    if let GroundKind::Maintain(_, f, _) = kind {
                        let fname = graph.formula(*f).name();
                        for e1 in t1..=t2 {
                            for b2 in t1..=t2 {
                                let range: Vec<usize> =
                                    if verbatim { (e1 + 1..b2).collect() } else { (e1..=b2).collect() };
                                for t3 in range {
                                    let body =
                                        vec![htn.clone(), inn(i), end(i, e1), inn(j), begin(j, b2), in_c(fact), fact.clone()];
                                    e.rule(F::NokMaintain, nok.clone(), body, vec![hf(&fname, t3)]);
                                }
                            }
                        }
                    }
                }
                &GroundKind::Pre(f, i) => {
                    let fname = graph.formula(f).name();
                    for b in t1..=t2 {
                        let body = vec![htn.clone(), inn(i), begin(i, b), in_c(fact), fact.clone()];
                        e.rule(F::NokPrecondition, nok.clone(), body, vec![hf(&fname, b)]);
                    }
                }
                &GroundKind::Post(i, f) => {
                    let fname = graph.formula(f).name();
                    for en in t1..=t2 {
                        let body = vec![htn.clone(), inn(i), end(i, en), in_c(fact), fact.clone()];
                        e.rule(F::NokPostcondition, nok.clone(), body, vec![hf(&fname, en)]);
                    }
                }
            }
        }
    }
}

fn has_cycle(k: usize, order: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0usize; k];
    for &(_, b) in order {
        indeg[b] += 1;
    }
    let mut ready: Vec<usize> = (0..k).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(x) = ready.pop() {
        seen += 1;
        for &(a, b) in order {
            if a == x {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.push(b);
                }
            }
        }
    }
    seen < k
}

/// Adds the program rules to `base` and replaces the goal constraint with the
/// trace constraint. The goal constraint stays when the goal is nonempty.
pub fn encode_golog(
    base: GroundProgram,
    d: &Domain,
    graph: &ProgramGraph,
    goal: &[Literal],
    n: usize,
    opts: EncodeOptions,
) -> Result<GroundProgram, EncodeError> {
    if graph.has_htn() {
        return Err(EncodeError::HtnNotAllowed);
    }
    encode_program(base, d, graph, goal, n, opts)
}

/// Like `encode_golog`, also accepting HTN nodes.
pub fn encode_htn(
    base: GroundProgram,
    d: &Domain,
    graph: &ProgramGraph,
    goal: &[Literal],
    n: usize,
    opts: EncodeOptions,
) -> Result<GroundProgram, EncodeError> {
    encode_program(base, d, graph, goal, n, opts)
}

fn encode_program(
    mut base: GroundProgram,
    d: &Domain,
    graph: &ProgramGraph,
    goal: &[Literal],
    n: usize,
    opts: EncodeOptions,
) -> Result<GroundProgram, EncodeError> {
    if goal.is_empty() {
        base.remove_family(RuleFamily::GoalConstraint);
    }
    let mut e = Enc::from(base, d, n, opts);
    add_program(&mut e, graph)?;
    Ok(e.g)
}

/// The full program for a problem with any kind of control knowledge.
pub fn encode_problem(
    d: &Domain,
    gamma: &InitialState,
    goal: &[Literal],
    n: usize,
    knowledge: &Knowledge,
    opts: EncodeOptions,
) -> Result<GroundProgram, EncodeError> {
    let base = encode_base(d, gamma, goal, n, opts)?;
    match knowledge {
        Knowledge::None => Ok(base),
        Knowledge::Temporal(phi) => encode_temporal(base, d, phi, goal, n, opts),
        Knowledge::Program(p) => {
            let graph = ProgramGraph::build(d, p)?;
            encode_htn(base, d, &graph, goal, n, opts)
        }
    }
}

/// Builds the program graph of `p`, for callers that encode it themselves.
pub fn program_graph(d: &Domain, p: &GeneralProgram) -> Result<ProgramGraph, EncodeError> {
    Ok(ProgramGraph::build(d, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::solver::{enumerate, is_answer_set, SolveConfig};

    fn has_rule(g: &GroundProgram, text: &str) -> bool {
        g.rules().iter().any(|r| g.show_rule(r) == text)
    }

    #[test]
    fn base_facts_and_rules() {
        let (d, gamma) = corpus::suitcase();
        let goal = [corpus::parse_literal("-locked(s)")];
        let g = encode_base(&d, &gamma, &goal, 1, EncodeOptions::default()).unwrap();
        assert!(has_rule(&g, "holds(up(l1),0)."));
        assert!(has_rule(&g, "holds(up(l1),1) :- occ(open(l1),0), possible(open(l1),0), time(0)."));
        assert!(has_rule(&g, "goal :- holds(neg(locked(s)),1)."));
        assert!(has_rule(&g, ":- not goal."));
    }

    #[test]
    fn horizon_zero_goal() {
        let (d, gamma) = corpus::suitcase();
        let goal = [corpus::parse_literal("up(l1)")];
        let g = encode_base(&d, &gamma, &goal, 0, EncodeOptions::default()).unwrap();
        assert!(has_rule(&g, "goal :- holds(up(l1),0)."));
        assert!(!g.rules().iter().any(|r| g.show_rule(r).starts_with("occ(")));
        assert_eq!(enumerate(&g, &SolveConfig::default()).unwrap().len(), 1);
    }

    #[test]
    fn unknown_goal_fluent_is_rejected() {
        let (d, gamma) = corpus::toggle();
        let goal = [corpus::parse_literal("zzz")];
        assert!(matches!(
            encode_base(&d, &gamma, &goal, 1, EncodeOptions::default()),
            Err(EncodeError::UnknownFluent(_))
        ));
    }

    #[test]
    fn always_rule_shape() {
        let (d, gamma) = corpus::toggle();
        let base = encode_base(&d, &gamma, &[], 1, EncodeOptions::default()).unwrap();
        let phi = corpus::parse_formula("always(f)");
        let g = encode_temporal(base, &d, &phi, &[], 1, EncodeOptions::default()).unwrap();
        assert!(has_rule(&g, "hf(always(f),0) :- always(always(f),f), formula(always(f)), hf_during(f,0,1)."));
        assert!(has_rule(&g, ":- not hf(always(f),0)."));
    }

    #[test]
    fn literal_constraint_only_needs_literal_rules() {
        let (d, gamma) = corpus::toggle();
        let base = encode_base(&d, &gamma, &[], 1, EncodeOptions::default()).unwrap();
        let phi = corpus::parse_formula("f");
        let g = encode_temporal(base, &d, &phi, &[], 1, EncodeOptions::default()).unwrap();
        assert!(has_rule(&g, ":- not hf(f,0)."));
        assert!(!g.family_counts().contains_key(&RuleFamily::HfAnd));
    }

    #[test]
    fn goal_operator() {
        let prob = corpus::blocks();
        let (d, gamma) = (&prob.domain, &prob.initial);
        let goal = [corpus::parse_literal("on(a,tbl)")];
        let base = encode_base(d, gamma, &goal, 1, EncodeOptions::default()).unwrap();
        let phi = corpus::parse_formula("goal(on(a,tbl))");
        let g = encode_temporal(base, d, &phi, &goal, 1, EncodeOptions::default()).unwrap();
        assert!(has_rule(&g, "hf(goal(on(a,tbl)),0) :- time(0)."));
        assert!(has_rule(&g, "formula(goal(on(a,tbl)))."));
        let base2 = encode_base(d, gamma, &[], 1, EncodeOptions::default()).unwrap();
        assert_eq!(encode_temporal(base2, d, &phi, &[], 1, EncodeOptions::default()), Err(EncodeError::GoalRequired));
    }

    #[test]
    fn closure_program_matches_closure() {
        let (d, _) = corpus::suitcase();
        let y = LitSet::from_lits(
            d.fluent_count(),
            [d.lit(&corpus::parse_literal("up(l1)")).unwrap(), d.lit(&corpus::parse_literal("up(l2)")).unwrap()],
        );
        let g = closure_program(&d, &y, 0);
        let ms = enumerate(&g, &SolveConfig::default()).unwrap();
        assert_eq!(ms.len(), 1);
        assert!(ms[0].show(&g).contains(&"holds(neg(locked(s)),0)".to_string()));
    }

    #[test]
    fn golog_single_action_and_null() {
        let prog = |main: &str| {
            let prob = crate::syntax::parse_problem(&format!("{}main {main}.\n", corpus::TOGGLE)).unwrap();
            let Knowledge::Program(p) = prob.knowledge else { panic!() };
            (prob.domain, prob.initial, p)
        };
        let (d, gamma, p) = prog("a");
        let graph = ProgramGraph::build(&d, &p).unwrap();
        let base = encode_base(&d, &gamma, &[], 1, EncodeOptions::default()).unwrap();
        let g = encode_golog(base, &d, &graph, &[], 1, EncodeOptions::default()).unwrap();
        assert!(has_rule(&g, ":- not trans(a,0,1)."));
        assert!(has_rule(&g, "trans(a,0,1) :- action(a), occ(a,0)."));
        assert!(!has_rule(&g, ":- not goal."));
        assert_eq!(enumerate(&g, &SolveConfig::default()).unwrap().len(), 1);

        let (d, gamma, p) = prog("null");
        let graph = ProgramGraph::build(&d, &p).unwrap();
        let base = encode_base(&d, &gamma, &[], 0, EncodeOptions::default()).unwrap();
        let g = encode_golog(base, &d, &graph, &[], 0, EncodeOptions::default()).unwrap();
        assert!(has_rule(&g, "trans(null,0,0)."));
        let ms = enumerate(&g, &SolveConfig::default()).unwrap();
        assert_eq!(ms.len(), 1);
        assert!(is_answer_set(&g, &ms[0].to_set()));
    }

    #[test]
    fn blocks_htn_facts() {
        let prob = corpus::blocks();
        let Knowledge::Program(p) = &prob.knowledge else { panic!() };
        let graph = ProgramGraph::build(&prob.domain, p).unwrap();
        let base = encode_base(&prob.domain, &prob.initial, &prob.goal, 2, EncodeOptions::default()).unwrap();
        let g = encode_htn(base, &prob.domain, &graph, &prob.goal, 2, EncodeOptions::default()).unwrap();
        assert!(has_rule(&g, "order(o,move(b,c),move(a,b))."));
        assert!(has_rule(&g, "precondition(f1,clear(b),move(b,c))."));
        assert!(matches!(
            encode_golog(
                encode_base(&prob.domain, &prob.initial, &prob.goal, 2, EncodeOptions::default()).unwrap(),
                &prob.domain,
                &graph,
                &prob.goal,
                2,
                EncodeOptions::default()
            ),
            Err(EncodeError::HtnNotAllowed)
        ));
    }

    #[test]
    fn verbatim_order_rule_uses_begins() {
        let prob = corpus::blocks();
        let Knowledge::Program(p) = &prob.knowledge else { panic!() };
        let graph = ProgramGraph::build(&prob.domain, p).unwrap();
        let opts = EncodeOptions { verbatim: true, ..EncodeOptions::default() };
        let base = encode_base(&prob.domain, &prob.initial, &prob.goal, 2, opts).unwrap();
        let g = encode_htn(base, &prob.domain, &graph, &prob.goal, 2, opts).unwrap();
        let text = g.to_text();
        assert!(text.contains(
            "nok(p,0,2) :- begin(p,move(a,b),0,0,2), begin(p,move(b,c),1,0,2), htn(p,tasks(p),constraints(p))"
        ));
        assert!(!text.contains("step_used"));
    }
}
