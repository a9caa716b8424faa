//! Procedural and HTN control knowledge: complex actions, procedure tables,
//! grounding, `prim`, coherence, and trace checking.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::action::{ActionId, Domain, State, Trajectory};
use crate::formula::{Formula, FormulaError};
use crate::term::Term;

/// A complex action, possibly containing variables.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Program {
    Action(Term),
    Test(Formula),
    Seq(Box<Program>, Box<Program>),
    Choice(Vec<Program>),
    If(Formula, Box<Program>, Box<Program>),
    While(Formula, Box<Program>),
    Pick(Arc<str>, Vec<Term>, Box<Program>),
    Call(Term),
    Null,
    Htn(Box<Htn>),
}

/// An HTN construct `(Σ, C)`; constraints refer to tasks by index.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Htn {
    pub tasks: Vec<Program>,
    pub constraints: Vec<HtnConstraint>,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct HtnConstraint {
    pub label: Option<String>,
    pub kind: ConstraintKind,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum ConstraintKind {
    /// Task `.0` runs before task `.1`.
    Order(usize, usize),
    /// The formula holds when the task starts.
    Pre(Formula, usize),
    /// The formula holds when the task ends.
    Post(usize, Formula),
    /// The formula holds from the end of the first task to the start of the second.
    Maintain(usize, Formula, usize),
}

impl ConstraintKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ConstraintKind::Order(..) => "ordering",
            ConstraintKind::Pre(..) => "precondition",
            ConstraintKind::Post(..) => "postcondition",
            ConstraintKind::Maintain(..) => "maintain",
        }
    }

    fn map_formula(&self, f: impl Fn(&Formula) -> Formula) -> ConstraintKind {
        match self {
            ConstraintKind::Order(a, b) => ConstraintKind::Order(*a, *b),
            ConstraintKind::Pre(p, i) => ConstraintKind::Pre(f(p), *i),
            ConstraintKind::Post(i, p) => ConstraintKind::Post(*i, f(p)),
            ConstraintKind::Maintain(a, p, b) => ConstraintKind::Maintain(*a, f(p), *b),
        }
    }

    fn formula(&self) -> Option<&Formula> {
        match self {
            ConstraintKind::Order(..) => None,
            ConstraintKind::Pre(p, _) | ConstraintKind::Post(_, p) | ConstraintKind::Maintain(_, p, _) => Some(p),
        }
    }
}

impl Htn {
    /// Ordering pairs, including the ones implied by maintain constraints.
    pub fn order_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for c in &self.constraints {
            match c.kind {
                ConstraintKind::Order(a, b) | ConstraintKind::Maintain(a, _, b)
                    if !out.contains(&(a, b)) => {
                        out.push((a, b))
                    }
                _ => {}
            }
        }
        out
    }

    /// True iff the ordering relation has a cycle (including `a ≺ a`).
    pub fn has_order_cycle(&self) -> bool {
        let k = self.tasks.len();
        let pairs = self.order_pairs();
        let mut indeg = vec![0usize; k];
        for &(_, b) in &pairs {
            indeg[b] += 1;
        }
        let mut stack: Vec<usize> = (0..k).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(x) = stack.pop() {
            seen += 1;
            for &(a, b) in &pairs {
                if a == x {
                    indeg[b] -= 1;
                    if indeg[b] == 0 {
                        stack.push(b);
                    }
                }
            }
        }
        seen < k
    }
}

/// `(p(X1..Xn) : body)`; each parameter ranges over a finite constant set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Procedure {
    pub name: String,
    pub params: Vec<(Arc<str>, Vec<Term>)>,
    pub body: Program,
}

impl Procedure {
    /// Every ground instance term `p(c1..cn)` in lexicographic parameter order.
    pub fn instances(&self) -> Vec<Vec<Term>> {
        let mut out = vec![vec![]];
        for (_, dom) in &self.params {
            let mut next = Vec::new();
            for prefix in &out {
                for c in dom {
                    let mut v = prefix.clone();
                    v.push(c.clone());
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }

    pub fn instance_body(&self, args: &[Term]) -> Result<Program, ProgramError> {
        if args.len() != self.params.len() {
            return Err(ProgramError::Arity { call: Term::app(&self.name, args.to_vec()) });
        }
        let subst: HashMap<&str, &Term> = self.params.iter().map(|(v, _)| &**v).zip(args).collect();
        ground_complex(&self.body, &|v| subst.get(v).map(|t| (*t).clone()))
    }
}

/// Procedures by name.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ProcedureTable {
    procs: BTreeMap<String, Procedure>,
}

impl ProcedureTable {
    pub fn new() -> ProcedureTable {
        ProcedureTable::default()
    }

    pub fn insert(&mut self, p: Procedure) -> Result<(), ProgramError> {
        if self.procs.contains_key(&p.name) {
            return Err(ProgramError::DuplicateProcedure(p.name));
        }
        self.procs.insert(p.name.clone(), p);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Procedure> {
        self.procs.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Procedure> {
        self.procs.values()
    }

    pub fn len(&self) -> usize {
        self.procs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.procs.is_empty()
    }

    /// Ground body of the instance named by `call`.
    pub fn resolve(&self, call: &Term) -> Result<Program, ProgramError> {
        let name = call.name().ok_or_else(|| ProgramError::UnknownProcedure(call.clone()))?;
        let p = self.get(name).ok_or_else(|| ProgramError::UnknownProcedure(call.clone()))?;
        p.instance_body(call.args())
    }
}

/// A procedure table plus the top-level program.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneralProgram {
    pub table: ProcedureTable,
    pub main: Program,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgramError {
    #[error("procedure {0} is defined twice")]
    DuplicateProcedure(String),
    #[error("unknown procedure in call {0}")]
    UnknownProcedure(Term),
    #[error("wrong number of arguments in call {call}")]
    Arity { call: Term },
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("pick over an empty constant set")]
    EmptyPick,
    #[error("program is not coherent: {0}")]
    Incoherent(String),
    #[error("unknown action {0}")]
    UnknownAction(Term),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Applies `subst` to every free variable; `pick` and quantifiers bind their own.
pub fn ground_complex(p: &Program, subst: &dyn Fn(&str) -> Option<Term>) -> Result<Program, ProgramError> {
    let g = substitute(p, subst);
    if let Some(v) = free_vars(&g).into_iter().next() {
        return Err(ProgramError::UnboundVariable(v.to_string()));
    }
    Ok(g)
}

fn substitute(p: &Program, subst: &dyn Fn(&str) -> Option<Term>) -> Program {
    let rec = |q: &Program| Box::new(substitute(q, subst));
    match p {
        Program::Action(a) => Program::Action(a.substitute(subst)),
        Program::Test(f) => Program::Test(f.substitute(subst)),
        Program::Seq(a, b) => Program::Seq(rec(a), rec(b)),
        Program::Choice(cs) => Program::Choice(cs.iter().map(|c| substitute(c, subst)).collect()),
        Program::If(f, a, b) => Program::If(f.substitute(subst), rec(a), rec(b)),
        Program::While(f, a) => Program::While(f.substitute(subst), rec(a)),
        Program::Pick(v, cs, body) => {
            let v2 = v.clone();
            let inner = move |x: &str| if x == &*v2 { None } else { subst(x) };
            Program::Pick(v.clone(), cs.clone(), Box::new(substitute(body, &inner)))
        }
        Program::Call(c) => Program::Call(c.substitute(subst)),
        Program::Null => Program::Null,
        Program::Htn(h) => Program::Htn(Box::new(Htn {
            tasks: h.tasks.iter().map(|t| substitute(t, subst)).collect(),
            constraints: h
                .constraints
                .iter()
                .map(|c| HtnConstraint { label: c.label.clone(), kind: c.kind.map_formula(|f| f.substitute(subst)) })
                .collect(),
        })),
    }
}

/// Free variables of a complex action, in order of first occurrence.
pub fn free_vars(p: &Program) -> Vec<Arc<str>> {
    let mut out = Vec::new();
    free_vars_into(p, &mut Vec::new(), &mut out);
    out
}

fn push_term_vars(t: &Term, bound: &[Arc<str>], out: &mut Vec<Arc<str>>) {
    let mut vs = Vec::new();
    t.vars_into(&mut vs);
    for v in vs {
        if !bound.contains(&v) && !out.contains(&v) {
            out.push(v);
        }
    }
}

fn push_formula_vars(f: &Formula, bound: &[Arc<str>], out: &mut Vec<Arc<str>>) {
    for v in f.free_vars() {
        if !bound.contains(&v) && !out.contains(&v) {
            out.push(v);
        }
    }
}

fn free_vars_into(p: &Program, bound: &mut Vec<Arc<str>>, out: &mut Vec<Arc<str>>) {
    match p {
        Program::Action(t) | Program::Call(t) => push_term_vars(t, bound, out),
        Program::Test(f) => push_formula_vars(f, bound, out),
        Program::Seq(a, b) => {
            free_vars_into(a, bound, out);
            free_vars_into(b, bound, out);
        }
        Program::Choice(cs) => cs.iter().for_each(|c| free_vars_into(c, bound, out)),
        Program::If(f, a, b) => {
            push_formula_vars(f, bound, out);
            free_vars_into(a, bound, out);
            free_vars_into(b, bound, out);
        }
        Program::While(f, a) => {
            push_formula_vars(f, bound, out);
            free_vars_into(a, bound, out);
        }
        Program::Pick(v, _, body) => {
            bound.push(v.clone());
            free_vars_into(body, bound, out);
            bound.pop();
        }
        Program::Null => {}
        Program::Htn(h) => {
            h.tasks.iter().for_each(|t| free_vars_into(t, bound, out));
            for c in &h.constraints {
                if let Some(f) = c.kind.formula() {
                    push_formula_vars(f, bound, out);
                }
            }
        }
    }
}

/// An element of `prim(δ)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum PrimItem {
    Action(Term),
    Formula(Formula),
    Call(Term),
}

/// `prim(δ)` for a ground complex action. Calls are expanded once each, so
/// recursion through procedures terminates.
pub fn prim(p: &Program, table: &ProcedureTable) -> Result<BTreeSet<PrimItem>, ProgramError> {
    let mut out = BTreeSet::new();
    prim_into(p, table, &mut out)?;
    Ok(out)
}

fn prim_into(p: &Program, table: &ProcedureTable, out: &mut BTreeSet<PrimItem>) -> Result<(), ProgramError> {
    match p {
        Program::Action(a) => {
            out.insert(PrimItem::Action(a.clone()));
        }
        Program::Test(f) => {
            out.insert(PrimItem::Formula(f.clone()));
        }
        Program::Seq(a, b) => {
            prim_into(a, table, out)?;
            prim_into(b, table, out)?;
        }
        Program::Choice(cs) => {
            for c in cs {
                prim_into(c, table, out)?;
            }
        }
        Program::If(f, a, b) => {
            out.insert(PrimItem::Formula(f.clone()));
            prim_into(a, table, out)?;
            prim_into(b, table, out)?;
        }
        Program::While(f, a) => {
            out.insert(PrimItem::Formula(f.clone()));
            prim_into(a, table, out)?;
        }
        Program::Pick(v, cs, body) => {
            for c in cs {
                let inst = substitute(body, &|x| (x == &**v).then(|| c.clone()));
                prim_into(&inst, table, out)?;
            }
        }
        Program::Call(c) => {
            if out.insert(PrimItem::Call(c.clone())) {
                let body = table.resolve(c)?;
                prim_into(&body, table, out)?;
            }
        }
        Program::Null => {}
        Program::Htn(h) => {
            for t in &h.tasks {
                prim_into(t, table, out)?;
            }
            for c in &h.constraints {
                if let Some(f) = c.kind.formula() {
                    out.insert(PrimItem::Formula(f.clone()));
                }
            }
        }
    }
    Ok(())
}

/// A reason a procedure table or program is not coherent.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CoherenceIssue {
    NestedProcedure { procedure: String },
    SelfDependent { procedure: String, instance: Term },
    EmptyParameterDomain { procedure: String, param: String },
    Invalid { context: String, error: ProgramError },
    OrderCycle { context: String },
    SelfOrder { context: String },
    GoalInProgram { context: String },
}

impl fmt::Display for CoherenceIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoherenceIssue::NestedProcedure { procedure } => {
                write!(f, "procedure {procedure} is nested: its body is a bare procedure call")
            }
            CoherenceIssue::SelfDependent { procedure, instance } => {
                write!(f, "procedure {procedure} is not well-defined: {instance} belongs to prim({instance})")
            }
            CoherenceIssue::EmptyParameterDomain { procedure, param } => {
                write!(f, "parameter {param} of procedure {procedure} ranges over an empty set")
            }
            CoherenceIssue::Invalid { context, error } => write!(f, "{context}: {error}"),
            CoherenceIssue::OrderCycle { context } => write!(f, "{context}: ordering constraints form a cycle"),
            CoherenceIssue::SelfOrder { context } => write!(f, "{context}: a task is ordered before itself"),
            CoherenceIssue::GoalInProgram { context } => write!(f, "{context}: goal operator inside a program"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct CoherenceReport {
    pub issues: Vec<CoherenceIssue>,
}

impl CoherenceReport {
    pub fn is_coherent(&self) -> bool {
        self.issues.is_empty()
    }
}

fn structural_issues(p: &Program, context: &str, issues: &mut Vec<CoherenceIssue>) {
    match p {
        Program::Test(f) | Program::While(f, _) | Program::If(f, _, _) if f.is_goal_dependent() => {
            issues.push(CoherenceIssue::GoalInProgram { context: context.to_string() })
        }
        Program::Pick(_, cs, _) if cs.is_empty() => {
            issues.push(CoherenceIssue::Invalid { context: context.to_string(), error: ProgramError::EmptyPick })
        }
        Program::Htn(h) => {
            if h.order_pairs().iter().any(|(a, b)| a == b) {
                issues.push(CoherenceIssue::SelfOrder { context: context.to_string() });
            } else if h.has_order_cycle() {
                issues.push(CoherenceIssue::OrderCycle { context: context.to_string() });
            }
        }
        _ => {}
    }
    match p {
        Program::Seq(a, b) | Program::If(_, a, b) => {
            structural_issues(a, context, issues);
            structural_issues(b, context, issues);
        }
        Program::Choice(cs) => cs.iter().for_each(|c| structural_issues(c, context, issues)),
        Program::While(_, a) | Program::Pick(_, _, a) => structural_issues(a, context, issues),
        Program::Htn(h) => h.tasks.iter().for_each(|t| structural_issues(t, context, issues)),
        _ => {}
    }
}

/// Checks that no procedure is nested and every ground instance is well-defined.
pub fn check_coherent(table: &ProcedureTable) -> CoherenceReport {
    let mut issues = Vec::new();
    for p in table.iter() {
        if matches!(p.body, Program::Call(_)) {
            issues.push(CoherenceIssue::NestedProcedure { procedure: p.name.clone() });
        }
        for (v, dom) in &p.params {
            if dom.is_empty() {
                issues.push(CoherenceIssue::EmptyParameterDomain { procedure: p.name.clone(), param: v.to_string() });
            }
        }
        structural_issues(&p.body, &format!("procedure {}", p.name), &mut issues);
        for args in p.instances() {
            let instance = Term::app(&p.name, args.clone());
            let context = format!("procedure instance {instance}");
            let body = match p.instance_body(&args) {
                Ok(b) => b,
                Err(error) => {
                    issues.push(CoherenceIssue::Invalid { context, error });
                    break;
                }
            };
            match prim(&body, table) {
                Ok(set) => {
                    if set.contains(&PrimItem::Call(instance.clone())) {
                        issues.push(CoherenceIssue::SelfDependent { procedure: p.name.clone(), instance });
                        break;
                    }
                }
                Err(error) => {
                    issues.push(CoherenceIssue::Invalid { context, error });
                    break;
                }
            }
        }
    }
    CoherenceReport { issues }
}

/// Coherence of the table plus validity of the main program.
pub fn check_program(p: &GeneralProgram) -> CoherenceReport {
    let mut report = check_coherent(&p.table);
    structural_issues(&p.main, "main program", &mut report.issues);
    if let Some(v) = free_vars(&p.main).first() {
        report.issues.push(CoherenceIssue::Invalid {
            context: "main program".into(),
            error: ProgramError::UnboundVariable(v.to_string()),
        });
    } else if let Err(error) = prim(&p.main, &p.table) {
        report.issues.push(CoherenceIssue::Invalid { context: "main program".into(), error });
    }
    report
}

pub type NodeId = usize;
pub type FormulaId = usize;

/// A ground program node. Procedure calls are resolved to the node of the
/// instance body, which carries the instance name.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Node {
    Action(ActionId),
    Test(FormulaId),
    Seq(NodeId, NodeId),
    Choice(Vec<NodeId>),
    If(FormulaId, NodeId, NodeId),
    While(FormulaId, NodeId),
    Pick(Vec<NodeId>),
    Null,
    Htn(HtnNode),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HtnNode {
    pub tasks: Vec<NodeId>,
    pub constraints: Vec<GroundConstraint>,
    /// Order pairs over task positions, including those implied by maintain.
    pub order: Vec<(usize, usize)>,
}

/// An HTN constraint over task positions and formula ids.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum GroundKind {
    Order(usize, usize),
    Pre(FormulaId, usize),
    Post(usize, FormulaId),
    Maintain(usize, FormulaId, usize),
}

impl GroundKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            GroundKind::Order(..) => "ordering",
            GroundKind::Pre(..) => "precondition",
            GroundKind::Post(..) => "postcondition",
            GroundKind::Maintain(..) => "maintain",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GroundConstraint {
    pub name: Term,
    pub kind: GroundKind,
}

/// The ground, shared representation of a general program: every node has a
/// unique name, equal anonymous sub-programs are merged, and each procedure
/// instance appears once.
#[derive(Clone, Debug)]
pub struct ProgramGraph {
    nodes: Vec<Node>,
    names: Vec<Term>,
    formulas: Vec<Formula>,
    root: NodeId,
}

struct GraphBuilder<'a> {
    domain: &'a Domain,
    table: &'a ProcedureTable,
    nodes: Vec<Option<Node>>,
    names: Vec<Term>,
    by_name: HashMap<Term, NodeId>,
    formulas: Vec<Formula>,
    formula_ids: HashMap<Term, FormulaId>,
    constraint_names: BTreeMap<String, usize>,
}

impl GraphBuilder<'_> {
    fn reserve(&mut self, name: Term) -> NodeId {
        self.nodes.push(None);
        self.names.push(name.clone());
        self.by_name.insert(name, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn intern(&mut self, name: Term, node: Node) -> NodeId {
        if let Some(&id) = self.by_name.get(&name) {
            return id;
        }
        let id = self.reserve(name);
        self.nodes[id] = Some(node);
        id
    }

    fn formula(&mut self, f: &Formula) -> Result<FormulaId, ProgramError> {
        let g = f.ground_quantifiers()?;
        if !g.is_fluent() {
            return Err(FormulaError::NotFluentFormula.into());
        }
        for l in g.literals() {
            if !l.fluent.is_ground() {
                return Err(ProgramError::UnboundVariable(l.fluent.to_string()));
            }
            if self.domain.lit(&l).is_err() {
                return Err(FormulaError::UnknownFluent(l.fluent).into());
            }
        }
        let name = g.name();
        if let Some(&id) = self.formula_ids.get(&name) {
            return Ok(id);
        }
        self.formulas.push(g);
        self.formula_ids.insert(name, self.formulas.len() - 1);
        Ok(self.formulas.len() - 1)
    }

    fn fname(&self, id: FormulaId) -> Term {
        self.formulas[id].name()
    }

    /// Builds `p` as an anonymous node, or under `fixed_name` when given.
    fn build(&mut self, p: &Program, fixed_name: Option<Term>) -> Result<NodeId, ProgramError> {
        let (node, name) = match p {
            Program::Call(c) => {
                if let Some(&id) = self.by_name.get(c) {
                    return Ok(id);
                }
                let body = self.table.resolve(c)?;
                let body = match body {
                    Program::Action(_) | Program::Test(_) | Program::Null => Program::Choice(vec![body]),
                    b => b,
                };
                return self.build(&body, Some(c.clone()));
            }
            Program::Action(a) => {
                let id = self.domain.action_id(a).ok_or_else(|| ProgramError::UnknownAction(a.clone()))?;
                (Node::Action(id), a.clone())
            }
            Program::Test(f) => {
                let g = self.formula(f)?;
                (Node::Test(g), self.fname(g))
            }
            Program::Null => (Node::Null, Term::sym("null")),
            Program::Seq(a, b) => {
                let (x, y) = (self.build(a, None)?, self.build(b, None)?);
                (Node::Seq(x, y), Term::app("seq", vec![self.names[x].clone(), self.names[y].clone()]))
            }
            Program::Choice(cs) => {
                let ids = cs.iter().map(|c| self.build(c, None)).collect::<Result<Vec<_>, _>>()?;
                let name = Term::app("choice", ids.iter().map(|&i| self.names[i].clone()).collect());
                (Node::Choice(ids), name)
            }
            Program::If(f, a, b) => {
                let g = self.formula(f)?;
                let (x, y) = (self.build(a, None)?, self.build(b, None)?);
                let name = Term::app("if", vec![self.fname(g), self.names[x].clone(), self.names[y].clone()]);
                (Node::If(g, x, y), name)
            }
            Program::While(f, a) => {
                let g = self.formula(f)?;
                let x = self.build(a, None)?;
                let name = Term::app("while", vec![self.fname(g), self.names[x].clone()]);
                (Node::While(g, x), name)
            }
            Program::Pick(v, cs, body) => {
                if cs.is_empty() {
                    return Err(ProgramError::EmptyPick);
                }
                let mut ids = Vec::new();
                for c in cs {
                    let inst = ground_complex(body, &|x| (x == &**v).then(|| c.clone()))?;
                    let id = self.build(&inst, None)?;
                    if !ids.contains(&id) {
                        ids.push(id);
                    }
                }
                let name = Term::app("pick", ids.iter().map(|&i| self.names[i].clone()).collect());
                (Node::Pick(ids), name)
            }
            Program::Htn(h) => {
                let tasks = h.tasks.iter().map(|t| self.build(t, None)).collect::<Result<Vec<_>, _>>()?;
                let mut cons = Vec::new();
                for (i, c) in h.constraints.iter().enumerate() {
                    let kind = match &c.kind {
                        ConstraintKind::Order(a, b) => GroundKind::Order(*a, *b),
                        ConstraintKind::Pre(f, i) => GroundKind::Pre(self.formula(f)?, *i),
                        ConstraintKind::Post(i, f) => GroundKind::Post(*i, self.formula(f)?),
                        ConstraintKind::Maintain(a, f, b) => GroundKind::Maintain(*a, self.formula(f)?, *b),
                    };
                    let label = c.label.clone().unwrap_or_else(|| format!("c{}", i + 1));
                    cons.push((label, kind));
                }
                let name = match &fixed_name {
                    Some(n) => n.clone(),
                    None => {
                        let mut parts = vec![Term::app("tasks", tasks.iter().map(|&t| self.names[t].clone()).collect())];
                        for (label, kind) in &cons {
                            parts.push(self.constraint_term(label, kind, &tasks));
                        }
                        Term::app("htn", parts)
                    }
                };
                if let Some(&id) = self.by_name.get(&name) {
                    return Ok(id);
                }
                let constraints = cons
                    .into_iter()
                    .map(|(label, kind)| {
                        *self.constraint_names.entry(label.clone()).or_insert(0) += 1;
                        GroundConstraint { name: Term::sym(&label), kind }
                    })
                    .collect();
                (Node::Htn(HtnNode { tasks, constraints, order: h.order_pairs() }), name)
            }
        };
        match fixed_name {
            Some(n) => {
                let id = self.reserve(n);
                self.nodes[id] = Some(node);
                Ok(id)
            }
            None => Ok(self.intern(name, node)),
        }
    }

    fn constraint_term(&self, label: &str, kind: &GroundKind, tasks: &[NodeId]) -> Term {
        let t = |i: &usize| self.names[tasks[*i]].clone();
        let l = Term::sym(label);
        match kind {
            GroundKind::Order(a, b) => Term::app("order", vec![l, t(a), t(b)]),
            GroundKind::Pre(f, i) => Term::app("precondition", vec![l, self.fname(*f), t(i)]),
            GroundKind::Post(i, f) => Term::app("postcondition", vec![l, self.fname(*f), t(i)]),
            GroundKind::Maintain(a, f, b) => Term::app("maintain", vec![l, self.fname(*f), t(a), t(b)]),
        }
    }
}

impl ProgramGraph {
    /// Checks coherence, then grounds and shares the program.
    pub fn build(domain: &Domain, p: &GeneralProgram) -> Result<ProgramGraph, ProgramError> {
        let report = check_program(p);
        if let Some(issue) = report.issues.first() {
            return Err(ProgramError::Incoherent(issue.to_string()));
        }
        let mut b = GraphBuilder {
            domain,
            table: &p.table,
            nodes: Vec::new(),
            names: Vec::new(),
            by_name: HashMap::new(),
            formulas: Vec::new(),
            formula_ids: HashMap::new(),
            constraint_names: BTreeMap::new(),
        };
        let root = match &p.main {
            Program::Call(_) | Program::Action(_) | Program::Test(_) | Program::Null => b.build(&p.main, None)?,
            other => b.build(other, Some(Term::sym("main")))?,
        };
        // Labels reused by several HTN nodes get qualified with the node name.
        let dup: BTreeSet<String> =
            b.constraint_names.iter().filter(|(_, &c)| c > 1).map(|(l, _)| l.clone()).collect();
        let names = b.names;
        let mut nodes: Vec<Node> = b.nodes.into_iter().map(|n| n.expect("every reserved node is filled")).collect();
        for (id, n) in nodes.iter_mut().enumerate() {
            if let Node::Htn(h) = n {
                for c in &mut h.constraints {
                    if dup.contains(&c.name.to_string()) {
                        c.name = Term::app(&c.name.to_string(), vec![names[id].clone()]);
                    }
                }
            }
        }
        Ok(ProgramGraph { nodes, names, formulas: b.formulas, root })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn name(&self, id: NodeId) -> &Term {
        &self.names[id]
    }

    pub fn formula(&self, id: FormulaId) -> &Formula {
        &self.formulas[id]
    }

    /// Every formula tested anywhere in the program.
    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.nodes.len()
    }

    pub fn has_htn(&self) -> bool {
        self.nodes.iter().any(|n| matches!(n, Node::Htn(_)))
    }

    /// The root HTN node, if the program is an HTN at the top level.
    pub fn root_htn(&self) -> Option<&HtnNode> {
        match &self.nodes[self.root] {
            Node::Htn(h) => Some(h),
            _ => None,
        }
    }

    /// A copy with the `k`-th constraint of the root HTN removed.
    pub fn without_root_constraint(&self, k: usize) -> ProgramGraph {
        let mut g = self.clone();
        if let Node::Htn(h) = &mut g.nodes[g.root] {
            let removed = h.constraints.remove(k);
            if let GroundKind::Order(a, b) | GroundKind::Maintain(a, _, b) = removed.kind {
                let still = h.constraints.iter().any(|c| {
                    matches!(c.kind, GroundKind::Order(x, y) | GroundKind::Maintain(x, _, y) if (x, y) == (a, b))
                });
                if !still {
                    h.order.retain(|&p| p != (a, b));
                }
            }
        }
        g
    }
}

/// Placement of HTN task `task` on `[begin, end]`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Placement {
    pub task: usize,
    pub begin: usize,
    pub end: usize,
}

/// Decides traces of a program graph on one trajectory, or on a prefix of one.
pub struct TraceChecker<'a> {
    domain: &'a Domain,
    graph: &'a ProgramGraph,
    states: &'a [State],
    actions: &'a [ActionId],
    memo: HashMap<(NodeId, usize), Option<Vec<usize>>>,
    truth: HashMap<(FormulaId, usize), bool>,
    open_memo: HashMap<(NodeId, usize), bool>,
}

impl<'a> TraceChecker<'a> {
    pub fn new(domain: &'a Domain, graph: &'a ProgramGraph, traj: &'a Trajectory) -> TraceChecker<'a> {
        Self::on_prefix(domain, graph, &traj.states, &traj.actions)
    }

    /// `states` has one more element than `actions`.
    pub fn on_prefix(
        domain: &'a Domain,
        graph: &'a ProgramGraph,
        states: &'a [State],
        actions: &'a [ActionId],
    ) -> TraceChecker<'a> {
        assert_eq!(states.len(), actions.len() + 1);
        TraceChecker {
            domain,
            graph,
            states,
            actions,
            memo: HashMap::new(),
            truth: HashMap::new(),
            open_memo: HashMap::new(),
        }
    }

    fn last(&self) -> usize {
        self.actions.len()
    }

    fn holds(&mut self, f: FormulaId, i: usize) -> bool {
        if let Some(&v) = self.truth.get(&(f, i)) {
            return v;
        }
        let v = self
            .graph
            .formula(f)
            .eval_state(self.domain, &self.states[i])
            .expect("program formulas are resolved when the graph is built");
        self.truth.insert((f, i), v);
        v
    }

    /// True iff the whole trajectory is a trace of the root.
    pub fn is_trace(&mut self) -> bool {
        let n = self.last();
        self.ends(self.graph.root(), 0).contains(&n)
    }

    /// Every `j` such that `s_i .. s_j` is a trace of `node`, ascending.
    pub fn ends(&mut self, node: NodeId, i: usize) -> Vec<usize> {
        match self.memo.get(&(node, i)) {
            Some(Some(v)) => return v.clone(),
            Some(None) => return Vec::new(),
            None => {}
        }
        self.memo.insert((node, i), None);
        let n = self.last();
        let mut out: Vec<usize> = match self.graph.node(node) {
            Node::Action(a) => {
                if i < n && self.actions[i] == *a {
                    vec![i + 1]
                } else {
                    vec![]
                }
            }
            &Node::Test(f) => {
                if self.holds(f, i) {
                    vec![i]
                } else {
                    vec![]
                }
            }
            Node::Null => vec![i],
            &Node::Seq(a, b) => {
                let mut v = Vec::new();
                for k in self.ends(a, i) {
                    v.extend(self.ends(b, k));
                }
                v
            }
            Node::Choice(cs) | Node::Pick(cs) => {
                let mut v = Vec::new();
                for c in cs.clone() {
                    v.extend(self.ends(c, i));
                }
                v
            }
            &Node::If(f, a, b) => {
                if self.holds(f, i) {
                    self.ends(a, i)
                } else {
                    self.ends(b, i)
                }
            }
            &Node::While(f, body) => {
                if !self.holds(f, i) {
                    vec![i]
                } else {
                    let mut v = Vec::new();
                    for k in self.ends(body, i) {
                        if k > i {
                            v.extend(self.ends(node, k));
                        }
                    }
                    v
                }
            }
            Node::Htn(h) => {
                let h = h.clone();
                self.htn_ends(&h, i)
            }
        };
        out.sort_unstable();
        out.dedup();
        self.memo.insert((node, i), Some(out.clone()));
        out
    }

    fn htn_ends(&mut self, h: &HtnNode, i: usize) -> Vec<usize> {
        let full = (1u64 << h.tasks.len()) - 1;
        let mut seen: BTreeSet<(u64, usize)> = BTreeSet::new();
        let mut stack = vec![(0u64, i)];
        let mut out = Vec::new();
        while let Some((mask, b)) = stack.pop() {
            if !seen.insert((mask, b)) {
                continue;
            }
            if mask == full {
                out.push(b);
                continue;
            }
            for (x, e) in self.htn_steps(h, mask, b) {
                stack.push((mask | 1 << x, e));
            }
        }
        out
    }

    /// Every `(task, end)` that may be placed next from `(mask, b)`: order
    /// predecessors already placed, precondition at `b`, postcondition at the
    /// end, and every active maintain constraint respected.
    fn htn_steps(&mut self, h: &HtnNode, mask: u64, b: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in 0..h.tasks.len() {
            if mask >> x & 1 == 1 || h.order.iter().any(|&(t, l)| l == x && mask >> t & 1 == 0) {
                continue;
            }
            let pre_ok = h.constraints.iter().all(|c| match c.kind {
                GroundKind::Pre(f, t) if t == x => self.holds(f, b),
                _ => true,
            });
            if !pre_ok {
                continue;
            }
            for e in self.ends(h.tasks[x], b) {
                let ok = h.constraints.iter().all(|c| match c.kind {
                    GroundKind::Post(t, f) if t == x => self.holds(f, e),
                    GroundKind::Maintain(t, f, l) if mask >> t & 1 == 1 && mask >> l & 1 == 0 => {
                        if l == x {
                            self.holds(f, b)
                        } else {
                            (b..=e).all(|s| self.holds(f, s))
                        }
                    }
                    _ => true,
                });
                if ok {
                    out.push((x, e));
                }
            }
        }
        out
    }

    /// The first valid placement sequence for the HTN `node` on `[i, j]`,
    /// trying tasks in index order and ends in ascending order.
    pub fn htn_witness(&mut self, node: NodeId, i: usize, j: usize) -> Option<Vec<Placement>> {
        let h = match self.graph.node(node) {
            Node::Htn(h) => h.clone(),
            _ => return None,
        };
        let mut path = Vec::new();
        let mut dead = BTreeSet::new();
        self.witness_dfs(&h, 0, i, j, &mut path, &mut dead).then_some(path)
    }

    fn witness_dfs(
        &mut self,
        h: &HtnNode,
        mask: u64,
        b: usize,
        j: usize,
        path: &mut Vec<Placement>,
        dead: &mut BTreeSet<(u64, usize)>,
    ) -> bool {
        if mask == (1u64 << h.tasks.len()) - 1 {
            return b == j;
        }
        if b > j || dead.contains(&(mask, b)) {
            return false;
        }
        let mut steps = self.htn_steps(h, mask, b);
        steps.sort();
        for (x, e) in steps {
            path.push(Placement { task: x, begin: b, end: e });
            if self.witness_dfs(h, mask | 1 << x, e, j, path, dead) {
                return true;
            }
            path.pop();
        }
        dead.insert((mask, b));
        false
    }

    /// On a prefix, whether some trace of `node` from `i` could end after the
    /// last known state. Over-approximates; HTN nodes are assumed open.
    pub fn may_extend(&mut self, node: NodeId, i: usize) -> bool {
        if let Some(&v) = self.open_memo.get(&(node, i)) {
            return v;
        }
        self.open_memo.insert((node, i), false);
        let m = self.last();
        let v = match self.graph.node(node) {
            Node::Action(_) => i == m,
            Node::Test(_) | Node::Null => false,
            &Node::Seq(a, b) => self.may_extend(a, i) || self.ends(a, i).into_iter().any(|k| self.may_extend(b, k)),
            Node::Choice(cs) | Node::Pick(cs) => cs.clone().into_iter().any(|c| self.may_extend(c, i)),
            &Node::If(f, a, b) => {
                if self.holds(f, i) {
                    self.may_extend(a, i)
                } else {
                    self.may_extend(b, i)
                }
            }
            &Node::While(f, body) => {
                self.holds(f, i)
                    && (self.may_extend(body, i)
                        || self.ends(body, i).into_iter().any(|k| k > i && self.may_extend(node, k)))
            }
            Node::Htn(_) => true,
        };
        self.open_memo.insert((node, i), v);
        v
    }
}

/// True iff `traj` is a trace of the program.
pub fn is_trace(domain: &Domain, graph: &ProgramGraph, traj: &Trajectory) -> bool {
    TraceChecker::new(domain, graph, traj).is_trace()
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Program::Action(a) => write!(f, "{a}"),
            Program::Test(p) => write!(f, "?{p}"),
            Program::Seq(a, b) => write!(f, "({a}; {b})"),
            Program::Choice(cs) => {
                f.write_str("(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
            Program::If(p, a, b) => write!(f, "if {p} then {a} else {b}"),
            Program::While(p, a) => write!(f, "while {p} do {a}"),
            Program::Pick(v, cs, body) => {
                let cs: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
                write!(f, "pick({v}, {{{}}}, {body})", cs.join(", "))
            }
            Program::Call(c) => write!(f, "{c}"),
            Program::Null => f.write_str("null"),
            Program::Htn(h) => {
                f.write_str("htn { ")?;
                for (i, t) in h.tasks.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                for (i, c) in h.constraints.iter().enumerate() {
                    f.write_str(if i == 0 { "; " } else { ", " })?;
                    if let Some(l) = &c.label {
                        write!(f, "{l}: ")?;
                    }
                    let t = |i: &usize| h.tasks[*i].to_string();
                    match &c.kind {
                        ConstraintKind::Order(a, b) => write!(f, "order({}, {})", t(a), t(b))?,
                        ConstraintKind::Pre(p, i) => write!(f, "pre({p}, {})", t(i))?,
                        ConstraintKind::Post(i, p) => write!(f, "post({}, {p})", t(i))?,
                        ConstraintKind::Maintain(a, p, b) => write!(f, "maintain({}, {p}, {})", t(a), t(b))?,
                    }
                }
                f.write_str(" }")
            }
        }
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
