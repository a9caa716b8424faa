//! Reader for problem files and trace files.
//!
//! A problem file starts with the line `%! aspplan problem v1` and is a
//! sequence of `.`-terminated statements:
//!
//! ```text
//! sort latch = {l1, l2}.
//! fluent up(latch), locked(suitcase).
//! action open(latch).
//! caused({up(l1), up(l2)}, -locked(s)).
//! causes(open(X), up(X), {}).
//! executable(open(L), {holding(K)}) :- L = l1, K = k1.
//! initially(up(l1), -up(l2)).
//! goal(-locked(s)).
//! horizon 1.
//! temporal always(negation(goal(f))).
//! proc go(N : floor) : currentFloor(N) | up(N).
//! main go(1).
//! ```
//!
//! Upper-case names are variables. A statement containing variables stands
//! for all its instances; each variable ranges over the constants that may
//! occupy its argument positions in the declared fluents and actions, filtered
//! by the comparisons after `:-`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use crate::action::{Domain, DomainBuilder, InitialState, Literal, State, Trajectory};
use crate::formula::Formula;
use crate::lexer::{expect_header, tokenize, Cursor, SyntaxError, Tok};
use crate::program::{ConstraintKind, GeneralProgram, Htn, HtnConstraint, Procedure, ProcedureTable, Program};
use crate::term::Term;

pub const PROBLEM_HEADER: &str = "%! aspplan problem v1";
pub const TRACE_HEADER: &str = "%! aspplan trace v1";

/// Names with a fixed meaning in formulas, programs or logic programs.
pub const RESERVED: &[&str] = &[
    "and", "or", "negation", "not", "next", "always", "eventually", "until", "goal", "neg", "forall", "exists",
    "implies", "if", "then", "else", "while", "do", "pick", "null", "htn", "main", "proc", "sort", "fluent",
    "action", "caused", "causes", "executable", "initially", "horizon", "temporal", "order", "pre", "post",
    "maintain", "precondition", "postcondition", "holds", "occ", "nocc", "possible", "time", "literal",
    "contrary", "hf", "hf_during", "trans", "formula", "sequence", "choiceAction", "choiceArgs", "in", "set",
    "begin", "end", "used", "not_used", "overlap", "nok", "between", "state",
];

/// Control knowledge attached to a problem.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Knowledge {
    #[default]
    None,
    Temporal(Formula),
    Program(GeneralProgram),
}

impl Knowledge {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Knowledge::None => "none",
            Knowledge::Temporal(_) => "temporal",
            Knowledge::Program(p) if program_has_htn(&p.main, &p.table) => "htn",
            Knowledge::Program(_) => "program",
        }
    }
}

fn program_has_htn(p: &Program, table: &ProcedureTable) -> bool {
    fn walk(p: &Program) -> bool {
        match p {
            Program::Htn(_) => true,
            Program::Seq(a, b) | Program::If(_, a, b) => walk(a) || walk(b),
            Program::Choice(cs) => cs.iter().any(walk),
            Program::While(_, a) | Program::Pick(_, _, a) => walk(a),
            _ => false,
        }
    }
    walk(p) || table.iter().any(|pr| walk(&pr.body))
}

/// A parsed problem file.
#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub domain: Domain,
    pub initial: InitialState,
    pub goal: Vec<Literal>,
    pub horizon: Option<usize>,
    pub knowledge: Knowledge,
    pub sorts: BTreeMap<String, Vec<Term>>,
}

/// A parsed trace file: actions, and optionally every state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFile {
    pub states: Option<Vec<State>>,
    pub actions: Vec<usize>,
}

impl TraceFile {
    /// The trajectory, computing states from `s0` when the file lists only
    /// actions. Fails when an action is not executable or has several
    /// possible outcomes.
    pub fn to_trajectory(&self, d: &Domain, s0: &State) -> Result<Trajectory, String> {
        if let Some(states) = &self.states {
            return Ok(Trajectory { states: states.clone(), actions: self.actions.clone() });
        }
        let mut t = Trajectory::new(s0.clone());
        for &a in &self.actions {
            let next = d.successors(a, t.last());
            match next.len() {
                0 => return Err(format!("{} is not executable at step {}", d.action(a), t.len())),
                1 => {
                    t.states.push(next.into_iter().next().expect("one successor"));
                    t.actions.push(a);
                }
                _ => {
                    return Err(format!(
                        "{} has {} possible outcomes at step {}; list the states explicitly",
                        d.action(a),
                        next.len(),
                        t.len()
                    ))
                }
            }
        }
        Ok(t)
    }
}

/// Prints a trajectory in the trace-file format.
pub fn print_trace(d: &Domain, t: &Trajectory) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for (i, s) in t.states.iter().enumerate() {
        out.push_str(&format!("state {}.\n", d.show_state(s)));
        if let Some(&a) = t.actions.get(i) {
            out.push_str(&format!("action {}.\n", d.action(a)));
        }
    }
    out
}

type Guard = (Term, Tok, Term);

#[derive(Clone, Debug)]
struct RawLit {
    positive: bool,
    atom: Term,
}

impl RawLit {
    fn ground(&self, s: &dyn Fn(&str) -> Option<Term>) -> Literal {
        Literal { fluent: self.atom.substitute(s), positive: self.positive }
    }
}

#[derive(Default)]
struct Signatures {
    // name -> (arity, constants seen at each argument position)
    fluents: HashMap<String, (usize, Vec<BTreeSet<Term>>)>,
    actions: HashMap<String, (usize, Vec<BTreeSet<Term>>)>,
    declared: HashSet<Term>,
}

impl Signatures {
    fn note(map: &mut HashMap<String, (usize, Vec<BTreeSet<Term>>)>, t: &Term) {
        let name = t.name().unwrap_or_default().to_string();
        let e = map.entry(name).or_insert_with(|| (t.arity(), vec![BTreeSet::new(); t.arity()]));
        for (i, a) in t.args().iter().enumerate() {
            if let Some(s) = e.1.get_mut(i) {
                s.insert(a.clone());
            }
        }
    }

    /// Instances of schematic statements that mention an undeclared fluent or
    /// action (such as `on(a, a)`) are dropped.
    fn keeps(&self, m: &HashMap<Arc<str>, Term>, atoms: &[&Term]) -> bool {
        m.is_empty() || atoms.iter().all(|t| self.declared.contains(&t.substitute(&|x| m.get(x).cloned())))
    }

    fn positions(&self, t: &Term) -> Option<&Vec<BTreeSet<Term>>> {
        let n = t.name()?;
        self.fluents.get(n).or_else(|| self.actions.get(n)).map(|e| &e.1)
    }
}

struct Parser {
    cur: Cursor,
    sorts: BTreeMap<String, Vec<Term>>,
    sigs: Signatures,
    procs: HashSet<String>,
}

fn compare(a: &Term, op: &Tok, b: &Term) -> bool {
    match op {
        Tok::Eq => a == b,
        Tok::Ne => a != b,
        Tok::Lt => a < b,
        Tok::Le => a <= b,
        Tok::Gt => a > b,
        Tok::Ge => a >= b,
        _ => false,
    }
}

fn is_formula_keyword(s: &str) -> bool {
    matches!(
        s,
        "and" | "or" | "negation" | "not" | "next" | "always" | "eventually" | "until" | "goal" | "forall" | "exists"
            | "implies"
    )
}

impl Parser {
    fn new(src: &str) -> Result<Parser, SyntaxError> {
        Ok(Parser {
            cur: Cursor::new(tokenize(src)?),
            sorts: BTreeMap::new(),
            sigs: Signatures::default(),
            procs: HashSet::new(),
        })
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        Err(self.cur.error(msg))
    }

    // ---- terms ----

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.cur.peek().clone() {
            Tok::Int(v) => {
                self.cur.next();
                Ok(Term::int(v))
            }
            Tok::Var(v) => {
                self.cur.next();
                Ok(Term::var(&v))
            }
            Tok::Ident(name) => {
                self.cur.next();
                let mut args = Vec::new();
                if self.cur.eat(&Tok::LParen) {
                    loop {
                        args.push(self.term()?);
                        if !self.cur.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.cur.expect(&Tok::RParen)?;
                }
                Ok(Term::app(&name, args))
            }
            t => self.err(format!("expected a term, found '{t}'")),
        }
    }

    /// `{c1, ..., ck}`, `a..b`, or a sort name.
    fn constant_set(&mut self) -> Result<Vec<Term>, SyntaxError> {
        match self.cur.peek().clone() {
            Tok::LBrace => {
                self.cur.next();
                let mut out = Vec::new();
                if !self.cur.eat(&Tok::RBrace) {
                    loop {
                        let t = self.term()?;
                        if !t.is_ground() {
                            return self.err(format!("{t} is not a constant"));
                        }
                        if !out.contains(&t) {
                            out.push(t);
                        }
                        if !self.cur.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.cur.expect(&Tok::RBrace)?;
                }
                Ok(out)
            }
            Tok::Int(a) => {
                self.cur.next();
                self.cur.expect(&Tok::DotDot)?;
                match self.cur.next() {
                    Tok::Int(b) => Ok((a..=b).map(Term::int).collect()),
                    t => self.err(format!("expected an integer, found '{t}'")),
                }
            }
            Tok::Ident(s) => match self.sorts.get(&s) {
                Some(v) => {
                    let v = v.clone();
                    self.cur.next();
                    Ok(v)
                }
                None => self.err(format!("unknown sort {s}")),
            },
            t => self.err(format!("expected a constant set, found '{t}'")),
        }
    }

    fn guards(&mut self) -> Result<Vec<Guard>, SyntaxError> {
        let mut out = Vec::new();
        if !self.cur.eat(&Tok::If) {
            return Ok(out);
        }
        loop {
            let a = self.term()?;
            let op = self.cur.next();
            if !matches!(op, Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge) {
                return self.err(format!("expected a comparison, found '{op}'"));
            }
            let b = self.term()?;
            out.push((a, op, b));
            if !self.cur.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }

    fn raw_lit(&mut self) -> Result<RawLit, SyntaxError> {
        let positive = !self.cur.eat(&Tok::Minus);
        let atom = self.term()?;
        if matches!(atom, Term::Int(_) | Term::Var(_)) {
            return self.err(format!("{atom} is not a fluent"));
        }
        Ok(RawLit { positive, atom })
    }

    fn lit_set(&mut self) -> Result<Vec<RawLit>, SyntaxError> {
        self.cur.expect(&Tok::LBrace)?;
        let mut out = Vec::new();
        if self.cur.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            out.push(self.raw_lit()?);
            if !self.cur.eat(&Tok::Comma) {
                break;
            }
        }
        self.cur.expect(&Tok::RBrace)?;
        Ok(out)
    }

    // ---- schematic expansion ----

    /// All substitutions for the variables of `atoms` that satisfy `guards`.
    /// Variables listed in `fixed` are left alone.
    fn instances(
        &self,
        atoms: &[&Term],
        guards: &[Guard],
        fixed: &[Arc<str>],
    ) -> Result<Vec<HashMap<Arc<str>, Term>>, String> {
        let mut doms: BTreeMap<Arc<str>, Option<BTreeSet<Term>>> = BTreeMap::new();
        for t in atoms {
            let mut vs = Vec::new();
            t.vars_into(&mut vs);
            for v in vs {
                if !fixed.contains(&v) {
                    doms.entry(v).or_insert(None);
                }
            }
            if let Some(pos) = self.sigs.positions(t) {
                for (i, a) in t.args().iter().enumerate() {
                    if let (Term::Var(v), Some(set)) = (a, pos.get(i)) {
                        if fixed.contains(v) {
                            continue;
                        }
                        let e = doms.entry(v.clone()).or_insert(None);
                        *e = Some(match e.take() {
                            None => set.clone(),
                            Some(old) => old.intersection(set).cloned().collect(),
                        });
                    }
                }
            }
        }
        for (a, _, b) in guards {
            for t in [a, b] {
                if let Term::Var(v) = t {
                    if !doms.contains_key(v) && !fixed.contains(v) {
                        return Err(format!("variable {v} occurs only in a comparison"));
                    }
                }
            }
        }
        let mut vars = Vec::new();
        let mut sets = Vec::new();
        for (v, d) in doms {
            match d {
                Some(d) => {
                    vars.push(v);
                    sets.push(d.into_iter().collect::<Vec<_>>());
                }
                None => return Err(format!("cannot infer the range of variable {v}")),
            }
        }
        let mut out = Vec::new();
        let mut idx = vec![0usize; vars.len()];
        if sets.iter().any(|s| s.is_empty()) {
            return Ok(out);
        }
        loop {
            let m: HashMap<Arc<str>, Term> =
                vars.iter().cloned().zip(idx.iter().zip(&sets).map(|(&i, s)| s[i].clone())).collect();
            let sub = |x: &str| m.get(x).cloned();
            if guards.iter().all(|(a, op, b)| compare(&a.substitute(&sub), op, &b.substitute(&sub))) {
                out.push(m);
            }
            let mut k = vars.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < sets[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    fn expand(&self, atoms: &[&Term], guards: &[Guard]) -> Result<Vec<HashMap<Arc<str>, Term>>, SyntaxError> {
        self.instances(atoms, guards, &[]).map_err(|m| self.cur.error(m))
    }

    // ---- declarations ----

    /// `name` or `name(arg, ...)` where each arg is a sort, a constant set, or
    /// `Var : set`; an optional guard filters the instances.
    fn declaration(&mut self) -> Result<Vec<Term>, SyntaxError> {
        let name = self.cur.ident()?;
        if RESERVED.contains(&name.as_str()) {
            return self.err(format!("{name} is a reserved word"));
        }
        let mut params: Vec<(Arc<str>, Vec<Term>)> = Vec::new();
        if self.cur.eat(&Tok::LParen) {
            loop {
                let v: Arc<str> = match self.cur.peek().clone() {
                    Tok::Var(v) if self.cur.peek_at(1) == &Tok::Colon => {
                        self.cur.next();
                        self.cur.next();
                        v.into()
                    }
                    _ => format!("_{}", params.len()).into(),
                };
                let set = self.constant_set()?;
                params.push((v, set));
                if !self.cur.eat(&Tok::Comma) {
                    break;
                }
            }
            self.cur.expect(&Tok::RParen)?;
        }
        let guards = if matches!(self.cur.peek(), Tok::If) { self.guards()? } else { Vec::new() };
        let proc = Procedure { name: name.clone(), params: params.clone(), body: Program::Null };
        let mut out = Vec::new();
        for args in proc.instances() {
            let m: HashMap<&str, &Term> = params.iter().map(|(v, _)| &**v).zip(&args).collect();
            let sub = |x: &str| m.get(x).map(|t| (*t).clone());
            if guards.iter().all(|(a, op, b)| compare(&a.substitute(&sub), op, &b.substitute(&sub))) {
                out.push(Term::app(&name, args));
            }
        }
        Ok(out)
    }

    fn declarations(&mut self) -> Result<Vec<Term>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            out.extend(self.declaration()?);
            if !self.cur.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }

    // ---- formulas ----

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        if self.cur.eat(&Tok::Minus) {
            let atom = self.term()?;
            return Ok(Formula::lit(Literal::neg(atom)));
        }
        if self.cur.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.cur.expect(&Tok::RParen)?;
            return Ok(f);
        }
        let kw = match self.cur.peek() {
            Tok::Ident(s) if is_formula_keyword(s) && self.cur.peek_at(1) == &Tok::LParen => s.clone(),
            _ => {
                let atom = self.term()?;
                if matches!(atom, Term::Int(_) | Term::Var(_)) {
                    return self.err(format!("{atom} is not a fluent"));
                }
                return Ok(Formula::lit(Literal::pos(atom)));
            }
        };
        self.cur.next();
        self.cur.expect(&Tok::LParen)?;
        let f = match kw.as_str() {
            "forall" | "exists" => {
                let v = match self.cur.next() {
                    Tok::Var(v) => v,
                    t => return self.err(format!("expected a variable, found '{t}'")),
                };
                self.cur.expect(&Tok::Comma)?;
                let set = self.constant_set()?;
                self.cur.expect(&Tok::Comma)?;
                let body = Box::new(self.formula()?);
                if kw == "forall" {
                    Formula::Forall(v.into(), set, body)
                } else {
                    Formula::Exists(v.into(), set, body)
                }
            }
            "and" | "or" => {
                let mut parts = vec![self.formula()?];
                while self.cur.eat(&Tok::Comma) {
                    parts.push(self.formula()?);
                }
                if parts.len() < 2 {
                    return self.err(format!("{kw} needs at least two arguments"));
                }
                let mut acc = parts.pop().expect("nonempty");
                while let Some(p) = parts.pop() {
                    acc = if kw == "and" { Formula::and(p, acc) } else { Formula::or(p, acc) };
                }
                acc
            }
            "until" | "implies" => {
                let a = self.formula()?;
                self.cur.expect(&Tok::Comma)?;
                let b = self.formula()?;
                if kw == "until" {
                    Formula::until(a, b)
                } else {
                    Formula::implies(a, b)
                }
            }
            _ => {
                let a = self.formula()?;
                match kw.as_str() {
                    "negation" | "not" => Formula::not(a),
                    "next" => Formula::next(a),
                    "always" => Formula::always(a),
                    "eventually" => Formula::eventually(a),
                    _ => Formula::goal(a),
                }
            }
        };
        self.cur.expect(&Tok::RParen)?;
        Ok(f)
    }

    // ---- programs ----

    fn program(&mut self) -> Result<Program, SyntaxError> {
        let mut alts = vec![self.sequence()?];
        while self.cur.eat(&Tok::Bar) {
            alts.push(self.sequence()?);
        }
        Ok(if alts.len() == 1 { alts.pop().expect("one") } else { Program::Choice(alts) })
    }

    fn sequence(&mut self) -> Result<Program, SyntaxError> {
        let mut parts = vec![self.primary()?];
        while self.cur.eat(&Tok::Semi) {
            parts.push(self.primary()?);
        }
        let mut acc = parts.pop().expect("nonempty");
        while let Some(p) = parts.pop() {
            acc = Program::Seq(Box::new(p), Box::new(acc));
        }
        Ok(acc)
    }

    /// A choice of primaries; used for HTN tasks, where `;` separates tasks
    /// from constraints.
    fn task(&mut self) -> Result<Program, SyntaxError> {
        let mut alts = vec![self.primary()?];
        while self.cur.eat(&Tok::Bar) {
            alts.push(self.primary()?);
        }
        Ok(if alts.len() == 1 { alts.pop().expect("one") } else { Program::Choice(alts) })
    }

    fn primary(&mut self) -> Result<Program, SyntaxError> {
        match self.cur.peek().clone() {
            Tok::Question => {
                self.cur.next();
                Ok(Program::Test(self.formula()?))
            }
            Tok::Minus => Ok(Program::Test(self.formula()?)),
            Tok::LParen | Tok::LBracket => {
                let close = if self.cur.next() == Tok::LParen { Tok::RParen } else { Tok::RBracket };
                let p = self.program()?;
                self.cur.expect(&close)?;
                Ok(p)
            }
            Tok::Ident(s) => match s.as_str() {
                "null" => {
                    self.cur.next();
                    Ok(Program::Null)
                }
                "if" => {
                    self.cur.next();
                    let f = self.formula()?;
                    if !self.cur.eat_ident("then") {
                        return self.err("expected 'then'");
                    }
                    let a = self.primary()?;
                    let b = if self.cur.eat_ident("else") { self.primary()? } else { Program::Null };
                    Ok(Program::If(f, Box::new(a), Box::new(b)))
                }
                "while" => {
                    self.cur.next();
                    let f = self.formula()?;
                    if !self.cur.eat_ident("do") {
                        return self.err("expected 'do'");
                    }
                    Ok(Program::While(f, Box::new(self.primary()?)))
                }
                "pick" => {
                    self.cur.next();
                    self.cur.expect(&Tok::LParen)?;
                    let v = match self.cur.next() {
                        Tok::Var(v) => v,
                        t => return self.err(format!("expected a variable, found '{t}'")),
                    };
                    self.cur.expect(&Tok::Comma)?;
                    let set = self.constant_set()?;
                    self.cur.expect(&Tok::Comma)?;
                    let body = self.program()?;
                    self.cur.expect(&Tok::RParen)?;
                    Ok(Program::Pick(v.into(), set, Box::new(body)))
                }
                "htn" => {
                    self.cur.next();
                    self.htn()
                }
                s if is_formula_keyword(s) => Ok(Program::Test(self.formula()?)),
                _ => {
                    let t = self.term()?;
                    let name = t.name().unwrap_or_default();
                    if self.procs.contains(name) {
                        Ok(Program::Call(t))
                    } else if self.sigs.actions.contains_key(name) {
                        Ok(Program::Action(t))
                    } else if self.sigs.fluents.contains_key(name) {
                        Ok(Program::Test(Formula::lit(Literal::pos(t))))
                    } else {
                        self.err(format!("{name} is not an action, fluent or procedure"))
                    }
                }
            },
            t => self.err(format!("expected a program, found '{t}'")),
        }
    }

    fn htn(&mut self) -> Result<Program, SyntaxError> {
        self.cur.expect(&Tok::LBrace)?;
        let mut tasks = Vec::new();
        let mut labels: HashMap<String, usize> = HashMap::new();
        loop {
            if let (Tok::Ident(l), Tok::Colon) = (self.cur.peek().clone(), self.cur.peek_at(1).clone()) {
                self.cur.next();
                self.cur.next();
                if labels.insert(l.clone(), tasks.len()).is_some() {
                    return self.err(format!("task label {l} used twice"));
                }
            }
            tasks.push(self.task()?);
            if !self.cur.eat(&Tok::Comma) {
                break;
            }
        }
        let mut constraints = Vec::new();
        if self.cur.eat(&Tok::Semi) {
            loop {
                constraints.push(self.htn_constraint(&tasks, &labels)?);
                if !self.cur.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.cur.expect(&Tok::RBrace)?;
        Ok(Program::Htn(Box::new(Htn { tasks, constraints })))
    }

    fn task_ref(&mut self, tasks: &[Program], labels: &HashMap<String, usize>) -> Result<usize, SyntaxError> {
        if let Tok::Ident(l) = self.cur.peek().clone() {
            if let Some(&i) = labels.get(&l) {
                if matches!(self.cur.peek_at(1), Tok::Comma | Tok::RParen) {
                    self.cur.next();
                    return Ok(i);
                }
            }
        }
        let p = self.task()?;
        let hits: Vec<usize> = (0..tasks.len()).filter(|&i| tasks[i] == p).collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => self.err(format!("{p} is not a task of this htn")),
            _ => self.err(format!("{p} matches several tasks; label them")),
        }
    }

    fn htn_constraint(&mut self, tasks: &[Program], labels: &HashMap<String, usize>) -> Result<HtnConstraint, SyntaxError> {
        let mut label = None;
        if let (Tok::Ident(l), Tok::Colon) = (self.cur.peek().clone(), self.cur.peek_at(1).clone()) {
            self.cur.next();
            self.cur.next();
            label = Some(l);
        }
        let kw = self.cur.ident()?;
        self.cur.expect(&Tok::LParen)?;
        let kind = match kw.as_str() {
            "order" => {
                let a = self.task_ref(tasks, labels)?;
                self.cur.expect(&Tok::Comma)?;
                let b = self.task_ref(tasks, labels)?;
                ConstraintKind::Order(a, b)
            }
            "pre" | "precondition" => {
                let f = self.formula()?;
                self.cur.expect(&Tok::Comma)?;
                ConstraintKind::Pre(f, self.task_ref(tasks, labels)?)
            }
            "post" | "postcondition" => {
                let a = self.task_ref(tasks, labels)?;
                self.cur.expect(&Tok::Comma)?;
                ConstraintKind::Post(a, self.formula()?)
            }
            "maintain" => {
                let a = self.task_ref(tasks, labels)?;
                self.cur.expect(&Tok::Comma)?;
                let f = self.formula()?;
                self.cur.expect(&Tok::Comma)?;
                let b = self.task_ref(tasks, labels)?;
                ConstraintKind::Maintain(a, f, b)
            }
            k => return self.err(format!("unknown constraint kind {k}")),
        };
        self.cur.expect(&Tok::RParen)?;
        Ok(HtnConstraint { label, kind })
    }

    // ---- statements ----

    fn prescan_procedures(&mut self) {
        let toks = self.cur.tokens();
        for w in toks.windows(2) {
            if let (Tok::Ident(k), Tok::Ident(n)) = (&w[0].tok, &w[1].tok) {
                if k == "proc" {
                    self.procs.insert(n.clone());
                }
            }
        }
    }

    fn problem(mut self) -> Result<ProblemFile, SyntaxError> {
        self.prescan_procedures();
        let mut b = DomainBuilder::new();
        let mut initial = InitialState::default();
        let mut goal: Vec<Literal> = Vec::new();
        let mut horizon = None;
        let mut temporal: Vec<Formula> = Vec::new();
        let mut table = ProcedureTable::new();
        let mut main: Option<Program> = None;
        while !self.cur.at_eof() {
            let start = self.cur.mark();
            let kw = self.cur.ident()?;
            let at_start = |p: &Parser, msg: String| {
                let t = &p.cur.tokens()[start];
                SyntaxError { line: t.line, col: t.col, message: msg }
            };
            let domain_err = |p: &Parser, e: crate::action::DomainError| at_start(p, e.to_string());
            match kw.as_str() {
                "sort" => {
                    let name = self.cur.ident()?;
                    if RESERVED.contains(&name.as_str()) {
                        return self.err(format!("{name} is a reserved word"));
                    }
                    self.cur.expect(&Tok::Eq)?;
                    let mut set = self.constant_set()?;
                    while self.cur.eat(&Tok::Bar) {
                        for c in self.constant_set()? {
                            if !set.contains(&c) {
                                set.push(c);
                            }
                        }
                    }
                    if self.sorts.insert(name.clone(), set).is_some() {
                        return self.err(format!("sort {name} declared twice"));
                    }
                }
                "fluent" | "action" => {
                    for t in self.declarations()? {
                        if self.procs.contains(t.name().unwrap_or_default()) {
                            return self.err(format!("{} is also a procedure", t.name().unwrap_or_default()));
                        }
                        self.sigs.declared.insert(t.clone());
                        if kw == "fluent" {
                            b.fluent(t.clone()).map_err(|e| domain_err(&self, e))?;
                            Signatures::note(&mut self.sigs.fluents, &t);
                        } else {
                            b.action(t.clone()).map_err(|e| domain_err(&self, e))?;
                            Signatures::note(&mut self.sigs.actions, &t);
                        }
                    }
                }
                "caused" => {
                    self.cur.expect(&Tok::LParen)?;
                    let body = self.lit_set()?;
                    self.cur.expect(&Tok::Comma)?;
                    let head = self.raw_lit()?;
                    self.cur.expect(&Tok::RParen)?;
                    let guards = self.guards()?;
                    let atoms: Vec<&Term> = body.iter().chain([&head]).map(|l| &l.atom).collect();
                    for m in self.expand(&atoms, &guards)? {
                        if !self.sigs.keeps(&m, &atoms) {
                            continue;
                        }
                        let s = |x: &str| m.get(x).cloned();
                        let body: Vec<Literal> = body.iter().map(|l| l.ground(&s)).collect();
                        b.caused(&body, &head.ground(&s)).map_err(|e| domain_err(&self, e))?;
                    }
                }
                "causes" => {
                    self.cur.expect(&Tok::LParen)?;
                    let action = self.term()?;
                    self.cur.expect(&Tok::Comma)?;
                    let effect = self.raw_lit()?;
                    let pre = if self.cur.eat(&Tok::Comma) { self.lit_set()? } else { Vec::new() };
                    self.cur.expect(&Tok::RParen)?;
                    let guards = self.guards()?;
                    let atoms: Vec<&Term> = [&action, &effect.atom].into_iter().chain(pre.iter().map(|l| &l.atom)).collect();
                    for m in self.expand(&atoms, &guards)? {
                        if !self.sigs.keeps(&m, &atoms) {
                            continue;
                        }
                        let s = |x: &str| m.get(x).cloned();
                        let pre: Vec<Literal> = pre.iter().map(|l| l.ground(&s)).collect();
                        b.causes(&action.substitute(&s), &effect.ground(&s), &pre).map_err(|e| domain_err(&self, e))?;
                    }
                }
                "executable" => {
                    self.cur.expect(&Tok::LParen)?;
                    let action = self.term()?;
                    let cond = if self.cur.eat(&Tok::Comma) { self.lit_set()? } else { Vec::new() };
                    self.cur.expect(&Tok::RParen)?;
                    let guards = self.guards()?;
                    let atoms: Vec<&Term> = [&action].into_iter().chain(cond.iter().map(|l| &l.atom)).collect();
                    for m in self.expand(&atoms, &guards)? {
                        if !self.sigs.keeps(&m, &atoms) {
                            continue;
                        }
                        let s = |x: &str| m.get(x).cloned();
                        let cond: Vec<Literal> = cond.iter().map(|l| l.ground(&s)).collect();
                        b.executable(&action.substitute(&s), &cond).map_err(|e| domain_err(&self, e))?;
                    }
                }
                "initially" | "goal" => {
                    self.cur.expect(&Tok::LParen)?;
                    let mut lits = vec![self.raw_lit()?];
                    while self.cur.eat(&Tok::Comma) {
                        lits.push(self.raw_lit()?);
                    }
                    self.cur.expect(&Tok::RParen)?;
                    let guards = self.guards()?;
                    let atoms: Vec<&Term> = lits.iter().map(|l| &l.atom).collect();
                    for m in self.expand(&atoms, &guards)? {
                        if !self.sigs.keeps(&m, &atoms) {
                            continue;
                        }
                        let s = |x: &str| m.get(x).cloned();
                        for l in &lits {
                            let l = l.ground(&s);
                            if kw == "initially" {
                                initial.facts.insert(l);
                            } else {
                                if !self.sigs.fluents.contains_key(l.fluent.name().unwrap_or_default()) {
                                    return self.err(format!("goal mentions unknown fluent {}", l.fluent));
                                }
                                if !goal.contains(&l) {
                                    goal.push(l);
                                }
                            }
                        }
                    }
                }
                "horizon" => match self.cur.next() {
                    Tok::Int(n) if n >= 0 => horizon = Some(n as usize),
                    t => return self.err(format!("expected a horizon, found '{t}'")),
                },
                "temporal" => {
                    let f = self.formula()?;
                    let guards = self.guards()?;
                    let lits = f.literals();
                    let atoms: Vec<&Term> = lits.iter().map(|l| &l.fluent).collect();
                    let free = f.free_vars();
                    let bound: Vec<Arc<str>> = {
                        let mut all = Vec::new();
                        for t in &atoms {
                            t.vars_into(&mut all);
                        }
                        all.into_iter().filter(|v| !free.contains(v)).collect()
                    };
                    let insts = self.instances(&atoms, &guards, &bound).map_err(|m| self.cur.error(m))?;
                    for m in insts {
                        temporal.push(f.substitute(&|x| m.get(x).cloned()));
                    }
                }
                "proc" => {
                    let name = self.cur.ident()?;
                    if RESERVED.contains(&name.as_str()) {
                        return self.err(format!("{name} is a reserved word"));
                    }
                    let mut params = Vec::new();
                    if self.cur.eat(&Tok::LParen) {
                        loop {
                            let v = match self.cur.next() {
                                Tok::Var(v) => v,
                                t => return self.err(format!("expected a parameter variable, found '{t}'")),
                            };
                            self.cur.expect(&Tok::Colon)?;
                            params.push((Arc::from(v.as_str()), self.constant_set()?));
                            if !self.cur.eat(&Tok::Comma) {
                                break;
                            }
                        }
                        self.cur.expect(&Tok::RParen)?;
                    }
                    self.cur.expect(&Tok::Colon)?;
                    let body = self.program()?;
                    table.insert(Procedure { name, params, body }).map_err(|e| at_start(&self, e.to_string()))?;
                }
                "main" => {
                    if main.is_some() {
                        return self.err("main given twice");
                    }
                    main = Some(self.program()?);
                }
                k => {
                    self.cur.reset(start);
                    return self.err(format!("unknown statement keyword {k}"));
                }
            }
            self.cur.expect(&Tok::Dot)?;
        }
        let knowledge = match (temporal.is_empty(), main) {
            (true, None) if table.is_empty() => Knowledge::None,
            (true, None) => return self.err("procedures are declared but there is no main program"),
            (true, Some(main)) => Knowledge::Program(GeneralProgram { table, main }),
            (false, None) if table.is_empty() => {
                let mut acc = temporal.pop().expect("nonempty");
                while let Some(f) = temporal.pop() {
                    acc = Formula::and(f, acc);
                }
                Knowledge::Temporal(acc)
            }
            _ => return self.err("a problem may carry temporal knowledge or a program, not both"),
        };
        b.signature_mut().sorts = self.sorts.clone();
        Ok(ProblemFile { domain: b.build(), initial, goal, horizon, knowledge, sorts: self.sorts })
    }
}

/// Parses a problem file.
pub fn parse_problem(src: &str) -> Result<ProblemFile, SyntaxError> {
    expect_header(src, PROBLEM_HEADER)?;
    Parser::new(src)?.problem()
}

/// Parses a problem body without requiring the header line.
pub fn parse_problem_body(src: &str) -> Result<ProblemFile, SyntaxError> {
    Parser::new(src)?.problem()
}

/// Parses a standalone formula; quantifier ranges must be explicit.
pub fn parse_formula(src: &str) -> Result<Formula, SyntaxError> {
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    if !p.cur.at_eof() {
        return p.err("trailing input after formula");
    }
    Ok(f)
}

/// Parses a literal `f(...)` or `-f(...)`.
pub fn parse_literal(src: &str) -> Result<Literal, SyntaxError> {
    let mut p = Parser::new(src)?;
    let l = p.raw_lit()?;
    if !p.cur.at_eof() {
        return p.err("trailing input after literal");
    }
    Ok(Literal { fluent: l.atom, positive: l.positive })
}

/// Parses a ground term.
pub fn parse_term(src: &str) -> Result<Term, SyntaxError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    if !p.cur.at_eof() {
        return p.err("trailing input after term");
    }
    Ok(t)
}

/// Parses a trace file against `domain`.
pub fn parse_trace(src: &str, domain: &Domain) -> Result<TraceFile, SyntaxError> {
    expect_header(src, TRACE_HEADER)?;
    let mut p = Parser::new(src)?;
    let mut states = Vec::new();
    let mut actions = Vec::new();
    let mut last_was_state = false;
    while !p.cur.at_eof() {
        let kw = p.cur.ident()?;
        match kw.as_str() {
            "state" => {
                if last_was_state {
                    return p.err("two states without an action between them");
                }
                if states.len() != actions.len() {
                    return p.err("states must be given before every action or not at all");
                }
                let lits: Vec<Literal> = p
                    .lit_set()?
                    .into_iter()
                    .map(|l| Literal { fluent: l.atom, positive: l.positive })
                    .collect();
                let s = domain.state_from_literals(&lits).map_err(|v| {
                    let msgs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                    p.cur.error(format!("bad state: {}", msgs.join("; ")))
                })?;
                states.push(s);
                last_was_state = true;
            }
            "action" => {
                let t = p.term()?;
                let a = match domain.action_id(&t) {
                    Some(a) => a,
                    None => return p.err(format!("unknown action {t}")),
                };
                if !states.is_empty() && states.len() != actions.len() + 1 {
                    return p.err("missing state before action");
                }
                actions.push(a);
                last_was_state = false;
            }
            k => return p.err(format!("unknown trace statement {k}")),
        }
        p.cur.expect(&Tok::Dot)?;
    }
    let states = if states.is_empty() {
        None
    } else if states.len() == actions.len() + 1 {
        Some(states)
    } else {
        return p.err("the trace must end with a state");
    };
    Ok(TraceFile { states, actions })
}
