//! Ground logic programs: normal rules, constraints and restricted choice
//! rules over interned atoms, with a line-oriented text format.
//!
//! ```text
//! %! aspplan ground v1
//! holds(up(l1),0).
//! occ(open(l1),0) :- possible(open(l1),0), not nocc(open(l1),0).
//! :- holds(f,1), holds(neg(f),1).
//! 1 {begin(p,a,0,0,1); begin(p,a,1,0,1)} 1 :- trans(p,0,1).
//! ```

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexSet;

use crate::lexer::{expect_header, tokenize, Cursor, SyntaxError, Tok};
use crate::term::Term;

pub const GROUND_HEADER: &str = "%! aspplan ground v1";

pub type Atom = u32;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Head {
    Atom(Atom),
    /// A constraint.
    Bottom,
    /// `lower {atoms} upper`; only `lower <= 1`, `upper = 1` is supported.
    Choice { lower: u32, upper: u32, atoms: Vec<Atom> },
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Rule {
    pub head: Head,
    pub pos: Vec<Atom>,
    pub neg: Vec<Atom>,
}

impl Rule {
    pub fn fact(a: Atom) -> Rule {
        Rule { head: Head::Atom(a), pos: vec![], neg: vec![] }
    }

    pub fn normal(h: Atom, pos: Vec<Atom>, neg: Vec<Atom>) -> Rule {
        Rule { head: Head::Atom(h), pos, neg }
    }

    pub fn constraint(pos: Vec<Atom>, neg: Vec<Atom>) -> Rule {
        Rule { head: Head::Bottom, pos, neg }
    }

    pub fn is_choice(&self) -> bool {
        matches!(self.head, Head::Choice { .. })
    }

    /// Atoms the head can make true.
    pub fn head_atoms(&self) -> &[Atom] {
        match &self.head {
            Head::Atom(a) => std::slice::from_ref(a),
            Head::Bottom => &[],
            Head::Choice { atoms, .. } => atoms,
        }
    }
}

/// Which group of encoding rules produced a rule.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum RuleFamily {
    // domain facts and action-theory rules
    TimeFact,
    FluentFact,
    ActionFact,
    LiteralDef,
    ContraryDef,
    Initial,
    Possible,
    Dynamic,
    Static,
    Occurrence,
    NonOccurrence,
    OccChoice,
    OccChoiceGuard,
    Inertia,
    Consistency,
    Goal,
    GoalConstraint,
    // formulas
    FormulaFact,
    FormulaLiteral,
    HfLiteral,
    HfAnd,
    HfOr,
    HfNegation,
    HfUntil,
    HfAlways,
    HfEventually,
    HfNext,
    HfDuring,
    HfGoal,
    TemporalConstraint,
    // programs
    ProgramFact,
    TransAction,
    TransFormula,
    TransSequence,
    TransChoice,
    TransIfTrue,
    TransIfFalse,
    TransWhileTrue,
    TransWhileFalse,
    TransPick,
    TransNull,
    TraceConstraint,
    // htn
    TransHtn,
    Between,
    HtnBegin,
    HtnEnd,
    HtnUsed,
    HtnNotUsed,
    HtnOverlap,
    NokEndBeforeBegin,
    NokNotTrace,
    NokUnused,
    NokOverlap,
    NokOrder,
    NokMaintain,
    NokPrecondition,
    NokPostcondition,
    NokZeroInside,
    HtnChoiceNormal,
    // other sources
    Closure,
    ChoiceExpansion,
    Input,
}

impl RuleFamily {
    pub fn name(self) -> String {
        let s = format!("{self:?}");
        let mut out = String::new();
        for (i, c) in s.chars().enumerate() {
            if c.is_ascii_uppercase() {
                if i > 0 {
                    out.push('_');
                }
                out.push(c.to_ascii_lowercase());
            } else {
                out.push(c);
            }
        }
        out
    }
}

/// A ground program: an atom table plus rules, each tagged with its family.
#[derive(Clone, Debug, Default)]
pub struct GroundProgram {
    atoms: IndexSet<Term>,
    rules: Vec<Rule>,
    families: Vec<RuleFamily>,
    seen: std::collections::HashSet<Rule>,
}

impl PartialEq for GroundProgram {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.rules == other.rules && self.families == other.families
    }
}

impl GroundProgram {
    pub fn new() -> GroundProgram {
        GroundProgram::default()
    }

    pub fn atom(&mut self, t: Term) -> Atom {
        self.atoms.insert_full(t).0 as Atom
    }

    pub fn atom_id(&self, t: &Term) -> Option<Atom> {
        self.atoms.get_index_of(t).map(|i| i as Atom)
    }

    pub fn atom_term(&self, a: Atom) -> &Term {
        &self.atoms[a as usize]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &IndexSet<Term> {
        &self.atoms
    }

    /// Adds a rule unless an identical one is present. Bodies are sorted.
    pub fn add(&mut self, mut r: Rule, family: RuleFamily) -> bool {
        r.pos.sort_unstable();
        r.pos.dedup();
        r.neg.sort_unstable();
        r.neg.dedup();
        if let Head::Choice { atoms, .. } = &mut r.head {
            atoms.sort_unstable();
            atoms.dedup();
        }
        if !self.seen.insert(r.clone()) {
            return false;
        }
        self.rules.push(r);
        self.families.push(family);
        true
    }

    pub fn fact(&mut self, t: Term, family: RuleFamily) -> Atom {
        let a = self.atom(t);
        self.add(Rule::fact(a), family);
        a
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn family(&self, i: usize) -> RuleFamily {
        self.families[i]
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Families present, with rule counts.
    pub fn family_counts(&self) -> std::collections::BTreeMap<RuleFamily, usize> {
        let mut m = std::collections::BTreeMap::new();
        for f in &self.families {
            *m.entry(*f).or_insert(0) += 1;
        }
        m
    }

    /// Drops every rule of `family`.
    pub fn remove_family(&mut self, family: RuleFamily) {
        let mut keep_r = Vec::new();
        let mut keep_f = Vec::new();
        for (r, f) in self.rules.drain(..).zip(self.families.drain(..)) {
            if f == family {
                self.seen.remove(&r);
            } else {
                keep_r.push(r);
                keep_f.push(f);
            }
        }
        self.rules = keep_r;
        self.families = keep_f;
    }

    pub fn has_choice(&self) -> bool {
        self.rules.iter().any(Rule::is_choice)
    }

    pub fn show_atom(&self, a: Atom) -> String {
        self.atom_term(a).to_string()
    }

    pub fn show_rule(&self, r: &Rule) -> String {
        let mut body: Vec<String> = r.pos.iter().map(|&a| self.show_atom(a)).collect();
        body.sort();
        let mut neg: Vec<String> = r.neg.iter().map(|&a| format!("not {}", self.show_atom(a))).collect();
        neg.sort();
        body.extend(neg);
        let head = match &r.head {
            Head::Atom(a) => self.show_atom(*a),
            Head::Bottom => String::new(),
            Head::Choice { lower, upper, atoms } => {
                let mut xs: Vec<String> = atoms.iter().map(|&a| self.show_atom(a)).collect();
                xs.sort();
                format!("{lower} {{{}}} {upper}", xs.join("; "))
            }
        };
        match (head.is_empty(), body.is_empty()) {
            (false, true) => format!("{head}."),
            (true, _) => format!(":- {}.", body.join(", ")),
            (false, false) => format!("{head} :- {}.", body.join(", ")),
        }
    }

    /// The text form: rules grouped by family, each group sorted, so the
    /// output does not depend on emission order.
    pub fn to_text(&self) -> String {
        let mut groups: std::collections::BTreeMap<RuleFamily, BTreeSet<String>> = Default::default();
        for (r, f) in self.rules.iter().zip(&self.families) {
            groups.entry(*f).or_default().insert(self.show_rule(r));
        }
        let mut out = format!("{GROUND_HEADER}\n");
        for (f, lines) in groups {
            out.push_str(&format!("% {}\n", f.name()));
            for l in lines {
                out.push_str(&l);
                out.push('\n');
            }
        }
        out
    }

    /// Atoms sorted by their printed form.
    pub fn show_atoms(&self, atoms: &BTreeSet<Atom>) -> Vec<String> {
        let mut v: Vec<String> = atoms.iter().map(|&a| self.show_atom(a)).collect();
        v.sort();
        v
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn ground_term(c: &mut Cursor) -> Result<Term, SyntaxError> {
    let name = match c.next() {
        Tok::Int(v) => return Ok(Term::int(v)),
        Tok::Ident(s) | Tok::Var(s) => s,
        t => return Err(c.error(format!("expected an atom, found '{t}'"))),
    };
    let mut args = Vec::new();
    if c.eat(&Tok::LParen) {
        loop {
            args.push(ground_term(c)?);
            if !c.eat(&Tok::Comma) {
                break;
            }
        }
        c.expect(&Tok::RParen)?;
    }
    Ok(Term::app(&name, args))
}

/// Parses the text form. The header line is optional; family comments are
/// ignored and every rule is tagged [`RuleFamily::Input`].
pub fn parse_ground(src: &str) -> Result<GroundProgram, SyntaxError> {
    if src.trim_start().starts_with("%!") {
        expect_header(src, GROUND_HEADER)?;
    }
    let mut c = Cursor::new(tokenize(src)?);
    let mut g = GroundProgram::new();
    while !c.at_eof() {
        let head = match c.peek().clone() {
            Tok::If => Head::Bottom,
            Tok::Int(lower) if matches!(c.peek_at(1), Tok::LBrace) => {
                c.next();
                c.next();
                let mut atoms = Vec::new();
                if !c.eat(&Tok::RBrace) {
                    loop {
                        let t = ground_term(&mut c)?;
                        atoms.push(g.atom(t));
                        if !(c.eat(&Tok::Semi) || c.eat(&Tok::Comma)) {
                            break;
                        }
                    }
                    c.expect(&Tok::RBrace)?;
                }
                let upper = match c.next() {
                    Tok::Int(u) => u,
                    t => return Err(c.error(format!("expected an upper bound, found '{t}'"))),
                };
                if lower < 0 || upper < 0 {
                    return Err(c.error("negative bound"));
                }
                Head::Choice { lower: lower as u32, upper: upper as u32, atoms }
            }
            _ => {
                let t = ground_term(&mut c)?;
                Head::Atom(g.atom(t))
            }
        };
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        if c.eat(&Tok::If) {
            loop {
                if c.eat_ident("not") {
                    let t = ground_term(&mut c)?;
                    neg.push(g.atom(t));
                } else {
                    let t = ground_term(&mut c)?;
                    pos.push(g.atom(t));
                }
                if !c.eat(&Tok::Comma) {
                    break;
                }
            }
        } else if head == Head::Bottom {
            return Err(c.error("expected ':-'"));
        }
        c.expect(&Tok::Dot)?;
        g.add(Rule { head, pos, neg }, RuleFamily::Input);
    }
    Ok(g)
}
