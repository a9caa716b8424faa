//! Action language B, temporal, procedural and HTN control knowledge, their
//! logic-program encodings, a ground stable-model solver, and a planner that
//! searches both directly and through the encodings.

pub mod action;
pub mod bits;
pub mod corpus;
pub mod encoder;
pub mod formula;
pub mod ground;
pub mod lexer;
pub mod planner;
pub mod program;
pub mod solver;
pub mod syntax;
pub mod term;

pub use action::{Domain, DomainBuilder, InitialState, Lit, Literal, State, Trajectory};
pub use formula::Formula;
pub use program::{GeneralProgram, Program, ProgramGraph};
pub use syntax::{Knowledge, ProblemFile};
pub use term::Term;
