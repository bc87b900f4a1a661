//! Co-safe LTL: syntax, canonical form, progression, closure and a
//! finite-trace oracle.

mod closure;
mod formula;
mod oracle;
mod parse;
mod progress;
mod symbols;

pub use closure::{Closure, DEFAULT_CLOSURE_CAP};
pub use formula::{implies, DisplayFormula, Formula};
pub use oracle::trace_oracle;
pub use parse::{parse, ParseError};
pub use progress::{progress, progress_verdict, Verdict};
pub use symbols::{SymbolEntry, SymbolId, SymbolTable, TruthAssignment};
