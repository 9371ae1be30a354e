//! Compiles finite table constraints into minimal propagation rules and
//! solves constraint satisfaction problems with them.
//!
//! Tables are explicit relations ([`ConstraintTable`]). From a table the
//! generators in [`generation`] derive every minimal valid equality rule
//! (`x=0, y=1 -> z != 1`) or membership rule (`x in {+,-} -> z != l`).
//! [`propagation`] applies rules to a [`Csp`] until a fixpoint, [`search`]
//! adds labeling, and [`export`] prints rules as text or as CHR
//! propagation rules.

pub mod corpus;
pub mod csp;
pub mod error;
pub mod export;
pub mod format;
pub mod generation;
pub mod oracle;
pub mod propagation;
pub mod rules;
pub mod search;
pub mod table;
pub mod value;

pub use csp::{Csp, ConstraintInstance};
pub use error::{Error, Result};
pub use generation::{GenConfig, RuleLibrary};
pub use rules::{Rule, RuleKind, RuleSet};
pub use table::{AtomicFormula, ConstraintTable, Permutation};
pub use value::{Domain, Value, ValueSet};
