//! Anytime approximate model counting over randomly grown partial CCDDs.

pub mod cnf;
pub mod count;
pub mod driver;
pub mod exact;
pub mod kernel;
pub mod oracle;
pub mod pccdd;
pub mod sampler;
pub mod structure;

pub use cnf::{Cnf, Lit};
pub use count::Count;
