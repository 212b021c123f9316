use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::graver::GraverSet;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Two objects that must agree in size do not.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    /// An integer operation left the representable range.
    Overflow,
    /// A search exceeded its configured budget.
    BudgetExceeded { what: &'static str, limit: u64 },
    /// Graver completion ran out of room; the partial set is attached.
    CompletionBudget(Box<GraverSet>),
    /// The vector is not in the kernel of the matrix it was paired with.
    NotInKernel,
    /// A Graver decomposition stalled because no basis element conforms.
    IncompleteBasis,
    /// No bounded decomposition was found at the given cap.
    InfeasibleAtCap { cap: i64 },
    /// A caller-side precondition does not hold.
    Precondition(String),
    /// A lower-bound certificate was contradicted by this kernel vector.
    CounterexampleFound(Vec<i64>),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                context,
                expected,
                found,
            } => write!(f, "dimension mismatch in {context}: expected {expected}, found {found}"),
            Error::Overflow => write!(f, "integer overflow"),
            Error::BudgetExceeded { what, limit } => {
                write!(f, "budget exceeded: {what} (limit {limit})")
            }
            Error::CompletionBudget(partial) => write!(
                f,
                "completion budget exceeded with {} elements collected",
                partial.elements.len()
            ),
            Error::NotInKernel => write!(f, "vector is not in the kernel"),
            Error::IncompleteBasis => write!(f, "decomposition stalled: basis is incomplete"),
            Error::InfeasibleAtCap { cap } => {
                write!(f, "no bounded decomposition found with cap {cap}")
            }
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::CounterexampleFound(v) => write!(f, "counterexample found: {v:?}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

pub(crate) fn add(a: i64, b: i64) -> Result<i64> {
    a.checked_add(b).ok_or(Error::Overflow)
}

pub(crate) fn mul(a: i64, b: i64) -> Result<i64> {
    a.checked_mul(b).ok_or(Error::Overflow)
}
