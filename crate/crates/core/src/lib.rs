//! Exact machinery for block-structured integer programs.
//!
//! The crate covers 4-block and 3-block n-fold constraint matrices, Graver
//! bases under the conformal order, Steinitz rearrangement, merging
//! partitions, bounded kernel decompositions, and an augmentation solver.
//! It is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

mod error;
mod lattice;
mod rational;

pub mod blockmat;
pub mod dp;
pub mod graver;
pub mod instances;
pub mod merging;
pub mod solver;
pub mod steinitz;
pub mod structure;

pub use blockmat::{
    apply, assemble, block_apply, in_kernel_h0, BlockProduct, Bound, BrickVector, Constraint,
    FourBlockSpec,
    IPInstance, MatrixKind, SmallMatrix,
};
pub use error::{Error, Result};
pub use graver::{
    conforms, graver_complete, graver_decompose, graver_enumerate, sign_compatible, GraverMethod,
    GraverOptions, GraverSet,
};
pub use lattice::{for_each_box_solution, kernel_basis, solve_integer_system};
pub use rational::Ratio;
