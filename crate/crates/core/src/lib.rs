//! Trace Markov-chain approximations of one-dimensional reflected diffusions.
//!
//! A diffusion on `[0, 1]` is described by a scale function `s` and a speed
//! measure `m`. Restricting its Dirichlet form to a finite grid gives a
//! nearest-neighbour chain with conductances `1 / (2 |s(x) - s(y)|)` and state
//! masses taken from `m`. This crate builds those chains, solves their
//! resolvents and semigroups, simulates them exactly, and measures how fast
//! they approach the diffusion.
//!
//! ```
//! use tracechain::{ChainSpec, Partition, ScaleFunction, SpeedMeasure};
//!
//! let chain = ChainSpec::build(
//!     &Partition::uniform(4).unwrap(),
//!     &ScaleFunction::Identity,
//!     &SpeedMeasure::lebesgue(),
//! )
//! .unwrap();
//! assert_eq!(chain.conductances, vec![2.0, 2.0, 2.0]);
//! assert_eq!(chain.rates, vec![8.0, 16.0, 16.0, 8.0]);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod linalg;
pub mod mosco;
pub mod partition;
pub mod reference;
pub mod scale;
pub mod simulator;
pub mod speed;
pub mod testfn;

pub use chain::{hitting_prob_right, ChainSpec, GridFunction};
pub use error::{Error, Result};
pub use linalg::{capacity, TridiagonalOperator};
pub use partition::{Partition, PartitionKind};
pub use scale::{FatCantorScale, RemovalSchedule, ScaleFunction};
pub use speed::{Atom, SpeedMeasure};
pub use testfn::{continuous_energy, Integrand, TestFunction};
