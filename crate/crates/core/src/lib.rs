//! Budget-preserving rescaling of CNN architectures to larger input sizes.
//!
//! Given a network and a larger square input side, the solvers enumerate
//! modified architectures whose parameter count or FLOPS over a fixed scope
//! equal the original's. [`verify`] re-derives every such claim
//! independently.
//!
//! ```
//! use netrescale::{solve, Approach, BudgetMode, ConvLayer, DenseLayer, EnumRanges, Layer, NetworkSpec, TensorShape};
//!
//! let net = NetworkSpec::new(
//!     "small",
//!     TensorShape::new(28, 1),
//!     vec![ConvLayer::new(10, 5).into(), Layer::FLATTEN, DenseLayer::new(10).into()],
//! );
//! let out = solve(&net, Approach::II, 56, &EnumRanges::default(), BudgetMode::Params).unwrap();
//! assert!(out.iter().all(|c| c.deltas.params == 0 && c.deltas.flops == 0));
//! ```

pub mod arch;
pub mod cli;
pub mod cost;
pub mod error;
pub mod search;
pub mod solvers;
pub mod verify;

pub use arch::{
    layer_output_shape, propagate_shapes, validate, window_output_size, ConvLayer, DenseLayer, Layer, NetworkSpec,
    PoolKind, PoolLayer, TensorShape, ValidationReport, Violation,
};
pub use cost::{cost_report, CostReport, LayerCost};
pub use error::{Error, Result};
pub use search::{sample_candidates, sample_original_networks, sweep, DatasetProfile, SearchConfig, SweepResult};
pub use solvers::{
    solve, Approach, BudgetMode, Deltas, EnumRanges, Interval, Scope, Solution, SolutionCandidate,
};
pub use verify::{oracle_enumerate, verify_candidate, VerificationReport};
