//! Adaptive KIK quantum error mitigation.
//!
//! Noisy dynamics are simulated in Liouville space (dense superoperators,
//! row-major vectorization). Mitigated expectation values are linear
//! combinations of folded circuits `K (K_I K)^m` with Taylor or
//! noise-adapted coefficients.

pub mod bounds;
pub mod coefficients;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod liouville;
pub mod noise;
pub mod scenarios;

pub use bounds::BoundReport;
pub use coefficients::{CoefficientKind, CoefficientSet, GChoice};
pub use dynamics::{Propagator, PulseSchedule, Segment};
pub use error::{KikError, Result};
pub use liouville::{HilbertOp, PauliTransferMatrix, SuperOperator, VecObservable, VecState};
pub use noise::{DriftProfile, NoiseKind, NoiseSpec};
pub use scenarios::{ScenarioConfig, ScenarioKind, ScenarioResult};
