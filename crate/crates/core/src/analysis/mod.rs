//! Diagnostics that mirror the regret analysis: the key partition of the
//! oracle sequence, the per-bin regret decomposition, regret measurements
//! and power-law fits.

mod decompose;
mod partition;
mod regret;
mod scaling;

pub use decompose::{regret_decompose, DecompositionRow};
pub use partition::{build_partition, Bin, Partition};
pub use regret::{best_fixed_point, dynamic_regret, interval_static_regret};
pub use scaling::{fit_scaling_exponent, ScalingFit};
