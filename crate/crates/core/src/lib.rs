//! Strongly adaptive online learning for dynamic regret.
//!
//! Follow-the-Leading-History (and its pruned variant) over FTL, OGD and
//! ONS base learners, the exact offline path-length-constrained oracle for
//! squared losses, a tolerance-certified oracle for general smooth losses,
//! and the analysis tools (key partition, regret decomposition, scaling
//! fits) used to check the `n^{1/3} C^{2/3}` rate empirically.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the common case.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod datagen;
pub mod error;
pub mod io;
pub mod learners;
pub mod loss;
pub mod meta;
pub mod oracle;
pub mod protocol;
pub mod scalar;

pub use analysis::{
    build_partition, dynamic_regret, fit_scaling_exponent, regret_decompose, DecompositionRow, Partition,
};
pub use datagen::{gen_comparator, gen_labels, gen_paper_example, NoiseSpec, SequenceProfile};
pub use error::{Error, Result};
pub use loss::{fit_glm_constants, glm_curvature, CurvatureParams, GlmConstants, GlmLink, Loss};
pub use meta::{run_protocol, Flh, MetaKind, ProtocolConfig, Pruning};
pub use oracle::{
    brute_force_oracle, fused_lasso_1d, kkt_extract, oracle_general_loss, tv_constrained_solve,
    KktReport, OracleSolution,
};
pub use protocol::{total_variation, ComparatorSequence, DecisionBox, ExperimentTrace, RoundRecord};
pub use scalar::Scalar;

pub type Loss64 = Loss<f64>;
pub type Loss32 = Loss<f32>;
pub type Flh64 = Flh<f64>;
pub type Flh32 = Flh<f32>;
pub type Curvature64 = CurvatureParams<f64>;
pub type Trace64 = ExperimentTrace<f64>;
pub type Comparator64 = ComparatorSequence<f64>;
pub type OracleSolution64 = OracleSolution<f64>;
pub type OracleSolution32 = OracleSolution<f32>;
pub type Partition64 = Partition<f64>;
