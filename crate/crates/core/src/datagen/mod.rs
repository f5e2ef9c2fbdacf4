//! Seeded generators. All randomness comes from ChaCha8 seeded with a `u64`,
//! so outputs are identical across platforms for a given seed.

mod comparator;
mod example;
mod noise;

pub use comparator::{gen_comparator, ProfileKind, SequenceProfile};
pub use example::{gen_paper_example, PaperExample};
pub use noise::{gen_labels, NoiseKind, NoiseSpec};
