//! Cost-based adaptive image steganography: HILL and S-UNIWARD costs,
//! syndrome-trellis coding, embedding with synchronized modification
//! directions over 2x2 sub-lattices, and adversarial cost modulation
//! against a differentiable steganalyzer.

pub mod adversary;
pub mod coder;
pub mod costmodel;
pub mod error;
pub mod evalharness;
pub mod imageio;
pub mod rng;
pub mod syncdir;

pub use adversary::{AdvConfig, AttackOutcome, Class, ClassifierModel, Steganalyzer};
pub use coder::{BitMessage, ChangeMap, CoderMode, ProbabilityMap, StcParams};
pub use costmodel::{CostMap, CostScheme, WET_VALUE};
pub use error::{Error, Result};
pub use evalharness::{DetectionReport, ExperimentConfig};
pub use imageio::{DatasetSplit, GrayImage};
pub use syncdir::{EmbedConfig, Neighborhood, SubLatticeId, SyncEmbedding, TraversalOrder};
