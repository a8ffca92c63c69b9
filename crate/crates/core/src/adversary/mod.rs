//! Target steganalyzer and iteratively intensified adversarial re-embedding
//! of a single sub-lattice.

mod model;
mod train;

pub use model::{
    normalize, Class, ClassifierModel, TrainingMeta, ARCH_TAG, MODEL_MAGIC, MODEL_VERSION, PARAM_COUNT,
};
pub use train::{
    accuracy, train_classifier, train_with_validation, EpochStats, Pairs, TrainConfig, TrainReport,
};

use crate::coder::BitMessage;
use crate::costmodel::CostMap;
use crate::error::{Error, Result};
use crate::imageio::GrayImage;
use crate::rng;
use crate::syncdir::{embed_segment, random_start, traversal_order, EmbedConfig, SubLatticeId};

/// What the attack needs from a classifier.
pub trait Steganalyzer: Sync {
    /// Probability of the cover class.
    fn phi(&self, img: &GrayImage) -> Result<f64>;

    /// Gradient of the cross-entropy against `label`, in pixel units.
    fn input_gradient(&self, img: &GrayImage, label: Class) -> Result<Vec<f64>>;

    fn classify(&self, img: &GrayImage) -> Result<Class> {
        self.phi(img).map(Class::from_phi)
    }
}

impl Steganalyzer for ClassifierModel {
    fn phi(&self, img: &GrayImage) -> Result<f64> {
        ClassifierModel::phi(self, img)
    }

    fn input_gradient(&self, img: &GrayImage, label: Class) -> Result<Vec<f64>> {
        ClassifierModel::input_gradient(self, img, label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvConfig {
    pub delta_gamma: f64,
    pub gamma_max: f64,
    pub seed: u64,
}

impl AdvConfig {
    pub const DEFAULT_DELTA_GAMMA: f64 = 0.1;
    pub const DEFAULT_GAMMA_MAX: f64 = 10.0;

    pub fn new(seed: u64) -> Self {
        Self {
            delta_gamma: Self::DEFAULT_DELTA_GAMMA,
            gamma_max: Self::DEFAULT_GAMMA_MAX,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.delta_gamma > 0.0
            && self.gamma_max > 0.0
            && self.gamma_max.is_finite()
            && self.delta_gamma <= self.gamma_max;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "need 0 < delta_gamma <= gamma_max, got {} and {}",
                self.delta_gamma, self.gamma_max
            )));
        }
        Ok(())
    }

    /// Number of intensities tried per sub-lattice: k = 1, 2, ... while
    /// k * delta_gamma < gamma_max.
    pub fn steps(&self) -> usize {
        let mut k = 0;
        while ((k + 1) as f64) * self.delta_gamma < self.gamma_max {
            k += 1;
        }
        k
    }

    pub fn max_reembeds(&self) -> usize {
        4 * self.steps()
    }
}

/// Raises the cost of moving along the loss gradient and lowers the cost of
/// moving against it by `f = 1 + k * delta_gamma`. Derived from `adjusted`
/// every time; wet entries stay wet.
pub fn adversarial_costs(adjusted: &CostMap, gradient: &[f64], k: usize, delta_gamma: f64) -> Result<CostMap> {
    if k < 1 {
        return Err(Error::InvalidArgument("adversarial step k starts at 1".into()));
    }
    if !(delta_gamma > 0.0) || !delta_gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("delta_gamma {delta_gamma} must be positive")));
    }
    if gradient.len() != adjusted.len() {
        return Err(Error::LengthMismatch(format!(
            "gradient of {} entries for {} costs",
            gradient.len(),
            adjusted.len()
        )));
    }
    let f = 1.0 + k as f64 * delta_gamma;
    let mut out = adjusted.clone();
    let scale = |c: f64, up: bool| {
        if adjusted.is_wet(c) {
            c
        } else if up {
            (c * f).min(adjusted.wet_value)
        } else {
            c / f
        }
    };
    for (i, &g) in gradient.iter().enumerate() {
        if g > 0.0 {
            out.rho_plus[i] = scale(adjusted.rho_plus[i], true);
            out.rho_minus[i] = scale(adjusted.rho_minus[i], false);
        } else if g < 0.0 {
            out.rho_plus[i] = scale(adjusted.rho_plus[i], false);
            out.rho_minus[i] = scale(adjusted.rho_minus[i], true);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    /// Z: equal to the input stego unless the attack succeeded by
    /// re-embedding.
    pub adversarial_stego: GrayImage,
    pub succeeded: bool,
    /// Intensity of the successful candidate; 0 when the stego already passed
    /// as cover, `None` on failure.
    pub gamma_used: Option<f64>,
    pub sublattices_tried: usize,
    pub reembeds: usize,
    /// Sub-lattice whose re-embedding fooled the classifier.
    pub modified: Option<SubLatticeId>,
    pub phi_before: f64,
    pub phi_after: f64,
}

/// Re-embeds one sub-lattice at a time with costs pushed against the loss
/// gradient, increasing the intensity until the classifier outputs cover.
/// The gradient is taken once, at the stego.
pub fn ite_syn_attack<M: Steganalyzer + ?Sized>(
    model: &M,
    cover: &GrayImage,
    message: &BitMessage,
    stego: &GrayImage,
    adjusted: &CostMap,
    cfg: &AdvConfig,
    embed_cfg: &EmbedConfig,
) -> Result<AttackOutcome> {
    cfg.validate()?;
    embed_cfg.validate()?;
    cover.check_dims(stego.width(), stego.height())?;
    adjusted.check_image(cover)?;
    let (w, h) = cover.dims();
    if message.len() != embed_cfg.message_len(w, h) {
        return Err(Error::LengthMismatch(format!(
            "message of {} bits does not match payload rate {}",
            message.len(),
            embed_cfg.payload_rate
        )));
    }

    let phi_before = model.phi(stego)?;
    let mut outcome = AttackOutcome {
        adversarial_stego: stego.clone(),
        succeeded: false,
        gamma_used: None,
        sublattices_tried: 0,
        reembeds: 0,
        modified: None,
        phi_before,
        phi_after: phi_before,
    };
    if Class::from_phi(phi_before) == Class::Cover {
        outcome.succeeded = true;
        outcome.gamma_used = Some(0.0);
        return Ok(outcome);
    }

    let gradient = model.input_gradient(stego, Class::Cover)?;
    let segments = message.split_even(4);
    let order = traversal_order(random_start(cfg.seed, rng::TAG_ATTACK));
    let mut z = stego.clone();
    for lattice in order.iter() {
        outcome.sublattices_tried += 1;
        let li = lattice.loop_index();
        let indices = lattice.indices(w, h);
        for k in 1..=cfg.steps() {
            let costs = adversarial_costs(adjusted, &gradient, k, cfg.delta_gamma)?;
            let seed = rng::derive_seed(cfg.seed, &[rng::TAG_ATTACK, li as u64, k as u64]);
            let values = embed_segment(
                cover,
                &indices,
                &segments[li],
                &costs,
                embed_cfg.coder_mode,
                &embed_cfg.stc,
                seed,
            )?;
            for (&i, &v) in indices.iter().zip(&values) {
                z.pixels_mut()[i] = v;
            }
            outcome.reembeds += 1;
            let phi = model.phi(&z)?;
            if Class::from_phi(phi) == Class::Cover {
                outcome.adversarial_stego = z;
                outcome.succeeded = true;
                outcome.gamma_used = Some(k as f64 * cfg.delta_gamma);
                outcome.modified = Some(lattice);
                outcome.phi_after = phi;
                return Ok(outcome);
            }
        }
        z = stego.clone();
    }
    Ok(outcome)
}
