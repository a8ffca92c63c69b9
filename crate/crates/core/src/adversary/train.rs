//! Paired mini-batch training with momentum.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::model::{normalize, Class, ClassifierModel, PARAM_COUNT};
use crate::error::{Error, Result};
use crate::imageio::GrayImage;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: u32,
    pub seed: u64,
    /// Cover/stego pairs per mini-batch.
    pub batch_pairs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Multiplier applied to the learning rate after every epoch.
    pub lr_decay: f64,
}

impl TrainConfig {
    pub fn new(epochs: u32, seed: u64) -> Self {
        Self {
            epochs,
            seed,
            batch_pairs: 16,
            learning_rate: 0.02,
            momentum: 0.9,
            lr_decay: 0.95,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_pairs == 0 || !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!("bad training config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub train_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
    /// 1-based epoch of the returned parameters; 0 means the initialization.
    pub best_epoch: u32,
    pub best_validation_accuracy: f64,
}

/// Paired image set: `covers[i]` and `stegos[i]` belong together.
#[derive(Debug, Clone, Copy)]
pub struct Pairs<'a> {
    pub covers: &'a [GrayImage],
    pub stegos: &'a [GrayImage],
}

impl<'a> Pairs<'a> {
    pub fn new(covers: &'a [GrayImage], stegos: &'a [GrayImage]) -> Result<Self> {
        if covers.is_empty() {
            return Err(Error::InvalidArgument("empty training set".into()));
        }
        if covers.len() != stegos.len() {
            return Err(Error::LengthMismatch(format!(
                "{} covers vs {} stegos",
                covers.len(),
                stegos.len()
            )));
        }
        let dims = covers[0].dims();
        if let Some(bad) = covers.iter().chain(stegos).find(|i| i.dims() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: bad.dims(),
            });
        }
        Ok(Self { covers, stegos })
    }

    pub fn len(&self) -> usize {
        self.covers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covers.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.covers[0].dims()
    }
}

/// Fraction of covers classified cover plus stegos classified stego.
pub fn accuracy(model: &ClassifierModel, covers: &[GrayImage], stegos: &[GrayImage]) -> Result<f64> {
    let total = covers.len() + stegos.len();
    if total == 0 {
        return Err(Error::InvalidArgument("empty evaluation set".into()));
    }
    let hits = |set: &[GrayImage], want: Class| -> Result<usize> {
        set.par_iter()
            .map(|img| model.classify(img).map(|c| usize::from(c == want)))
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().sum())
    };
    Ok((hits(covers, Class::Cover)? + hits(stegos, Class::Stego)?) as f64 / total as f64)
}

fn accuracy_normalized(model: &ClassifierModel, covers: &[Vec<f64>], stegos: &[Vec<f64>]) -> f64 {
    let hits: usize = covers
        .par_iter()
        .map(|x| usize::from(Class::from_phi(model.phi_normalized(x)) == Class::Cover))
        .sum::<usize>()
        + stegos
            .par_iter()
            .map(|x| usize::from(Class::from_phi(model.phi_normalized(x)) == Class::Stego))
            .sum::<usize>();
    hits as f64 / (covers.len() + stegos.len()) as f64
}

/// Trains on `train` and keeps the parameters with the best accuracy on
/// `validation`. Per-pair gradients are summed in a fixed order, so the
/// result does not depend on the thread count.
pub fn train_with_validation(
    train: Pairs<'_>,
    validation: Pairs<'_>,
    cfg: &TrainConfig,
) -> Result<(ClassifierModel, TrainReport)> {
    cfg.validate()?;
    let (w, h) = train.dims();
    if validation.dims() != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            got: validation.dims(),
        });
    }
    let tc: Vec<Vec<f64>> = train.covers.iter().map(normalize).collect();
    let ts: Vec<Vec<f64>> = train.stegos.iter().map(normalize).collect();
    let vc: Vec<Vec<f64>> = validation.covers.iter().map(normalize).collect();
    let vs: Vec<Vec<f64>> = validation.stegos.iter().map(normalize).collect();

    let mut model = ClassifierModel::init(w, h, cfg.seed)?;
    let mut best = model.quantized();
    let mut best_acc = accuracy_normalized(&best, &vc, &vs);
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(cfg.epochs as usize);
    let mut velocity = vec![0.0; PARAM_COUNT];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut lr = cfg.learning_rate;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng::stream(cfg.seed, &[rng::TAG_TRAIN, u64::from(epoch)]));
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_pairs) {
            let parts: Vec<(Vec<f64>, f64)> = batch
                .par_iter()
                .map(|&i| {
                    let mut g = vec![0.0; PARAM_COUNT];
                    let l = model.accumulate_param_gradient(&tc[i], Class::Cover, &mut g)
                        + model.accumulate_param_gradient(&ts[i], Class::Stego, &mut g);
                    (g, l)
                })
                .collect();
            let scale = 1.0 / (2 * batch.len()) as f64;
            let mut grad = vec![0.0; PARAM_COUNT];
            for (g, l) in &parts {
                loss_sum += l;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            for ((p, v), g) in model.params_mut().iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - lr * g * scale;
                *p += *v;
            }
        }
        lr *= cfg.lr_decay;
        let snapshot = model.quantized();
        let acc = accuracy_normalized(&snapshot, &vc, &vs);
        history.push(EpochStats {
            train_loss: loss_sum / (2 * train.len()) as f64,
            validation_accuracy: acc,
        });
        if acc > best_acc {
            best_acc = acc;
            best_epoch = epoch;
            best = snapshot;
        }
    }
    best.meta.epochs = cfg.epochs;
    best.meta.seed = cfg.seed;
    Ok((
        best,
        TrainReport {
            history,
            best_epoch,
            best_validation_accuracy: best_acc,
        },
    ))
}

/// Holds out every tenth pair (seeded) for validation, then trains.
pub fn train_classifier(
    covers: &[GrayImage],
    stegos: &[GrayImage],
    epochs: u32,
    seed: u64,
) -> Result<ClassifierModel> {
    let pairs = Pairs::new(covers, stegos)?;
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two pairs to hold out validation".into()));
    }
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    idx.shuffle(&mut rng::stream(seed, &[rng::TAG_SPLIT]));
    let n_val = (pairs.len() / 10).max(1);
    let pick = |ids: &[usize], set: &[GrayImage]| ids.iter().map(|&i| set[i].clone()).collect::<Vec<_>>();
    let (val_ids, train_ids) = idx.split_at(n_val);
    let (tc, ts) = (pick(train_ids, covers), pick(train_ids, stegos));
    let (vc, vs) = (pick(val_ids, covers), pick(val_ids, stegos));
    let (model, _) = train_with_validation(
        Pairs::new(&tc, &ts)?,
        Pairs::new(&vc, &vs)?,
        &TrainConfig::new(epochs, seed),
    )?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::TrainingMeta;
    use crate::imageio::generate_cover;

    fn covers(n: usize, base: u64) -> Vec<GrayImage> {
        (0..n).map(|i| generate_cover(base + i as u64, 16, 16).unwrap()).collect()
    }

    #[test]
    fn nothing_to_learn_on_identical_sets() {
        let c = covers(40, 0);
        let v = covers(100, 500);
        let cfg = TrainConfig::new(3, 1);
        let (m, rep) = train_with_validation(Pairs::new(&c, &c).unwrap(), Pairs::new(&v, &v).unwrap(), &cfg).unwrap();
        // identical inputs always get identical labels, so exactly half are right
        assert_eq!(rep.best_validation_accuracy, 0.5);
        assert_eq!(accuracy(&m, &v, &v).unwrap(), 0.5);
    }

    #[test]
    fn same_seed_same_bytes() {
        let c = covers(12, 0);
        let s: Vec<GrayImage> = c
            .iter()
            .map(|img| {
                let px = img.pixels().iter().map(|&p| if p < 255 { p + 1 } else { p }).collect();
                GrayImage::new(16, 16, px).unwrap()
            })
            .collect();
        let a = train_classifier(&c, &s, 2, 5).unwrap();
        let b = train_classifier(&c, &s, 2, 5).unwrap();
        assert_eq!(a.encode(), b.encode());
        assert_eq!(a.meta, TrainingMeta { epochs: 2, seed: 5 });
    }

    #[test]
    fn input_errors() {
        let c = covers(3, 0);
        assert!(train_classifier(&[], &[], 1, 0).is_err());
        assert!(train_classifier(&c, &c[..2], 1, 0).is_err());
        let big = vec![generate_cover(1, 20, 20).unwrap(); 3];
        assert!(train_classifier(&c, &big, 1, 0).is_err());
        assert!(accuracy(&ClassifierModel::zeros(16, 16).unwrap(), &[], &[]).is_err());
    }
}
