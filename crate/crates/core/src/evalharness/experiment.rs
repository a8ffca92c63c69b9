use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{evaluate_classifier, gamma_cdf, gamma_grid, sign_test_p, AttackReport, DetectionReport};
use crate::adversary::{ite_syn_attack, train_with_validation, AttackOutcome, ClassifierModel, Pairs, TrainConfig, TrainReport};
use crate::coder::BitMessage;
use crate::error::{Error, Result};
use crate::imageio::{format_manifest, generate_cover, load_image, save_image, DatasetSplit, GrayImage, ManifestEntry, SplitKind};
use crate::rng;
use crate::syncdir::{direction_agreement, embed_plain, embed_synchronized, EmbedConfig, SyncEmbedding};

/// Everything produced for one cover.
#[derive(Debug, Clone)]
pub struct ImageRecord {
    pub id: usize,
    pub split: SplitKind,
    pub cover: GrayImage,
    pub message: BitMessage,
    pub embed_cfg: EmbedConfig,
    pub sync: SyncEmbedding,
    pub plain: SyncEmbedding,
}

#[derive(Debug, Clone)]
pub struct AttackRecord {
    pub id: usize,
    pub outcome: AttackOutcome,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub target_best_epoch: u32,
    pub target_validation_accuracy: f64,
    /// Target on test covers against CMD stegos.
    pub detection_sync: DetectionReport,
    /// Target on test covers against non-CMD stegos.
    pub detection_plain: DetectionReport,
    /// Target on test covers against adversarial stegos.
    pub detection_adversarial: DetectionReport,
    /// Retrained classifier on test covers against adversarial stegos.
    pub detection_retrained: Option<DetectionReport>,
    pub attack: AttackReport,
    pub cdf: Vec<(f64, f64)>,
    pub agreement_sync: f64,
    pub agreement_plain: f64,
    /// Covers where CMD agreement beat the plain baseline, out of
    /// `agreement_trials` covers without a tie.
    pub agreement_wins: usize,
    pub agreement_trials: usize,
    pub agreement_p_value: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub split: DatasetSplit,
    pub images: Vec<ImageRecord>,
    pub target: ClassifierModel,
    pub target_training: TrainReport,
    /// Attacks on the test images, in id order.
    pub attacks: Vec<AttackRecord>,
    /// Attacks on training and validation images, used for retraining.
    pub retrain_attacks: Vec<AttackRecord>,
    pub retrained: Option<(ClassifierModel, TrainReport)>,
    pub summary: ExperimentSummary,
}

impl ExperimentRun {
    pub fn image(&self, id: usize) -> &ImageRecord {
        &self.images[id]
    }
}

pub fn run_experiment_file(path: impl AsRef<Path>) -> Result<ExperimentRun> {
    let text = fs::read_to_string(path).map_err(|e| Error::at("config")(e.into()))?;
    run_experiment(&ExperimentConfig::parse(&text)?)
}

/// Runs the whole pipeline and writes its artifacts under `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let run = execute(cfg)?;
        write_outputs(&run).map_err(Error::at("write"))?;
        Ok(run)
    })
}

fn load_covers(cfg: &ExperimentConfig) -> Result<Vec<GrayImage>> {
    let n = cfg.total_images();
    let Some(dir) = &cfg.cover_dir else {
        return (0..n)
            .into_par_iter()
            .map(|i| {
                let seed = rng::derive_seed(cfg.master_seed, &[rng::TAG_COVER, i as u64]);
                generate_cover(seed, cfg.width, cfg.height)
            })
            .collect();
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.len() < n {
        return Err(Error::Config(format!(
            "{} holds {} PGM files, the split needs {n}",
            dir.display(),
            paths.len()
        )));
    }
    paths.truncate(n);
    paths
        .par_iter()
        .map(|p| {
            let img = load_image(p)?;
            img.check_dims(cfg.width, cfg.height)?;
            Ok(img)
        })
        .collect()
}

fn execute(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    let master = cfg.master_seed;
    let covers = load_covers(cfg).map_err(Error::at("covers"))?;
    let split = DatasetSplit::new(
        cfg.n_train,
        cfg.n_val,
        cfg.n_test,
        rng::derive_seed(master, &[rng::TAG_SPLIT]),
    );

    let images: Vec<ImageRecord> = covers
        .into_par_iter()
        .enumerate()
        .map(|(id, cover)| {
            let xi = cfg.scheme.compute(&cover);
            let embed_cfg = cfg.embed_config(rng::derive_seed(master, &[rng::TAG_EMBED, id as u64]));
            let (w, h) = cover.dims();
            let message = BitMessage::random(
                embed_cfg.message_len(w, h),
                rng::derive_seed(master, &[rng::TAG_MESSAGE, id as u64]),
            );
            let sync = embed_synchronized(&cover, &message, &xi, &embed_cfg)?;
            let plain = embed_plain(&cover, &message, &xi, &embed_cfg)?;
            Ok(ImageRecord {
                id,
                split: split.kind_of(id).expect("split covers every id"),
                cover,
                message,
                embed_cfg,
                sync,
                plain,
            })
        })
        .collect::<Result<_>>()
        .map_err(Error::at("embed"))?;

    let gather = |ids: &[usize], f: &dyn Fn(&ImageRecord) -> GrayImage| -> Vec<GrayImage> {
        ids.iter().map(|&i| f(&images[i])).collect()
    };
    let cover_of = |r: &ImageRecord| r.cover.clone();
    let sync_of = |r: &ImageRecord| r.sync.stego.clone();
    let (train_c, train_s) = (gather(&split.train, &cover_of), gather(&split.train, &sync_of));
    let (val_c, val_s) = (gather(&split.validation, &cover_of), gather(&split.validation, &sync_of));
    let (test_c, test_s) = (gather(&split.test, &cover_of), gather(&split.test, &sync_of));
    let test_plain = gather(&split.test, &|r| r.plain.stego.clone());

    let train_cfg = TrainConfig::new(cfg.epochs, rng::derive_seed(master, &[rng::TAG_TRAIN, 0]));
    let (target, target_training) = train_with_validation(
        Pairs::new(&train_c, &train_s)?,
        Pairs::new(&val_c, &val_s)?,
        &train_cfg,
    )
    .map_err(Error::at("train"))?;

    let detection_sync = evaluate_classifier(&target, &test_c, &test_s)?;
    let detection_plain = evaluate_classifier(&target, &test_c, &test_plain)?;

    let attack = |ids: &[usize]| -> Result<Vec<AttackRecord>> {
        ids.par_iter()
            .map(|&id| {
                let r = &images[id];
                let adv = cfg.adv_config(rng::derive_seed(master, &[rng::TAG_ATTACK, id as u64]));
                let start = Instant::now();
                let outcome = ite_syn_attack(
                    &target,
                    &r.cover,
                    &r.message,
                    &r.sync.stego,
                    &r.sync.final_costs,
                    &adv,
                    &r.embed_cfg,
                )?;
                let seconds = if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 };
                Ok(AttackRecord { id, outcome, seconds })
            })
            .collect()
    };
    let mut test_ids = split.test.clone();
    test_ids.sort_unstable();
    let attacks = attack(&test_ids).map_err(Error::at("attack"))?;

    let by_id = |recs: &[AttackRecord], ids: &[usize]| -> Vec<GrayImage> {
        ids.iter()
            .map(|id| {
                let k = recs.binary_search_by_key(id, |r| r.id).expect("attacked id");
                recs[k].outcome.adversarial_stego.clone()
            })
            .collect()
    };
    let test_adv = by_id(&attacks, &split.test);
    let detection_adversarial = evaluate_classifier(&target, &test_c, &test_adv)?;

    let (retrain_attacks, retrained) = if cfg.retrain {
        let mut ids: Vec<usize> = split.train.iter().chain(&split.validation).copied().collect();
        ids.sort_unstable();
        let recs = attack(&ids).map_err(Error::at("attack"))?;
        let train_z = by_id(&recs, &split.train);
        let val_z = by_id(&recs, &split.validation);
        // adversarial pairs are added to the original ones
        let tc: Vec<GrayImage> = train_c.iter().chain(&train_c).cloned().collect();
        let ts: Vec<GrayImage> = train_s.iter().chain(&train_z).cloned().collect();
        let vc: Vec<GrayImage> = val_c.iter().chain(&val_c).cloned().collect();
        let vs: Vec<GrayImage> = val_s.iter().chain(&val_z).cloned().collect();
        let retrain_cfg = TrainConfig::new(cfg.epochs, rng::derive_seed(master, &[rng::TAG_TRAIN, 1]));
        let model = train_with_validation(Pairs::new(&tc, &ts)?, Pairs::new(&vc, &vs)?, &retrain_cfg)
            .map_err(Error::at("retrain"))?;
        (recs, Some(model))
    } else {
        (Vec::new(), None)
    };
    let detection_retrained = match &retrained {
        Some((m, _)) => Some(evaluate_classifier(m, &test_c, &test_adv)?),
        None => None,
    };

    let outcomes: Vec<AttackOutcome> = attacks.iter().map(|r| r.outcome.clone()).collect();
    let seconds: Vec<f64> = attacks.iter().map(|r| r.seconds).collect();
    let adv_cfg = cfg.adv_config(0);
    let report = AttackReport::new(&outcomes, &seconds, cfg.delta_gamma)?;
    let cdf = gamma_cdf(&outcomes, &gamma_grid(&adv_cfg));

    let mut rates = (0.0, 0.0, 0usize);
    let (mut wins, mut trials) = (0, 0);
    for r in &images {
        if let (Some((a, _)), Some((b, _))) = (
            direction_agreement(&r.sync.changes),
            direction_agreement(&r.plain.changes),
        ) {
            rates = (rates.0 + a, rates.1 + b, rates.2 + 1);
            if a != b {
                trials += 1;
                wins += usize::from(a > b);
            }
        }
    }
    let denom = rates.2.max(1) as f64;

    let summary = ExperimentSummary {
        target_best_epoch: target_training.best_epoch,
        target_validation_accuracy: target_training.best_validation_accuracy,
        detection_sync,
        detection_plain,
        detection_adversarial,
        detection_retrained,
        attack: report,
        cdf,
        agreement_sync: rates.0 / denom,
        agreement_plain: rates.1 / denom,
        agreement_wins: wins,
        agreement_trials: trials,
        agreement_p_value: sign_test_p(wins, trials),
    };
    Ok(ExperimentRun {
        config: cfg.clone(),
        split,
        images,
        target,
        target_training,
        attacks,
        retrain_attacks,
        retrained,
        summary,
    })
}

fn attack_csv(run: &ExperimentRun, recs: &[AttackRecord]) -> String {
    let mut s = String::from("id,payload,mode,succeeded,gamma_used,reembeds,phi_before,phi_after,seconds\n");
    for r in recs {
        let o = &r.outcome;
        let gamma = o.gamma_used.map(|g| format!("{g:.4}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:.6},{:.6},{:.4}",
            r.id,
            run.config.payload_rate,
            run.config.coder.as_str(),
            o.succeeded,
            gamma,
            o.reembeds,
            o.phi_before,
            o.phi_after,
            r.seconds
        );
    }
    s
}

fn detection_csv(sum: &ExperimentSummary) -> String {
    let mut s = String::from("classifier,stego_set,p_fa,p_md,p_e,n_cover,n_stego\n");
    let mut row = |clf: &str, set: &str, d: &DetectionReport| {
        let _ = writeln!(s, "{clf},{set},{:.6},{:.6},{:.6},{},{}", d.p_fa, d.p_md, d.p_e, d.n_cover, d.n_stego);
    };
    row("target", "plain", &sum.detection_plain);
    row("target", "cmd", &sum.detection_sync);
    row("target", "adversarial", &sum.detection_adversarial);
    if let Some(d) = &sum.detection_retrained {
        row("retrained", "adversarial", d);
    }
    s
}

fn summary_text(run: &ExperimentRun) -> String {
    let s = &run.summary;
    let a = &s.attack;
    let mut t = String::new();
    let _ = writeln!(t, "target best epoch: {}", s.target_best_epoch);
    let _ = writeln!(t, "target validation accuracy: {:.4}", s.target_validation_accuracy);
    let _ = writeln!(t, "target test accuracy (cmd stegos): {:.4}", s.detection_sync.accuracy());
    let _ = writeln!(t, "attack success rate: {:.2}% ({}/{})", a.success_rate, a.succeeded, a.total);
    if run.config.timing {
        let _ = writeln!(
            t,
            "attack seconds min/max/mean: {:.4}/{:.4}/{:.4}",
            a.min_seconds, a.max_seconds, a.mean_seconds
        );
    }
    let _ = writeln!(t, "target P_E on adversarial stegos: {:.4}", s.detection_adversarial.p_e);
    if let Some(d) = &s.detection_retrained {
        let _ = writeln!(t, "retrained P_E on adversarial stegos: {:.4}", d.p_e);
    }
    let _ = writeln!(
        t,
        "same-sign neighbour rate cmd/plain: {:.4}/{:.4} (wins {}/{}, p = {:.3e})",
        s.agreement_sync, s.agreement_plain, s.agreement_wins, s.agreement_trials, s.agreement_p_value
    );
    t
}

fn write_outputs(run: &ExperimentRun) -> Result<()> {
    let out = &run.config.out_dir;
    for sub in ["covers", "stegos", "adversarial"] {
        fs::create_dir_all(out.join(sub))?;
    }
    fs::write(out.join("config.txt"), run.config.to_text())?;
    let entries: Vec<ManifestEntry> = run
        .images
        .iter()
        .map(|r| ManifestEntry {
            id: r.id,
            path: PathBuf::from(format!("covers/{:05}.pgm", r.id)),
            split: r.split,
        })
        .collect();
    fs::write(out.join("manifest.txt"), format_manifest(&entries))?;
    run.images
        .par_iter()
        .map(|r| save_image(&r.cover, out.join(format!("covers/{:05}.pgm", r.id))))
        .collect::<Result<()>>()?;
    run.attacks
        .par_iter()
        .map(|a| {
            let r = &run.images[a.id];
            save_image(&r.sync.stego, out.join(format!("stegos/{:05}.pgm", a.id)))?;
            save_image(&a.outcome.adversarial_stego, out.join(format!("adversarial/{:05}.pgm", a.id)))
        })
        .collect::<Result<()>>()?;
    run.target.save(out.join("target.stgm"))?;
    if let Some((m, _)) = &run.retrained {
        m.save(out.join("retrained.stgm"))?;
    }
    fs::write(out.join("attack.csv"), attack_csv(run, &run.attacks))?;
    if !run.retrain_attacks.is_empty() {
        fs::write(out.join("attack_train.csv"), attack_csv(run, &run.retrain_attacks))?;
    }
    fs::write(out.join("detection.csv"), detection_csv(&run.summary))?;
    let mut cdf = String::from("gamma,cumulative_success_percent\n");
    for (g, p) in &run.summary.cdf {
        let _ = writeln!(cdf, "{g:.4},{p:.4}");
    }
    fs::write(out.join("gamma_cdf.csv"), cdf)?;
    let mut training = String::from("model,epoch,train_loss,validation_accuracy\n");
    let mut hist = |name: &str, rep: &TrainReport| {
        for (i, e) in rep.history.iter().enumerate() {
            let _ = writeln!(training, "{name},{},{:.6},{:.6}", i + 1, e.train_loss, e.validation_accuracy);
        }
    };
    hist("target", &run.target_training);
    if let Some((_, rep)) = &run.retrained {
        hist("retrained", rep);
    }
    fs::write(out.join("training.csv"), training)?;
    fs::write(out.join("summary.txt"), summary_text(run))?;
    Ok(())
}
