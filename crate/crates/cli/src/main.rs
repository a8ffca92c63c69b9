use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use adstego::adversary::{ite_syn_attack, train_classifier, AdvConfig, ClassifierModel};
use adstego::coder::{BitMessage, ChangeMap, CoderMode, StcParams};
use adstego::costmodel::{load_costs, save_costs, CostMap, CostScheme};
use adstego::evalharness::{evaluate_classifier, run_experiment, ExperimentConfig};
use adstego::imageio::{format_manifest, generate_cover, load_image, save_image, DatasetSplit, GrayImage, ManifestEntry};
use adstego::rng::derive_seed;
use adstego::syncdir::{adjust_costs, embed_synchronized, extract_synchronized, EmbedConfig, Neighborhood};

/// Adaptive steganography with synchronized modification directions and
/// adversarial cost modulation.
#[derive(Parser)]
#[command(name = "adstego", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic covers and a split manifest.
    GenDataset(GenDataset),
    /// Compute a cost map for a cover.
    Cost(CostCmd),
    /// Embed a message with synchronized modification directions.
    Embed(EmbedCmd),
    /// Recover a message embedded with the STC coder.
    Extract(ExtractCmd),
    /// Train the target classifier on paired cover and stego directories.
    TrainClf(TrainCmd),
    /// Adversarially re-embed one stego until the classifier calls it cover.
    Attack(AttackCmd),
    /// Report detection errors of a classifier.
    Evaluate(EvaluateCmd),
    /// Run the full train / attack / retrain pipeline from a config file.
    Experiment(ExperimentCmd),
}

#[derive(Args)]
struct GenDataset {
    /// Output directory for NNNNN.pgm files and manifest.txt.
    #[arg(long)]
    out: PathBuf,
    /// Training covers
    #[arg(long, default_value_t = 2000)]
    train: usize,
    /// Validation covers
    #[arg(long, default_value_t = 200)]
    val: usize,
    /// Test covers
    #[arg(long, default_value_t = 500)]
    test: usize,
    /// Cover width in pixels (even)
    #[arg(long, default_value_t = 64)]
    width: usize,
    /// Cover height in pixels (even)
    #[arg(long, default_value_t = 64)]
    height: usize,
    /// Seed for cover content and the split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CostCmd {
    /// Cover PGM
    #[arg(long)]
    cover: PathBuf,
    /// hill or suniward.
    #[arg(long, default_value = "hill")]
    scheme: CostScheme,
    /// Output COST file.
    #[arg(long)]
    out: PathBuf,
}

/// Shared embedding flags.
#[derive(Args)]
struct EmbedFlags {
    /// Message length in bits.
    #[arg(long)]
    bits: usize,
    /// Payload in bits per pixel; defaults to bits / pixels and must agree
    /// with --bits when given.
    #[arg(long)]
    payload: Option<f64>,
    /// sim (probabilistic simulator) or stc (syndrome-trellis codes).
    #[arg(long, default_value = "stc")]
    coder: CoderMode,
    /// CMD factor; costs in the neighbours' direction are divided by it.
    #[arg(long, default_value_t = EmbedConfig::DEFAULT_BETA)]
    beta: f64,
    /// four (4-connected) or diagonal neighbour set for cost adjustment.
    #[arg(long, default_value = "four")]
    neighborhood: Neighborhood,
    /// Cost scheme used when --costs is not given.
    #[arg(long, default_value = "hill")]
    scheme: CostScheme,
    /// Initial cost map (COST file) instead of computing one.
    #[arg(long)]
    costs: Option<PathBuf>,
}

impl EmbedFlags {
    fn validate(&self) -> Result<()> {
        if !(self.beta > 1.0) {
            bail!("--beta must exceed 1, got {}", self.beta);
        }
        if let Some(p) = self.payload {
            if !(0.0..3f64.log2()).contains(&p) {
                bail!("--payload {p} outside [0, log2 3)");
            }
        }
        Ok(())
    }

    fn config(&self, cover: &GrayImage, seed: u64) -> Result<EmbedConfig> {
        let n = cover.len();
        let rate = match self.payload {
            Some(p) => {
                let expected = (p * n as f64).round() as usize;
                if expected != self.bits {
                    bail!("--payload {p} on {n} pixels means {expected} bits, but --bits is {}", self.bits);
                }
                p
            }
            None => self.bits as f64 / n as f64,
        };
        let cfg = EmbedConfig {
            beta: self.beta,
            neighborhood: self.neighborhood,
            ..EmbedConfig::new(rate, seed, self.coder)
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn initial_costs(&self, cover: &GrayImage) -> Result<CostMap> {
        match &self.costs {
            Some(p) => load_costs(p).with_context(|| format!("loading costs {}", p.display())),
            None => Ok(self.scheme.compute(cover)),
        }
    }
}

#[derive(Args)]
struct EmbedCmd {
    /// Cover PGM
    #[arg(long)]
    cover: PathBuf,
    /// Message file, bits read MSB-first.
    #[arg(long)]
    message: PathBuf,
    #[command(flatten)]
    flags: EmbedFlags,
    /// Seed for the start sub-lattice and the simulator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output stego PGM.
    #[arg(long)]
    out: PathBuf,
    /// Also write the final adjusted cost map here.
    #[arg(long)]
    dump_costs: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractCmd {
    /// Stego PGM
    #[arg(long)]
    stego: PathBuf,
    /// Message length in bits
    #[arg(long)]
    bits: usize,
    /// Write the message bytes here; prints the bits otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainCmd {
    /// Directory of cover PGMs.
    #[arg(long)]
    covers: PathBuf,
    /// Directory of stego PGMs, paired with covers by file name.
    #[arg(long)]
    stegos: PathBuf,
    /// Training epochs
    #[arg(long, default_value_t = 12)]
    epochs: u32,
    /// Seed for initialization, shuffling and the validation hold-out
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output STGM model file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AttackCmd {
    /// Target classifier (STGM file).
    #[arg(long)]
    model: PathBuf,
    /// Cover PGM the stego was embedded into
    #[arg(long)]
    cover: PathBuf,
    /// Stego PGM produced by embed
    #[arg(long)]
    stego: PathBuf,
    /// Message file embedded in the stego
    #[arg(long)]
    message: PathBuf,
    #[command(flatten)]
    flags: EmbedFlags,
    /// Intensity step.
    #[arg(long, default_value_t = AdvConfig::DEFAULT_DELTA_GAMMA)]
    delta_gamma: f64,
    /// Intensity ceiling (exclusive).
    #[arg(long, default_value_t = AdvConfig::DEFAULT_GAMMA_MAX)]
    gamma_max: f64,
    /// Seed for the start sub-lattice and candidate re-embeddings.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output adversarial stego PGM.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateCmd {
    /// Classifier (STGM file)
    #[arg(long)]
    model: PathBuf,
    /// Directory of cover PGMs
    #[arg(long)]
    covers: PathBuf,
    /// Directory of stego PGMs
    #[arg(long)]
    stegos: PathBuf,
}

#[derive(Args)]
struct ExperimentCmd {
    /// key = value config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides out_dir.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn read_message(path: &Path, bits: usize) -> Result<BitMessage> {
    let bytes = fs::read(path).with_context(|| format!("reading message {}", path.display()))?;
    Ok(BitMessage::from_bytes(&bytes, bits)?)
}

fn load(path: &Path) -> Result<GrayImage> {
    load_image(path).with_context(|| format!("loading {}", path.display()))
}

fn pgm_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no PGM files in {}", dir.display());
    }
    Ok(files)
}

/// Loads `covers/NAME.pgm` and `stegos/NAME.pgm` pairs.
fn load_pairs(covers: &Path, stegos: &Path) -> Result<(Vec<GrayImage>, Vec<GrayImage>)> {
    let mut c = Vec::new();
    let mut s = Vec::new();
    for path in pgm_files(covers)? {
        let name = path.file_name().expect("listed file");
        let twin = stegos.join(name);
        if !twin.is_file() {
            bail!("no stego {} for cover {}", twin.display(), path.display());
        }
        c.push(load(&path)?);
        s.push(load(&twin)?);
    }
    Ok((c, s))
}

fn gen_dataset(a: GenDataset) -> Result<()> {
    let split = DatasetSplit::new(a.train, a.val, a.test, a.seed);
    if split.is_empty() {
        bail!("empty dataset");
    }
    fs::create_dir_all(&a.out)?;
    let mut entries = Vec::with_capacity(split.len());
    for id in 0..split.len() {
        let img = generate_cover(derive_seed(a.seed, &[id as u64]), a.width, a.height)?;
        let name = format!("{id:05}.pgm");
        save_image(&img, a.out.join(&name))?;
        entries.push(ManifestEntry {
            id,
            path: PathBuf::from(name),
            split: split.kind_of(id).expect("id in split"),
        });
    }
    fs::write(a.out.join("manifest.txt"), format_manifest(&entries))?;
    println!("wrote {} covers to {}", entries.len(), a.out.display());
    Ok(())
}

fn cost(a: CostCmd) -> Result<()> {
    let cover = load(&a.cover)?;
    save_costs(&a.scheme.compute(&cover), &a.out)?;
    Ok(())
}

fn embed(a: EmbedCmd) -> Result<()> {
    a.flags.validate()?;
    let cover = load(&a.cover)?;
    let cfg = a.flags.config(&cover, a.seed)?;
    let message = read_message(&a.message, a.flags.bits)?;
    let xi = a.flags.initial_costs(&cover)?;
    let out = embed_synchronized(&cover, &message, &xi, &cfg).context("embed")?;
    save_image(&out.stego, &a.out)?;
    if let Some(p) = &a.dump_costs {
        save_costs(&out.final_costs, p)?;
    }
    let order: Vec<String> = out.order.iter().map(|s| s.to_string()).collect();
    println!(
        "embedded {} bits, {} changes, order {}",
        message.len(),
        out.changes.count_changes(),
        order.join(" ")
    );
    Ok(())
}

fn extract(a: ExtractCmd) -> Result<()> {
    let stego = load(&a.stego)?;
    let msg = extract_synchronized(&stego, a.bits, &StcParams::production(1, 2)?).context("extract")?;
    match &a.out {
        Some(p) => fs::write(p, msg.to_bytes())?,
        None => {
            let s: String = msg.bits().iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
            println!("{s}");
        }
    }
    Ok(())
}

fn train(a: TrainCmd) -> Result<()> {
    if a.epochs == 0 {
        bail!("--epochs must be positive");
    }
    let (covers, stegos) = load_pairs(&a.covers, &a.stegos)?;
    let model = train_classifier(&covers, &stegos, a.epochs, a.seed).context("train")?;
    model.save(&a.out)?;
    let r = evaluate_classifier(&model, &covers, &stegos)?;
    println!("trained on {} pairs; training-set accuracy {:.4}", covers.len(), r.accuracy());
    Ok(())
}

fn attack(a: AttackCmd) -> Result<()> {
    a.flags.validate()?;
    let adv = AdvConfig {
        delta_gamma: a.delta_gamma,
        gamma_max: a.gamma_max,
        seed: a.seed,
    };
    adv.validate()?;
    let model = ClassifierModel::load(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let cover = load(&a.cover)?;
    let stego = load(&a.stego)?;
    let cfg = a.flags.config(&cover, a.seed)?;
    let message = read_message(&a.message, a.flags.bits)?;
    let xi = a.flags.initial_costs(&cover)?;
    let changes = ChangeMap::between(&cover, &stego).context("stego is not a +-1 change of the cover")?;
    let adjusted = adjust_costs(&xi, &changes, cfg.beta, cfg.neighborhood)?;
    let o = ite_syn_attack(&model, &cover, &message, &stego, &adjusted, &adv, &cfg).context("attack")?;
    save_image(&o.adversarial_stego, &a.out)?;
    let gamma = o.gamma_used.map(|g| format!("{g:.4}")).unwrap_or_else(|| "none".into());
    println!(
        "succeeded={} gamma_used={gamma} reembeds={} sublattices_tried={} phi_before={:.6} phi_after={:.6}",
        o.succeeded, o.reembeds, o.sublattices_tried, o.phi_before, o.phi_after
    );
    Ok(())
}

fn evaluate(a: EvaluateCmd) -> Result<()> {
    let model = ClassifierModel::load(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let covers: Vec<GrayImage> = pgm_files(&a.covers)?.iter().map(|p| load(p)).collect::<Result<_>>()?;
    let stegos: Vec<GrayImage> = pgm_files(&a.stegos)?.iter().map(|p| load(p)).collect::<Result<_>>()?;
    let r = evaluate_classifier(&model, &covers, &stegos)?;
    println!(
        "p_fa={:.6} p_md={:.6} p_e={:.6} n_cover={} n_stego={}",
        r.p_fa, r.p_md, r.p_e, r.n_cover, r.n_stego
    );
    Ok(())
}

fn experiment(a: ExperimentCmd) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(d) = a.out_dir {
        cfg.out_dir = d;
    }
    run_experiment(&cfg)?;
    print!("{}", fs::read_to_string(cfg.out_dir.join("summary.txt"))?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenDataset(a) => gen_dataset(a),
        Command::Cost(a) => cost(a),
        Command::Embed(a) => embed(a),
        Command::Extract(a) => extract(a),
        Command::TrainClf(a) => train(a),
        Command::Attack(a) => attack(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
