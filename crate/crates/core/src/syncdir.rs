//! Embedding with synchronized modification directions over the four 2x2
//! sub-lattices, with directional cost discounts between passes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::coder::{
    sample_changes, solve_lambda, ternary_embed_stc, ternary_extract_stc, BitMessage, ChangeMap,
    CoderMode, StcParams,
};
use crate::costmodel::CostMap;
use crate::error::{Error, Result};
use crate::imageio::GrayImage;
use crate::rng;

/// Sub-lattice of pixels with 1-based row residue `a` and column residue `b`
/// modulo 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubLatticeId {
    a: u8,
    b: u8,
}

impl SubLatticeId {
    /// The closed embedding loop, which is also the fixed segment order.
    pub const LOOP: [SubLatticeId; 4] = [
        SubLatticeId { a: 1, b: 1 },
        SubLatticeId { a: 1, b: 2 },
        SubLatticeId { a: 2, b: 2 },
        SubLatticeId { a: 2, b: 1 },
    ];

    pub fn new(a: u8, b: u8) -> Result<Self> {
        if !(1..=2).contains(&a) || !(1..=2).contains(&b) {
            return Err(Error::InvalidArgument(format!("sub-lattice ({a},{b}) outside {{1,2}}^2")));
        }
        Ok(Self { a, b })
    }

    pub fn a(self) -> u8 {
        self.a
    }

    pub fn b(self) -> u8 {
        self.b
    }

    /// Position in [`SubLatticeId::LOOP`].
    pub fn loop_index(self) -> usize {
        Self::LOOP.iter().position(|&s| s == self).expect("all four ids are in the loop")
    }

    /// Whether zero-based `(row, col)` belongs to this sub-lattice.
    #[inline]
    pub fn contains(self, row: usize, col: usize) -> bool {
        row % 2 == usize::from(self.a - 1) && col % 2 == usize::from(self.b - 1)
    }

    /// Flat row-major pixel indices of this sub-lattice, in its own row-major
    /// order.
    pub fn indices(self, width: usize, height: usize) -> Vec<usize> {
        let (r0, c0) = (usize::from(self.a - 1), usize::from(self.b - 1));
        (r0..height)
            .step_by(2)
            .flat_map(|r| (c0..width).step_by(2).map(move |c| r * width + c))
            .collect()
    }
}

impl fmt::Display for SubLatticeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// A rotation of [`SubLatticeId::LOOP`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraversalOrder(pub [SubLatticeId; 4]);

impl TraversalOrder {
    pub fn start(&self) -> SubLatticeId {
        self.0[0]
    }

    pub fn iter(&self) -> impl Iterator<Item = SubLatticeId> + '_ {
        self.0.iter().copied()
    }
}

pub fn traversal_order(start: SubLatticeId) -> TraversalOrder {
    let k = start.loop_index();
    TraversalOrder(std::array::from_fn(|i| SubLatticeId::LOOP[(k + i) % 4]))
}

/// The four sub-lattices in loop order with their pixel indices.
pub fn decompose(img: &GrayImage) -> Result<Vec<(SubLatticeId, Vec<usize>)>> {
    let (w, h) = img.dims();
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::OddDimension { width: w, height: h });
    }
    Ok(SubLatticeId::LOOP.iter().map(|&s| (s, s.indices(w, h))).collect())
}

/// Which neighbours vote on a pixel's cost discount.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Neighborhood {
    /// Up, down, left, right.
    #[default]
    FourConnected,
    /// The four diagonal neighbours.
    Diagonal,
}

impl Neighborhood {
    fn offsets(self) -> [(isize, isize); 4] {
        match self {
            Neighborhood::FourConnected => [(-1, 0), (1, 0), (0, -1), (0, 1)],
            Neighborhood::Diagonal => [(-1, -1), (-1, 1), (1, -1), (1, 1)],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Neighborhood::FourConnected => "four",
            Neighborhood::Diagonal => "diagonal",
        }
    }
}

impl FromStr for Neighborhood {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "four" | "4" | "four-connected" => Ok(Neighborhood::FourConnected),
            "diagonal" | "diag" => Ok(Neighborhood::Diagonal),
            other => Err(Error::InvalidArgument(format!("unknown neighborhood {other:?}"))),
        }
    }
}

/// Sum of changes over the in-bounds neighbours of `(row, col)`.
pub fn neighbor_sum(changes: &ChangeMap, row: usize, col: usize, neighborhood: Neighborhood) -> i32 {
    neighborhood
        .offsets()
        .iter()
        .filter_map(|&(dr, dc)| {
            let r = row.checked_add_signed(dr)?;
            let c = col.checked_add_signed(dc)?;
            (r < changes.height && c < changes.width).then(|| i32::from(changes.delta[r * changes.width + c]))
        })
        .sum()
}

/// Discounts the direction the neighbours moved in: `rho_plus = xi_plus / beta`
/// when their changes sum positive, `rho_minus = xi_minus / beta` when
/// negative. Always derived from the initial costs; wet entries stay wet.
pub fn adjust_costs(
    initial: &CostMap,
    changes: &ChangeMap,
    beta: f64,
    neighborhood: Neighborhood,
) -> Result<CostMap> {
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("CMD factor {beta} must exceed 1")));
    }
    if (changes.width, changes.height) != initial.dims() {
        return Err(Error::DimensionMismatch {
            expected: initial.dims(),
            got: (changes.width, changes.height),
        });
    }
    let mut out = initial.clone();
    for row in 0..initial.height {
        for col in 0..initial.width {
            let i = row * initial.width + col;
            let s = neighbor_sum(changes, row, col, neighborhood);
            if s > 0 && !initial.is_wet(initial.rho_plus[i]) {
                out.rho_plus[i] = initial.rho_plus[i] / beta;
            } else if s < 0 && !initial.is_wet(initial.rho_minus[i]) {
                out.rho_minus[i] = initial.rho_minus[i] / beta;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedConfig {
    pub beta: f64,
    pub payload_rate: f64,
    pub seed: u64,
    pub coder_mode: CoderMode,
    pub neighborhood: Neighborhood,
    /// Trellis shape for the STC coder; the rate is set per sub-lattice.
    pub stc: StcParams,
}

impl EmbedConfig {
    pub const DEFAULT_BETA: f64 = 10.0;

    pub fn new(payload_rate: f64, seed: u64, coder_mode: CoderMode) -> Self {
        Self {
            beta: Self::DEFAULT_BETA,
            payload_rate,
            seed,
            coder_mode,
            neighborhood: Neighborhood::FourConnected,
            stc: StcParams::production(1, 2).expect("production parameters are valid"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 1.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!("CMD factor {} must exceed 1", self.beta)));
        }
        if !(0.0..3f64.log2()).contains(&self.payload_rate) {
            return Err(Error::InvalidArgument(format!(
                "payload rate {} outside [0, log2 3)",
                self.payload_rate
            )));
        }
        Ok(())
    }

    /// Message length this config expects for a `width x height` cover.
    pub fn message_len(&self, width: usize, height: usize) -> usize {
        (self.payload_rate * (width * height) as f64).round() as usize
    }
}

/// Output of synchronized embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncEmbedding {
    pub stego: GrayImage,
    /// Costs adjusted from the final change map; the adversarial stage starts
    /// from these.
    pub final_costs: CostMap,
    pub order: TraversalOrder,
    pub changes: ChangeMap,
}

pub(crate) fn random_start(seed: u64, tag: u64) -> SubLatticeId {
    SubLatticeId::LOOP[rng::stream(seed, &[tag]).gen_range(0..4)]
}

/// Embeds `segment` into the pixels `indices` of `cover`, pricing changes with
/// `costs` restricted to those pixels. Returns the new values for `indices`.
pub fn embed_segment(
    cover: &GrayImage,
    indices: &[usize],
    segment: &BitMessage,
    costs: &CostMap,
    mode: CoderMode,
    stc: &StcParams,
    seed: u64,
) -> Result<Vec<u8>> {
    let pixels: Vec<u8> = indices.iter().map(|&i| cover.pixels()[i]).collect();
    let (plus, minus) = costs.gather(indices);
    match mode {
        CoderMode::Stc => ternary_embed_stc(&pixels, segment, &plus, &minus, stc, costs.wet_value),
        CoderMode::Simulator => {
            let (w, h) = (cover.width() / 2, cover.height() / 2);
            let (w, h) = if w * h == indices.len() { (w, h) } else { (indices.len(), 1) };
            let mut sub = CostMap::new(w, h, plus, minus)?;
            sub.wet_value = costs.wet_value;
            let probs = solve_lambda(&sub, segment.len() as f64)?;
            let changes = sample_changes(&probs, &sub, &mut rng::stream(seed, &[]));
            Ok(pixels
                .iter()
                .zip(&changes.delta)
                .map(|(&p, &d)| (i16::from(p) + i16::from(d)) as u8)
                .collect())
        }
    }
}

fn embed_passes(
    cover: &GrayImage,
    message: &BitMessage,
    initial: &CostMap,
    cfg: &EmbedConfig,
    synchronize: bool,
) -> Result<SyncEmbedding> {
    cfg.validate()?;
    initial.check_image(cover)?;
    let (w, h) = cover.dims();
    let expected = cfg.message_len(w, h);
    if message.len() != expected {
        return Err(Error::LengthMismatch(format!(
            "message of {} bits, payload rate {} on {w}x{h} needs {expected}",
            message.len(),
            cfg.payload_rate
        )));
    }
    let segments = message.split_even(4);
    let order = traversal_order(random_start(cfg.seed, rng::TAG_START));
    let mut stego = cover.clone();
    let mut changes = ChangeMap::zeros(w, h);
    let mut costs = initial.clone();
    for lattice in order.iter() {
        let k = lattice.loop_index();
        let indices = lattice.indices(w, h);
        let seed = rng::derive_seed(cfg.seed, &[rng::TAG_EMBED, k as u64]);
        let values = embed_segment(cover, &indices, &segments[k], &costs, cfg.coder_mode, &cfg.stc, seed)?;
        for (&i, &v) in indices.iter().zip(&values) {
            stego.pixels_mut()[i] = v;
            changes.delta[i] = (i16::from(v) - i16::from(cover.pixels()[i])) as i8;
        }
        if synchronize {
            costs = adjust_costs(initial, &changes, cfg.beta, cfg.neighborhood)?;
        }
    }
    Ok(SyncEmbedding {
        stego,
        final_costs: costs,
        order,
        changes,
    })
}

/// Splits the message into four segments in loop order, then embeds the
/// sub-lattices one by one from a seeded random start, re-deriving the costs
/// from `initial` and the accumulated changes after every pass.
pub fn embed_synchronized(
    cover: &GrayImage,
    message: &BitMessage,
    initial: &CostMap,
    cfg: &EmbedConfig,
) -> Result<SyncEmbedding> {
    embed_passes(cover, message, initial, cfg, true)
}

/// Same passes, seeds and segments as [`embed_synchronized`] but without any
/// cost adjustment.
pub fn embed_plain(
    cover: &GrayImage,
    message: &BitMessage,
    initial: &CostMap,
    cfg: &EmbedConfig,
) -> Result<SyncEmbedding> {
    embed_passes(cover, message, initial, cfg, false)
}

/// Recovers a message embedded in STC mode.
pub fn extract_synchronized(stego: &GrayImage, len: usize, stc: &StcParams) -> Result<BitMessage> {
    let (w, h) = stego.dims();
    let lengths = crate::coder::segment_lengths(len, 4);
    let parts = SubLatticeId::LOOP
        .iter()
        .zip(lengths)
        .map(|(lattice, n)| {
            let pixels: Vec<u8> = lattice.indices(w, h).iter().map(|&i| stego.pixels()[i]).collect();
            ternary_extract_stc(&pixels, n, stc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BitMessage::concat(&parts))
}

/// Fraction of 4-connected pairs of changed pixels that changed in the same
/// direction, with the pair count. `None` when no such pair exists.
pub fn direction_agreement(changes: &ChangeMap) -> Option<(f64, usize)> {
    let (w, h) = (changes.width, changes.height);
    let mut same = 0usize;
    let mut pairs = 0usize;
    for r in 0..h {
        for c in 0..w {
            let d = changes.delta[r * w + c];
            if d == 0 {
                continue;
            }
            for (rr, cc) in [(r, c + 1), (r + 1, c)] {
                if rr < h && cc < w {
                    let e = changes.delta[rr * w + cc];
                    if e != 0 {
                        pairs += 1;
                        same += usize::from(d == e);
                    }
                }
            }
        }
    }
    (pairs > 0).then(|| (same as f64 / pairs as f64, pairs))
}
