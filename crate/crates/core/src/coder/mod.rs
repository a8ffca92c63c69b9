//! From costs and a payload to embedding changes: Gibbs probabilities, the
//! lambda search, the optimal embedding simulator and syndrome-trellis codes.

mod gibbs;
mod stc;
mod ternary;

use std::fmt;

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

pub use gibbs::{
    expected_distortion, payload_of, probabilities_from_costs, sample_changes, simulate_embedding,
    solve_lambda, ProbabilityMap, LAMBDA_MAX, LAMBDA_MIN, MAX_BISECTIONS,
};
pub use stc::{column_patterns, parity_check_columns, stc_decode, stc_encode, Rate, StcParams};
pub use ternary::{layer_split, ternary_capacity, ternary_embed_stc, ternary_extract_stc};

/// Per-pixel change in {-1, 0, +1}. Also carries adversarial noise Z - S.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ChangeMap {
    pub width: usize,
    pub height: usize,
    pub delta: Vec<i8>,
}

impl fmt::Debug for ChangeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChangeMap")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("changes", &self.count_changes())
            .finish()
    }
}

impl ChangeMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            delta: vec![0; width * height],
        }
    }

    /// `after - before`; fails unless every difference is in {-1, 0, +1}.
    pub fn between(before: &GrayImage, after: &GrayImage) -> Result<Self> {
        after.check_dims(before.width(), before.height())?;
        let delta = before
            .pixels()
            .iter()
            .zip(after.pixels())
            .map(|(&b, &a)| {
                let d = i16::from(a) - i16::from(b);
                if d.abs() > 1 {
                    Err(Error::InvalidArgument(format!("pixel change {d} outside {{-1,0,1}}")))
                } else {
                    Ok(d as i8)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            width: before.width(),
            height: before.height(),
            delta,
        })
    }

    pub fn apply(&self, cover: &GrayImage) -> Result<GrayImage> {
        cover.check_dims(self.width, self.height)?;
        let data = cover
            .pixels()
            .iter()
            .zip(&self.delta)
            .map(|(&p, &d)| {
                let v = i16::from(p) + i16::from(d);
                u8::try_from(v)
                    .map_err(|_| Error::InvalidArgument(format!("change {d} moves pixel {p} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        GrayImage::new(self.width, self.height, data)
    }

    pub fn count_changes(&self) -> usize {
        self.delta.iter().filter(|&&d| d != 0).count()
    }
}

/// Message bits, one `u8` per bit.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitMessage {
    bits: Vec<u8>,
}

impl fmt::Debug for BitMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMessage({} bits)", self.bits.len())
    }
}

impl BitMessage {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("message bits must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// First `len` bits of `bytes`, most significant bit first.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(Error::LengthMismatch(format!(
                "{len} bits requested from {} bytes",
                bytes.len()
            )));
        }
        let bits = (0..len).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect();
        Ok(Self { bits })
    }

    /// Packs MSB-first; the tail of the last byte is zero.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            out[i / 8] |= b << (7 - i % 8);
        }
        out
    }

    pub fn random(len: usize, seed: u64) -> Self {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, &[crate::rng::TAG_MESSAGE, len as u64]);
        Self {
            bits: (0..len).map(|_| rng.gen_range(0..2u8)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    /// Splits into `parts` contiguous segments whose lengths differ by at most
    /// one; the first `len % parts` segments carry the extra bit.
    pub fn split_even(&self, parts: usize) -> Vec<BitMessage> {
        segment_lengths(self.len(), parts)
            .into_iter()
            .scan(0usize, |start, n| {
                let seg = BitMessage {
                    bits: self.bits[*start..*start + n].to_vec(),
                };
                *start += n;
                Some(seg)
            })
            .collect()
    }

    pub fn concat(parts: &[BitMessage]) -> Self {
        Self {
            bits: parts.iter().flat_map(|p| p.bits.iter().copied()).collect(),
        }
    }
}

pub fn segment_lengths(len: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|k| len / parts + usize::from(k < len % parts))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoderMode {
    Simulator,
    Stc,
}

impl CoderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CoderMode::Simulator => "sim",
            CoderMode::Stc => "stc",
        }
    }
}

impl std::str::FromStr for CoderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim" | "simulator" => Ok(CoderMode::Simulator),
            "stc" => Ok(CoderMode::Stc),
            other => Err(Error::InvalidArgument(format!("unknown coder {other:?}"))),
        }
    }
}
