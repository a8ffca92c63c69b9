//! Ternary (+-1) embedding with two binary STC layers.
//!
//! Layer one carries bit 1 of each pixel. Exactly one direction flips it: -1
//! on even values, +1 on odd values, so every pixel is available at the cost
//! of that direction. Layer two carries the LSB. A pixel that layer one left
//! alone can flip its LSB through the other direction without touching bit 1;
//! a pixel that layer one changed has its LSB frozen (wet). The union is a
//! change in {-1, 0, +1}. Both layers run over a fixed public permutation of
//! the sequence so that textured and smooth runs interleave.
//!
//! The split of `L` message bits into layers depends only on `L` and `n`, so
//! the receiver needs nothing beyond the message length.

use rand::seq::SliceRandom;

use super::stc::{stc_decode, stc_encode, StcParams};
use super::BitMessage;
use crate::error::{Error, Result};
use crate::rng;

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Bits carried by `(layer one, layer two)` for a message of `len` bits over
/// `n` pixels. Models symmetric changes at total rate `p` (solving
/// `H(p/2, p/2, 1-p) = len / n`) and gives layer one its `n h2(p/2)` share.
pub fn layer_split(len: usize, n: usize) -> (usize, usize) {
    if len == 0 || n == 0 {
        return (0, len);
    }
    let alpha = len as f64 / n as f64;
    let ternary = |p: f64| binary_entropy(p / 2.0) + (1.0 - p / 2.0) * binary_entropy((p / 2.0) / (1.0 - p / 2.0));
    let (mut lo, mut hi) = (0.0f64, 2.0 / 3.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ternary(mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m1 = ((n as f64 * binary_entropy(lo / 2.0)).round() as usize).min(len);
    (m1, len - m1)
}

/// Largest message length whose layers both fit in `n` pixels, never above
/// the ternary entropy bound `n log2 3`.
pub fn ternary_capacity(n: usize) -> usize {
    let (mut lo, mut hi) = (0usize, (n as f64 * 3f64.log2()).floor() as usize);
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        let (m1, m2) = layer_split(mid, n);
        if m1 <= n && m2 <= n {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

fn permutation(n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(0, &[rng::TAG_PERMUTE, n as u64]));
    order
}

/// The direction that flips bit 1 of `v`.
#[inline]
fn bit1_direction(v: i16) -> i16 {
    if v & 1 == 0 {
        -1
    } else {
        1
    }
}

/// Embeds `message` into `cover` with per-pixel directional costs. Returns the
/// stego pixels; every change is +-1 and stays in `[0, 255]`.
pub fn ternary_embed_stc(
    cover: &[u8],
    message: &BitMessage,
    rho_plus: &[f64],
    rho_minus: &[f64],
    params: &StcParams,
    wet: f64,
) -> Result<Vec<u8>> {
    let n = cover.len();
    if rho_plus.len() != n || rho_minus.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{} / {} directional costs for {n} pixels",
            rho_plus.len(),
            rho_minus.len()
        )));
    }
    if message.is_empty() {
        return Ok(cover.to_vec());
    }
    if message.len() > ternary_capacity(n) {
        return Err(Error::CapacityExceeded {
            bits: message.len(),
            cover: n,
        });
    }
    let (m1, m2) = layer_split(message.len(), n);
    let (msg1, msg2) = message.bits().split_at(m1);
    let order = permutation(n);

    let x: Vec<i16> = order.iter().map(|&i| i16::from(cover[i])).collect();
    let cost_of = |k: usize, d: i16| -> f64 {
        let v = x[k] + d;
        if !(0..=255).contains(&v) {
            return wet;
        }
        let i = order[k];
        let c = if d > 0 { rho_plus[i] } else { rho_minus[i] };
        c.min(wet)
    };

    let plane1: Vec<u8> = x.iter().map(|&v| ((v >> 1) & 1) as u8).collect();
    let cost1: Vec<f64> = (0..n).map(|k| cost_of(k, bit1_direction(x[k]))).collect();
    let y1 = stc_encode(&plane1, msg1, &cost1, &params.with_rate(m1, n)?, wet)?;

    let mut plane2 = Vec::with_capacity(n);
    let mut cost2 = Vec::with_capacity(n);
    for k in 0..n {
        if y1[k] != plane1[k] {
            plane2.push(((x[k] + bit1_direction(x[k])) & 1) as u8);
            cost2.push(wet);
        } else {
            plane2.push((x[k] & 1) as u8);
            cost2.push(cost_of(k, -bit1_direction(x[k])));
        }
    }
    let y2 = stc_encode(&plane2, msg2, &cost2, &params.with_rate(m2, n)?, wet)?;

    let mut stego = cover.to_vec();
    for k in 0..n {
        let d = if y1[k] != plane1[k] {
            bit1_direction(x[k])
        } else if y2[k] != plane2[k] {
            -bit1_direction(x[k])
        } else {
            0
        };
        stego[order[k]] = (x[k] + d) as u8;
    }
    Ok(stego)
}

/// Reads `len` message bits back from stego pixels.
pub fn ternary_extract_stc(stego: &[u8], len: usize, params: &StcParams) -> Result<BitMessage> {
    let n = stego.len();
    if len == 0 {
        return Ok(BitMessage::empty());
    }
    if len > ternary_capacity(n) {
        return Err(Error::CapacityExceeded { bits: len, cover: n });
    }
    let (m1, m2) = layer_split(len, n);
    let order = permutation(n);
    let plane1: Vec<u8> = order.iter().map(|&i| (stego[i] >> 1) & 1).collect();
    let plane2: Vec<u8> = order.iter().map(|&i| stego[i] & 1).collect();
    let mut bits = stc_decode(&plane1, &params.with_rate(m1, n)?)?;
    bits.extend(stc_decode(&plane2, &params.with_rate(m2, n)?)?);
    BitMessage::new(bits)
}
