//! Syndrome-trellis codes.
//!
//! The parity-check matrix `H` (`m x n`) places one band of `h`-bit column
//! patterns per message bit: block `i` spans columns
//! `floor(i*n/m) .. floor((i+1)*n/m)` and every column in it has its top
//! bit on row `i`. Rows past `m` are truncated. Encoding runs the Viterbi
//! algorithm over the `2^h` partial-syndrome states and returns the
//! minimum-cost member of the coset `{y : H y = m}`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::splitmix64;

/// Message bits per cover bit, `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rate {
    pub num: usize,
    pub den: usize,
}

impl Rate {
    pub fn new(num: usize, den: usize) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidArgument(format!("rate {num}/{den} must lie in [0, 1]")));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    /// Message length for `n` cover bits, if `n` is compatible with the rate.
    pub fn message_len(self, n: usize) -> Option<usize> {
        (n * self.num % self.den == 0).then_some(n * self.num / self.den)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StcParams {
    pub h: u32,
    pub hat: u32,
    pub rate: Rate,
}

impl StcParams {
    pub const PRODUCTION_H: u32 = 10;
    pub const PRODUCTION_HAT: u32 = 0b10_0101_0111;

    pub fn new(h: u32, hat: u32, rate: Rate) -> Result<Self> {
        if !(1..=31).contains(&h) {
            return Err(Error::InvalidArgument(format!("constraint height {h} outside 1..=31")));
        }
        if hat >> h != 0 || hat & 1 == 0 || hat >> (h - 1) & 1 == 0 {
            return Err(Error::InvalidArgument(format!(
                "column pattern {hat:#x} must fit {h} bits with top and bottom bits set"
            )));
        }
        Ok(Self { h, hat, rate })
    }

    /// Production code (h = 10) at `m / n`.
    pub fn production(m: usize, n: usize) -> Result<Self> {
        Self::new(Self::PRODUCTION_H, Self::PRODUCTION_HAT, Rate::new(m, n)?)
    }

    pub fn with_rate(self, m: usize, n: usize) -> Result<Self> {
        Self::new(self.h, self.hat, Rate::new(m, n)?)
    }

    fn message_len(&self, n: usize) -> Result<usize> {
        self.rate.message_len(n).ok_or_else(|| {
            Error::LengthMismatch(format!(
                "{n} cover bits incompatible with rate {}/{}",
                self.rate.num, self.rate.den
            ))
        })
    }
}

impl fmt::Display for StcParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h:{},hat:{:x},rate:{}/{}", self.h, self.hat, self.rate.num, self.rate.den)
    }
}

impl FromStr for StcParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad STC parameters {s:?}"));
        let mut h = None;
        let mut hat = None;
        let mut rate = None;
        for field in s.split(',') {
            let (key, value) = field.split_once(':').ok_or_else(bad)?;
            match key.trim() {
                "h" => h = Some(value.trim().parse::<u32>().map_err(|_| bad())?),
                "hat" => {
                    let v = value.trim();
                    let v = v.strip_prefix("0x").unwrap_or(v);
                    hat = Some(u32::from_str_radix(v, 16).map_err(|_| bad())?);
                }
                "rate" => {
                    let (p, q) = value.split_once('/').ok_or_else(bad)?;
                    let p = p.trim().parse().map_err(|_| bad())?;
                    let q = q.trim().parse().map_err(|_| bad())?;
                    rate = Some(Rate::new(p, q)?);
                }
                _ => return Err(bad()),
            }
        }
        Self::new(h.ok_or_else(bad)?, hat.ok_or_else(bad)?, rate.ok_or_else(bad)?)
    }
}

/// The `width` column patterns of one block. The first is `hat`; the rest are
/// drawn deterministically from `hat` with top and bottom bits forced on.
pub fn column_patterns(params: &StcParams, width: usize) -> Vec<u32> {
    let h = params.h;
    let mask = if h == 32 { u32::MAX } else { (1u32 << h) - 1 };
    let ends = 1 | (1u32 << (h - 1));
    (0..width)
        .map(|j| {
            if j == 0 {
                params.hat
            } else {
                let z = splitmix64(u64::from(params.hat) ^ ((j as u64) << 32) ^ u64::from(h));
                (z as u32 & mask) | ends
            }
        })
        .collect()
}

fn block_start(i: usize, n: usize, m: usize) -> usize {
    i * n / m
}

/// For each column of `H`, its first row and row pattern (bit `t` is row
/// `first + t`), truncated at row `m`.
pub fn parity_check_columns(params: &StcParams, n: usize, m: usize) -> Vec<(usize, u32)> {
    let mut cols = Vec::with_capacity(n);
    if m == 0 {
        return vec![(0, 0); n];
    }
    let max_width = n.div_ceil(m);
    let patterns = column_patterns(params, max_width);
    for i in 0..m {
        let rows = (m - i).min(params.h as usize);
        let mask = if rows >= 32 { u32::MAX } else { (1u32 << rows) - 1 };
        let (start, end) = (block_start(i, n, m), block_start(i + 1, n, m));
        for j in start..end {
            cols.push((i, patterns[j - start] & mask));
        }
    }
    cols
}

/// Syndrome `H y` over GF(2).
pub fn stc_decode(stego_bits: &[u8], params: &StcParams) -> Result<Vec<u8>> {
    let n = stego_bits.len();
    let m = params.message_len(n)?;
    let mut syndrome = vec![0u8; m];
    for (&bit, (first, pattern)) in stego_bits.iter().zip(parity_check_columns(params, n, m)) {
        if bit & 1 == 1 {
            for t in 0..32 {
                if pattern >> t & 1 == 1 {
                    syndrome[first + t] ^= 1;
                }
            }
        }
    }
    Ok(syndrome)
}

/// Minimum-cost `y` with `H y = message`. Flipping bit `i` costs
/// `bit_costs[i]`; any optimum that flips a cost at or above `wet` is reported
/// as infeasible.
pub fn stc_encode(
    cover_bits: &[u8],
    message: &[u8],
    bit_costs: &[f64],
    params: &StcParams,
    wet: f64,
) -> Result<Vec<u8>> {
    let n = cover_bits.len();
    let m = params.message_len(n)?;
    if message.len() != m {
        return Err(Error::LengthMismatch(format!(
            "{} message bits for rate {}/{} over {n} cover bits",
            message.len(),
            params.rate.num,
            params.rate.den
        )));
    }
    if bit_costs.len() != n {
        return Err(Error::LengthMismatch(format!("{} costs for {n} cover bits", bit_costs.len())));
    }
    if bit_costs.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::InvalidArgument("bit costs must be nonnegative".into()));
    }
    if m == 0 {
        return Ok(cover_bits.iter().map(|b| b & 1).collect());
    }

    let h = params.h as usize;
    let states = 1usize << h;
    let words = states.div_ceil(64);
    let columns = parity_check_columns(params, n, m);
    let mut cost = vec![f64::INFINITY; states];
    let mut next = vec![f64::INFINITY; states];
    cost[0] = 0.0;
    // path[j * words ..]: bit s set when the survivor into state s has y_j = 1
    let mut path = vec![0u64; n * words];

    for i in 0..m {
        let (start, end) = (block_start(i, n, m), block_start(i + 1, n, m));
        for j in start..end {
            let pattern = columns[j].1 as usize;
            let x = cover_bits[j] & 1;
            let (w0, w1) = if x == 0 { (0.0, bit_costs[j]) } else { (bit_costs[j], 0.0) };
            let row = &mut path[j * words..(j + 1) * words];
            for s in 0..states {
                let keep = cost[s] + w0;
                let set = cost[s ^ pattern] + w1;
                if set < keep {
                    next[s] = set;
                    row[s / 64] |= 1 << (s % 64);
                } else {
                    next[s] = keep;
                }
            }
            std::mem::swap(&mut cost, &mut next);
        }
        // row i is complete: keep states that match the message bit, shift
        let want = message[i] as usize & 1;
        for s in 0..states / 2 {
            next[s] = cost[(s << 1) | want];
        }
        for c in next.iter_mut().skip(states / 2) {
            *c = f64::INFINITY;
        }
        std::mem::swap(&mut cost, &mut next);
    }

    // truncated patterns leave no bits past row m, so the end state is 0
    if !cost[0].is_finite() {
        return Err(Error::StcInfeasible);
    }
    let mut y = vec![0u8; n];
    let mut state = 0usize;
    for i in (0..m).rev() {
        state = ((state << 1) | (message[i] as usize & 1)) & (states - 1);
        let (start, end) = (block_start(i, n, m), block_start(i + 1, n, m));
        for j in (start..end).rev() {
            let took = path[j * words + state / 64] >> (state % 64) & 1;
            y[j] = took as u8;
            if took == 1 {
                state ^= columns[j].1 as usize;
            }
        }
    }
    debug_assert_eq!(state, 0);
    let flips_wet = (0..n).any(|j| (cover_bits[j] & 1) != y[j] && bit_costs[j] >= wet);
    if flips_wet {
        return Err(Error::StcInfeasible);
    }
    Ok(y)
}

/// Cost of moving `cover` to `stego` under per-bit flip costs.
#[cfg(test)]
pub(crate) fn distortion(cover: &[u8], stego: &[u8], costs: &[f64]) -> f64 {
    cover
        .iter()
        .zip(stego)
        .zip(costs)
        .filter(|((x, y), _)| (**x & 1) != (**y & 1))
        .map(|(_, c)| *c)
        .sum()
}
