//! Per-pixel directional embedding costs.

mod filter;
mod hill;
mod suniward;

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

pub use hill::hill_cost;
pub use suniward::suniward_cost;

/// Sentinel cost for a forbidden direction.
pub const WET_VALUE: f64 = 1e13;

/// Directional costs: `rho_plus` prices a +1 change, `rho_minus` a -1 change.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMap {
    pub width: usize,
    pub height: usize,
    pub rho_plus: Vec<f64>,
    pub rho_minus: Vec<f64>,
    pub wet_value: f64,
}

impl CostMap {
    pub fn new(width: usize, height: usize, rho_plus: Vec<f64>, rho_minus: Vec<f64>) -> Result<Self> {
        let n = width * height;
        if rho_plus.len() != n || rho_minus.len() != n {
            return Err(Error::LengthMismatch(format!(
                "cost grids of {} and {} entries for {width}x{height}",
                rho_plus.len(),
                rho_minus.len()
            )));
        }
        if let Some(bad) = rho_plus
            .iter()
            .chain(&rho_minus)
            .find(|c| !c.is_finite() || **c < 0.0)
        {
            return Err(Error::InvalidArgument(format!("cost {bad} is not a finite nonnegative value")));
        }
        Ok(Self {
            width,
            height,
            rho_plus,
            rho_minus,
            wet_value: WET_VALUE,
        })
    }

    /// Direction-symmetric map.
    pub fn symmetric(width: usize, height: usize, rho: Vec<f64>) -> Result<Self> {
        Self::new(width, height, rho.clone(), rho)
    }

    pub fn uniform(width: usize, height: usize, rho: f64) -> Result<Self> {
        Self::symmetric(width, height, vec![rho; width * height])
    }

    pub fn len(&self) -> usize {
        self.rho_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho_plus.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn is_wet(&self, cost: f64) -> bool {
        cost >= self.wet_value
    }

    /// True when at least one direction of pixel `idx` is allowed.
    pub fn is_dry(&self, idx: usize) -> bool {
        !self.is_wet(self.rho_plus[idx]) || !self.is_wet(self.rho_minus[idx])
    }

    pub(crate) fn check_image(&self, img: &GrayImage) -> Result<()> {
        if img.dims() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: img.dims(),
            });
        }
        Ok(())
    }

    /// Costs restricted to the pixel indices in `indices`, as parallel
    /// `(rho_plus, rho_minus)` sequences.
    pub fn gather(&self, indices: &[usize]) -> (Vec<f64>, Vec<f64>) {
        (
            indices.iter().map(|&i| self.rho_plus[i]).collect(),
            indices.iter().map(|&i| self.rho_minus[i]).collect(),
        )
    }
}

/// Marks +1 wet at saturated pixels and -1 wet at black pixels.
pub fn apply_wet_bounds(mut costs: CostMap, cover: &GrayImage) -> Result<CostMap> {
    costs.check_image(cover)?;
    let wet = costs.wet_value;
    for (i, &p) in cover.pixels().iter().enumerate() {
        if p == 255 {
            costs.rho_plus[i] = wet;
        }
        if p == 0 {
            costs.rho_minus[i] = wet;
        }
    }
    Ok(costs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostScheme {
    Hill,
    SUniward,
}

impl CostScheme {
    pub fn compute(self, cover: &GrayImage) -> CostMap {
        match self {
            CostScheme::Hill => hill_cost(cover),
            CostScheme::SUniward => suniward_cost(cover),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CostScheme::Hill => "hill",
            CostScheme::SUniward => "suniward",
        }
    }
}

impl FromStr for CostScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hill" => Ok(CostScheme::Hill),
            "suniward" | "s-uniward" => Ok(CostScheme::SUniward),
            other => Err(Error::InvalidArgument(format!("unknown cost scheme {other:?}"))),
        }
    }
}

const COST_MAGIC: &[u8; 4] = b"COST";

/// Little-endian: magic, u32 width, u32 height, f32 rho_plus grid, f32
/// rho_minus grid.
pub fn encode_costs(costs: &CostMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * costs.len());
    out.extend_from_slice(COST_MAGIC);
    out.extend_from_slice(&(costs.width as u32).to_le_bytes());
    out.extend_from_slice(&(costs.height as u32).to_le_bytes());
    for v in costs.rho_plus.iter().chain(&costs.rho_minus) {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

/// Inverse of [`encode_costs`]. Values at or above the f32 image of
/// [`WET_VALUE`] decode as exactly wet.
pub fn decode_costs(bytes: &[u8]) -> Result<CostMap> {
    if bytes.len() < 12 || &bytes[..4] != COST_MAGIC {
        return Err(Error::CostFormat("missing COST header".into()));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let n = width * height;
    let body = &bytes[12..];
    if body.len() != 8 * n {
        return Err(Error::CostFormat(format!(
            "expected {} payload bytes for {width}x{height}, found {}",
            8 * n,
            body.len()
        )));
    }
    let wet32 = WET_VALUE as f32;
    let values: Vec<f64> = body
        .chunks_exact(4)
        .map(|c| {
            let v = f32::from_le_bytes(c.try_into().unwrap());
            if v >= wet32 {
                WET_VALUE
            } else {
                f64::from(v)
            }
        })
        .collect();
    let (plus, minus) = values.split_at(n);
    CostMap::new(width, height, plus.to_vec(), minus.to_vec())
        .map_err(|e| Error::CostFormat(e.to_string()))
}

pub fn save_costs(costs: &CostMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_costs(costs))?;
    Ok(())
}

pub fn load_costs(path: impl AsRef<Path>) -> Result<CostMap> {
    decode_costs(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wet_bounds_single_pixel_semantics() {
        let img = GrayImage::new(2, 2, vec![0, 255, 10, 200]).unwrap();
        let c = apply_wet_bounds(CostMap::uniform(2, 2, 3.0).unwrap(), &img).unwrap();
        assert_eq!(c.rho_minus[0], WET_VALUE);
        assert_eq!(c.rho_plus[0], 3.0);
        assert_eq!(c.rho_plus[1], WET_VALUE);
        assert_eq!(c.rho_minus[1], 3.0);
        assert_eq!(&c.rho_plus[2..], &[3.0, 3.0]);
    }

    #[test]
    fn wet_bounds_no_op_and_idempotent() {
        let img = GrayImage::new(2, 2, vec![1, 254, 10, 200]).unwrap();
        let base = CostMap::symmetric(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(apply_wet_bounds(base.clone(), &img).unwrap(), base);
        let sat = GrayImage::new(2, 2, vec![0, 255, 0, 255]).unwrap();
        let once = apply_wet_bounds(base.clone(), &sat).unwrap();
        assert_eq!(apply_wet_bounds(once.clone(), &sat).unwrap(), once);
    }

    #[test]
    fn wet_bounds_dimension_mismatch() {
        let img = GrayImage::filled(4, 2, 3).unwrap();
        assert!(matches!(
            apply_wet_bounds(CostMap::uniform(2, 2, 1.0).unwrap(), &img),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cost_file_round_trip() {
        let img = GrayImage::new(2, 2, vec![0, 255, 10, 200]).unwrap();
        let c = apply_wet_bounds(CostMap::symmetric(2, 2, vec![0.5, 1.5, 2.25, 8.0]).unwrap(), &img).unwrap();
        let bytes = encode_costs(&c);
        assert_eq!(bytes.len(), 12 + 2 * 4 * 4);
        assert_eq!(&bytes[..4], b"COST");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        let back = decode_costs(&bytes).unwrap();
        assert_eq!(back, c);
        assert!(decode_costs(&bytes[..20]).is_err());
        assert!(decode_costs(b"CASTxxxxxxxx").is_err());
    }

    #[test]
    fn rejects_invalid_costs() {
        assert!(CostMap::symmetric(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(CostMap::symmetric(1, 2, vec![1.0, -1.0]).is_err());
        assert!(CostMap::symmetric(1, 2, vec![1.0]).is_err());
    }
}
