use super::filter::{box_mean, correlate};
use super::{apply_wet_bounds, CostMap};
use crate::imageio::GrayImage;

const HIGH_PASS: [f64; 9] = [-1.0, 2.0, -1.0, 2.0, -4.0, 2.0, -1.0, 2.0, -1.0];
const DENOMINATOR_FLOOR: f64 = 1e-10;
const COST_CEILING: f64 = 1e13;

/// HILL costs: high-pass residual magnitude, smoothed by a 3x3 mean, inverted,
/// then spread by a 15x15 mean. Direction-symmetric before wet bounds.
pub fn hill_cost(cover: &GrayImage) -> CostMap {
    let (w, h) = cover.dims();
    let residual = correlate(&cover.to_f64(), w, h, &HIGH_PASS, 3, 3, (1, 1));
    let magnitude: Vec<f64> = residual.iter().map(|r| r.abs()).collect();
    let inverse: Vec<f64> = box_mean(&magnitude, w, h, 3)
        .into_iter()
        .map(|d| 1.0 / d.max(DENOMINATOR_FLOOR))
        .collect();
    let rho: Vec<f64> = box_mean(&inverse, w, h, 15)
        .into_iter()
        .map(|c| c.min(COST_CEILING))
        .collect();
    let costs = CostMap::symmetric(w, h, rho).expect("costs are finite and sized to the image");
    apply_wet_bounds(costs, cover).expect("dimensions match")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::WET_VALUE;
    use crate::imageio::generate_cover;

    #[test]
    fn constant_image_hits_the_clamp() {
        let c = hill_cost(&GrayImage::filled(16, 16, 100).unwrap());
        let ceiling = 1.0 / DENOMINATOR_FLOOR;
        for (p, m) in c.rho_plus.iter().zip(&c.rho_minus) {
            assert!((p - ceiling).abs() <= 1e-6 * ceiling);
            assert_eq!(p, m);
        }
    }

    #[test]
    fn saturated_pixel_is_wet() {
        let mut img = generate_cover(5, 32, 32).unwrap();
        img.set(3, 4, 255);
        img.set(5, 6, 0);
        let c = hill_cost(&img);
        assert_eq!(c.rho_plus[3 * 32 + 4], WET_VALUE);
        assert_eq!(c.rho_minus[5 * 32 + 6], WET_VALUE);
        assert!(c.rho_minus[3 * 32 + 4] < WET_VALUE);
    }

    #[test]
    fn symmetric_on_unsaturated_pixels() {
        let img = generate_cover(8, 32, 32).unwrap();
        let c = hill_cost(&img);
        for (i, &p) in img.pixels().iter().enumerate() {
            if p != 0 && p != 255 {
                assert_eq!(c.rho_plus[i], c.rho_minus[i]);
                assert!(c.rho_plus[i].is_finite() && c.rho_plus[i] > 0.0);
            }
        }
    }
}
