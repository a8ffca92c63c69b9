use super::{apply_wet_bounds, CostMap};
use crate::imageio::{mirror, GrayImage};

/// Stabilizing constant added to residual magnitudes.
pub const SIGMA: f64 = 1.0;

/// Daubechies-8 high-pass decomposition filter.
const HPDF: [f64; 16] = [
    -0.0544158422431049,
    0.3128715909144659,
    -0.6756307362980128,
    0.5853546836548691,
    0.0158291052560239,
    -0.2840155429624281,
    -0.0004724845736124,
    0.1287474266204893,
    0.0173693010018090,
    -0.0440882539307971,
    -0.0139810279173995,
    0.0087460940474065,
    0.0048703529934520,
    -0.0003917403733770,
    -0.0006754494064506,
    -0.0001174767841248,
];

const TAPS: usize = 16;
const ANCHOR: isize = 7;

fn lpdf() -> [f64; TAPS] {
    let mut l = [0.0; TAPS];
    for (n, v) in l.iter_mut().enumerate() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        *v = sign * HPDF[TAPS - 1 - n];
    }
    l
}

/// The three directional 16x16 kernels (LH, HL, HH), row-major.
fn filter_bank() -> [Vec<f64>; 3] {
    let lp = lpdf();
    let outer = |col: &[f64; TAPS], row: &[f64; TAPS]| {
        let mut k = vec![0.0; TAPS * TAPS];
        for u in 0..TAPS {
            for v in 0..TAPS {
                k[u * TAPS + v] = col[u] * row[v];
            }
        }
        k
    };
    [outer(&lp, &HPDF), outer(&HPDF, &lp), outer(&HPDF, &HPDF)]
}

/// S-UNIWARD costs: for each wavelet direction, the sum of `|K(u)|` over the
/// residual samples a unit change at the pixel touches, each weighted by
/// `1 / (SIGMA + |residual|)`. Residuals use mirror-padded pixels, including
/// the band just outside the image that boundary pixels reach.
pub fn suniward_cost(cover: &GrayImage) -> CostMap {
    let (w, h) = cover.dims();
    let x = cover.to_f64();
    let margin = TAPS - 1;
    let (ew, eh) = (w + margin, h + margin);
    // extended residual grid covers positions -8 ..= dim + 6
    let lo = ANCHOR - TAPS as isize + 1;
    let mut rho = vec![0.0; w * h];
    for kernel in filter_bank() {
        let mut weight = vec![0.0; ew * eh];
        for er in 0..eh {
            let qr = er as isize + lo;
            for ec in 0..ew {
                let qc = ec as isize + lo;
                let mut acc = 0.0;
                for u in 0..TAPS {
                    let rr = mirror(qr + u as isize - ANCHOR, h) * w;
                    let krow = &kernel[u * TAPS..(u + 1) * TAPS];
                    for (v, k) in krow.iter().enumerate() {
                        acc += k * x[rr + mirror(qc + v as isize - ANCHOR, w)];
                    }
                }
                weight[er * ew + ec] = 1.0 / (SIGMA + acc.abs());
            }
        }
        // residual at q = p - u + ANCHOR moves by K(u) when pixel p changes
        for r in 0..h {
            for c in 0..w {
                let mut acc = 0.0;
                for u in 0..TAPS {
                    let er = (r as isize - u as isize + ANCHOR - lo) as usize;
                    for v in 0..TAPS {
                        let ec = (c as isize - v as isize + ANCHOR - lo) as usize;
                        acc += kernel[u * TAPS + v].abs() * weight[er * ew + ec];
                    }
                }
                rho[r * w + c] += acc;
            }
        }
    }
    let costs = CostMap::symmetric(w, h, rho).expect("costs are finite and sized to the image");
    apply_wet_bounds(costs, cover).expect("dimensions match")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::generate_cover;

    #[test]
    fn kernels_annihilate_constants() {
        for k in filter_bank() {
            assert!(k.iter().sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn constant_image_is_uniform_and_maximal() {
        let c = suniward_cost(&GrayImage::filled(32, 32, 77).unwrap());
        let max: f64 = filter_bank()
            .iter()
            .map(|k| k.iter().map(|v| v.abs()).sum::<f64>() / SIGMA)
            .sum();
        for v in c.rho_plus.iter().chain(&c.rho_minus) {
            assert!((v - max).abs() < 1e-9 * max, "{v} vs {max}");
        }
        let textured = suniward_cost(&generate_cover(3, 32, 32).unwrap());
        assert!(textured.rho_plus.iter().filter(|&&v| v < crate::costmodel::WET_VALUE).all(|&v| v <= max + 1e-9));
    }

    #[test]
    fn invariant_to_brightness_offset() {
        let base = generate_cover(11, 32, 32).unwrap();
        let dim: Vec<u8> = base.pixels().iter().map(|&p| (p as f64 * 0.7) as u8 + 10).collect();
        let img = GrayImage::new(32, 32, dim.clone()).unwrap();
        let shifted = GrayImage::new(32, 32, dim.iter().map(|p| p + 50).collect()).unwrap();
        let a = suniward_cost(&img);
        let b = suniward_cost(&shifted);
        for (x, y) in a.rho_plus.iter().zip(&b.rho_plus) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }
}
