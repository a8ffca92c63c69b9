use crate::imageio::mirror;

/// 2-D correlation with mirror padding, output the size of the input. The
/// kernel is `kh x kw` row-major and anchored at `(ah, aw)`.
pub(crate) fn correlate(
    src: &[f64],
    width: usize,
    height: usize,
    kernel: &[f64],
    kw: usize,
    kh: usize,
    anchor: (usize, usize),
) -> Vec<f64> {
    let (ah, aw) = (anchor.0 as isize, anchor.1 as isize);
    let mut out = vec![0.0; src.len()];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for u in 0..kh {
                let rr = mirror(r as isize + u as isize - ah, height) * width;
                let krow = &kernel[u * kw..(u + 1) * kw];
                for (v, k) in krow.iter().enumerate() {
                    acc += k * src[rr + mirror(c as isize + v as isize - aw, width)];
                }
            }
            out[r * width + c] = acc;
        }
    }
    out
}

/// Separable mean filter of odd size with mirror padding.
pub(crate) fn box_mean(src: &[f64], width: usize, height: usize, size: usize) -> Vec<f64> {
    debug_assert!(size % 2 == 1);
    let half = (size / 2) as isize;
    let norm = size as f64;
    let mut tmp = vec![0.0; src.len()];
    for r in 0..height {
        let row = &src[r * width..(r + 1) * width];
        for c in 0..width {
            let acc: f64 = (-half..=half).map(|d| row[mirror(c as isize + d, width)]).sum();
            tmp[r * width + c] = acc / norm;
        }
    }
    let mut out = vec![0.0; src.len()];
    for r in 0..height {
        for c in 0..width {
            let acc: f64 = (-half..=half)
                .map(|d| tmp[mirror(r as isize + d, height) * width + c])
                .sum();
            out[r * width + c] = acc / norm;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_mean_matches_direct_correlation() {
        let src: Vec<f64> = (0..48).map(|i| ((i * 37) % 11) as f64).collect();
        let k = vec![1.0 / 9.0; 9];
        let direct = correlate(&src, 8, 6, &k, 3, 3, (1, 1));
        let sep = box_mean(&src, 8, 6, 3);
        for (a, b) in direct.iter().zip(&sep) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
