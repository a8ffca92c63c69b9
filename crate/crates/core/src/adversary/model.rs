//! Small convolutional steganalyzer with exact backpropagation.
//!
//! KV high-pass (valid) -> conv 8x5x5 -> |.| -> tanh -> 2x mean pool
//! -> conv 16x3x3 -> tanh -> 2x mean pool -> global mean -> linear 16->2
//! -> softmax. Arithmetic is f64; parameters are kept f32-representable so
//! that a saved model evaluates bit-identically after loading.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::imageio::GrayImage;
use crate::rng;

pub const MODEL_MAGIC: &[u8; 4] = b"STGM";
pub const MODEL_VERSION: u32 = 1;
pub const ARCH_TAG: u32 = 0x4b56_0816;

pub(crate) const KV: [f64; 25] = [
    -1.0, 2.0, -2.0, 2.0, -1.0, //
    2.0, -6.0, 8.0, -6.0, 2.0, //
    -2.0, 8.0, -12.0, 8.0, -2.0, //
    2.0, -6.0, 8.0, -6.0, 2.0, //
    -1.0, 2.0, -2.0, 2.0, -1.0,
];
const KV_SCALE: f64 = 1.0 / 12.0;
/// Residuals are taken on the normalized input and multiplied back to pixel
/// units so the first layer sees values of order one.
const PIXEL_GAIN: f64 = 255.0;
const KV_SIDE: usize = 5;

const C1: usize = 8;
const K1: usize = 5;
const C2: usize = 16;
const K2: usize = 3;
pub(crate) const CLASSES: usize = 2;

const W1: usize = 0;
const B1: usize = W1 + C1 * K1 * K1;
const W2: usize = B1 + C1;
const B2: usize = W2 + C2 * C1 * K2 * K2;
const W3: usize = B2 + C2;
const B3: usize = W3 + CLASSES * C2;
pub const PARAM_COUNT: usize = B3 + CLASSES;

/// Output class; `Cover` is the positive class of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Stego = 0,
    Cover = 1,
}

impl Class {
    /// Softmax slot of this class.
    #[inline]
    pub(crate) fn slot(self) -> usize {
        match self {
            Class::Cover => 0,
            Class::Stego => 1,
        }
    }

    pub fn from_phi(phi: f64) -> Self {
        if phi >= 0.5 {
            Class::Cover
        } else {
            Class::Stego
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainingMeta {
    pub epochs: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    width: usize,
    height: usize,
    params: Vec<f64>,
    pub meta: TrainingMeta,
}

/// Normalizes pixels to [-0.5, 0.5].
pub fn normalize(img: &GrayImage) -> Vec<f64> {
    img.pixels().iter().map(|&p| f64::from(p) / 255.0 - 0.5).collect()
}

#[inline]
fn quantize(v: f64) -> f64 {
    f64::from(v as f32)
}

impl ClassifierModel {
    fn check_size(width: usize, height: usize) -> Result<()> {
        if width < 8 || height < 8 || (width - 4) % 4 != 0 || (height - 4) % 4 != 0 {
            return Err(Error::InvalidArgument(format!(
                "classifier input {width}x{height}: sides must be >= 8 and 4 more than a multiple of 4"
            )));
        }
        Ok(())
    }

    /// Every parameter zero: logits are constant, Phi is 0.5.
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::check_size(width, height)?;
        Ok(Self {
            width,
            height,
            params: vec![0.0; PARAM_COUNT],
            meta: TrainingMeta::default(),
        })
    }

    /// Seeded uniform fan-in initialization.
    pub fn init(width: usize, height: usize, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(width, height)?;
        let mut r = rng::stream(seed, &[rng::TAG_TRAIN, 0]);
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, params: &mut [f64]| {
            let a = (3.0 / fan_in as f64).sqrt();
            for p in &mut params[range] {
                *p = quantize(r.gen_range(-a..a));
            }
        };
        // residuals in pixel units are a few grey levels wide
        fill(W1..B1, K1 * K1 * 16, &mut m.params);
        fill(W2..B2, C1 * K2 * K2, &mut m.params);
        fill(W3..B3, C2, &mut m.params);
        m.meta.seed = seed;
        Ok(m)
    }

    pub fn from_params(width: usize, height: usize, params: Vec<f64>, meta: TrainingMeta) -> Result<Self> {
        Self::check_size(width, height)?;
        if params.len() != PARAM_COUNT {
            return Err(Error::ModelFormat(format!(
                "{} parameters, architecture has {PARAM_COUNT}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::ModelFormat("non-finite parameter".into()));
        }
        Ok(Self {
            width,
            height,
            params: params.into_iter().map(quantize).collect(),
            meta,
        })
    }

    pub fn input_size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Unrounded parameter access for the optimizer; call
    /// [`ClassifierModel::quantized`] before publishing the model.
    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn quantized(&self) -> Self {
        let mut m = self.clone();
        m.params.iter_mut().for_each(|p| *p = quantize(*p));
        m
    }

    /// Direct access to the final linear bias, for building fixed-output
    /// models.
    pub fn output_bias_mut(&mut self) -> &mut [f64] {
        &mut self.params[B3..B3 + CLASSES]
    }

    fn check_image(&self, img: &GrayImage) -> Result<()> {
        if img.dims() != (self.width, self.height) {
            return Err(Error::DimensionMismatch {
                expected: (self.width, self.height),
                got: img.dims(),
            });
        }
        Ok(())
    }

    /// Probability of the cover class.
    pub fn phi(&self, img: &GrayImage) -> Result<f64> {
        self.check_image(img)?;
        Ok(self.phi_normalized(&normalize(img)))
    }

    pub fn classify(&self, img: &GrayImage) -> Result<Class> {
        self.phi(img).map(Class::from_phi)
    }

    pub(crate) fn phi_normalized(&self, x: &[f64]) -> f64 {
        self.forward(x).prob[Class::Cover.slot()]
    }

    /// Cross-entropy against `label` for a normalized input.
    pub fn loss_normalized(&self, x: &[f64], label: Class) -> f64 {
        let f = self.forward(x);
        -log_softmax(&f.logits)[label.slot()]
    }

    /// Gradient of the cross-entropy against `label` with respect to the
    /// pixel values.
    pub fn input_gradient(&self, img: &GrayImage, label: Class) -> Result<Vec<f64>> {
        self.check_image(img)?;
        let mut g = self.input_gradient_normalized(&normalize(img), label);
        for v in &mut g {
            *v /= 255.0;
        }
        Ok(g)
    }

    /// Same gradient with respect to the normalized input.
    pub fn input_gradient_normalized(&self, x: &[f64], label: Class) -> Vec<f64> {
        let f = self.forward(x);
        self.backward(x, &f, label, None, true).expect("input gradient requested")
    }

    /// Accumulates the parameter gradient of the loss into `grad` and
    /// returns the loss.
    pub(crate) fn accumulate_param_gradient(&self, x: &[f64], label: Class, grad: &mut [f64]) -> f64 {
        let f = self.forward(x);
        let loss = -log_softmax(&f.logits)[label.slot()];
        self.backward(x, &f, label, Some(grad), false);
        loss
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let (w, h) = (self.width, self.height);
        let (rw, rh) = (w - 4, h - 4);
        let (pw, ph) = (rw / 2, rh / 2);
        let p = &self.params;

        let mut r = vec![0.0; rw * rh];
        for u in 0..KV_SIDE {
            for v in 0..KV_SIDE {
                let k = KV[u * KV_SIDE + v] * KV_SCALE * PIXEL_GAIN;
                for y in 0..rh {
                    let src = &x[(y + u) * w + v..(y + u) * w + v + rw];
                    for (d, &s) in r[y * rw..(y + 1) * rw].iter_mut().zip(src) {
                        *d += k * s;
                    }
                }
            }
        }

        let mut z1 = vec![0.0; C1 * rw * rh];
        let mut a1 = vec![0.0; C1 * rw * rh];
        let mut p1 = vec![0.0; C1 * pw * ph];
        for c in 0..C1 {
            let zc = &mut z1[c * rw * rh..(c + 1) * rw * rh];
            zc.fill(p[B1 + c]);
            corr_same(&r, rw, rh, &p[W1 + c * K1 * K1..W1 + (c + 1) * K1 * K1], K1, zc);
            let ac = &mut a1[c * rw * rh..(c + 1) * rw * rh];
            for (a, &z) in ac.iter_mut().zip(zc.iter()) {
                *a = z.abs().tanh();
            }
            pool2(ac, rw, rh, &mut p1[c * pw * ph..(c + 1) * pw * ph]);
        }

        let mut a2 = vec![0.0; C2 * pw * ph];
        let mut g = [0.0; C2];
        for d in 0..C2 {
            let ad = &mut a2[d * pw * ph..(d + 1) * pw * ph];
            ad.fill(p[B2 + d]);
            for c in 0..C1 {
                let k = &p[W2 + (d * C1 + c) * K2 * K2..W2 + (d * C1 + c + 1) * K2 * K2];
                corr_same(&p1[c * pw * ph..(c + 1) * pw * ph], pw, ph, k, K2, ad);
            }
            let mut sum = 0.0;
            for a in ad.iter_mut() {
                *a = a.tanh();
                sum += *a;
            }
            // mean of the 2x pooled map equals the mean of the map itself
            g[d] = sum / (pw * ph) as f64;
        }

        let mut logits = [0.0; CLASSES];
        for (o, l) in logits.iter_mut().enumerate() {
            *l = p[B3 + o] + (0..C2).map(|d| p[W3 + o * C2 + d] * g[d]).sum::<f64>();
        }
        let ls = log_softmax(&logits);
        let prob = [ls[0].exp(), ls[1].exp()];
        Forward {
            r,
            z1,
            a1,
            p1,
            a2,
            g,
            logits,
            prob,
        }
    }

    fn backward(
        &self,
        x: &[f64],
        f: &Forward,
        label: Class,
        mut grad: Option<&mut [f64]>,
        want_input: bool,
    ) -> Option<Vec<f64>> {
        debug_assert_eq!(x.len(), self.width * self.height);
        let (w, h) = (self.width, self.height);
        let (rw, rh) = (w - 4, h - 4);
        let (pw, ph) = (rw / 2, rh / 2);
        let p = &self.params;

        let mut dl = f.prob;
        dl[label.slot()] -= 1.0;

        let mut dg = [0.0; C2];
        for (d, dgd) in dg.iter_mut().enumerate() {
            *dgd = (0..CLASSES).map(|o| p[W3 + o * C2 + d] * dl[o]).sum();
        }
        if let Some(gr) = grad.as_deref_mut() {
            for o in 0..CLASSES {
                gr[B3 + o] += dl[o];
                for d in 0..C2 {
                    gr[W3 + o * C2 + d] += dl[o] * f.g[d];
                }
            }
        }

        let n2 = (pw * ph) as f64;
        let mut dp1 = vec![0.0; C1 * pw * ph];
        let mut dz2 = vec![0.0; pw * ph];
        for d in 0..C2 {
            let ad = &f.a2[d * pw * ph..(d + 1) * pw * ph];
            let s = dg[d] / n2;
            for (dz, &a) in dz2.iter_mut().zip(ad) {
                *dz = s * (1.0 - a * a);
            }
            if let Some(gr) = grad.as_deref_mut() {
                gr[B2 + d] += dz2.iter().sum::<f64>();
                for c in 0..C1 {
                    let off = W2 + (d * C1 + c) * K2 * K2;
                    corr_same_weight_grad(&f.p1[c * pw * ph..(c + 1) * pw * ph], pw, ph, &dz2, K2, &mut gr[off..off + K2 * K2]);
                }
            }
            for c in 0..C1 {
                let k = &p[W2 + (d * C1 + c) * K2 * K2..W2 + (d * C1 + c + 1) * K2 * K2];
                corr_same_input_grad(&dz2, pw, ph, k, K2, &mut dp1[c * pw * ph..(c + 1) * pw * ph]);
            }
        }

        let mut dr = if want_input { vec![0.0; rw * rh] } else { Vec::new() };
        let mut dz1 = vec![0.0; rw * rh];
        for c in 0..C1 {
            let dpc = &dp1[c * pw * ph..(c + 1) * pw * ph];
            let zc = &f.z1[c * rw * rh..(c + 1) * rw * rh];
            let ac = &f.a1[c * rw * rh..(c + 1) * rw * rh];
            for y in 0..rh {
                for xx in 0..rw {
                    let i = y * rw + xx;
                    let up = 0.25 * dpc[(y / 2) * pw + xx / 2];
                    let a = ac[i];
                    dz1[i] = up * (1.0 - a * a) * zc[i].signum();
                }
            }
            if let Some(gr) = grad.as_deref_mut() {
                gr[B1 + c] += dz1.iter().sum::<f64>();
                let off = W1 + c * K1 * K1;
                corr_same_weight_grad(&f.r, rw, rh, &dz1, K1, &mut gr[off..off + K1 * K1]);
            }
            if want_input {
                corr_same_input_grad(&dz1, rw, rh, &p[W1 + c * K1 * K1..W1 + (c + 1) * K1 * K1], K1, &mut dr);
            }
        }

        if !want_input {
            return None;
        }
        let mut dx = vec![0.0; w * h];
        for u in 0..KV_SIDE {
            for v in 0..KV_SIDE {
                let k = KV[u * KV_SIDE + v] * KV_SCALE * PIXEL_GAIN;
                for y in 0..rh {
                    let dst = &mut dx[(y + u) * w + v..(y + u) * w + v + rw];
                    for (d, &s) in dst.iter_mut().zip(&dr[y * rw..(y + 1) * rw]) {
                        *d += k * s;
                    }
                }
            }
        }
        Some(dx)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 4 * PARAM_COUNT);
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&ARCH_TAG.to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&self.meta.epochs.to_le_bytes());
        out.extend_from_slice(&self.meta.seed.to_le_bytes());
        for &p in &self.params {
            out.extend_from_slice(&(p as f32).to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        const HEADER: usize = 4 + 4 * 5 + 8;
        if bytes.len() < HEADER || &bytes[..4] != MODEL_MAGIC {
            return Err(Error::ModelFormat("missing STGM header".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let arch = u32_at(8);
        if arch != ARCH_TAG {
            return Err(Error::ModelFormat(format!("unknown architecture tag {arch:#x}")));
        }
        let (width, height) = (u32_at(12) as usize, u32_at(16) as usize);
        let meta = TrainingMeta {
            epochs: u32_at(20),
            seed: u64::from_le_bytes(bytes[24..32].try_into().unwrap()),
        };
        let body = &bytes[HEADER..];
        if body.len() != 4 * PARAM_COUNT {
            return Err(Error::ModelFormat(format!(
                "{} parameter bytes, expected {}",
                body.len(),
                4 * PARAM_COUNT
            )));
        }
        let params = body
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        Self::from_params(width, height, params, meta)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }
}

struct Forward {
    r: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    p1: Vec<f64>,
    a2: Vec<f64>,
    g: [f64; C2],
    logits: [f64; CLASSES],
    prob: [f64; CLASSES],
}

fn log_softmax(l: &[f64; CLASSES]) -> [f64; CLASSES] {
    let m = l[0].max(l[1]);
    let lse = m + ((l[0] - m).exp() + (l[1] - m).exp()).ln();
    [l[0] - lse, l[1] - lse]
}

/// Row bounds for a same-size correlation tap at offset `d`.
#[inline]
fn span(n: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d.max(0)).max(lo as isize) as usize;
    (lo, hi)
}

/// `dst[y][x] += sum k[u][v] * src[y+u-c][x+v-c]`, zero padded.
fn corr_same(src: &[f64], w: usize, h: usize, k: &[f64], ks: usize, dst: &mut [f64]) {
    let c = (ks / 2) as isize;
    for u in 0..ks {
        let dy = u as isize - c;
        let (y0, y1) = span(h, dy);
        for v in 0..ks {
            let dx = v as isize - c;
            let (x0, x1) = span(w, dx);
            let kv = k[u * ks + v];
            for y in y0..y1 {
                let sy = (y as isize + dy) as usize;
                let s = &src[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
                for (d, &sv) in dst[y * w + x0..y * w + x1].iter_mut().zip(s) {
                    *d += kv * sv;
                }
            }
        }
    }
}

/// Adjoint of [`corr_same`] with respect to `src`.
fn corr_same_input_grad(ddst: &[f64], w: usize, h: usize, k: &[f64], ks: usize, dsrc: &mut [f64]) {
    let c = (ks / 2) as isize;
    for u in 0..ks {
        let dy = u as isize - c;
        let (y0, y1) = span(h, dy);
        for v in 0..ks {
            let dx = v as isize - c;
            let (x0, x1) = span(w, dx);
            let kv = k[u * ks + v];
            for y in y0..y1 {
                let sy = (y as isize + dy) as usize;
                let s = &mut dsrc[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
                for (sv, &d) in s.iter_mut().zip(&ddst[y * w + x0..y * w + x1]) {
                    *sv += kv * d;
                }
            }
        }
    }
}

/// Gradient of [`corr_same`] with respect to the kernel, accumulated.
fn corr_same_weight_grad(src: &[f64], w: usize, h: usize, ddst: &[f64], ks: usize, dk: &mut [f64]) {
    let c = (ks / 2) as isize;
    for u in 0..ks {
        let dy = u as isize - c;
        let (y0, y1) = span(h, dy);
        for v in 0..ks {
            let dx = v as isize - c;
            let (x0, x1) = span(w, dx);
            let mut acc = 0.0;
            for y in y0..y1 {
                let sy = (y as isize + dy) as usize;
                let s = &src[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
                acc += s.iter().zip(&ddst[y * w + x0..y * w + x1]).map(|(a, b)| a * b).sum::<f64>();
            }
            dk[u * ks + v] += acc;
        }
    }
}

fn pool2(src: &[f64], w: usize, h: usize, dst: &mut [f64]) {
    let pw = w / 2;
    for y in 0..h / 2 {
        for x in 0..pw {
            let i = 2 * y * w + 2 * x;
            dst[y * pw + x] = 0.25 * (src[i] + src[i + 1] + src[i + w] + src[i + w + 1]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::generate_cover;

    fn random_model(seed: u64) -> ClassifierModel {
        let mut m = ClassifierModel::init(16, 16, seed).unwrap();
        // give the head some weight so gradients are not tiny
        let mut r = rng::stream(seed, &[9]);
        for p in &mut m.params[W3..] {
            *p = quantize(r.gen_range(-2.0..2.0));
        }
        m
    }

    #[test]
    fn zero_model_is_indifferent() {
        let m = ClassifierModel::zeros(16, 16).unwrap();
        let img = generate_cover(1, 16, 16).unwrap();
        assert_eq!(m.phi(&img).unwrap(), 0.5);
        assert_eq!(m.classify(&img).unwrap(), Class::Cover);
        assert!(m.input_gradient(&img, Class::Cover).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn phi_is_a_pure_probability() {
        let m = random_model(3);
        let img = generate_cover(2, 16, 16).unwrap();
        let a = m.phi(&img).unwrap();
        assert!((0.0..=1.0).contains(&a));
        assert_eq!(a, m.phi(&img).unwrap());
    }

    #[test]
    fn label_gradients_are_opposite() {
        // dL_cover = -dp/p and dL_stego = dp/(1-p): same line, opposite
        // direction, magnitudes in ratio (1-p)/p
        let m = random_model(4);
        let img = generate_cover(5, 16, 16).unwrap();
        let p = m.phi(&img).unwrap();
        let gc = m.input_gradient(&img, Class::Cover).unwrap();
        let gs = m.input_gradient(&img, Class::Stego).unwrap();
        for (a, b) in gc.iter().zip(&gs) {
            assert!(a.signum() == -b.signum() || *a == 0.0);
            assert!((a + b * (1.0 - p) / p).abs() <= 1e-9 * a.abs().max(1e-12));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = random_model(6);
        let img = generate_cover(7, 16, 16).unwrap();
        let x = normalize(&img);
        let g = m.input_gradient_normalized(&x, Class::Cover);
        let step = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += step;
            xm[i] -= step;
            let fd = (m.loss_normalized(&xp, Class::Cover) - m.loss_normalized(&xm, Class::Cover)) / (2.0 * step);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-8);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-3, "worst relative error {worst}");
    }

    #[test]
    fn param_gradient_matches_finite_differences() {
        let m = random_model(8);
        let img = generate_cover(9, 16, 16).unwrap();
        let x = normalize(&img);
        let mut g = vec![0.0; PARAM_COUNT];
        m.accumulate_param_gradient(&x, Class::Stego, &mut g);
        let step = 1e-5;
        for i in (0..PARAM_COUNT).step_by(7) {
            let mut mp = m.clone();
            let mut mm = m.clone();
            mp.params[i] += step;
            mm.params[i] -= step;
            let fd = (mp.loss_normalized(&x, Class::Stego) - mm.loss_normalized(&x, Class::Stego)) / (2.0 * step);
            let err = (fd - g[i]).abs();
            assert!(err <= 1e-5 * fd.abs().max(1e-3), "param {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn file_round_trip_is_exact() {
        let mut m = random_model(10);
        m.meta = TrainingMeta { epochs: 4, seed: 77 };
        let back = ClassifierModel::decode(&m.encode()).unwrap();
        assert_eq!(back, m);
        let img = generate_cover(11, 16, 16).unwrap();
        assert_eq!(back.phi(&img).unwrap().to_bits(), m.phi(&img).unwrap().to_bits());
    }

    #[test]
    fn rejects_bad_files_and_sizes() {
        let m = random_model(12);
        let mut bytes = m.encode();
        assert!(ClassifierModel::decode(&bytes[..20]).is_err());
        bytes[8] ^= 1;
        assert!(ClassifierModel::decode(&bytes).is_err());
        let mut bytes = m.encode();
        bytes.pop();
        assert!(ClassifierModel::decode(&bytes).is_err());
        assert!(ClassifierModel::zeros(18, 16).is_err());
        let img = generate_cover(1, 20, 20).unwrap();
        assert!(m.phi(&img).is_err());
    }
}
