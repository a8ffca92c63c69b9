//! Grayscale image container, binary PGM (P5) I/O, the synthetic cover
//! generator and dataset split manifests.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// 8-bit grayscale image, row-major. Width and height are always even.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty image {width}x{height}")));
        }
        if width % 2 != 0 || height % 2 != 0 {
            return Err(Error::OddDimension { width, height });
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.data
    }

    /// Pixel at zero-based `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.data[row * self.width + col] = value;
    }

    pub(crate) fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&p| f64::from(p)).collect()
    }

    pub(crate) fn check_dims(&self, width: usize, height: usize) -> Result<()> {
        if self.dims() != (width, height) {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                got: self.dims(),
            });
        }
        Ok(())
    }
}

/// Decodes a binary PGM. Comments in the header are skipped.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::MalformedHeader(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parse_field(bytes, &mut pos, "width")?;
    let height = parse_field(bytes, &mut pos, "height")?;
    let maxval = parse_field(bytes, &mut pos, "maxval")?;
    // exactly one whitespace byte separates maxval from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("missing raster separator".into())),
    }
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval as u32));
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("empty image {width}x{height}")));
    }
    if width % 2 != 0 || height % 2 != 0 {
        return Err(Error::OddDimension { width, height });
    }
    let expected = width * height;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: raster.len(),
        });
    }
    GrayImage::new(width, height, raster[..expected].to_vec())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(_) => break,
            None => return Err(Error::MalformedHeader("unexpected end of header".into())),
        }
    }
    let start = *pos;
    while let Some(b) = bytes.get(*pos) {
        if b.is_ascii_whitespace() || *b == b'#' {
            break;
        }
        *pos += 1;
    }
    Ok(&bytes[start..*pos])
}

fn parse_field(bytes: &[u8], pos: &mut usize, name: &str) -> Result<usize> {
    let tok = next_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| {
            Error::MalformedHeader(format!("bad {name} {:?}", String::from_utf8_lossy(tok)))
        })
}

/// Canonical P5 encoding: `P5\n<w> <h>\n255\n` followed by raw bytes.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.data.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.data);
    out
}

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&fs::read(path)?)
}

pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

/// Mirror ("symmetric") index into `0..n`: the edge sample is repeated, so
/// `-1 -> 0` and `n -> n - 1`.
#[inline]
pub(crate) fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - 1 - k;
    }
    k as usize
}

fn mean3x3(src: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for dr in -1isize..=1 {
                let rr = mirror(r as isize + dr, height);
                for dc in -1isize..=1 {
                    acc += src[rr * width + mirror(c as isize + dc, width)];
                }
            }
            out[r * width + c] = acc / 9.0;
        }
    }
    out
}

/// Variance over pixels of the local 3x3 standard deviation. Zero only for
/// images without any local texture contrast.
pub fn local_std_variance(img: &GrayImage) -> f64 {
    let (w, h) = img.dims();
    let x = img.to_f64();
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let m = mean3x3(&x, w, h);
    let m2 = mean3x3(&sq, w, h);
    let stds: Vec<f64> = m
        .iter()
        .zip(&m2)
        .map(|(mu, s)| (s - mu * mu).max(0.0).sqrt())
        .collect();
    let n = stds.len() as f64;
    let mean = stds.iter().sum::<f64>() / n;
    stds.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n
}

pub const MIN_COVER_SIDE: usize = 16;

/// Deterministic textured cover: white noise smoothed twice by a 3x3 mean
/// filter and stretched to span `[0, 255]`.
pub fn generate_cover(seed: u64, width: usize, height: usize) -> Result<GrayImage> {
    if width < MIN_COVER_SIDE || height < MIN_COVER_SIDE {
        return Err(Error::InvalidArgument(format!(
            "cover {width}x{height} smaller than {MIN_COVER_SIDE}x{MIN_COVER_SIDE}"
        )));
    }
    if width % 2 != 0 || height % 2 != 0 {
        return Err(Error::OddDimension { width, height });
    }
    let mut rng = rng::stream(seed, &[rng::TAG_COVER, width as u64, height as u64]);
    let noise: Vec<f64> = (0..width * height).map(|_| rng.gen::<f64>()).collect();
    let smooth = mean3x3(&mean3x3(&noise, width, height), width, height);
    let lo = smooth.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = smooth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let data = smooth
        .iter()
        .map(|v| ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    let img = GrayImage::new(width, height, data)?;
    if local_std_variance(&img) <= 0.0 {
        return Err(Error::InvalidImage("generated cover has no texture contrast".into()));
    }
    Ok(img)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitKind {
    Train,
    Validation,
    Test,
}

impl SplitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Validation => "validation",
            SplitKind::Test => "test",
        }
    }
}

impl FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitKind::Train),
            "validation" | "val" => Ok(SplitKind::Validation),
            "test" => Ok(SplitKind::Test),
            other => Err(Error::InvalidArgument(format!("unknown split {other:?}"))),
        }
    }
}

/// Disjoint train/validation/test partition of image ids `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn new(n_train: usize, n_validation: usize, n_test: usize, seed: u64) -> Self {
        let total = n_train + n_validation + n_test;
        let mut ids: Vec<usize> = (0..total).collect();
        ids.shuffle(&mut rng::stream(seed, &[rng::TAG_SPLIT, total as u64]));
        let test = ids.split_off(n_train + n_validation);
        let validation = ids.split_off(n_train);
        Self {
            train: ids,
            validation,
            test,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind_of(&self, id: usize) -> Option<SplitKind> {
        if self.train.contains(&id) {
            Some(SplitKind::Train)
        } else if self.validation.contains(&id) {
            Some(SplitKind::Validation)
        } else if self.test.contains(&id) {
            Some(SplitKind::Test)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: usize,
    pub path: PathBuf,
    pub split: SplitKind,
}

/// Renders `<id> <path> <split>` lines, sorted by id.
pub fn format_manifest(entries: &[ManifestEntry]) -> String {
    let mut sorted: Vec<&ManifestEntry> = entries.iter().collect();
    sorted.sort_by_key(|e| e.id);
    sorted
        .iter()
        .map(|e| format!("{} {} {}\n", e.id, e.path.display(), e.split.as_str()))
        .collect()
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::InvalidArgument(format!("manifest line {}: {line:?}", n + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            Ok(ManifestEntry {
                id: fields[0].parse().map_err(|_| bad())?,
                path: PathBuf::from(fields[1]),
                split: fields[2].parse()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn constant_image_round_trip() {
        let mut bytes = b"P5\n4 4\n255\n".to_vec();
        bytes.extend(std::iter::repeat(128).take(16));
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!(img, GrayImage::filled(4, 4, 128).unwrap());
        assert_eq!(encode_pgm(&img), bytes);
    }

    #[test]
    fn canonical_layout() {
        let img = GrayImage::new(2, 2, vec![0, 255, 7, 9]).unwrap();
        let bytes = encode_pgm(&img);
        assert_eq!(bytes.len(), 11 + 4);
        assert_eq!(&bytes[..11], b"P5\n2 2\n255\n");
        assert_eq!(&bytes[11..], &[0, 255, 7, 9]);
        assert_eq!(encode_pgm(&img), bytes);
    }

    #[test]
    fn rejects_bad_files() {
        let mut odd = b"P5\n5 4\n255\n".to_vec();
        odd.extend([0u8; 20]);
        assert!(matches!(decode_pgm(&odd), Err(Error::OddDimension { .. })));
        let mut maxval = b"P5\n2 2\n65535\n".to_vec();
        maxval.extend([0u8; 8]);
        assert!(matches!(decode_pgm(&maxval), Err(Error::UnsupportedMaxval(65535))));
        let short = b"P5\n4 4\n255\n\x01\x02".to_vec();
        assert!(matches!(
            decode_pgm(&short),
            Err(Error::Truncated { expected: 16, found: 2 })
        ));
        assert!(matches!(decode_pgm(b"P2\n2 2\n255\n"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode_pgm(b"P5\n2 x\n255\n"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode_pgm(b"P5\n2"), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 2\n255\n".to_vec();
        bytes.extend([1, 2, 3, 4]);
        assert_eq!(decode_pgm(&bytes).unwrap().pixels(), &[1, 2, 3, 4]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let img = generate_cover(3, 32, 16).unwrap();
        save_image(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
        let first = fs::read(&path).unwrap();
        save_image(&load_image(&path).unwrap(), &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn cover_generator_is_deterministic_and_textured() {
        let a = generate_cover(1, 64, 64).unwrap();
        assert_eq!(a, generate_cover(1, 64, 64).unwrap());
        let b = generate_cover(2, 64, 64).unwrap();
        let differing = a.pixels().iter().zip(b.pixels()).filter(|(x, y)| x != y).count();
        assert!(differing * 100 >= a.len(), "{differing} differing pixels");
        let mut seen = [false; 256];
        a.pixels().iter().for_each(|&p| seen[p as usize] = true);
        assert!(seen.iter().filter(|&&s| s).count() >= 10);
        assert_eq!(*a.pixels().iter().min().unwrap(), 0);
        assert_eq!(*a.pixels().iter().max().unwrap(), 255);
        assert!(local_std_variance(&a) > 0.0);
    }

    #[test]
    fn cover_generator_rejects_bad_sizes() {
        assert!(generate_cover(0, 8, 64).is_err());
        assert!(matches!(generate_cover(0, 64, 33), Err(Error::OddDimension { .. })));
    }

    #[test]
    fn mirror_indexing() {
        assert_eq!(mirror(-1, 5), 0);
        assert_eq!(mirror(-2, 5), 1);
        assert_eq!(mirror(5, 5), 4);
        assert_eq!(mirror(6, 5), 3);
        assert_eq!(mirror(-7, 5), 3);
    }

    #[test]
    fn split_partitions_and_reproduces() {
        let s = DatasetSplit::new(20, 5, 7, 99);
        assert_eq!(s, DatasetSplit::new(20, 5, 7, 99));
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..32).collect::<Vec<_>>());
        assert_eq!(s.kind_of(s.test[0]), Some(SplitKind::Test));
        assert_ne!(s.train, DatasetSplit::new(20, 5, 7, 100).train);
    }

    #[test]
    fn manifest_round_trip() {
        let entries = vec![
            ManifestEntry { id: 1, path: "b.pgm".into(), split: SplitKind::Test },
            ManifestEntry { id: 0, path: "a.pgm".into(), split: SplitKind::Train },
        ];
        let text = format_manifest(&entries);
        assert_eq!(text, "0 a.pgm train\n1 b.pgm test\n");
        let parsed = parse_manifest(&text).unwrap();
        assert_eq!(parsed[0], entries[1]);
        assert!(parse_manifest("0 a.pgm nowhere\n").is_err());
    }

    proptest! {
        #[test]
        fn pgm_round_trip(w in 1usize..8, h in 1usize..8, seed in any::<u64>()) {
            let (w, h) = (2 * w, 2 * h);
            let mut rng = rng::stream(seed, &[]);
            let data: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
            let img = GrayImage::new(w, h, data).unwrap();
            prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
        }
    }
}
