//! Quantized datasets: rounding, two-moon synthesis, IDX reading and the
//! MNIST 6/9 tri-level preprocessing.

use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use num_traits::{Signed, ToPrimitive};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::poly::{fmt_rational, int, parse_rational, Rational};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("non-finite value in sample {sample}")]
    NonFinite { sample: usize },
    #[error("ragged dataset: sample {sample} has {got} {what}, expected {want}")]
    Ragged { sample: usize, what: &'static str, got: usize, want: usize },
    #[error("sample {sample}: |x| = {value} exceeds 2^{bits}")]
    InputRange { sample: usize, value: i64, bits: u32 },
    #[error("sample {sample}: label {label} outside [-1, 1]")]
    LabelRange { sample: usize, label: String },
    #[error("two-moon needs an even, positive sample count, got {0}")]
    OddSampleCount(usize),
    #[error("noise must be finite and non-negative")]
    BadNoise,
    #[error("image {index} has no pixel above the binarize threshold")]
    DegenerateImage { index: usize },
    #[error("invalid preprocessing config: {0}")]
    Config(String),
    #[error("class {label} has {have} samples, {need} requested")]
    InsufficientClass { label: String, have: usize, need: usize },
    #[error("per-class count must be at least 1")]
    EmptySelection,
    #[error("IDX {path}: {msg}")]
    Idx { path: String, msg: String },
    #[error("dataset file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Integer inputs in `[-2^B, 2^B]`, rational labels in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedDataset {
    pub inputs: Vec<Vec<i64>>,
    pub labels: Vec<Vec<Rational>>,
    pub input_bits: u32,
    pub provenance: String,
}

impl QuantizedDataset {
    pub fn new(
        inputs: Vec<Vec<i64>>,
        labels: Vec<Vec<Rational>>,
        input_bits: u32,
        provenance: impl Into<String>,
    ) -> Result<Self, DataError> {
        if inputs.len() != labels.len() {
            return Err(DataError::Ragged { sample: inputs.len().min(labels.len()), what: "rows", got: labels.len(), want: inputs.len() });
        }
        let n = inputs.first().map_or(0, Vec::len);
        let m = labels.first().map_or(0, Vec::len);
        let bound = 1i64 << input_bits;
        for (i, (x, y)) in inputs.iter().zip(&labels).enumerate() {
            if x.len() != n {
                return Err(DataError::Ragged { sample: i, what: "inputs", got: x.len(), want: n });
            }
            if y.len() != m {
                return Err(DataError::Ragged { sample: i, what: "labels", got: y.len(), want: m });
            }
            if let Some(&v) = x.iter().find(|v| v.abs() > bound) {
                return Err(DataError::InputRange { sample: i, value: v, bits: input_bits });
            }
            if let Some(v) = y.iter().find(|v| v.abs() > int(1)) {
                return Err(DataError::LabelRange { sample: i, label: fmt_rational(v) });
            }
        }
        Ok(QuantizedDataset { inputs, labels, input_bits, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs_per_sample(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn outputs_per_sample(&self) -> usize {
        self.labels.first().map_or(0, Vec::len)
    }

    /// Samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize], provenance: impl Into<String>) -> QuantizedDataset {
        QuantizedDataset {
            inputs: indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            input_bits: self.input_bits,
            provenance: provenance.into(),
        }
    }

    pub fn to_raw(&self) -> RawDataset {
        RawDataset {
            inputs: self.inputs.iter().map(|x| x.iter().map(|&v| v as f64).collect()).collect(),
            labels: self.labels.iter().map(|y| y.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()).collect(),
        }
    }

    /// `dataset n m N B`, optional `# provenance:` line, then `x... | y...` rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("dataset {} {} {} {}\n", self.inputs_per_sample(), self.outputs_per_sample(), self.len(), self.input_bits);
        for line in self.provenance.lines() {
            out.push_str(&format!("# provenance: {line}\n"));
        }
        for (x, y) in self.inputs.iter().zip(&self.labels) {
            let xs: Vec<String> = x.iter().map(i64::to_string).collect();
            let ys: Vec<String> = y.iter().map(fmt_rational).collect();
            out.push_str(&format!("{} | {}\n", xs.join(" "), ys.join(" ")));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, DataError> {
        let mut header: Option<(usize, usize, usize, u32)> = None;
        let mut provenance = Vec::new();
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let perr = |msg: String| DataError::Parse { line: line_no, msg };
            let trimmed = raw.trim();
            if let Some(rest) = trimmed.strip_prefix("# provenance:") {
                provenance.push(rest.strip_prefix(' ').unwrap_or(rest).to_string());
                continue;
            }
            let line = trimmed.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((n, m, _, _)) = header else {
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() != 5 || f[0] != "dataset" {
                    return Err(perr("expected header `dataset n m N B`".into()));
                }
                let num = |s: &str| s.parse::<usize>().map_err(|_| perr(format!("bad integer `{s}`")));
                header = Some((num(f[1])?, num(f[2])?, num(f[3])?, num(f[4])? as u32));
                continue;
            };
            let (xs, ys) = line.split_once('|').ok_or_else(|| perr("missing `|` separator".into()))?;
            let x: Vec<i64> = xs
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| perr(format!("bad input `{s}`"))))
                .collect::<Result<_, _>>()?;
            let y: Vec<Rational> = ys.split_whitespace().map(|s| parse_rational(s).map_err(&perr)).collect::<Result<_, _>>()?;
            if x.len() != n || y.len() != m {
                return Err(perr(format!("expected {n} inputs and {m} labels")));
            }
            inputs.push(x);
            labels.push(y);
        }
        let (_, _, count, bits) = header.ok_or(DataError::Parse { line: 0, msg: "empty dataset file".into() })?;
        if inputs.len() != count {
            return Err(DataError::Parse { line: 0, msg: format!("header declares {count} samples, found {}", inputs.len()) });
        }
        QuantizedDataset::new(inputs, labels, bits, provenance.join("\n"))
    }

    pub fn read(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::parse_text(&text)
    }
}

fn io_err(path: &Path, source: io::Error) -> DataError {
    DataError::Io { path: path.display().to_string(), source }
}

/// Real-valued samples before quantization.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<Vec<f64>>,
}

const LABEL_GRID: f64 = (1u64 << 20) as f64;

/// `x' = round(x * scale)` clamped to `[-2^B, 2^B]`; labels divided by their
/// largest magnitude when it exceeds 1 and kept on a `2^-20` grid.
pub fn quantize(raw: &RawDataset, input_bits: u32, scale: f64, provenance: &str) -> Result<QuantizedDataset, DataError> {
    if !scale.is_finite() {
        return Err(DataError::NonFinite { sample: 0 });
    }
    let bound = (1i64 << input_bits) as f64;
    let mut y_max: f64 = 0.0;
    for (i, (x, y)) in raw.inputs.iter().zip(&raw.labels).enumerate() {
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { sample: i });
        }
        y_max = y.iter().fold(y_max, |acc, v| acc.max(v.abs()));
    }
    let y_div = if y_max > 1.0 { y_max } else { 1.0 };
    let inputs = raw
        .inputs
        .iter()
        .map(|x| x.iter().map(|v| (v * scale).round().clamp(-bound, bound) as i64).collect())
        .collect();
    let labels = raw
        .labels
        .iter()
        .map(|y| {
            y.iter()
                .map(|v| {
                    let units = (v / y_div * LABEL_GRID).round();
                    Rational::new((units as i64).into(), (LABEL_GRID as i64).into())
                })
                .collect()
        })
        .collect();
    QuantizedDataset::new(inputs, labels, input_bits, provenance)
}

/// Two interleaved half circles; the upper arc is labeled +1.
pub fn two_moon_raw(n_samples: usize, noise: f64, seed: u64) -> Result<RawDataset, DataError> {
    if n_samples == 0 || !n_samples.is_multiple_of(2) {
        return Err(DataError::OddSampleCount(n_samples));
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(DataError::BadNoise);
    }
    let half = n_samples / 2;
    let step = if half > 1 { std::f64::consts::PI / (half - 1) as f64 } else { 0.0 };
    let mut inputs = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for i in 0..half {
        let t = step * i as f64;
        inputs.push(vec![t.cos(), t.sin()]);
        labels.push(vec![1.0]);
    }
    for i in 0..half {
        let t = step * i as f64;
        inputs.push(vec![1.0 - t.cos(), 0.5 - t.sin()]);
        labels.push(vec![-1.0]);
    }
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise).map_err(|_| DataError::BadNoise)?;
        for x in &mut inputs {
            for v in x.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    Ok(RawDataset { inputs, labels })
}

pub const TWO_MOON_DEFAULT_NOISE: f64 = 0.1;

/// Two-moon samples centered on the origin and scaled so the noiseless arcs
/// span `[-2^B, 2^B]` horizontally, then quantized.
pub fn two_moon(n_samples: usize, noise: f64, seed: u64, input_bits: u32) -> Result<QuantizedDataset, DataError> {
    let mut raw = two_moon_raw(n_samples, noise, seed)?;
    for x in &mut raw.inputs {
        x[0] -= 0.5;
        x[1] -= 0.25;
    }
    let scale = (1u64 << input_bits) as f64 / 1.5;
    let provenance = format!("two_moon n_samples={n_samples} noise={noise} seed={seed} input_bits={input_bits}");
    quantize(&raw, input_bits, scale, &provenance)
}

/// Grayscale images from an IDX3 file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<Vec<u8>>,
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = BufReader::new(file);
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw).map_err(|e| io_err(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out).map_err(|e| io_err(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn parse_idx(path: &Path, bytes: &[u8], dims_expected: u8) -> Result<(Vec<usize>, usize), DataError> {
    let err = |msg: String| DataError::Idx { path: path.display().to_string(), msg };
    if bytes.len() < 4 || bytes[0] != 0 || bytes[1] != 0 {
        return Err(err("bad magic".into()));
    }
    if bytes[2] != 0x08 {
        return Err(err(format!("element type 0x{:02x} is not unsigned byte", bytes[2])));
    }
    if bytes[3] != dims_expected {
        return Err(err(format!("expected {dims_expected} dimensions, found {}", bytes[3])));
    }
    let header = 4 + 4 * dims_expected as usize;
    if bytes.len() < header {
        return Err(err("truncated header".into()));
    }
    let dims: Vec<usize> = (0..dims_expected as usize)
        .map(|d| u32::from_be_bytes(bytes[4 + 4 * d..8 + 4 * d].try_into().unwrap()) as usize)
        .collect();
    let total: usize = dims.iter().product();
    if bytes.len() != header + total {
        return Err(err(format!("payload is {} bytes, dimensions need {total}", bytes.len() - header)));
    }
    Ok((dims, header))
}

/// Reads an IDX3 unsigned-byte image file, gzip-compressed or not.
pub fn read_idx_images(path: &Path) -> Result<IdxImages, DataError> {
    let bytes = read_maybe_gz(path)?;
    let (dims, start) = parse_idx(path, &bytes, 3)?;
    let (rows, cols) = (dims[1], dims[2]);
    let pixels = bytes[start..].chunks_exact(rows * cols).map(<[u8]>::to_vec).collect();
    Ok(IdxImages { rows, cols, pixels })
}

/// Reads an IDX1 unsigned-byte label file, gzip-compressed or not.
pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>, DataError> {
    let bytes = read_maybe_gz(path)?;
    let (_, start) = parse_idx(path, &bytes, 1)?;
    Ok(bytes[start..].to_vec())
}

/// Writes images as an uncompressed IDX3 file body.
pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = vec![0, 0, 0x08, 3];
    for d in [images.pixels.len(), images.rows, images.cols] {
        out.extend((d as u32).to_be_bytes());
    }
    for p in &images.pixels {
        out.extend(p);
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = vec![0, 0, 0x08, 1];
    out.extend((labels.len() as u32).to_be_bytes());
    out.extend(labels);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct MnistConfig {
    /// First digit is labeled +1, second -1.
    pub digits: (u8, u8),
    /// Pixels strictly above this are white.
    pub binarize_threshold: u8,
    /// Patches per side.
    pub patch_grid: usize,
    /// White fraction below `t1` maps to -1, below `t2` to 0, else +1.
    pub t1: f64,
    pub t2: f64,
}

impl Default for MnistConfig {
    fn default() -> Self {
        MnistConfig { digits: (6, 9), binarize_threshold: 127, patch_grid: 2, t1: 0.1, t2: 0.35 }
    }
}

impl MnistConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        if !(0.0 <= self.t1 && self.t1 < self.t2 && self.t2 <= 1.0) {
            return Err(DataError::Config(format!("need 0 <= t1 < t2 <= 1, got t1={} t2={}", self.t1, self.t2)));
        }
        if self.patch_grid == 0 {
            return Err(DataError::Config("patch_grid must be at least 1".into()));
        }
        if self.digits.0 == self.digits.1 {
            return Err(DataError::Config("the two digits must differ".into()));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "mnist digits={},{} binarize_threshold={} patch_grid={} t1={} t2={}",
            self.digits.0, self.digits.1, self.binarize_threshold, self.patch_grid, self.t1, self.t2
        )
    }
}

/// White-pixel counts and areas of every patch, row-major.
pub fn patch_counts(pixels: &[u8], rows: usize, cols: usize, cfg: &MnistConfig, index: usize) -> Result<Vec<(usize, usize)>, DataError> {
    let white = |r: usize, c: usize| pixels[r * cols + c] > cfg.binarize_threshold;
    let mut bbox: Option<(usize, usize, usize, usize)> = None;
    for r in 0..rows {
        for c in 0..cols {
            if white(r, c) {
                bbox = Some(match bbox {
                    None => (r, r, c, c),
                    Some((r0, r1, c0, c1)) => (r0.min(r), r1.max(r), c0.min(c), c1.max(c)),
                });
            }
        }
    }
    let (r0, r1, c0, c1) = bbox.ok_or(DataError::DegenerateImage { index })?;
    let (h, w) = (r1 - r0 + 1, c1 - c0 + 1);
    let g = cfg.patch_grid;
    let cut = |len: usize, k: usize| (k * len).div_ceil(g);
    let mut out = Vec::with_capacity(g * g);
    for pr in 0..g {
        for pc in 0..g {
            let (ra, rb) = (r0 + cut(h, pr), r0 + cut(h, pr + 1));
            let (ca, cb) = (c0 + cut(w, pc), c0 + cut(w, pc + 1));
            let count = (ra..rb).flat_map(|r| (ca..cb).map(move |c| (r, c))).filter(|&(r, c)| white(r, c)).count();
            out.push((count, (rb - ra) * (cb - ca)));
        }
    }
    Ok(out)
}

/// Maps patch counts to `{-1, 0, +1}`; empty patches map to -1.
pub fn tri_level(counts: &[(usize, usize)], cfg: &MnistConfig) -> Vec<i64> {
    counts
        .iter()
        .map(|&(count, area)| {
            let ratio = if area == 0 { 0.0 } else { count as f64 / area as f64 };
            if ratio < cfg.t1 {
                -1
            } else if ratio < cfg.t2 {
                0
            } else {
                1
            }
        })
        .collect()
}

pub fn preprocess_image(pixels: &[u8], rows: usize, cols: usize, cfg: &MnistConfig, index: usize) -> Result<Vec<i64>, DataError> {
    Ok(tri_level(&patch_counts(pixels, rows, cols, cfg, index)?, cfg))
}

/// Keeps the two configured digits, crops, splits and tri-levels every image.
/// Output order follows input order.
pub fn preprocess_mnist(images: &IdxImages, labels: &[u8], cfg: &MnistConfig) -> Result<QuantizedDataset, DataError> {
    cfg.validate()?;
    if images.pixels.len() != labels.len() {
        return Err(DataError::Config(format!("{} images but {} labels", images.pixels.len(), labels.len())));
    }
    let picked: Vec<(usize, i64)> = labels
        .iter()
        .enumerate()
        .filter_map(|(i, &d)| match d {
            d if d == cfg.digits.0 => Some((i, 1)),
            d if d == cfg.digits.1 => Some((i, -1)),
            _ => None,
        })
        .collect();
    let inputs: Vec<Vec<i64>> = picked
        .par_iter()
        .map(|&(i, _)| preprocess_image(&images.pixels[i], images.rows, images.cols, cfg, i))
        .collect::<Result<_, _>>()?;
    let labels = picked.iter().map(|&(_, y)| vec![int(y)]).collect();
    QuantizedDataset::new(inputs, labels, 0, cfg.describe())
}

/// Seeded stratified pick of `per_class` samples from each label class
/// (classes by first label, highest first). Returns the subset and the rest.
pub fn select_training_subset(
    dataset: &QuantizedDataset,
    per_class: usize,
    seed: u64,
) -> Result<(QuantizedDataset, QuantizedDataset), DataError> {
    if per_class == 0 {
        return Err(DataError::EmptySelection);
    }
    let mut classes: Vec<Rational> = dataset.labels.iter().map(|y| y[0].clone()).collect();
    classes.sort();
    classes.dedup();
    classes.reverse();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::new();
    for class in &classes {
        let members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i][0] == *class).collect();
        if members.len() < per_class {
            return Err(DataError::InsufficientClass { label: fmt_rational(class), have: members.len(), need: per_class });
        }
        let mut pick: Vec<usize> = sample(&mut rng, members.len(), per_class).into_iter().map(|k| members[k]).collect();
        pick.sort_unstable();
        chosen.extend(pick);
    }
    let rest: Vec<usize> = (0..dataset.len()).filter(|i| !chosen.contains(i)).collect();
    let tag = |what: &str| format!("{}\n{what} per_class={per_class} seed={seed} indices={:?}", dataset.provenance, chosen);
    Ok((dataset.select(&chosen, tag("train")), dataset.select(&rest, tag("test"))))
}

/// Directory holding the MNIST IDX files: `ISING_LEARN_DATA_DIR` if set,
/// else the vendored 6/9 subset shipped with the crate.
pub fn data_dir() -> PathBuf {
    std::env::var_os("ISING_LEARN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data"))
}

/// Image and label paths inside `dir`, preferring the vendored 6/9 subset.
pub fn mnist_paths(dir: &Path) -> Option<(PathBuf, PathBuf)> {
    let candidates = [
        ("mnist69-images-idx3-ubyte.gz", "mnist69-labels-idx1-ubyte.gz"),
        ("t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"),
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        ("train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz"),
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    ];
    candidates
        .iter()
        .map(|(i, l)| (dir.join(i), dir.join(l)))
        .find(|(i, l)| i.exists() && l.exists())
}

/// Loads and preprocesses the MNIST digits found in `dir`.
pub fn load_mnist(dir: &Path, cfg: &MnistConfig) -> Result<QuantizedDataset, DataError> {
    let (images, labels) = mnist_paths(dir).ok_or_else(|| DataError::Io {
        path: dir.display().to_string(),
        source: io::Error::new(io::ErrorKind::NotFound, "no MNIST IDX image/label pair found"),
    })?;
    let imgs = read_idx_images(&images)?;
    let lbls = read_idx_labels(&labels)?;
    let mut ds = preprocess_mnist(&imgs, &lbls, cfg)?;
    ds.provenance = format!("{} source={}", ds.provenance, images.file_name().unwrap_or_default().to_string_lossy());
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;
    use proptest::prelude::*;

    #[test]
    fn quantize_examples() {
        let raw = RawDataset { inputs: vec![vec![0.0, 1.5, -1.5, 9.0]], labels: vec![vec![0.5]] };
        let q = quantize(&raw, 2, 1.0, "t").unwrap();
        assert_eq!(q.inputs[0], vec![0, 2, -2, 4]);
        assert_eq!(q.labels[0][0], rat(1, 2));
        let bad = RawDataset { inputs: vec![vec![f64::NAN]], labels: vec![vec![0.0]] };
        assert!(matches!(quantize(&bad, 2, 1.0, "t"), Err(DataError::NonFinite { sample: 0 })));
    }

    #[test]
    fn labels_are_scaled_into_unit_interval() {
        let raw = RawDataset { inputs: vec![vec![0.0], vec![0.0]], labels: vec![vec![4.0], vec![-2.0]] };
        let q = quantize(&raw, 0, 1.0, "t").unwrap();
        assert_eq!(q.labels, vec![vec![int(1)], vec![rat(-1, 2)]]);
    }

    proptest! {
        #[test]
        fn quantized_inputs_stay_in_range(xs in prop::collection::vec(-1e6f64..1e6, 1..40), b in 0u32..6, scale in 0.01f64..10.0) {
            let raw = RawDataset { inputs: xs.iter().map(|&x| vec![x]).collect(), labels: xs.iter().map(|_| vec![0.0]).collect() };
            let q = quantize(&raw, b, scale, "p").unwrap();
            prop_assert!(q.inputs.iter().all(|x| x[0].abs() <= 1 << b));
            let again = quantize(&q.to_raw(), b, 1.0, "p").unwrap();
            prop_assert_eq!(again, q);
        }

        #[test]
        fn idempotent_with_labels(ys in prop::collection::vec(-3.0f64..3.0, 1..20)) {
            let raw = RawDataset { inputs: ys.iter().map(|_| vec![0.0]).collect(), labels: ys.iter().map(|&y| vec![y]).collect() };
            let q = quantize(&raw, 1, 1.0, "p").unwrap();
            prop_assert_eq!(quantize(&q.to_raw(), 1, 1.0, "p").unwrap(), q);
        }
    }

    #[test]
    fn noiseless_moons_lie_on_arcs() {
        let raw = two_moon_raw(20, 0.0, 1).unwrap();
        for (x, y) in raw.inputs.iter().zip(&raw.labels) {
            let (cx, cy) = if y[0] > 0.0 { (0.0, 0.0) } else { (1.0, 0.5) };
            let r = ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
            assert!(if y[0] > 0.0 { x[1] >= -1e-12 } else { x[1] <= 0.5 + 1e-12 });
        }
        assert!(matches!(two_moon_raw(7, 0.0, 1), Err(DataError::OddSampleCount(7))));
    }

    #[test]
    fn two_moon_is_seeded() {
        assert_eq!(two_moon(50, 0.1, 3, 2).unwrap(), two_moon(50, 0.1, 3, 2).unwrap());
        assert_ne!(two_moon(50, 0.1, 3, 2).unwrap(), two_moon(50, 0.1, 4, 2).unwrap());
    }

    /// Largest accuracy any halfplane `w . x + c >= 0` reaches, exhaustively
    /// over integer normals and offsets on the quantized grid.
    fn best_halfplane(ds: &QuantizedDataset) -> f64 {
        let bound = 1i64 << ds.input_bits;
        let range = 4 * bound;
        let mut best = 0usize;
        for w0 in -range..=range {
            for w1 in -range..=range {
                for c in -4 * range * bound..=4 * range * bound {
                    for flip in [1, -1] {
                        let hits = ds
                            .inputs
                            .iter()
                            .zip(&ds.labels)
                            .filter(|(x, y)| {
                                let v = flip * (2 * (w0 * x[0] + w1 * x[1]) + c);
                                (v >= 0) == (y[0] > int(0))
                            })
                            .count();
                        best = best.max(hits);
                    }
                }
            }
        }
        best as f64 / ds.len() as f64
    }

    #[test]
    fn default_moons_are_not_linearly_separable() {
        let ds = two_moon(50, TWO_MOON_DEFAULT_NOISE, 0, 2).unwrap();
        assert!(best_halfplane(&ds) < 1.0);
    }

    fn image(f: impl Fn(usize, usize) -> u8) -> Vec<u8> {
        (0..28 * 28).map(|i| f(i / 28, i % 28)).collect()
    }

    #[test]
    fn dark_image_is_degenerate() {
        let cfg = MnistConfig::default();
        assert!(matches!(preprocess_image(&image(|_, _| 0), 28, 28, &cfg, 5), Err(DataError::DegenerateImage { index: 5 })));
    }

    #[test]
    fn white_image_is_all_positive() {
        let cfg = MnistConfig::default();
        assert_eq!(preprocess_image(&image(|_, _| 255), 28, 28, &cfg, 0).unwrap(), vec![1; 4]);
    }

    #[test]
    fn threshold_boundary_maps_to_zero_band() {
        let cfg = MnistConfig::default();
        assert_eq!(tri_level(&[(1, 10), (0, 10), (35, 100), (34, 100)], &cfg), vec![0, -1, 1, 0]);
    }

    #[test]
    fn crop_and_split() {
        // 3x3 white block at rows 10..13, cols 5..8, with its center dark: the
        // 2x2 grid splits rows as 2+1 and cols as 2+1
        let img = image(|r, c| if (10..13).contains(&r) && (5..8).contains(&c) && !(r == 11 && c == 6) { 200 } else { 0 });
        let counts = patch_counts(&img, 28, 28, &MnistConfig::default(), 0).unwrap();
        assert_eq!(counts, vec![(3, 4), (2, 2), (2, 2), (1, 1)]);
    }

    #[test]
    fn thresholds_change_only_the_mapping() {
        let img = image(|r, c| if (r * 7 + c * 3) % 5 == 0 && r > 4 { 255 } else { 0 });
        let a = MnistConfig::default();
        let b = MnistConfig { t1: 0.2, t2: 0.5, ..MnistConfig::default() };
        assert_eq!(patch_counts(&img, 28, 28, &a, 0).unwrap(), patch_counts(&img, 28, 28, &b, 0).unwrap());
    }

    #[test]
    fn idx_roundtrip() {
        let images = IdxImages { rows: 2, cols: 3, pixels: vec![vec![1, 2, 3, 4, 5, 6], vec![0; 6]] };
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("img");
        std::fs::write(&ip, encode_idx_images(&images)).unwrap();
        assert_eq!(read_idx_images(&ip).unwrap(), images);
        let lp = dir.path().join("lbl.gz");
        let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        std::io::Write::write_all(&mut gz, &encode_idx_labels(&[6, 9])).unwrap();
        std::fs::write(&lp, gz.finish().unwrap()).unwrap();
        assert_eq!(read_idx_labels(&lp).unwrap(), vec![6, 9]);
        std::fs::write(&ip, [0, 0, 8, 3, 0]).unwrap();
        assert!(matches!(read_idx_images(&ip), Err(DataError::Idx { .. })));
    }

    #[test]
    fn stratified_selection() {
        let ds = QuantizedDataset::new(
            (0..10).map(|i| vec![i]).collect(),
            (0..10).map(|i| vec![int(if i < 6 { 1 } else { -1 })]).collect(),
            4,
            "t",
        )
        .unwrap();
        let (train, test) = select_training_subset(&ds, 2, 9).unwrap();
        assert_eq!(train.len(), 4);
        assert_eq!(test.len(), 6);
        assert_eq!(train.labels.iter().filter(|y| y[0] == int(1)).count(), 2);
        assert_eq!(select_training_subset(&ds, 2, 9).unwrap().0, train);
        assert!(matches!(select_training_subset(&ds, 0, 9), Err(DataError::EmptySelection)));
        assert!(matches!(select_training_subset(&ds, 5, 9), Err(DataError::InsufficientClass { .. })));
    }

    #[test]
    fn dataset_file_roundtrip() {
        let ds = QuantizedDataset::new(vec![vec![1, -1], vec![0, 2]], vec![vec![rat(1, 2)], vec![int(-1)]], 1, "gen seed=4\nsecond").unwrap();
        let text = ds.to_text();
        assert!(text.starts_with("dataset 2 1 2 1\n"));
        assert_eq!(QuantizedDataset::parse_text(&text).unwrap(), ds);
        assert!(matches!(QuantizedDataset::parse_text("dataset 1 1 1 0\n1 1\n"), Err(DataError::Parse { line: 2, .. })));
    }

    #[test]
    fn vendored_mnist_preprocesses_to_tri_levels() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        let ds = load_mnist(&dir, &MnistConfig::default()).unwrap();
        assert_eq!(ds.len(), 1992);
        assert!(ds.inputs.iter().flatten().all(|v| (-1..=1).contains(v)));
        assert_eq!(ds.labels.iter().filter(|y| y[0] == int(1)).count(), 1014);
    }
}
