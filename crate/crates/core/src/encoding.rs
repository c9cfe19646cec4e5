//! Offset-binary encodings of the network's decision variables.
//!
//! Every decimal variable (weights, biases, pre-/post-activations, slacks,
//! predictions) is `scale * (sum_j 2^j * x_j + offset)` over a contiguous run
//! of fresh bits. Bit widths for sign networks follow the closed forms of the
//! spin budget table; the other activation families size their encodings by
//! interval propagation through the layers.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::poly::{fmt_rational, int, parse_rational, rat, BitId, Monomial, Poly, Rational};
use crate::topology::{Activation, LayerKind, LossKind, NetworkSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodingError {
    #[error("dataset size must be at least 1")]
    EmptyDataset,
    #[error("variable {0} is not part of this architecture")]
    InvalidKey(VariableKey),
    #[error("variable {0} is frozen by the network configuration and has no encoding")]
    Frozen(VariableKey),
    #[error("variable {0} is not in the registry")]
    Missing(VariableKey),
    #[error("assignment has {len} bits but encoding needs bit {bit}")]
    ShortAssignment { bit: u32, len: usize },
    #[error("layer {layer} is {kind}; the dense compiler only handles dense layers")]
    StructuredLayer { layer: usize, kind: String },
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
}

/// Role of an encoded variable. Declaration order is the allocation order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VariableKind {
    /// `W^(k)`
    Weight,
    /// `b^(k)`
    Bias,
    /// Learnable leaky slope of a PReLU layer.
    Slope,
    /// Pre-activation `s^(k)_i`.
    PreAct,
    /// `r^(k)_i`, the magnitude auxiliary (a sign for the absolute activation).
    AbsVal,
    /// `t^(k)_i`, the slack of the sign activation or the sign auxiliary of the ReLU family.
    Slack,
    /// Post-activation `a^(k)_i`.
    PostAct,
    /// Network output `yhat_i`.
    Prediction,
    /// Hinge loss magnitude `r_i`.
    HingeAbs,
    /// Hinge loss sign `t_i`.
    HingeSign,
    /// Auxiliary bit introduced by order reduction.
    ReductionAux,
}

impl VariableKind {
    pub fn tag(self) -> &'static str {
        match self {
            VariableKind::Weight => "W",
            VariableKind::Bias => "b",
            VariableKind::Slope => "alpha",
            VariableKind::PreAct => "s",
            VariableKind::AbsVal => "r",
            VariableKind::Slack => "t",
            VariableKind::PostAct => "a",
            VariableKind::Prediction => "yhat",
            VariableKind::HingeAbs => "hinge_r",
            VariableKind::HingeSign => "hinge_t",
            VariableKind::ReductionAux => "aux",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        use VariableKind::*;
        [Weight, Bias, Slope, PreAct, AbsVal, Slack, PostAct, Prediction, HingeAbs, HingeSign, ReductionAux]
            .into_iter()
            .find(|k| k.tag() == tag)
    }

    /// Kinds that carry a sample index.
    pub fn per_sample(self) -> bool {
        matches!(
            self,
            VariableKind::PreAct
                | VariableKind::AbsVal
                | VariableKind::Slack
                | VariableKind::PostAct
                | VariableKind::Prediction
                | VariableKind::HingeAbs
                | VariableKind::HingeSign
        )
    }

    /// Trainable network parameters.
    pub fn is_parameter(self) -> bool {
        matches!(self, VariableKind::Weight | VariableKind::Bias | VariableKind::Slope)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Index(usize),
    /// `(row, col)`, i.e. `(output neuron, input neuron)` for weights.
    Cell(usize, usize),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Index(i) => write!(f, "{i}"),
            Element::Cell(r, c) => write!(f, "{r}.{c}"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableKey {
    pub kind: VariableKind,
    /// 1-based layer index.
    pub layer: usize,
    pub sample: Option<usize>,
    pub element: Element,
}

impl VariableKey {
    pub fn param(kind: VariableKind, layer: usize, element: Element) -> Self {
        VariableKey { kind, layer, sample: None, element }
    }

    pub fn sampled(kind: VariableKind, layer: usize, sample: usize, element: Element) -> Self {
        VariableKey { kind, layer, sample: Some(sample), element }
    }
}

impl fmt::Display for VariableKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^({})", self.kind.tag(), self.layer)?;
        if let Some(i) = self.sample {
            write!(f, "_{i}")?;
        }
        write!(f, "[{}]", self.element)
    }
}

/// Bit width, offset and scale of an encoding before bits are allocated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingShape {
    pub num_bits: u32,
    pub offset: Rational,
    pub scale: Rational,
}

impl EncodingShape {
    fn unsigned(num_bits: u32, offset: i64, scale: Rational) -> Self {
        EncodingShape { num_bits, offset: int(offset), scale }
    }

    /// One bit mapped to `{-1, +1}` as `2x - 1`.
    fn spin() -> Self {
        EncodingShape { num_bits: 1, offset: rat(-1, 2), scale: int(2) }
    }

    /// Smallest unsigned encoding with quantum `q` covering `[lo, hi]`.
    fn covering(lo: &Rational, hi: &Rational, q: &Rational) -> Self {
        let lo_units = (lo / q).floor().to_integer();
        let hi_units = (hi / q).ceil().to_integer();
        let span = (hi_units - &lo_units).max(BigInt::one());
        EncodingShape { num_bits: span.bits() as u32, offset: Rational::from_integer(lo_units), scale: q.clone() }
    }
}

/// `value = scale * (sum_j 2^j * x_{first_bit + j} + offset)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineEncoding {
    pub first_bit: BitId,
    pub num_bits: u32,
    pub offset: Rational,
    pub scale: Rational,
}

impl AffineEncoding {
    pub fn new(first_bit: BitId, shape: EncodingShape) -> Self {
        AffineEncoding { first_bit, num_bits: shape.num_bits, offset: shape.offset, scale: shape.scale }
    }

    pub fn bits(&self) -> impl Iterator<Item = BitId> + '_ {
        (0..self.num_bits).map(move |j| BitId(self.first_bit.0 + j))
    }

    /// The encoded value as an affine polynomial of its bits.
    pub fn poly(&self) -> Poly {
        let mut p = Poly::constant(&self.scale * &self.offset);
        for (j, b) in self.bits().enumerate() {
            p.add_term(Monomial::var(b), &self.scale * Rational::from_integer(BigInt::one() << j));
        }
        p
    }

    pub fn min_value(&self) -> Rational {
        let raw = &self.scale * &self.offset;
        let top = &self.scale * (&self.offset + Rational::from_integer((BigInt::one() << self.num_bits) - 1));
        raw.min(top)
    }

    pub fn max_value(&self) -> Rational {
        let raw = &self.scale * &self.offset;
        let top = &self.scale * (&self.offset + Rational::from_integer((BigInt::one() << self.num_bits) - 1));
        raw.max(top)
    }

    pub fn decode(&self, assignment: &[bool]) -> Result<Rational, EncodingError> {
        let last = self.first_bit.0 + self.num_bits - 1;
        if last as usize >= assignment.len() {
            return Err(EncodingError::ShortAssignment { bit: last, len: assignment.len() });
        }
        let raw = self
            .bits()
            .enumerate()
            .filter(|(_, b)| assignment[b.index()])
            .fold(BigInt::zero(), |acc, (j, _)| acc + (BigInt::one() << j));
        Ok(&self.scale * (Rational::from_integer(raw) + &self.offset))
    }

    /// Bit pattern (LSB first) representing `value`, if it is on the grid.
    pub fn encode(&self, value: &Rational) -> Option<Vec<bool>> {
        let units = value / &self.scale - &self.offset;
        if !units.is_integer() || units.is_negative() {
            return None;
        }
        let raw = units.to_integer();
        if raw.bits() > self.num_bits as u64 {
            return None;
        }
        let raw = raw.to_u64()?;
        Some((0..self.num_bits).map(|j| raw >> j & 1 == 1).collect())
    }

    /// Writes the encoding of `value` into a full assignment vector.
    pub fn write(&self, value: &Rational, assignment: &mut [bool]) -> bool {
        match self.encode(value) {
            Some(bits) => {
                for (b, v) in self.bits().zip(bits) {
                    assignment[b.index()] = v;
                }
                true
            }
            None => false,
        }
    }
}

/// `floor(log2 x) + 1` for `x >= 1`.
pub fn bit_length(x: u64) -> u32 {
    64 - x.leading_zeros()
}

/// Value ranges of every hidden layer, used to size encodings of the
/// non-sign activation families.
#[derive(Clone, Debug)]
struct LayerRange {
    s_lo: Rational,
    s_hi: Rational,
    quantum: Rational,
    a_lo: Rational,
    a_hi: Rational,
    a_quantum: Rational,
}

fn layer_ranges(net: &NetworkSpec) -> Vec<LayerRange> {
    let h = net.hidden as i64;
    let mut out: Vec<LayerRange> = Vec::new();
    for k in 1..net.layers {
        let (s_lo, s_hi, q) = if k == 1 {
            let s = first_preact_shape(net);
            let enc = AffineEncoding::new(BitId(0), s);
            (enc.min_value(), enc.max_value(), int(1))
        } else {
            let prev = &out[k - 2];
            let bound = prev.a_lo.abs().max(prev.a_hi.abs()) * int(h);
            let bias = int(h - 1);
            (-&bound + &bias, bound + bias, prev.a_quantum.clone())
        };
        let (a_lo, a_hi, a_q) = match &net.activation {
            Activation::Sign => (int(-1), int(1), int(1)),
            Activation::Relu => (Rational::zero(), s_hi.clone().max(Rational::zero()), q.clone()),
            Activation::Abs => (Rational::zero(), s_lo.abs().max(s_hi.abs()), q.clone()),
            Activation::LeakyRelu(alpha) => {
                let aq = &q / Rational::from_integer(alpha.denom().clone());
                (&s_lo * alpha, s_hi.clone(), aq)
            }
            Activation::Prelu => {
                let steps = int(1i64 << net.prelu_bits);
                let max_alpha = (&steps - int(1)) / &steps;
                (&s_lo * max_alpha, s_hi.clone(), &q / steps)
            }
        };
        out.push(LayerRange { s_lo, s_hi, quantum: q, a_lo, a_hi, a_quantum: a_q });
    }
    out
}

fn first_preact_shape(net: &NetworkSpec) -> EncodingShape {
    let n = net.inputs as u64;
    let b = net.input_bits;
    EncodingShape::unsigned(bit_length(n << (b + 2)), -((n << b) as i64), int(1))
}

fn prediction_shape(net: &NetworkSpec) -> EncodingShape {
    let h = net.hidden as u64;
    EncodingShape::unsigned(bit_length(4 * h), -2 * h as i64, rat(1, 2 * h as i64))
}

/// Sizes the encoding of one variable. Bits are allocated by the registry.
pub fn encode_variable(key: &VariableKey, net: &NetworkSpec) -> Result<EncodingShape, EncodingError> {
    use VariableKind::*;
    let (l, h, n, m) = (net.layers, net.hidden, net.inputs, net.outputs);
    let b = net.input_bits;
    let hl = h as u64;
    let k = key.layer;
    let hidden_layer = (1..l).contains(&k);
    let invalid = || EncodingError::InvalidKey(*key);
    if key.kind.per_sample() != key.sample.is_some() {
        return Err(invalid());
    }
    let last_width = bit_length(2 * hl);
    match key.kind {
        Weight if k == l => {
            check_cell(key.element, m, h).ok_or_else(invalid)?;
            Ok(EncodingShape::unsigned(last_width, -(h as i64), rat(1, h as i64)))
        }
        Weight if hidden_layer => {
            check_cell(key.element, h, if k == 1 { n } else { h }).ok_or_else(invalid)?;
            Ok(EncodingShape::spin())
        }
        Bias if k == 1 && l > 1 => {
            check_index(key.element, h).ok_or_else(invalid)?;
            Ok(EncodingShape::unsigned(bit_length((n as u64) << (b + 1)), net.first_bias_offset, int(1)))
        }
        Bias if k == l => {
            check_index(key.element, m).ok_or_else(invalid)?;
            Ok(EncodingShape::unsigned(last_width, -(h as i64), rat(1, h as i64)))
        }
        Bias if hidden_layer => Err(EncodingError::Frozen(*key)),
        Slope if hidden_layer && net.activation == Activation::Prelu => {
            check_index(key.element, 1).ok_or_else(invalid)?;
            Ok(EncodingShape::unsigned(net.prelu_bits, 0, rat(1, 1i64 << net.prelu_bits)))
        }
        Prediction if k == l => {
            check_index(key.element, m).ok_or_else(invalid)?;
            Ok(prediction_shape(net))
        }
        HingeAbs | HingeSign if k == l && net.loss == LossKind::Hinge => {
            check_index(key.element, m).ok_or_else(invalid)?;
            if key.kind == HingeSign {
                return Ok(EncodingShape::spin());
            }
            let yhat = AffineEncoding::new(BitId(0), prediction_shape(net));
            let bound = int(1) + yhat.min_value().abs().max(yhat.max_value().abs());
            Ok(EncodingShape::covering(&Rational::zero(), &bound, &yhat.scale))
        }
        PreAct | AbsVal | Slack | PostAct if hidden_layer => {
            check_index(key.element, h).ok_or_else(invalid)?;
            hidden_shape(key, net)
        }
        _ => Err(invalid()),
    }
}

fn hidden_shape(key: &VariableKey, net: &NetworkSpec) -> Result<EncodingShape, EncodingError> {
    use VariableKind::*;
    let k = key.layer;
    let n = net.inputs as u64;
    let b = net.input_bits;
    let hl = net.hidden as u64;
    let middle_width = bit_length(2 * hl);
    if net.activation == Activation::Sign {
        return match (key.kind, k) {
            (PreAct, 1) => Ok(first_preact_shape(net)),
            (PreAct, _) => Ok(EncodingShape::unsigned(middle_width, -1, int(1))),
            (AbsVal, 1) => Ok(EncodingShape::unsigned(bit_length((3 * n) << b), 0, int(1))),
            (AbsVal, _) => Ok(EncodingShape::unsigned(middle_width, 0, int(1))),
            (Slack, 1) => Ok(EncodingShape::unsigned(bit_length((3 * n) << (b + 1)), 0, int(1))),
            (PostAct, _) => Ok(EncodingShape::spin()),
            _ => Err(EncodingError::InvalidKey(*key)),
        };
    }
    let ranges = layer_ranges(net);
    let lr = &ranges[k - 1];
    let magnitude = lr.s_lo.abs().max(lr.s_hi.abs());
    match (key.kind, &net.activation) {
        (PreAct, _) if k == 1 => Ok(first_preact_shape(net)),
        (PreAct, _) => Ok(EncodingShape::covering(&lr.s_lo, &lr.s_hi, &lr.quantum)),
        (AbsVal, Activation::Abs) => Ok(EncodingShape::spin()),
        (AbsVal, _) => Ok(EncodingShape::covering(&Rational::zero(), &magnitude, &lr.quantum)),
        (Slack, Activation::Abs) => Err(EncodingError::InvalidKey(*key)),
        (Slack, _) => Ok(EncodingShape::spin()),
        (PostAct, _) => Ok(EncodingShape::covering(&lr.a_lo, &lr.a_hi, &lr.a_quantum)),
        _ => Err(EncodingError::InvalidKey(*key)),
    }
}

fn check_index(e: Element, len: usize) -> Option<()> {
    match e {
        Element::Index(i) if i < len => Some(()),
        _ => None,
    }
}

fn check_cell(e: Element, rows: usize, cols: usize) -> Option<()> {
    match e {
        Element::Cell(r, c) if r < rows && c < cols => Some(()),
        _ => None,
    }
}

/// All variable keys of the architecture in allocation order: kind, then
/// layer, then sample, then element.
pub fn variable_keys(net: &NetworkSpec, dataset_size: usize) -> Vec<VariableKey> {
    use VariableKind::*;
    let (l, h, n, m) = (net.layers, net.hidden, net.inputs, net.outputs);
    let mut keys = Vec::new();
    let cells = |rows: usize, cols: usize| (0..rows).flat_map(move |r| (0..cols).map(move |c| Element::Cell(r, c)));
    keys.extend(cells(h, n).map(|e| VariableKey::param(Weight, 1, e)));
    keys.extend((0..h).map(|j| VariableKey::param(Bias, 1, Element::Index(j))));
    for k in 2..l {
        keys.extend(cells(h, h).map(|e| VariableKey::param(Weight, k, e)));
    }
    keys.extend(cells(m, h).map(|e| VariableKey::param(Weight, l, e)));
    keys.extend((0..m).map(|o| VariableKey::param(Bias, l, Element::Index(o))));
    if net.activation == Activation::Prelu {
        keys.extend((1..l).map(|k| VariableKey::param(Slope, k, Element::Index(0))));
    }
    let hidden_kinds: &[VariableKind] = match net.activation {
        Activation::Sign => &[PreAct, AbsVal, Slack, PostAct],
        Activation::Abs => &[PreAct, AbsVal, PostAct],
        _ => &[PreAct, AbsVal, Slack, PostAct],
    };
    for &kind in hidden_kinds {
        let layers = if kind == Slack && net.activation == Activation::Sign { 1..2 } else { 1..l };
        for k in layers {
            for i in 0..dataset_size {
                keys.extend((0..h).map(|j| VariableKey::sampled(kind, k, i, Element::Index(j))));
            }
        }
    }
    let mut output_kinds = vec![Prediction];
    if net.loss == LossKind::Hinge {
        output_kinds.extend([HingeAbs, HingeSign]);
    }
    for kind in output_kinds {
        for i in 0..dataset_size {
            keys.extend((0..m).map(|o| VariableKey::sampled(kind, l, i, Element::Index(o))));
        }
    }
    keys
}

/// Maps every decision variable to its encoding over a dense bit range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableRegistry {
    entries: Vec<(VariableKey, AffineEncoding)>,
    index: BTreeMap<VariableKey, usize>,
    num_bits: u32,
}

impl VariableRegistry {
    pub fn empty() -> Self {
        VariableRegistry { entries: Vec::new(), index: BTreeMap::new(), num_bits: 0 }
    }

    /// Appends a variable with freshly allocated bits.
    pub fn allocate(&mut self, key: VariableKey, shape: EncodingShape) -> &AffineEncoding {
        let enc = AffineEncoding::new(BitId(self.num_bits), shape);
        self.num_bits += enc.num_bits;
        self.index.insert(key, self.entries.len());
        self.entries.push((key, enc));
        &self.entries.last().unwrap().1
    }

    pub fn num_bits(&self) -> u32 {
        self.num_bits
    }

    pub fn entries(&self) -> &[(VariableKey, AffineEncoding)] {
        &self.entries
    }

    pub fn get(&self, key: &VariableKey) -> Option<&AffineEncoding> {
        self.index.get(key).map(|&i| &self.entries[i].1)
    }

    pub fn expect(&self, key: &VariableKey) -> Result<&AffineEncoding, EncodingError> {
        self.get(key).ok_or(EncodingError::Missing(*key))
    }

    pub fn poly(&self, key: &VariableKey) -> Result<Poly, EncodingError> {
        self.expect(key).map(AffineEncoding::poly)
    }

    /// Bits of trainable parameters, in allocation order.
    pub fn parameter_bits(&self) -> Vec<BitId> {
        self.entries.iter().filter(|(k, _)| k.kind.is_parameter()).flat_map(|(_, e)| e.bits()).collect()
    }

    /// Bits of all non-parameter variables tied to `sample`.
    pub fn sample_bits(&self, sample: usize) -> Vec<BitId> {
        self.entries.iter().filter(|(k, _)| k.sample == Some(sample)).flat_map(|(_, e)| e.bits()).collect()
    }

    /// Number of bits per variable kind.
    pub fn bits_by_kind(&self) -> BTreeMap<VariableKind, u32> {
        let mut out = BTreeMap::new();
        for (k, e) in &self.entries {
            *out.entry(k.kind).or_insert(0) += e.num_bits;
        }
        out
    }

    /// Number of bits per (kind, layer) row.
    pub fn bits_by_row(&self) -> BTreeMap<(VariableKind, usize), u32> {
        let mut out = BTreeMap::new();
        for (k, e) in &self.entries {
            *out.entry((k.kind, k.layer)).or_insert(0) += e.num_bits;
        }
        out
    }

    /// Bits not counted as reduction auxiliaries.
    pub fn original_bits(&self) -> u32 {
        self.entries.iter().filter(|(k, _)| k.kind != VariableKind::ReductionAux).map(|(_, e)| e.num_bits).sum()
    }

    /// Records one order-reduction auxiliary bit; it must be the next free bit.
    pub fn push_reduction_aux(&mut self, bit: BitId, record: usize) {
        assert_eq!(bit.0, self.num_bits, "auxiliary bits must extend the registry densely");
        let key = VariableKey::param(VariableKind::ReductionAux, 0, Element::Index(record));
        self.allocate(key, EncodingShape::unsigned(1, 0, int(1)));
    }

    /// Manifest lines `kind layer sample element scale offset first_bit num_bits`.
    pub fn to_manifest(&self) -> String {
        let mut out = String::from("# kind layer sample element scale offset first_bit num_bits\n");
        for (k, e) in &self.entries {
            let sample = k.sample.map_or_else(|| "-".to_string(), |s| s.to_string());
            out.push_str(&format!(
                "{} {} {} {} {}/{} {} {} {}\n",
                k.kind.tag(),
                k.layer,
                sample,
                k.element,
                e.scale.numer(),
                e.scale.denom(),
                fmt_rational(&e.offset),
                e.first_bit.0,
                e.num_bits
            ));
        }
        out
    }

    pub fn parse_manifest(text: &str) -> Result<Self, EncodingError> {
        let mut reg = VariableRegistry::empty();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| EncodingError::Manifest { line: idx + 1, msg };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 8 {
                return Err(err(format!("expected 8 fields, found {}", f.len())));
            }
            let kind = VariableKind::from_tag(f[0]).ok_or_else(|| err(format!("unknown kind `{}`", f[0])))?;
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad integer `{s}`")));
            let layer = num(f[1])?;
            let sample = if f[2] == "-" { None } else { Some(num(f[2])?) };
            let element = match f[3].split_once('.') {
                Some((r, c)) => Element::Cell(num(r)?, num(c)?),
                None => Element::Index(num(f[3])?),
            };
            let scale = parse_rational(f[4]).map_err(err)?;
            let offset = parse_rational(f[5]).map_err(err)?;
            let first_bit = num(f[6])? as u32;
            let num_bits = num(f[7])? as u32;
            if first_bit != reg.num_bits {
                return Err(err(format!("bit {first_bit} breaks dense allocation (expected {})", reg.num_bits)));
            }
            reg.allocate(VariableKey { kind, layer, sample, element }, EncodingShape { num_bits, offset, scale });
        }
        Ok(reg)
    }
}

/// Allocates every variable of a dense network trained on `dataset_size` samples.
pub fn build_registry(net: &NetworkSpec, dataset_size: usize) -> Result<VariableRegistry, EncodingError> {
    if dataset_size == 0 {
        return Err(EncodingError::EmptyDataset);
    }
    for (i, kind) in net.layer_kinds.iter().enumerate() {
        if *kind != LayerKind::Dense {
            return Err(EncodingError::StructuredLayer { layer: i + 1, kind: kind.to_string() });
        }
    }
    let mut reg = VariableRegistry::empty();
    for key in variable_keys(net, dataset_size) {
        let shape = encode_variable(&key, net)?;
        reg.allocate(key, shape);
    }
    Ok(reg)
}

/// Spin counts of a sign network straight from the closed forms, one row
/// per variable family: `(label, bits per variable, number of variables)`.
pub fn closed_form_rows(net: &NetworkSpec, dataset_size: usize) -> Vec<(&'static str, u64, u64)> {
    let (l, h, n, m, b) = (net.layers as u64, net.hidden as u64, net.inputs as u64, net.outputs as u64, net.input_bits);
    let nn = dataset_size as u64;
    let lg = |x: u64| bit_length(x) as u64;
    let mid = l.saturating_sub(2);
    vec![
        ("W(1)", 1, n * h),
        ("b(1)", lg(n << (b + 1)), h),
        ("W(k)", 1, h * h * mid),
        ("W(L)", lg(2 * h), m * h),
        ("b(L)", lg(2 * h), m),
        ("s(1)_i", lg(n << (b + 2)), h * nn),
        ("s(k)_i", lg(2 * h), h * mid * nn),
        ("r(1)_i", lg((3 * n) << b), h * nn),
        ("r(k)_i", lg(2 * h), h * mid * nn),
        ("t(1)_i", lg((3 * n) << (b + 1)), h * nn),
        ("a(k)_i", 1, h * (l - 1) * nn),
        ("yhat_i", lg(4 * h), m * nn),
    ]
}

pub fn closed_form_total(net: &NetworkSpec, dataset_size: usize) -> u64 {
    closed_form_rows(net, dataset_size).iter().map(|(_, w, c)| w * c).sum()
}

/// Asymptotic reference `H^2 L + H L N log2 H`.
pub fn asymptotic_reference(hidden: usize, layers: usize, dataset_size: usize) -> f64 {
    let (h, l, n) = (hidden as f64, layers as f64, dataset_size as f64);
    h * h * l + h * l * n * h.log2()
}

/// Smallest positive spacing between representable values.
pub fn quantum(enc: &AffineEncoding) -> Rational {
    enc.scale.abs()
}

/// Greatest common quantum of a set of rationals (their rational gcd).
pub fn rational_gcd<'a, I: IntoIterator<Item = &'a Rational>>(values: I) -> Rational {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for v in values {
        if v.is_zero() {
            continue;
        }
        let l = den.lcm(v.denom());
        num = (num * (&l / &den)).gcd(&(v.numer() * (&l / v.denom())));
        den = l;
    }
    if num.is_zero() {
        Rational::zero()
    } else {
        Rational::new(num, den)
    }
}
