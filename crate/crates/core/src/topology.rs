//! Network description and the equality constraints tying decision
//! variables to the feedforward computation.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::data::QuantizedDataset;
use crate::encoding::{Element, EncodingError, VariableKey, VariableKind, VariableRegistry};
use crate::poly::{fmt_rational, int, parse_rational, rat, Poly, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("non-polynomial activation `{0}`: unsupported (tanh, sigmoid, elu have no polynomial constraint form)")]
    NonPolynomialActivation(String),
    #[error("non-polynomial loss `{0}`: unsupported (cross entropy has no polynomial form)")]
    NonPolynomialLoss(String),
    #[error("unknown activation `{0}`; expected sign, relu, leaky_relu:<alpha>, prelu or abs")]
    UnknownActivation(String),
    #[error("unknown loss `{0}`; expected mse or hinge")]
    UnknownLoss(String),
    #[error("max pooling is out of scope (its big-M inequality form is not supported)")]
    MaxPoolOutOfScope,
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("network file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("sample {sample}: input {value} outside [-2^B, 2^B] with B = {bits}")]
    InputOutOfRange { sample: usize, value: i64, bits: u32 },
    #[error("dataset has {got} {what} per sample, network expects {want}")]
    Shape { what: &'static str, got: usize, want: usize },
    #[error("hinge loss needs labels in {{-1, +1}}, sample {sample} has {label}")]
    HingeLabel { sample: usize, label: String },
    #[error("shape mismatch: {0}")]
    MapShape(String),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Activation {
    Sign,
    Relu,
    /// Fixed slope for negative inputs, `0 < alpha < 1`.
    LeakyRelu(Rational),
    /// Learnable slope, one fixed-point fraction per hidden layer.
    Prelu,
    Abs,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Sign => write!(f, "sign"),
            Activation::Relu => write!(f, "relu"),
            Activation::LeakyRelu(a) => write!(f, "leaky_relu:{}", fmt_rational(a)),
            Activation::Prelu => write!(f, "prelu"),
            Activation::Abs => write!(f, "abs"),
        }
    }
}

impl FromStr for Activation {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, arg) = s.split_once(':').map_or((s, None), |(a, b)| (a, Some(b)));
        match (name, arg) {
            ("sign", None) => Ok(Activation::Sign),
            ("relu", None) => Ok(Activation::Relu),
            ("prelu", None) => Ok(Activation::Prelu),
            ("abs", None) => Ok(Activation::Abs),
            ("leaky_relu", Some(a)) => {
                let alpha = parse_rational(a).map_err(|_| TopologyError::UnknownActivation(s.into()))?;
                if alpha <= Rational::zero() || alpha >= Rational::one() {
                    return Err(TopologyError::Invalid(format!("leaky slope {a} must lie in (0, 1)")));
                }
                Ok(Activation::LeakyRelu(alpha))
            }
            ("tanh" | "sigmoid" | "elu" | "softmax" | "gelu" | "swish", _) => {
                Err(TopologyError::NonPolynomialActivation(name.into()))
            }
            _ => Err(TopologyError::UnknownActivation(s.into())),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    Hinge,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Mse => "mse",
            LossKind::Hinge => "hinge",
        })
    }
}

impl FromStr for LossKind {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "mse" => Ok(LossKind::Mse),
            "hinge" => Ok(LossKind::Hinge),
            "cross_entropy" | "crossentropy" | "ce" | "nll" => Err(TopologyError::NonPolynomialLoss(s.trim().into())),
            other => Err(TopologyError::UnknownLoss(other.into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Dense,
    Conv2d { rows: usize, cols: usize },
    AvgPool { window: usize },
    /// Frozen per-channel statistics.
    BatchNorm { mean: Vec<Rational>, std: Vec<Rational> },
    MaxPool { window: usize },
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerKind::Dense => write!(f, "dense"),
            LayerKind::Conv2d { rows, cols } => write!(f, "conv2d:{rows}x{cols}"),
            LayerKind::AvgPool { window } => write!(f, "avgpool:{window}"),
            LayerKind::MaxPool { window } => write!(f, "maxpool:{window}"),
            LayerKind::BatchNorm { mean, std } => {
                let join = |v: &[Rational]| v.iter().map(fmt_rational).collect::<Vec<_>>().join(",");
                write!(f, "batchnorm:{};{}", join(mean), join(std))
            }
        }
    }
}

impl FromStr for LayerKind {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || TopologyError::Invalid(format!("bad layer kind `{s}`"));
        let (name, arg) = s.split_once(':').map_or((s, ""), |(a, b)| (a, b));
        let usize_of = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
        match name {
            "dense" if arg.is_empty() => Ok(LayerKind::Dense),
            "conv2d" => {
                let (r, c) = arg.split_once('x').ok_or_else(bad)?;
                Ok(LayerKind::Conv2d { rows: usize_of(r)?, cols: usize_of(c)? })
            }
            "avgpool" => Ok(LayerKind::AvgPool { window: usize_of(arg)? }),
            "maxpool" => Ok(LayerKind::MaxPool { window: usize_of(arg)? }),
            "batchnorm" => {
                let (m, sd) = arg.split_once(';').ok_or_else(bad)?;
                let list = |v: &str| v.split(',').map(|x| parse_rational(x.trim()).map_err(|_| bad())).collect::<Result<Vec<_>, _>>();
                Ok(LayerKind::BatchNorm { mean: list(m)?, std: list(sd)? })
            }
            _ => Err(bad()),
        }
    }
}

/// Quantized feedforward network: `layers` weight layers, `hidden` units in
/// every hidden layer, identity output layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    pub layers: usize,
    pub hidden: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub input_bits: u32,
    pub activation: Activation,
    pub loss: LossKind,
    pub layer_kinds: Vec<LayerKind>,
    /// Offset of the first-layer bias encoding (0 keeps it non-negative).
    pub first_bias_offset: i64,
    /// Fraction bits of the learnable PReLU slope.
    pub prelu_bits: u32,
}

impl NetworkSpec {
    /// Dense sign network with MSE loss.
    pub fn dense(layers: usize, hidden: usize, inputs: usize, outputs: usize, input_bits: u32) -> Self {
        NetworkSpec {
            layers,
            hidden,
            inputs,
            outputs,
            input_bits,
            activation: Activation::Sign,
            loss: LossKind::Mse,
            layer_kinds: vec![LayerKind::Dense; layers],
            first_bias_offset: 0,
            prelu_bits: 3,
        }
    }

    pub fn frozen(&self) -> FrozenConfig {
        FrozenConfig { middle_bias: self.hidden as i64 - 1, binary_weights_except_last: true }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |m: &str| Err(TopologyError::Invalid(m.into()));
        if self.layers < 2 {
            return bad("layers must be at least 2");
        }
        if self.hidden == 0 || self.inputs == 0 || self.outputs == 0 {
            return bad("hidden, inputs and outputs must be at least 1");
        }
        if self.input_bits > 24 {
            return bad("input_bits above 24 is not supported");
        }
        if self.layer_kinds.len() != self.layers {
            return bad("one layer kind per layer is required");
        }
        if self.activation == Activation::Prelu && !(1..=16).contains(&self.prelu_bits) {
            return bad("prelu_bits must lie in 1..=16");
        }
        if self.layer_kinds.iter().any(|k| matches!(k, LayerKind::MaxPool { .. })) {
            return Err(TopologyError::MaxPoolOutOfScope);
        }
        Ok(())
    }

    /// Parses the flat `key=value` network file. See the crate README for the grammar.
    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        let mut net = NetworkSpec::dense(2, 1, 1, 1, 0);
        let mut overrides: Vec<(usize, LayerKind, usize)> = Vec::new();
        let mut seen_layers = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| TopologyError::Parse { line: line_no, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| perr(format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<usize>().map_err(|_| perr(format!("`{key}` needs a non-negative integer, got `{v}`")));
            match key {
                "layers" => {
                    net.layers = num(value)?;
                    seen_layers = true;
                }
                "hidden" => net.hidden = num(value)?,
                "inputs" => net.inputs = num(value)?,
                "outputs" => net.outputs = num(value)?,
                "input_bits" => net.input_bits = num(value)? as u32,
                "prelu_bits" => net.prelu_bits = num(value)? as u32,
                "first_bias_offset" => {
                    net.first_bias_offset = value.parse().map_err(|_| perr(format!("bad integer `{value}`")))?
                }
                "activation" => net.activation = value.parse().map_err(|e: TopologyError| with_line(e, line_no))?,
                "loss" => net.loss = value.parse().map_err(|e: TopologyError| with_line(e, line_no))?,
                _ => match key.strip_prefix("layer.") {
                    Some(k) => {
                        let k = num(k)?;
                        let kind = value.parse().map_err(|e: TopologyError| with_line(e, line_no))?;
                        overrides.push((k, kind, line_no));
                    }
                    None => return Err(perr(format!("unknown key `{key}`"))),
                },
            }
        }
        if !seen_layers {
            return Err(TopologyError::Parse { line: 0, msg: "missing `layers`".into() });
        }
        net.layer_kinds = vec![LayerKind::Dense; net.layers];
        for (k, kind, line) in overrides {
            if k == 0 || k > net.layers {
                return Err(TopologyError::Parse { line, msg: format!("layer {k} outside 1..={}", net.layers) });
            }
            net.layer_kinds[k - 1] = kind;
        }
        net.validate()?;
        Ok(net)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "layers={}\nhidden={}\ninputs={}\noutputs={}\ninput_bits={}\nactivation={}\nloss={}\n",
            self.layers, self.hidden, self.inputs, self.outputs, self.input_bits, self.activation, self.loss
        );
        if self.first_bias_offset != 0 {
            out.push_str(&format!("first_bias_offset={}\n", self.first_bias_offset));
        }
        if self.activation == Activation::Prelu {
            out.push_str(&format!("prelu_bits={}\n", self.prelu_bits));
        }
        for (i, k) in self.layer_kinds.iter().enumerate() {
            if *k != LayerKind::Dense {
                out.push_str(&format!("layer.{}={}\n", i + 1, k));
            }
        }
        out
    }
}

fn with_line(e: TopologyError, line: usize) -> TopologyError {
    match e {
        TopologyError::Invalid(msg) => TopologyError::Parse { line, msg },
        other => other,
    }
}

/// Values fixed by configuration instead of being learned.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct FrozenConfig {
    pub middle_bias: i64,
    pub binary_weights_except_last: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintKind {
    /// Linear transform `W a + b - s`.
    Linear,
    /// `a * s - r` for the sign activation.
    SignProduct,
    /// `a + 2r - 1 - t` for the sign activation.
    SignSlack,
    /// `(r + s) / 2 - a`.
    ReluMean,
    /// `t * s - r` shared by the ReLU family.
    ReluSign,
    /// `((1 - alpha) / 2 t + (1 + alpha) / 2) s - a`.
    LeakySlope,
    /// `r * s - a`.
    AbsProduct,
    /// `t (1 - y yhat) - r`.
    Hinge,
    Conv,
    AvgPool,
    BatchNorm,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Provenance {
    pub kind: ConstraintKind,
    pub layer: usize,
    pub sample: Option<usize>,
    pub element: usize,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} layer {}", self.kind, self.layer)?;
        if let Some(s) = self.sample {
            write!(f, " sample {s}")?;
        }
        write!(f, " element {}", self.element)
    }
}

/// Polynomials each asserted to equal zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    pub constraints: Vec<(Poly, Provenance)>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        ConstraintSet::default()
    }

    pub fn push(&mut self, poly: Poly, provenance: Provenance) {
        self.constraints.push((poly, provenance));
    }

    pub fn extend(&mut self, other: ConstraintSet) {
        self.constraints.extend(other.constraints);
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Poly, Provenance)> {
        self.constraints.iter()
    }

    /// Residuals at an assignment, in constraint order.
    pub fn residuals(&self, assignment: &[bool]) -> Vec<Rational> {
        self.constraints.iter().map(|(p, _)| p.evaluate(assignment).expect("assignment covers constraint bits")).collect()
    }

    /// First constraint violated by `assignment`, if any.
    pub fn first_violation(&self, assignment: &[bool]) -> Option<(Provenance, Rational)> {
        self.constraints.iter().find_map(|(p, prov)| {
            let r = p.evaluate(assignment).expect("assignment covers constraint bits");
            (!r.is_zero()).then_some((*prov, r))
        })
    }

    fn sort(&mut self) {
        self.constraints.sort_by_key(|(_, p)| *p);
    }
}

fn key(kind: VariableKind, layer: usize, sample: usize, j: usize) -> VariableKey {
    VariableKey::sampled(kind, layer, sample, Element::Index(j))
}

fn check_dataset(net: &NetworkSpec, dataset: &QuantizedDataset) -> Result<(), TopologyError> {
    if dataset.inputs_per_sample() != net.inputs {
        return Err(TopologyError::Shape { what: "inputs", got: dataset.inputs_per_sample(), want: net.inputs });
    }
    if dataset.outputs_per_sample() != net.outputs {
        return Err(TopologyError::Shape { what: "outputs", got: dataset.outputs_per_sample(), want: net.outputs });
    }
    let bound = 1i64 << net.input_bits;
    for (i, x) in dataset.inputs.iter().enumerate() {
        if let Some(&v) = x.iter().find(|v| v.abs() > bound) {
            return Err(TopologyError::InputOutOfRange { sample: i, value: v, bits: net.input_bits });
        }
    }
    Ok(())
}

/// `W^(k) a^(k-1)_i + b^(k) - s^(k)_i` for every layer, sample and unit;
/// the last layer equates to the prediction.
pub fn build_linear_constraints(
    net: &NetworkSpec,
    registry: &VariableRegistry,
    dataset: &QuantizedDataset,
) -> Result<ConstraintSet, TopologyError> {
    use VariableKind::*;
    check_dataset(net, dataset)?;
    let (l, h, n, m) = (net.layers, net.hidden, net.inputs, net.outputs);
    let frozen = net.frozen();
    let weight = |k: usize, r: usize, c: usize| registry.poly(&VariableKey::param(Weight, k, Element::Cell(r, c)));
    let mut out = ConstraintSet::new();
    for k in 1..=l {
        let rows = if k == l { m } else { h };
        for (i, x) in dataset.inputs.iter().enumerate() {
            for j in 0..rows {
                let mut lhs = Poly::zero();
                if k == 1 {
                    for (c, &xv) in x.iter().enumerate().take(n) {
                        lhs += &weight(1, j, c)?.scale(&int(xv));
                    }
                } else {
                    for c in 0..h {
                        lhs += &(&weight(k, j, c)? * &registry.poly(&key(PostAct, k - 1, i, c))?);
                    }
                }
                if k == 1 || k == l {
                    lhs += &registry.poly(&VariableKey::param(Bias, k, Element::Index(j)))?;
                } else {
                    lhs += &Poly::constant(int(frozen.middle_bias));
                }
                let target = if k == l { key(Prediction, l, i, j) } else { key(PreAct, k, i, j) };
                lhs -= &registry.poly(&target)?;
                out.push(lhs, Provenance { kind: ConstraintKind::Linear, layer: k, sample: Some(i), element: j });
            }
        }
    }
    Ok(out)
}

/// Activation constraints of every hidden layer.
pub fn build_activation_constraints(
    net: &NetworkSpec,
    registry: &VariableRegistry,
    dataset_size: usize,
) -> Result<ConstraintSet, TopologyError> {
    use VariableKind::*;
    let h = net.hidden;
    let mut out = ConstraintSet::new();
    let half = rat(1, 2);
    for k in 1..net.layers {
        let slope = match &net.activation {
            Activation::Prelu => Some(registry.poly(&VariableKey::param(Slope, k, Element::Index(0)))?),
            Activation::LeakyRelu(a) => Some(Poly::constant(a.clone())),
            _ => None,
        };
        for i in 0..dataset_size {
            for j in 0..h {
                let s = registry.poly(&key(PreAct, k, i, j))?;
                let r = registry.poly(&key(AbsVal, k, i, j))?;
                let a = registry.poly(&key(PostAct, k, i, j))?;
                let prov = |kind| Provenance { kind, layer: k, sample: Some(i), element: j };
                match &net.activation {
                    Activation::Sign => {
                        out.push(&(&a * &s) - &r, prov(ConstraintKind::SignProduct));
                        if k == 1 {
                            let t = registry.poly(&key(Slack, k, i, j))?;
                            let slack = &(&a + &r.scale(&int(2))) - &(&Poly::constant(int(1)) + &t);
                            out.push(slack, prov(ConstraintKind::SignSlack));
                        }
                    }
                    Activation::Relu => {
                        let t = registry.poly(&key(Slack, k, i, j))?;
                        out.push(&(&r + &s).scale(&half) - &a, prov(ConstraintKind::ReluMean));
                        out.push(&(&t * &s) - &r, prov(ConstraintKind::ReluSign));
                    }
                    Activation::LeakyRelu(_) | Activation::Prelu => {
                        let t = registry.poly(&key(Slack, k, i, j))?;
                        let alpha = slope.as_ref().expect("slope set for leaky family");
                        let one = Poly::constant(int(1));
                        let lo = (&one - alpha).scale(&half);
                        let hi = (&one + alpha).scale(&half);
                        let gate = &(&lo * &t) + &hi;
                        out.push(&(&gate * &s) - &a, prov(ConstraintKind::LeakySlope));
                        out.push(&(&t * &s) - &r, prov(ConstraintKind::ReluSign));
                    }
                    Activation::Abs => {
                        out.push(&(&r * &s) - &a, prov(ConstraintKind::AbsProduct));
                    }
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Snaps every label to the nearest multiple of `1 / (2H)`, halves away
/// from zero. Returns the snapped dataset and the largest snap distance.
pub fn snap_labels(dataset: &QuantizedDataset, hidden: usize) -> (QuantizedDataset, Rational) {
    let q = rat(1, 2 * hidden as i64);
    let mut out = dataset.clone();
    let mut worst = Rational::zero();
    for row in &mut out.labels {
        for y in row.iter_mut() {
            let snapped = (&*y / &q).round() * &q;
            worst = worst.max((&snapped - &*y).abs());
            *y = snapped;
        }
    }
    (out, worst)
}

/// Loss objective plus any constraints it introduces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LossTerms {
    pub objective: Poly,
    pub constraints: ConstraintSet,
}

/// MSE `1/N sum (y - yhat)^2`, or hinge `1/(2N) sum (r + 1 - y yhat)` with
/// `t (1 - y yhat) = r`.
pub fn build_loss(
    kind: LossKind,
    registry: &VariableRegistry,
    dataset: &QuantizedDataset,
) -> Result<LossTerms, TopologyError> {
    use VariableKind::*;
    let nn = dataset.len();
    let layer = prediction_layer(registry)?;
    let mut objective = Poly::zero();
    let mut constraints = ConstraintSet::new();
    match kind {
        LossKind::Mse => {
            let w = rat(1, nn as i64);
            for (i, ys) in dataset.labels.iter().enumerate() {
                for (o, y) in ys.iter().enumerate() {
                    let diff = &Poly::constant(y.clone()) - &registry.poly(&key(Prediction, layer, i, o))?;
                    objective += &diff.square().scale(&w);
                }
            }
        }
        LossKind::Hinge => {
            let w = rat(1, 2 * nn as i64);
            for (i, ys) in dataset.labels.iter().enumerate() {
                for (o, y) in ys.iter().enumerate() {
                    if y.abs() != int(1) {
                        return Err(TopologyError::HingeLabel { sample: i, label: fmt_rational(y) });
                    }
                    let yhat = registry.poly(&key(Prediction, layer, i, o))?;
                    let r = registry.poly(&key(HingeAbs, layer, i, o))?;
                    let t = registry.poly(&key(HingeSign, layer, i, o))?;
                    let margin = &Poly::constant(int(1)) - &yhat.scale(y);
                    objective += &(&r + &margin).scale(&w);
                    let prov = Provenance { kind: ConstraintKind::Hinge, layer, sample: Some(i), element: o };
                    constraints.push(&(&t * &margin) - &r, prov);
                }
            }
        }
    }
    Ok(LossTerms { objective, constraints })
}

fn prediction_layer(registry: &VariableRegistry) -> Result<usize, TopologyError> {
    registry
        .entries()
        .iter()
        .find(|(k, _)| k.kind == VariableKind::Prediction)
        .map(|(k, _)| k.layer)
        .ok_or_else(|| TopologyError::Invalid("registry has no prediction variables".into()))
}

/// Row-major 2D map of polynomials (one channel).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureMap {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Poly>,
}

impl FeatureMap {
    pub fn new(rows: usize, cols: usize, cells: Vec<Poly>) -> Result<Self, TopologyError> {
        if cells.len() != rows * cols {
            return Err(TopologyError::MapShape(format!("{} cells for a {rows}x{cols} map", cells.len())));
        }
        Ok(FeatureMap { rows, cols, cells })
    }

    pub fn constant(rows: usize, cols: usize, value: Rational) -> Self {
        FeatureMap { rows, cols, cells: vec![Poly::constant(value); rows * cols] }
    }

    pub fn at(&self, r: usize, c: usize) -> &Poly {
        &self.cells[r * self.cols + c]
    }
}

/// Inputs of one structured layer.
#[derive(Clone, Debug)]
pub enum StructuredLayer<'a> {
    /// Valid cross-correlation with stride 1: `sum kernel * input + bias - output`.
    Conv2d { kernel: &'a FeatureMap, input: &'a FeatureMap, bias: Option<&'a Poly>, output: &'a FeatureMap },
    /// Non-overlapping mean over `window x window` blocks.
    AvgPool { window: usize, input: &'a FeatureMap, output: &'a FeatureMap },
    /// `s - mu - s_norm * sigma` per element, one frozen statistic per channel.
    BatchNorm { mean: &'a [Rational], std: &'a [Rational], channels: &'a [(FeatureMap, FeatureMap)] },
    MaxPool { window: usize },
}

pub fn build_structured_layer_constraints(layer: usize, spec: StructuredLayer<'_>) -> Result<ConstraintSet, TopologyError> {
    let mut out = ConstraintSet::new();
    let prov = |kind, element| Provenance { kind, layer, sample: None, element };
    match spec {
        StructuredLayer::Conv2d { kernel, input, bias, output } => {
            if kernel.rows > input.rows || kernel.cols > input.cols {
                return Err(TopologyError::MapShape("kernel larger than input".into()));
            }
            let (or, oc) = (input.rows - kernel.rows + 1, input.cols - kernel.cols + 1);
            if output.rows != or || output.cols != oc {
                return Err(TopologyError::MapShape(format!("conv output must be {or}x{oc}")));
            }
            for r in 0..or {
                for c in 0..oc {
                    let mut lhs = Poly::zero();
                    for i in 0..kernel.rows {
                        for j in 0..kernel.cols {
                            lhs += &(kernel.at(i, j) * input.at(r + i, c + j));
                        }
                    }
                    if let Some(b) = bias {
                        lhs += b;
                    }
                    lhs -= output.at(r, c);
                    out.push(lhs, prov(ConstraintKind::Conv, r * oc + c));
                }
            }
        }
        StructuredLayer::AvgPool { window, input, output } => {
            if window == 0 || input.rows % window != 0 || input.cols % window != 0 {
                return Err(TopologyError::MapShape(format!("window {window} must tile the {}x{} input", input.rows, input.cols)));
            }
            let (or, oc) = (input.rows / window, input.cols / window);
            if output.rows != or || output.cols != oc {
                return Err(TopologyError::MapShape(format!("pool output must be {or}x{oc}")));
            }
            let w = rat(1, (window * window) as i64);
            for r in 0..or {
                for c in 0..oc {
                    let mut lhs = Poly::zero();
                    for i in 0..window {
                        for j in 0..window {
                            lhs += input.at(r * window + i, c * window + j);
                        }
                    }
                    let lhs = &lhs.scale(&w) - output.at(r, c);
                    out.push(lhs, prov(ConstraintKind::AvgPool, r * oc + c));
                }
            }
        }
        StructuredLayer::BatchNorm { mean, std, channels } => {
            if mean.len() != channels.len() || std.len() != channels.len() {
                return Err(TopologyError::MapShape("one mean and std per channel".into()));
            }
            let mut element = 0;
            for ((pre, norm), (mu, sigma)) in channels.iter().zip(mean.iter().zip(std)) {
                if pre.rows != norm.rows || pre.cols != norm.cols {
                    return Err(TopologyError::MapShape("normalized map must match its input".into()));
                }
                if !sigma.is_positive() {
                    return Err(TopologyError::MapShape("batchnorm std must be positive".into()));
                }
                for (s, sn) in pre.cells.iter().zip(&norm.cells) {
                    let lhs = &(s - &Poly::constant(mu.clone())) - &sn.scale(sigma);
                    out.push(lhs, prov(ConstraintKind::BatchNorm, element));
                    element += 1;
                }
            }
        }
        StructuredLayer::MaxPool { .. } => return Err(TopologyError::MaxPoolOutOfScope),
    }
    Ok(out)
}
