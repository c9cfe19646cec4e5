//! Decoded network parameters, exact forward inference, metrics and the
//! canonical form under hidden-neuron exchange.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::data::QuantizedDataset;
use crate::encoding::{Element, EncodingError, VariableKey, VariableKind, VariableRegistry};
use crate::poly::{fmt_rational, int, parse_rational, Rational};
use crate::topology::{Activation, NetworkSpec, TopologyError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("assignment has {got} bits, registry needs {want}")]
    Length { got: usize, want: usize },
    #[error("input has {got} features, network expects {want}")]
    InputShape { got: usize, want: usize },
    #[error("params file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerParams {
    /// `rows = outputs of the layer`, `cols = inputs of the layer`.
    pub weights: Vec<Vec<Rational>>,
    pub bias: Vec<Rational>,
    /// Bias fixed by configuration rather than learned.
    pub frozen_bias: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedParameters {
    pub inputs: usize,
    pub activation: Activation,
    pub layers: Vec<LayerParams>,
    /// Learned PReLU slope per hidden layer; empty for other activations.
    pub slopes: Vec<Rational>,
}

impl DecodedParameters {
    pub fn hidden(&self) -> usize {
        self.layers[0].bias.len()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.bias.len())
    }

    fn flatten(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        for l in &self.layers {
            for row in &l.weights {
                out.extend(row.iter().cloned());
            }
            out.extend(l.bias.iter().cloned());
        }
        out.extend(self.slopes.iter().cloned());
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "layers={}", self.layers.len()).unwrap();
        writeln!(out, "inputs={}", self.inputs).unwrap();
        writeln!(out, "hidden={}", self.hidden()).unwrap();
        writeln!(out, "outputs={}", self.outputs()).unwrap();
        writeln!(out, "activation={}", self.activation).unwrap();
        for (k, l) in self.layers.iter().enumerate() {
            for (r, row) in l.weights.iter().enumerate() {
                for (c, w) in row.iter().enumerate() {
                    writeln!(out, "W{}.{r}.{c}={}", k + 1, fmt_rational(w)).unwrap();
                }
            }
            for (j, b) in l.bias.iter().enumerate() {
                let note = if l.frozen_bias { " # frozen" } else { "" };
                writeln!(out, "b{}.{j}={}{note}", k + 1, fmt_rational(b)).unwrap();
            }
        }
        for (k, a) in self.slopes.iter().enumerate() {
            writeln!(out, "alpha{}={}", k + 1, fmt_rational(a)).unwrap();
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, ModelError> {
        let mut header: BTreeMap<&str, String> = BTreeMap::new();
        let mut values: Vec<(usize, &str, String, bool)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let frozen = raw.contains("# frozen");
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ModelError::Parse { line: idx + 1, msg: format!("expected key=value, got `{line}`") })?;
            match k.trim() {
                key @ ("layers" | "inputs" | "hidden" | "outputs" | "activation") => {
                    header.insert(key, v.trim().to_string());
                }
                key => values.push((idx + 1, key, v.trim().to_string(), frozen)),
            }
        }
        let num = |key: &str| -> Result<usize, ModelError> {
            header.get(key).and_then(|v| v.parse().ok()).ok_or(ModelError::Parse { line: 0, msg: format!("missing or bad `{key}`") })
        };
        let (layers, n, h, m) = (num("layers")?, num("inputs")?, num("hidden")?, num("outputs")?);
        let activation: Activation = header.get("activation").map_or(Ok(Activation::Sign), |v| v.parse())?;
        let mut p = DecodedParameters::zeros(layers, n, h, m, activation);
        for (line, key, value, frozen) in values {
            let err = |msg: String| ModelError::Parse { line, msg };
            let v = parse_rational(&value).map_err(err)?;
            let idx = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad index in `{key}`")));
            let set = |slot: Option<&mut Rational>, v: Rational| match slot {
                Some(s) => {
                    *s = v;
                    Ok(())
                }
                None => Err(err(format!("`{key}` outside the declared shape"))),
            };
            if let Some(rest) = key.strip_prefix('W') {
                let f: Vec<&str> = rest.split('.').collect();
                if f.len() != 3 {
                    return Err(err(format!("bad weight key `{key}`")));
                }
                let (k, r, c) = (idx(f[0])?, idx(f[1])?, idx(f[2])?);
                set(p.layers.get_mut(k.wrapping_sub(1)).and_then(|l| l.weights.get_mut(r)).and_then(|row| row.get_mut(c)), v)?;
            } else if let Some(rest) = key.strip_prefix('b') {
                let (k, j) = rest.split_once('.').ok_or_else(|| err(format!("bad bias key `{key}`")))?;
                let (k, j) = (idx(k)?, idx(j)?);
                if let Some(l) = p.layers.get_mut(k.wrapping_sub(1)) {
                    l.frozen_bias = frozen;
                }
                set(p.layers.get_mut(k.wrapping_sub(1)).and_then(|l| l.bias.get_mut(j)), v)?;
            } else if let Some(k) = key.strip_prefix("alpha") {
                let k = idx(k)?;
                if p.slopes.len() < k {
                    p.slopes.resize(k, Rational::zero());
                }
                p.slopes[k - 1] = v;
            } else {
                return Err(err(format!("unknown key `{key}`")));
            }
        }
        Ok(p)
    }

    /// All-zero parameters of the given shape.
    pub fn zeros(layers: usize, inputs: usize, hidden: usize, outputs: usize, activation: Activation) -> Self {
        let layer = |rows: usize, cols: usize| LayerParams {
            weights: vec![vec![Rational::zero(); cols]; rows],
            bias: vec![Rational::zero(); rows],
            frozen_bias: false,
        };
        let mut ls = vec![layer(hidden, inputs)];
        for _ in 2..layers {
            ls.push(layer(hidden, hidden));
        }
        ls.push(layer(outputs, hidden));
        DecodedParameters { inputs, activation, layers: ls, slopes: Vec::new() }
    }
}

/// Reads every parameter from a spin assignment. Bits past the registry's
/// parameter encodings (per-sample and auxiliary) are ignored.
pub fn decode(assignment: &[bool], registry: &VariableRegistry, net: &NetworkSpec) -> Result<DecodedParameters, ModelError> {
    let want = registry.original_bits() as usize;
    if assignment.len() < want {
        return Err(ModelError::Length { got: assignment.len(), want });
    }
    let (l, h, n, m) = (net.layers, net.hidden, net.inputs, net.outputs);
    let mut p = DecodedParameters::zeros(l, n, h, m, net.activation.clone());
    let frozen = int(net.frozen().middle_bias);
    for k in 1..=l {
        let layer = &mut p.layers[k - 1];
        for (r, row) in layer.weights.iter_mut().enumerate() {
            for (c, w) in row.iter_mut().enumerate() {
                *w = registry.expect(&VariableKey::param(VariableKind::Weight, k, Element::Cell(r, c)))?.decode(assignment)?;
            }
        }
        for (j, b) in layer.bias.iter_mut().enumerate() {
            *b = if k == 1 || k == l {
                registry.expect(&VariableKey::param(VariableKind::Bias, k, Element::Index(j)))?.decode(assignment)?
            } else {
                frozen.clone()
            };
        }
        layer.frozen_bias = k != 1 && k != l;
    }
    if net.activation == Activation::Prelu {
        p.slopes = (1..l)
            .map(|k| registry.expect(&VariableKey::param(VariableKind::Slope, k, Element::Index(0)))?.decode(assignment))
            .collect::<Result<_, _>>()?;
    }
    Ok(p)
}

/// Every registry variable's decoded value, keyed by variable.
pub fn decode_all(assignment: &[bool], registry: &VariableRegistry) -> Result<BTreeMap<VariableKey, Rational>, ModelError> {
    registry
        .entries()
        .iter()
        .map(|(k, e)| Ok((*k, e.decode(assignment)?)))
        .collect()
}

/// `+1` for `x >= 0`, else `-1`.
pub fn sign(x: &Rational) -> Rational {
    if x.is_negative() {
        int(-1)
    } else {
        int(1)
    }
}

fn activate(act: &Activation, slope: Option<&Rational>, s: &Rational) -> Rational {
    match act {
        Activation::Sign => sign(s),
        Activation::Relu => s.clone().max(Rational::zero()),
        Activation::Abs => s.abs(),
        Activation::LeakyRelu(a) => if s.is_negative() { s * a } else { s.clone() },
        Activation::Prelu => if s.is_negative() { s * slope.expect("prelu slope per layer") } else { s.clone() },
    }
}

/// Pre- and post-activations of every hidden layer plus the output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForwardTrace {
    pub preact: Vec<Vec<Rational>>,
    pub postact: Vec<Vec<Rational>>,
    pub output: Vec<Rational>,
}

pub fn forward_trace(params: &DecodedParameters, x: &[i64]) -> Result<ForwardTrace, ModelError> {
    if x.len() != params.inputs {
        return Err(ModelError::InputShape { got: x.len(), want: params.inputs });
    }
    let mut a: Vec<Rational> = x.iter().map(|&v| int(v)).collect();
    let mut trace = ForwardTrace { preact: Vec::new(), postact: Vec::new(), output: Vec::new() };
    let last = params.layers.len() - 1;
    for (k, layer) in params.layers.iter().enumerate() {
        let s: Vec<Rational> = layer
            .weights
            .iter()
            .zip(&layer.bias)
            .map(|(row, b)| row.iter().zip(&a).fold(b.clone(), |acc, (w, v)| acc + w * v))
            .collect();
        if k == last {
            trace.output = s;
            break;
        }
        a = s.iter().map(|v| activate(&params.activation, params.slopes.get(k), v)).collect();
        trace.preact.push(s);
        trace.postact.push(a.clone());
    }
    Ok(trace)
}

/// Exact network output.
pub fn forward(params: &DecodedParameters, x: &[i64]) -> Result<Vec<Rational>, ModelError> {
    Ok(forward_trace(params, x)?.output)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Task {
    Regression,
    /// Output `>= 0` predicts the positive class.
    BinaryClassification,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub mse: Rational,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    /// Rows are the true class `[+, -]`, columns the predicted class.
    pub confusion: Option<[[usize; 2]; 2]>,
    pub predictions: Vec<Vec<Rational>>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "mse {}\nmse_float {:.6}\naccuracy {:.6}\ncorrect {} total {}\n",
            fmt_rational(&self.mse),
            self.mse.to_f64().unwrap_or(f64::NAN),
            self.accuracy,
            self.correct,
            self.total
        );
        if let Some(c) = self.confusion {
            writeln!(out, "confusion true+ pred+ {} pred- {}", c[0][0], c[0][1]).unwrap();
            writeln!(out, "confusion true- pred+ {} pred- {}", c[1][0], c[1][1]).unwrap();
        }
        out
    }

    pub fn confusion_csv(&self) -> Option<String> {
        self.confusion.map(|c| format!("true\\pred,+1,-1\n+1,{},{}\n-1,{},{}\n", c[0][0], c[0][1], c[1][0], c[1][1]))
    }
}

/// MSE `1/N sum_i |y_i - yhat_i|^2` and, for binary tasks, accuracy and the confusion matrix.
pub fn evaluate_model(params: &DecodedParameters, dataset: &QuantizedDataset, task: Task) -> Result<EvalReport, ModelError> {
    let mut predictions = Vec::with_capacity(dataset.len());
    let mut sq = Rational::zero();
    let mut confusion = [[0usize; 2]; 2];
    let mut correct = 0;
    for (x, y) in dataset.inputs.iter().zip(&dataset.labels) {
        let yhat = forward(params, x)?;
        for (a, b) in y.iter().zip(&yhat) {
            let d = a - b;
            sq += &d * &d;
        }
        match task {
            Task::BinaryClassification => {
                let truth = usize::from(y[0].is_negative());
                let pred = usize::from(yhat[0].is_negative());
                confusion[truth][pred] += 1;
                correct += usize::from(truth == pred);
            }
            Task::Regression => correct += usize::from(*y == yhat),
        }
        predictions.push(yhat);
    }
    let total = dataset.len();
    let mse = if total == 0 { Rational::zero() } else { sq / int(total as i64) };
    Ok(EvalReport {
        mse,
        correct,
        total,
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        confusion: (task == Task::BinaryClassification).then_some(confusion),
        predictions,
    })
}

/// Reorders hidden neuron `perm[j]` of hidden layer `k` into slot `j`.
fn permute_layer(p: &mut DecodedParameters, k: usize, perm: &[usize]) {
    let layer = &mut p.layers[k];
    layer.weights = perm.iter().map(|&j| layer.weights[j].clone()).collect();
    layer.bias = perm.iter().map(|&j| layer.bias[j].clone()).collect();
    let next = &mut p.layers[k + 1];
    for row in &mut next.weights {
        *row = perm.iter().map(|&j| row[j].clone()).collect();
    }
}

/// Lexicographically next permutation in place; false after the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Largest permutation product searched exhaustively for deep networks.
pub const CANONICAL_SEARCH_LIMIT: u128 = 100_000;

/// Canonical representative under exchanging hidden neurons.
///
/// With one hidden layer the neurons are sorted by (incoming row, bias,
/// outgoing column). Deeper networks take the lexicographically smallest
/// flattened parameter vector over all per-layer permutations when there
/// are at most [`CANONICAL_SEARCH_LIMIT`] of them, and otherwise fall back
/// to sorting layer by layer, which is not guaranteed permutation invariant.
pub fn canonicalize(params: &DecodedParameters) -> DecodedParameters {
    let hidden_layers = params.layers.len() - 1;
    let h = params.hidden();
    let mut out = params.clone();
    if hidden_layers == 1 {
        let key = |j: usize| {
            let mut k = params.layers[0].weights[j].clone();
            k.push(params.layers[0].bias[j].clone());
            k.extend(params.layers[1].weights.iter().map(|row| row[j].clone()));
            k
        };
        let mut perm: Vec<usize> = (0..h).collect();
        perm.sort_by_key(|&j| key(j));
        permute_layer(&mut out, 0, &perm);
        return out;
    }
    let fact: u128 = (1..=h as u128).product();
    let total = fact.checked_pow(hidden_layers as u32);
    if total.is_some_and(|t| t <= CANONICAL_SEARCH_LIMIT) {
        let mut perms: Vec<Vec<usize>> = vec![(0..h).collect(); hidden_layers];
        let mut best: Option<(Vec<Rational>, DecodedParameters)> = None;
        loop {
            let mut cand = params.clone();
            for (k, perm) in perms.iter().enumerate() {
                permute_layer(&mut cand, k, perm);
            }
            let flat = cand.flatten();
            if best.as_ref().is_none_or(|(b, _)| flat < *b) {
                best = Some((flat, cand));
            }
            // odometer over the per-layer permutations
            let mut k = 0;
            while k < hidden_layers && !next_permutation(&mut perms[k]) {
                perms[k] = (0..h).collect();
                k += 1;
            }
            if k == hidden_layers {
                break;
            }
        }
        return best.expect("at least one permutation").1;
    }
    for k in 0..hidden_layers {
        let key = |p: &DecodedParameters, j: usize| {
            let mut key = p.layers[k].weights[j].clone();
            key.push(p.layers[k].bias[j].clone());
            key.extend(p.layers[k + 1].weights.iter().map(|row| row[j].clone()));
            key
        };
        let mut perm: Vec<usize> = (0..h).collect();
        perm.sort_by_key(|&j| key(&out, j));
        permute_layer(&mut out, k, &perm);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::build_registry;
    use crate::poly::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mnist_net() -> NetworkSpec {
        NetworkSpec::dense(2, 1, 4, 1, 0)
    }

    #[test]
    fn all_zero_bits_decode_to_lowest_values() {
        let net = mnist_net();
        let reg = build_registry(&net, 4).unwrap();
        let p = decode(&vec![false; reg.num_bits() as usize], &reg, &net).unwrap();
        assert!(p.layers[0].weights[0].iter().all(|w| *w == int(-1)));
        assert_eq!(p.layers[0].bias[0], int(0));
        assert_eq!(p.layers[1].weights[0][0], int(-1));
        assert_eq!(p.layers[1].bias[0], int(-1));
    }

    #[test]
    fn decode_rejects_short_and_ignores_trailing_bits() {
        let net = mnist_net();
        let reg = build_registry(&net, 4).unwrap();
        assert!(matches!(decode(&[true; 10], &reg, &net), Err(ModelError::Length { got: 10, want: 84 })));
        let mut bits = vec![true; 84];
        let a = decode(&bits, &reg, &net).unwrap();
        bits.extend([false; 24]);
        assert_eq!(decode(&bits, &reg, &net).unwrap(), a);
    }

    #[test]
    fn encode_decode_parameter_roundtrip() {
        let net = NetworkSpec::dense(3, 1, 1, 1, 0);
        let reg = build_registry(&net, 1).unwrap();
        let param_entries: Vec<_> = reg.entries().iter().filter(|(k, _)| k.kind.is_parameter()).collect();
        let param_bits: u32 = param_entries.iter().map(|(_, e)| e.num_bits).sum();
        assert!(param_bits <= 16);
        for code in 0u32..1 << param_bits {
            let mut bits = vec![false; reg.num_bits() as usize];
            for j in 0..param_bits {
                bits[j as usize] = code >> j & 1 == 1;
            }
            let p = decode(&bits, &reg, &net).unwrap();
            let mut again = vec![false; reg.num_bits() as usize];
            for (k, e) in &param_entries {
                let v = match (k.kind, k.element) {
                    (VariableKind::Weight, Element::Cell(r, c)) => p.layers[k.layer - 1].weights[r][c].clone(),
                    (VariableKind::Bias, Element::Index(j)) => p.layers[k.layer - 1].bias[j].clone(),
                    _ => unreachable!(),
                };
                assert!(e.write(&v, &mut again));
            }
            assert_eq!(again, bits);
            assert_eq!(p.layers[1].bias, vec![int(0)]);
        }
    }

    #[test]
    fn sign_at_zero_is_positive() {
        let mut p = DecodedParameters::zeros(2, 4, 1, 1, Activation::Sign);
        p.layers[0].weights[0] = vec![int(1); 4];
        p.layers[1].weights[0][0] = rat(1, 1);
        p.layers[1].bias[0] = int(-1);
        let t = forward_trace(&p, &[1, 1, -1, -1]).unwrap();
        assert_eq!(t.preact[0][0], int(0));
        assert_eq!(t.postact[0][0], int(1));
        assert_eq!(t.output, vec![int(0)]);
    }

    #[test]
    fn zero_last_layer_outputs_bias() {
        let mut p = DecodedParameters::zeros(3, 2, 2, 1, Activation::Sign);
        p.layers[2].bias[0] = rat(1, 2);
        for x in [[0, 0], [1, -1], [2, 2]] {
            assert_eq!(forward(&p, &x).unwrap(), vec![rat(1, 2)]);
        }
    }

    #[test]
    fn metrics() {
        let p = DecodedParameters::zeros(2, 1, 1, 1, Activation::Sign);
        let ds = QuantizedDataset::new(vec![vec![0], vec![1]], vec![vec![int(0)], vec![int(0)]], 1, "t").unwrap();
        let r = evaluate_model(&p, &ds, Task::BinaryClassification).unwrap();
        assert_eq!(r.mse, int(0));
        assert_eq!(r.accuracy, 1.0);
        let ds = QuantizedDataset::new(vec![vec![0], vec![1]], vec![vec![int(1)], vec![int(-1)]], 1, "t").unwrap();
        let r = evaluate_model(&p, &ds, Task::BinaryClassification).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.confusion, Some([[1, 0], [1, 0]]));
        assert_eq!(r.mse, int(1));
        let direct: Rational = r.predictions.iter().zip(&ds.labels).map(|(a, b)| (&a[0] - &b[0]) * (&a[0] - &b[0])).sum::<Rational>() / int(2);
        assert_eq!(r.mse, direct);
    }

    fn random_params(rng: &mut ChaCha8Rng, layers: usize, n: usize, h: usize) -> DecodedParameters {
        let mut p = DecodedParameters::zeros(layers, n, h, 1, Activation::Sign);
        let last = layers - 1;
        for (k, l) in p.layers.iter_mut().enumerate() {
            for row in &mut l.weights {
                for w in row.iter_mut() {
                    *w = if k == last { rat(rng.random_range(-3..=6), 3) } else { int([-1, 1][rng.random_range(0..2)]) };
                }
            }
            for b in &mut l.bias {
                *b = if k == 0 { int(rng.random_range(0..4)) } else if k == last { rat(rng.random_range(-3..=6), 3) } else { int(h as i64 - 1) };
            }
        }
        p
    }

    #[test]
    fn canonical_form_is_exchange_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for layers in [2, 3, 4] {
            for _ in 0..20 {
                let p = random_params(&mut rng, layers, 2, 3);
                let c = canonicalize(&p);
                assert_eq!(canonicalize(&c), c);
                let mut q = p.clone();
                for k in 0..layers - 1 {
                    let mut perm = vec![0, 1, 2];
                    perm.rotate_left(rng.random_range(0..3));
                    if rng.random::<bool>() {
                        perm.swap(0, 1);
                    }
                    permute_layer(&mut q, k, &perm);
                }
                assert_eq!(canonicalize(&q), c);
                for _ in 0..10 {
                    let x = [rng.random_range(-2..=2), rng.random_range(-2..=2)];
                    assert_eq!(forward(&c, &x).unwrap(), forward(&p, &x).unwrap());
                }
            }
        }
        let single = random_params(&mut rng, 2, 3, 1);
        assert_eq!(canonicalize(&single), single);
    }

    #[test]
    fn params_file_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = random_params(&mut rng, 3, 2, 2);
        p.layers[1].frozen_bias = true;
        let text = p.to_text();
        assert!(text.contains("W1.0.0="));
        assert_eq!(DecodedParameters::parse_text(&text).unwrap(), p);
        let mut prelu = DecodedParameters::zeros(2, 1, 1, 1, Activation::Prelu);
        prelu.slopes = vec![rat(3, 8)];
        assert_eq!(DecodedParameters::parse_text(&prelu.to_text()).unwrap(), prelu);
    }

    #[test]
    fn report_text() {
        let p = DecodedParameters::zeros(2, 1, 1, 1, Activation::Sign);
        let ds = QuantizedDataset::new(vec![vec![0]], vec![vec![int(1)]], 1, "t").unwrap();
        let r = evaluate_model(&p, &ds, Task::BinaryClassification).unwrap();
        assert!(r.to_text().contains("accuracy 1.000000"));
        assert_eq!(r.confusion_csv().unwrap(), "true\\pred,+1,-1\n+1,1,0\n-1,0,0\n");
    }
}
