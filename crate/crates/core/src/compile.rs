//! Lowering of the constrained problem to a QUBO: squared-residual
//! penalties, then Rosenberg substitution until every monomial is quadratic.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::data::QuantizedDataset;
use crate::encoding::{build_registry, EncodingError, VariableRegistry};
use crate::poly::{fmt_rational, int, parse_rational, BitId, Monomial, Poly, PolyError, Rational};
use crate::topology::{
    build_activation_constraints, build_linear_constraints, build_loss, snap_labels, ConstraintSet, NetworkSpec,
    TopologyError,
};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("penalty weight rho must be positive, got {0}")]
    NonPositiveRho(String),
    #[error("fixed lambda must be positive, got {0}")]
    NonPositiveLambda(String),
    #[error("bad lambda policy `{0}`; expected `auto` or `fixed:<value>`")]
    LambdaPolicy(String),
    #[error("integer-scaled coefficient {0} does not fit in 64 bits")]
    Overflow(String),
    #[error("{what} line {line}: {msg}")]
    Parse { what: &'static str, line: usize, msg: String },
    #[error("QUBO has {got} variables, expected {want}")]
    VarCount { got: usize, want: usize },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LambdaPolicy {
    /// `1 + sum |c|` over the monomials containing the substituted pair.
    AutoBound,
    Fixed(Rational),
}

impl fmt::Display for LambdaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaPolicy::AutoBound => write!(f, "auto"),
            LambdaPolicy::Fixed(v) => write!(f, "fixed:{}", fmt_rational(v)),
        }
    }
}

impl FromStr for LambdaPolicy {
    type Err = CompileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "auto" => Ok(LambdaPolicy::AutoBound),
            other => {
                let v = other
                    .strip_prefix("fixed:")
                    .and_then(|v| parse_rational(v).ok())
                    .ok_or_else(|| CompileError::LambdaPolicy(s.into()))?;
                if !v.is_positive() {
                    return Err(CompileError::NonPositiveLambda(fmt_rational(&v)));
                }
                Ok(LambdaPolicy::Fixed(v))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PenaltyConfig {
    /// `None` selects [`default_rho`].
    pub rho: Option<Rational>,
    pub lambda: LambdaPolicy,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig { rho: None, lambda: LambdaPolicy::AutoBound }
    }
}

/// `4 (2H)^2 N + 1`: larger than the largest MSE gain a violated constraint
/// could buy, measured against the smallest squared residual quantum.
pub fn default_rho(hidden: usize, dataset_size: usize) -> Rational {
    let h2 = (2 * hidden as i64).pow(2);
    int(4 * h2 * dataset_size as i64 + 1)
}

/// `objective + rho * sum_j phi_j^2`, expanded multilinearly.
pub fn penalize(objective: &Poly, constraints: &ConstraintSet, rho: &Rational) -> Result<Poly, CompileError> {
    if !rho.is_positive() {
        return Err(CompileError::NonPositiveRho(fmt_rational(rho)));
    }
    let squares: Vec<Poly> = constraints.constraints.par_iter().map(|(p, _)| p.square()).collect();
    let mut out = objective.clone();
    for sq in &squares {
        out += &sq.scale(rho);
    }
    Ok(out)
}

/// `h(u1, u2, v) = 3v + u1 u2 - 2 u1 v - 2 u2 v`; zero iff `v = u1 u2`, positive otherwise.
pub fn rosenberg_poly(u1: BitId, u2: BitId, v: BitId) -> Poly {
    Poly::from_terms([
        (Monomial::var(v), int(3)),
        (Monomial::from_bits([u1, u2]), int(1)),
        (Monomial::from_bits([u1, v]), int(-2)),
        (Monomial::from_bits([u2, v]), int(-2)),
    ])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionRecord {
    pub u1: BitId,
    pub u2: BitId,
    pub v: BitId,
    pub lambda: Rational,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReductionTrace {
    pub records: Vec<ReductionRecord>,
}

impl ReductionTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Applies the recorded substitutions to `p`.
    pub fn replay(&self, p: &Poly) -> Result<Poly, CompileError> {
        let mut cur = p.clone();
        for r in &self.records {
            cur = cur.substitute_factor(r.u1, r.u2, r.v)?;
            cur += &rosenberg_poly(r.u1, r.u2, r.v).scale(&r.lambda);
        }
        Ok(cur)
    }

    /// Sets every auxiliary bit to the product it stands for.
    pub fn fill_auxiliaries(&self, assignment: &mut [bool]) {
        for r in &self.records {
            assignment[r.v.index()] = assignment[r.u1.index()] && assignment[r.u2.index()];
        }
    }

    /// `u1 u2 v lambda` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# u1 u2 v lambda\n");
        for r in &self.records {
            out.push_str(&format!("{} {} {} {}\n", r.u1, r.u2, r.v, fmt_rational(&r.lambda)));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, CompileError> {
        let mut records = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CompileError::Parse { what: "trace", line: idx + 1, msg };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", f.len())));
            }
            let bit = |s: &str| s.parse::<u32>().map(BitId).map_err(|_| err(format!("bad bit `{s}`")));
            let lambda = parse_rational(f[3]).map_err(err)?;
            records.push(ReductionRecord { u1: bit(f[0])?, u2: bit(f[1])?, v: bit(f[2])?, lambda });
        }
        Ok(ReductionTrace { records })
    }
}

/// Most frequent pair inside monomials of degree above two; ties go to the
/// lexicographically smallest pair.
pub fn most_frequent_pair(p: &Poly) -> Option<(BitId, BitId)> {
    let mut freq: HashMap<(BitId, BitId), usize> = HashMap::new();
    for (m, _) in p.terms().filter(|(m, _)| m.degree() > 2) {
        let bits = m.bits();
        for i in 0..bits.len() {
            for j in i + 1..bits.len() {
                *freq.entry((bits[i], bits[j])).or_insert(0) += 1;
            }
        }
    }
    freq.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(pair, _)| pair)
}

/// Rosenberg order reduction. Fresh bits are numbered from `next_bit`.
pub fn reduce_poly(p: &Poly, policy: &LambdaPolicy, next_bit: u32) -> Result<(Poly, ReductionTrace), CompileError> {
    let mut next = next_bit.max(p.max_bit().map_or(0, |b| b.0 + 1));
    let mut cur = p.clone();
    let mut trace = ReductionTrace::default();
    while cur.degree() > 2 {
        let (u1, u2) = most_frequent_pair(&cur).expect("degree above two implies a pair");
        let v = BitId(next);
        next += 1;
        let lambda = match policy {
            LambdaPolicy::AutoBound => Rational::one() + cur.abs_weight_containing(&[u1, u2]),
            LambdaPolicy::Fixed(l) => l.clone(),
        };
        cur = cur.substitute_factor(u1, u2, v)?;
        cur += &rosenberg_poly(u1, u2, v).scale(&lambda);
        trace.records.push(ReductionRecord { u1, u2, v, lambda });
    }
    Ok((cur, trace))
}

/// Reduces `p` and integer-scales the result into a QUBO over
/// `max(num_vars, bits used)` variables.
pub fn reduce_order(p: &Poly, policy: &LambdaPolicy, num_vars: u32) -> Result<(QuboInstance, ReductionTrace), CompileError> {
    let (quad, trace) = reduce_poly(p, policy, num_vars)?;
    let used = quad.max_bit().map_or(0, |b| b.0 + 1);
    let total = num_vars.max(used).max(trace.records.last().map_or(0, |r| r.v.0 + 1));
    Ok((QuboInstance::from_quadratic(&quad, total as usize)?, trace))
}

/// `energy(x) = sum_{i <= j} Q_ij x_i x_j`; the objective it stands for is
/// `(energy + offset) * scale`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuboInstance {
    pub num_vars: usize,
    pub coefficients: BTreeMap<(u32, u32), i64>,
    pub offset: i64,
    pub scale: Rational,
}

fn to_i64(v: &BigInt) -> Result<i64, CompileError> {
    v.to_i64().ok_or_else(|| CompileError::Overflow(v.to_string()))
}

impl QuboInstance {
    /// Multiplies a quadratic polynomial by its coefficient denominator lcm.
    pub fn from_quadratic(p: &Poly, num_vars: usize) -> Result<Self, CompileError> {
        assert!(p.degree() <= 2, "QUBO needs a quadratic polynomial");
        let lcd = p.denominator_lcm();
        let factor = Rational::from_integer(lcd.clone());
        let mut coefficients = BTreeMap::new();
        let mut offset = 0;
        for (m, c) in p.terms() {
            let v = to_i64(&(c * &factor).to_integer())?;
            match m.bits() {
                [] => offset = v,
                [i] => {
                    coefficients.insert((i.0, i.0), v);
                }
                [i, j] => {
                    coefficients.insert((i.0, j.0), v);
                }
                _ => unreachable!(),
            }
        }
        if let Some(&(_, j)) = coefficients.keys().max_by_key(|k| k.1) {
            if j as usize >= num_vars {
                return Err(CompileError::VarCount { got: j as usize + 1, want: num_vars });
            }
        }
        Ok(QuboInstance { num_vars, coefficients, offset, scale: Rational::new(BigInt::one(), lcd) })
    }

    pub fn to_poly(&self) -> Poly {
        let mut p = Poly::constant(int(self.offset));
        for (&(i, j), &c) in &self.coefficients {
            p.add_term(Monomial::from_bits([BitId(i), BitId(j)]), int(c));
        }
        p.scale(&self.scale)
    }

    /// Integer energy without the offset.
    pub fn energy(&self, assignment: &[bool]) -> i64 {
        assert!(assignment.len() >= self.num_vars, "assignment shorter than the QUBO");
        self.coefficients
            .iter()
            .filter(|(&(i, j), _)| assignment[i as usize] && assignment[j as usize])
            .map(|(_, &c)| c)
            .sum()
    }

    /// `(energy + offset) * scale`.
    pub fn rescale(&self, energy: i64) -> Rational {
        int(energy + self.offset) * &self.scale
    }

    /// Energy whose rescaled value is zero.
    pub fn zero_energy(&self) -> i64 {
        -self.offset
    }

    pub fn max_abs_coefficient(&self) -> i64 {
        self.coefficients.values().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("qubo/1\nvars {}\nscale {}/{}\noffset {}\n", self.num_vars, self.scale.numer(), self.scale.denom(), self.offset);
        for (&(i, j), &c) in &self.coefficients {
            out.push_str(&format!("{i} {j} {c}\n"));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, CompileError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let mut next = |want: &str| -> Result<(usize, String), CompileError> {
            let (i, l) = lines.next().ok_or(CompileError::Parse { what: "qubo", line: 0, msg: format!("missing `{want}`") })?;
            Ok((i + 1, l.trim().to_string()))
        };
        let err = |line: usize, msg: String| CompileError::Parse { what: "qubo", line, msg };
        let (ln, magic) = next("qubo/1")?;
        if magic != "qubo/1" {
            return Err(err(ln, format!("expected `qubo/1`, got `{magic}`")));
        }
        let mut field = |name: &str| -> Result<(usize, String), CompileError> {
            let (ln, l) = next(name)?;
            let rest = l.strip_prefix(name).and_then(|r| r.strip_prefix(' ')).ok_or_else(|| err(ln, format!("expected `{name} <value>`")))?;
            Ok((ln, rest.trim().to_string()))
        };
        let (ln, vars) = field("vars")?;
        let num_vars: usize = vars.parse().map_err(|_| err(ln, format!("bad variable count `{vars}`")))?;
        let (ln, scale) = field("scale")?;
        let scale = parse_rational(&scale).map_err(|m| err(ln, m))?;
        let (ln, offset) = field("offset")?;
        let offset: i64 = offset.parse().map_err(|_| err(ln, format!("bad offset `{offset}`")))?;
        let mut coefficients = BTreeMap::new();
        let mut prev: Option<(u32, u32)> = None;
        for (idx, raw) in text.lines().enumerate().skip(ln) {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ln = idx + 1;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(ln, format!("expected `i j coeff`, got `{line}`")));
            }
            let i: u32 = f[0].parse().map_err(|_| err(ln, format!("bad index `{}`", f[0])))?;
            let j: u32 = f[1].parse().map_err(|_| err(ln, format!("bad index `{}`", f[1])))?;
            let c: i64 = f[2].parse().map_err(|_| err(ln, format!("bad coefficient `{}`", f[2])))?;
            if i > j || j as usize >= num_vars {
                return Err(err(ln, format!("entry ({i}, {j}) must satisfy i <= j < {num_vars}")));
            }
            if prev.is_some_and(|p| p >= (i, j)) {
                return Err(err(ln, "entries must be strictly sorted".into()));
            }
            prev = Some((i, j));
            coefficients.insert((i, j), c);
        }
        Ok(QuboInstance { num_vars, coefficients, offset, scale })
    }
}

/// Everything produced by one compilation.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub qubo: QuboInstance,
    /// Registry including reduction auxiliaries.
    pub registry: VariableRegistry,
    pub trace: ReductionTrace,
    pub constraints: ConstraintSet,
    /// Loss objective before penalties.
    pub objective: Poly,
    pub penalized: Poly,
    pub rho: Rational,
    pub original_bits: u32,
    /// Labels after grid snapping.
    pub dataset: QuantizedDataset,
    pub snap_distance: Rational,
}

impl Compiled {
    pub fn auxiliary_bits(&self) -> usize {
        self.trace.len()
    }
}

/// Registry, constraints, loss, penalties and order reduction in one pass.
pub fn compile(net: &NetworkSpec, dataset: &QuantizedDataset, config: &PenaltyConfig) -> Result<Compiled, CompileError> {
    net.validate()?;
    let mut registry = build_registry(net, dataset.len())?;
    let original_bits = registry.num_bits();
    let (dataset, snap_distance) = snap_labels(dataset, net.hidden);
    if !snap_distance.is_zero() {
        log::info!("labels snapped to the 1/{} grid, largest move {}", 2 * net.hidden, fmt_rational(&snap_distance));
    }
    let mut constraints = build_linear_constraints(net, &registry, &dataset)?;
    constraints.extend(build_activation_constraints(net, &registry, dataset.len())?);
    let loss = build_loss(net.loss, &registry, &dataset)?;
    constraints.extend(loss.constraints);
    let rho = config.rho.clone().unwrap_or_else(|| default_rho(net.hidden, dataset.len()));
    let penalized = penalize(&loss.objective, &constraints, &rho)?;
    let (qubo, trace) = reduce_order(&penalized, &config.lambda, original_bits)?;
    for (k, r) in trace.records.iter().enumerate() {
        registry.push_reduction_aux(r.v, k);
    }
    log::info!("compiled {} original + {} auxiliary bits, {} couplings", original_bits, trace.len(), qubo.coefficients.len());
    Ok(Compiled { qubo, registry, trace, constraints, objective: loss.objective, penalized, rho, original_bits, dataset, snap_distance })
}
