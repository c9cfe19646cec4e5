//! Ground-state search over a [`QuboInstance`]: Gray-code enumeration,
//! enumeration conditioned on a cutset, and seeded simulated annealing.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::compile::QuboInstance;
use crate::poly::{fmt_rational, Rational};

pub const DEFAULT_EXACT_CAP: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("{vars} variables exceed the exact-solver cap of {cap}; use simulated annealing")]
    CapExceeded { vars: usize, cap: usize },
    #[error("component of {size} free variables exceeds the cap of {cap}; enlarge the cutset")]
    ComponentTooLarge { size: usize, cap: usize },
    #[error("cutset variable {0} outside the instance")]
    BadCutset(u32),
    #[error("success probability {0} outside the valid domain")]
    Domain(f64),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("report line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinSolution {
    pub assignment: Vec<bool>,
    /// Integer energy without the offset.
    pub energy: i64,
    /// `(energy + offset) * scale`.
    pub rescaled: Rational,
}

impl SpinSolution {
    pub fn new(q: &QuboInstance, assignment: Vec<bool>) -> Self {
        let energy = q.energy(&assignment);
        SpinSolution { rescaled: q.rescale(energy), energy, assignment }
    }

    pub fn bitstring(&self) -> String {
        self.assignment.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Adjacency of a QUBO in compressed rows: diagonal plus symmetric couplings.
#[derive(Clone, Debug)]
pub struct Couplings {
    pub diag: Vec<i64>,
    pub start: Vec<usize>,
    pub neighbor: Vec<u32>,
    pub weight: Vec<i64>,
}

impl Couplings {
    pub fn new(q: &QuboInstance) -> Self {
        let n = q.num_vars;
        let mut diag = vec![0i64; n];
        let mut degree = vec![0usize; n];
        for (&(i, j), &c) in &q.coefficients {
            if i == j {
                diag[i as usize] += c;
            } else {
                degree[i as usize] += 1;
                degree[j as usize] += 1;
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + degree[i];
        }
        let mut fill = start.clone();
        let mut neighbor = vec![0u32; start[n]];
        let mut weight = vec![0i64; start[n]];
        for (&(i, j), &c) in &q.coefficients {
            if i != j {
                for (a, b) in [(i, j), (j, i)] {
                    let k = fill[a as usize];
                    neighbor[k] = b;
                    weight[k] = c;
                    fill[a as usize] += 1;
                }
            }
        }
        Couplings { diag, start, neighbor, weight }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        (self.start[i]..self.start[i + 1]).map(move |k| (self.neighbor[k] as usize, self.weight[k]))
    }

    /// `field[i] = diag[i] + sum_j Q_ij x_j`; flipping `i` changes the energy
    /// by `field[i]` when `x_i = 0` and by `-field[i]` when `x_i = 1`.
    pub fn fields(&self, x: &[bool]) -> Vec<i64> {
        (0..self.len()).map(|i| self.diag[i] + self.row(i).filter(|&(j, _)| x[j]).map(|(_, w)| w).sum::<i64>()).collect()
    }

    pub fn energy(&self, x: &[bool]) -> i64 {
        let mut e = 0;
        for i in 0..self.len() {
            if x[i] {
                e += self.diag[i];
                e += self.row(i).filter(|&(j, _)| j > i && x[j]).map(|(_, w)| w).sum::<i64>();
            }
        }
        e
    }

    #[inline]
    pub fn delta(&self, x: &[bool], field: &[i64], i: usize) -> i64 {
        if x[i] {
            -field[i]
        } else {
            field[i]
        }
    }

    /// Flips `i`, keeping `field` consistent. Returns the energy change.
    #[inline]
    pub fn flip(&self, x: &mut [bool], field: &mut [i64], i: usize) -> i64 {
        let d = self.delta(x, field, i);
        x[i] = !x[i];
        let sign = if x[i] { 1 } else { -1 };
        for k in self.start[i]..self.start[i + 1] {
            field[self.neighbor[k] as usize] += sign * self.weight[k];
        }
        d
    }
}

/// Lexicographic key with bit 0 most significant (lower key wins ties).
fn lex_key(bits: &[bool]) -> u128 {
    bits.iter().fold(0u128, |acc, &b| acc << 1 | b as u128)
}

/// Exhaustive Gray-code enumeration of all `2^n` assignments.
pub fn solve_exact(q: &QuboInstance, cap: usize) -> Result<SpinSolution, SolverError> {
    let n = q.num_vars;
    if n > cap {
        return Err(SolverError::CapExceeded { vars: n, cap });
    }
    let c = Couplings::new(q);
    let (_, best) = gray_minimum(&c, &(0..n).collect::<Vec<_>>(), vec![false; n]);
    Ok(SpinSolution::new(q, best))
}

/// Minimizes over the variables in `free` (others held at their values in
/// `x`). Returns the minimum energy change relative to `x` and the argmin,
/// ties broken towards the lowest lexicographic pattern of `free`.
fn gray_minimum(c: &Couplings, free: &[usize], mut x: Vec<bool>) -> (i64, Vec<bool>) {
    let k = free.len();
    let mut field = c.fields(&x);
    let mut energy = 0i64;
    let mut best = 0i64;
    let pattern = |x: &[bool]| free.iter().fold(0u64, |acc, &i| acc << 1 | x[i] as u64);
    let mut best_key = pattern(&x);
    let mut best_x = x.clone();
    for step in 1u64..(1u64 << k) {
        let i = free[step.trailing_zeros() as usize];
        energy += c.flip(&mut x, &mut field, i);
        if energy < best || (energy == best && pattern(&x) < best_key) {
            best = energy;
            best_key = pattern(&x);
            best_x.copy_from_slice(&x);
        }
    }
    (best, best_x)
}

/// Exact minimum when removing `cutset` splits the rest into small pieces:
/// every free component is tabulated against its boundary cutset bits, then
/// the cutset is enumerated. Ties resolve to the lowest cutset pattern.
pub fn solve_exact_conditioned(q: &QuboInstance, cutset: &[u32], component_cap: usize) -> Result<SpinSolution, SolverError> {
    let n = q.num_vars;
    let mut cut: Vec<usize> = cutset.iter().map(|&b| b as usize).collect();
    cut.sort_unstable();
    cut.dedup();
    if let Some(&b) = cut.iter().find(|&&b| b >= n) {
        return Err(SolverError::BadCutset(b as u32));
    }
    if cut.len() > 30 {
        return Err(SolverError::CapExceeded { vars: cut.len(), cap: 30 });
    }
    let c = Couplings::new(q);
    let mut in_cut = vec![false; n];
    for &b in &cut {
        in_cut[b] = true;
    }
    // connected components of the free variables
    let mut comp = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        if in_cut[s] || comp[s] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut stack = vec![s];
        let mut members = Vec::new();
        comp[s] = id;
        while let Some(v) = stack.pop() {
            members.push(v);
            for (u, _) in c.row(v) {
                if !in_cut[u] && comp[u] == usize::MAX {
                    comp[u] = id;
                    stack.push(u);
                }
            }
        }
        members.sort_unstable();
        if members.len() > component_cap {
            return Err(SolverError::ComponentTooLarge { size: members.len(), cap: component_cap });
        }
        components.push(members);
    }
    let cut_pos: Vec<usize> = {
        let mut pos = vec![usize::MAX; n];
        for (k, &b) in cut.iter().enumerate() {
            pos[b] = k;
        }
        pos
    };
    struct Table {
        members: Vec<usize>,
        boundary: Vec<usize>,
        best: Vec<(i64, Vec<bool>)>,
    }
    let tables: Vec<Table> = components
        .into_par_iter()
        .map(|members| {
            let mut boundary: Vec<usize> = members.iter().flat_map(|&v| c.row(v).map(|(u, _)| u)).filter(|&u| in_cut[u]).collect();
            boundary.sort_unstable();
            boundary.dedup();
            let best = (0u64..1 << boundary.len())
                .map(|b| {
                    let mut x = vec![false; n];
                    for (k, &u) in boundary.iter().enumerate() {
                        x[u] = b >> k & 1 == 1;
                    }
                    // energy of the component's own terms at all-zero members is 0
                    let (e, bx) = gray_minimum(&c, &members, x);
                    (e, members.iter().map(|&v| bx[v]).collect())
                })
                .collect();
            Table { members, boundary, best }
        })
        .collect();
    // energy restricted to cutset-only terms, enumerated in Gray order
    let cut_only = {
        let mut diag = vec![0i64; n];
        let mut coeffs = std::collections::BTreeMap::new();
        for (&(i, j), &w) in &q.coefficients {
            if in_cut[i as usize] && in_cut[j as usize] {
                if i == j {
                    diag[i as usize] = w;
                }
                coeffs.insert((cut_pos[i as usize] as u32, cut_pos[j as usize] as u32), w);
            }
        }
        let sub = QuboInstance { num_vars: cut.len(), coefficients: coeffs, offset: 0, scale: q.scale.clone() };
        Couplings::new(&sub)
    };
    let mut owners: Vec<Vec<(usize, usize)>> = vec![Vec::new(); cut.len()];
    for (t, table) in tables.iter().enumerate() {
        for (k, &u) in table.boundary.iter().enumerate() {
            owners[cut_pos[u]].push((t, k));
        }
    }
    let mut xc = vec![false; cut.len()];
    let mut field = cut_only.fields(&xc);
    let mut idx = vec![0usize; tables.len()];
    let mut cut_energy = 0i64;
    let total = |cut_energy: i64, idx: &[usize]| cut_energy + tables.iter().zip(idx).map(|(t, &i)| t.best[i].0).sum::<i64>();
    let mut best = total(0, &idx);
    let mut best_xc = xc.clone();
    let key = |x: &[bool]| lex_key(x);
    for step in 1u64..(1u64 << cut.len()) {
        let k = step.trailing_zeros() as usize;
        cut_energy += cut_only.flip(&mut xc, &mut field, k);
        for &(t, bit) in &owners[k] {
            idx[t] ^= 1 << bit;
        }
        let e = total(cut_energy, &idx);
        if e < best || (e == best && key(&xc) < key(&best_xc)) {
            best = e;
            best_xc.copy_from_slice(&xc);
        }
    }
    let mut x = vec![false; n];
    for (k, &b) in cut.iter().enumerate() {
        x[b] = best_xc[k];
    }
    for t in &tables {
        let i = t.boundary.iter().enumerate().fold(0usize, |acc, (k, &u)| acc | (x[u] as usize) << k);
        for (&v, &bit) in t.members.iter().zip(&t.best[i].1) {
            x[v] = bit;
        }
    }
    let sol = SpinSolution::new(q, x);
    debug_assert_eq!(sol.energy, best);
    Ok(sol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnealSchedule {
    /// Sweeps per restart; `None` selects `10 * num_vars`.
    pub sweeps: Option<usize>,
    /// `None` selects `ln 2 / max flip cost`.
    pub beta_start: Option<f64>,
    /// `None` selects `ln 100 / min nonzero coefficient`.
    pub beta_end: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    /// Replaces `sweeps` by the count that fits this wall-clock budget.
    pub time_budget_ms: Option<u64>,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule { sweeps: None, beta_start: None, beta_end: None, restarts: 100, seed: 0, time_budget_ms: None }
    }
}

/// Schedule with every automatic value filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedSchedule {
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub restarts: usize,
    pub seed: u64,
    pub calibrated: bool,
}

/// `(ln 2 / max flip cost, ln 100 / min nonzero |Q|)`, with the start kept at or below the end.
pub fn auto_betas(c: &Couplings) -> (f64, f64) {
    let mut max_delta = 0i64;
    let mut min_coeff = i64::MAX;
    for i in 0..c.len() {
        let mut sum = c.diag[i].abs();
        if c.diag[i] != 0 {
            min_coeff = min_coeff.min(c.diag[i].abs());
        }
        for (_, w) in c.row(i) {
            sum += w.abs();
            if w != 0 {
                min_coeff = min_coeff.min(w.abs());
            }
        }
        max_delta = max_delta.max(sum);
    }
    if max_delta == 0 {
        return (1.0, 1.0);
    }
    let start = std::f64::consts::LN_2 / max_delta as f64;
    let end = (100f64).ln() / min_coeff as f64;
    (start, end.max(start))
}

impl AnnealSchedule {
    pub fn resolve(&self, q: &QuboInstance) -> Result<ResolvedSchedule, SolverError> {
        let c = Couplings::new(q);
        let (auto_start, auto_end) = auto_betas(&c);
        let beta_start = self.beta_start.unwrap_or(auto_start);
        let beta_end = self.beta_end.unwrap_or(auto_end.max(beta_start));
        if !(beta_start > 0.0 && beta_end >= beta_start && beta_end.is_finite()) {
            return Err(SolverError::Schedule(format!("need 0 < beta_start <= beta_end, got {beta_start} and {beta_end}")));
        }
        if self.restarts == 0 {
            return Err(SolverError::Schedule("restarts must be at least 1".into()));
        }
        let (sweeps, calibrated) = match self.time_budget_ms {
            Some(ms) => (calibrate_sweeps(&c, beta_start, beta_end, ms), true),
            None => (self.sweeps.unwrap_or(10 * q.num_vars.max(1)), false),
        };
        if sweeps == 0 {
            return Err(SolverError::Schedule("sweeps must be at least 1".into()));
        }
        Ok(ResolvedSchedule { sweeps, beta_start, beta_end, restarts: self.restarts, seed: self.seed, calibrated })
    }
}

/// Number of sweeps one restart can run inside `budget_ms` on this machine.
pub fn calibrate_sweeps(c: &Couplings, beta_start: f64, beta_end: f64, budget_ms: u64) -> usize {
    let probe = 200usize;
    let t = Instant::now();
    anneal_once(c, probe, beta_start, beta_end, 0);
    let per_sweep = t.elapsed().as_secs_f64() / probe as f64;
    ((budget_ms as f64 / 1000.0) / per_sweep.max(1e-12)).floor().max(1.0) as usize
}

fn beta_at(k: usize, sweeps: usize, b0: f64, b1: f64) -> f64 {
    if sweeps <= 1 {
        return b1;
    }
    b0 * (b1 / b0).powf(k as f64 / (sweeps - 1) as f64)
}

/// Result of one restart: best energy, its assignment and the best-so-far
/// energy after every sweep.
pub struct AnnealRun {
    pub best_energy: i64,
    pub best: Vec<bool>,
    pub best_per_sweep: Vec<i64>,
}

/// One annealing restart with RNG stream `seed`.
pub fn anneal_once(c: &Couplings, sweeps: usize, beta_start: f64, beta_end: f64, seed: u64) -> AnnealRun {
    let n = c.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let mut field = c.fields(&x);
    let mut energy = c.energy(&x);
    let mut best_energy = energy;
    let mut best = x.clone();
    let mut best_per_sweep = Vec::with_capacity(sweeps);
    for k in 0..sweeps {
        let beta = beta_at(k, sweeps, beta_start, beta_end);
        for i in 0..n {
            let d = c.delta(&x, &field, i);
            let accept = d <= 0 || {
                let arg = beta * d as f64;
                arg < 40.0 && rng.random::<f64>() < (-arg).exp()
            };
            if accept {
                energy += c.flip(&mut x, &mut field, i);
                if energy < best_energy {
                    best_energy = energy;
                    best.copy_from_slice(&x);
                }
            }
        }
        best_per_sweep.push(best_energy);
    }
    AnnealRun { best_energy, best, best_per_sweep }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartResult {
    pub restart: usize,
    pub best_energy: i64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub solver: String,
    pub schedule: Option<ResolvedSchedule>,
    pub restarts: Vec<RestartResult>,
    /// Best assignment of every restart, in restart order.
    pub assignments: Vec<Vec<bool>>,
    pub best: SpinSolution,
    /// Energy counted as success (rescaled objective 0).
    pub target_energy: i64,
    pub hits: usize,
}

impl RunReport {
    /// Per-restart cost: sweeps, or seconds when a wall-clock budget was calibrated.
    pub fn t_com(&self) -> (f64, &'static str) {
        match &self.schedule {
            Some(s) if s.calibrated => {
                let mean = self.restarts.iter().map(|r| r.wall_ms).sum::<f64>() / self.restarts.len().max(1) as f64;
                (mean / 1000.0, "s")
            }
            Some(s) => (s.sweeps as f64, "sweeps"),
            None => (1.0, "runs"),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.schedule {
            Some(s) => writeln!(
                out,
                "# solver {} sweeps {} beta_start {:e} beta_end {:e} restarts {} seed {}{}",
                self.solver,
                s.sweeps,
                s.beta_start,
                s.beta_end,
                s.restarts,
                s.seed,
                if s.calibrated { " calibrated" } else { "" }
            )
            .unwrap(),
            None => writeln!(out, "# solver {}", self.solver).unwrap(),
        }
        for r in &self.restarts {
            writeln!(out, "restart {} energy {}", r.restart, r.best_energy).unwrap();
        }
        let p = success_probability(self);
        let (t, unit) = self.t_com();
        writeln!(out, "hits {} target {}", self.hits, self.target_energy).unwrap();
        writeln!(out, "p_s {p}").unwrap();
        writeln!(out, "t_com {t} {unit}").unwrap();
        match tts(p, t) {
            Ok(v) => writeln!(out, "tts {v} {unit}").unwrap(),
            Err(_) => writeln!(out, "tts inf {unit}").unwrap(),
        }
        writeln!(out, "best_energy {}", self.best.energy).unwrap();
        writeln!(out, "best_rescaled {}", fmt_rational(&self.best.rescaled)).unwrap();
        writeln!(out, "best_bits {}", self.best.bitstring()).unwrap();
        out
    }

    /// Reads back `restart`, `p_s` and `best_bits` lines.
    pub fn parse_summary(text: &str) -> Result<ReportSummary, SolverError> {
        let mut s = ReportSummary::default();
        for (idx, raw) in text.lines().enumerate() {
            let err = |msg: String| SolverError::Parse { line: idx + 1, msg };
            let f: Vec<&str> = raw.split_whitespace().collect();
            match f.as_slice() {
                ["restart", k, "energy", e] => {
                    let k: usize = k.parse().map_err(|_| err(format!("bad restart `{k}`")))?;
                    let e: i64 = e.parse().map_err(|_| err(format!("bad energy `{e}`")))?;
                    s.energies.push((k, e));
                }
                ["p_s", p] => s.p_s = p.parse().map_err(|_| err(format!("bad p_s `{p}`")))?,
                ["best_bits", b] => s.best_bits = b.chars().map(|c| c == '1').collect(),
                _ => {}
            }
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportSummary {
    pub energies: Vec<(usize, i64)>,
    pub p_s: f64,
    pub best_bits: Vec<bool>,
}

/// Seeded multi-restart annealing; restart `k` uses stream `seed + k`.
pub fn solve_sa(q: &QuboInstance, sched: &AnnealSchedule) -> Result<RunReport, SolverError> {
    let resolved = sched.resolve(q)?;
    let c = Couplings::new(q);
    let runs: Vec<(AnnealRun, f64)> = (0..resolved.restarts)
        .into_par_iter()
        .map(|k| {
            let t = Instant::now();
            let run = anneal_once(&c, resolved.sweeps, resolved.beta_start, resolved.beta_end, resolved.seed.wrapping_add(k as u64));
            (run, t.elapsed().as_secs_f64() * 1000.0)
        })
        .collect();
    let target = q.zero_energy();
    let best_idx = (0..runs.len()).min_by_key(|&k| (runs[k].0.best_energy, k)).expect("at least one restart");
    let restarts = runs.iter().enumerate().map(|(k, (r, ms))| RestartResult { restart: k, best_energy: r.best_energy, wall_ms: *ms }).collect();
    let hits = runs.iter().filter(|(r, _)| r.best_energy == target).count();
    Ok(RunReport {
        solver: "sa".into(),
        best: SpinSolution::new(q, runs[best_idx].0.best.clone()),
        assignments: runs.into_iter().map(|(r, _)| r.best).collect(),
        schedule: Some(resolved),
        restarts,
        target_energy: target,
        hits,
    })
}

/// Wraps an exact solution as a single-restart report.
pub fn exact_report(q: &QuboInstance, sol: SpinSolution) -> RunReport {
    let target = q.zero_energy();
    RunReport {
        solver: "exact".into(),
        schedule: None,
        restarts: vec![RestartResult { restart: 0, best_energy: sol.energy, wall_ms: 0.0 }],
        assignments: vec![sol.assignment.clone()],
        hits: (sol.energy == target) as usize,
        target_energy: target,
        best: sol,
    }
}

/// Fraction of restarts reaching the target energy.
pub fn success_probability(report: &RunReport) -> f64 {
    report.hits as f64 / report.restarts.len().max(1) as f64
}

/// `t_com * ln(0.01) / ln(1 - p_s)`; `p_s >= 0.99` returns `t_com`.
pub fn tts(p_s: f64, t_com: f64) -> Result<f64, SolverError> {
    if !(p_s > 0.0 && p_s <= 1.0) {
        return Err(SolverError::Domain(p_s));
    }
    if p_s >= 0.99 {
        return Ok(t_com);
    }
    Ok(t_com * (0.01f64).ln() / (1.0 - p_s).ln())
}

/// Like [`tts`] without the clamp; `p_s = 1` is a domain error.
pub fn tts_unclamped(p_s: f64, t_com: f64) -> Result<f64, SolverError> {
    if !(p_s > 0.0 && p_s < 1.0) {
        return Err(SolverError::Domain(p_s));
    }
    Ok(t_com * (0.01f64).ln() / (1.0 - p_s).ln())
}
