//! Asymptotic weight enumerators of protograph ensembles.
//!
//! For a protograph with `n_v` variable nodes lifted by `N`, the ensemble
//! average number of codewords whose weight on node `v` is `N x_v` behaves
//! like `exp(N F(x))` with
//!
//! ```text
//! F(x) = sum_c a_c(x restricted to the edges of c) - sum_v (d_v - 1) H(x_v)
//! ```
//!
//! where `a_c` is the check enumerator of [`check`] and `H` the natural-log
//! binary entropy. The spectral shape is `r(delta) = max F(x) / n` over all
//! `x` with transmitted weight `delta * n`, where `n` is the normalization
//! length per lift copy.
//!
//! Before optimizing, nodes behind a degree-1 check are pinned to zero and
//! nodes joined by a degree-2 check are merged, since both relations hold for
//! every codeword. The remaining maximization runs a constrained
//! Levenberg-Marquardt Newton iteration from several starting points. The
//! gradient of `a_c` is `-ln t*` and its Hessian is minus the inverse
//! covariance of the tilted edge bits.

pub mod check;
mod dense;

use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::protograph::Protograph;
use crate::rng::{derive_key, stream_rng};
use crate::unwrap::Unwrapping;

use check::{covariance, logit, sigmoid, Workspace};
pub use check::{binary_entropy, check_enumerator, parity_violation, CheckEnumerator};

/// Which block length the weight fraction `delta` is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `n = N n_v`, punctured nodes included.
    #[default]
    AllNodes,
    /// `n = N m`, transmitted nodes only.
    Transmitted,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" | "all_nodes" => Ok(Self::AllNodes),
            "transmitted" => Ok(Self::Transmitted),
            other => Err(Error::InvalidArgument(format!("unknown normalization {other:?}"))),
        }
    }
}

/// Settings of the multistart optimizer.
#[derive(Debug, Clone, Serialize)]
pub struct ShapeOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Lower clamp of every `x_v` (upper clamp is `1 - eps`).
    pub eps: f64,
    pub normalization: Normalization,
}

impl Default for ShapeOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0,
            max_iterations: 500,
            eps: 1e-12,
            normalization: Normalization::AllNodes,
        }
    }
}

/// The optimization problem attached to a protograph.
#[derive(Debug, Clone)]
pub struct ShapeProblem {
    n_v: usize,
    /// Free coordinate of each variable node, `None` when pinned to zero.
    class_of: Vec<Option<usize>>,
    n_free: usize,
    /// Free coordinate of every surviving edge, grouped by check.
    checks: Vec<Vec<usize>>,
    /// Sum of `d_v - 1` over the nodes of each coordinate.
    penalty: Vec<f64>,
    /// Number of transmitted nodes in each coordinate.
    weight: Vec<f64>,
    norm: f64,
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

impl ShapeProblem {
    pub fn new(p: &Protograph, normalization: Normalization) -> Self {
        let (n_c, n_v) = (p.n_c(), p.n_v());
        let edges: Vec<Vec<usize>> = (0..n_c)
            .map(|c| {
                (0..n_v)
                    .flat_map(|v| std::iter::repeat(v).take(p.entry(c, v) as usize))
                    .collect()
            })
            .collect();
        let degree: Vec<usize> = (0..n_v).map(|v| (0..n_c).map(|c| p.entry(c, v) as usize).sum()).collect();

        let mut pinned = vec![false; n_v];
        loop {
            let mut changed = false;
            for e in &edges {
                let live: Vec<usize> = e.iter().copied().filter(|&v| !pinned[v]).collect();
                if live.len() == 1 {
                    pinned[live[0]] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut parent: Vec<usize> = (0..n_v).collect();
        for e in &edges {
            let live: Vec<usize> = e.iter().copied().filter(|&v| !pinned[v]).collect();
            if live.len() == 2 {
                let (a, b) = (find(&mut parent, live[0]), find(&mut parent, live[1]));
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut class_of = vec![None; n_v];
        let mut root_class = vec![usize::MAX; n_v];
        let mut n_free = 0;
        for v in 0..n_v {
            if pinned[v] {
                continue;
            }
            let r = find(&mut parent, v);
            if root_class[r] == usize::MAX {
                root_class[r] = n_free;
                n_free += 1;
            }
            class_of[v] = Some(root_class[r]);
        }
        let mut penalty = vec![0.0; n_free];
        let mut weight = vec![0.0; n_free];
        for v in 0..n_v {
            if let Some(k) = class_of[v] {
                penalty[k] += degree[v] as f64 - 1.0;
                if !p.is_punctured(v) {
                    weight[k] += 1.0;
                }
            }
        }
        let checks = edges
            .iter()
            .map(|e| e.iter().filter_map(|&v| class_of[v]).collect::<Vec<_>>())
            .filter(|e| !e.is_empty())
            .collect();
        let norm = match normalization {
            Normalization::AllNodes => n_v as f64,
            Normalization::Transmitted => (n_v - p.punctured().len()) as f64,
        };
        Self {
            n_v,
            class_of,
            n_free,
            checks,
            penalty,
            weight,
            norm,
        }
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    /// Number of free coordinates after pinning and merging.
    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Normalization length per lift copy.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Required transmitted weight per lift copy for fraction `delta`.
    pub fn target_weight(&self, delta: f64) -> f64 {
        delta * self.norm
    }

    /// Transmitted weight that the free coordinates can carry.
    fn capacity(&self) -> f64 {
        self.weight.iter().sum()
    }

    /// Per-node weight fractions from free coordinates.
    pub fn expand(&self, y: &[f64]) -> Vec<f64> {
        self.class_of.iter().map(|c| c.map_or(0.0, |k| y[k])).collect()
    }

    /// Free coordinates from per-node fractions (first node of each class wins).
    pub fn reduce(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![f64::NAN; self.n_free];
        for (v, c) in self.class_of.iter().enumerate() {
            if let Some(k) = *c {
                if y[k].is_nan() {
                    y[k] = x[v];
                }
            }
        }
        y
    }

    pub fn evaluator(&self) -> Evaluator<'_> {
        Evaluator {
            problem: self,
            log_t: self.checks.iter().map(|e| vec![f64::NAN; e.len()]).collect(),
            ws: Workspace::default(),
            edge_x: Vec::new(),
            ix: Vec::new(),
            is: Vec::new(),
            idx: Vec::new(),
        }
    }

    /// Whether every check is strictly inside its parity polytope at `y`.
    fn strictly_feasible(&self, y: &[f64]) -> bool {
        let mut buf = Vec::new();
        self.checks.iter().all(|edges| {
            buf.clear();
            buf.extend(edges.iter().map(|&k| y[k]));
            buf.len() < 3 || parity_violation(&buf, 0) < -1e-9
        })
    }
}

/// Objective, gradient and Hessian evaluation with warm-started check solvers.
pub struct Evaluator<'a> {
    problem: &'a ShapeProblem,
    log_t: Vec<Vec<f64>>,
    ws: Workspace,
    edge_x: Vec<f64>,
    ix: Vec<f64>,
    is: Vec<f64>,
    idx: Vec<usize>,
}

/// Objective value at a point.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    /// `F` (not yet divided by the normalization length).
    pub value: f64,
    /// Whether every check solver met its tolerance.
    pub converged: bool,
    /// Whether the requested Hessian could be formed.
    pub hessian: bool,
}

impl Evaluator<'_> {
    /// Evaluates `F` at free coordinates `y`, optionally with its gradient
    /// and row-major Hessian.
    pub fn evaluate(&mut self, y: &[f64], grad: Option<&mut [f64]>, hess: Option<&mut [f64]>) -> Evaluation {
        let pb = self.problem;
        let n = pb.n_free;
        let mut value = 0.0;
        let mut converged = true;
        let mut hessian = true;
        let mut hess = hess;
        if let Some(h) = hess.as_deref_mut() {
            h.iter_mut().for_each(|v| *v = 0.0);
        }
        for (c, edges) in pb.checks.iter().enumerate() {
            self.edge_x.clear();
            self.edge_x.extend(edges.iter().map(|&k| y[k]));
            let out = check::evaluate_check(
                &self.edge_x,
                &mut self.log_t[c],
                &mut self.ws,
                &mut self.ix,
                &mut self.is,
                &mut self.idx,
            );
            if out.value == f64::NEG_INFINITY {
                self.log_t[c].iter_mut().for_each(|s| *s = f64::NAN);
                return Evaluation {
                    value: f64::NEG_INFINITY,
                    converged: true,
                    hessian: false,
                };
            }
            converged &= out.converged;
            value += out.value;
            if let Some(h) = hess.as_deref_mut() {
                let k = edges.len();
                if k == 2 {
                    // both edges sit on one merged coordinate: a = H(y)
                    let yk = y[edges[0]];
                    h[edges[0] * n + edges[0]] -= 1.0 / (yk * (1.0 - yk));
                } else {
                    let cov = covariance(&mut self.ws, &self.edge_x, 0, &self.log_t[c]);
                    match dense::spd_inverse(cov, k) {
                        Some(inv) => {
                            for i in 0..k {
                                for j in 0..k {
                                    h[edges[i] * n + edges[j]] -= inv[i * k + j];
                                }
                            }
                        }
                        None => hessian = false,
                    }
                }
            }
        }
        for k in 0..n {
            value -= pb.penalty[k] * binary_entropy(y[k]);
        }
        if let Some(g) = grad {
            g.iter_mut().for_each(|v| *v = 0.0);
            for (c, edges) in pb.checks.iter().enumerate() {
                for (e, &k) in edges.iter().enumerate() {
                    g[k] -= self.log_t[c][e];
                }
            }
            for k in 0..n {
                g[k] += pb.penalty[k] * logit(y[k]);
            }
        }
        if let Some(h) = hess {
            for k in 0..n {
                h[k * n + k] += pb.penalty[k] / (y[k] * (1.0 - y[k]));
            }
        }
        Evaluation {
            value,
            converged,
            hessian,
        }
    }
}

/// Result of one optimizer start.
#[derive(Debug, Clone)]
struct StartResult {
    value: f64,
    y: Vec<f64>,
    converged: bool,
}

/// Value of `r` at one `delta` together with optimizer diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct ShapePoint {
    pub delta: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub r: f64,
    pub starts: usize,
    pub feasible_starts: usize,
    pub converged_starts: usize,
    /// Starts whose final objective lies within `1e-7` of the best.
    pub agreeing_starts: usize,
    /// Best minus median final objective over feasible starts.
    #[serde(serialize_with = "finite_or_null")]
    pub spread: f64,
    /// Maximizing weight fractions per variable node.
    #[serde(skip)]
    pub x: Vec<f64>,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Maps logits `z` to free coordinates meeting the weight constraint.
///
/// Coordinates carrying transmitted nodes become `sigmoid(z_k - u)` with the
/// shift `u` found by bisection; the others are `sigmoid(z_k)`.
fn project(pb: &ShapeProblem, z: &[f64], target: f64, eps: f64, out: &mut [f64]) {
    let clamp = |y: f64| y.clamp(eps, 1.0 - eps);
    let w = &pb.weight;
    let sum_at = |u: f64| (0..pb.n_free).map(|k| w[k] * clamp(sigmoid(z[k] - u))).sum::<f64>();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..pb.n_free {
        if w[k] > 0.0 {
            lo = lo.min(z[k] - logit(1.0 - eps) - 1.0);
            hi = hi.max(z[k] - logit(eps) + 1.0);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sum_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    for k in 0..pb.n_free {
        out[k] = if w[k] > 0.0 { clamp(sigmoid(z[k] - u)) } else { clamp(sigmoid(z[k])) };
    }
}

fn uniform_point(pb: &ShapeProblem, target: f64) -> Vec<f64> {
    vec![target / pb.capacity(); pb.n_free]
}

/// Blends `y` toward the uniform point until every check is strictly feasible.
fn repair(pb: &ShapeProblem, y: &mut [f64], target: f64) {
    if pb.strictly_feasible(y) {
        return;
    }
    let uniform = uniform_point(pb, target);
    let orig = y.to_vec();
    for step in 1..=20 {
        let a = step as f64 / 20.0;
        for k in 0..pb.n_free {
            y[k] = (1.0 - a) * orig[k] + a * uniform[k];
        }
        if pb.strictly_feasible(y) {
            return;
        }
    }
}

/// Initial point number `index` for a given `delta`.
///
/// Index 0 is uniform, the next `lattice` indices concentrate weight on a
/// growing prefix of the nodes, the rest are seeded random points.
fn initial_point(pb: &ShapeProblem, index: usize, delta: f64, opts: &ShapeOptions, lattice: usize) -> Vec<f64> {
    let target = pb.target_weight(delta);
    let n = pb.n_v;
    let mut log_w = vec![0.0f64; n];
    if index == 0 {
        return uniform_point(pb, target);
    } else if index <= lattice {
        let len = ((n as f64 * index as f64 / (lattice + 1) as f64).round() as usize).clamp(2.min(n), n);
        for (v, w) in log_w.iter_mut().enumerate() {
            *w = if v < len { 0.0 } else { (0.05f64).ln() };
        }
    } else {
        let mut rng = stream_rng(derive_key(opts.seed, &[index as u64, delta.to_bits()]), 0);
        let concentration = 0.5 + 2.0 * rng.gen::<f64>();
        let (start, len) = if index % 2 == 0 {
            (rng.gen_range(0..n), rng.gen_range(2.min(n)..=n))
        } else {
            (0, n)
        };
        for (v, w) in log_w.iter_mut().enumerate() {
            let e: f64 = -rng.gen::<f64>().max(1e-300).ln();
            let inside = (v + n - start) % n < len;
            *w = concentration * e.ln() + if inside { 0.0 } else { (0.05f64).ln() };
        }
    }
    let mut z = vec![0.0; pb.n_free];
    let mut count = vec![0.0; pb.n_free];
    for (v, c) in pb.class_of.iter().enumerate() {
        if let Some(k) = *c {
            z[k] += log_w[v];
            count[k] += 1.0;
        }
    }
    let level = logit(target / pb.capacity());
    for k in 0..pb.n_free {
        z[k] /= count[k];
        if pb.weight[k] == 0.0 {
            z[k] += level;
        }
    }
    let mut y = vec![0.0; pb.n_free];
    project(pb, &z, target, opts.eps, &mut y);
    repair(pb, &mut y, target);
    y
}

/// Levenberg-Marquardt Newton ascent on the constraint plane from `y0`.
fn ascend(pb: &ShapeProblem, y0: Vec<f64>, opts: &ShapeOptions) -> StartResult {
    let n = pb.n_free;
    let w = &pb.weight;
    let mut ev = pb.evaluator();
    let mut y = y0;
    let (mut g, mut h) = (vec![0.0; n], vec![0.0; n * n]);
    let (mut g_t, mut h_t) = (vec![0.0; n], vec![0.0; n * n]);
    let mut a = vec![0.0; n * n];
    let (mut p, mut q, mut d, mut y_t) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut cur = ev.evaluate(&y, Some(&mut g), Some(&mut h));
    if !cur.value.is_finite() {
        return StartResult {
            value: f64::NEG_INFINITY,
            y,
            converged: false,
        };
    }
    let mut mu = 1e-3;
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        // metric diag(1 / (y (1 - y))) for the damping term
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = -h[i * n + j];
            }
            a[i * n + i] += mu / (y[i] * (1.0 - y[i]));
        }
        if !cur.hessian || !dense::cholesky(&mut a, n) {
            mu = (mu * 10.0).max(1e-6);
            if mu > 1e12 {
                break;
            }
            if !cur.hessian {
                // no curvature available: fall back to the damping metric alone
                for i in 0..n {
                    for j in 0..n {
                        a[i * n + j] = if i == j { mu / (y[i] * (1.0 - y[i])) } else { 0.0 };
                    }
                }
                dense::cholesky(&mut a, n);
            } else {
                continue;
            }
        }
        p.copy_from_slice(&g);
        dense::solve(&a, n, &mut p);
        q.copy_from_slice(w);
        dense::solve(&a, n, &mut q);
        let wq: f64 = (0..n).map(|i| w[i] * q[i]).sum();
        let tau = if wq > 0.0 { (0..n).map(|i| w[i] * p[i]).sum::<f64>() / wq } else { 0.0 };
        for i in 0..n {
            d[i] = p[i] - tau * q[i];
        }
        let gd: f64 = (0..n).map(|i| g[i] * d[i]).sum();
        let dhd: f64 = (0..n)
            .map(|i| d[i] * (0..n).map(|j| h[i * n + j] * d[j]).sum::<f64>())
            .sum();
        if gd.abs() < 1e-13 * (1.0 + cur.value.abs()) && cur.hessian && mu < 1.0 {
            converged = true;
            break;
        }
        // fraction to the boundary of the unit box
        let mut alpha: f64 = 1.0;
        for i in 0..n {
            if d[i] < 0.0 {
                alpha = alpha.min(0.9 * y[i] / -d[i]);
            } else if d[i] > 0.0 {
                alpha = alpha.min(0.9 * (1.0 - y[i]) / d[i]);
            }
        }
        for i in 0..n {
            y_t[i] = (y[i] + alpha * d[i]).clamp(opts.eps, 1.0 - opts.eps);
        }
        let trial = ev.evaluate(&y_t, Some(&mut g_t), Some(&mut h_t));
        let predicted = alpha * gd + 0.5 * alpha * alpha * dhd;
        let actual = trial.value - cur.value;
        if trial.value.is_finite() && actual >= 0.0 {
            let rho = if predicted > 0.0 { actual / predicted } else { 1.0 };
            if rho > 0.75 && alpha == 1.0 {
                mu = (mu * 0.2).max(1e-12);
            } else if rho < 0.25 {
                mu *= 2.0;
            }
            std::mem::swap(&mut y, &mut y_t);
            std::mem::swap(&mut g, &mut g_t);
            std::mem::swap(&mut h, &mut h_t);
            cur = trial;
        } else {
            if gd < 1e-10 * (1.0 + cur.value.abs()) {
                // remaining gain is below the evaluation noise
                converged = true;
                break;
            }
            mu = (mu * 8.0).max(1e-6);
            if mu > 1e12 {
                break;
            }
        }
    }
    StartResult {
        value: cur.value,
        y,
        converged: converged && cur.converged,
    }
}

/// `r(delta)` with full diagnostics; `warm` adds extra per-node starting points.
pub fn shape_point(pb: &ShapeProblem, delta: f64, opts: &ShapeOptions, warm: &[Vec<f64>]) -> Result<ShapePoint> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1)")));
    }
    let target = pb.target_weight(delta);
    if pb.capacity() == 0.0 || target >= pb.capacity() * (1.0 - opts.eps) {
        // no admissible weight assignment
        return Ok(ShapePoint {
            delta,
            r: f64::NEG_INFINITY,
            starts: 0,
            feasible_starts: 0,
            converged_starts: 0,
            agreeing_starts: 0,
            spread: f64::NAN,
            x: vec![0.0; pb.n_v],
        });
    }
    let starts = opts.starts.max(1);
    let lattice = (starts / 4).clamp(1, 8).min(starts - 1);
    let mut inits: Vec<Vec<f64>> = (0..starts)
        .map(|i| initial_point(pb, i, delta, opts, lattice))
        .collect();
    for x in warm {
        if x.len() != pb.n_v {
            continue;
        }
        let z: Vec<f64> = pb
            .reduce(x)
            .iter()
            .map(|&v| logit(v.clamp(opts.eps, 1.0 - opts.eps)))
            .collect();
        let mut y = vec![0.0; pb.n_free];
        project(pb, &z, target, opts.eps, &mut y);
        repair(pb, &mut y, target);
        inits.push(y);
    }
    let results: Vec<StartResult> = inits.into_par_iter().map(|y0| ascend(pb, y0, opts)).collect();
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.value > results[best].value {
            best = i;
        }
    }
    let best_value = results[best].value;
    let mut finite: Vec<f64> = results.iter().map(|r| r.value).filter(|v| v.is_finite()).collect();
    finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let spread = if finite.is_empty() {
        f64::NAN
    } else {
        best_value - finite[finite.len() / 2]
    };
    Ok(ShapePoint {
        delta,
        r: best_value / pb.norm,
        starts: results.len(),
        feasible_starts: finite.len(),
        converged_starts: results.iter().filter(|r| r.converged).count(),
        agreeing_starts: results
            .iter()
            .filter(|r| r.value.is_finite() && best_value - r.value <= 1e-7)
            .count(),
        spread,
        x: pb.expand(&results[best].y),
    })
}

/// `r(delta)` in nats per normalized symbol.
pub fn spectral_shape(p: &Protograph, delta: f64, opts: &ShapeOptions) -> Result<f64> {
    let pb = ShapeProblem::new(p, opts.normalization);
    Ok(shape_point(&pb, delta, opts, &[])?.r)
}

/// Zero-crossing search settings.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthOptions {
    pub delta_lo: f64,
    pub delta_step: f64,
    pub delta_max: f64,
    pub tol: f64,
    pub shape: ShapeOptions,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self {
            delta_lo: 1e-3,
            delta_step: 1e-3,
            delta_max: 0.2,
            tol: 1e-4,
            shape: ShapeOptions::default(),
        }
    }
}

/// Outcome of a zero-crossing search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GrowthStatus {
    /// First sign change of `r` bracketed in `[lo, hi]` with `hi - lo <= tol`.
    Linear { delta_min: f64, lo: f64, hi: f64 },
    /// `r` is already nonnegative at the smallest scanned `delta`.
    NoLinearGrowth,
    /// `r` stays negative over the whole scanned range.
    NoZeroCrossingInRange { delta_max: f64 },
}

impl GrowthStatus {
    pub fn delta_min(&self) -> Option<f64> {
        match self {
            GrowthStatus::Linear { delta_min, .. } => Some(*delta_min),
            _ => None,
        }
    }
}

/// Sampled spectral shape with the growth-rate search result.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralCurve {
    pub protograph: String,
    pub normalization: Normalization,
    pub points: Vec<ShapePoint>,
    pub status: GrowthStatus,
    /// Scanned `delta` below the crossing where `r < 0`.
    pub negativity_certificate: Vec<f64>,
}

impl SpectralCurve {
    pub fn delta_min(&self) -> Option<f64> {
        self.status.delta_min()
    }

    /// `(delta, r)` rows sorted by `delta`.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        let mut rows: Vec<(f64, f64)> = self.points.iter().map(|p| (p.delta, p.r)).collect();
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        rows
    }
}

fn require_reliable(p: &ShapePoint) -> Result<()> {
    if p.converged_starts == 0 {
        return Err(Error::OptimizerUnreliable {
            delta: p.delta,
            spread: p.spread,
        });
    }
    Ok(())
}

/// Minimum distance growth rate: first zero crossing of `r`.
pub fn growth_rate(p: &Protograph, opts: &GrowthOptions) -> Result<SpectralCurve> {
    if !(opts.tol > 0.0 && opts.delta_step > 0.0 && opts.delta_lo > 0.0 && opts.delta_max >= opts.delta_lo) {
        return Err(Error::InvalidArgument("invalid delta grid or tolerance".into()));
    }
    let pb = ShapeProblem::new(p, opts.shape.normalization);
    let mut points: Vec<ShapePoint> = Vec::new();
    let mut certificate = Vec::new();
    let mut prev: Option<ShapePoint> = None;
    let steps = ((opts.delta_max - opts.delta_lo) / opts.delta_step + 1e-9).floor() as usize;
    let mut bracket = None;
    for k in 0..=steps {
        let delta = opts.delta_lo + k as f64 * opts.delta_step;
        let warm: Vec<Vec<f64>> = prev.iter().map(|p| p.x.clone()).collect();
        let pt = shape_point(&pb, delta, &opts.shape, &warm)?;
        points.push(pt.clone());
        if pt.r >= 0.0 {
            if let Some(lo) = prev.take() {
                require_reliable(&lo)?;
                require_reliable(&pt)?;
                bracket = Some((lo, pt));
            }
            break;
        }
        certificate.push(delta);
        prev = Some(pt);
    }
    let status = match bracket {
        None if points.first().is_some_and(|p| p.r >= 0.0) => GrowthStatus::NoLinearGrowth,
        None => GrowthStatus::NoZeroCrossingInRange {
            delta_max: points.last().map_or(opts.delta_lo, |p| p.delta),
        },
        Some((mut lo, mut hi)) => {
            while hi.delta - lo.delta > opts.tol {
                let mid = 0.5 * (lo.delta + hi.delta);
                let warm = [lo.x.clone(), hi.x.clone()];
                let pt = shape_point(&pb, mid, &opts.shape, &warm)?;
                points.push(pt.clone());
                if pt.r >= 0.0 {
                    hi = pt;
                } else {
                    certificate.push(mid);
                    lo = pt;
                }
            }
            GrowthStatus::Linear {
                delta_min: 0.5 * (lo.delta + hi.delta),
                lo: lo.delta,
                hi: hi.delta,
            }
        }
    };
    certificate.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(SpectralCurve {
        protograph: p.name().to_string(),
        normalization: opts.shape.normalization,
        points,
        status,
        negativity_certificate: certificate,
    })
}

/// `r(delta)` on an explicit grid, without a zero-crossing search.
pub fn sample_curve(p: &Protograph, deltas: &[f64], opts: &ShapeOptions) -> Result<Vec<ShapePoint>> {
    let pb = ShapeProblem::new(p, opts.normalization);
    let mut out: Vec<ShapePoint> = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let warm: Vec<Vec<f64>> = out.last().map(|p| p.x.clone()).into_iter().collect();
        out.push(shape_point(&pb, d, opts, &warm)?);
    }
    Ok(out)
}

/// Plateau of a bound curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    pub value: f64,
    pub onset: usize,
}

/// Free distance lower bounds `lambda * delta_min(lambda)`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCurve {
    pub protograph: String,
    pub expansion: Option<usize>,
    pub seed: u64,
    pub lambdas: Vec<usize>,
    /// Growth rate of each tail-biting ensemble, normalized by its own length.
    pub delta_min_tb: Vec<Option<f64>>,
    pub bound: Vec<f64>,
    pub plateau: Option<Plateau>,
    pub curves: Vec<SpectralCurve>,
}

impl BoundCurve {
    pub fn rows(&self) -> Vec<(usize, f64)> {
        self.lambdas.iter().copied().zip(self.bound.iter().copied()).collect()
    }
}

/// Default tolerance for plateau detection.
pub const PLATEAU_TOL: f64 = 1e-3;

/// First `lambda` after which two successive bound differences stay below `tol`.
pub fn detect_plateau(lambdas: &[usize], bound: &[f64], tol: f64) -> Option<Plateau> {
    let n = bound.len();
    (0..n.saturating_sub(2))
        .find(|&i| {
            (i..n - 1).all(|j| (bound[j + 1] - bound[j]).abs() < tol)
        })
        .map(|i| Plateau {
            value: bound[i..].iter().sum::<f64>() / (n - i) as f64,
            onset: lambdas[i],
        })
}

/// Lower bound curve on the free distance growth rate.
///
/// For `lambda = 1..=lambda_max` the tail-biting base matrix of the cut of
/// `p` (or of its `M`-fold expansion) is analysed with [`growth_rate`].
pub fn conv_bound(
    p: &Protograph,
    lambda_max: usize,
    expansion: Option<usize>,
    seed: u64,
    opts: &GrowthOptions,
) -> Result<BoundCurve> {
    if lambda_max == 0 {
        return Err(Error::InvalidArgument("lambda_max must be >= 1".into()));
    }
    let base = match expansion {
        Some(m) if m >= 2 => p.expand(m, seed)?,
        _ => p.clone(),
    };
    let u = Unwrapping::cut(&base)?;
    let mut out = BoundCurve {
        protograph: p.name().to_string(),
        expansion,
        seed,
        lambdas: Vec::new(),
        delta_min_tb: Vec::new(),
        bound: Vec::new(),
        plateau: None,
        curves: Vec::new(),
    };
    for lambda in 1..=lambda_max {
        let tb = u.tailbite(lambda)?;
        let curve = growth_rate(&tb, opts)?;
        let dm = curve.delta_min();
        out.lambdas.push(lambda);
        out.delta_min_tb.push(dm);
        out.bound.push(dm.map_or(0.0, |d| lambda as f64 * d));
        out.curves.push(curve);
    }
    out.plateau = detect_plateau(&out.lambdas, &out.bound, PLATEAU_TOL);
    Ok(out)
}
