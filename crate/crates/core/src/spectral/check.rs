//! Asymptotic enumerator of a single parity check.
//!
//! For edge weight fractions `x`, the number of `N x k` binary matrices with
//! even rows and column sums `N x_e` grows like `exp(N a(x))` with
//!
//! ```text
//! a(x) = inf_{t > 0} ln g(t) - sum_e x_e ln t_e,
//! g(t) = sum over even subsets S of prod_{e in S} t_e.
//! ```
//!
//! The infimum is computed by damped Newton in `s = ln t`. `g` is evaluated
//! as `prod(1 + t_e) * P(even)` where `P(even)` is the parity probability of
//! independent Bernoulli(`t_e / (1 + t_e)`) bits, accumulated by a forward
//! recursion that only adds nonnegative terms.

use crate::error::{Error, Result};

/// Iteration cap of the Newton solver.
pub const NEWTON_MAX_ITERS: usize = 200;
/// Target for the scaled marginal residual `|mu_e - x_e| / (x_e (1 - x_e))`.
pub const NEWTON_TOL: f64 = 1e-10;
const EQUAL_TOL: f64 = 1e-12;

/// Solution of the check enumerator problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckEnumerator {
    /// `a(x)` in nats; `-inf` when `x` is outside the parity polytope.
    pub value: f64,
    /// Optimal `ln t_e` per edge. Edges eliminated at `x_e = 0` get `-inf`,
    /// edges at `x_e = 1` get `+inf`.
    pub log_t: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl CheckEnumerator {
    /// Optimal dual point `t*`.
    pub fn t_star(&self) -> Vec<f64> {
        self.log_t.iter().map(|s| s.exp()).collect()
    }

    /// Envelope gradient `da/dx_e = -ln t*_e`.
    pub fn gradient(&self) -> Vec<f64> {
        self.log_t.iter().map(|s| -s).collect()
    }
}

#[inline]
pub(crate) fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub(crate) fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

/// Natural-log binary entropy, `0` at the endpoints.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.ln() - (1.0 - x) * (-x).ln_1p()
    }
}

/// Largest violation of the parity-polytope inequalities by `x`.
///
/// The polytope is the convex hull of `{z in {0,1}^k : sum z = parity mod 2}`.
/// Returns `max_S (sum_{S} x - sum_{not S} x - |S| + 1)` over subsets `S`
/// whose size has the wrong parity; `x` is feasible iff the result is `<= 0`
/// and strictly interior iff it is `< 0`.
pub fn parity_violation(x: &[f64], parity: u8) -> f64 {
    let k = x.len();
    if k == 0 {
        return if parity & 1 == 0 { -1.0 } else { 1.0 };
    }
    // The most violated set takes every coordinate above 1/2.
    let mut value = 1.0;
    let mut size = 0usize;
    let mut cheapest = f64::INFINITY;
    for &xe in x {
        if xe > 0.5 {
            value += xe - 1.0;
            size += 1;
        } else {
            value -= xe;
        }
        cheapest = cheapest.min((2.0 * xe - 1.0).abs());
    }
    // Forbidden sets have size parity != target parity.
    if size % 2 == usize::from(parity & 1) {
        value -= cheapest;
    }
    value
}

/// Reusable buffers for the Newton solver.
#[derive(Debug, Default, Clone)]
pub(crate) struct Workspace {
    p: Vec<f64>,
    pre: Vec<[f64; 2]>,
    suf: Vec<[f64; 2]>,
    mu: Vec<f64>,
    hess: Vec<f64>,
    grad: Vec<f64>,
    step: Vec<f64>,
    trial: Vec<f64>,
    scale: Vec<f64>,
}

#[inline]
fn combine(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] * b[0] + a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

#[inline]
fn push(a: [f64; 2], p: f64) -> [f64; 2] {
    [a[0] * (1.0 - p) + a[1] * p, a[1] * (1.0 - p) + a[0] * p]
}

impl Workspace {
    fn resize(&mut self, k: usize) {
        self.p.resize(k, 0.0);
        self.pre.resize(k + 1, [0.0; 2]);
        self.suf.resize(k + 1, [0.0; 2]);
        self.mu.resize(k, 0.0);
        self.hess.resize(k * k, 0.0);
        self.grad.resize(k, 0.0);
        self.step.resize(k, 0.0);
        self.trial.resize(k, 0.0);
        self.scale.resize(k, 0.0);
    }

    /// `phi(s) = ln g_parity(e^s) - x.s`.
    fn objective(s: &[f64], x: &[f64], parity: usize) -> f64 {
        let mut acc = [1.0, 0.0];
        let mut sum = 0.0;
        for (&se, &xe) in s.iter().zip(x) {
            acc = push(acc, sigmoid(se));
            sum += softplus(se) - xe * se;
        }
        sum + acc[parity].ln()
    }

    /// Marginals, gradient and (if `with_hessian`) Hessian at `s`. Returns `phi(s)`.
    fn evaluate(&mut self, s: &[f64], x: &[f64], parity: usize, with_hessian: bool) -> f64 {
        let k = s.len();
        self.pre[0] = [1.0, 0.0];
        for e in 0..k {
            self.p[e] = sigmoid(s[e]);
            self.pre[e + 1] = push(self.pre[e], self.p[e]);
        }
        self.suf[k] = [1.0, 0.0];
        for e in (0..k).rev() {
            self.suf[e] = push(self.suf[e + 1], self.p[e]);
        }
        let total = self.pre[k][parity];
        let mut phi = total.ln();
        for e in 0..k {
            let rest = combine(self.pre[e], self.suf[e + 1]);
            self.mu[e] = self.p[e] * rest[parity ^ 1] / total;
            self.grad[e] = self.mu[e] - x[e];
            phi += softplus(s[e]) - x[e] * s[e];
        }
        if with_hessian {
            for e in 0..k {
                self.hess[e * k + e] = self.mu[e] * (1.0 - self.mu[e]);
                let mut mid = [1.0, 0.0];
                for f in e + 1..k {
                    let rest = combine(combine(self.pre[e], mid), self.suf[f + 1]);
                    let joint = self.p[e] * self.p[f] * rest[parity] / total;
                    let h = joint - self.mu[e] * self.mu[f];
                    self.hess[e * k + f] = h;
                    self.hess[f * k + e] = h;
                    mid = push(mid, self.p[f]);
                }
            }
        }
        phi
    }
}

/// Solves the Jacobi-scaled system `H step = -grad` by Cholesky with a small ridge.
fn newton_direction(ws: &mut Workspace, k: usize) -> bool {
    for e in 0..k {
        ws.scale[e] = 1.0 / ws.hess[e * k + e].max(1e-300).sqrt();
    }
    for e in 0..k {
        for f in 0..k {
            ws.hess[e * k + f] *= ws.scale[e] * ws.scale[f];
        }
        ws.hess[e * k + e] += 1e-12;
    }
    // In-place Cholesky, lower triangle.
    for j in 0..k {
        let mut d = ws.hess[j * k + j];
        for l in 0..j {
            d -= ws.hess[j * k + l] * ws.hess[j * k + l];
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        ws.hess[j * k + j] = d;
        for i in j + 1..k {
            let mut v = ws.hess[i * k + j];
            for l in 0..j {
                v -= ws.hess[i * k + l] * ws.hess[j * k + l];
            }
            ws.hess[i * k + j] = v / d;
        }
    }
    for i in 0..k {
        let mut v = -ws.grad[i] * ws.scale[i];
        for l in 0..i {
            v -= ws.hess[i * k + l] * ws.step[l];
        }
        ws.step[i] = v / ws.hess[i * k + i];
    }
    for i in (0..k).rev() {
        let mut v = ws.step[i];
        for l in i + 1..k {
            v -= ws.hess[l * k + i] * ws.step[l];
        }
        ws.step[i] = v / ws.hess[i * k + i];
    }
    for e in 0..k {
        ws.step[e] *= ws.scale[e];
    }
    true
}

/// Covariance of the tilted edge bits at `s`, row-major `k x k`.
///
/// At the optimum of the dual problem this is the Jacobian of `x` with
/// respect to `s`, so its inverse is minus the Hessian of `a(x)`.
pub(crate) fn covariance<'w>(ws: &'w mut Workspace, x: &[f64], parity: usize, s: &[f64]) -> &'w [f64] {
    let k = x.len();
    ws.resize(k);
    ws.evaluate(s, x, parity, true);
    &ws.hess[..k * k]
}

fn scaled_residual(ws: &Workspace, x: &[f64]) -> f64 {
    ws.grad
        .iter()
        .zip(x)
        .map(|(g, &xe)| g.abs() / (xe * (1.0 - xe)))
        .fold(0.0, f64::max)
}

pub(crate) struct Interior {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Damped Newton on interior coordinates; `s` holds the initial point and
/// receives the minimizer.
pub(crate) fn solve_interior(x: &[f64], parity: usize, s: &mut [f64], ws: &mut Workspace) -> Interior {
    let k = x.len();
    ws.resize(k);
    let mut phi = ws.evaluate(s, x, parity, true);
    let mut residual = scaled_residual(ws, x);
    let mut iterations = 0;
    while iterations < NEWTON_MAX_ITERS {
        if residual < NEWTON_TOL {
            return Interior { value: phi, iterations, residual, converged: true };
        }
        iterations += 1;
        if !newton_direction(ws, k) {
            // fall back to a scaled gradient step
            for e in 0..k {
                ws.step[e] = -ws.grad[e] / (x[e] * (1.0 - x[e]));
            }
        }
        let slope: f64 = ws.grad.iter().zip(&ws.step).map(|(g, d)| g * d).sum();
        if slope > -1e-300 {
            let converged = slope.abs() < 1e-22;
            return Interior { value: phi, iterations, residual, converged };
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        if -slope < 1e-12 * (1.0 + phi.abs()) {
            // the decrease is below the rounding of phi; trust the full step
            for e in 0..k {
                s[e] += ws.step[e];
            }
            let before = residual;
            phi = ws.evaluate(s, x, parity, true);
            residual = scaled_residual(ws, x);
            if residual >= before {
                for e in 0..k {
                    s[e] -= ws.step[e];
                }
                phi = ws.evaluate(s, x, parity, true);
                residual = scaled_residual(ws, x);
                let converged = residual < NEWTON_TOL.sqrt();
                return Interior { value: phi, iterations, residual, converged };
            }
            continue;
        }
        for _ in 0..60 {
            for e in 0..k {
                ws.trial[e] = s[e] + alpha * ws.step[e];
            }
            let phi_t = Workspace::objective(&ws.trial, x, parity);
            if phi_t.is_finite() && phi_t <= phi + 1e-4 * alpha * slope {
                s.copy_from_slice(&ws.trial);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // no further decrease representable
            let converged = -slope < 1e-20;
            return Interior { value: phi, iterations, residual, converged };
        }
        phi = ws.evaluate(s, x, parity, true);
        residual = scaled_residual(ws, x);
    }
    Interior {
        value: phi,
        iterations,
        residual,
        converged: residual < NEWTON_TOL,
    }
}

/// Classifies edges and solves what remains. `log_t` receives one entry per
/// edge of `x` and is also used as the warm start for interior edges.
pub(crate) fn evaluate_check(
    x: &[f64],
    log_t: &mut [f64],
    ws: &mut Workspace,
    interior_x: &mut Vec<f64>,
    interior_s: &mut Vec<f64>,
    index: &mut Vec<usize>,
) -> Interior {
    interior_x.clear();
    interior_s.clear();
    index.clear();
    let mut parity = 0usize;
    for (e, &xe) in x.iter().enumerate() {
        if xe <= 0.0 {
            log_t[e] = f64::NEG_INFINITY;
        } else if xe >= 1.0 {
            log_t[e] = f64::INFINITY;
            parity ^= 1;
        } else {
            index.push(e);
            interior_x.push(xe);
            interior_s.push(if log_t[e].is_finite() { log_t[e] } else { logit(xe) });
        }
    }
    let infeasible = Interior {
        value: f64::NEG_INFINITY,
        iterations: 0,
        residual: 0.0,
        converged: true,
    };
    match interior_x.len() {
        0 => {
            return if parity == 0 {
                Interior { value: 0.0, ..infeasible }
            } else {
                infeasible
            }
        }
        1 => return infeasible,
        2 => {
            let (a, b) = (interior_x[0], interior_x[1]);
            let (ok, half_logit) = if parity == 0 {
                ((a - b).abs() <= EQUAL_TOL, 0.5 * logit(0.5 * (a + b)))
            } else {
                ((a + b - 1.0).abs() <= EQUAL_TOL, 0.0)
            };
            if !ok {
                return infeasible;
            }
            if parity == 0 {
                log_t[index[0]] = half_logit;
                log_t[index[1]] = half_logit;
                return Interior { value: binary_entropy(0.5 * (a + b)), ..infeasible };
            }
            log_t[index[0]] = 0.5 * (a / b).ln();
            log_t[index[1]] = 0.5 * (b / a).ln();
            return Interior { value: binary_entropy(a), ..infeasible };
        }
        _ => {}
    }
    if parity_violation(interior_x, parity as u8) > 0.0 {
        return infeasible;
    }
    let out = solve_interior(interior_x, parity, interior_s, ws);
    for (i, &e) in index.iter().enumerate() {
        log_t[e] = interior_s[i];
    }
    out
}

/// Computes `a(x)` and the optimal dual point for one check node.
pub fn check_enumerator(x: &[f64]) -> Result<CheckEnumerator> {
    if let Some(bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!(
            "edge fraction {bad} outside [0, 1]"
        )));
    }
    let mut log_t = vec![f64::NAN; x.len()];
    let mut ws = Workspace::default();
    let (mut ix, mut is, mut idx) = (Vec::new(), Vec::new(), Vec::new());
    let out = evaluate_check(x, &mut log_t, &mut ws, &mut ix, &mut is, &mut idx);
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            residual: out.residual,
        });
    }
    if out.value == f64::NEG_INFINITY {
        log_t.iter_mut().for_each(|s| *s = f64::NAN);
    }
    Ok(CheckEnumerator {
        value: out.value,
        log_t,
        iterations: out.iterations,
        residual: out.residual,
        converged: out.converged,
    })
}
