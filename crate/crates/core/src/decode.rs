//! Sum-product decoding.
//!
//! [`BpDecoder`] runs the flooding schedule with the tanh check rule on any
//! sparse parity-check matrix. [`sliding_window_decode`] walks a window of
//! consecutive block-columns along a lifted convolutional band and reuses
//! check-to-variable messages in the overlap between successive windows.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::{LiftSpec, LiftedBand, SparseBinaryMatrix};
use crate::unwrap::Unwrapping;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stopping {
    #[default]
    SyndromeCheck,
    FixedIterations,
}

impl std::str::FromStr for Stopping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "syndrome" | "syndrome_check" => Ok(Self::SyndromeCheck),
            "fixed" | "fixed_iterations" => Ok(Self::FixedIterations),
            other => Err(Error::InvalidArgument(format!("unknown stopping rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub max_iterations: usize,
    pub llr_clamp: f64,
    pub stopping: Stopping,
    pub window_periods: usize,
    pub window_iterations_per_shift: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            llr_clamp: 25.0,
            stopping: Stopping::SyndromeCheck,
            window_periods: 6,
            window_iterations_per_shift: 100,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.window_iterations_per_shift == 0 {
            return Err(Error::InvalidArgument("iteration budgets must be >= 1".into()));
        }
        if !(self.llr_clamp > 0.0) {
            return Err(Error::InvalidArgument("llr_clamp must be positive".into()));
        }
        if self.window_periods < 2 {
            return Err(Error::InvalidArgument("window_periods must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodeResult {
    pub hard_decision: Vec<u8>,
    pub converged: bool,
    pub iterations_used: usize,
}

/// Tanner graph in edge-indexed form plus message buffers.
#[derive(Debug, Clone)]
pub struct BpDecoder {
    cols: usize,
    /// Edges grouped by check: `check_start[c]..check_start[c + 1]`.
    check_start: Vec<usize>,
    edge_var: Vec<usize>,
    /// Edge indices grouped by variable.
    var_start: Vec<usize>,
    var_edges: Vec<usize>,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    posterior: Vec<f64>,
    scratch: Vec<f64>,
    hard: Vec<u8>,
}

impl BpDecoder {
    pub fn new(h: &SparseBinaryMatrix) -> Self {
        let mut check_start = Vec::with_capacity(h.rows() + 1);
        let mut edge_var = Vec::with_capacity(h.nnz());
        check_start.push(0);
        for r in 0..h.rows() {
            edge_var.extend_from_slice(h.row(r));
            check_start.push(edge_var.len());
        }
        let mut var_start = vec![0; h.cols() + 1];
        for &v in &edge_var {
            var_start[v + 1] += 1;
        }
        for v in 0..h.cols() {
            var_start[v + 1] += var_start[v];
        }
        let mut fill = var_start.clone();
        let mut var_edges = vec![0; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v]] = e;
            fill[v] += 1;
        }
        let e = edge_var.len();
        Self {
            cols: h.cols(),
            check_start,
            edge_var,
            var_start,
            var_edges,
            v2c: vec![0.0; e],
            c2v: vec![0.0; e],
            posterior: vec![0.0; h.cols()],
            scratch: Vec::new(),
            hard: vec![0; h.cols()],
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn checks(&self) -> usize {
        self.check_start.len() - 1
    }

    fn syndrome_zero(&self) -> bool {
        (0..self.checks()).all(|c| {
            let edges = self.check_start[c]..self.check_start[c + 1];
            edges.fold(0u8, |acc, e| acc ^ self.hard[self.edge_var[e]]) == 0
        })
    }

    fn update_posterior(&mut self, llr: &[f64]) {
        for v in 0..self.cols {
            let edges = &self.var_edges[self.var_start[v]..self.var_start[v + 1]];
            let total = llr[v] + edges.iter().map(|&e| self.c2v[e]).sum::<f64>();
            self.posterior[v] = total;
            self.hard[v] = u8::from(total < 0.0);
        }
    }

    fn variable_update(&mut self, clamp: f64) {
        for v in 0..self.cols {
            for &e in &self.var_edges[self.var_start[v]..self.var_start[v + 1]] {
                self.v2c[e] = (self.posterior[v] - self.c2v[e]).clamp(-clamp, clamp);
            }
        }
    }

    fn check_update(&mut self, clamp: f64) {
        for c in 0..self.checks() {
            let (a, b) = (self.check_start[c], self.check_start[c + 1]);
            let k = b - a;
            self.scratch.clear();
            self.scratch.extend(self.v2c[a..b].iter().map(|m| (0.5 * m).tanh()));
            // leave-one-out products via prefix and suffix sweeps
            let mut prefix = 1.0;
            for i in 0..k {
                self.c2v[a + i] = prefix;
                prefix *= self.scratch[i];
            }
            let mut suffix = 1.0;
            for i in (0..k).rev() {
                let p = (self.c2v[a + i] * suffix).clamp(-1.0 + 1e-16, 1.0 - 1e-16);
                self.c2v[a + i] = (2.0 * p.atanh()).clamp(-clamp, clamp);
                suffix *= self.scratch[i];
            }
        }
    }

    /// Decodes one word. `init_c2v`, when given, seeds the check messages.
    fn run(&mut self, llr: &[f64], init_c2v: Option<&[f64]>, max_iterations: usize, cfg: &DecoderConfig) -> DecodeResult {
        let clamp = cfg.llr_clamp;
        match init_c2v {
            Some(m) => self.c2v.copy_from_slice(m),
            None => self.c2v.iter_mut().for_each(|m| *m = 0.0),
        }
        self.update_posterior(llr);
        let syndrome_stop = cfg.stopping == Stopping::SyndromeCheck;
        if syndrome_stop && self.syndrome_zero() {
            return self.result(true, 0);
        }
        let mut iterations = 0;
        while iterations < max_iterations {
            iterations += 1;
            self.variable_update(clamp);
            self.check_update(clamp);
            self.update_posterior(llr);
            if syndrome_stop && self.syndrome_zero() {
                return self.result(true, iterations);
            }
        }
        let ok = self.syndrome_zero();
        self.result(ok, iterations)
    }

    fn result(&self, converged: bool, iterations_used: usize) -> DecodeResult {
        DecodeResult {
            hard_decision: self.hard.clone(),
            converged,
            iterations_used,
        }
    }

    /// Flooding sum-product decoding of one channel LLR vector.
    pub fn decode(&mut self, llr: &[f64], cfg: &DecoderConfig) -> Result<DecodeResult> {
        if llr.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: llr.len(),
            });
        }
        cfg.validate()?;
        Ok(self.run(llr, None, cfg.max_iterations, cfg))
    }

    /// Posterior LLRs of the last decoded word.
    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }
}

/// One-shot convenience wrapper around [`BpDecoder`].
pub fn bp_decode(h: &SparseBinaryMatrix, llr: &[f64], cfg: &DecoderConfig) -> Result<DecodeResult> {
    BpDecoder::new(h).decode(llr, cfg)
}

/// Sliding-window decoding of an unterminated lifted band.
///
/// `llr_stream[t]` holds the channel LLRs of block-column `t`
/// (`N n_v` values, punctured positions at zero). The window covers block-rows
/// `s..s+W` and block-columns `s..s+W`, plus block-column `s - 1` whose bits
/// are already decided and enter as saturated LLRs. After at most
/// `window_iterations_per_shift` iterations the decisions of block-column `s`
/// are emitted and the window moves by one block-column. Check messages on
/// edges shared with the next window are carried over.
pub fn sliding_window_decode(
    u: &Unwrapping,
    spec: &LiftSpec,
    period: usize,
    llr_stream: &[Vec<f64>],
    cfg: &DecoderConfig,
) -> Result<Vec<Vec<u8>>> {
    cfg.validate()?;
    let band = LiftedBand::new(u, spec, period)?;
    let (h, w) = (band.block_height(), band.block_width());
    for block in llr_stream {
        if block.len() != w {
            return Err(Error::DimensionMismatch {
                expected: w,
                got: block.len(),
            });
        }
    }
    let len = llr_stream.len();
    let known = 1e3 * cfg.llr_clamp;
    let mut decided: Vec<Vec<u8>> = Vec::with_capacity(len);
    let mut retained: HashMap<(usize, usize), f64> = HashMap::new();
    for s in 0..len {
        let end = (s + cfg.window_periods).min(len);
        let first_col = s.saturating_sub(1);
        let col_off = first_col * w;
        let ncols = (end - first_col) * w;
        let mut entries = Vec::new();
        for t in s..end {
            for (r, c) in band.band_row_entries(t) {
                entries.push((r - s * h, c - col_off));
            }
        }
        let hw = SparseBinaryMatrix::from_entries((end - s) * h, ncols, entries)?;
        let mut llr = Vec::with_capacity(ncols);
        if s > 0 {
            llr.extend(decided[s - 1].iter().map(|&b| if b == 0 { known } else { -known }));
        }
        for block in &llr_stream[s..end] {
            llr.extend_from_slice(block);
        }
        let mut dec = BpDecoder::new(&hw);
        let init: Vec<f64> = (0..hw.rows())
            .flat_map(|r| hw.row(r).iter().map(move |&c| (r, c)))
            .map(|(r, c)| retained.get(&(r + s * h, c + col_off)).copied().unwrap_or(0.0))
            .collect();
        let out = dec.run(&llr, Some(&init), cfg.window_iterations_per_shift, cfg);
        let start = (s - first_col) * w;
        decided.push(out.hard_decision[start..start + w].to_vec());
        retained.clear();
        let mut e = 0;
        for r in 0..hw.rows() {
            for &c in hw.row(r) {
                if r >= h {
                    retained.insert((r + s * h, c + col_off), dec.c2v[e]);
                }
                e += 1;
            }
        }
    }
    Ok(decided)
}
