//! Lifting base matrices to binary parity-check matrices.
//!
//! Each base entry `b` becomes a sum of `b` pairwise disjoint `N x N`
//! permutation matrices, so the lifted matrix keeps all `N * b` ones of the
//! block. The permutations of block `(c, v)` come from the ChaCha stream
//! `(seed, c * n_v + v)`, which makes every block independent of the order in
//! which blocks are generated.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protograph::Protograph;
use crate::rng::{disjoint_permutations, stream_rng};
use crate::unwrap::Unwrapping;

/// Sparse binary matrix with row and column adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    rows: usize,
    cols: usize,
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
}

impl SparseBinaryMatrix {
    /// Builds a matrix from `(row, col)` positions of ones.
    pub fn from_entries(rows: usize, cols: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut row_adj = vec![Vec::new(); rows];
        for (r, c) in entries {
            if r >= rows || c >= cols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) outside {rows} x {cols}"
                )));
            }
            row_adj[r].push(c);
        }
        let mut col_adj = vec![Vec::new(); cols];
        for (r, adj) in row_adj.iter_mut().enumerate() {
            adj.sort_unstable();
            if let Some(w) = adj.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate entry ({r}, {})",
                    w[0]
                )));
            }
            for &c in adj.iter() {
                col_adj[c].push(r);
            }
        }
        Ok(Self {
            rows,
            cols,
            row_adj,
            col_adj,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_entries(n, n, (0..n).map(|i| (i, i))).expect("identity is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column indices of the ones in row `r`, ascending.
    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_adj[r]
    }

    /// Row indices of the ones in column `c`, ascending.
    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_adj[c]
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_adj[r].len()
    }

    pub fn col_weight(&self, c: usize) -> usize {
        self.col_adj[c].len()
    }

    pub fn nnz(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.rows as f64 * self.cols as f64)
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row_adj[r].binary_search(&c).is_ok()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_adj
            .iter()
            .enumerate()
            .flat_map(|(r, adj)| adj.iter().map(move |&c| (r, c)))
    }

    /// Syndrome `H x^T` over GF(2).
    pub fn syndrome(&self, bits: &[u8]) -> Vec<u8> {
        self.row_adj
            .iter()
            .map(|adj| adj.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.cols
            && self
                .row_adj
                .iter()
                .all(|adj| adj.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)) == 0)
    }

    /// Same matrix with columns relabelled: old column `c` becomes `perm[c]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        Self::from_entries(self.rows, self.cols, self.entries().map(|(r, c)| (r, perm[c])))
            .expect("permutation keeps entries valid")
    }

    /// Writes the matrix in alist format (1-based indices, zero padded lists).
    pub fn to_alist(&self) -> String {
        let max_col = self.col_adj.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.row_adj.iter().map(Vec::len).max().unwrap_or(0);
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.cols, self.rows);
        let _ = writeln!(s, "{max_col} {max_row}");
        let join = |it: &mut dyn Iterator<Item = usize>| {
            it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(s, "{}", join(&mut self.col_adj.iter().map(Vec::len)));
        let _ = writeln!(s, "{}", join(&mut self.row_adj.iter().map(Vec::len)));
        for (adj, width) in self
            .col_adj
            .iter()
            .map(|a| (a, max_col))
            .chain(self.row_adj.iter().map(|a| (a, max_row)))
        {
            // an empty list is written as a single 0 so the line is not blank
            let padded = adj.iter().map(|&i| i + 1).chain(std::iter::repeat(0)).take(width.max(1));
            let _ = writeln!(s, "{}", join(&mut { padded }));
        }
        s
    }

    /// Parses an alist document. Zero padding is optional.
    pub fn from_alist(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::MalformedAlist(m.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut nums = |what: &str| -> Result<Vec<usize>> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing {what}")))?;
            line.split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| bad(&format!("bad number {t:?} in {what}"))))
                .collect()
        };
        let dims = nums("dimensions")?;
        let [cols, rows] = dims[..] else {
            return Err(bad("dimension line needs two numbers"));
        };
        let maxes = nums("maximum degrees")?;
        if maxes.len() != 2 {
            return Err(bad("degree line needs two numbers"));
        }
        let col_w = nums("column degrees")?;
        let row_w = nums("row degrees")?;
        if col_w.len() != cols || row_w.len() != rows {
            return Err(bad("degree list length does not match dimensions"));
        }
        let mut from_cols = Vec::new();
        for (c, &w) in col_w.iter().enumerate() {
            let list: Vec<usize> = nums("column list")?.into_iter().filter(|&x| x != 0).collect();
            if list.len() != w {
                return Err(bad(&format!("column {} lists {} rows, expected {w}", c + 1, list.len())));
            }
            for r in list {
                if r > rows {
                    return Err(bad(&format!("row index {r} out of range")));
                }
                from_cols.push((r - 1, c));
            }
        }
        let mut from_rows = Vec::new();
        for (r, &w) in row_w.iter().enumerate() {
            let list: Vec<usize> = nums("row list")?.into_iter().filter(|&x| x != 0).collect();
            if list.len() != w {
                return Err(bad(&format!("row {} lists {} columns, expected {w}", r + 1, list.len())));
            }
            for c in list {
                if c > cols {
                    return Err(bad(&format!("column index {c} out of range")));
                }
                from_rows.push((r, c - 1));
            }
        }
        from_cols.sort_unstable();
        from_rows.sort_unstable();
        if from_cols != from_rows {
            return Err(bad("row and column lists disagree"));
        }
        Self::from_entries(rows, cols, from_rows).map_err(|e| bad(&e.to_string()))
    }
}

/// How block permutations are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftStyle {
    RandomPermutation,
    Circulant,
}

impl std::str::FromStr for LiftStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "random_permutation" => Ok(Self::RandomPermutation),
            "circulant" => Ok(Self::Circulant),
            other => Err(Error::InvalidArgument(format!("unknown lift style {other:?}"))),
        }
    }
}

/// Lift size, permutation style and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftSpec {
    pub n: usize,
    pub style: LiftStyle,
    pub seed: u64,
}

impl LiftSpec {
    pub fn new(n: usize, style: LiftStyle, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("lift size N must be >= 1".into()));
        }
        Ok(Self { n, style, seed })
    }

    pub fn random(n: usize, seed: u64) -> Self {
        Self::new(n, LiftStyle::RandomPermutation, seed).expect("n >= 1")
    }

    pub fn circulant(n: usize, seed: u64) -> Self {
        Self::new(n, LiftStyle::Circulant, seed).expect("n >= 1")
    }

    /// `count` disjoint permutations for the block with stream index `block`.
    fn block_permutations(&self, block: u64, count: usize) -> Vec<Vec<usize>> {
        let mut rng = stream_rng(self.seed, block);
        match self.style {
            LiftStyle::RandomPermutation => disjoint_permutations(self.n, count, &mut rng),
            LiftStyle::Circulant => {
                let mut shifts: Vec<usize> = (0..self.n).collect();
                shifts.shuffle(&mut rng);
                shifts[..count]
                    .iter()
                    .map(|&s| (0..self.n).map(|i| (i + s) % self.n).collect())
                    .collect()
            }
        }
    }
}

fn check_entries(b: &Protograph, n: usize) -> Result<()> {
    for c in 0..b.n_c() {
        for v in 0..b.n_v() {
            if b.entry(c, v) as usize > n {
                return Err(Error::EntryExceedsLift {
                    row: c,
                    col: v,
                    entry: b.entry(c, v),
                    lift: n,
                });
            }
        }
    }
    Ok(())
}

/// Lifts `b` to an `(n_c N) x (n_v N)` binary matrix.
pub fn lift(b: &Protograph, spec: &LiftSpec) -> Result<SparseBinaryMatrix> {
    let n = spec.n;
    check_entries(b, n)?;
    let mut entries = Vec::with_capacity(b.edge_count() as usize * n);
    for c in 0..b.n_c() {
        for v in 0..b.n_v() {
            let r = b.entry(c, v) as usize;
            if r == 0 {
                continue;
            }
            for p in spec.block_permutations((c * b.n_v() + v) as u64, r) {
                entries.extend(p.iter().enumerate().map(|(i, &j)| (c * n + i, v * n + j)));
            }
        }
    }
    SparseBinaryMatrix::from_entries(b.n_c() * n, b.n_v() * n, entries)
}

/// Lifted convolutional band with period `lambda`.
///
/// Block-row `t` of the band uses the permutations that [`lift`] assigns to
/// block-row `t mod lambda` of `tailbite(lambda)`, so wrapping the band after
/// `lambda` block-rows reproduces the lifted tail-biting code exactly.
#[derive(Debug, Clone)]
pub struct LiftedBand {
    n_c: usize,
    n_v: usize,
    n: usize,
    period: usize,
    /// `[t][c][v]` permutations of the lower part at block-row `t`.
    lower: Vec<Vec<Vec<Vec<Vec<usize>>>>>,
    upper: Vec<Vec<Vec<Vec<Vec<usize>>>>>,
    punctured: Vec<usize>,
}

impl LiftedBand {
    pub fn new(u: &Unwrapping, spec: &LiftSpec, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidArgument("band period must be >= 1".into()));
        }
        let tb = u.tailbite(period)?;
        check_entries(&tb, spec.n)?;
        let (n_c, n_v) = (u.n_c(), u.n_v());
        let tb_nv = tb.n_v();
        let mut lower = Vec::with_capacity(period);
        let mut upper = Vec::with_capacity(period);
        for t in 0..period {
            let prev = (t + period - 1) % period;
            let mut lo_t = vec![vec![Vec::new(); n_v]; n_c];
            let mut up_t = vec![vec![Vec::new(); n_v]; n_c];
            for c in 0..n_c {
                for v in 0..n_v {
                    let (l, h) = (u.lower()[c][v] as usize, u.upper()[c][v] as usize);
                    let row = t * n_c + c;
                    if period == 1 {
                        let mut perms = spec.block_permutations((row * tb_nv + v) as u64, l + h);
                        up_t[c][v] = perms.split_off(l);
                        lo_t[c][v] = perms;
                    } else {
                        if l > 0 {
                            lo_t[c][v] = spec.block_permutations((row * tb_nv + t * n_v + v) as u64, l);
                        }
                        if h > 0 {
                            up_t[c][v] = spec.block_permutations((row * tb_nv + prev * n_v + v) as u64, h);
                        }
                    }
                }
            }
            lower.push(lo_t);
            upper.push(up_t);
        }
        Ok(Self {
            n_c,
            n_v,
            n: spec.n,
            period,
            lower,
            upper,
            punctured: u.source().punctured().iter().copied().collect(),
        })
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// Lifted symbols per block-column.
    pub fn block_width(&self) -> usize {
        self.n_v * self.n
    }

    /// Lifted checks per block-row.
    pub fn block_height(&self) -> usize {
        self.n_c * self.n
    }

    /// Punctured lifted positions within one block-column.
    pub fn punctured_in_block(&self) -> Vec<usize> {
        self.punctured
            .iter()
            .flat_map(|&v| (0..self.n).map(move |i| v * self.n + i))
            .collect()
    }

    /// Ones of block-row `t` as `(row, col)` pairs, relative to block-row `t`
    /// and block-column `t - 1` (upper) / `t` (lower); column offsets are
    /// `0` for the upper part and `block_width` for the lower part.
    fn row_block_entries(&self, t: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (n, phase) = (self.n, t % self.period);
        let w = self.block_width();
        (0..self.n_c).flat_map(move |c| {
            (0..self.n_v).flat_map(move |v| {
                let lo = self.lower[phase][c][v].iter().map(move |p| (p, w));
                let up = self.upper[phase][c][v].iter().map(|p| (p, 0));
                lo.chain(up).flat_map(move |(p, off)| {
                    p.iter().enumerate().map(move |(i, &j)| (c * n + i, off + v * n + j))
                })
            })
        })
    }

    /// Lifted tail-biting matrix with `period` repetitions.
    pub fn tail_biting(&self) -> SparseBinaryMatrix {
        let (h, w, lam) = (self.block_height(), self.block_width(), self.period);
        let cols = lam * w;
        let entries: Vec<(usize, usize)> = (0..lam)
            .flat_map(|t| {
                self.row_block_entries(t).map(move |(r, c)| {
                    // column relative to block t-1
                    let abs = ((t + lam - 1) % lam) * w + c;
                    (t * h + r, abs % cols)
                })
            })
            .collect();
        SparseBinaryMatrix::from_entries(lam * h, cols, entries).expect("band entries are unique")
    }

    /// First `block_rows` block-rows of the unterminated band over
    /// `block_rows` block-columns, starting at time `start`.
    ///
    /// With `closing_row` one more block-row is appended holding only the
    /// upper part of block-row `start + block_rows`, which forces the state
    /// after the window to zero.
    pub fn window(&self, start: usize, block_rows: usize, closing_row: bool) -> SparseBinaryMatrix {
        let (h, w) = (self.block_height(), self.block_width());
        let total_rows = block_rows + usize::from(closing_row);
        let mut entries = Vec::new();
        for k in 0..total_rows {
            for (r, c) in self.row_block_entries(start + k) {
                // c is relative to block-column (start + k - 1)
                if c < w {
                    if k == 0 {
                        continue;
                    }
                    entries.push((k * h + r, (k - 1) * w + c));
                } else if k < block_rows {
                    entries.push((k * h + r, k * w + c - w));
                }
            }
        }
        SparseBinaryMatrix::from_entries(total_rows * h, block_rows * w, entries)
            .expect("band entries are unique")
    }

    /// Ones of block-row `t` with absolute column indices, skipping columns before 0.
    pub fn band_row_entries(&self, t: usize) -> Vec<(usize, usize)> {
        let (h, w) = (self.block_height(), self.block_width());
        self.row_block_entries(t)
            .filter_map(|(r, c)| {
                let col = (t * w + c).checked_sub(w)?;
                Some((t * h + r, col))
            })
            .collect()
    }
}
