//! Cutting a protograph into a convolutional band.
//!
//! With `y = gcd(n_c, n_v)` the base matrix is split into a `y x y` grid of
//! `(n_c/y) x (n_v/y)` blocks. The lower triangle (diagonal included) forms
//! `P_l`, the strict upper triangle forms `P_u`. Repeating `[P_u P_l]` along
//! a diagonal gives the unterminated band; wrapping it after `lambda`
//! repetitions gives the tail-biting base matrix.

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::protograph::Protograph;

/// The `(P_l, P_u)` pair of a cut together with its source protograph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Unwrapping {
    source: Protograph,
    lower: Vec<Vec<u32>>,
    upper: Vec<Vec<u32>>,
    y: usize,
    /// Smallest block shift leaving the band invariant; divides `y`.
    reduced_period: usize,
}

/// How a band window ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    UnterminatedTruncation,
    TailBiting,
}

/// First `repetitions` block-rows of the convolutional band.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConvWindow {
    pub matrix: Vec<Vec<u32>>,
    pub repetitions: usize,
    pub termination: Termination,
}

/// Band parameters for a lift size `N` and unwrapping factor `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DerivedParams {
    /// Decoding constraint length `N * n_v`.
    pub constraint_length: usize,
    /// Period in time steps, `lambda * y`.
    pub period: usize,
    /// Syndrome former memory in time steps of `N * n_v / y` symbols.
    pub syndrome_memory: usize,
    /// Symbols per time step.
    pub symbols_per_step: usize,
    /// Tail-biting block length `lambda * N * n_v`.
    pub tail_biting_length: usize,
}

impl Unwrapping {
    /// Canonical gcd cut of `p`.
    pub fn cut(p: &Protograph) -> Result<Self> {
        let (n_c, n_v) = (p.n_c(), p.n_v());
        let y = n_c.gcd(&n_v);
        if y < 2 {
            return Err(Error::TrivialCut { n_c, n_v });
        }
        let (bc, bv) = (n_c / y, n_v / y);
        let mut lower = vec![vec![0u32; n_v]; n_c];
        let mut upper = vec![vec![0u32; n_v]; n_c];
        for c in 0..n_c {
            for v in 0..n_v {
                if c / bc >= v / bv {
                    lower[c][v] = p.entry(c, v);
                } else {
                    upper[c][v] = p.entry(c, v);
                }
            }
        }
        let reduced_period = (1..=y)
            .filter(|d| y % d == 0)
            .find(|&d| block_shift_invariant(p, y, d))
            .unwrap_or(y);
        Ok(Self {
            source: p.clone(),
            lower,
            upper,
            y,
            reduced_period,
        })
    }

    /// Builds an unwrapping from an explicit pair, e.g. a degenerate memory-zero band.
    ///
    /// `lower + upper` becomes the source protograph; its punctures are taken from `template`.
    pub fn from_parts(
        template: &Protograph,
        lower: Vec<Vec<u32>>,
        upper: Vec<Vec<u32>>,
        y: usize,
    ) -> Result<Self> {
        let (n_c, n_v) = (template.n_c(), template.n_v());
        let dims_ok = |m: &Vec<Vec<u32>>| m.len() == n_c && m.iter().all(|r| r.len() == n_v);
        if !dims_ok(&lower) || !dims_ok(&upper) || y == 0 || n_c % y != 0 || n_v % y != 0 {
            return Err(Error::InvalidArgument("inconsistent unwrapping parts".into()));
        }
        let sum: Vec<Vec<u32>> = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| l.iter().zip(u).map(|(a, b)| a + b).collect())
            .collect();
        let source = Protograph::new(template.name(), sum, template.punctured().clone())?;
        Ok(Self {
            source,
            lower,
            upper,
            y,
            reduced_period: y,
        })
    }

    pub fn source(&self) -> &Protograph {
        &self.source
    }

    pub fn lower(&self) -> &[Vec<u32>] {
        &self.lower
    }

    pub fn upper(&self) -> &[Vec<u32>] {
        &self.upper
    }

    pub fn y(&self) -> usize {
        self.y
    }

    pub fn n_c(&self) -> usize {
        self.source.n_c()
    }

    pub fn n_v(&self) -> usize {
        self.source.n_v()
    }

    pub fn nv_per_step(&self) -> usize {
        self.n_v() / self.y
    }

    pub fn nc_per_step(&self) -> usize {
        self.n_c() / self.y
    }

    /// Period of the unlifted band in time steps (always `y`).
    pub fn period(&self) -> usize {
        self.y
    }

    /// Smallest period the band actually has; informational only.
    pub fn reduced_period(&self) -> usize {
        self.reduced_period
    }

    /// Constraint length in protograph units (`n_v`).
    pub fn constraint_length(&self) -> usize {
        self.n_v()
    }

    pub fn upper_is_zero(&self) -> bool {
        self.upper.iter().flatten().all(|&e| e == 0)
    }

    /// Tail-biting base matrix with `lambda` repetitions.
    pub fn tailbite(&self, lambda: usize) -> Result<Protograph> {
        if lambda == 0 {
            return Err(Error::InvalidArgument("unwrapping factor must be >= 1".into()));
        }
        if lambda == 1 {
            return Ok(self.source.clone().with_name(format!("{}-tb1", self.source.name())));
        }
        let (n_c, n_v) = (self.n_c(), self.n_v());
        let mut base = vec![vec![0u32; lambda * n_v]; lambda * n_c];
        for t in 0..lambda {
            let prev = (t + lambda - 1) % lambda;
            for c in 0..n_c {
                for v in 0..n_v {
                    base[t * n_c + c][t * n_v + v] += self.lower[c][v];
                    base[t * n_c + c][prev * n_v + v] += self.upper[c][v];
                }
            }
        }
        let punctured = (0..lambda)
            .flat_map(|t| self.source.punctured().iter().map(move |&v| t * n_v + v))
            .collect();
        Protograph::new(format!("{}-tb{lambda}", self.source.name()), base, punctured)
    }

    /// Truncation of the unterminated band to `repetitions` block-rows.
    pub fn conv_window(&self, repetitions: usize) -> Result<ConvWindow> {
        if repetitions == 0 {
            return Err(Error::InvalidArgument("window needs at least one repetition".into()));
        }
        let (n_c, n_v) = (self.n_c(), self.n_v());
        let mut matrix = vec![vec![0u32; repetitions * n_v]; repetitions * n_c];
        for t in 0..repetitions {
            for c in 0..n_c {
                for v in 0..n_v {
                    matrix[t * n_c + c][t * n_v + v] = self.lower[c][v];
                    if t > 0 {
                        matrix[t * n_c + c][(t - 1) * n_v + v] = self.upper[c][v];
                    }
                }
            }
        }
        Ok(ConvWindow {
            matrix,
            repetitions,
            termination: Termination::UnterminatedTruncation,
        })
    }

    /// Constraint length, period and syndrome former memory for lift size `n`.
    pub fn derived_params(&self, n: usize, lambda: usize) -> DerivedParams {
        let y = self.y;
        let (bc, bv) = (self.nc_per_step(), self.nv_per_step());
        let block_nonzero = |i: usize, j: usize| {
            (i * bc..(i + 1) * bc).any(|c| (j * bv..(j + 1) * bv).any(|v| self.source.entry(c, v) > 0))
        };
        // Lag k at row step i reads block (i, (i - k) mod y).
        let syndrome_memory = (0..y)
            .rev()
            .find(|&k| (0..y).any(|i| block_nonzero(i, (i + y - k) % y)))
            .unwrap_or(0);
        DerivedParams {
            constraint_length: n * self.n_v(),
            period: lambda * y,
            syndrome_memory,
            symbols_per_step: n * bv,
            tail_biting_length: lambda * n * self.n_v(),
        }
    }
}

fn block_shift_invariant(p: &Protograph, y: usize, shift: usize) -> bool {
    let (bc, bv) = (p.n_c() / y, p.n_v() / y);
    (0..y).all(|i| {
        (0..y).all(|j| {
            let (i2, j2) = ((i + shift) % y, (j + shift) % y);
            (0..bc).all(|c| (0..bv).all(|v| p.entry(i * bc + c, j * bv + v) == p.entry(i2 * bc + c, j2 * bv + v)))
        })
    })
}

impl ConvWindow {
    /// Block `(row, col)` of size `n_c x n_v`.
    pub fn block(&self, row: usize, col: usize, n_c: usize, n_v: usize) -> Vec<Vec<u32>> {
        self.matrix[row * n_c..(row + 1) * n_c]
            .iter()
            .map(|r| r[col * n_v..(col + 1) * n_v].to_vec())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> Protograph {
        Protograph::from_base("ex1", vec![vec![1; 6]; 3]).unwrap()
    }

    #[test]
    fn cut_36() {
        let u = Unwrapping::cut(&ex1()).unwrap();
        assert_eq!(u.y(), 3);
        assert_eq!(
            u.lower(),
            &[
                vec![1, 1, 0, 0, 0, 0],
                vec![1, 1, 1, 1, 0, 0],
                vec![1, 1, 1, 1, 1, 1]
            ]
        );
        assert_eq!(
            u.upper(),
            &[
                vec![0, 0, 1, 1, 1, 1],
                vec![0, 0, 0, 0, 1, 1],
                vec![0, 0, 0, 0, 0, 0]
            ]
        );
        // all-ones is invariant under any block shift
        assert_eq!(u.reduced_period(), 1);
    }

    #[test]
    fn cut_trivial() {
        let p = Protograph::from_base("35", vec![vec![1; 5]; 3]).unwrap();
        assert!(matches!(
            Unwrapping::cut(&p),
            Err(Error::TrivialCut { n_c: 3, n_v: 5 })
        ));
    }

    #[test]
    fn tailbite_small_cases() {
        let p = ex1();
        let u = Unwrapping::cut(&p).unwrap();
        assert_eq!(u.tailbite(1).unwrap().base(), p.base());
        let tb = u.tailbite(2).unwrap();
        assert_eq!((tb.n_c(), tb.n_v()), (6, 12));
        for c in 0..3 {
            for v in 0..6 {
                assert_eq!(tb.entry(c, v), u.lower()[c][v]);
                assert_eq!(tb.entry(c, v + 6), u.upper()[c][v]);
                assert_eq!(tb.entry(c + 3, v), u.upper()[c][v]);
                assert_eq!(tb.entry(c + 3, v + 6), u.lower()[c][v]);
            }
        }
    }

    #[test]
    fn conv_window_blocks() {
        let u = Unwrapping::cut(&ex1()).unwrap();
        assert_eq!(u.conv_window(1).unwrap().matrix, u.lower());
        let w = u.conv_window(3).unwrap();
        let zero = vec![vec![0u32; 6]; 3];
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c {
                    u.lower().to_vec()
                } else if r == c + 1 {
                    u.upper().to_vec()
                } else {
                    zero.clone()
                };
                assert_eq!(w.block(r, c, 3, 6), want, "block ({r},{c})");
            }
        }
        // interior block rows have the row degrees of P
        for row in &w.matrix[3..] {
            assert_eq!(row.iter().sum::<u32>(), 6);
        }
    }

    #[test]
    fn derived_params_examples() {
        let u = Unwrapping::cut(&ex1()).unwrap();
        let d = u.derived_params(1, 1);
        assert_eq!((d.constraint_length, d.period), (6, 3));
        assert_eq!(d.syndrome_memory, 2);
        assert_eq!(d.tail_biting_length, 6);
        let d = u.derived_params(100, 4);
        assert_eq!((d.constraint_length, d.period), (600, 12));
        assert_eq!(d.tail_biting_length, 2400);
        assert_eq!(
            (d.syndrome_memory + 1) * d.symbols_per_step,
            d.constraint_length
        );
    }

    #[test]
    fn memory_reduces_when_far_diagonal_vanishes() {
        let p = Protograph::from_base("lt", vec![vec![1, 1, 0, 0], vec![1, 1, 1, 1]]).unwrap();
        let u = Unwrapping::cut(&p).unwrap();
        assert!(u.upper_is_zero());
        assert_eq!(u.derived_params(1, 1).syndrome_memory, 1);
        // block diagonal: no lag-1 blocks at all
        let p = Protograph::from_base("bd", vec![vec![1, 1, 0, 0], vec![0, 0, 1, 1]]).unwrap();
        let u = Unwrapping::cut(&p).unwrap();
        assert_eq!(u.derived_params(1, 1).syndrome_memory, 0);
    }

    #[test]
    fn period_reduction_detected() {
        let p = Protograph::from_base(
            "per",
            vec![vec![1, 1, 0, 1], vec![1, 0, 1, 1]],
        )
        .unwrap();
        let u = Unwrapping::cut(&p).unwrap();
        assert_eq!(u.period(), 2);
        assert_eq!(u.reduced_period(), 2);
        let q = Protograph::from_base("sym", vec![vec![1, 0, 0, 1], vec![0, 1, 1, 0]]).unwrap();
        assert_eq!(Unwrapping::cut(&q).unwrap().reduced_period(), 1);
    }
}
