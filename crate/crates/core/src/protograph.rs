//! Protograph base matrices.
//!
//! A protograph is an `n_c x n_v` matrix of nonnegative integers where entry
//! `(c, v)` counts the parallel edges between check `c` and variable `v`.
//! Some variable nodes may be punctured (never transmitted).

use std::collections::BTreeSet;
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{disjoint_permutations, stream_rng};

/// Protograph with an optional set of punctured variable nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ProtographDoc", into = "ProtographDoc")]
pub struct Protograph {
    name: String,
    base: Vec<Vec<u32>>,
    punctured: BTreeSet<usize>,
    verified: Option<bool>,
}

/// On-disk layout of a protograph file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtographDoc {
    name: String,
    base: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    punctured: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verified: Option<bool>,
}

impl TryFrom<ProtographDoc> for Protograph {
    type Error = Error;

    fn try_from(doc: ProtographDoc) -> Result<Self> {
        let mut punctured = BTreeSet::new();
        for &v in &doc.punctured {
            if !punctured.insert(v) {
                return Err(Error::InvalidProtograph(format!(
                    "punctured index {v} listed twice"
                )));
            }
        }
        let mut p = Protograph::new(doc.name, doc.base, punctured)?;
        p.verified = doc.verified;
        Ok(p)
    }
}

impl From<Protograph> for ProtographDoc {
    fn from(p: Protograph) -> Self {
        ProtographDoc {
            name: p.name,
            base: p.base,
            punctured: p.punctured.into_iter().collect(),
            verified: p.verified,
        }
    }
}

/// Variable and check node degrees of a protograph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeProfile {
    pub variable_degrees: Vec<u32>,
    pub check_degrees: Vec<u32>,
    /// `(J, K)` when every variable has degree `J` and every check degree `K`.
    pub regular_jk: Option<(u32, u32)>,
}

impl DegreeProfile {
    pub fn edge_count(&self) -> u32 {
        self.variable_degrees.iter().sum()
    }
}

impl Protograph {
    /// Builds a protograph and checks every structural invariant.
    pub fn new(
        name: impl Into<String>,
        base: Vec<Vec<u32>>,
        punctured: BTreeSet<usize>,
    ) -> Result<Self> {
        let n_c = base.len();
        if n_c == 0 {
            return Err(Error::InvalidProtograph("base has no rows".into()));
        }
        let n_v = base[0].len();
        if n_v == 0 {
            return Err(Error::InvalidProtograph("base has no columns".into()));
        }
        if let Some((r, row)) = base.iter().enumerate().find(|(_, row)| row.len() != n_v) {
            return Err(Error::InvalidProtograph(format!(
                "row {r} has {} entries, expected {n_v}",
                row.len()
            )));
        }
        if let Some(r) = base.iter().position(|row| row.iter().all(|&e| e == 0)) {
            return Err(Error::InvalidProtograph(format!("row {r} has zero weight")));
        }
        if let Some(v) = (0..n_v).find(|&v| base.iter().all(|row| row[v] == 0)) {
            return Err(Error::InvalidProtograph(format!(
                "column {v} has zero weight"
            )));
        }
        if n_c >= n_v {
            return Err(Error::InvalidProtograph(format!(
                "need n_c < n_v, got {n_c} x {n_v}"
            )));
        }
        if let Some(&v) = punctured.iter().find(|&&v| v >= n_v) {
            return Err(Error::InvalidProtograph(format!(
                "punctured index {v} out of range 0..{n_v}"
            )));
        }
        if punctured.len() >= n_v {
            return Err(Error::InvalidProtograph(
                "every variable node is punctured".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            base,
            punctured,
            verified: None,
        })
    }

    /// Protograph without punctured nodes.
    pub fn from_base(name: impl Into<String>, base: Vec<Vec<u32>>) -> Result<Self> {
        Self::new(name, base, BTreeSet::new())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("protograph serializes");
        s.push('\n');
        s
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn verified(&self) -> Option<bool> {
        self.verified
    }

    pub fn base(&self) -> &[Vec<u32>] {
        &self.base
    }

    pub fn n_c(&self) -> usize {
        self.base.len()
    }

    pub fn n_v(&self) -> usize {
        self.base[0].len()
    }

    #[inline]
    pub fn entry(&self, c: usize, v: usize) -> u32 {
        self.base[c][v]
    }

    pub fn punctured(&self) -> &BTreeSet<usize> {
        &self.punctured
    }

    pub fn is_punctured(&self, v: usize) -> bool {
        self.punctured.contains(&v)
    }

    /// Number of transmitted variable nodes `m`.
    pub fn transmitted(&self) -> usize {
        self.n_v() - self.punctured.len()
    }

    pub fn max_entry(&self) -> u32 {
        self.base.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> u32 {
        self.base.iter().flatten().sum()
    }

    /// `(design_rate, transmitted_rate)` = `((n_v - n_c)/n_v, (n_v - n_c)/m)`.
    pub fn rates(&self) -> (Ratio<usize>, Ratio<usize>) {
        let k = self.n_v() - self.n_c();
        (
            Ratio::new(k, self.n_v()),
            Ratio::new(k, self.transmitted()),
        )
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let variable_degrees: Vec<u32> = (0..self.n_v())
            .map(|v| self.base.iter().map(|row| row[v]).sum())
            .collect();
        let check_degrees: Vec<u32> = self.base.iter().map(|row| row.iter().sum()).collect();
        let uniform = |d: &[u32]| d.iter().all(|&x| x == d[0]).then_some(d[0]);
        let regular_jk = uniform(&variable_degrees).zip(uniform(&check_degrees));
        DegreeProfile {
            variable_degrees,
            check_degrees,
            regular_jk,
        }
    }

    /// M-fold copy-and-permute expansion at the protograph level.
    ///
    /// Entry `r` becomes an `M x M` count matrix equal to a sum of `r`
    /// permutation matrices. When `r <= M` the permutations are pairwise
    /// disjoint; when `r > M` the block is `floor(r/M)` all-ones plus
    /// `r mod M` disjoint permutations. Node `v` copy `i` maps to index
    /// `v * M + i`, and copies of punctured nodes stay punctured.
    pub fn expand(&self, m: usize, seed: u64) -> Result<Protograph> {
        if m == 0 {
            return Err(Error::InvalidArgument("expansion factor M must be >= 1".into()));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let (n_c, n_v) = (self.n_c(), self.n_v());
        let mut base = vec![vec![0u32; n_v * m]; n_c * m];
        for c in 0..n_c {
            for v in 0..n_v {
                let r = self.base[c][v] as usize;
                if r == 0 {
                    continue;
                }
                let mut rng = stream_rng(seed, (c * n_v + v) as u64);
                let full = (r / m) as u32;
                let perms = disjoint_permutations(m, r % m, &mut rng);
                for i in 0..m {
                    for j in 0..m {
                        base[c * m + i][v * m + j] = full;
                    }
                    for p in &perms {
                        base[c * m + i][v * m + p[i]] += 1;
                    }
                }
            }
        }
        let punctured = self
            .punctured
            .iter()
            .flat_map(|&v| (0..m).map(move |i| v * m + i))
            .collect();
        Protograph::new(format!("{}-x{m}-s{seed}", self.name), base, punctured)
    }
}
