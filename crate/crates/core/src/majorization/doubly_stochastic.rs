use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};

/// Entry floor accepted at construction.
const ENTRY_TOL: f64 = 1e-12;
/// Row/column-sum tolerance accepted at construction.
const SUM_TOL: f64 = 1e-10;

/// Bijection `i -> mapping[i]` of `0..n`; as a matrix, `Pi_ij = 1` iff `j = mapping[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PermutationMap(Vec<usize>);

impl PermutationMap {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &j in &mapping {
            if j >= n || seen[j] {
                return Err(Error::InvalidInput(format!(
                    "{mapping:?} is not a permutation of 0..{n}"
                )));
            }
            seen[j] = true;
        }
        Ok(Self(mapping))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Self(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }
}

impl TryFrom<Vec<usize>> for PermutationMap {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PermutationMap> for Vec<usize> {
    fn from(p: PermutationMap) -> Vec<usize> {
        p.0
    }
}

/// Nonnegative square matrix with unit row and column sums.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "Vec<Vec<f64>>")]
pub struct DoublyStochasticMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DoublyStochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(
                "doubly stochastic matrix must be square".into(),
            ));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry".into()));
        }
        let min = rows.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        if min < -ENTRY_TOL {
            return Err(Error::StructureViolation {
                kind: "doubly stochastic (negative entry)",
                residual: -min,
                tol: ENTRY_TOL,
            });
        }
        let residual = sum_residual(&rows);
        if residual > SUM_TOL {
            return Err(Error::StructureViolation {
                kind: "doubly stochastic",
                residual,
                tol: SUM_TOL,
            });
        }
        Ok(Self {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    pub fn from_permutation(p: &PermutationMap) -> Self {
        let n = p.len();
        let mut entries = vec![0.0; n * n];
        for (i, &j) in p.as_slice().iter().enumerate() {
            entries[i * n + j] = 1.0;
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// `P x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(dim_mismatch(self.n, x.len()));
        }
        Ok(self
            .entries
            .chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Largest deviation of a row or column sum from 1.
    pub fn row_sum_residual(&self) -> f64 {
        sum_residual(&self.to_rows())
    }
}

impl From<DoublyStochasticMatrix> for Vec<Vec<f64>> {
    fn from(m: DoublyStochasticMatrix) -> Self {
        m.to_rows()
    }
}

impl<'de> Deserialize<'de> for DoublyStochasticMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Self::new(rows).map_err(serde::de::Error::custom)
    }
}

fn sum_residual(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut r: f64 = 0.0;
    for row in rows {
        r = r.max((row.iter().sum::<f64>() - 1.0).abs());
    }
    for j in 0..n {
        r = r.max((rows.iter().map(|row| row[j]).sum::<f64>() - 1.0).abs());
    }
    r
}

/// `Pe = e`, `e'P = e'` and `P >= 0`, each to within `tol`.
pub fn is_doubly_stochastic(m: &[Vec<f64>], tol: f64) -> bool {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return false;
    }
    if m.iter().flatten().any(|&v| !v.is_finite() || v < -tol) {
        return false;
    }
    let e = vec![1.0; n];
    let pe: Vec<f64> = m
        .iter()
        .map(|row| row.iter().zip(&e).map(|(a, b)| a * b).sum())
        .collect();
    let ep: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| e[i] * m[i][j]).sum())
        .collect();
    pe.iter().chain(&ep).all(|s| (s - 1.0).abs() <= tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BirkhoffTerm {
    pub weight: f64,
    pub permutation: PermutationMap,
}

/// Greedy Birkhoff-von Neumann decomposition.
///
/// Each round finds a perfect matching inside the positive support of the
/// residual (augmenting paths, lowest index first), peels off the smallest
/// matched entry, and zeroes entries that fall below `tol`.
pub fn birkhoff_decompose(p: &DoublyStochasticMatrix, tol: f64) -> Result<Vec<BirkhoffTerm>> {
    let n = p.n();
    let mut residual = p.to_rows();
    for v in residual.iter_mut().flatten() {
        if *v <= tol {
            *v = 0.0;
        }
    }
    let mut terms = Vec::new();
    let cap = n * n + 1;
    while residual.iter().flatten().any(|&v| v > tol) {
        if terms.len() >= cap {
            return Err(Error::NoPerfectMatching {
                residual: residual.iter().flatten().sum(),
            });
        }
        let Some(matching) = perfect_matching(&residual) else {
            return Err(Error::NoPerfectMatching {
                residual: residual.iter().flatten().sum(),
            });
        };
        let weight = matching
            .iter()
            .enumerate()
            .map(|(i, &j)| residual[i][j])
            .fold(f64::INFINITY, f64::min);
        for (i, &j) in matching.iter().enumerate() {
            residual[i][j] -= weight;
            if residual[i][j] <= tol {
                residual[i][j] = 0.0;
            }
        }
        terms.push(BirkhoffTerm {
            weight,
            permutation: PermutationMap(matching),
        });
    }
    Ok(terms)
}

/// Row `i` -> column; `None` when the support graph has no perfect matching.
fn perfect_matching(m: &[Vec<f64>]) -> Option<Vec<usize>> {
    let n = m.len();
    let mut col_owner: Vec<Option<usize>> = vec![None; n];
    for row in 0..n {
        let mut visited = vec![false; n];
        if !augment(m, row, &mut visited, &mut col_owner) {
            return None;
        }
    }
    let mut out = vec![0; n];
    for (j, owner) in col_owner.iter().enumerate() {
        out[owner.expect("perfect")] = j;
    }
    Some(out)
}

fn augment(
    m: &[Vec<f64>],
    row: usize,
    visited: &mut [bool],
    col_owner: &mut [Option<usize>],
) -> bool {
    // a free column in the support wins before any reassignment
    if let Some(j) =
        (0..m.len()).find(|&j| m[row][j] > 0.0 && !visited[j] && col_owner[j].is_none())
    {
        visited[j] = true;
        col_owner[j] = Some(row);
        return true;
    }
    for j in 0..m.len() {
        if m[row][j] > 0.0 && !visited[j] {
            visited[j] = true;
            let free = match col_owner[j] {
                None => true,
                Some(other) => augment(m, other, visited, col_owner),
            };
            if free {
                col_owner[j] = Some(row);
                return true;
            }
        }
    }
    false
}
