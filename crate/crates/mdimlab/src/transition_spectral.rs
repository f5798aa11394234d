//! ε-cover transition matrices and bounds on their spectral radius.
//!
//! For a cover `U_1..U_M` of `[0,1]` the matrix has entry `(i, j) = 1` when
//! `T(U_i)` meets `U_j`. The log of its spectral radius bounds the ε-entropy
//! from above, and Gershgorin row / column sums bound the radius.
//!
//! Cover elements are relatively open in `[0,1]`: a cell that reaches 0 or 1
//! contains that endpoint. Mesh cells `[kε, (k+1)ε)` are the exception for
//! point images, which use half-open membership so that every point of
//! `[0,1]` lies in exactly one cell.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::IntervalMap;
use crate::util::cells_per_unit;

/// One cover element `(lo, hi)`, optionally containing its endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCell {
    pub lo: f64,
    pub hi: f64,
    pub closed_lo: bool,
    pub closed_hi: bool,
}

impl CoverCell {
    fn holds(&self, y: f64) -> bool {
        (self.lo < y || (self.closed_lo && y == self.lo)) && (y < self.hi || (self.closed_hi && y == self.hi))
    }

    /// Strict interior membership, relaxed only at 0 and 1.
    fn holds_open(&self, y: f64) -> bool {
        (self.lo < y || (y == 0.0 && self.lo == 0.0 && self.closed_lo))
            && (y < self.hi || (y == 1.0 && self.hi == 1.0 && self.closed_hi))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsCover {
    /// Sorted centers.
    pub centers: Vec<f64>,
    pub radius: f64,
    pub cells: Vec<CoverCell>,
}

impl EpsCover {
    /// Balls `(c - r, c + r)` intersected with `[0,1]`. A ball that stops
    /// exactly at 0 (or 1) takes that endpoint only if it is the outermost one,
    /// so the cover still reaches every point.
    pub fn from_balls(mut centers: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || centers.is_empty() {
            return Err(Error::InvalidInput("cover needs centers and a positive radius".into()));
        }
        if centers.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidInput("cover centers must lie in [0,1]".into()));
        }
        centers.sort_by(f64::total_cmp);
        let last = centers.len() - 1;
        let cells = centers
            .iter()
            .enumerate()
            .map(|(i, &c)| CoverCell {
                lo: (c - radius).max(0.0),
                hi: (c + radius).min(1.0),
                closed_lo: c - radius < 0.0 || (i == 0 && c - radius == 0.0),
                closed_hi: c + radius > 1.0 || (i == last && c + radius == 1.0),
            })
            .collect();
        Ok(Self { centers, radius, cells })
    }

    /// Mesh cells `[kε, (k+1)ε)`, the last clipped to `1` and closed there.
    pub fn mesh(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        let m = cells_per_unit(eps) as usize;
        let cells: Vec<CoverCell> = (0..m)
            .map(|k| CoverCell {
                lo: k as f64 * eps,
                hi: if k + 1 == m { 1.0 } else { (k + 1) as f64 * eps },
                closed_lo: true,
                closed_hi: k + 1 == m,
            })
            .collect();
        let centers = cells.iter().map(|c| 0.5 * (c.lo + c.hi)).collect();
        Ok(Self { centers, radius: 0.5 * eps, cells })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Indices of cells meeting the closed interval `[p, q]`; open overlap when `p < q`.
    fn overlapping(&self, p: f64, q: f64, out: &mut Vec<u32>) {
        // cells are sorted by lo and hi alike
        let start = self.cells.partition_point(|c| c.hi < p);
        for (j, c) in self.cells.iter().enumerate().skip(start) {
            if c.lo > q {
                break;
            }
            let hit = if p < q { p < c.hi && q > c.lo } else { c.holds(p) };
            if hit {
                out.push(j as u32);
            }
        }
    }
}

/// Greedy left-to-right ε-separated centers `{0, ε, 2ε, ...}` in `[0,1]`
/// with radius ε. For `ε >= 1` the cover is the single center 0.5.
pub fn build_cover(eps: f64) -> Result<EpsCover> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if eps >= 1.0 {
        return EpsCover::from_balls(vec![0.5], eps);
    }
    let mut centers = Vec::new();
    let mut k = 0u64;
    loop {
        let c = k as f64 * eps;
        if c > 1.0 + 1e-12 {
            break;
        }
        centers.push(if (c - 1.0).abs() <= 1e-12 { 1.0 } else { c });
        k += 1;
    }
    EpsCover::from_balls(centers, eps)
}

/// Sparse 0-1 matrix, one sorted column list per row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub size: usize,
    pub rows: Vec<Vec<u32>>,
    /// Built from exact images rather than samples.
    pub exact: bool,
}

impl TransitionMatrix {
    pub fn from_rows(rows: Vec<Vec<u32>>, exact: bool) -> Result<Self> {
        let size = rows.len();
        let mut rows = rows;
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            if r.last().is_some_and(|&j| j as usize >= size) {
                return Err(Error::InvalidInput("column index out of range".into()));
            }
        }
        Ok(Self { size, rows, exact })
    }

    pub fn dense(a: &[Vec<u8>]) -> Result<Self> {
        let rows = a
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &v)| v != 0).map(|(j, _)| j as u32).collect())
            .collect();
        Self::from_rows(rows, true)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.size];
        for (i, r) in self.rows.iter().enumerate() {
            for &j in r {
                rows[j as usize].push(i as u32);
            }
        }
        Self { size: self.size, rows, exact: self.exact }
    }

    /// True when every entry of `self` is an entry of `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.size == other.size
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.iter().all(|j| b.binary_search(j).is_ok()))
    }

    /// Coordinate list, 1-based, one `i j` per line, sorted.
    pub fn export<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            for &j in r {
                writeln!(w, "{} {}", i + 1, j + 1)?;
            }
        }
        Ok(())
    }

    fn mul(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&j| v[j as usize]).sum()).collect()
    }
}

/// Exact matrix from interval images of cover elements.
pub fn build_matrix_exact(map: &dyn IntervalMap, cover: &EpsCover) -> Result<TransitionMatrix> {
    let pw = map.piecewise().ok_or(Error::NoBreakpointOracle)?;
    let rows = cover
        .cells
        .par_iter()
        .map(|c| {
            let mut row = Vec::new();
            for (p, q) in pw.image(c.lo, c.hi) {
                cover.overlapping(p, q, &mut row);
            }
            row
        })
        .collect();
    TransitionMatrix::from_rows(rows, true)
}

/// Under-approximation from `samples_per_cell` interior samples of each cell.
pub fn build_matrix_sampled(map: &dyn IntervalMap, cover: &EpsCover, samples_per_cell: usize) -> Result<TransitionMatrix> {
    if samples_per_cell < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 samples per cell, got {samples_per_cell}")));
    }
    let rows = cover
        .cells
        .par_iter()
        .map(|c| {
            let mut row = Vec::new();
            for s in 0..samples_per_cell {
                let x = c.lo + (c.hi - c.lo) * ((s as f64 + 0.5) / samples_per_cell as f64);
                let y = map.apply(x);
                let start = cover.cells.partition_point(|d| d.hi < y);
                for (j, d) in cover.cells.iter().enumerate().skip(start) {
                    if d.lo > y {
                        break;
                    }
                    if d.holds_open(y) {
                        row.push(j as u32);
                    }
                }
            }
            row
        })
        .collect();
    TransitionMatrix::from_rows(rows, false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum BoundMethod {
    GershgorinRow,
    GershgorinCol,
    Knorm { k: usize },
    PowerIteration,
}

impl BoundMethod {
    pub fn name(&self) -> String {
        match self {
            Self::GershgorinRow => "gershgorin_row".into(),
            Self::GershgorinCol => "gershgorin_col".into(),
            Self::Knorm { k } => format!("knorm({k})"),
            Self::PowerIteration => "power_iteration".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralBound {
    #[serde(flatten)]
    pub method: BoundMethod,
    /// Bound or estimate on `log r`.
    pub value: f64,
    pub certified: bool,
    /// Power iteration only; true for the other methods.
    pub converged: bool,
    pub iterations: usize,
}

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;

fn log_max_sum(rows: impl Iterator<Item = usize>) -> f64 {
    (rows.max().unwrap_or(0) as f64).ln()
}

/// `(1/k) log ||A^k||` in the max-row-sum norm, by powering the all-ones
/// vector with rescaling at every step.
fn knorm(a: &TransitionMatrix, k: usize) -> f64 {
    let mut v = vec![1.0; a.size];
    let mut acc = 0.0;
    for _ in 0..k {
        let w = a.mul(&v);
        let s = w.iter().copied().fold(0.0, f64::max);
        if s == 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += s.ln();
        v = w.into_iter().map(|x| x / s).collect();
    }
    acc / k as f64
}

/// Dominant eigenvalue of `A` by L1-normalised iteration on `A + I`, which
/// keeps periodic matrices from oscillating. Converged once both the estimate
/// and the normalised vector stop moving.
fn power_iteration(a: &TransitionMatrix) -> (f64, bool, usize) {
    let n = a.size as f64;
    let mut v = vec![1.0 / n; a.size];
    let mut lam = f64::NAN;
    for it in 1..=POWER_MAX_ITER {
        let mut w = a.mul(&v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += vi;
        }
        let norm: f64 = w.iter().sum();
        let next = norm - 1.0;
        // successive estimates can agree by accident before the vector settles
        let mut moved = 0.0;
        for (vi, wi) in v.iter_mut().zip(w) {
            let x = wi / norm;
            moved += (x - *vi).abs();
            *vi = x;
        }
        if (next - lam).abs() <= POWER_TOL * next.abs().max(f64::MIN_POSITIVE) && moved <= POWER_TOL {
            return (next, true, it);
        }
        lam = next;
    }
    (lam, false, POWER_MAX_ITER)
}

pub fn bound(matrix: &TransitionMatrix, method: BoundMethod) -> Result<SpectralBound> {
    if matrix.size == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let (value, converged, iterations) = match method {
        BoundMethod::GershgorinRow => (log_max_sum(matrix.rows.iter().map(Vec::len)), true, 0),
        BoundMethod::GershgorinCol => {
            let mut col = vec![0usize; matrix.size];
            for r in &matrix.rows {
                for &j in r {
                    col[j as usize] += 1;
                }
            }
            (log_max_sum(col.into_iter()), true, 0)
        }
        BoundMethod::Knorm { k } => {
            if k == 0 {
                return Err(Error::InvalidInput("knorm needs k >= 1".into()));
            }
            (knorm(matrix, k), true, k)
        }
        BoundMethod::PowerIteration => {
            let (lam, conv, it) = power_iteration(matrix);
            (if lam > 0.0 { lam.ln() } else { f64::NEG_INFINITY }, conv, it)
        }
    };
    let certified = matrix.exact && (method != BoundMethod::PowerIteration || converged);
    Ok(SpectralBound { method, value, certified, converged, iterations })
}
