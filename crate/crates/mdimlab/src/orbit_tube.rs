//! Volume brackets for orbit tubes
//! `Y(T,n,ε) = ∪_x B_ε(x) × B_ε(Tx) × ... × B_ε(T^{n-1}x)` in `[0,1]^n`.
//!
//! The tube is bracketed by the mesh cells of side ε met by the orbit curve
//! `x -> (x, Tx, ..., T^{n-1}x)`: every such cell lies in the tube, and the tube
//! lies in the one-cell dilation of those cells. So with `N` cells,
//! `N ε^n <= Leb^n(Y) <= N (3ε)^n`.
//!
//! Cells are counted exactly by subdividing `[0,1]` at the pullbacks of the
//! map's breakpoints until every coordinate is affine, then walking the
//! mesh-line crossings of each straight piece of the curve. Once all known
//! coordinates of a piece sit in single cells, the rest of the curve only
//! depends on an interval of the next coordinate; those tail sets are
//! memoised, which keeps blocks much narrower than ε from exploding.

use std::rc::Rc;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{hull, IntervalMap, PiecewiseAffine};
use crate::util::{cells_per_unit, unit_cell, CellSet, MESH_SNAP};

pub const MAX_N: usize = 12;
pub const MIN_EPS: f64 = 1.0 / 1048576.0;
pub const CELL_BUDGET: usize = 1_000_000_000;
/// Largest horizon for which cell dumps are produced.
pub const DUMP_MAX_N: usize = 4;

const SPLIT_LIMIT: usize = 256;
const PRUNE_BOX: u64 = 4096;
/// Extra slack, in the curve parameter, when merging simultaneous crossings.
const TAU_MERGE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeBracket {
    pub n: usize,
    pub epsilon: f64,
    pub cell_count: u64,
    /// `log N + n log ε`
    pub lower_log: f64,
    /// `log N + n log 3ε`
    pub upper_log: f64,
    /// `(lower_log + upper_log) / 2`
    pub mid_log: f64,
    /// `1 + mid_log / (n log(1/ε))`
    pub estimate: f64,
    /// `log 3 / (2 log(1/ε))`
    pub uncertainty: f64,
}

impl TubeBracket {
    pub fn new(n: usize, epsilon: f64, cell_count: u64) -> Self {
        let lower_log = (cell_count as f64).ln() + n as f64 * epsilon.ln();
        let upper_log = lower_log + n as f64 * 3f64.ln();
        let mid_log = 0.5 * (lower_log + upper_log);
        let inv = (1.0 / epsilon).ln();
        Self {
            n,
            epsilon,
            cell_count,
            lower_log,
            upper_log,
            mid_log,
            estimate: 1.0 + mid_log / (n as f64 * inv),
            uncertainty: 3f64.ln() / (2.0 * inv),
        }
    }

    /// The bracket on `Leb^n(Y)` itself, clamped to the unit cube's volume.
    pub fn volume_bracket(&self) -> (f64, f64) {
        (self.lower_log.exp().min(1.0), self.upper_log.exp().min(1.0))
    }
}

fn check(n: usize, eps: f64) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(Error::InvalidInput(format!("horizon n must be in 1..={MAX_N}, got {n}")));
    }
    if !(eps >= MIN_EPS) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("eps must be at least 2^-20, got {eps}")));
    }
    Ok(())
}

/// A parameter interval of the curve on which coordinates `0..ends.len()`
/// are affine, stored by their values at the two ends.
struct Node {
    ends: Vec<(f64, f64)>,
}

/// Memoised tail sets, keyed by the exact start interval and the length.
type TailMemo = FxHashMap<(u64, u64, usize), Rc<Vec<Vec<u32>>>>;

struct Counter<'a> {
    pw: &'a dyn PiecewiseAffine,
    eps: f64,
    m: u64,
    memo: TailMemo,
}

/// Cells of one traversal: the curve over a start interval, `n` coordinates.
struct Sink {
    n: usize,
    set: CellSet,
}

impl Sink {
    fn insert(&mut self, idx: &[u32]) -> Result<()> {
        if self.set.insert(idx) && self.set.len() > CELL_BUDGET {
            return Err(Error::BudgetExceeded(format!(
                "more than {CELL_BUDGET} orbit cells at n={}; use a larger eps or a smaller n",
                self.n
            )));
        }
        Ok(())
    }
}

impl Counter<'_> {
    fn cell(&self, y: f64) -> u32 {
        unit_cell(y, self.eps, self.m)
    }

    fn traverse(&mut self, start: (f64, f64), sink: &mut Sink) -> Result<()> {
        let mut stack = vec![Node { ends: vec![start] }];
        while let Some(mut node) = stack.pop() {
            if self.settled(&node, sink)? || self.tail(&node, sink)? {
                continue;
            }
            self.extend(&mut node, sink.n);
            if node.ends.len() == sink.n {
                self.leaf(&node, sink)?;
            } else if !self.tail(&node, sink)? {
                self.split(node, &mut stack);
            }
        }
        Ok(())
    }

    /// Cell index ranges of the hull box; true when nothing new can come out of it.
    fn settled(&mut self, node: &Node, sink: &mut Sink) -> Result<bool> {
        let n = sink.n;
        let mut ranges: Vec<(u32, u32)> = Vec::with_capacity(n);
        let mut iv = (0.0, 0.0);
        for j in 0..n {
            iv = if j < node.ends.len() {
                let (a, b) = node.ends[j];
                (a.min(b), a.max(b))
            } else if iv.0 == iv.1 {
                let y = self.pw.apply(iv.0);
                (y, y)
            } else {
                hull(&self.pw.image(iv.0, iv.1))
            };
            ranges.push((self.cell(iv.0), self.cell(iv.1)));
        }
        if ranges.iter().all(|r| r.0 == r.1) {
            let idx: Vec<u32> = ranges.iter().map(|r| r.0).collect();
            sink.insert(&idx)?;
            return Ok(true);
        }
        let volume = ranges.iter().try_fold(1u64, |acc, r| acc.checked_mul((r.1 - r.0 + 1) as u64));
        if volume.is_some_and(|v| v <= PRUNE_BOX) {
            let mut idx: Vec<u32> = ranges.iter().map(|r| r.0).collect();
            loop {
                if !sink.set.contains(&idx) {
                    return Ok(false);
                }
                // odometer over the box
                let mut j = 0;
                while j < n && idx[j] == ranges[j].1 {
                    idx[j] = ranges[j].0;
                    j += 1;
                }
                if j == n {
                    return Ok(true);
                }
                idx[j] += 1;
            }
        }
        Ok(false)
    }

    /// When every known coordinate stays in one cell, the remaining
    /// coordinates only depend on the next one, which sweeps the image of the
    /// last known range. Their cells come from the memoised tail set.
    fn tail(&mut self, node: &Node, sink: &mut Sink) -> Result<bool> {
        let known = node.ends.len();
        if known >= sink.n {
            return Ok(false);
        }
        let mut prefix = Vec::with_capacity(sink.n);
        for &(a, b) in &node.ends {
            let c = self.cell(a);
            if c != self.cell(b) {
                return Ok(false);
            }
            prefix.push(c);
        }
        let (a, b) = *node.ends.last().unwrap();
        let pieces = if a == b {
            let y = self.pw.apply(a);
            vec![(y, y)]
        } else {
            self.pw.image(a.min(b), a.max(b))
        };
        for piece in pieces {
            let cells = self.tail_set(piece, sink.n - known)?;
            for t in cells.iter() {
                prefix.truncate(known);
                prefix.extend_from_slice(t);
                sink.insert(&prefix)?;
            }
        }
        Ok(true)
    }

    fn tail_set(&mut self, start: (f64, f64), len: usize) -> Result<Rc<Vec<Vec<u32>>>> {
        let key = (start.0.to_bits(), start.1.to_bits(), len);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let mut sub = Sink { n: len, set: CellSet::new(len, self.m) };
        self.traverse(start, &mut sub)?;
        let cells = Rc::new(sub.set.sorted_cells(len));
        self.memo.insert(key, cells.clone());
        Ok(cells)
    }

    /// Append coordinates while the last one stays clear of breakpoints.
    fn extend(&self, node: &mut Node, n: usize) {
        while node.ends.len() < n {
            let (a, b) = *node.ends.last().unwrap();
            let (lo, hi) = (a.min(b), a.max(b));
            if lo == hi {
                let y = self.pw.apply(a);
                node.ends.push((y, y));
                continue;
            }
            let (bps, _) = self.pw.breakpoints(lo, hi, 1);
            if !bps.is_empty() {
                return;
            }
            let f = self.pw.branch_at(0.5 * (lo + hi));
            node.ends.push((f.eval(a), f.eval(b)));
        }
    }

    /// Cut at the breakpoints inside the last coordinate's range.
    fn split(&self, node: Node, stack: &mut Vec<Node>) {
        let (a, b) = *node.ends.last().unwrap();
        let (bps, _) = self.pw.breakpoints(a.min(b), a.max(b), SPLIT_LIMIT);
        // fractions along the node, ascending
        let mut cuts: Vec<(f64, f64)> = bps.iter().map(|&y| ((y - a) / (b - a), y)).collect();
        if b < a {
            cuts.reverse();
        }
        let last = node.ends.len() - 1;
        let at = |s: f64, y: Option<f64>| -> Vec<f64> {
            let mut v: Vec<f64> = node.ends.iter().map(|&(p, q)| p + (q - p) * s).collect();
            if let Some(y) = y {
                v[last] = y;
            }
            v
        };
        let mut points = vec![(0.0, node.ends.iter().map(|e| e.0).collect::<Vec<_>>())];
        for &(s, y) in &cuts {
            if s > points.last().unwrap().0 && s < 1.0 {
                points.push((s, at(s, Some(y))));
            }
        }
        points.push((1.0, node.ends.iter().map(|e| e.1).collect()));
        for w in points.windows(2).rev() {
            let ends = w[0].1.iter().zip(&w[1].1).map(|(&p, &q)| (p, q)).collect();
            stack.push(Node { ends });
        }
    }

    /// Walk the mesh-line crossings of a straight piece of the curve.
    ///
    /// Crossings of different coordinates that coincide up to the mesh snap
    /// are taken as one corner crossing, so snapping never opens sliver cells.
    fn leaf(&mut self, node: &Node, sink: &mut Sink) -> Result<()> {
        // (tau, coordinate, line index, increasing, snap width in tau)
        let mut events: Vec<(f64, usize, u32, bool, f64)> = Vec::new();
        let mut idx: Vec<u32> = Vec::with_capacity(sink.n);
        for (j, &(a, b)) in node.ends.iter().enumerate() {
            let (ga, gb) = (self.cell(a), self.cell(b));
            idx.push(ga);
            let (g0, g1) = (ga.min(gb), ga.max(gb));
            let width = 2.0 * MESH_SNAP * self.eps / (b - a).abs();
            for k in g0 + 1..=g1 {
                let line = (k as f64 - MESH_SNAP) * self.eps;
                let tau = ((line - a) / (b - a)).clamp(0.0, 1.0);
                events.push((tau, j, k, b > a, width));
            }
        }
        sink.insert(&idx)?;
        events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut i = 0;
        while i < events.len() {
            let mut end = i + 1;
            let mut reach = events[i].0;
            let mut width = events[i].4;
            while end < events.len() && events[end].0 - reach <= width + events[end].4 + TAU_MERGE {
                reach = events[end].0;
                width = width.max(events[end].4);
                end += 1;
            }
            let mut after = idx.clone();
            for &(_, j, k, _, _) in &events[i..end] {
                idx[j] = k;
            }
            sink.insert(&idx)?;
            for &(_, j, k, up, _) in &events[i..end] {
                after[j] = if up { k } else { k - 1 };
            }
            if reach < 1.0 {
                sink.insert(&after)?;
            }
            idx = after;
            i = end;
        }
        Ok(())
    }
}

fn orbit_set(map: &dyn IntervalMap, n: usize, eps: f64) -> Result<CellSet> {
    check(n, eps)?;
    let pw = map.piecewise().ok_or(Error::NoBreakpointOracle)?;
    let m = cells_per_unit(eps);
    let mut c = Counter { pw, eps, m, memo: TailMemo::default() };
    let mut sink = Sink { n, set: CellSet::new(n, m) };
    c.traverse((0.0, 1.0), &mut sink)?;
    Ok(sink.set)
}

/// Number of mesh cells of side ε in `[0,1]^n` met by the orbit curve.
pub fn count_orbit_cells(map: &dyn IntervalMap, n: usize, eps: f64) -> Result<u64> {
    Ok(orbit_set(map, n, eps)?.len() as u64)
}

/// The occupied cells themselves, sorted; only for `n <= 4`.
pub fn orbit_cells(map: &dyn IntervalMap, n: usize, eps: f64) -> Result<Vec<Vec<u32>>> {
    if n > DUMP_MAX_N {
        return Err(Error::InvalidInput(format!("cell dumps are limited to n <= {DUMP_MAX_N}")));
    }
    Ok(orbit_set(map, n, eps)?.sorted_cells(n))
}

pub fn tube_bracket(map: &dyn IntervalMap, n: usize, eps: f64) -> Result<TubeBracket> {
    Ok(TubeBracket::new(n, eps, count_orbit_cells(map, n, eps)?))
}

/// Brackets and dimension estimates along a strictly decreasing ladder.
pub fn tube_estimates(map: &dyn IntervalMap, n: usize, eps_ladder: &[f64]) -> Result<Vec<TubeBracket>> {
    if eps_ladder.is_empty() || eps_ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("eps ladder must be nonempty and strictly decreasing".into()));
    }
    if eps_ladder[0] >= 1.0 {
        return Err(Error::InvalidInput("eps ladder must lie below 1".into()));
    }
    eps_ladder.iter().map(|&e| tube_bracket(map, n, e)).collect()
}
