//! Cover, separated and spanning counts, for point clouds and for Bowen
//! metrics `d_n(x, y) = max_{j<n} |T^j x - T^j y|` on `[0,1]`.
//!
//! Covers are counted with axis-aligned mesh cells of side ε anchored at 0.
//! This changes cover numbers by a dimension-dependent constant factor only.
//!
//! Bowen systems are sampled along a δ-chain: starting from 0, samples are
//! placed in increasing order so that consecutive samples are within δ in
//! `d_n` (and hence in `|x - y|`). A plain uniform δ-grid would stop resolving
//! the dynamics once `n` grows, since `T^{n-1}` stretches grid gaps by up to
//! `prod b`. Sampled counts only ever exhibit sets, so they bound the true
//! separated counts from below.

use std::collections::VecDeque;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::IntervalMap;
use crate::util::{cells_per_unit, ls_slope, mesh_index, unit_cell, CellSet, MESH_SNAP};

/// Slack on distance comparisons against ε.
pub const DIST_TOL: f64 = 1e-12;

fn tol(eps: f64) -> f64 {
    DIST_TOL * eps.max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Sup,
}

/// A finite set of points in `R^D`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    pub metric: Metric,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, metric: Metric) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if points.is_empty() || dim == 0 {
            return Err(Error::InvalidInput("point cloud is empty".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidInput("points differ in dimension".into()));
        }
        let coords: Vec<f64> = points.into_iter().flatten().collect();
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        Ok(Self { dim, coords, metric })
    }

    /// One-dimensional cloud.
    pub fn line(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), Metric::Sup)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.metric {
            Metric::Sup => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        }
    }

    /// Every coordinate multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { dim: self.dim, coords: self.coords.iter().map(|c| c * s).collect(), metric: self.metric }
    }

    /// Per-axis maximum, used for clamping onto the last mesh cell.
    pub(crate) fn upper_edge(&self) -> Vec<f64> {
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for (h, &c) in hi.iter_mut().zip(p) {
                *h = h.max(c);
            }
        }
        hi
    }

    /// Scan order for greedy selection: ascending in 1-D, input order otherwise.
    fn scan_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        if self.dim == 1 {
            idx.sort_by(|&a, &b| self.coords[a].total_cmp(&self.coords[b]));
        }
        idx
    }
}

/// Left endpoints of the `2^depth` intervals of the middle-thirds construction.
pub fn cantor_left_endpoints(depth: u32) -> PointCloud {
    let mut xs = vec![0.0f64];
    for level in 1..=depth {
        let shift = 2.0 * 3f64.powi(-(level as i32));
        let n = xs.len();
        for i in 0..n {
            xs.push(xs[i] + shift);
        }
    }
    xs.sort_by(f64::total_cmp);
    PointCloud::line(&xs).unwrap()
}

/// `{ i/m : 0 <= i <= m }`.
pub fn dyadic_grid(m: usize) -> PointCloud {
    let xs: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    PointCloud::line(&xs).unwrap()
}

/// Index of the mesh cell holding `c`; a coordinate sitting exactly on the
/// cloud's upper edge and on a mesh line goes to the cell below, so that the
/// right end of `[0,1]` does not open a phantom cell.
pub(crate) fn cloud_cell(c: f64, edge: f64, eps: f64) -> i64 {
    let i = mesh_index(c, eps);
    if c == edge && i > 0 && (c / eps - i as f64).abs() <= MESH_SNAP {
        i - 1
    } else {
        i
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("eps must be positive, got {eps}")))
    }
}

/// Greedy maximal ε-separated subset (pairwise distance `>= ε`); returns its size.
pub fn greedy_separated_count(cloud: &PointCloud, eps: f64) -> Result<usize> {
    check_eps(eps)?;
    let t = tol(eps);
    Ok(greedy(cloud, |d| d < eps - t))
}

/// Greedy ε-spanning subset: a point is kept only when no kept point lies within
/// distance `ε`. The greedy separated set also spans, so the smaller of the two
/// sizes is returned.
pub fn spanning_count(cloud: &PointCloud, eps: f64) -> Result<usize> {
    check_eps(eps)?;
    let t = tol(eps);
    let span = greedy(cloud, |d| d <= eps + t);
    Ok(span.min(greedy(cloud, |d| d < eps - t)))
}

fn greedy(cloud: &PointCloud, conflict: impl Fn(f64) -> bool) -> usize {
    let mut kept: Vec<usize> = Vec::new();
    for i in cloud.scan_order() {
        let p = cloud.point(i);
        if !kept.iter().rev().any(|&j| conflict(cloud.dist(p, cloud.point(j)))) {
            kept.push(i);
        }
    }
    kept.len()
}

/// Number of occupied mesh cells of side ε.
pub fn mesh_cover_count(cloud: &PointCloud, eps: f64) -> Result<usize> {
    check_eps(eps)?;
    let edge = cloud.upper_edge();
    let mut set: rustc_hash::FxHashSet<Vec<i64>> = Default::default();
    for p in cloud.points() {
        set.insert(p.iter().zip(&edge).map(|(&c, &e)| cloud_cell(c, e, eps)).collect());
    }
    Ok(set.len())
}

/// A map with a time horizon and a sampling resolution.
#[derive(Clone, Copy)]
pub struct BowenSystem<'a> {
    pub map: &'a dyn IntervalMap,
    pub n: usize,
    pub delta: f64,
}

impl<'a> BowenSystem<'a> {
    pub fn new(map: &'a dyn IntervalMap, n: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("time horizon n must be at least 1".into()));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidInput(format!("grid resolution must be positive, got {delta}")));
        }
        Ok(Self { map, n, delta })
    }

    pub fn orbit_into(&self, x: f64, out: &mut [f64]) {
        let mut y = x;
        for slot in out.iter_mut().take(self.n) {
            *slot = y;
            y = self.map.apply(y);
        }
    }

    pub fn orbit(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.orbit_into(x, &mut out);
        out
    }
}

/// `d_n(x, y)`.
pub fn bowen_distance(sys: &BowenSystem, x: f64, y: f64) -> f64 {
    let (mut a, mut b) = (x, y);
    let mut d: f64 = 0.0;
    for _ in 0..sys.n {
        d = d.max((a - b).abs());
        a = sys.map.apply(a);
        b = sys.map.apply(b);
    }
    d
}

const MIN_STEP: f64 = 1e-15;
/// Steps never shrink below `δ * STEP_FLOOR`. Maps with unbounded slope (the
/// horseshoe presets near 1) would otherwise need unboundedly many samples;
/// the zigzag on 3 branches stays an honest chain up to n = 13.
const STEP_FLOOR: f64 = 1e-6;

/// Visit a δ-chain of `[0,1]` in increasing order: `x_0 = 0`, the last sample
/// is 1, and consecutive samples are within δ in `d_n` wherever this takes
/// steps of at least `δ * 1e-6` (jumps of discontinuous maps and very steep
/// stretches are crossed at that floor). Returns the number of samples.
pub fn for_each_chain_sample(sys: &BowenSystem, mut visit: impl FnMut(f64, &[f64])) -> u64 {
    let delta = sys.delta;
    let n = sys.n;
    let mut cur = vec![0.0; n];
    // candidates are evaluated CHAIN_BATCH at a time, coordinate-major, so the
    // independent orbits overlap in the pipeline
    let mut rows = vec![0.0; CHAIN_BATCH * n];
    let mut cands = [0.0; CHAIN_BATCH];
    let mut x = 0.0f64;
    sys.orbit_into(x, &mut cur);
    visit(x, &cur);
    let mut count = 1u64;
    let mut h = delta;
    let floor = (delta * STEP_FLOOR).max(MIN_STEP);
    while x < 1.0 {
        let mut m = 0;
        let mut c = x;
        while m < CHAIN_BATCH {
            c = if c + h >= 1.0 { 1.0 } else { c + h };
            cands[m] = c;
            m += 1;
            if c == 1.0 {
                break;
            }
        }
        rows[..m].copy_from_slice(&cands[..m]);
        for j in 1..n {
            let (done, rest) = rows.split_at_mut(j * CHAIN_BATCH);
            let row = &mut rest[..m];
            row.copy_from_slice(&done[(j - 1) * CHAIN_BATCH..(j - 1) * CHAIN_BATCH + m]);
            sys.map.apply_batch(row);
        }
        // step distances, as if every candidate were accepted
        let mut steps = [0.0f64; CHAIN_BATCH];
        for (row, &prev) in rows.chunks_exact(CHAIN_BATCH).zip(&cur) {
            let e = (row[0] - prev).abs();
            if e > steps[0] {
                steps[0] = e;
            }
            for p in 1..m {
                let e = (row[p] - row[p - 1]).abs();
                if e > steps[p] {
                    steps[p] = e;
                }
            }
        }
        let mut dmax: f64 = 0.0;
        let mut failed = None;
        for p in 0..m {
            let d = steps[p];
            if d <= delta || h <= floor {
                for (c, row) in cur.iter_mut().zip(rows.chunks_exact(CHAIN_BATCH)) {
                    *c = row[p];
                }
                visit(cands[p], &cur);
                count += 1;
                x = cands[p];
                if d > dmax {
                    dmax = d;
                }
            } else {
                failed = Some(d);
                break;
            }
        }
        h = match failed {
            Some(d) => (h * (0.9 * delta / d).max(0.1)).max(floor),
            None => {
                let grow = if dmax > 0.0 { (0.9 * delta / dmax).min(4.0) } else { 4.0 };
                (h * grow.max(1.0)).min(delta)
            }
        };
    }
    count
}

const CHAIN_BATCH: usize = 32;

/// Streaming greedy selection over samples arriving in increasing x.
/// Kept points are bucketed by the cells of their last few coordinates; only
/// points whose x lies within ε of the new sample can conflict, since
/// `d_n >= |x - y|`.
const KEY_DIMS: usize = 4;

struct StreamGreedy {
    eps: f64,
    threshold: f64,
    strict: bool,
    n: usize,
    bucket_width: f64,
    kept_x: Vec<f64>,
    kept: Vec<f64>,
    buckets: FxHashMap<[u32; KEY_DIMS], VecDeque<u32>>,
    last_hit: Option<u32>,
}

impl StreamGreedy {
    fn new(n: usize, eps: f64, separated: bool) -> Self {
        let t = tol(eps);
        let bucket_width = eps * (1.0 + 1e-9) + 2.0 * t;
        Self {
            eps,
            threshold: if separated { eps - t } else { eps + t },
            strict: separated,
            n,
            bucket_width,
            kept_x: Vec::new(),
            kept: Vec::new(),
            buckets: FxHashMap::default(),
            last_hit: None,
        }
    }

    fn conflicts(&self, j: u32, orbit: &[f64]) -> bool {
        let p = &self.kept[j as usize * self.n..(j as usize + 1) * self.n];
        if self.strict {
            p.iter().zip(orbit).all(|(a, b)| (a - b).abs() < self.threshold)
        } else {
            p.iter().zip(orbit).all(|(a, b)| (a - b).abs() <= self.threshold)
        }
    }

    fn cell(&self, y: f64) -> u32 {
        // offset by one so the neighbour below cell 0 exists
        (y / self.bucket_width).floor().clamp(0.0, 1e9) as u32 + 1
    }

    fn key(&self, orbit: &[f64]) -> [u32; KEY_DIMS] {
        let mut k = [1u32; KEY_DIMS];
        for (i, c) in k.iter_mut().enumerate().take(self.n) {
            *c = self.cell(orbit[self.n - 1 - i]);
        }
        k
    }

    fn offer(&mut self, x: f64, orbit: &[f64]) {
        if let Some(j) = self.last_hit {
            if self.conflicts(j, orbit) {
                return;
            }
        }
        let horizon = x - self.eps - 2.0 * tol(self.eps);
        let key = self.key(orbit);
        let used = self.n.min(KEY_DIMS);
        let mut nb = key;
        for code in 0..3usize.pow(used as u32) {
            let mut c = code;
            for (i, v) in nb.iter_mut().enumerate().take(used) {
                *v = key[i] + (c % 3) as u32 - 1;
                c /= 3;
            }
            let Some(q) = self.buckets.get_mut(&nb) else { continue };
            while let Some(&front) = q.front() {
                if self.kept_x[front as usize] < horizon {
                    q.pop_front();
                } else {
                    break;
                }
            }
            let q = &self.buckets[&nb];
            for &j in q.iter().rev() {
                if self.conflicts(j, orbit) {
                    self.last_hit = Some(j);
                    return;
                }
            }
        }
        let id = self.kept_x.len() as u32;
        self.kept_x.push(x);
        self.kept.extend_from_slice(orbit);
        self.buckets.entry(key).or_default().push_back(id);
        self.last_hit = Some(id);
    }

    fn count(&self) -> u64 {
        self.kept_x.len() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    Separated,
    Spanning,
    Cover,
}

impl std::str::FromStr for CountMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "separated" => Ok(Self::Separated),
            "spanning" => Ok(Self::Spanning),
            "cover" => Ok(Self::Cover),
            _ => Err(Error::InvalidInput(format!("unknown count method {s}"))),
        }
    }
}

/// Running count for one `(n, ε)` fed with chain samples.
enum Tally {
    Trivial,
    Separated(StreamGreedy),
    Spanning(StreamGreedy, StreamGreedy),
    Cover { set: CellSet, idx: Vec<u32>, eps: f64, m: u64 },
}

impl Tally {
    fn new(n: usize, eps: f64, method: CountMethod) -> Self {
        if eps > 1.0 {
            // every pair is closer than ε
            return Self::Trivial;
        }
        match method {
            CountMethod::Separated => Self::Separated(StreamGreedy::new(n, eps, true)),
            CountMethod::Spanning => Self::Spanning(StreamGreedy::new(n, eps, true), StreamGreedy::new(n, eps, false)),
            CountMethod::Cover => {
                let m = cells_per_unit(eps);
                Self::Cover { set: CellSet::new(n, m), idx: vec![0; n], eps, m }
            }
        }
    }

    /// `orbit` may be longer than the tally's horizon; only its prefix is used.
    fn offer(&mut self, x: f64, orbit: &[f64]) {
        match self {
            Self::Trivial => {}
            Self::Separated(g) => g.offer(x, &orbit[..g.n]),
            Self::Spanning(sep, span) => {
                sep.offer(x, &orbit[..sep.n]);
                span.offer(x, &orbit[..span.n]);
            }
            Self::Cover { set, idx, eps, m } => {
                for (slot, &y) in idx.iter_mut().zip(orbit) {
                    *slot = unit_cell(y, *eps, *m);
                }
                set.insert(idx);
            }
        }
    }

    fn count(&self) -> u64 {
        match self {
            Self::Trivial => 1,
            Self::Separated(g) => g.count(),
            Self::Spanning(sep, span) => sep.count().min(span.count()),
            Self::Cover { set, .. } => set.len() as u64,
        }
    }
}

/// Count for one `(n, ε)` over the δ-chain of the system.
pub fn bowen_count(sys: &BowenSystem, eps: f64, method: CountMethod) -> Result<u64> {
    check_eps(eps)?;
    let mut t = Tally::new(sys.n, eps, method);
    if !matches!(t, Tally::Trivial) {
        for_each_chain_sample(sys, |x, o| t.offer(x, o));
    }
    Ok(t.count())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub epsilon: f64,
    /// Largest horizon, `n_max`.
    pub n: usize,
    /// Count at `n_max`.
    pub count: u64,
    pub h_eps: f64,
    /// `h_eps / log(1/ε)`.
    pub ratio: f64,
    /// Counts for `n = 1..=n_max`.
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyLadder {
    pub rows: Vec<LadderRow>,
    pub method: CountMethod,
    pub n_max: usize,
    pub delta: f64,
}

/// ε-entropy estimates: for each ε, counts at `n = 1..=n_max` and the
/// least-squares slope of `log count` over the last `ceil(n_max/2)` horizons.
pub fn entropy_ladder(
    map: &dyn IntervalMap,
    eps_ladder: &[f64],
    n_max: usize,
    delta: f64,
    method: CountMethod,
) -> Result<EntropyLadder> {
    if eps_ladder.is_empty() {
        return Err(Error::InvalidInput("empty eps ladder".into()));
    }
    for &e in eps_ladder {
        check_eps(e)?;
    }
    if eps_ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("eps ladder must be strictly decreasing".into()));
    }
    if n_max < 4 {
        return Err(Error::InvalidInput(format!("n_max must be at least 4, got {n_max}")));
    }
    let min_eps = *eps_ladder.last().unwrap();
    let required = min_eps / 10.0;
    if !(delta > 0.0) || delta > required * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse { delta, eps: min_eps, required });
    }
    let jobs: Vec<(usize, usize)> = (0..eps_ladder.len()).flat_map(|i| (1..=n_max).map(move |n| (i, n))).collect();
    let counts: Vec<u64> = jobs
        .par_iter()
        .map(|&(i, n)| {
            let sys = BowenSystem { map, n, delta };
            bowen_count(&sys, eps_ladder[i], method)
        })
        .collect::<Result<_>>()?;
    let half = n_max.div_ceil(2);
    let rows = eps_ladder
        .iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let row_counts = counts[i * n_max..(i + 1) * n_max].to_vec();
            let xs: Vec<f64> = ((n_max - half + 1)..=n_max).map(|n| n as f64).collect();
            let ys: Vec<f64> = row_counts[n_max - half..].iter().map(|&c| (c as f64).ln()).collect();
            let h_eps = ls_slope(&xs, &ys);
            let ratio = if h_eps == 0.0 || epsilon >= 1.0 { 0.0 } else { h_eps / (1.0 / epsilon).ln() };
            LadderRow { epsilon, n: n_max, count: row_counts[n_max - 1], h_eps, ratio, counts: row_counts }
        })
        .collect();
    Ok(EntropyLadder { rows, method, n_max, delta })
}
