//! The horseshoe map `T_{a,b}`.
//!
//! On each block `J_k = [a_{k-1}, a_k]` the map is a zigzag with `b_k` equal
//! full branches, rising on even (0-based) branches and falling on odd ones;
//! `T(1) = 1`. Point location uses right-open blocks `[a_{k-1}, a_k)`.
//!
//! Precision: for blocks with `|J_k| < 1e-9` the branch-local coordinate loses
//! up to `1e-6` relative accuracy, since `a_{k-1}` sits next to the accumulation
//! point 1. Blocks whose branch width falls below a few ulps are treated as
//! unresolved; the map still returns a point of the right block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{Affine, IntervalMap, PiecewiseAffine};
use crate::params::{validate, ParameterSpec};
use crate::util::tail_window;

#[derive(Clone, Debug)]
pub struct HorseshoeMap {
    spec: ParameterSpec,
    /// `a_0..a_n` for explicit lists.
    prefix: Option<Vec<f64>>,
    /// The leading blocks and their boundaries `a_0..a_K`, precomputed.
    blocks: Vec<Block>,
    bounds: Vec<f64>,
}

/// Rule-based maps keep at most this many leading blocks precomputed.
const BLOCK_CACHE: usize = 256;

/// Parity of a branch index held as a float; `%` on floats goes through fmod.
const FLOOR_LIMIT: f64 = 2251799813685248.0; // 2^51

/// `floor` for `0 <= v < 2^51` by rounding through 2^52, free of libm calls.
#[inline(always)]
fn floor_small(v: f64) -> f64 {
    const BIG: f64 = 4503599627370496.0;
    let r = (v + BIG) - BIG;
    if r > v {
        r - 1.0
    } else {
        r
    }
}

/// `step` for a map with one block `[0,1)`, with the same arithmetic but no
/// per-point dispatch, so the loop vectorizes.
#[inline(always)]
fn single_block_batch(blk: Block, xs: &mut [f64]) {
    let (lo, w, b) = (blk.lo, blk.width, blk.b);
    let top = b - 1.0;
    for x in xs {
        let v = *x;
        let u = if v > 0.0 { v } else { 0.0 };
        let t = (u - lo) / w;
        let t = if t < 0.0 {
            0.0
        } else if t > 1.0 {
            1.0
        } else {
            t
        };
        let bt = b * t;
        let i = floor_small(bt);
        let i = if i > top { top } else { i };
        let odd = i - 2.0 * floor_small(0.5 * i);
        let f = if odd != 0.0 { i + 1.0 - bt } else { bt - i };
        *x = if v >= 1.0 { 1.0 } else { lo + w * f };
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn single_block_batch_avx2(blk: Block, xs: &mut [f64]) {
    single_block_batch(blk, xs)
}

fn even(i: f64) -> bool {
    if i < 9.0e15 {
        (i as u64) & 1 == 0
    } else {
        i % 2.0 == 0.0
    }
}

#[derive(Clone, Copy, Debug)]
struct Block {
    lo: f64,
    width: f64,
    /// branch count as a float
    b: f64,
}

impl Block {
    /// Branch width is resolvable in double precision.
    fn resolved(&self) -> bool {
        self.width > 0.0 && self.b.is_finite() && self.b < 9.0e15 && self.width / self.b > 8.0 * f64::EPSILON
    }

    fn branch_of(&self, t: f64) -> f64 {
        let bt = self.b * t;
        // truncation is floor for bt >= 0 and avoids a libm call
        let i = if bt < 9.0e15 { (bt as u64) as f64 } else { bt.floor() };
        i.clamp(0.0, self.b - 1.0)
    }

    /// Zigzag profile on `[0,1]` evaluated in branch `i`.
    fn profile(&self, t: f64, i: f64) -> f64 {
        let bt = self.b * t;
        if even(i) {
            bt - i
        } else {
            i + 1.0 - bt
        }
    }

    #[inline(always)]
    fn eval(&self, x: f64) -> f64 {
        if !(self.width > 0.0) || !self.b.is_finite() {
            return x;
        }
        let t = ((x - self.lo) / self.width).clamp(0.0, 1.0);
        let f = self.profile(t, self.branch_of(t));
        self.lo + self.width * f
    }

    /// Hull of the image of `[u, v]` (both inside the block).
    fn image(&self, u: f64, v: f64) -> (f64, f64) {
        let full = (self.lo, self.lo + self.width);
        if !self.resolved() {
            return full;
        }
        let tu = ((u - self.lo) / self.width).clamp(0.0, 1.0);
        let tv = ((v - self.lo) / self.width).clamp(0.0, 1.0);
        let iu = self.branch_of(tu);
        let iv = self.branch_of(tv);
        if iv - iu >= 2.0 {
            return full;
        }
        let fu = self.profile(tu, iu);
        let fv = self.profile(tv, iv);
        let mut lo = fu.min(fv);
        let mut hi = fu.max(fv);
        if iv > iu {
            if even(iu) {
                hi = 1.0;
            } else {
                lo = 0.0;
            }
        }
        (self.lo + self.width * lo.clamp(0.0, 1.0), self.lo + self.width * hi.clamp(0.0, 1.0))
    }
}

/// A cylinder `J_s(i_1, ..., i_n)`: points of `J_s` whose first `n` iterates
/// visit the branches `i_1, ..., i_n` (1-based letters).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub s: usize,
    pub word: Vec<u64>,
    pub endpoints: (f64, f64),
}

impl Cylinder {
    pub fn length(&self) -> f64 {
        self.endpoints.1 - self.endpoints.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdimReport {
    /// Tail-window max of the ratio sequence.
    pub upper: f64,
    /// Tail-window min of the ratio sequence.
    pub lower: f64,
    /// `log b_k / log(1/ε_k)` for `k = 1..=k_max`.
    pub ratio_k: Vec<f64>,
    /// `1 - upper`.
    pub holder_sup: f64,
    pub k_max: usize,
    /// First index (1-based) of the tail window.
    pub window_start: usize,
}

impl HorseshoeMap {
    /// Validates the specification first.
    pub fn new(spec: ParameterSpec) -> Result<Self> {
        let report = validate(&spec)?;
        if !report.is_valid() {
            return Err(Error::Validation(report));
        }
        let prefix = spec.len().map(|n| {
            let mut p = Vec::with_capacity(n + 1);
            p.push(0.0);
            let mut acc = 0.0;
            for k in 1..=n {
                acc += spec.gap(k).unwrap();
                p.push(acc);
            }
            // a list that sums to 1 up to rounding covers the whole interval
            if (acc - 1.0).abs() <= 1e-12 {
                p[n] = 1.0;
            }
            p
        });
        let mut m = Self { spec, prefix, blocks: Vec::new(), bounds: Vec::new() };
        let k_max = m.spec.len().unwrap_or(BLOCK_CACHE);
        let mut bounds = vec![0.0];
        let mut blocks = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            blocks.push(m.block(k));
            let a = m.boundary(k);
            bounds.push(a);
            if a >= 1.0 {
                break;
            }
        }
        m.blocks = blocks;
        m.bounds = bounds;
        Ok(m)
    }

    /// The 3-branch zigzag: a single block with three branches.
    pub fn zigzag(b: u64) -> Result<Self> {
        Self::new(ParameterSpec::explicit(vec![1.0], vec![b]))
    }

    pub fn spec(&self) -> &ParameterSpec {
        &self.spec
    }

    /// `a_k`.
    pub fn boundary(&self, k: usize) -> f64 {
        match &self.prefix {
            Some(p) => p[k.min(p.len() - 1)],
            None => self.spec.boundary(k),
        }
    }

    /// End of the region covered by blocks (1 unless an explicit list stops short).
    fn covered(&self) -> f64 {
        match &self.prefix {
            Some(p) => *p.last().unwrap(),
            None => 1.0,
        }
    }

    fn block(&self, k: usize) -> Block {
        if let Some(b) = self.blocks.get(k.wrapping_sub(1)) {
            return *b;
        }
        Block {
            lo: self.boundary(k - 1),
            width: self.spec.gap(k).unwrap_or(0.0),
            b: self.spec.branches_f64(k).unwrap_or(f64::INFINITY),
        }
    }

    /// Block index of `x` under the right-open convention, `None` at 1 or
    /// beyond the covered region.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x < self.covered()) {
            return None;
        }
        match &self.prefix {
            Some(p) => Some(p[1..].partition_point(|&a| a <= x) + 1),
            None => {
                let cached = self.bounds.len() - 1;
                if x < self.bounds[cached] {
                    return Some(self.bounds[1..].partition_point(|&a| a <= x) + 1);
                }
                // gallop, then bisect for the smallest k with a_k > x
                let mut lo = cached;
                let mut hi = cached.max(1) * 2;
                while self.spec.boundary(hi) <= x {
                    lo = hi;
                    hi *= 2;
                    if hi > 1 << 60 {
                        return None;
                    }
                }
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if self.spec.boundary(mid) <= x {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(hi)
            }
        }
    }

    /// `T(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(x));
        }
        if x == 1.0 {
            return Ok(1.0);
        }
        match self.locate(x) {
            Some(k) => Ok(self.block(k).eval(x)),
            None => {
                let len = self.spec.len().unwrap_or(0);
                Err(Error::OutOfRange { k: len + 1, len })
            }
        }
    }

    /// `[x, T x, ..., T^{n-1} x]`.
    pub fn orbit(&self, x: f64, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        let mut y = x;
        for _ in 0..n {
            out.push(y);
            y = self.eval(y)?;
        }
        Ok(out)
    }

    /// Endpoints of `J_s(i_1..i_n)` by pulling `J_s` back through the branches.
    pub fn cylinder(&self, s: usize, word: &[u64]) -> Result<Cylinder> {
        let b = self.spec.branches(s)?;
        let width = self.spec.gap(s)?;
        let lo = self.boundary(s - 1);
        if let Some(&bad) = word.iter().find(|&&i| i == 0 || i > b) {
            return Err(Error::InvalidInput(format!("letter {bad} outside 1..={b}")));
        }
        let bf = b as f64;
        let (mut p, mut q) = (0.0f64, 1.0f64);
        for &letter in word.iter().rev() {
            let i = (letter - 1) as f64;
            if (letter - 1) % 2 == 0 {
                (p, q) = ((i + p) / bf, (i + q) / bf);
            } else {
                (p, q) = ((i + 1.0 - q) / bf, (i + 1.0 - p) / bf);
            }
        }
        Ok(Cylinder { s, word: word.to_vec(), endpoints: (lo + width * p, lo + width * q) })
    }

    /// Maximal distortion `H_k(α) = |J_k| / ε_k^α = b_k^α |J_k|^{1-α}`.
    pub fn holder_constant(&self, k: usize, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0,1), got {alpha}")));
        }
        Ok((alpha * self.spec.log_branches(k)? + (1.0 - alpha) * self.spec.log_gap(k)?).exp())
    }

    /// Closed-form metric mean dimension: tail-window extremes of
    /// `log b_k / log(1/ε_k)` over `k = 1..=k_max`.
    pub fn mdim_formula(&self, k_max: usize) -> Result<MdimReport> {
        if k_max < 10 {
            return Err(Error::InvalidInput(format!("k_max must be at least 10 for the tail window, got {k_max}")));
        }
        if let Some(len) = self.spec.len() {
            if k_max > len {
                return Err(Error::OutOfRange { k: k_max, len });
            }
        }
        let mut ratio_k = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let lb = self.spec.log_branches(k)?;
            let denom = lb - self.spec.log_gap(k)?;
            ratio_k.push(if denom > 0.0 { lb / denom } else { 0.0 });
        }
        let w = tail_window(k_max);
        let tail = &ratio_k[w.clone()];
        let upper = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lower = tail.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(MdimReport { upper, lower, holder_sup: 1.0 - upper, ratio_k, k_max, window_start: w.start + 1 })
    }
}

impl IntervalMap for HorseshoeMap {
    /// Total version of [`HorseshoeMap::eval`]: clamps to `[0,1]` and acts as
    /// the identity on any part of `[0,1)` not covered by an explicit list.
    fn apply(&self, x: f64) -> f64 {
        self.step(x)
    }

    fn apply_batch(&self, xs: &mut [f64]) {
        match self.single_block() {
            Some(blk) => {
                #[cfg(target_arch = "x86_64")]
                if std::arch::is_x86_feature_detected!("avx2") {
                    // SAFETY: the feature was detected at runtime
                    unsafe { single_block_batch_avx2(blk, xs) };
                    return;
                }
                single_block_batch(blk, xs);
            }
            None => {
                for x in xs {
                    *x = self.step(*x);
                }
            }
        }
    }

    fn piecewise(&self) -> Option<&dyn PiecewiseAffine> {
        Some(self)
    }
}

impl HorseshoeMap {
    /// The only block, when it covers `[0,1)` with a moderate branch count.
    fn single_block(&self) -> Option<Block> {
        let blk = *self.blocks.first()?;
        let ok = self.bounds.len() == 2 && blk.lo == 0.0 && self.bounds[1] == 1.0;
        (ok && blk.width > 0.0 && blk.b < FLOOR_LIMIT).then_some(blk)
    }

    #[inline(always)]
    fn step(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 1.0;
        }
        let x = x.max(0.0);
        if self.bounds.len() == 2 && x < self.bounds[1] {
            return self.blocks[0].eval(x);
        }
        match self.locate(x) {
            Some(k) => self.block(k).eval(x),
            None => x,
        }
    }
}

impl PiecewiseAffine for HorseshoeMap {
    fn breakpoints(&self, lo: f64, hi: f64, limit: usize) -> (Vec<f64>, bool) {
        let mut out: Vec<f64> = Vec::new();
        if !(lo < hi) || limit == 0 {
            return (out, false);
        }
        let Some(mut k) = self.locate(lo.max(0.0)) else {
            return (out, false);
        };
        let covered = self.covered();
        let push = |out: &mut Vec<f64>, pos: f64| -> Option<bool> {
            if pos >= hi {
                return Some(false);
            }
            if pos > lo && out.last().map_or(true, |&l| pos > l) {
                out.push(pos);
                if out.len() >= limit {
                    return Some(true);
                }
            }
            None
        };
        loop {
            let blk = self.block(k);
            if blk.resolved() {
                let start = blk.branch_of(((lo - blk.lo) / blk.width).clamp(0.0, 1.0)) as u64 + 1;
                let b = blk.b as u64;
                for i in start..b {
                    let pos = blk.lo + blk.width * (i as f64 / blk.b);
                    if let Some(more) = push(&mut out, pos) {
                        return (out, more);
                    }
                }
            }
            let end = self.boundary(k);
            if end >= 1.0 {
                return (out, false);
            }
            if let Some(more) = push(&mut out, end) {
                return (out, more);
            }
            if end >= covered {
                // identity tail of a short explicit list
                return (out, false);
            }
            k += 1;
        }
    }

    fn branch_at(&self, x: f64) -> Affine {
        let identity = Affine { x0: 0.0, y0: 0.0, slope: 1.0 };
        let Some(k) = self.locate(x.clamp(0.0, 1.0)) else {
            return identity;
        };
        let blk = self.block(k);
        if !blk.resolved() {
            return Affine { x0: x, y0: blk.eval(x), slope: 0.0 };
        }
        let t = ((x - blk.lo) / blk.width).clamp(0.0, 1.0);
        let i = blk.branch_of(t);
        let x0 = blk.lo + blk.width * (i / blk.b);
        if even(i) {
            Affine { x0, y0: blk.lo, slope: blk.b }
        } else {
            Affine { x0, y0: blk.lo + blk.width, slope: -blk.b }
        }
    }

    /// Exact hull; `T` is continuous, so the image of an interval is an interval.
    fn image(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let lo = lo.clamp(0.0, 1.0);
        let hi = hi.clamp(0.0, 1.0);
        if lo >= hi {
            let y = self.apply(lo);
            return vec![(y, y)];
        }
        let Some(k0) = self.locate(lo) else {
            // identity region or lo = 1
            return vec![(lo, hi)];
        };
        let k1 = if hi >= 1.0 { None } else { self.locate(hi) };
        if k1 == Some(k0) {
            return vec![self.block(k0).image(lo, hi)];
        }
        let (p, _) = self.block(k0).image(lo, self.boundary(k0));
        let q = match k1 {
            Some(k1) => self.block(k1).image(self.boundary(k1 - 1), hi).1,
            None => hi,
        };
        vec![(p, q)]
    }
}
