//! Map interfaces shared by the counting and spectral engines.
//!
//! [`IntervalMap`] is a black box `[0,1] -> [0,1]`. Maps that also know their
//! affine structure implement [`PiecewiseAffine`]; the exact matrix builder and
//! the orbit-tube counter require it.

/// A self-map of `[0,1]`.
pub trait IntervalMap: Sync {
    fn apply(&self, x: f64) -> f64;

    /// Apply the map to each entry in place.
    fn apply_batch(&self, xs: &mut [f64]) {
        for x in xs {
            *x = self.apply(*x);
        }
    }

    /// Access to the affine structure, when the map has one.
    fn piecewise(&self) -> Option<&dyn PiecewiseAffine> {
        None
    }
}

/// An affine branch `y = y0 + slope * (x - x0)`.
///
/// The anchored form keeps precision when the slope is large.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub x0: f64,
    pub y0: f64,
    pub slope: f64,
}

impl Affine {
    pub fn eval(&self, x: f64) -> f64 {
        self.y0 + self.slope * (x - self.x0)
    }
}

/// A map that is affine between breakpoints and can report them.
pub trait PiecewiseAffine: IntervalMap {
    /// Breakpoints in the open interval `(lo, hi)`, ascending, at most `limit` of them.
    /// The flag is true when further breakpoints exist beyond the last one returned.
    fn breakpoints(&self, lo: f64, hi: f64, limit: usize) -> (Vec<f64>, bool);

    /// The branch in force on the breakpoint-free interval around `x`.
    fn branch_at(&self, x: f64) -> Affine;

    /// Image of the closed interval `[lo, hi]` as a sorted union of closed intervals.
    ///
    /// The default splits at breakpoints, which needs finitely many of them.
    fn image(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let (bps, _) = self.breakpoints(lo, hi, usize::MAX);
        let mut cuts = Vec::with_capacity(bps.len() + 2);
        cuts.push(lo);
        cuts.extend(bps);
        cuts.push(hi);
        let mut pieces: Vec<(f64, f64)> = cuts
            .windows(2)
            .map(|w| {
                if w[0] == w[1] {
                    let y = self.apply(w[0]);
                    return (y, y);
                }
                let a = self.branch_at(0.5 * (w[0] + w[1]));
                let (p, q) = (a.eval(w[0]), a.eval(w[1]));
                (p.min(q), p.max(q))
            })
            .collect();
        merge_intervals(&mut pieces)
    }
}

/// Sort and merge overlapping or touching closed intervals.
pub fn merge_intervals(pieces: &mut [(f64, f64)]) -> Vec<(f64, f64)> {
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
    for &(p, q) in pieces.iter() {
        match out.last_mut() {
            Some(last) if p <= last.1 => last.1 = last.1.max(q),
            _ => out.push((p, q)),
        }
    }
    out
}

/// Hull of an image union.
pub fn hull(pieces: &[(f64, f64)]) -> (f64, f64) {
    let lo = pieces.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pieces.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// `x -> x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl IntervalMap for Identity {
    fn apply(&self, x: f64) -> f64 {
        x
    }
    fn piecewise(&self) -> Option<&dyn PiecewiseAffine> {
        Some(self)
    }
}

impl PiecewiseAffine for Identity {
    fn breakpoints(&self, _lo: f64, _hi: f64, _limit: usize) -> (Vec<f64>, bool) {
        (Vec::new(), false)
    }
    fn branch_at(&self, _x: f64) -> Affine {
        Affine { x0: 0.0, y0: 0.0, slope: 1.0 }
    }
    fn image(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        vec![(lo, hi)]
    }
}

/// `x -> c`.
#[derive(Clone, Copy, Debug)]
pub struct Constant(pub f64);

impl IntervalMap for Constant {
    fn apply(&self, _x: f64) -> f64 {
        self.0
    }
    fn piecewise(&self) -> Option<&dyn PiecewiseAffine> {
        Some(self)
    }
}

impl PiecewiseAffine for Constant {
    fn breakpoints(&self, _lo: f64, _hi: f64, _limit: usize) -> (Vec<f64>, bool) {
        (Vec::new(), false)
    }
    fn branch_at(&self, _x: f64) -> Affine {
        Affine { x0: 0.0, y0: self.0, slope: 0.0 }
    }
    fn image(&self, _lo: f64, _hi: f64) -> Vec<(f64, f64)> {
        vec![(self.0, self.0)]
    }
}

/// Wraps a closure as a map with no exposed structure.
pub struct BlackBox<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> IntervalMap for BlackBox<F> {
    fn apply(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// Named builtin black-box maps for the command line.
pub fn named_blackbox(name: &str) -> Option<Box<dyn IntervalMap>> {
    let f: Box<dyn IntervalMap> = match name {
        "identity" => Box::new(BlackBox(|x: f64| x)),
        "logistic" => Box::new(BlackBox(|x: f64| 4.0 * x * (1.0 - x))),
        "tent" => Box::new(BlackBox(|x: f64| 1.0 - (2.0 * x - 1.0).abs())),
        "doubling" => Box::new(BlackBox(|x: f64| if x >= 1.0 { 1.0 } else { (2.0 * x).fract() })),
        _ => return None,
    };
    Some(f)
}

pub const BLACKBOX_NAMES: [&str; 4] = ["identity", "logistic", "tent", "doubling"];
