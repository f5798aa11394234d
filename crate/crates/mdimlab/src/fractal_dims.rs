//! Box, Assouad and Assouad-spectrum estimates for finite point clouds.
//!
//! A finite cloud has dimension 0 in the limit, so every estimate here
//! describes scaling over the supplied ladder of scales and nothing more.
//! Counts are occupied mesh cells of side ε; balls are sup-metric boxes.

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horseshoe_map::HorseshoeMap;
use crate::metric_engine::{cloud_cell, mesh_cover_count, PointCloud};
use crate::util::tail_window;

/// Centers beyond this many are subsampled.
pub const MAX_CENTERS: usize = 4096;
/// Slack allowed in the Theorem A comparison.
pub const THEOREM_A_SLACK: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionKind {
    BoxUpper,
    BoxLower,
    Assouad,
    AssouadSpectrum { theta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub kind: DimensionKind,
    /// `(epsilon, statistic)`, epsilons strictly decreasing.
    pub samples: Vec<(f64, f64)>,
}

impl DimensionEstimate {
    fn from_tail(kind: DimensionKind, samples: Vec<(f64, f64)>, take_max: bool) -> Self {
        let w = tail_window(samples.len());
        let tail = samples[w].iter().map(|s| s.1);
        let value = if take_max { tail.fold(0.0, f64::max) } else { tail.fold(f64::INFINITY, f64::min).max(0.0) };
        Self { value, kind, samples }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDimensions {
    pub upper: DimensionEstimate,
    pub lower: DimensionEstimate,
}

fn check_ladder(eps: &[f64], min_len: usize) -> Result<()> {
    if eps.len() < min_len {
        return Err(Error::InvalidInput(format!("ladder needs at least {min_len} scales, got {}", eps.len())));
    }
    if eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidInput("ladder scales must be positive".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("ladder must be strictly decreasing".into()));
    }
    Ok(())
}

/// `log N(ε) / log(1/ε)` over the ladder; upper is the tail-window max, lower the min.
pub fn box_dimension(points: &PointCloud, eps_ladder: &[f64]) -> Result<BoxDimensions> {
    check_ladder(eps_ladder, 4)?;
    if eps_ladder[0] >= 1.0 {
        return Err(Error::InvalidInput("box-counting scales must lie below 1".into()));
    }
    let samples = eps_ladder
        .iter()
        .map(|&e| Ok((e, (mesh_cover_count(points, e)? as f64).ln() / (1.0 / e).ln())))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoxDimensions {
        upper: DimensionEstimate::from_tail(DimensionKind::BoxUpper, samples.clone(), true),
        lower: DimensionEstimate::from_tail(DimensionKind::BoxLower, samples, false),
    })
}

/// Ball-restricted cell counting over a cloud.
struct BallCounter<'a> {
    cloud: &'a PointCloud,
    /// Point indices sorted by the first coordinate.
    order: Vec<usize>,
    first: Vec<f64>,
    edge: Vec<f64>,
}

impl<'a> BallCounter<'a> {
    fn new(cloud: &'a PointCloud) -> Self {
        let mut order: Vec<usize> = (0..cloud.len()).collect();
        order.sort_by(|&a, &b| cloud.point(a)[0].total_cmp(&cloud.point(b)[0]));
        let first = order.iter().map(|&i| cloud.point(i)[0]).collect();
        Self { cloud, order, first, edge: cloud.upper_edge() }
    }

    /// Deterministic centers: all points, or a stride subsample plus the
    /// extremal points of every axis.
    fn centers(&self) -> Vec<usize> {
        let n = self.cloud.len();
        if n <= MAX_CENTERS {
            return self.order.clone();
        }
        let stride = n.div_ceil(MAX_CENTERS);
        let mut c: Vec<usize> = self.order.iter().copied().step_by(stride).collect();
        for axis in 0..self.cloud.dim() {
            let key = |&i: &usize| self.cloud.point(i)[axis];
            let lo = (0..n).min_by(|a, b| key(a).total_cmp(&key(b))).unwrap();
            let hi = (0..n).max_by(|a, b| key(a).total_cmp(&key(b))).unwrap();
            c.push(lo);
            c.push(hi);
        }
        c.sort_unstable();
        c.dedup();
        c
    }

    fn span(&self, x: f64, radius: f64) -> std::ops::Range<usize> {
        let lo = self.first.partition_point(|&v| v <= x - radius);
        let hi = self.first.partition_point(|&v| v < x + radius);
        lo..hi.max(lo)
    }

    /// Occupied ε-cells within the open sup-ball of `radius` around point `c`.
    fn count(&self, c: usize, radius: f64, eps: f64, cells_1d: Option<&[usize]>) -> usize {
        let x = self.cloud.point(c);
        let rng = self.span(x[0], radius);
        if rng.is_empty() {
            return 0;
        }
        if let Some(starts) = cells_1d {
            // starts[i] counts cell changes among sorted points 0..=i
            return starts[rng.end - 1] - starts[rng.start] + 1;
        }
        let mut set: FxHashSet<Vec<i64>> = FxHashSet::default();
        for &i in &self.order[rng] {
            let p = self.cloud.point(i);
            if p.iter().zip(x).all(|(a, b)| (a - b).abs() < radius) {
                set.insert(p.iter().zip(&self.edge).map(|(&v, &e)| cloud_cell(v, e, eps)).collect());
            }
        }
        set.len()
    }

    /// For 1-D clouds: running count of mesh-cell changes along the sorted points.
    fn cell_starts(&self, eps: f64) -> Option<Vec<usize>> {
        if self.cloud.dim() != 1 {
            return None;
        }
        let e = self.edge[0];
        let mut out = Vec::with_capacity(self.first.len());
        let mut prev = None;
        let mut acc = 0usize;
        for &v in &self.first {
            let cell = cloud_cell(v, e, eps);
            if prev.is_some_and(|p| p != cell) {
                acc += 1;
            }
            prev = Some(cell);
            out.push(acc);
        }
        Some(out)
    }

    fn sup_count(&self, centers: &[usize], radius: f64, eps: f64) -> usize {
        let starts = self.cell_starts(eps);
        centers.par_iter().map(|&c| self.count(c, radius, eps, starts.as_deref())).max().unwrap_or(0)
    }
}

/// `sup_x log S(B(x, ε^θ), ε) / ((1-θ) log(1/ε))`, tail-window max over the ladder.
pub fn assouad_spectrum(points: &PointCloud, theta: f64, eps_ladder: &[f64]) -> Result<DimensionEstimate> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidInput(format!("theta must lie in (0,1), got {theta}")));
    }
    check_ladder(eps_ladder, 1)?;
    if eps_ladder[0] >= 1.0 {
        return Err(Error::InvalidInput("spectrum scales must lie below 1, so that eps^theta > eps".into()));
    }
    let bc = BallCounter::new(points);
    let centers = bc.centers();
    let samples = eps_ladder
        .iter()
        .map(|&e| {
            let n = bc.sup_count(&centers, e.powf(theta), e);
            (e, (n as f64).ln() / ((1.0 - theta) * (1.0 / e).ln()))
        })
        .collect();
    Ok(DimensionEstimate::from_tail(DimensionKind::AssouadSpectrum { theta }, samples, true))
}

/// `sup_x log S(B(x, R), r) / log(R/r)` per pair `(r, R)`, tail-window max over
/// the pairs. Pairs must have `r` strictly decreasing.
pub fn assouad_dimension(points: &PointCloud, scale_pairs: &[(f64, f64)]) -> Result<DimensionEstimate> {
    if let Some(&(r, big)) = scale_pairs.iter().find(|&&(r, big)| !(r > 0.0 && r < big && big.is_finite())) {
        return Err(Error::InvalidInput(format!("scale pair needs 0 < r < R, got ({r}, {big})")));
    }
    let rs: Vec<f64> = scale_pairs.iter().map(|p| p.0).collect();
    check_ladder(&rs, 1)?;
    let bc = BallCounter::new(points);
    let centers = bc.centers();
    let samples = scale_pairs
        .iter()
        .map(|&(r, big)| {
            let n = bc.sup_count(&centers, big, r);
            (r, (n as f64).ln() / (big / r).ln())
        })
        .collect();
    Ok(DimensionEstimate::from_tail(DimensionKind::Assouad, samples, true))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremACheck {
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Compares the closed-form upper dimension with `(1 - α) · 1`, the Assouad
/// spectrum of `[0,1]` being 1. Each α must be a Hölder exponent of the map,
/// i.e. below `1 - upper`.
pub fn theorem_a_check(map: &HorseshoeMap, alphas: &[f64]) -> Result<Vec<TheoremACheck>> {
    let report = map.mdim_formula(map.spec().horizon())?;
    alphas
        .iter()
        .map(|&alpha| {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidInput(format!("alpha must lie in (0,1), got {alpha}")));
            }
            if alpha >= report.holder_sup {
                return Err(Error::InvalidInput(format!(
                    "alpha={alpha} is not a Hoelder exponent of this map (needs alpha < {})",
                    report.holder_sup
                )));
            }
            let rhs = 1.0 - alpha;
            Ok(TheoremACheck { alpha, lhs: report.upper, rhs, pass: report.upper <= rhs + THEOREM_A_SLACK })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_engine::{cantor_left_endpoints, dyadic_grid};
    use crate::params::ParameterSpec;

    fn pow_ladder(base: f64, a: i32, b: i32) -> Vec<f64> {
        (a..=b).map(|j| base.powi(-j)).collect()
    }

    const LOG_RATIO: f64 = std::f64::consts::LN_2 / 1.0986122886681098;

    #[test]
    fn box_examples() {
        let d = box_dimension(&dyadic_grid(1024), &pow_ladder(2.0, 3, 8)).unwrap();
        assert!((0.92..=1.0).contains(&d.upper.value), "{}", d.upper.value);
        assert!(d.lower.value <= d.upper.value);
        let p = PointCloud::line(&[0.3]).unwrap();
        assert_eq!(box_dimension(&p, &pow_ladder(2.0, 1, 6)).unwrap().upper.value, 0.0);
        let c = box_dimension(&cantor_left_endpoints(10), &pow_ladder(3.0, 2, 8)).unwrap();
        assert!((c.upper.value - LOG_RATIO).abs() < 1e-9);
        assert!(box_dimension(&p, &pow_ladder(2.0, 1, 3)).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let p = PointCloud::line(&[0.3]).unwrap();
        assert_eq!(assouad_spectrum(&p, 0.4, &pow_ladder(2.0, 2, 8)).unwrap().value, 0.0);
        assert!(assouad_spectrum(&p, 1.0, &[0.1]).is_err());
        assert!(assouad_spectrum(&p, 0.0, &[0.1]).is_err());
        let c = assouad_spectrum(&cantor_left_endpoints(12), 0.5, &[3f64.powi(-4), 3f64.powi(-6), 3f64.powi(-8)]).unwrap();
        assert!((c.value - LOG_RATIO).abs() < 0.08, "{}", c.value);
    }

    #[test]
    fn assouad_examples() {
        let pairs: Vec<(f64, f64)> = (2..=6).map(|j| (2f64.powi(-j - 3), 2f64.powi(-j))).collect();
        let p = PointCloud::line(&[0.3]).unwrap();
        assert_eq!(assouad_dimension(&p, &pairs).unwrap().value, 0.0);
        let two = PointCloud::line(&[0.0, 1.0]).unwrap();
        assert_eq!(assouad_dimension(&two, &pairs).unwrap().value, 0.0);
        assert!(assouad_dimension(&p, &[(0.2, 0.1)]).is_err());
    }

    #[test]
    fn two_dimensional_balls() {
        let pts: Vec<Vec<f64>> = (0..=16).flat_map(|i| (0..=16).map(move |j| vec![i as f64 / 16.0, j as f64 / 16.0])).collect();
        let cloud = PointCloud::new(pts, crate::metric_engine::Metric::Sup).unwrap();
        let bc = BallCounter::new(&cloud);
        // center (0.5, 0.5), open radius 1/8 holds 3x3 grid points in distinct cells
        let c = 8 * 17 + 8;
        assert_eq!(bc.count(c, 0.125, 1.0 / 16.0, None), 9);
    }

    #[test]
    fn theorem_a_examples() {
        let p2 = HorseshoeMap::new(ParameterSpec::preset2(0.5).with_k_max(10_000)).unwrap();
        for alpha in [0.4, 0.49] {
            let r = &theorem_a_check(&p2, &[alpha]).unwrap()[0];
            assert!(r.pass && (r.lhs - 0.5).abs() < 1e-3 && (r.rhs - (1.0 - alpha)).abs() < 1e-15);
        }
        let p3 = HorseshoeMap::new(ParameterSpec::preset3().with_k_max(1000)).unwrap();
        assert!(theorem_a_check(&p3, &[0.9]).unwrap()[0].pass);
        assert!(theorem_a_check(&p2, &[0.6]).is_err());
        assert!(theorem_a_check(&p3, &[1.0]).is_err());
    }
}
