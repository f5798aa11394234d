//! Acceptance run: one PASS/FAIL line per criterion, in order. Runs without
//! the test harness so the lines are never captured.

mod common;

use std::time::{Duration, Instant};

use common::{cylinder_dynamics, mc_tube, pow_ladder, rng, Branches, LOG3};
use mdimlab::fractal_dims::*;
use mdimlab::horseshoe_map::HorseshoeMap;
use mdimlab::maps::Identity;
use mdimlab::metric_engine::*;
use mdimlab::orbit_tube::{tube_estimates, tube_bracket};
use mdimlab::params::ParameterSpec;
use mdimlab::transition_spectral::*;
use rand::Rng;

const LOG_RATIO: f64 = std::f64::consts::LN_2 / LOG3;

struct Verdict {
    ok: bool,
    lines: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self { ok: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.ok = false;
        }
        self.lines.push(format!("{}{what}", if ok { "" } else { "[x] " }));
    }

    fn time(&mut self, took: Duration, limit: f64, what: &str) {
        let s = took.as_secs_f64();
        self.check(s < limit, format!("{what} {s:.2}s < {limit}s"));
    }
}

fn c1(kmax: &mut Vec<(ParameterSpec, usize)>) -> Verdict {
    let mut v = Verdict::new();
    let cases = [
        (ParameterSpec::preset2(0.5), 10_000usize),
        (ParameterSpec::preset1(), 100_000),
        (ParameterSpec::preset3(), 1_000),
    ];
    for (i, (spec, k)) in cases.into_iter().enumerate() {
        let t = Instant::now();
        let m = HorseshoeMap::new(spec.clone().with_k_max(k)).unwrap();
        let r = m.mdim_formula(k).unwrap();
        let took = t.elapsed();
        let (ok, want) = match i {
            0 => ((r.upper - 0.5).abs() <= 0.0005, "within 0.0005 of 0.5"),
            1 => (r.upper >= 0.998, ">= 0.998"),
            _ => (r.upper <= 0.02, "<= 0.02"),
        };
        v.check(ok, format!("{} k_max={k}: upper={:.6} {want}", spec.label(), r.upper));
        v.time(took, 1.0, "runtime");
        kmax.push((spec, k));
    }
    v
}

fn c2() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let m = HorseshoeMap::new(ParameterSpec::preset2(0.5)).unwrap();
    let h: Vec<f64> = (1..=60).map(|k| m.holder_constant(k, 0.4).unwrap()).collect();
    let arg = (0..h.len()).max_by(|&a, &b| h[a].total_cmp(&h[b])).unwrap();
    let tail = h[arg..].windows(2).all(|w| w[1] < w[0]);
    let blow = (1..=60).find(|&k| m.holder_constant(k, 0.6).unwrap() > 1e3);
    let r = HorseshoeMap::new(ParameterSpec::preset2(0.5).with_k_max(10_000)).unwrap().mdim_formula(10_000).unwrap();
    let took = t.elapsed();
    v.check(arg < 5 && tail, format!("H_k(0.4): argmax k={} (<= 5), strictly decreasing tail {tail}", arg + 1));
    v.check(blow.is_some(), format!("H_k(0.6) > 1e3 first at k={blow:?} (<= 60)"));
    v.check(
        r.holder_sup == 1.0 - r.upper && (r.holder_sup - 0.5).abs() <= 0.0005,
        format!("holder_sup={} = 1 - upper={}", r.holder_sup, 1.0 - r.upper),
    );
    v.time(took, 0.1, "runtime");
    v
}

fn c3(slope: &mut f64) -> Verdict {
    let mut v = Verdict::new();
    let z = HorseshoeMap::zigzag(3).unwrap();
    let t = Instant::now();
    let l = entropy_ladder(&z, &[1e-2], 8, 1e-5, CountMethod::Separated).unwrap();
    let took = t.elapsed();
    let h = l.rows[0].h_eps;
    *slope = h;
    v.check((h - LOG3).abs() <= 0.1 * LOG3, format!("h_eps={h:.6} within 10% of log 3 (counts {:?})", l.rows[0].counts));
    v.time(took, 60.0, "runtime");
    v
}

fn c4(slope: f64) -> Verdict {
    let mut v = Verdict::new();
    let z = HorseshoeMap::zigzag(3).unwrap();
    let t = Instant::now();
    for e in pow_ladder(2.0, 4, 8) {
        let m = build_matrix_exact(&z, &EpsCover::mesh(e).unwrap()).unwrap();
        let row = bound(&m, BoundMethod::GershgorinRow).unwrap();
        let kn = bound(&m, BoundMethod::Knorm { k: 12 }).unwrap();
        let pw = bound(&m, BoundMethod::PowerIteration).unwrap();
        v.check(
            (LOG3 - 0.05..=LOG3 + 0.2).contains(&kn.value) && kn.certified,
            format!("eps={e}: knorm(12)={:.6} in [log3-0.05, log3+0.2]", kn.value),
        );
        v.check(
            row.value >= kn.value && kn.value >= pw.value - 1e-6 && pw.converged,
            format!("eps={e}: row {:.6} >= knorm {:.6} >= power {:.6} - 1e-6", row.value, kn.value, pw.value),
        );
        v.check(slope <= kn.value + 0.05, format!("eps={e}: slope {slope:.6} <= knorm + 0.05"));
    }
    v.time(t.elapsed(), 30.0, "runtime");
    v
}

fn c5() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let spec = ParameterSpec::preset2(0.5);
    let m = HorseshoeMap::new(spec.clone()).unwrap();
    let b = tube_bracket(&m, 6, 2.0 / 81.0).unwrap();
    let mid = b.mid_log / 6.0;
    let (lo, hi) = ((2.0f64 / 27.0).ln() - 0.2, (8.0f64 / 9.0).ln() + 4f64.ln() + 0.2);
    v.check(lo <= mid && mid <= hi, format!("preset2 k=2 eps=2/81 n=6: mid_log/n={mid:.4} in [{lo:.4}, {hi:.4}]"));
    let est: Vec<f64> = tube_estimates(&Identity, 6, &pow_ladder(2.0, 6, 10)).unwrap().iter().map(|b| b.estimate).collect();
    let small = est.iter().all(|&e| e <= 0.25);
    let dec = est.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = est.iter().map(|e| format!("{e:.4}")).collect();
    v.check(small, format!("identity 2^-6..2^-10 n=6: estimates [{}] <= 0.25", shown.join(", ")));
    v.check(dec, "identity estimates strictly decreasing".into());
    v.time(t.elapsed(), 120.0, "runtime");
    v
}

/// Largest occupied-cell count over open balls about the cloud's own points.
fn brute_ball_count(xs: &[f64], r: f64, eps: f64) -> usize {
    xs.iter()
        .map(|&c| {
            let mut cells: Vec<i64> = xs.iter().filter(|&&y| (y - c).abs() < r).map(|&y| (y / eps + 1e-9).floor() as i64).collect();
            cells.sort_unstable();
            cells.dedup();
            cells.len()
        })
        .max()
        .unwrap()
}

fn c6() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let cb = box_dimension(&cantor_left_endpoints(10), &pow_ladder(3.0, 2, 8)).unwrap().upper.value;
    v.check((cb - LOG_RATIO).abs() <= 0.05, format!("cantor depth 10 box={cb:.4} within 0.05 of {LOG_RATIO:.4}"));
    let ladder = [3f64.powi(-4), 3f64.powi(-6), 3f64.powi(-8)];
    let cloud = cantor_left_endpoints(12);
    let cs = assouad_spectrum(&cloud, 0.5, &ladder).unwrap();
    v.check((cs.value - LOG_RATIO).abs() <= 0.08, format!("cantor depth 12 spectrum(0.5)={:.4} within 0.08", cs.value));
    let xs: Vec<f64> = (0..1usize << 12)
        .map(|i| (0..12).filter(|b| i >> b & 1 == 1).map(|b| 2.0 * 3f64.powi(-(12 - b))).sum())
        .collect();
    let agree = cs.samples.iter().all(|&(e, stat)| {
        let n = brute_ball_count(&xs, e.sqrt(), e);
        (stat - (n as f64).ln() / (0.5 * (1.0 / e).ln())).abs() < 1e-12
    });
    v.check(agree, "cantor spectrum counts match the brute-force covering oracle".into());
    let grid = dyadic_grid(4096);
    let gb = box_dimension(&grid, &pow_ladder(2.0, 4, 10)).unwrap().upper.value;
    v.check((gb - 1.0).abs() <= 0.1, format!("grid box={gb:.4} in 1 +- 0.1"));
    let gs = assouad_spectrum(&grid, 0.5, &pow_ladder(2.0, 4, 10)).unwrap().value;
    v.check((gs - 1.0).abs() <= 0.1, format!("grid spectrum(0.5)={gs:.4} in 1 +- 0.1"));
    let pairs: Vec<(f64, f64)> = (2..=7).map(|j| (2f64.powi(-j - 3), 2f64.powi(-j))).collect();
    let ga = assouad_dimension(&grid, &pairs).unwrap().value;
    v.check((ga - 1.0).abs() <= 0.1, format!("grid assouad={ga:.4} in 1 +- 0.1"));
    v.time(t.elapsed(), 30.0, "runtime");
    v
}

fn c7(kmax: &[(ParameterSpec, usize)]) -> Verdict {
    let mut v = Verdict::new();
    let mut checked = 0;
    let mut extra: Vec<(ParameterSpec, usize)> =
        [0.3, 0.7].iter().map(|&b| (ParameterSpec::preset2(b), 10_000)).collect();
    extra.extend(kmax.iter().cloned());
    for (spec, k) in extra {
        let m = HorseshoeMap::new(spec.clone().with_k_max(k)).unwrap();
        let upper = m.mdim_formula(k).unwrap().upper;
        let alphas: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).filter(|&a| a <= 1.0 - upper - 0.01).collect();
        if alphas.is_empty() {
            v.check(true, format!("{}: upper={upper:.4}, no alpha below 1 - upper - 0.01", spec.label()));
            continue;
        }
        let res = theorem_a_check(&m, &alphas).unwrap();
        let bad: Vec<f64> = res.iter().filter(|r| !(r.pass && r.lhs <= 1.0 - r.alpha + 0.05)).map(|r| r.alpha).collect();
        checked += res.len();
        v.check(bad.is_empty(), format!("{}: {} alphas up to {:.1}, violations {bad:?}", spec.label(), alphas.len(), alphas.last().unwrap()));
    }
    v.check(checked > 0, format!("{checked} (preset, alpha) pairs checked"));
    v
}

fn c8() -> Verdict {
    let mut v = Verdict::new();
    let maps = vec![
        HorseshoeMap::zigzag(3).unwrap(),
        HorseshoeMap::zigzag(5).unwrap(),
        HorseshoeMap::new(ParameterSpec::preset2(0.5)).unwrap(),
        HorseshoeMap::new(ParameterSpec::preset1()).unwrap(),
        HorseshoeMap::new(ParameterSpec::preset3()).unwrap(),
        HorseshoeMap::new(ParameterSpec::explicit(vec![0.5, 0.3, 0.2], vec![1, 3, 5])).unwrap(),
    ];
    let words: Result<usize, String> = maps.iter().map(|m| cylinder_dynamics(m, 3.min(m.spec().horizon()), 5, 60_000, 3000)).sum();
    v.check(words.is_ok(), format!("cylinder dynamics s <= 3, n <= 5: {words:?} words"));

    let mut r = rng(8);
    let mut sandwich_bad = 0;
    for _ in 0..300 {
        let d = r.random_range(1..=3);
        let n = r.random_range(1..120);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random::<f64>()).collect()).collect();
        let metric = if r.random::<bool>() { Metric::Sup } else { Metric::Euclidean };
        let c = PointCloud::new(pts, metric).unwrap();
        let eps = r.random_range(0.01..0.6);
        let sep = greedy_separated_count(&c, eps).unwrap();
        let span = spanning_count(&c, eps).unwrap();
        let mesh = mesh_cover_count(&c, 2.0 * eps).unwrap();
        if !(mesh <= (1 << d) * span && span <= sep) {
            sandwich_bad += 1;
        }
    }
    v.check(sandwich_bad == 0, format!("sandwich on 300 random clouds: {sandwich_bad} violations"));

    let mut sub_bad = 0;
    for m in &maps {
        for eps in [0.3, 0.1, 1.0 / 27.0, 0.013] {
            for cover in [build_cover(eps).unwrap(), EpsCover::mesh(eps).unwrap()] {
                let exact = build_matrix_exact(m, &cover).unwrap();
                if !build_matrix_sampled(m, &cover, 64).unwrap().is_subset_of(&exact) {
                    sub_bad += 1;
                }
            }
        }
    }
    v.check(sub_bad == 0, format!("sampled within exact: {sub_bad} violations"));

    let mut tr_bad = 0;
    for _ in 0..300 {
        let n = r.random_range(1..=12);
        let dense: Vec<Vec<u8>> = (0..n)
            .map(|_| {
                let mut row: Vec<u8> = (0..n).map(|_| r.random::<bool>() as u8).collect();
                row[r.random_range(0..n)] = 1;
                row
            })
            .collect();
        let a = TransitionMatrix::dense(&dense).unwrap();
        let col = bound(&a, BoundMethod::GershgorinCol).unwrap().value;
        if col != bound(&a.transpose(), BoundMethod::GershgorinRow).unwrap().value {
            tr_bad += 1;
        }
    }
    v.check(tr_bad == 0, format!("transpose symmetry on 300 random matrices: {tr_bad} violations"));

    let mut mc_bad = Vec::new();
    let mut seed = 100;
    for (g, b) in [(vec![1.0], vec![3u64]), (vec![0.5, 0.3, 0.2], vec![1, 3, 5])] {
        let m = HorseshoeMap::new(ParameterSpec::explicit(g.clone(), b.clone())).unwrap();
        let br = Branches::new(&g, &b);
        for n in 1..=3 {
            for eps in [0.5, 0.25, 0.125] {
                let (lo, hi) = tube_bracket(&m, n, eps).unwrap().volume_bracket();
                let (p, s) = mc_tube(&br, n, eps, 100_000, seed);
                seed += 1;
                if !(lo <= p + 3.0 * s && p - 3.0 * s <= hi) {
                    mc_bad.push(format!("n={n} eps={eps}"));
                }
            }
        }
    }
    v.check(mc_bad.is_empty(), format!("bracket vs Monte Carlo, n <= 3: violations {mc_bad:?}"));
    v
}

fn report(n: usize, name: &str, v: Verdict) -> bool {
    println!("{} criterion {n}: {name}", if v.ok { "PASS" } else { "FAIL" });
    for l in v.lines {
        println!("    {l}");
    }
    v.ok
}

fn main() {
    let mut kmax = Vec::new();
    let mut slope = f64::NAN;
    let mut ok = Vec::new();
    ok.push(report(1, "closed-form presets", c1(&mut kmax)));
    ok.push(report(2, "Hoelder threshold", c2()));
    ok.push(report(3, "entropy estimator", c3(&mut slope)));
    ok.push(report(4, "certified squeeze", c4(slope)));
    ok.push(report(5, "orbit-tube brackets", c5()));
    ok.push(report(6, "dimension estimators", c6()));
    ok.push(report(7, "dimension inequality suite", c7(&kmax)));
    ok.push(report(8, "structural invariants", c8()));
    if ok.contains(&false) {
        std::process::exit(1);
    }
}
