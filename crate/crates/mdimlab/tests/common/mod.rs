#![allow(dead_code)]

use mdimlab::horseshoe_map::HorseshoeMap;
use mdimlab::maps::IntervalMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LOG3: f64 = 1.0986122886681098;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pow_ladder(base: f64, from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|j| base.powi(-j)).collect()
}

/// Branch structure of an explicit-list map whose gaps sum to 1, rebuilt
/// from the raw lists so it shares no code with the library.
pub struct Branches {
    lo: Vec<f64>,
    w: Vec<f64>,
    b: Vec<u64>,
}

impl Branches {
    pub fn new(gaps: &[f64], branches: &[u64]) -> Self {
        let mut lo = Vec::new();
        let mut acc = 0.0;
        for g in gaps {
            lo.push(acc);
            acc += g;
        }
        assert!((acc - 1.0).abs() < 1e-12);
        Self { lo, w: gaps.to_vec(), b: branches.to_vec() }
    }

    /// Image of the closed interval `[p, q]`, `p < q`, as closed pieces of
    /// positive length.
    pub fn image(&self, p: f64, q: f64, out: &mut Vec<(f64, f64)>) {
        for k in 0..self.lo.len() {
            let (lo, w, b) = (self.lo[k], self.w[k], self.b[k] as f64);
            let u = p.max(lo);
            let v = q.min(lo + w);
            if !(u < v) {
                continue;
            }
            let tu = (u - lo) / w * b;
            let tv = (v - lo) / w * b;
            let first = tu.floor() as i64;
            let last = (tv.ceil() as i64 - 1).max(first);
            for i in first..=last {
                let s = tu.max(i as f64);
                let e = tv.min(i as f64 + 1.0);
                if !(s < e) {
                    continue;
                }
                let (fs, fe) = if i % 2 == 0 { (s - i as f64, e - i as f64) } else { (i as f64 + 1.0 - s, i as f64 + 1.0 - e) };
                let (a, c) = (fs.min(fe), fs.max(fe));
                out.push((lo + w * a, lo + w * c));
            }
        }
    }
}

fn merge(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (p, q) in v {
        match out.last_mut() {
            Some(l) if p <= l.1 => l.1 = l.1.max(q),
            _ => out.push((p, q)),
        }
    }
    out
}

/// `y` lies in the tube iff some orbit stays within ε of every `y_j`:
/// push the admissible set forward, clipping by each open ball.
pub fn in_tube(br: &Branches, y: &[f64], eps: f64) -> bool {
    let clip = |set: Vec<(f64, f64)>, c: f64| -> Vec<(f64, f64)> {
        let (bl, bh) = (c - eps, c + eps);
        set.into_iter().filter(|&(p, q)| p < bh && q > bl).map(|(p, q)| (p.max(bl), q.min(bh))).collect()
    };
    let mut set = clip(vec![(0.0, 1.0)], y[0]);
    for &c in &y[1..] {
        if set.is_empty() {
            return false;
        }
        let mut img = Vec::new();
        for &(p, q) in &set {
            br.image(p, q, &mut img);
        }
        set = clip(merge(img), c);
    }
    !set.is_empty()
}

/// Monte Carlo tube volume in `[0,1]^n`: fraction and its standard error.
pub fn mc_tube(br: &Branches, n: usize, eps: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let mut y = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..samples {
        for c in y.iter_mut() {
            *c = r.random::<f64>();
        }
        if in_tube(br, &y, eps) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}

/// `T^j` maps `J_s(w)` onto `J_s(w[j..])`, checked at the endpoints.
pub fn check_cylinder_word(map: &HorseshoeMap, s: usize, word: &[u64], tol: f64) -> Result<(), String> {
    let c = map.cylinder(s, word).map_err(|e| e.to_string())?;
    let (mut u, mut v) = c.endpoints;
    for j in 1..=word.len() {
        u = map.apply(u);
        v = map.apply(v);
        let want = map.cylinder(s, &word[j..]).map_err(|e| e.to_string())?.endpoints;
        let got = (u.min(v), u.max(v));
        if (got.0 - want.0).abs() > tol || (got.1 - want.1).abs() > tol {
            return Err(format!("s={s} word={word:?} j={j}: {got:?} vs {want:?}"));
        }
    }
    Ok(())
}

/// Every word of length `n` over `1..=b`, in lexicographic order.
pub fn all_words(b: u64, n: usize) -> Vec<Vec<u64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|w| (1..=b).map(move |i| [w.clone(), vec![i]].concat())).collect();
    }
    out
}

/// Exhaustive over words while `b_s^n <= limit`, otherwise `random` words.
pub fn cylinder_dynamics(map: &HorseshoeMap, s_max: usize, n_max: usize, limit: u64, random: usize) -> Result<usize, String> {
    let mut r = rng(7);
    let mut checked = 0;
    for s in 1..=s_max {
        let b = map.spec().branches(s).map_err(|e| e.to_string())?;
        for n in 0..=n_max {
            let total = b.checked_pow(n as u32).unwrap_or(u64::MAX);
            let words = if total <= limit {
                all_words(b, n)
            } else {
                (0..random).map(|_| (0..n).map(|_| r.random_range(1..=b)).collect()).collect()
            };
            for w in &words {
                check_cylinder_word(map, s, w, 1e-9)?;
                checked += 1;
            }
        }
    }
    Ok(checked)
}
