//! Block sequences of the horseshoe family.
//!
//! A specification fixes the gaps `|J_k| = a_k - a_{k-1}` and the odd branch
//! counts `b_k`. Three builtin presets are provided:
//!
//! * `preset1`: gaps `6/(pi^2 k^2)`, `b_k = 3^k` (dimension 1).
//! * `preset2(beta)`: gaps `C(beta) 3^{k(1-1/beta)}`, `b_k = 3^k` (dimension `beta`).
//! * `preset3`: gaps `2^{-k}`, `b_k = 2k+1` (dimension 0).
//!
//! Sequences are infinite for the rule-based kinds. Nothing is stored: every
//! quantity, including the tail `1 - a_k`, is evaluated in closed form, so the
//! "extension" of the prefix is free and needs no synchronisation.
//!
//! JSON schema (see also the README):
//!
//! ```json
//! {"kind":"preset1","k_max":64}
//! {"kind":"preset2","beta":0.5,"k_max":64}
//! {"kind":"preset3"}
//! {"kind":"explicit","gaps":[0.6,0.4],"branches":[3,5]}
//! {"kind":"closed_form",
//!  "gap_rule":{"gap":"geometric","ratio":0.5,"scale":1.0},
//!  "branch_rule":{"branch":"linear","slope":2,"offset":1}}
//! ```
//!
//! Gap rules: `geometric` (`scale * ratio^k`), `inverse_power` (`scale * k^-exponent`).
//! Branch rules: `power` (`base^k`), `linear` (`slope * k + offset`).

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::ABS_TOL;

pub const DEFAULT_K_MAX: usize = 64;

/// Relative guard used by the strict-decrease check.
const STRICT_GUARD: f64 = 1e-15;

fn default_k_max() -> usize {
    DEFAULT_K_MAX
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gap", rename_all = "snake_case")]
pub enum GapRule {
    /// `scale * ratio^k`
    Geometric { ratio: f64, scale: f64 },
    /// `scale * k^(-exponent)`
    InversePower { exponent: f64, scale: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum BranchRule {
    /// `base^k`
    Power { base: u64 },
    /// `slope * k + offset`
    Linear { slope: u64, offset: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Kind {
    #[serde(rename = "preset1")]
    PresetI,
    #[serde(rename = "preset2")]
    PresetII { beta: f64 },
    #[serde(rename = "preset3")]
    PresetIII,
    #[serde(rename = "explicit")]
    ExplicitList { gaps: Vec<f64>, branches: Vec<u64> },
    #[serde(rename = "closed_form")]
    ClosedForm { gap_rule: GapRule, branch_rule: BranchRule },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    #[serde(flatten)]
    pub kind: Kind,
    /// Enumeration horizon used by validation. Explicit lists always use their length.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// `0 = a_0 < a_1 < ... -> 1`
    C1,
    /// gaps strictly decrease to zero
    C2,
    /// branch counts strictly increase
    C3,
    /// branch counts are odd positive integers
    Oddness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    /// First offending index.
    pub k: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn conditions(&self) -> Vec<Condition> {
        self.violations.iter().map(|v| v.condition).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{:?} at k={} ({})", v.condition, v.k, v.detail))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

impl ParameterSpec {
    pub fn preset1() -> Self {
        Self { kind: Kind::PresetI, k_max: DEFAULT_K_MAX }
    }

    pub fn preset2(beta: f64) -> Self {
        Self { kind: Kind::PresetII { beta }, k_max: DEFAULT_K_MAX }
    }

    pub fn preset3() -> Self {
        Self { kind: Kind::PresetIII, k_max: DEFAULT_K_MAX }
    }

    pub fn explicit(gaps: Vec<f64>, branches: Vec<u64>) -> Self {
        let k_max = gaps.len();
        Self { kind: Kind::ExplicitList { gaps, branches }, k_max }
    }

    pub fn closed_form(gap_rule: GapRule, branch_rule: BranchRule, k_max: usize) -> Self {
        Self { kind: Kind::ClosedForm { gap_rule, branch_rule }, k_max }
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    /// Effective enumeration horizon.
    pub fn horizon(&self) -> usize {
        match &self.kind {
            Kind::ExplicitList { gaps, .. } => gaps.len(),
            _ => self.k_max,
        }
    }

    /// Number of blocks, `None` when the sequence is infinite.
    pub fn len(&self) -> Option<usize> {
        match &self.kind {
            Kind::ExplicitList { gaps, .. } => Some(gaps.len()),
            _ => None,
        }
    }

    /// Short human label.
    pub fn label(&self) -> String {
        match &self.kind {
            Kind::PresetI => "preset1".into(),
            Kind::PresetII { beta } => format!("preset2(beta={beta})"),
            Kind::PresetIII => "preset3".into(),
            Kind::ExplicitList { gaps, branches } => format!("explicit(gaps={gaps:?}, branches={branches:?})"),
            Kind::ClosedForm { .. } => "closed_form".into(),
        }
    }

    fn rules(&self) -> Option<(GapRule, BranchRule)> {
        match &self.kind {
            Kind::PresetI => Some((
                GapRule::InversePower { exponent: 2.0, scale: 6.0 / (PI * PI) },
                BranchRule::Power { base: 3 },
            )),
            Kind::PresetII { beta } => {
                let q = 3f64.powf(1.0 - 1.0 / beta);
                Some((GapRule::Geometric { ratio: q, scale: (1.0 - q) / q }, BranchRule::Power { base: 3 }))
            }
            Kind::PresetIII => Some((
                GapRule::Geometric { ratio: 0.5, scale: 1.0 },
                BranchRule::Linear { slope: 2, offset: 1 },
            )),
            Kind::ClosedForm { gap_rule, branch_rule } => Some((*gap_rule, *branch_rule)),
            Kind::ExplicitList { .. } => None,
        }
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::InvalidInput("block indices start at 1".into()));
        }
        if let Some(len) = self.len() {
            if k > len {
                return Err(Error::OutOfRange { k, len });
            }
        }
        Ok(())
    }

    /// `log |J_k|`.
    pub fn log_gap(&self, k: usize) -> Result<f64> {
        self.check_k(k)?;
        let v = match &self.kind {
            Kind::ExplicitList { gaps, .. } => gaps[k - 1].ln(),
            _ => match self.rules().unwrap().0 {
                GapRule::Geometric { ratio, scale } => scale.ln() + k as f64 * ratio.ln(),
                GapRule::InversePower { exponent, scale } => scale.ln() - exponent * (k as f64).ln(),
            },
        };
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::RuleEvaluation { k, what: format!("log gap = {v}") });
        }
        Ok(v)
    }

    /// `|J_k| = a_k - a_{k-1}`.
    pub fn gap(&self, k: usize) -> Result<f64> {
        self.check_k(k)?;
        match &self.kind {
            Kind::ExplicitList { gaps, .. } => Ok(gaps[k - 1]),
            _ => Ok(self.log_gap(k)?.exp()),
        }
    }

    /// `b_k` when it fits in a `u64`.
    pub fn branches(&self, k: usize) -> Result<u64> {
        self.check_k(k)?;
        let v = match &self.kind {
            Kind::ExplicitList { branches, .. } => Some(branches[k - 1]),
            _ => match self.rules().unwrap().1 {
                BranchRule::Power { base } => u32::try_from(k).ok().and_then(|e| base.checked_pow(e)),
                BranchRule::Linear { slope, offset } => {
                    slope.checked_mul(k as u64).and_then(|s| s.checked_add(offset))
                }
            },
        };
        v.ok_or_else(|| Error::RuleEvaluation { k, what: "branch count overflows u64".into() })
    }

    /// `log b_k`, available for every k even when `b_k` itself overflows.
    pub fn log_branches(&self, k: usize) -> Result<f64> {
        self.check_k(k)?;
        let v = match &self.kind {
            Kind::ExplicitList { branches, .. } => (branches[k - 1] as f64).ln(),
            _ => match self.rules().unwrap().1 {
                BranchRule::Power { base } => k as f64 * (base as f64).ln(),
                BranchRule::Linear { slope, offset } => (slope as f64 * k as f64 + offset as f64).ln(),
            },
        };
        Ok(v)
    }

    /// `b_k` as a float; exact while `b_k < 2^53`.
    pub fn branches_f64(&self, k: usize) -> Result<f64> {
        match self.branches(k) {
            Ok(b) => Ok(b as f64),
            Err(Error::RuleEvaluation { .. }) => Ok(self.log_branches(k)?.exp()),
            Err(e) => Err(e),
        }
    }

    /// `ε_k = |J_k| / b_k`.
    pub fn epsilon_k(&self, k: usize) -> Result<f64> {
        match &self.kind {
            Kind::ExplicitList { .. } => Ok(self.gap(k)? / self.branches(k)? as f64),
            _ => Ok((self.log_gap(k)? - self.log_branches(k)?).exp()),
        }
    }

    /// `log(1/ε_k)`.
    pub fn log_inv_epsilon_k(&self, k: usize) -> Result<f64> {
        Ok(self.log_branches(k)? - self.log_gap(k)?)
    }

    /// Sum of all gaps (infinite for divergent rules).
    pub fn total(&self) -> f64 {
        match &self.kind {
            Kind::ExplicitList { gaps, .. } => gaps.iter().sum(),
            _ => match self.rules().unwrap().0 {
                GapRule::Geometric { ratio, scale } => {
                    if ratio < 1.0 {
                        scale * ratio / (1.0 - ratio)
                    } else {
                        f64::INFINITY
                    }
                }
                GapRule::InversePower { exponent, scale } => {
                    if exponent > 1.0 {
                        scale * hurwitz_zeta(exponent, 1.0)
                    } else {
                        f64::INFINITY
                    }
                }
            },
        }
    }

    /// Remaining mass `sum_{j>k} |J_j|`, which equals `1 - a_k` for valid specs.
    pub fn tail(&self, k: usize) -> f64 {
        match &self.kind {
            Kind::ExplicitList { gaps, .. } => gaps.iter().skip(k).sum(),
            _ => match self.rules().unwrap().0 {
                GapRule::Geometric { ratio, scale } => {
                    (scale.ln() + (k as f64 + 1.0) * ratio.ln() - (1.0 - ratio).ln()).exp()
                }
                GapRule::InversePower { exponent, scale } => scale * hurwitz_zeta(exponent, k as f64 + 1.0),
            },
        }
    }

    /// `a_k`.
    pub fn boundary(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        match &self.kind {
            Kind::ExplicitList { gaps, .. } => gaps.iter().take(k).sum(),
            _ => {
                let total = self.total();
                if (total - 1.0).abs() <= ABS_TOL {
                    1.0 - self.tail(k)
                } else {
                    total - self.tail(k)
                }
            }
        }
    }
}

/// Check conditions C1–C3 and oddness.
///
/// Explicit lists are finite prefixes: their partial sums must stay below 1,
/// but they need not reach it. Rule-based kinds must have total mass 1.
pub fn validate(spec: &ParameterSpec) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    if let Kind::PresetII { beta } = spec.kind {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidInput(format!("beta must lie in (0,1), got {beta}")));
        }
    }
    let horizon = spec.horizon();
    if horizon == 0 {
        return Err(Error::InvalidInput("empty parameter sequence".into()));
    }
    if let Kind::ExplicitList { gaps, branches } = &spec.kind {
        if gaps.len() != branches.len() {
            return Err(Error::InvalidInput(format!(
                "gaps and branches differ in length ({} vs {})",
                gaps.len(),
                branches.len()
            )));
        }
    }

    // gaps
    let mut c1: Option<Violation> = None;
    let mut c2: Option<Violation> = None;
    let mut partial = 0.0;
    let mut prev_gap = f64::INFINITY;
    let mut prev_log = f64::INFINITY;
    let rules = spec.rules().is_some();
    for k in 1..=horizon {
        let g = spec.gap(k)?;
        if !g.is_finite() {
            return Err(Error::RuleEvaluation { k, what: format!("gap = {g}") });
        }
        // rule gaps are compared in log space, where they never underflow
        let lg = if rules { spec.log_gap(k)? } else { g.ln() };
        let positive = if rules { lg > f64::NEG_INFINITY } else { g > 0.0 };
        if c1.is_none() && !positive {
            c1 = Some(Violation { condition: Condition::C1, k, detail: format!("gap {g} is not positive") });
        }
        partial += g;
        if c1.is_none() && partial > 1.0 + ABS_TOL {
            c1 = Some(Violation { condition: Condition::C1, k, detail: format!("partial sum {partial} exceeds 1") });
        }
        let decreasing = if rules { lg - prev_log < -STRICT_GUARD } else { g < prev_gap * (1.0 - STRICT_GUARD) };
        if c2.is_none() && k >= 2 && !decreasing {
            c2 = Some(Violation {
                condition: Condition::C2,
                k,
                detail: format!("gap {g} does not decrease from {prev_gap}"),
            });
        }
        prev_gap = g;
        prev_log = lg;
    }
    if let Some((gap_rule, _)) = spec.rules() {
        if c1.is_none() {
            let total = spec.total();
            if !((total - 1.0).abs() <= ABS_TOL) {
                c1 = Some(Violation {
                    condition: Condition::C1,
                    k: horizon,
                    detail: format!("total mass {total} differs from 1"),
                });
            }
        }
        // the limit of the rule, beyond the horizon
        let to_zero = match gap_rule {
            GapRule::Geometric { ratio, .. } => ratio < 1.0,
            GapRule::InversePower { exponent, .. } => exponent > 0.0,
        };
        if c2.is_none() && !to_zero {
            c2 = Some(Violation { condition: Condition::C2, k: 2, detail: "gaps do not tend to zero".into() });
        }
    }

    // branches
    let (c3, odd) = match &spec.kind {
        Kind::ExplicitList { branches, .. } => {
            let mut c3 = None;
            let mut odd = None;
            for (i, &b) in branches.iter().enumerate() {
                let k = i + 1;
                if odd.is_none() && b % 2 == 0 {
                    odd = Some(Violation { condition: Condition::Oddness, k, detail: format!("b_{k} = {b}") });
                }
                if c3.is_none() && i > 0 && b <= branches[i - 1] {
                    c3 = Some(Violation {
                        condition: Condition::C3,
                        k,
                        detail: format!("b_{k} = {b} does not exceed {}", branches[i - 1]),
                    });
                }
            }
            (c3, odd)
        }
        _ => branch_rule_checks(spec.rules().unwrap().1),
    };

    report.violations.extend(c1);
    report.violations.extend(c2);
    report.violations.extend(c3);
    report.violations.extend(odd);
    Ok(report)
}

/// Branch rules are checked symbolically, which covers every k at once.
fn branch_rule_checks(rule: BranchRule) -> (Option<Violation>, Option<Violation>) {
    match rule {
        BranchRule::Power { base } => {
            let odd = (base % 2 == 0).then(|| Violation {
                condition: Condition::Oddness,
                k: 1,
                detail: format!("b_1 = {base}"),
            });
            let c3 = (base <= 1).then(|| Violation {
                condition: Condition::C3,
                k: 2,
                detail: format!("base {base} gives a non-increasing sequence"),
            });
            (c3, odd)
        }
        BranchRule::Linear { slope, offset } => {
            let odd = [1u64, 2].into_iter().find(|&k| (slope * k + offset) % 2 == 0).map(|k| Violation {
                condition: Condition::Oddness,
                k: k as usize,
                detail: format!("b_{k} = {}", slope * k + offset),
            });
            let c3 = (slope == 0).then(|| Violation {
                condition: Condition::C3,
                k: 2,
                detail: "zero slope gives a constant sequence".into(),
            });
            (c3, odd)
        }
    }
}

/// Hurwitz zeta `sum_{n>=0} (a+n)^{-s}` for `s > 1`, `a > 0`, by Euler–Maclaurin.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    // B_{2j} / (2j)!
    const COEF: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
    ];
    let n_direct = if a >= 12.0 { 0 } else { (12.0 - a).ceil() as usize };
    let mut sum = 0.0;
    for n in 0..n_direct {
        sum += (a + n as f64).powf(-s);
    }
    let x = a + n_direct as f64;
    let mut acc = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorials s (s+1) ... (s+2j-2), times x^{-s-2j+1}
    let mut rising = s;
    let mut xpow = x.powf(-s - 1.0);
    for (j, c) in COEF.iter().enumerate() {
        acc += c * rising * xpow;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        xpow /= x * x;
    }
    sum + acc
}
