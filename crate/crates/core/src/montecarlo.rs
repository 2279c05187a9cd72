//! Replicated sampling experiments that check each limit law: draw samples,
//! apply the prescribed centering and scaling, and compare the empirical
//! distribution of the normalized statistic against its theoretical limit
//! (Gaussian, or an extremal law when the narrow window stays fixed).
//!
//! Everything is deterministic given the configuration: replicate `i` draws
//! with `derive_seed(seed, i)`, parallel execution preserves replicate
//! order, and aggregation uses fixed-order compensated sums.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::asymptotics::{
    self, centering, centering_random, centering_random_upper, r_p, CoefficientSet, GammaParam,
};
use crate::detect;
use crate::error::{Error, Result};
use crate::estimators;
use crate::models::{SampleBatch, TailModel};
use crate::numeric::{covariance, derive_seed, moments};
use crate::tolerances;

/// Window-size rule: explicit, or a power `⌊n^alpha⌋` resolved at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "kebab-case")]
pub enum SizeRule {
    Fixed(usize),
    Power(f64),
}

impl SizeRule {
    /// Parse `"123"` or `"n^0.6"`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(expo) = s.strip_prefix("n^") {
            let alpha: f64 = expo
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad exponent in '{s}'")))?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "exponent must be in (0,1), got {alpha}"
                )));
            }
            Ok(SizeRule::Power(alpha))
        } else {
            let v: usize = s
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad window size '{s}'")))?;
            Ok(SizeRule::Fixed(v))
        }
    }

    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            SizeRule::Fixed(v) => v,
            // powf can land an ulp under the exact power (1e5^0.6 ->
            // 999.9999…); nudge before flooring.
            SizeRule::Power(alpha) => ((n as f64).powf(alpha) * (1.0 + 1e-12)).floor() as usize,
        }
    }

    /// Fixed rules model the "ℓ stays fixed" asymptotics; power rules the
    /// "ℓ → ∞" ones.
    pub fn grows(&self) -> bool {
        matches!(self, SizeRule::Power(_))
    }
}

impl std::fmt::Display for SizeRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SizeRule::Fixed(v) => write!(f, "{v}"),
            SizeRule::Power(a) => write!(f, "n^{a}"),
        }
    }
}

/// Which limit statement a run verifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoremTarget {
    T3_1,
    T3_2,
    T4_1,
    T4_2,
    T5_1,
    C5_1,
    T6_1,
    T6_2,
    T6_3,
    T6_4,
    T6_5,
    T7_1,
    ThmB,
}

impl TheoremTarget {
    pub const ALL: [TheoremTarget; 13] = [
        TheoremTarget::T3_1,
        TheoremTarget::T3_2,
        TheoremTarget::T4_1,
        TheoremTarget::T4_2,
        TheoremTarget::T5_1,
        TheoremTarget::C5_1,
        TheoremTarget::T6_1,
        TheoremTarget::T6_2,
        TheoremTarget::T6_3,
        TheoremTarget::T6_4,
        TheoremTarget::T6_5,
        TheoremTarget::T7_1,
        TheoremTarget::ThmB,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            TheoremTarget::T3_1 => "T3.1",
            TheoremTarget::T3_2 => "T3.2",
            TheoremTarget::T4_1 => "T4.1",
            TheoremTarget::T4_2 => "T4.2",
            TheoremTarget::T5_1 => "T5.1",
            TheoremTarget::C5_1 => "C5.1",
            TheoremTarget::T6_1 => "T6.1",
            TheoremTarget::T6_2 => "T6.2",
            TheoremTarget::T6_3 => "T6.3",
            TheoremTarget::T6_4 => "T6.4",
            TheoremTarget::T6_5 => "T6.5",
            TheoremTarget::T7_1 => "T7.1",
            TheoremTarget::ThmB => "ThmB",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|t| t.id() == s)
    }
}

/// Full experiment description; everything a run needs and everything the
/// report echoes.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: TailModel,
    pub n: usize,
    pub k_rule: SizeRule,
    pub ell_rule: SizeRule,
    pub nu: f64,
    pub reps: usize,
    pub seed: u64,
    pub target: TheoremTarget,
}

impl ExperimentConfig {
    fn echo(&self, k: usize, ell: usize) -> ConfigEcho {
        ConfigEcho {
            model: self.model.id().to_string(),
            target: self.target.id().to_string(),
            n: self.n,
            k_rule: self.k_rule.to_string(),
            ell_rule: self.ell_rule.to_string(),
            k,
            ell,
            nu: self.nu,
            reps: self.reps,
            seed: self.seed,
            defaults_version: tolerances::DEFAULTS_VERSION.to_string(),
        }
    }

    /// Advisory checks of the window-growth conditions behind the limit
    /// statements; violations warn, they do not error.
    fn rate_warnings(&self, k: usize, ell: usize) -> Vec<String> {
        let mut w = Vec::new();
        let n = self.n as f64;
        if k as f64 / n > 0.1 {
            w.push(format!("k/n = {:.3} is not small; wide-window rate condition strained", k as f64 / n));
        }
        if k < 30 {
            w.push(format!("k = {k} is small; wide window may not be in the asymptotic regime"));
        }
        if ell as f64 > (k as f64).sqrt() {
            w.push(format!(
                "ell = {ell} exceeds sqrt(k) = {:.1}; narrow-window error terms may not be negligible",
                (k as f64).sqrt()
            ));
        }
        if self.ell_rule.grows() && ell < 10 {
            w.push(format!("ell = {ell} is small for a growing-ell target"));
        }
        w
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConfigEcho {
    pub model: String,
    pub target: String,
    pub n: usize,
    pub k_rule: String,
    pub ell_rule: String,
    pub k: usize,
    pub ell: usize,
    pub nu: f64,
    pub reps: usize,
    pub seed: u64,
    pub defaults_version: String,
}

/// The theoretical limit a statistic is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum LimitLaw {
    Normal { sigma2: f64 },
    NegLogErlang { ell: usize },
    WeibullGap { gamma: f64, ell: usize },
    /// Report-only statistics (e.g. detection accuracy): no distributional
    /// comparison.
    RateOnly { target: f64 },
}

impl LimitLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            LimitLaw::Normal { sigma2 } => {
                let normal = statrs::distribution::Normal::new(0.0, sigma2.sqrt()).unwrap();
                normal.cdf(x)
            }
            LimitLaw::NegLogErlang { ell } => asymptotics::neg_log_e_cdf(ell, x).unwrap(),
            LimitLaw::WeibullGap { gamma, ell } => {
                asymptotics::weibull_gap_cdf(gamma, ell, x).unwrap()
            }
            LimitLaw::RateOnly { .. } => f64::NAN,
        }
    }

    pub fn mean_var(&self) -> (f64, f64) {
        match *self {
            LimitLaw::Normal { sigma2 } => (0.0, sigma2),
            LimitLaw::NegLogErlang { ell } => asymptotics::neg_log_e_moments(ell),
            LimitLaw::WeibullGap { gamma, ell } => asymptotics::weibull_gap_moments(gamma, ell),
            LimitLaw::RateOnly { target } => (target, f64::NAN),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            LimitLaw::Normal { sigma2 } => format!("N(0, {sigma2:.6})"),
            LimitLaw::NegLogErlang { ell } => format!("-log E({ell})"),
            LimitLaw::WeibullGap { gamma, ell } => {
                format!("({:.3}+1)(1 - E({ell})^(1/{:.3}))", gamma, gamma)
            }
            LimitLaw::RateOnly { target } => format!("rate >= {target}"),
        }
    }
}

/// One pass/fail check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Aggregates and verdicts for one statistic of the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub limit: LimitLaw,
    pub limit_label: String,
    pub emp_mean: f64,
    pub emp_variance: f64,
    pub emp_skewness: f64,
    pub ks_distance: Option<f64>,
    pub theoretical_mean: f64,
    pub theoretical_variance: f64,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

/// Cross-block dependence summary for the joint target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointBlockReport {
    /// Number of leading coordinates in the first block.
    pub split: usize,
    /// `(i, j, cov, se)` for every pair across the two blocks.
    pub cross: Vec<(usize, usize, f64, f64)>,
    pub max_abs_over_se: f64,
    /// The scale of the residual coupling the gap-bearing narrow
    /// statistics keep at finite windows,
    /// `√(ℓ/k)·(½ln²(k/ℓ) + ln(k/ℓ))` (dominated by the quadratic-sum ×
    /// gap pair). Compare `max |cov|` against this, not against zero,
    /// when ℓ/k is not yet very small.
    pub coupling_rate_scale: f64,
    pub pass: bool,
}

/// The report a run produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReport {
    pub config: ConfigEcho,
    pub warnings: Vec<String>,
    pub stats: Vec<StatReport>,
    pub joint: Option<JointBlockReport>,
    pub replicates_used: usize,
    pub excluded: usize,
    pub pass: bool,
    pub wall_clock_ms: u128,
}

impl McReport {
    /// Everything except wall-clock time: the view that must reproduce
    /// bitwise for identical configurations.
    pub fn deterministic_view(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("wall_clock_ms");
        }
        v
    }
}

/// Tolerances used by [`compare`]; defaults come from the pinned table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    pub var_ratio: f64,
    pub mean_se_mult: f64,
    pub ks_se_mult: f64,
    pub ks_slack: f64,
    pub ks_extremal: f64,
    pub max_excluded: f64,
    pub accuracy_floor: f64,
    pub joint_se_mult: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            var_ratio: tolerances::MC_VAR_RATIO,
            mean_se_mult: tolerances::MC_MEAN_SE_MULT,
            ks_se_mult: tolerances::MC_KS_SE_MULT,
            ks_slack: tolerances::MC_KS_SLACK,
            ks_extremal: tolerances::MC_KS_EXTREMAL,
            max_excluded: tolerances::MC_MAX_EXCLUDED,
            accuracy_floor: tolerances::DETECT_TARGET_ACCURACY,
            joint_se_mult: tolerances::JOINT_CROSS_SE_MULT,
        }
    }
}

/// Kolmogorov–Smirnov sup distance between a sample and a CDF, both
/// one-sided gaps at every sample point.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.len() < 20 {
        return Err(Error::InvalidArgument(format!(
            "ks_distance needs >= 20 samples, got {}",
            samples.len()
        )));
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max(((i + 1) as f64 / n - f).abs());
        sup = sup.max((i as f64 / n - f).abs());
    }
    Ok(sup)
}

// ---------------------------------------------------------------------------
// Target plans
// ---------------------------------------------------------------------------

type RepFn = Box<dyn Fn(&SampleBatch) -> Result<Vec<f64>> + Send + Sync>;

struct TargetPlan {
    names: Vec<String>,
    limits: Vec<LimitLaw>,
    per_rep: RepFn,
    /// For the joint target: size of the first coordinate block.
    joint_split: Option<usize>,
    /// Report per-statistic aggregates without verdicts (used by the joint
    /// target, whose per-coordinate Gaussian limits presume ℓ ≪ √k while
    /// its decorrelation claim does not).
    informational_stats: bool,
    notes: Vec<String>,
}

/// Shared deterministic constants of a window.
struct Frame {
    x_n: f64,
    z_n: f64,
    gap: f64,
    r1_x: f64,
    r2_x: f64,
    r1_z: f64,
    r2_z: f64,
    mu_kl: f64,
    tau_kl: f64,
    mu_k1: f64,
    tau_k1: f64,
    mu_l1: f64,
    tau_l1: f64,
}

fn build_frame(model: &TailModel, n: usize, k: usize, ell: usize) -> Result<Frame> {
    let a = k as f64 / n as f64;
    let b = ell as f64 / n as f64;
    let x_n = model.quantile_g(a)?;
    let z_n = model.quantile_g(b)?;
    let (mu_kl, tau_kl) = centering(model, n, k, ell)?;
    let (mu_k1, tau_k1) = centering(model, n, k, 1)?;
    let (mu_l1, tau_l1) = if ell >= 2 {
        centering(model, n, ell, 1)?
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(Frame {
        x_n,
        z_n,
        gap: z_n - x_n,
        r1_x: r_p(model, 1, a, 0.0)?,
        r2_x: r_p(model, 2, a, 0.0)?,
        r1_z: r_p(model, 1, b, 0.0)?,
        r2_z: r_p(model, 2, b, 0.0)?,
        mu_kl,
        tau_kl,
        mu_k1,
        tau_k1,
        mu_l1,
        tau_l1,
    })
}

fn gap_of(batch: &SampleBatch, k: usize, ell: usize) -> Result<f64> {
    let c = batch.y_from_top(ell) - batch.y_from_top(k);
    if c <= 0.0 {
        return Err(Error::DegenerateWindow("tied order statistics".into()));
    }
    Ok(c)
}

fn reject_gamma_two(model: &TailModel) -> Result<GammaParam> {
    let g = model.regime_gamma();
    if let GammaParam::Finite(v) = g {
        if (v - 2.0).abs() < 1e-12 {
            return Err(Error::InvalidConfig(
                "gamma = 2 sits on the regime boundary where the limit depends on b; not a supported verification target".into(),
            ));
        }
    }
    Ok(g)
}

fn build_plan(config: &ExperimentConfig, k: usize, ell: usize) -> Result<TargetPlan> {
    let model = config.model.clone();
    let n = config.n;
    let target = config.target;
    let gamma = model.regime_gamma();
    let co = CoefficientSet::new(gamma)?;
    let sqrt_k = (k as f64).sqrt();
    let sqrt_l = (ell as f64).sqrt();

    let simple = |name: &str, limit: LimitLaw, f: RepFn| TargetPlan {
        names: vec![name.to_string()],
        limits: vec![limit],
        per_rep: f,
        joint_split: None,
        informational_stats: false,
        notes: vec![],
    };

    Ok(match target {
        TheoremTarget::T3_1 => {
            let fr = build_frame(&model, n, k, ell)?;
            let limit = LimitLaw::Normal {
                sigma2: asymptotics::sigma(0, gamma)?,
            };
            let m = model.clone();
            simple(
                "t2_random_centering",
                limit,
                Box::new(move |b| {
                    let t2 = estimators::t2(b, k, ell)?;
                    let x_tilde = b.y_from_top(k);
                    let (mu_t, _) = centering_random(&m, n, k, ell, x_tilde)?;
                    Ok(vec![sqrt_k * (t2 - mu_t) / fr.mu_kl])
                }),
            )
        }
        TheoremTarget::T3_2 => {
            let fr = build_frame(&model, n, k, ell)?;
            let limit = LimitLaw::Normal {
                sigma2: asymptotics::sigma(1, gamma)?,
            };
            simple(
                "t2_deterministic_centering",
                limit,
                Box::new(move |b| {
                    let t2 = estimators::t2(b, k, ell)?;
                    Ok(vec![sqrt_k * (t2 - fr.mu_k1) / fr.r1_x])
                }),
            )
        }
        TheoremTarget::T4_1 => {
            let fr = build_frame(&model, n, k, ell)?;
            let limit = LimitLaw::Normal {
                sigma2: asymptotics::sigma(2, gamma)?,
            };
            let m = model.clone();
            simple(
                "a1_random_centering",
                limit,
                Box::new(move |b| {
                    let a1 = estimators::a1(b, k, ell)?;
                    let x_tilde = b.y_from_top(k);
                    let (_, tau_t) = centering_random(&m, n, k, ell, x_tilde)?;
                    Ok(vec![sqrt_k * (a1 - tau_t) / fr.r2_x])
                }),
            )
        }
        TheoremTarget::T4_2 => {
            let fr = build_frame(&model, n, k, ell)?;
            let limit = LimitLaw::Normal {
                sigma2: asymptotics::sigma(3, gamma)?,
            };
            simple(
                "a1_deterministic_centering",
                limit,
                Box::new(move |b| {
                    let a1 = estimators::a1(b, k, ell)?;
                    Ok(vec![sqrt_k * (a1 - fr.tau_k1) / fr.r2_x])
                }),
            )
        }
        TheoremTarget::T5_1 | TheoremTarget::C5_1 => {
            let gamma = reject_gamma_two(&model)?;
            let fr = build_frame(&model, n, k, ell)?;
            let nu = config.nu;
            match gamma {
                GammaParam::Finite(g) if g < 2.0 => simple(
                    "gap_statistic",
                    LimitLaw::Normal { sigma2: co.e1 * co.e1 },
                    Box::new(move |b| {
                        let c = gap_of(b, k, ell)?;
                        Ok(vec![sqrt_k * (c - fr.gap) / fr.r1_x])
                    }),
                ),
                _ if !config.ell_rule.grows() => {
                    let limit = match gamma {
                        GammaParam::Infinite => LimitLaw::NegLogErlang { ell },
                        GammaParam::Finite(g) => LimitLaw::WeibullGap { gamma: g, ell },
                    };
                    // The reciprocal statistic n^ν·T8(ν)^{-1} recovers the
                    // gap exactly; going through T8 keeps this the same code
                    // path the estimate command exercises.
                    simple(
                        "gap_statistic",
                        limit,
                        Box::new(move |b| {
                            let c = gap_of(b, k, ell)?;
                            let t8 = (b.n() as f64).powf(-nu) / c;
                            let c_back = (b.n() as f64).powf(-nu) / t8;
                            Ok(vec![(c_back - fr.gap) / fr.r1_z])
                        }),
                    )
                }
                _ => simple(
                    "gap_statistic",
                    LimitLaw::Normal { sigma2: co.e1 * co.e1 },
                    Box::new(move |b| {
                        let c = gap_of(b, k, ell)?;
                        Ok(vec![sqrt_l * (c - fr.gap) / fr.r1_z])
                    }),
                ),
            }
        }
        TheoremTarget::T6_1 => {
            let limit = LimitLaw::Normal {
                sigma2: asymptotics::sigma(4, gamma)?,
            };
            let m = model.clone();
            simple(
                "ratio_random_centering",
                limit,
                Box::new(move |b| {
                    let t2 = estimators::t2(b, k, ell)?;
                    let a1 = estimators::a1(b, k, ell)?;
                    if !(a1 > 0.0) {
                        return Err(Error::DegenerateWindow("a1 = 0".into()));
                    }
                    let x_tilde = b.y_from_top(k);
                    let (mu_t, tau_t) = centering_random_upper(&m, n, k, x_tilde)?;
                    Ok(vec![sqrt_k * (t2 / a1.sqrt() - mu_t / tau_t.sqrt())])
                }),
            )
        }
        TheoremTarget::T6_2 => {
            let fr = build_frame(&model, n, k, ell)?;
            let limit = LimitLaw::Normal {
                sigma2: asymptotics::sigma(5, gamma)?,
            };
            simple(
                "ratio_deterministic_centering",
                limit,
                Box::new(move |b| {
                    let t2 = estimators::t2(b, k, ell)?;
                    let a1 = estimators::a1(b, k, ell)?;
                    if !(a1 > 0.0) {
                        return Err(Error::DegenerateWindow("a1 = 0".into()));
                    }
                    Ok(vec![sqrt_k * (t2 / a1.sqrt() - fr.mu_k1 / fr.tau_k1.sqrt())])
                }),
            )
        }
        TheoremTarget::T6_3 => {
            let gamma = reject_gamma_two(&model)?;
            let fr = build_frame(&model, n, k, ell)?;
            let c3 = fr.gap / fr.mu_k1;
            let mut notes = vec![];
            let (name, limit, f): (&str, LimitLaw, RepFn) = match gamma {
                GammaParam::Infinite if !config.ell_rule.grows() => (
                    "t3_statistic",
                    LimitLaw::NegLogErlang { ell },
                    Box::new(move |b: &SampleBatch| {
                        let c = gap_of(b, k, ell)?;
                        let t2 = estimators::t2(b, k, ell)?;
                        if !(t2 > 0.0) {
                            return Err(Error::DegenerateWindow("t2 = 0".into()));
                        }
                        Ok(vec![(fr.r1_x / fr.r1_z) * (c / t2 - c3)])
                    }),
                ),
                GammaParam::Infinite => (
                    "t3_statistic",
                    LimitLaw::Normal { sigma2: 1.0 },
                    Box::new(move |b: &SampleBatch| {
                        let c = gap_of(b, k, ell)?;
                        let t2 = estimators::t2(b, k, ell)?;
                        if !(t2 > 0.0) {
                            return Err(Error::DegenerateWindow("t2 = 0".into()));
                        }
                        Ok(vec![sqrt_l * (fr.r1_x / fr.r1_z) * (c / t2 - c3)])
                    }),
                ),
                GammaParam::Finite(g) if g > 2.0 => (
                    "t3_statistic",
                    LimitLaw::Normal { sigma2: co.e1 * co.e1 },
                    Box::new(move |b: &SampleBatch| {
                        let c = gap_of(b, k, ell)?;
                        let t2 = estimators::t2(b, k, ell)?;
                        if !(t2 > 0.0) {
                            return Err(Error::DegenerateWindow("t2 = 0".into()));
                        }
                        Ok(vec![sqrt_l * (fr.r1_x / fr.r1_z) * (c / t2 - c3)])
                    }),
                ),
                GammaParam::Finite(g) => {
                    notes.push(
                        "limit variance (γ+1)²(5γ+8)/(γ+2) has no independent anchor; low confidence".into(),
                    );
                    (
                        "t3_statistic",
                        LimitLaw::Normal {
                            sigma2: (g + 1.0).powi(2) * (5.0 * g + 8.0) / (g + 2.0),
                        },
                        Box::new(move |b: &SampleBatch| {
                            let c = gap_of(b, k, ell)?;
                            let t2 = estimators::t2(b, k, ell)?;
                            if !(t2 > 0.0) {
                                return Err(Error::DegenerateWindow("t2 = 0".into()));
                            }
                            Ok(vec![sqrt_k * (c / t2 - c3)])
                        }),
                    )
                }
            };
            let mut plan = simple(name, limit, f);
            plan.notes = notes;
            plan
        }
        TheoremTarget::T6_4 => {
            let gamma = reject_gamma_two(&model)?;
            if ell < 2 {
                return Err(Error::InvalidConfig("this target needs ell >= 2".into()));
            }
            let fr = build_frame(&model, n, k, ell)?;
            let c6 = fr.gap / fr.mu_l1;
            let v = match gamma {
                GammaParam::Finite(g) if g < 2.0 => sqrt_l * fr.gap / fr.r1_z,
                _ => sqrt_l * fr.r1_z / fr.gap,
            };
            let mut plan = simple(
                "t6_inverse",
                LimitLaw::Normal {
                    sigma2: asymptotics::sigma(1, gamma)?,
                },
                Box::new(move |b| {
                    let c = gap_of(b, k, ell)?;
                    let t5 = estimators::t2(b, ell, 1)?;
                    if !(t5 > 0.0) {
                        return Err(Error::DegenerateWindow("t5 = 0".into()));
                    }
                    Ok(vec![v * (c / t5 - c6)])
                }),
            );
            if matches!(gamma, GammaParam::Finite(g) if g < 2.0) {
                plan.notes.push("below-boundary scaling used as tabulated; low confidence".into());
            }
            plan
        }
        TheoremTarget::T6_5 => {
            let gamma = reject_gamma_two(&model)?;
            if ell < 2 {
                return Err(Error::InvalidConfig("this target needs ell >= 2".into()));
            }
            let fr = build_frame(&model, n, k, ell)?;
            let c7 = fr.gap * fr.gap / fr.tau_l1;
            let v = match gamma {
                GammaParam::Finite(g) if g < 2.0 => sqrt_l * fr.gap * fr.gap / fr.r2_z,
                _ => sqrt_l * fr.r2_z / (fr.gap * fr.gap),
            };
            let mut plan = simple(
                "t7_inverse",
                LimitLaw::Normal {
                    sigma2: asymptotics::sigma(3, gamma)?,
                },
                Box::new(move |b| {
                    let c = gap_of(b, k, ell)?;
                    let a1 = estimators::a1(b, ell, 1)?;
                    if !(a1 > 0.0) {
                        return Err(Error::DegenerateWindow("a1(ell,1) = 0".into()));
                    }
                    Ok(vec![v * (c * c / a1 - c7)])
                }),
            );
            if matches!(gamma, GammaParam::Finite(g) if g < 2.0) {
                plan.notes.push("below-boundary scaling used as tabulated; low confidence".into());
            }
            plan
        }
        TheoremTarget::T7_1 => build_joint_plan(config, k, ell)?,
        TheoremTarget::ThmB => {
            let expected = detect::expected_label(&model);
            let thresholds = detect::DetectThresholds::default();
            let nu = config.nu;
            TargetPlan {
                names: vec!["detection_accuracy".to_string()],
                limits: vec![LimitLaw::RateOnly {
                    target: tolerances::DETECT_TARGET_ACCURACY,
                }],
                per_rep: Box::new(move |b| {
                    let r = detect::detect_with_windows(b, k, ell, nu, &thresholds)?;
                    Ok(vec![if r.domain_label.same_domain(&expected) {
                        1.0
                    } else {
                        0.0
                    }])
                }),
                joint_split: None,
                informational_stats: false,
                notes: vec![],
            }
        }
    })
}

/// The joint 8-coordinate target: the first block carries the wide-window
/// statistics, the second the narrow-window ones; the two must decorrelate.
fn build_joint_plan(config: &ExperimentConfig, k: usize, ell: usize) -> Result<TargetPlan> {
    let model = config.model.clone();
    let n = config.n;
    if ell < 2 {
        return Err(Error::InvalidConfig("the joint target needs ell >= 2".into()));
    }
    let gamma = reject_gamma_two(&model)?;
    let co = CoefficientSet::new(gamma)?;
    let fr = build_frame(&model, n, k, ell)?;
    let sqrt_k = (k as f64).sqrt();
    let sqrt_l = (ell as f64).sqrt();
    // Wide-block centerings at the (k,ℓ) window itself: the tabulated
    // (k,1)-window centerings presume ℓ ≪ √k, and at wider ℓ they shift
    // every coordinate by a deterministic offset. Covariances are immune
    // either way; the windowed forms keep the reported moments meaningful.
    let c1 = fr.mu_kl / fr.tau_kl.sqrt();
    let c3 = fr.gap / fr.mu_kl;
    let c6 = fr.gap / fr.mu_l1;
    let c7 = fr.gap * fr.gap / fr.tau_l1;
    let y0 = model.y0();
    let below = matches!(gamma, GammaParam::Finite(g) if g < 2.0);

    // Limiting variances for the per-coordinate checks come from the
    // reconstruction over the closed-form base.
    let base = asymptotics::predicted_base(gamma)?;
    let regime = match gamma {
        GammaParam::Infinite => asymptotics::CovRegime::GammaInf,
        GammaParam::Finite(g) if g > 2.0 => asymptotics::CovRegime::GammaGt2(g),
        GammaParam::Finite(g) => asymptotics::CovRegime::GammaLt2(g),
    };
    let rec = asymptotics::reconstructed_limit_matrices(
        regime,
        &base,
        asymptotics::Provenance::ClosedForm,
    )?;
    let mut names: Vec<String> = Vec::new();
    let mut limits: Vec<LimitLaw> = Vec::new();
    let star_names: &[&str] = if below {
        &["ratio", "quadratic_sum", "linear_sum", "t3"]
    } else {
        &["ratio", "quadratic_sum", "linear_sum"]
    };
    for (i, nm) in star_names.iter().enumerate() {
        names.push(format!("wide::{nm}"));
        limits.push(LimitLaw::Normal {
            sigma2: rec.star.entries[i][i],
        });
    }
    let ss_names: &[&str] = if below {
        &["t5", "t6_inverse", "t7_inverse", "t9"]
    } else if matches!(gamma, GammaParam::Finite(_)) {
        &["t3", "t5", "t6_inverse", "t7_inverse", "t9"]
    } else {
        &["t3", "t5", "t6_inverse", "t7_inverse", "t8_inverse"]
    };
    for (i, nm) in ss_names.iter().enumerate() {
        names.push(format!("narrow::{nm}"));
        limits.push(LimitLaw::Normal {
            sigma2: rec.star_star.entries[i][i],
        });
    }
    let split = star_names.len();
    let finite_gamma = match gamma {
        GammaParam::Finite(g) => Some(g),
        GammaParam::Infinite => None,
    };

    let per_rep: RepFn = Box::new(move |b| {
        let c_gap = gap_of(b, k, ell)?;
        let t2 = estimators::t2(b, k, ell)?;
        let a1 = estimators::a1(b, k, ell)?;
        let t5 = estimators::t2(b, ell, 1)?;
        let a1_l = estimators::a1(b, ell, 1)?;
        if !(a1 > 0.0 && t2 > 0.0 && t5 > 0.0 && a1_l > 0.0) {
            return Err(Error::DegenerateWindow("zero windowed sums".into()));
        }
        let mut out = Vec::with_capacity(8);
        // wide block
        out.push(sqrt_k * (t2 / a1.sqrt() - c1));
        out.push(sqrt_k * (a1 - fr.tau_kl) / fr.r2_x);
        out.push(sqrt_k * (t2 - fr.mu_kl) / fr.r1_x);
        if below {
            out.push(sqrt_k * (c_gap / t2 - c3));
        }
        // narrow block
        if !below {
            out.push(sqrt_l * (fr.r1_x / fr.r1_z) * (c_gap / t2 - c3));
        }
        out.push(sqrt_l * (t5 - fr.mu_l1) / fr.r1_z);
        let (v6, v7) = if below {
            (
                sqrt_l * fr.gap / fr.r1_z,
                sqrt_l * fr.gap * fr.gap / fr.r2_z,
            )
        } else {
            (
                sqrt_l * fr.r1_z / fr.gap,
                sqrt_l * fr.r2_z / (fr.gap * fr.gap),
            )
        };
        out.push(v6 * (c_gap / t5 - c6));
        out.push(v7 * (c_gap * c_gap / a1_l - c7));
        match finite_gamma {
            None => out.push(sqrt_l * (c_gap - fr.gap) / fr.r1_z),
            Some(_g) => {
                let y0 = y0.ok_or(Error::MissingUpperEndpoint)?;
                let z_t = b.y_from_top(ell);
                let x_t = b.y_from_top(k);
                if y0 <= z_t {
                    return Err(Error::DegenerateWindow("sample exceeds y0".into()));
                }
                let t9 = (y0 - z_t) / (y0 - x_t);
                let c9 = (y0 - fr.z_n) / (y0 - fr.x_n);
                let v9 = sqrt_l * fr.r1_x / fr.r1_z;
                out.push(v9 * (t9 - c9));
            }
        }
        Ok(out)
    });

    let mut notes = vec![
        "per-coordinate limits are the closed-form base reconstruction; they presume ℓ ≪ √k, so coordinate aggregates are reported without verdicts — the cross-block test decides".to_string(),
    ];
    let _ = co;
    if below {
        notes.push("below-boundary scalings used as tabulated; low confidence".into());
    }
    Ok(TargetPlan {
        names,
        limits,
        per_rep,
        joint_split: Some(split),
        informational_stats: true,
        notes,
    })
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// Run the experiment and produce a report with verdicts under the default
/// tolerances.
pub fn run(config: &ExperimentConfig) -> Result<McReport> {
    run_with_tolerances(config, &Tolerances::default())
}

pub fn run_with_tolerances(config: &ExperimentConfig, tol: &Tolerances) -> Result<McReport> {
    let start = Instant::now();
    if config.reps == 0 {
        return Err(Error::InvalidConfig("reps must be positive".into()));
    }
    let n = config.n;
    let k = config.k_rule.resolve(n);
    let ell = config.ell_rule.resolve(n);
    if !(1 <= ell && ell < k && k < n) {
        return Err(Error::InvalidConfig(format!(
            "resolved window invalid: ell={ell}, k={k}, n={n}"
        )));
    }
    let plan = build_plan(config, k, ell)?;
    let mut warnings = config.rate_warnings(k, ell);
    warnings.extend(plan.notes.iter().cloned());

    let model = config.model.clone();
    let seed = config.seed;
    let results: Vec<Result<Vec<f64>>> = (0..config.reps)
        .into_par_iter()
        .map(|i| {
            let batch = model.draw(n, derive_seed(seed, i as u64))?;
            (plan.per_rep)(&batch)
        })
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(config.reps);
    let mut excluded = 0usize;
    for r in results {
        match r {
            Ok(v) => rows.push(v),
            Err(Error::DegenerateWindow(_)) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    if (excluded as f64) > tol.max_excluded * config.reps as f64 {
        return Err(Error::ExperimentFailed(format!(
            "{excluded} of {} replicates degenerate (> {:.1}%)",
            config.reps,
            100.0 * tol.max_excluded
        )));
    }
    if rows.len() < 2 {
        return Err(Error::ExperimentFailed("fewer than 2 usable replicates".into()));
    }

    let m_used = rows.len();
    let dim = plan.names.len();
    let mut stats = Vec::with_capacity(dim);
    for (idx, name) in plan.names.iter().enumerate() {
        let column: Vec<f64> = rows.iter().map(|r| r[idx]).collect();
        stats.push(summarize(
            name,
            plan.limits[idx],
            &column,
            tol,
            plan.informational_stats,
        )?);
    }

    let joint = match plan.joint_split {
        None => None,
        Some(split) => {
            let rho = ell as f64 / k as f64;
            Some(cross_block(&rows, split, dim, m_used, tol, rho))
        }
    };

    let pass = stats.iter().all(|s| s.pass) && joint.as_ref().map_or(true, |j| j.pass);
    Ok(McReport {
        config: config.echo(k, ell),
        warnings,
        stats,
        joint,
        replicates_used: m_used,
        excluded,
        pass,
        wall_clock_ms: start.elapsed().as_millis(),
    })
}

fn summarize(
    name: &str,
    limit: LimitLaw,
    column: &[f64],
    tol: &Tolerances,
    informational: bool,
) -> Result<StatReport> {
    let mo = moments(column);
    let (theo_mean, theo_var) = limit.mean_var();
    let m = column.len() as f64;
    let mut verdicts = Vec::new();
    if informational {
        let ks = match limit {
            LimitLaw::RateOnly { .. } => None,
            _ => Some(ks_distance(column, |x| limit.cdf(x))?),
        };
        return Ok(StatReport {
            name: name.to_string(),
            limit,
            limit_label: limit.label(),
            emp_mean: mo.mean,
            emp_variance: mo.variance,
            emp_skewness: mo.skewness,
            ks_distance: ks,
            theoretical_mean: theo_mean,
            theoretical_variance: theo_var,
            verdicts,
            pass: true,
        });
    }
    let ks = match limit {
        LimitLaw::RateOnly { target } => {
            verdicts.push(Verdict {
                check: "rate >= floor".into(),
                value: mo.mean,
                bound: target,
                pass: mo.mean >= target,
            });
            None
        }
        LimitLaw::Normal { sigma2 } => {
            let ks = ks_distance(column, |x| limit.cdf(x))?;
            let sd = sigma2.sqrt();
            let var_ratio = (mo.variance / sigma2 - 1.0).abs();
            verdicts.push(Verdict {
                check: "|emp_var/sigma2 - 1|".into(),
                value: var_ratio,
                bound: tol.var_ratio,
                pass: var_ratio <= tol.var_ratio,
            });
            let mean_bound = tol.mean_se_mult * sd / m.sqrt();
            verdicts.push(Verdict {
                check: "|emp_mean|".into(),
                value: mo.mean.abs(),
                bound: mean_bound,
                pass: mo.mean.abs() <= mean_bound,
            });
            let ks_bound = tol.ks_se_mult / m.sqrt() + tol.ks_slack;
            verdicts.push(Verdict {
                check: "ks".into(),
                value: ks,
                bound: ks_bound,
                pass: ks <= ks_bound,
            });
            Some(ks)
        }
        LimitLaw::NegLogErlang { .. } | LimitLaw::WeibullGap { .. } => {
            let ks = ks_distance(column, |x| limit.cdf(x))?;
            verdicts.push(Verdict {
                check: "ks".into(),
                value: ks,
                bound: tol.ks_extremal,
                pass: ks <= tol.ks_extremal,
            });
            Some(ks)
        }
    };
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(StatReport {
        name: name.to_string(),
        limit,
        limit_label: limit.label(),
        emp_mean: mo.mean,
        emp_variance: mo.variance,
        emp_skewness: mo.skewness,
        ks_distance: ks,
        theoretical_mean: theo_mean,
        theoretical_variance: theo_var,
        verdicts,
        pass,
    })
}

fn cross_block(
    rows: &[Vec<f64>],
    split: usize,
    dim: usize,
    m_used: usize,
    tol: &Tolerances,
    rho: f64,
) -> JointBlockReport {
    let col = |idx: usize| -> Vec<f64> { rows.iter().map(|r| r[idx]).collect() };
    let mut cross = Vec::new();
    let mut max_ratio: f64 = 0.0;
    let m = m_used as f64;
    for i in 0..split {
        let a = col(i);
        let va = moments(&a).variance;
        for j in split..dim {
            let b = col(j);
            let vb = moments(&b).variance;
            let c = covariance(&a, &b);
            let se = ((va * vb + c * c) / m).sqrt();
            max_ratio = max_ratio.max(c.abs() / se);
            cross.push((i, j, c, se));
        }
    }
    JointBlockReport {
        split,
        cross,
        max_abs_over_se: max_ratio,
        coupling_rate_scale: {
            let big_l = (1.0 / rho).ln();
            rho.sqrt() * (0.5 * big_l * big_l + big_l)
        },
        pass: max_ratio <= tol.joint_se_mult,
    }
}

/// Re-apply verdicts to an existing report under different tolerances.
pub fn compare(report: &McReport, tol: &Tolerances) -> McReport {
    let mut out = report.clone();
    for s in &mut out.stats {
        let m = report.replicates_used as f64;
        for v in &mut s.verdicts {
            match v.check.as_str() {
                "|emp_var/sigma2 - 1|" => {
                    v.bound = tol.var_ratio;
                    v.pass = v.value <= v.bound;
                }
                "|emp_mean|" => {
                    if let LimitLaw::Normal { sigma2 } = s.limit {
                        v.bound = tol.mean_se_mult * sigma2.sqrt() / m.sqrt();
                        v.pass = v.value <= v.bound;
                    }
                }
                "ks" => {
                    v.bound = match s.limit {
                        LimitLaw::Normal { .. } => tol.ks_se_mult / m.sqrt() + tol.ks_slack,
                        _ => tol.ks_extremal,
                    };
                    v.pass = v.value <= v.bound;
                }
                "rate >= floor" => {
                    v.bound = tol.accuracy_floor;
                    v.pass = v.value >= v.bound;
                }
                _ => {}
            }
        }
        s.pass = s.verdicts.iter().all(|v| v.pass);
    }
    if let Some(j) = &mut out.joint {
        j.pass = j.max_abs_over_se <= tol.joint_se_mult;
    }
    out.pass = out.stats.iter().all(|s| s.pass) && out.joint.as_ref().map_or(true, |j| j.pass);
    out
}
