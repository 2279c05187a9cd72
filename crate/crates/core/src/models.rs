//! Tail models in the three extremal domains, specified on the log scale.
//!
//! A model owns the quantile `Q(u) = G^{-1}(1-u)` of `Y = log X`, built from
//! one of the three representations
//!
//! ```text
//! Fréchet(γ):  Q(u) = -(ln u)/γ + ln c + ln(1+f(u)) + ∫_u^1 b(t)/t dt
//! Weibull(γ):  y0 - Q(u) = c (1+f(u)) u^{1/γ} exp(∫_u^1 b(t)/t dt)
//! Gumbel:      Q(u) = d - s(u) + ∫_u^1 s(t)/t dt,
//!              s(u) = c (1+f(u)) exp(∫_u^1 b(t)/t dt)
//! ```
//!
//! with perturbations `f, b → 0` as `u → 0`. Samples are produced by inverse
//! transform, `X = exp(Q(U))`, and are deterministic given `(model, n, seed)`.
//!
//! Note on the Gumbel form: with `s ≡ c` it coincides with the Fréchet form
//! at `γ = 1/c`, i.e. the pure constant-`s` model is a Pareto distribution on
//! the `X` scale. A distribution genuinely attracted to the Gumbel law needs
//! `s(u) → 0`; the `gumbel_slow` builtin provides one with
//! `s(u) = c/(1 - ln u)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Smallest uniform variate used by the sampler; draws are clamped to
/// `[2^-64, 1 - 2^-64]` so quantiles stay finite.
pub const UNIFORM_CLAMP: f64 = 5.421010862427522e-20; // 2^-64

/// Relative tolerance for perturbation integrals `∫_u^1 b(t)/t dt`.
pub const B_INTEGRAL_REL_TOL: f64 = 1e-10;

/// Which regularity condition a perturbation pair is declared to satisfy.
/// Declared by the constructor, not inferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularityClass {
    Gamma0,
    Gamma1,
    Gamma2,
    None,
}

/// A perturbation function with closed forms where available.
#[derive(Clone)]
pub enum Perturbation {
    /// Identically zero.
    Zero,
    /// `f(u) = u sin(1/u)`.
    OscillatingSine,
    /// `f(u) = a u^ρ`, `ρ > 1`.
    Power { a: f64, rho: f64 },
    /// `b(t) = t`.
    Linear,
    /// `b(t) = t^a`, `a > 1`.
    PowerTail { a: f64 },
    /// `b(t) = sign / ln ln (1/t)` for `t < e^{-e}`, frozen at `sign`
    /// closer to one (the raw form has a pole at `t = 1/e`).
    LogLog { sign: f64 },
    /// `b(t) = -1/(1 - ln t)`; drives `s(u) = c/(1 - ln u) → 0`.
    SlowDecay,
    /// Arbitrary user function.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::Zero => write!(f, "Zero"),
            Perturbation::OscillatingSine => write!(f, "OscillatingSine"),
            Perturbation::Power { a, rho } => write!(f, "Power{{a:{a},rho:{rho}}}"),
            Perturbation::Linear => write!(f, "Linear"),
            Perturbation::PowerTail { a } => write!(f, "PowerTail{{a:{a}}}"),
            Perturbation::LogLog { sign } => write!(f, "LogLog{{sign:{sign}}}"),
            Perturbation::SlowDecay => write!(f, "SlowDecay"),
            Perturbation::Custom(_) => write!(f, "Custom"),
        }
    }
}

const LOGLOG_FREEZE: f64 = 0.06598803584531254; // e^{-e}

impl Perturbation {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Perturbation::Zero => 0.0,
            Perturbation::OscillatingSine => u * (1.0 / u).sin(),
            Perturbation::Power { a, rho } => a * u.powf(*rho),
            Perturbation::Linear => u,
            Perturbation::PowerTail { a } => u.powf(*a),
            Perturbation::LogLog { sign } => {
                if u < LOGLOG_FREEZE {
                    sign / (1.0 / u).ln().ln()
                } else {
                    *sign
                }
            }
            Perturbation::SlowDecay => -1.0 / (1.0 - u.ln()),
            Perturbation::Custom(f) => f(u),
        }
    }

    /// `∫_u^1 eval(t)/t dt`, closed form where one exists.
    pub(crate) fn log_weighted_tail_integral(&self, u: f64) -> Result<f64> {
        match self {
            Perturbation::Zero => Ok(0.0),
            Perturbation::Linear => Ok(1.0 - u),
            Perturbation::PowerTail { a } => Ok((1.0 - u.powf(*a)) / a),
            Perturbation::SlowDecay => Ok(-(1.0 - u.ln()).ln()),
            Perturbation::Power { a, rho } => Ok(a * (1.0 - u.powf(*rho)) / rho),
            other => {
                let f = |t: f64| other.eval(t);
                quad::log_scale_tail_integral(&f, u, B_INTEGRAL_REL_TOL)
            }
        }
    }
}

/// The pair `(f, b)` of a Karamata-style representation, tagged with the
/// regularity class it is declared to satisfy.
#[derive(Debug, Clone)]
pub struct PerturbationPair {
    pub f: Perturbation,
    pub b: Perturbation,
    pub regularity_class: RegularityClass,
}

impl PerturbationPair {
    pub fn zero() -> Self {
        Self {
            f: Perturbation::Zero,
            b: Perturbation::Zero,
            regularity_class: RegularityClass::Gamma0,
        }
    }

    pub fn new(f: Perturbation, b: Perturbation, regularity_class: RegularityClass) -> Self {
        Self {
            f,
            b,
            regularity_class,
        }
    }

    /// Largest `(|f|, |b|)` over the decreasing grid `u = 10^-6 … 10^-12`;
    /// the vanishing invariant is `sup ≤ declared envelope` over this tail.
    pub fn tail_sup(&self) -> (f64, f64) {
        let mut sf: f64 = 0.0;
        let mut sb: f64 = 0.0;
        for k in 6..=12 {
            let u = 10f64.powi(-k);
            sf = sf.max(self.f.eval(u).abs());
            sb = sb.max(self.b.eval(u).abs());
        }
        (sf, sb)
    }

    /// `1 + f(u) > 0` probed on a log grid over (0, 1).
    fn check_one_plus_f(&self) -> Result<()> {
        for i in 0..256 {
            let u = 10f64.powf(-12.0 * (i as f64 + 0.5) / 256.0);
            if 1.0 + self.f.eval(u) <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "1 + f(u) <= 0 at u = {u:e}"
                )));
            }
        }
        Ok(())
    }
}

/// Extremal domain of the model, with its domain-specific parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// Heavy upper tail, tail index `gamma > 0`.
    Frechet { gamma: f64 },
    /// Finite upper endpoint `y0` on the log scale, index `gamma > 0`.
    Weibull { gamma: f64, y0: f64 },
    /// de Haan form with location constant `d`.
    Gumbel { d: f64 },
}

/// A distribution on `X >= 1` given through the quantile of `Y = log X`.
#[derive(Debug, Clone)]
pub struct TailModel {
    pub domain: Domain,
    pub c: f64,
    pub perturbation: PerturbationPair,
    id: String,
}

/// Number of grid points for the construction-time monotonicity check of
/// user-supplied pairs.
const MONOTONE_GRID: usize = 1024;

impl TailModel {
    /// Construct a model from user-supplied parts. The quantile is checked
    /// for monotonicity on a 1024-point log grid and rejected on failure.
    pub fn new(domain: Domain, c: f64, perturbation: PerturbationPair) -> Result<Self> {
        let m = Self::new_trusted(domain, c, perturbation, "custom")?;
        m.check_monotone_grid()?;
        Ok(m)
    }

    /// Construction without the dense monotonicity check. Builtins go
    /// through here; the exemplar perturbation families are tail-faithful
    /// but some are not monotone over the whole unit interval.
    fn new_trusted(
        domain: Domain,
        c: f64,
        perturbation: PerturbationPair,
        id: &str,
    ) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidModel(format!("c must be positive, got {c}")));
        }
        match domain {
            Domain::Frechet { gamma } | Domain::Weibull { gamma, .. } => {
                if !(gamma > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "gamma must be positive, got {gamma}"
                    )));
                }
            }
            Domain::Gumbel { d } => {
                if !d.is_finite() {
                    return Err(Error::InvalidModel("d must be finite".into()));
                }
            }
        }
        perturbation.check_one_plus_f()?;
        let model = Self {
            domain,
            c,
            perturbation,
            id: id.to_string(),
        };
        // X >= 1, i.e. Q(u) >= 0 toward u = 1. Probe close to the bulk edge.
        for j in 2..=6 {
            let u = 1.0 - 10f64.powi(-j);
            let q = model.quantile_g(u)?;
            if q < -1e-9 {
                return Err(Error::InvalidModel(format!(
                    "Q({u}) = {q} < 0 violates X >= 1"
                )));
            }
        }
        Ok(model)
    }

    fn check_monotone_grid(&self) -> Result<()> {
        // u ascends from 1e-12 toward 1; the quantile must not increase.
        let mut prev = f64::INFINITY;
        for i in (0..MONOTONE_GRID).rev() {
            let u = 10f64.powf(-12.0 * (i as f64 + 0.5) / MONOTONE_GRID as f64);
            let q = self.quantile_g(u)?;
            if q > prev {
                return Err(Error::InvalidModel(format!(
                    "quantile not nonincreasing near u = {u:e}"
                )));
            }
            prev = q;
        }
        Ok(())
    }

    /// Value of `G^{-1}(1-u)` for `u` in the open unit interval.
    pub fn quantile_g(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::ProbabilityOutOfRange(u));
        }
        let f_u = self.perturbation.f.eval(u);
        let ib = self.perturbation.b.log_weighted_tail_integral(u)?;
        let q = match self.domain {
            Domain::Frechet { gamma } => {
                -u.ln() / gamma + self.c.ln() + f_u.ln_1p() + ib
            }
            Domain::Weibull { gamma, y0 } => {
                y0 - self.c * (1.0 + f_u) * u.powf(1.0 / gamma) * ib.exp()
            }
            Domain::Gumbel { d } => {
                let s_u = self.c * (1.0 + f_u) * ib.exp();
                d - s_u + self.s_log_tail_integral(u)?
            }
        };
        if !q.is_finite() {
            return Err(Error::NonFinite {
                context: "quantile_g",
                value: q,
            });
        }
        Ok(q)
    }

    /// `∫_u^1 s(t)/t dt` for the Gumbel form.
    fn s_log_tail_integral(&self, u: f64) -> Result<f64> {
        match (&self.perturbation.f, &self.perturbation.b) {
            (Perturbation::Zero, Perturbation::Zero) => Ok(-self.c * u.ln()),
            (Perturbation::Zero, Perturbation::SlowDecay) => {
                Ok(self.c * (1.0 - u.ln()).ln())
            }
            (f, b) => {
                let c = self.c;
                let s = |t: f64| -> f64 {
                    let ib = b
                        .log_weighted_tail_integral(t)
                        .unwrap_or(f64::NAN);
                    c * (1.0 + f.eval(t)) * ib.exp()
                };
                quad::log_scale_tail_integral(&s, u, B_INTEGRAL_REL_TOL)
            }
        }
    }

    /// The `u` with `quantile_g(u) = t`, by bisection on the log scale.
    /// Results are clamped to the sampler's uniform range.
    pub fn invert_quantile(&self, t: f64) -> Result<f64> {
        let mut lo_v = UNIFORM_CLAMP.ln(); // small u, large quantile
        let mut hi_v = (-1e-16f64).ln_1p(); // u near 1, small quantile
        let q_lo = self.quantile_g(lo_v.exp())?;
        let q_hi = self.quantile_g(hi_v.exp())?;
        if t >= q_lo {
            return Ok(lo_v.exp());
        }
        if t <= q_hi {
            return Ok(hi_v.exp());
        }
        for _ in 0..90 {
            let mid = 0.5 * (lo_v + hi_v);
            let q = self.quantile_g(mid.exp())?;
            if q > t {
                lo_v = mid;
            } else {
                hi_v = mid;
            }
        }
        Ok((0.5 * (lo_v + hi_v)).exp())
    }

    /// Upper endpoint of `G` when finite.
    pub fn y0(&self) -> Option<f64> {
        match self.domain {
            Domain::Weibull { y0, .. } => Some(y0),
            _ => None,
        }
    }

    /// The `γ` parameter entering the limit laws: finite for the Weibull
    /// domain, `+∞` for the Fréchet and Gumbel domains.
    pub fn regime_gamma(&self) -> crate::asymptotics::GammaParam {
        match self.domain {
            Domain::Weibull { gamma, .. } => crate::asymptotics::GammaParam::Finite(gamma),
            _ => crate::asymptotics::GammaParam::Infinite,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Inverse-transform sampling; deterministic given `(self, n, seed)`.
    pub fn draw(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        if n < 2 {
            return Err(Error::InvalidSample(format!("need n >= 2, got {n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y: Vec<f64> = Vec::with_capacity(n);
        let hi = 1.0 - UNIFORM_CLAMP;
        for _ in 0..n {
            let u: f64 = rng.random::<f64>().clamp(UNIFORM_CLAMP, hi);
            y.push(self.quantile_g(u)?);
        }
        y.sort_unstable_by(f64::total_cmp);
        let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        Ok(SampleBatch {
            n,
            x_sorted: x,
            y_sorted: y,
            seed: Some(seed),
        })
    }
}

// ---------------------------------------------------------------------------
// Builtin menu
// ---------------------------------------------------------------------------

/// Named builtin models. Exemplar perturbation families (`b(t) = t`,
/// `b(t) = t^a`, the log-log family, `f(u) = u sin(1/u)`) are tail-faithful;
/// away from the tail some of them are not monotone, which is inherent to
/// the family, so builtins skip the dense construction check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    /// Pure Fréchet: `f = b = 0`.
    Pareto,
    /// Fréchet with `f(u) = u sin(1/u)`.
    Oscillatory,
    /// Fréchet with `f(u) = a u^ρ`.
    PowerF,
    /// Pure de Haan form, `s ≡ c` (coincides with Pareto at `γ = 1/c`).
    Gumbel,
    /// de Haan form with `s(u) = c/(1 - ln u) → 0`; genuinely Gumbel-attracted.
    GumbelSlow,
    /// Pure Weibull: `f = b = 0`.
    Weibull,
    /// Weibull with `b(t) = t`.
    WeibullLinearB,
    /// Weibull with `b(t) = t^a`, `a > 1`.
    WeibullPowerB,
    /// Weibull with `b(t) = ±1/ln ln(1/t)`.
    LoglogB,
}

impl Builtin {
    pub const ALL: [Builtin; 9] = [
        Builtin::Pareto,
        Builtin::Oscillatory,
        Builtin::PowerF,
        Builtin::Gumbel,
        Builtin::GumbelSlow,
        Builtin::Weibull,
        Builtin::WeibullLinearB,
        Builtin::WeibullPowerB,
        Builtin::LoglogB,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Pareto => "pareto",
            Builtin::Oscillatory => "oscillatory",
            Builtin::PowerF => "power-f",
            Builtin::Gumbel => "gumbel",
            Builtin::GumbelSlow => "gumbel-slow",
            Builtin::Weibull => "weibull",
            Builtin::WeibullLinearB => "weibull-linear-b",
            Builtin::WeibullPowerB => "weibull-power-b",
            Builtin::LoglogB => "loglog-b",
        }
    }

    pub fn parse(s: &str) -> Option<Builtin> {
        Builtin::ALL.iter().copied().find(|b| b.name() == s)
    }
}

/// Parameters accepted by [`builtin`]; unused fields are ignored by models
/// that do not take them.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BuiltinParams {
    /// Tail index for Fréchet/Weibull forms.
    pub gamma: f64,
    /// Scale constant `c > 0`.
    pub c: f64,
    /// Location constant for the Gumbel form.
    pub d: f64,
    /// Upper endpoint for Weibull forms; defaults to `c` so that `X >= 1`
    /// holds with the sample minimum approaching 1.
    pub y0: Option<f64>,
    /// Amplitude for `power-f`.
    pub a: f64,
    /// Exponent for `power-f` (`rho > 1`).
    pub rho: f64,
    /// Sign for `loglog-b` (`+1` or `-1`).
    pub sign: f64,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            c: 1.0,
            d: 1.0,
            y0: None,
            a: 1.0,
            rho: 2.0,
            sign: -1.0,
        }
    }
}

/// Default endpoint for perturbed bounded-tail builtins: the scale part
/// `S(u) = c(1+f(u)) u^{1/γ} exp(∫_u^1 b/t)` must stay below `y0` for the
/// sample to satisfy `X >= 1`, so the default endpoint is its grid supremum.
fn weibull_endpoint_default(c: f64, gamma: f64, pair: &PerturbationPair) -> Result<f64> {
    let mut sup = c;
    for i in 1..4096 {
        let u = i as f64 / 4096.0;
        let ib = pair.b.log_weighted_tail_integral(u)?;
        let sv = c * (1.0 + pair.f.eval(u)) * u.powf(1.0 / gamma) * ib.exp();
        if sv > sup {
            sup = sv;
        }
    }
    Ok(sup * (1.0 + 1e-9))
}

/// Construct a builtin model by name.
pub fn builtin(which: Builtin, params: BuiltinParams) -> Result<TailModel> {
    let BuiltinParams {
        gamma,
        c,
        d,
        y0,
        a,
        rho,
        sign,
    } = params;
    let y0 = y0.unwrap_or(c);
    let id = which.name();
    match which {
        Builtin::Pareto => TailModel::new_trusted(
            Domain::Frechet { gamma },
            c,
            PerturbationPair::zero(),
            id,
        ),
        Builtin::Oscillatory => TailModel::new_trusted(
            Domain::Frechet { gamma },
            c,
            PerturbationPair::new(
                Perturbation::OscillatingSine,
                Perturbation::Zero,
                RegularityClass::None,
            ),
            id,
        ),
        Builtin::PowerF => {
            if !(rho > 1.0) {
                return Err(Error::InvalidModel(format!("power-f needs rho > 1, got {rho}")));
            }
            TailModel::new_trusted(
                Domain::Frechet { gamma },
                c,
                PerturbationPair::new(
                    Perturbation::Power { a, rho },
                    Perturbation::Zero,
                    RegularityClass::Gamma0,
                ),
                id,
            )
        }
        Builtin::Gumbel => TailModel::new_trusted(
            Domain::Gumbel { d },
            c,
            PerturbationPair::zero(),
            id,
        ),
        Builtin::GumbelSlow => TailModel::new_trusted(
            Domain::Gumbel { d },
            c,
            PerturbationPair::new(
                Perturbation::Zero,
                Perturbation::SlowDecay,
                RegularityClass::Gamma0,
            ),
            id,
        ),
        Builtin::Weibull => TailModel::new_trusted(
            Domain::Weibull { gamma, y0 },
            c,
            PerturbationPair::zero(),
            id,
        ),
        Builtin::WeibullLinearB => {
            let pair = PerturbationPair::new(
                Perturbation::Zero,
                Perturbation::Linear,
                RegularityClass::Gamma0,
            );
            let y0 = match params.y0 {
                Some(v) => v,
                None => weibull_endpoint_default(c, gamma, &pair)?,
            };
            TailModel::new_trusted(Domain::Weibull { gamma, y0 }, c, pair, id)
        }
        Builtin::WeibullPowerB => {
            if !(a > 1.0) {
                return Err(Error::InvalidModel(format!(
                    "weibull-power-b needs a > 1, got {a}"
                )));
            }
            let pair = PerturbationPair::new(
                Perturbation::Zero,
                Perturbation::PowerTail { a },
                RegularityClass::Gamma0,
            );
            let y0 = match params.y0 {
                Some(v) => v,
                None => weibull_endpoint_default(c, gamma, &pair)?,
            };
            TailModel::new_trusted(Domain::Weibull { gamma, y0 }, c, pair, id)
        }
        Builtin::LoglogB => {
            if sign != 1.0 && sign != -1.0 {
                return Err(Error::InvalidModel(format!(
                    "loglog-b needs sign ±1, got {sign}"
                )));
            }
            let pair = PerturbationPair::new(
                Perturbation::Zero,
                Perturbation::LogLog { sign },
                RegularityClass::None,
            );
            let y0 = match params.y0 {
                Some(v) => v,
                None => weibull_endpoint_default(c, gamma, &pair)?,
            };
            TailModel::new_trusted(Domain::Weibull { gamma, y0 }, c, pair, id)
        }
    }
}

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

/// An i.i.d. sample `X_1 … X_n >= 1` with cached sorted order statistics and
/// the log transform `Y = log X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    n: usize,
    x_sorted: Vec<f64>,
    y_sorted: Vec<f64>,
    seed: Option<u64>,
}

impl SampleBatch {
    /// Build from raw values (e.g. a data file). Order does not matter.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSample(format!(
                "need at least 2 values, got {}",
                values.len()
            )));
        }
        for (i, &x) in values.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidSample(format!(
                    "value #{} is not finite",
                    i + 1
                )));
            }
            if x < 1.0 {
                return Err(Error::InvalidSample(format!(
                    "value #{} is {x} < 1; the model assumes X >= 1",
                    i + 1
                )));
            }
        }
        let mut x: Vec<f64> = values.to_vec();
        x.sort_unstable_by(f64::total_cmp);
        let y: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        Ok(Self {
            n: x.len(),
            x_sorted: x,
            y_sorted: y,
            seed: None,
        })
    }

    /// Build from log-scale values `Y >= 0` (convenience for tests).
    pub fn from_log_values(ys: &[f64]) -> Result<Self> {
        let xs: Vec<f64> = ys.iter().map(|y| y.exp()).collect();
        let mut batch = Self::from_values(&xs)?;
        // Store the given log values exactly rather than ln(exp(y)).
        let mut y = ys.to_vec();
        y.sort_unstable_by(f64::total_cmp);
        batch.y_sorted = y;
        Ok(batch)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Ascending order statistics of `X`.
    pub fn x_sorted(&self) -> &[f64] {
        &self.x_sorted
    }

    /// Ascending order statistics of `Y = log X`.
    pub fn y_sorted(&self) -> &[f64] {
        &self.y_sorted
    }

    /// `Y_{n-j, n}`, the `(j+1)`-th largest log value (`j = 0` is the max).
    pub fn y_from_top(&self, j: usize) -> f64 {
        self.y_sorted[self.n - 1 - j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pareto(gamma: f64) -> TailModel {
        builtin(
            Builtin::Pareto,
            BuiltinParams {
                gamma,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn frechet_pure_quantile() {
        let m = pareto(2.0);
        let q = m.quantile_g(0.25).unwrap();
        assert_relative_eq!(q, -(0.25f64.ln()) / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn gumbel_pure_quantile() {
        let m = builtin(Builtin::Gumbel, BuiltinParams::default()).unwrap();
        let q = m.quantile_g((-1.0f64).exp()).unwrap();
        assert_relative_eq!(q, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn weibull_pure_quantile() {
        let m = builtin(Builtin::Weibull, BuiltinParams::default()).unwrap();
        let q = m.quantile_g(0.5).unwrap();
        assert_relative_eq!(q, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn quantile_rejects_bad_u() {
        let m = pareto(1.0);
        assert!(m.quantile_g(0.0).is_err());
        assert!(m.quantile_g(1.0).is_err());
        assert!(m.quantile_g(-0.5).is_err());
    }

    #[test]
    fn draw_is_deterministic() {
        let m = pareto(1.5);
        let a = m.draw(1000, 99).unwrap();
        let b = m.draw(1000, 99).unwrap();
        assert_eq!(a, b);
        let c = m.draw(1000, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn draw_rejects_tiny_n() {
        let m = pareto(1.0);
        assert!(m.draw(1, 1).is_err());
    }

    /// Exponential oracle: for the pure Fréchet model with γ = 1 the log
    /// sample is Y = -ln U ~ Exp(1).
    #[test]
    fn draw_exponential_oracle() {
        let m = pareto(1.0);
        let n = 4096;
        let batch = m.draw(n, 7).unwrap();
        assert!(batch.y_sorted().iter().all(|&y| y >= 0.0));
        let mean = crate::numeric::kahan_sum(batch.y_sorted()) / n as f64;
        assert!(
            (mean - 1.0).abs() < 4.0 / (n as f64).sqrt(),
            "mean {mean} too far from 1"
        );
    }

    #[test]
    fn weibull_bounded_support() {
        let m = builtin(Builtin::Weibull, BuiltinParams::default()).unwrap();
        let batch = m.draw(5000, 3).unwrap();
        assert!(batch.y_from_top(0) < 1.0);
        assert!(batch.x_sorted()[0] >= 1.0);
    }

    #[test]
    fn builtin_menu_constructs() {
        for b in Builtin::ALL {
            let params = BuiltinParams {
                gamma: 2.0,
                a: 2.0,
                ..Default::default()
            };
            let m = builtin(b, params).unwrap();
            assert_eq!(m.id(), b.name());
        }
    }

    #[test]
    fn builtin_regularity_tags() {
        let m = builtin(Builtin::Pareto, BuiltinParams::default()).unwrap();
        assert_eq!(m.perturbation.regularity_class, RegularityClass::Gamma0);
        let m = builtin(
            Builtin::Oscillatory,
            BuiltinParams {
                gamma: 2.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(m.perturbation.regularity_class, RegularityClass::None);
    }

    /// Strict decade-grid decrease for the builtin menu (monotone instances).
    #[test]
    fn builtin_quantiles_decrease_on_decade_grid() {
        let cases: Vec<TailModel> = vec![
            pareto(1.0),
            pareto(2.0),
            builtin(
                Builtin::Oscillatory,
                BuiltinParams {
                    gamma: 2.0,
                    ..Default::default()
                },
            )
            .unwrap(),
            builtin(
                Builtin::PowerF,
                BuiltinParams {
                    gamma: 1.0,
                    a: 0.5,
                    rho: 2.0,
                    ..Default::default()
                },
            )
            .unwrap(),
            builtin(Builtin::Gumbel, BuiltinParams::default()).unwrap(),
            builtin(Builtin::GumbelSlow, BuiltinParams::default()).unwrap(),
            builtin(Builtin::Weibull, BuiltinParams::default()).unwrap(),
            builtin(
                Builtin::WeibullLinearB,
                BuiltinParams {
                    gamma: 2.0,
                    ..Default::default()
                },
            )
            .unwrap(),
            builtin(
                Builtin::WeibullPowerB,
                BuiltinParams {
                    gamma: 2.0,
                    a: 2.0,
                    ..Default::default()
                },
            )
            .unwrap(),
            builtin(
                Builtin::LoglogB,
                BuiltinParams {
                    gamma: 2.0,
                    sign: -1.0,
                    ..Default::default()
                },
            )
            .unwrap(),
        ];
        for m in cases {
            let mut prev = f64::INFINITY;
            for k in (2..=10).rev() {
                // u ascending from 1e-10 to 1e-2; quantile must strictly drop.
                let q = m.quantile_g(10f64.powi(-k)).unwrap();
                assert!(q < prev, "{}: q(1e-{k}) = {q} !< {prev}", m.id());
                prev = q;
            }
        }
    }

    /// Pure-Pareto identity 1 - G(t) = e^{-γ t}, checked by numerical
    /// inversion of the quantile at 20 grid points.
    #[test]
    fn pure_pareto_inversion_identity() {
        let gamma = 2.0;
        let m = pareto(gamma);
        for i in 1..=20 {
            let t = 0.4 * i as f64;
            let u = m.invert_quantile(t).unwrap();
            assert_relative_eq!(u, (-gamma * t).exp(), max_relative = 1e-8);
        }
    }

    /// Slow variation of s for the Gumbel forms: s(λu)/s(u) → 1.
    #[test]
    fn gumbel_s_slowly_varying() {
        for which in [Builtin::Gumbel, Builtin::GumbelSlow] {
            let m = builtin(which, BuiltinParams::default()).unwrap();
            // Recover s(u) = c(1+f)exp(I_b) through the stored parts.
            let s = |u: f64| {
                let ib = m
                    .perturbation
                    .b
                    .log_weighted_tail_integral(u)
                    .unwrap();
                m.c * (1.0 + m.perturbation.f.eval(u)) * ib.exp()
            };
            for lambda in [0.5, 2.0] {
                let mut prev_gap = f64::INFINITY;
                for k in [4, 8, 12] {
                    let u = 10f64.powi(-k);
                    let gap = (s(lambda * u) / s(u) - 1.0).abs();
                    assert!(gap <= prev_gap + 1e-12);
                    prev_gap = gap;
                }
                assert!(prev_gap < 3e-2, "{which:?}: ratio gap {prev_gap}");
            }
        }
    }

    /// Fréchet spacing consequence: Q(λu) - Q(u) → -(ln λ)/γ.
    #[test]
    fn frechet_quantile_spacing() {
        let m = pareto(2.0);
        let u = 1e-8;
        for lambda in [0.5, 2.0] {
            let gap = m.quantile_g(lambda * u).unwrap() - m.quantile_g(u).unwrap();
            assert!((gap - (-(lambda as f64).ln() / 2.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn custom_pair_monotonicity_rejected() {
        // An f large and wiggly enough to break monotonicity for γ = 5.
        let f = Perturbation::Custom(Arc::new(|u: f64| 0.5 * (20.0 * u.ln()).sin()));
        let pair = PerturbationPair::new(f, Perturbation::Zero, RegularityClass::None);
        let r = TailModel::new(Domain::Frechet { gamma: 5.0 }, 1.0, pair);
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn custom_pair_accepted_when_tame() {
        let f = Perturbation::Custom(Arc::new(|u: f64| 0.1 * u));
        let pair = PerturbationPair::new(f, Perturbation::Zero, RegularityClass::Gamma0);
        let m = TailModel::new(Domain::Frechet { gamma: 1.0 }, 1.0, pair).unwrap();
        assert!(m.quantile_g(1e-6).unwrap().is_finite());
    }

    #[test]
    fn one_plus_f_must_stay_positive() {
        let f = Perturbation::Custom(Arc::new(|_u: f64| -1.5));
        let pair = PerturbationPair::new(f, Perturbation::Zero, RegularityClass::None);
        assert!(TailModel::new(Domain::Frechet { gamma: 1.0 }, 1.0, pair).is_err());
    }

    /// Vanishing invariant: the tail sup over u = 1e-6 … 1e-12 stays below
    /// each family's declared envelope (its value at u = 1e-6), and the
    /// deep end is no larger.
    #[test]
    fn perturbation_tail_sup_within_envelope() {
        let u6 = 1e-6f64;
        let cases: Vec<(Perturbation, f64)> = vec![
            (Perturbation::OscillatingSine, u6),
            (Perturbation::Power { a: 2.0, rho: 1.5 }, 2.0 * u6.powf(1.5)),
            (Perturbation::Linear, u6),
            (Perturbation::PowerTail { a: 2.0 }, u6 * u6),
            (
                Perturbation::LogLog { sign: -1.0 },
                1.0 / (1.0f64 / u6).ln().ln(),
            ),
            (Perturbation::SlowDecay, 1.0 / (1.0 - u6.ln())),
        ];
        for (p, envelope) in cases {
            let deep = p.eval(1e-12).abs();
            let pair = PerturbationPair::new(p, Perturbation::Zero, RegularityClass::None);
            let (sf, sb) = pair.tail_sup();
            assert!(sf <= envelope * (1.0 + 1e-9), "sup {sf} > envelope {envelope}");
            assert!(deep <= envelope * (1.0 + 1e-9));
            assert_eq!(sb, 0.0);
        }
    }

    #[test]
    fn sample_batch_rejects_bad_values() {
        assert!(SampleBatch::from_values(&[2.0]).is_err());
        assert!(SampleBatch::from_values(&[2.0, 0.5]).is_err());
        assert!(SampleBatch::from_values(&[2.0, f64::NAN]).is_err());
    }

    #[test]
    fn sample_batch_log_consistency() {
        let m = pareto(1.0);
        let b = m.draw(500, 11).unwrap();
        for (x, y) in b.x_sorted().iter().zip(b.y_sorted()) {
            assert_relative_eq!(x.ln(), *y, max_relative = 1e-14);
        }
        assert!(b.x_sorted().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn loglog_b_integral_matches_quadrature() {
        // Closed-form checks of the perturbation integrals.
        let u = 1e-6;
        let lin = Perturbation::Linear.log_weighted_tail_integral(u).unwrap();
        assert_relative_eq!(lin, 1.0 - u, max_relative = 1e-12);
        let pow = Perturbation::PowerTail { a: 2.0 }
            .log_weighted_tail_integral(u)
            .unwrap();
        assert_relative_eq!(pow, (1.0 - u * u) / 2.0, max_relative = 1e-12);
        let slow = Perturbation::SlowDecay
            .log_weighted_tail_integral(u)
            .unwrap();
        assert_relative_eq!(slow, -(1.0 - u.ln()).ln(), max_relative = 1e-12);
        // Custom closure takes the quadrature path; compare against Linear.
        let custom = Perturbation::Custom(Arc::new(|t: f64| t))
            .log_weighted_tail_integral(u)
            .unwrap();
        assert_relative_eq!(custom, lin, max_relative = 1e-9);
    }
}
