//! The defaults table: every tolerance and threshold used by verification
//! and detection, pinned here with its origin.
//!
//! Categories:
//! * exact — identities that hold up to f64 rounding;
//! * quadrature — integrator targets;
//! * pilot — Monte Carlo windows sized from the sampling noise of the
//!   configured replicate counts (3–4 standard errors plus finite-n slack),
//!   frozen after pilot runs.
//!
//! Version: bump when any value changes.
pub const DEFAULTS_VERSION: &str = "1";

/// Exact identities (hand values, algebraic recomputation): f64 headroom.
pub const EXACT: f64 = 1e-12;

/// Fast-vs-naive quadratic-sum agreement (compensated vs compensated).
pub const A1_FAST_VS_NAIVE_REL: f64 = 1e-12;

/// Quantile perturbation integrals.
pub const B_INTEGRAL_REL: f64 = 1e-10;

/// `R_p` quadrature target.
pub const R_P_REL: f64 = 1e-8;

/// Covariance quadrature target (entrywise relative).
pub const COV_QUAD_REL: f64 = 1e-4;

/// Quadrature-vs-closed-form window for the oracle variance of the linear
/// functional (allows the residual finite-window drift at `k/n = 1e-4`).
pub const ORACLE_VAR_N0_REL: f64 = 0.02;

/// Empirical covariance of functional draws vs quadrature: multiple of the
/// Monte Carlo standard error.
pub const ORACLE_EMPIRICAL_SE_MULT: f64 = 3.0;

/// Window for the `Cov(N0, N2) = -1` anchor from the functional batch.
pub const COV_N0_N2_ABS: f64 = 0.08;

/// Variance-ratio window for Gaussian-limit verification targets
/// (`|emp_var/σ² - 1| ≤ this`); sized for ≥ 400 replicates (pilot).
pub const MC_VAR_RATIO: f64 = 0.15;

/// Mean window in standard-error units (`|emp_mean| ≤ this · σ/√M`).
pub const MC_MEAN_SE_MULT: f64 = 3.0;

/// KS window for Gaussian-limit targets: `KS ≤ MC_KS_SE_MULT/√M + slack`
/// where the slack absorbs finite-n drift of the centering (pilot).
pub const MC_KS_SE_MULT: f64 = 2.5;
pub const MC_KS_SLACK: f64 = 0.02;

/// KS window for the extremal (fixed-ℓ) targets at M = 2000 (pilot).
pub const MC_KS_EXTREMAL: f64 = 0.05;

/// Fraction of replicates that may be excluded as degenerate before the
/// run fails.
pub const MC_MAX_EXCLUDED: f64 = 0.01;

/// Cross-block dependence test: multiple of the Monte Carlo standard error
/// each cross-covariance entry must stay under.
pub const JOINT_CROSS_SE_MULT: f64 = 3.0;

/// KS calibration anchor: a sample drawn from the target CDF itself stays
/// under `1.63/√M` with probability ≈ 0.99 (Kolmogorov law).
pub const KS_SELF_QUANTILE_99: f64 = 1.63;

// ---------------------------------------------------------------------------
// Detection defaults (pilot-calibrated at n = 1e5, α = 0.7, β = 0.55)
// ---------------------------------------------------------------------------

/// Noise multiple for the heavy-tail threshold `z·√(a1/k)`.
pub const DETECT_Z: f64 = 2.5;

/// Absolute floor for the heavy-tail decision on `T2`. A slowly varying
/// scale function decays like `1/ln`, so at n = 1e5 a genuinely
/// Gumbel-attracted sample still shows `T2 ≈ 0.22`; the √k noise scale
/// cannot separate that from a constant, hence this calibrated floor
/// (heavy-tail representatives sit near `1/γ ≥ 0.5` in the pilot grid).
pub const DETECT_T2_FLOOR: f64 = 0.35;

/// Lower edge of the bounded-domain band for `T1` (limit 1 in the other
/// domains; `√((γ+2)/(γ+1)) ≥ √(7/6) ≈ 1.08` for γ ≤ 5).
pub const DETECT_C_LOW: f64 = 1.05;

/// Upper edge of the bounded-domain band for `T1`.
pub const DETECT_C_HIGH: f64 = std::f64::consts::SQRT_2;

/// Top-gap-ratio threshold for "the maximum has stopped growing": bounded
/// tails give `2^{1/γ} - 1` (1 at γ = 1), unbounded ones `≈ ln(√k)/ln 2`
/// (≈ 5.8 at k ≈ 3000).
pub const DETECT_MAX_PROXY_MULT: f64 = 2.5;

/// Per-domain accuracy the default thresholds are calibrated to reach on
/// the pilot grid (100 samples at n = 1e5 per domain).
pub const DETECT_TARGET_ACCURACY: f64 = 0.80;
