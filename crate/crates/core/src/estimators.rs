//! The characterizing statistic family over the top window of a sample.
//!
//! With `Δ_j = Y_{n-j+1,n} - Y_{n-j,n}` the log spacings from the top,
//!
//! ```text
//! T2(k,ℓ)  = k^{-1} Σ_{j=ℓ+1}^{k} j Δ_j
//! A1(k,ℓ)  = k^{-1} Σ_{j=ℓ+1}^{k} Σ_{i=j}^{k} i (1 - δ_ij/2) Δ_i Δ_j
//! T1(k,ℓ)  = T2(k,ℓ) / A1(k,ℓ)^{1/2}
//! T3(k,ℓ,ν) = n^{-ν} (Y_{n-ℓ,n} - Y_{n-k,n}) / T2(k,ℓ)
//! T4 = Y_{n,n}         T5 = T2(ℓ,1)
//! T6 = T5 / (Y_{n-ℓ,n} - Y_{n-k,n})
//! T7 = A1(ℓ,1) / (Y_{n-ℓ,n} - Y_{n-k,n})^2
//! T8(ν) = n^{-ν} (Y_{n-ℓ,n} - Y_{n-k,n})^{-1}
//! T9 = (y0 - Y_{n-ℓ,n}) / (y0 - Y_{n-k,n})      (finite upper endpoint)
//! ```
//!
//! `A1` ships in two algebraically identical forms: an O(k) suffix-sum
//! evaluation used everywhere, and the naive O(k²) double loop kept as the
//! test oracle. Summation order is fixed (descending `j`) with compensated
//! accumulation, so results do not depend on any parallel schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::SampleBatch;
use crate::numeric::KahanSum;

/// Top-window configuration `(k, ℓ, ν)` plus the optional upper endpoint
/// needed by `T9`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub k: usize,
    pub ell: usize,
    pub nu: f64,
    pub y0: Option<f64>,
}

impl WindowConfig {
    pub fn new(k: usize, ell: usize, nu: f64) -> Self {
        Self {
            k,
            ell,
            nu,
            y0: None,
        }
    }

    pub fn with_y0(mut self, y0: f64) -> Self {
        self.y0 = Some(y0);
        self
    }

    /// `1 <= ℓ < k < n` and `ν >= 0`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(1 <= self.ell && self.ell < self.k && self.k < n) {
            return Err(Error::InvalidWindow(format!(
                "need 1 <= ell < k < n, got ell={}, k={}, n={}",
                self.ell, self.k, n
            )));
        }
        if !(self.nu >= 0.0) {
            return Err(Error::InvalidWindow(format!("need nu >= 0, got {}", self.nu)));
        }
        Ok(())
    }
}

/// The evaluated family at one window. Serializes flat, matching the
/// `estimate` output schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatVector {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub t6: f64,
    pub t7: f64,
    pub t8: f64,
    pub t9: Option<f64>,
    pub a1: f64,
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub nu: f64,
}

#[inline]
fn spacing(y: &[f64], j: usize) -> f64 {
    // Δ_j = Y_{n-j+1,n} - Y_{n-j,n} with ascending storage.
    let n = y.len();
    y[n - j] - y[n - j - 1]
}

fn check_window(n: usize, k: usize, ell: usize) -> Result<()> {
    if !(1 <= ell && ell < k && k < n) {
        return Err(Error::InvalidWindow(format!(
            "need 1 <= ell < k < n, got ell={ell}, k={k}, n={n}"
        )));
    }
    Ok(())
}

/// `T2(k,ℓ)`: the windowed weighted-spacing mean.
pub fn t2(batch: &SampleBatch, k: usize, ell: usize) -> Result<f64> {
    check_window(batch.n(), k, ell)?;
    Ok(t2_unchecked(batch.y_sorted(), k, ell))
}

fn t2_unchecked(y: &[f64], k: usize, ell: usize) -> f64 {
    let mut acc = KahanSum::new();
    for j in (ell + 1..=k).rev() {
        acc.add(j as f64 * spacing(y, j));
    }
    acc.value() / k as f64
}

/// `A1(k,ℓ)` by the O(k) suffix-sum evaluation.
///
/// The quadratic form carries the weight on the *smaller* index:
/// `k^{-1} Σ_j Σ_{i=j}^{k} j (1-δ_ij/2) Δ_i Δ_j`. This is the reading whose
/// mean is the centering `τ(k,ℓ)` and which the limit theorems govern; the
/// tabulated variant with the weight on the larger index is kept as
/// [`a1_transposed_weight`] and diverges logarithmically against its own
/// centering (see the discrepancy report).
pub fn a1(batch: &SampleBatch, k: usize, ell: usize) -> Result<f64> {
    check_window(batch.n(), k, ell)?;
    Ok(a1_unchecked(batch.y_sorted(), k, ell))
}

fn a1_unchecked(y: &[f64], k: usize, ell: usize) -> f64 {
    // Σ_j Σ_{i>=j} j (1-δ/2) Δ_i Δ_j = Σ_j j Δ_j (T_j - Δ_j/2),
    // with the plain suffix T_j = Σ_{i=j}^{k} Δ_i = Y_{n-j+1,n} - Y_{n-k,n}.
    let n = y.len();
    let y_k = y[n - k - 1];
    let mut acc = KahanSum::new();
    for j in (ell + 1..=k).rev() {
        let dj = spacing(y, j);
        let suffix = y[n - j] - y_k;
        acc.add(j as f64 * dj * (suffix - 0.5 * dj));
    }
    acc.value() / k as f64
}

/// `A1(k,ℓ)` by the naive O(k²) double loop; the oracle the fast form is
/// tested against.
pub fn a1_naive(batch: &SampleBatch, k: usize, ell: usize) -> Result<f64> {
    check_window(batch.n(), k, ell)?;
    let y = batch.y_sorted();
    let mut acc = KahanSum::new();
    for j in (ell + 1..=k).rev() {
        let dj = spacing(y, j);
        for i in (j..=k).rev() {
            let w = if i == j { 0.5 } else { 1.0 };
            acc.add(j as f64 * w * spacing(y, i) * dj);
        }
    }
    Ok(acc.value() / k as f64)
}

/// The tabulated variant of [`a1`] with the weight on the larger index,
/// `k^{-1} Σ_j Σ_{i=j}^{k} i (1-δ_ij/2) Δ_i Δ_j`. Against its own centering
/// this form drifts like `ln k` (its continuous kernel is `(z-t)` instead
/// of `(t-x)`), which breaks the consistency results quoted for the
/// statistic; it ships for comparison and is reported, never used.
pub fn a1_transposed_weight(batch: &SampleBatch, k: usize, ell: usize) -> Result<f64> {
    check_window(batch.n(), k, ell)?;
    let y = batch.y_sorted();
    let mut suffix = KahanSum::new();
    let mut acc = KahanSum::new();
    for j in (ell + 1..=k).rev() {
        let dj = spacing(y, j);
        suffix.add(j as f64 * dj);
        acc.add(dj * suffix.value() - 0.5 * j as f64 * dj * dj);
    }
    Ok(acc.value() / k as f64)
}

/// A second tabulated form of `A1` that pairs the products
/// `(Y_{n-i+1,n} - Y_{n-j+1,n})(Y_{n-j+1,n} - Y_{n-j,n})` with a bare
/// Kronecker weight. Read literally the weight kills every term with
/// `i ≠ j` and the surviving `i = j` factor is zero, so the sum vanishes
/// identically. It is kept behind this debug entry point so the
/// discrepancy report can demonstrate the difference numerically; it is
/// never merged into [`a1`].
pub fn a1_legacy_variant(batch: &SampleBatch, k: usize, ell: usize) -> Result<f64> {
    check_window(batch.n(), k, ell)?;
    let y = batch.y_sorted();
    let n = batch.n();
    let mut acc = KahanSum::new();
    for j in (ell + 1..=k).rev() {
        let yj = y[n - j];
        let dj = yj - y[n - j - 1];
        for i in (j..=k).rev() {
            if i != j {
                continue; // bare δ_ij
            }
            acc.add(i as f64 * (y[n - i] - yj) * dj);
        }
    }
    Ok(acc.value() / k as f64)
}

/// Evaluate the whole family at one window.
pub fn stat_vector(batch: &SampleBatch, window: &WindowConfig) -> Result<StatVector> {
    let n = batch.n();
    window.validate(n)?;
    let (k, ell, nu) = (window.k, window.ell, window.nu);
    let y = batch.y_sorted();

    let z_tilde = batch.y_from_top(ell); // Y_{n-ℓ,n}
    let x_tilde = batch.y_from_top(k); // Y_{n-k,n}
    let gap = z_tilde - x_tilde;
    if gap <= 0.0 {
        return Err(Error::DegenerateWindow(format!(
            "Y_(n-ell) == Y_(n-k) (tie over the window, k={k}, ell={ell})"
        )));
    }

    let t2v = t2_unchecked(y, k, ell);
    let a1v = a1_unchecked(y, k, ell);
    if !(a1v > 0.0) || !(t2v > 0.0) {
        return Err(Error::DegenerateWindow(format!(
            "zero windowed sums (t2={t2v}, a1={a1v}); ties in the top window"
        )));
    }

    let n_pow = (n as f64).powf(-nu);
    // The (ℓ,1) sub-window is empty for ℓ = 1; its sums are zero.
    let (t5, a1_sub) = if ell >= 2 {
        (t2_unchecked(y, ell, 1), a1_unchecked(y, ell, 1))
    } else {
        (0.0, 0.0)
    };

    let t9 = match window.y0 {
        None => None,
        Some(y0) => {
            if y0 <= z_tilde {
                return Err(Error::InvalidArgument(format!(
                    "y0 = {y0} does not exceed Y_(n-ell) = {z_tilde}"
                )));
            }
            Some((y0 - z_tilde) / (y0 - x_tilde))
        }
    };

    Ok(StatVector {
        t1: t2v / a1v.sqrt(),
        t2: t2v,
        t3: n_pow * gap / t2v,
        t4: batch.y_from_top(0),
        t5,
        t6: t5 / gap,
        t7: a1_sub / (gap * gap),
        t8: n_pow / gap,
        t9,
        a1: a1v,
        n,
        k,
        ell,
        nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SampleBatch;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ladder() -> SampleBatch {
        SampleBatch::from_log_values(&[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn t2_hand_value() {
        let b = ladder();
        assert_relative_eq!(t2(&b, 3, 1).unwrap(), 5.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn a1_hand_value() {
        let b = ladder();
        // weight on the smaller index: (1/3)[2·(1.5-0.5·1)·... ] = 3/2
        assert_relative_eq!(a1(&b, 3, 1).unwrap(), 3.0 / 2.0, epsilon = 1e-12);
        assert_relative_eq!(a1_naive(&b, 3, 1).unwrap(), 3.0 / 2.0, epsilon = 1e-12);
        // the larger-index tabulated variant reproduces the other hand value
        assert_relative_eq!(
            a1_transposed_weight(&b, 3, 1).unwrap(),
            11.0 / 6.0,
            epsilon = 1e-12
        );
    }

    /// The transposed-weight variant drifts against the centering: on a
    /// heavy-tail sample it exceeds the consistent form by a log factor.
    #[test]
    fn a1_transposed_weight_drifts() {
        let m = crate::models::builtin(
            crate::models::Builtin::Pareto,
            crate::models::BuiltinParams::default(),
        )
        .unwrap();
        let b = m.draw(100_000, 4).unwrap();
        let consistent = a1(&b, 1000, 1).unwrap();
        let transposed = a1_transposed_weight(&b, 1000, 1).unwrap();
        assert!(
            transposed > 3.0 * consistent,
            "transposed {transposed} vs consistent {consistent}"
        );
    }

    #[test]
    fn constant_sample_gives_zero_sums() {
        let b = SampleBatch::from_values(&[3.0; 6]).unwrap();
        assert_eq!(t2(&b, 3, 1).unwrap(), 0.0);
        assert_eq!(a1(&b, 3, 1).unwrap(), 0.0);
        assert!(matches!(
            stat_vector(&b, &WindowConfig::new(3, 1, 0.0)),
            Err(Error::DegenerateWindow(_))
        ));
    }

    #[test]
    fn window_preconditions() {
        let b = ladder();
        assert!(t2(&b, 5, 1).is_err()); // k = n
        assert!(t2(&b, 3, 3).is_err()); // ell = k
        assert!(t2(&b, 3, 0).is_err()); // ell = 0
        assert!(stat_vector(&b, &WindowConfig::new(3, 1, -0.5)).is_err());
    }

    #[test]
    fn stat_vector_hand_values() {
        let b = ladder();
        let s = stat_vector(&b, &WindowConfig::new(3, 1, 0.0)).unwrap();
        assert_eq!(s.t4, 4.0);
        assert_relative_eq!(s.t8, 0.5, epsilon = 1e-15);
        assert_relative_eq!(s.t2, 5.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(s.a1, 3.0 / 2.0, epsilon = 1e-13);
        assert_relative_eq!(s.t1, (5.0 / 3.0) / (3.0f64 / 2.0).sqrt(), epsilon = 1e-13);
        assert_relative_eq!(s.t3, 2.0 / (5.0 / 3.0), epsilon = 1e-13);
        // ℓ = 1: empty sub-window
        assert_eq!(s.t5, 0.0);
        assert_eq!(s.t6, 0.0);
        assert_eq!(s.t7, 0.0);
        assert!(s.t9.is_none());
    }

    #[test]
    fn t9_bounds_for_bounded_model() {
        let m = crate::models::builtin(
            crate::models::Builtin::Weibull,
            crate::models::BuiltinParams::default(),
        )
        .unwrap();
        let b = m.draw(2000, 5).unwrap();
        let w = WindowConfig::new(50, 49, 0.0).with_y0(1.0);
        let s = stat_vector(&b, &w).unwrap();
        let t9 = s.t9.unwrap();
        assert!(t9 > 0.0 && t9 < 1.0, "t9 = {t9}");
    }

    #[test]
    fn t9_requires_valid_y0() {
        let b = ladder();
        let w = WindowConfig::new(3, 1, 0.0).with_y0(2.0); // below Y_{n-1}
        assert!(stat_vector(&b, &w).is_err());
    }

    #[test]
    fn legacy_variant_is_identically_zero() {
        let m = crate::models::builtin(
            crate::models::Builtin::Pareto,
            crate::models::BuiltinParams::default(),
        )
        .unwrap();
        let b = m.draw(500, 2).unwrap();
        assert_eq!(a1_legacy_variant(&b, 100, 3).unwrap(), 0.0);
        assert!(a1(&b, 100, 3).unwrap() > 0.0);
    }

    /// Location invariance on the log scale, exact on a lattice where the
    /// shift is representable without rounding.
    #[test]
    fn location_invariance_exact() {
        let base: Vec<f64> = (0..64).map(|i| (i * i % 97) as f64 / 64.0).collect();
        let mut sorted = base.clone();
        sorted.sort_by(f64::total_cmp);
        let shifted: Vec<f64> = sorted.iter().map(|y| y + 8.0).collect();
        let b0 = SampleBatch::from_log_values(&sorted).unwrap();
        let b1 = SampleBatch::from_log_values(&shifted).unwrap();
        let w = WindowConfig::new(20, 3, 0.25);
        let s0 = stat_vector(&b0, &w).unwrap();
        let s1 = stat_vector(&b1, &w).unwrap();
        assert_eq!(s0.t2, s1.t2);
        assert_eq!(s0.a1, s1.a1);
        assert_eq!(s0.t1, s1.t1);
        assert_eq!(s0.t6, s1.t6);
        assert_eq!(s0.t7, s1.t7);
        assert_eq!(s0.t8, s1.t8);
        assert_eq!(s1.t4, s0.t4 + 8.0);
    }

    /// Scale equivariance, exact for a power-of-two factor.
    #[test]
    fn scale_equivariance_exact() {
        let ys: Vec<f64> = (0..64).map(|i| (i * 37 % 101) as f64 / 32.0).collect();
        let scaled: Vec<f64> = ys.iter().map(|y| y * 2.0).collect();
        let b0 = SampleBatch::from_log_values(&ys).unwrap();
        let b1 = SampleBatch::from_log_values(&scaled).unwrap();
        let w = WindowConfig::new(20, 3, 0.25);
        let s0 = stat_vector(&b0, &w).unwrap();
        let s1 = stat_vector(&b1, &w).unwrap();
        assert_eq!(s1.t2, 2.0 * s0.t2);
        assert_eq!(s1.a1, 4.0 * s0.a1);
        assert_eq!(s1.t1, s0.t1);
        assert_eq!(s1.t6, s0.t6);
        assert_eq!(s1.t8, s0.t8 / 2.0);
    }

    #[test]
    fn permutation_invariance() {
        let m = crate::models::builtin(
            crate::models::Builtin::Pareto,
            crate::models::BuiltinParams::default(),
        )
        .unwrap();
        let b = m.draw(200, 9).unwrap();
        let mut xs = b.x_sorted().to_vec();
        // A fixed shuffle.
        xs.rotate_left(57);
        xs.swap(0, 101);
        let b2 = SampleBatch::from_values(&xs).unwrap();
        let w = WindowConfig::new(40, 2, 0.1);
        assert_eq!(
            stat_vector(&b, &w).unwrap(),
            stat_vector(&b2, &w).unwrap()
        );
    }

    #[test]
    fn t1_squared_times_a1_is_t2_squared() {
        let m = crate::models::builtin(
            crate::models::Builtin::Pareto,
            crate::models::BuiltinParams::default(),
        )
        .unwrap();
        let b = m.draw(5000, 13).unwrap();
        let s = stat_vector(&b, &WindowConfig::new(700, 12, 0.3)).unwrap();
        assert_relative_eq!(s.t1 * s.t1 * s.a1, s.t2 * s.t2, max_relative = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        /// O(k) suffix-sum A1 agrees with the O(k²) oracle.
        #[test]
        fn fast_a1_matches_naive(seed in 0u64..1000, n in 8usize..200) {
            let m = crate::models::builtin(
                crate::models::Builtin::Pareto,
                crate::models::BuiltinParams::default(),
            ).unwrap();
            let b = m.draw(n, seed).unwrap();
            let k = 2 + (seed as usize * 7 + n) % (n - 2).max(1);
            let k = k.min(n - 1).max(2);
            let ell = 1 + (seed as usize) % (k - 1);
            let fast = a1(&b, k, ell).unwrap();
            let naive = a1_naive(&b, k, ell).unwrap();
            prop_assert!((fast - naive).abs() <= 1e-12 * naive.abs().max(1e-300),
                "fast={fast} naive={naive}");
        }
    }
}
