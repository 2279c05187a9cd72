//! Small numeric utilities: compensated summation, seed derivation, and
//! sample moments.

/// Neumaier-compensated accumulator.
///
/// All reductions that feed reported numbers go through this in a fixed
/// order, so parallel schedules cannot change any output.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice in index order.
pub fn kahan_sum(values: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// SplitMix64 finalizer; mixes a base seed with a stream index so replicate
/// `i` gets an independent, reproducible seed.
#[inline]
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean, variance (unbiased), and skewness of a sample, computed with
/// compensated sums in index order.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

pub fn moments(values: &[f64]) -> Moments {
    let n = values.len();
    assert!(n >= 2, "moments need at least two values");
    let mean = kahan_sum(values) / n as f64;
    let mut m2 = KahanSum::new();
    let mut m3 = KahanSum::new();
    for &v in values {
        let d = v - mean;
        m2.add(d * d);
        m3.add(d * d * d);
    }
    let nf = n as f64;
    let variance = m2.value() / (nf - 1.0);
    let m2n = m2.value() / nf;
    let skewness = if m2n > 0.0 {
        (m3.value() / nf) / m2n.powf(1.5)
    } else {
        0.0
    };
    Moments {
        n,
        mean,
        variance,
        skewness,
    }
}

/// Unbiased sample covariance of two equally long slices.
pub fn covariance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    assert!(n >= 2);
    let ma = kahan_sum(a) / n as f64;
    let mb = kahan_sum(b) / n as f64;
    let mut acc = KahanSum::new();
    for i in 0..n {
        acc.add((a[i] - ma) * (b[i] - mb));
    }
    acc.value() / (n as f64 - 1.0)
}
