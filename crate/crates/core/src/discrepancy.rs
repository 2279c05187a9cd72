//! The discrepancy report: a structured document that puts the tabulated
//! closed forms, the reconstructed matrices, the quadrature oracle, and the
//! empirical functional draws side by side, and records every place where
//! the tabulated source is internally inconsistent.
//!
//! Nothing here asserts; the report states what each route produced and
//! which candidate the oracle selects. Verification code that needs a hard
//! number uses the reconstruction, never a damaged tabulated entry.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    self, cov_n0_n3_candidates, e_ell_cdf, e_ell_cdf_j1_start, predicted_base,
    reconstructed_limit_matrices, theorem_c_matrix, var_n0_candidates, BaseCov, CovMatrix,
    CovRegime, GammaParam, Provenance,
};
use crate::bridge;
use crate::error::Result;
use crate::estimators;
use crate::models::TailModel;
use crate::numeric::{covariance, moments};

/// One closed-form candidate judged against the oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Candidate {
    pub source: String,
    pub value: f64,
    pub abs_error: f64,
}

/// Arbitration of one quantity: the oracle value and the candidates ranked
/// by distance from it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Arbitration {
    pub quantity: String,
    pub oracle_value: f64,
    pub candidates: Vec<Candidate>,
    pub winner: String,
}

fn arbitrate(quantity: &str, oracle: f64, candidates: Vec<(String, f64)>) -> Arbitration {
    let mut cands: Vec<Candidate> = candidates
        .into_iter()
        .map(|(source, value)| Candidate {
            source,
            value,
            abs_error: (value - oracle).abs(),
        })
        .collect();
    cands.sort_by(|a, b| a.abs_error.total_cmp(&b.abs_error));
    let winner = cands[0].source.clone();
    Arbitration {
        quantity: quantity.to_string(),
        oracle_value: oracle,
        candidates: cands,
        winner,
    }
}

/// Entry-by-entry comparison of a tabulated matrix with its reconstruction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryComparison {
    pub i: usize,
    pub j: usize,
    pub printed: f64,
    pub reconstructed: f64,
    pub abs_diff: f64,
    pub matches: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixComparison {
    pub block: String,
    pub dim: usize,
    pub entries: Vec<EntryComparison>,
    pub mismatches: usize,
    pub printed_notes: Vec<String>,
    /// PSD probe of the tabulated matrix; a negative result is a finding,
    /// not a failure.
    pub printed_psd: Option<bool>,
}

fn compare_matrices(block: &str, printed: &CovMatrix, reconstructed: &CovMatrix) -> MatrixComparison {
    let dim = printed.dim.min(reconstructed.dim);
    let mut entries = Vec::new();
    let mut mismatches = 0;
    for i in 0..dim {
        for j in 0..=i {
            let p = printed.entries[i][j];
            let r = reconstructed.entries[i][j];
            let diff = (p - r).abs();
            let matches = diff <= 1e-9 * r.abs().max(1.0);
            if !matches {
                mismatches += 1;
            }
            entries.push(EntryComparison {
                i,
                j,
                printed: p,
                reconstructed: r,
                abs_diff: diff,
                matches,
            });
        }
    }
    MatrixComparison {
        block: block.to_string(),
        dim,
        entries,
        mismatches,
        printed_notes: printed.notes.clone(),
        printed_psd: printed.is_psd(1e-9),
    }
}

/// A recorded inconsistency of the tabulated source, with the resolution
/// the library adopted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Finding {
    pub id: String,
    pub description: String,
    pub resolution: String,
    pub evidence: serde_json::Value,
}

/// Empirical cross-validation of the quadrature covariances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalCheck {
    pub draws: usize,
    pub entries: Vec<EmpiricalEntry>,
    pub all_within: bool,
    pub cov_n0_n2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalEntry {
    pub name: String,
    pub empirical: f64,
    pub quadrature: f64,
    pub se: f64,
    pub se_mult: f64,
    pub within: bool,
}

/// The full report for one model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub model: String,
    pub gamma: String,
    /// Oracle base covariances at the operational window, with the worst
    /// drift seen while halving the window (stability check).
    pub oracle_base: BaseCov,
    pub oracle_stability_drift: f64,
    pub arbitrations: Vec<Arbitration>,
    pub base_triple_comparison: MatrixComparison,
    pub matrix_comparisons: Vec<MatrixComparison>,
    /// Variance of the ratio row under random centering (the value the
    /// tabulated first-block corner actually matches).
    pub star_head_random_centering: f64,
    pub empirical: Option<EmpiricalCheck>,
    pub findings: Vec<Finding>,
}

/// Build the report. `empirical_draws > 0` adds the simulation
/// cross-validation of the quadrature at the window `(n, k, ℓ)`.
pub fn build_report(
    model: &TailModel,
    empirical: Option<(usize, usize, usize, usize, u64)>,
) -> Result<DiscrepancyReport> {
    let gamma = model.regime_gamma();
    let (oracle, drift) = bridge::oracle_base_cov(model)?;

    // Candidate arbitration.
    let var_cands = var_n0_candidates(gamma);
    let arb_var = arbitrate(
        "Var(N0)",
        oracle.var_n0,
        vec![
            ("2(γ+1)/(γ+2)".to_string(), var_cands[0]),
            ("3(γ+1)/(γ+2) [base-triple table]".to_string(), var_cands[1]),
            ("(γ+1)(γ+2)".to_string(), var_cands[2]),
        ],
    );
    let (c1, c2) = cov_n0_n3_candidates(gamma);
    let arb_cov = arbitrate(
        "Cov(N0,N3)",
        oracle.cov_n0_n3,
        vec![
            ("3(γ+1)/(γ+3)".to_string(), c1),
            ("3(γ+1)(γ+3)^-3".to_string(), c2),
        ],
    );

    // Tabulated vs reconstructed matrices. The reconstruction uses the
    // closed-form base (each of whose entries the oracle has just
    // arbitrated): the oracle window itself still carries the slow
    // (ℓ/k)·ln³ drift of the (t-x)-kernel entries, which would blur a
    // limit-vs-limit comparison.
    let regime = match gamma {
        GammaParam::Infinite => CovRegime::GammaInf,
        GammaParam::Finite(g) if g > 2.0 => CovRegime::GammaGt2(g),
        GammaParam::Finite(g) => CovRegime::GammaLt2(g),
    };
    let closed_base = predicted_base(gamma)?;
    let rec = reconstructed_limit_matrices(regime, &closed_base, Provenance::ClosedForm)?;
    let (printed_star, printed_ss) = asymptotics::printed_limit_matrices(regime)?;
    let star_cmp = compare_matrices("joint-first-block", &printed_star, &rec.star);
    let ss_cmp = compare_matrices("joint-second-block", &printed_ss, &rec.star_star);

    let printed_base = theorem_c_matrix(gamma)?;
    let oracle_matrix = CovMatrix {
        label: "base-triple (oracle)".into(),
        dim: 3,
        entries: oracle.as_matrix().iter().map(|r| r.to_vec()).collect(),
        provenance: Provenance::Quadrature,
        regime,
        notes: vec![],
    };
    let base_cmp = compare_matrices("base-triple", &printed_base, &oracle_matrix);

    // Empirical cross-validation.
    let empirical_check = match empirical {
        None => None,
        Some((n, k, ell, draws, seed)) => {
            let a = k as f64 / n as f64;
            let b = ell as f64 / n as f64;
            let quad = bridge::exact_base_cov(model, a, b)?;
            let batch = bridge::functional_batch(model, n, k, ell, draws, seed)?;
            let n0: Vec<f64> = batch.iter().map(|d| d.n0).collect();
            let n3: Vec<f64> = batch.iter().map(|d| d.n3).collect();
            let n2: Vec<f64> = batch.iter().map(|d| d.n2k).collect();
            let m = draws as f64;
            let se_mult = crate::tolerances::ORACLE_EMPIRICAL_SE_MULT;
            let mut entries = Vec::new();
            let mut push = |name: &str, emp: f64, q: f64, se: f64| {
                entries.push(EmpiricalEntry {
                    name: name.to_string(),
                    empirical: emp,
                    quadrature: q,
                    se,
                    se_mult,
                    within: (emp - q).abs() <= se_mult * se,
                });
            };
            let v0 = moments(&n0).variance;
            let v3 = moments(&n3).variance;
            let v2 = moments(&n2).variance;
            push("Var(N0)", v0, quad.var_n0, quad.var_n0 * (2.0 / m).sqrt());
            push("Var(N3)", v3, quad.var_n3, quad.var_n3 * (2.0 / m).sqrt());
            push("Var(N2)", v2, quad.var_n2, quad.var_n2 * (2.0 / m).sqrt());
            let se = |vx: f64, vy: f64, c: f64| ((vx * vy + c * c) / m).sqrt();
            let c03 = covariance(&n0, &n3);
            push(
                "Cov(N0,N3)",
                c03,
                quad.cov_n0_n3,
                se(quad.var_n0, quad.var_n3, quad.cov_n0_n3),
            );
            let c02 = covariance(&n0, &n2);
            push(
                "Cov(N0,N2)",
                c02,
                quad.cov_n0_n2,
                se(quad.var_n0, quad.var_n2, quad.cov_n0_n2),
            );
            let c32 = covariance(&n3, &n2);
            push(
                "Cov(N3,N2)",
                c32,
                quad.cov_n3_n2,
                se(quad.var_n3, quad.var_n2, quad.cov_n3_n2),
            );
            let all_within = entries.iter().all(|e| e.within);
            Some(EmpiricalCheck {
                draws,
                entries,
                all_within,
                cov_n0_n2: c02,
            })
        }
    };

    let findings = standing_findings(gamma, &rec, &star_cmp, &arb_var, &arb_cov);

    Ok(DiscrepancyReport {
        model: model.id().to_string(),
        gamma: gamma.to_string(),
        oracle_base: oracle,
        oracle_stability_drift: drift,
        arbitrations: vec![arb_var, arb_cov],
        base_triple_comparison: base_cmp,
        matrix_comparisons: vec![star_cmp, ss_cmp],
        star_head_random_centering: rec.star_head_random_centering,
        empirical: empirical_check,
        findings,
    })
}

fn standing_findings(
    gamma: GammaParam,
    rec: &asymptotics::ReconstructedMatrices,
    star_cmp: &MatrixComparison,
    arb_var: &Arbitration,
    arb_cov: &Arbitration,
) -> Vec<Finding> {
    let mut findings = Vec::new();

    // The quadratic-sum weight transposition: with the weight on the larger
    // index the statistic drifts logarithmically against its tabulated
    // centering; the smaller-index weight has exactly that centering as its
    // mean. Demonstrated on a fixed heavy-tail sample and by the exact
    // ladder anchors.
    let demo = crate::models::builtin(
        crate::models::Builtin::Pareto,
        crate::models::BuiltinParams::default(),
    )
    .and_then(|m| m.draw(20_000, 99))
    .ok();
    let drift = demo.as_ref().map(|b| {
        let consistent = estimators::a1(b, 500, 1).unwrap_or(f64::NAN);
        let transposed = estimators::a1_transposed_weight(b, 500, 1).unwrap_or(f64::NAN);
        (consistent, transposed)
    });
    findings.push(Finding {
        id: "quadratic-sum-weight-transposition".into(),
        description: "the tabulated quadratic spacing sum weights the larger index, which                       makes its mean grow like ln k against the centering τ(k,ℓ); the                       smaller-index weighting has mean exactly τ(k,ℓ) and is what the limit                       statements describe"
            .into(),
        resolution: "operational statistic uses the smaller-index weight; the transposed                      form ships for comparison (ladder anchors: 3/2 vs 11/6)"
            .into(),
        evidence: serde_json::json!({
            "ladder_smaller_index": 1.5,
            "ladder_larger_index": 11.0 / 6.0,
            "heavy_tail_sample_k500": drift.map(|(c, t)| serde_json::json!({
                "smaller_index": c, "larger_index": t, "ratio": t / c,
            })),
        }),
    });

    // The scaled order-statistic law: a j=1-start sum is not a CDF.
    let at_zero = e_ell_cdf_j1_start(3, 1e-300);
    findings.push(Finding {
        id: "erlang-cdf-sum-start".into(),
        description: format!(
            "the tabulated tail CDF with the sum starting at j=1 evaluates to {at_zero} as x→0+, \
             which is impossible for a distribution on (0,∞)"
        ),
        resolution: "sum starts at j=0 (an Erlang(ℓ+1) law at ℓx); validated by the uniform \
                     order-statistic oracle"
            .into(),
        evidence: serde_json::json!({
            "j1_start_at_zero": at_zero,
            "j0_start_at_zero": e_ell_cdf(3, 1e-300).unwrap(),
        }),
    });

    // The threshold-bridge scaling: without the square root the variance
    // diverges with n/m.
    findings.push(Finding {
        id: "threshold-bridge-scaling".into(),
        description: "the tabulated -(n/m)·B(m/n) scaling has variance ≈ n/m, yet every limit \
                      law gives this functional unit variance"
            .into(),
        resolution: "implemented as -(n/m)^{1/2}·B(m/n)".into(),
        evidence: serde_json::json!({
            "literal_variance_at_n_over_m_10000": 10_000.0 * (1.0 - 1e-4),
            "sqrt_variance_at_n_over_m_10000": 1.0 - 1e-4,
        }),
    });

    // The quadratic-sum variant with a bare Kronecker weight vanishes
    // identically.
    findings.push(Finding {
        id: "quadratic-sum-legacy-variant".into(),
        description: "the second tabulated form of the quadratic spacing sum pairs \
                      (Y_(n-i+1) - Y_(n-j+1)) with a bare δ_ij, which kills every term: \
                      it evaluates to zero on any sample"
            .into(),
        resolution: "the symmetric (1 - δ_ij/2) form is authoritative; the variant ships \
                     behind a debug entry point and is reported, never merged"
            .into(),
        evidence: serde_json::json!({ "legacy_value_on_any_sample": 0.0 }),
    });

    // The iterated-integral lower limit.
    findings.push(Finding {
        id: "iterated-integral-lower-limit".into(),
        description: "the tabulated iterated bridge integral starts at 0 where its own \
                      variance formula integrates from x_n"
            .into(),
        resolution: "lower limit x_n".into(),
        evidence: serde_json::Value::Null,
    });

    // First-block corner: deterministic vs random centering.
    if let Some(e) = star_cmp.entries.iter().find(|e| e.i == 0 && e.j == 0) {
        findings.push(Finding {
            id: "ratio-row-corner".into(),
            description: format!(
                "the tabulated first-block corner {} matches the random-centering variance {}, \
                 not the deterministic-centering reconstruction {}",
                e.printed, rec.star_head_random_centering, e.reconstructed
            ),
            resolution: "both variances are computed; the reconstruction keeps the \
                         deterministic-centering row that matches the rest of the block"
                .into(),
            evidence: serde_json::json!({
                "printed": e.printed,
                "reconstructed_deterministic": e.reconstructed,
                "random_centering": rec.star_head_random_centering,
            }),
        });
    }

    findings.push(Finding {
        id: "base-variance-candidates".into(),
        description: "three mutually inconsistent closed forms are tabulated for Var(N0)".into(),
        resolution: format!("oracle selects: {}", arb_var.winner),
        evidence: serde_json::to_value(arb_var).unwrap(),
    });
    findings.push(Finding {
        id: "cross-term-candidates".into(),
        description: "two closed forms are tabulated for Cov(N0,N3)".into(),
        resolution: format!("oracle selects: {}", arb_cov.winner),
        evidence: serde_json::to_value(arb_cov).unwrap(),
    });

    if let GammaParam::Finite(_) = gamma {
        findings.push(Finding {
            id: "finite-gamma-table-damage".into(),
            description: "the finite-γ joint-limit tables have mismatched dimensions and \
                          scrambled tokens; see the matrix comparison notes"
                .into(),
            resolution: "reconstruction from base covariances is the operational truth".into(),
            evidence: serde_json::Value::Null,
        });
    }
    findings
}
