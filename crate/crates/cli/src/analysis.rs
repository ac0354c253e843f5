//! Runs every check on validated inputs and assembles the certificate.

use hk_dichotomy::dichotomy::{estimate_hd1, estimate_hd2_kd2, estimate_hg1_kg1, estimate_hg2_kg2, estimate_kd1};
use hk_dichotomy::estimate::{check_candidate, window_schedule, ConditionEstimate, Divergence};
use hk_dichotomy::model::{check_projectors, check_skew_identities, check_strong_invariance, IdentityReport};
use hk_dichotomy::model::{CocycleReport, InvarianceReport, ProjectorReport, SplitSystem};
use hk_dichotomy::norms::{
    build_dichotomy_norm, build_growth_norm, check_compatibility, verify_theorem2, verify_theorem3, verify_theorem5,
    NormKind, NormSequence, TailCheck, TheoremReport, FACTOR_TOL, HALTON_SAMPLES,
};
use hk_dichotomy::series::{barbashin_sums, datko_sums, derive_tilde_rate, SeriesReport, TildeStrategy};
use hk_dichotomy::{ConditionId, Verdict, VectorNorm};
use serde::Serialize;

use crate::error::CliError;
use crate::spec::{InputTolerances, Inputs};

/// Conditions that drive the exit code unless `--conditions` is given.
pub const DEFAULT_CONDITIONS: [ConditionId; 8] = [
    ConditionId::Hd1,
    ConditionId::Kd1,
    ConditionId::Hg1,
    ConditionId::Kg1,
    ConditionId::Hd2,
    ConditionId::Kd2,
    ConditionId::Hg2,
    ConditionId::Kg2,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub projector: f64,
    pub invariance: f64,
    pub sigma_min: f64,
    pub factor: f64,
    pub cocycle: f64,
    pub identities: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { projector: 1e-9, invariance: 1e-10, sigma_min: 1e-10, factor: FACTOR_TOL, cocycle: 1e-12, identities: 1e-9 }
    }
}

impl Tolerances {
    pub fn inputs(&self) -> InputTolerances {
        InputTolerances { projector: self.projector, invariance: self.invariance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub window: usize,
    pub norm: VectorNorm,
    pub tolerances: Tolerances,
    /// Low-discrepancy directions added to the vertex and axis samples.
    pub sample_budget: usize,
    pub schedule: Vec<usize>,
    pub tilde: TildeStrategy<f64>,
    pub selected: Vec<ConditionId>,
}

impl AnalysisConfig {
    pub fn new(window: usize, norm: VectorNorm, tilde: TildeStrategy<f64>, selected: Vec<ConditionId>) -> Self {
        AnalysisConfig {
            window,
            norm,
            tolerances: Tolerances::default(),
            sample_budget: HALTON_SAMPLES,
            schedule: window_schedule(window),
            tilde,
            selected,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    #[serde(flatten)]
    pub estimate: ConditionEstimate<f64>,
    pub verdict: Verdict,
    /// Trend of the coefficient at index 0 across nested windows.
    pub anchored: Option<Divergence>,
    /// Trend of the uniform constant across nested windows.
    pub uniformity: Option<Divergence>,
}

impl From<ConditionEstimate<f64>> for ConditionReport {
    fn from(estimate: ConditionEstimate<f64>) -> Self {
        ConditionReport {
            verdict: estimate.verdict(),
            anchored: estimate.anchored_diagnostic(),
            uniformity: estimate.uniformity(),
            estimate,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StrongInvarianceSummary {
    pub kernel_rank: usize,
    pub min_sigma: f64,
    pub pairs: usize,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructuralChecks {
    pub projectors: ProjectorReport,
    pub invariance: InvarianceReport,
    pub cocycle: CocycleReport,
    pub cocycle_pass: bool,
    pub strong_invariance: StrongInvarianceSummary,
    pub skew_identities: IdentityReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormSummary {
    pub construction: NormKind,
    /// Forward suprema are truncated at this index.
    pub horizon: usize,
    pub truncation: TailCheck,
    pub c: Vec<f64>,
    pub c1: Vec<f64>,
    pub lower_ratio: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormEstimateSummary {
    pub norms: NormKind,
    pub s: Vec<f64>,
    pub witness: Vec<f64>,
    pub witness_trend: Vec<(usize, f64)>,
    pub witness_divergence: Option<Divergence>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormChecks {
    pub projected_factors: TheoremReport,
    pub full_factors: TheoremReport,
    pub norm_estimate: NormEstimateSummary,
    pub base_norm_estimate: NormEstimateSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesSummary {
    pub coefficients: Vec<f64>,
    pub witness_trend: Vec<(usize, f64)>,
    pub witness_divergence: Option<Divergence>,
    pub verdict: Verdict,
    /// Datko only: verdict of the `j = m` single-term check.
    pub single_term_verdict: Option<Verdict>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TildeSummary {
    pub strategy: &'static str,
    pub bound: f64,
    pub final_partial_sum: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemSummary {
    pub source: String,
    pub dimension: usize,
    pub window: usize,
    pub norm: VectorNorm,
    pub projector_norms: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub tool: &'static str,
    pub version: &'static str,
    pub input_digest: String,
    pub config: AnalysisConfig,
    pub system: SystemSummary,
    pub checks: StructuralChecks,
    pub conditions: Vec<ConditionReport>,
    pub norms: Vec<NormSummary>,
    pub norm_checks: NormChecks,
    pub tilde: TildeSummary,
    pub barbashin: SeriesSummary,
    pub datko: SeriesSummary,
    pub discrepancies: Vec<String>,
    pub selected_verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl Certificate {
    pub fn condition(&self, id: ConditionId) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.estimate.id == id)
    }

    /// Verdict of any condition id, including the factor checks hd3..kd4.
    pub fn verdict_of(&self, id: ConditionId) -> Verdict {
        let factor = |pass: bool| if pass { Verdict::HoldsOnWindow } else { Verdict::Fails };
        match id {
            ConditionId::Hd3 => factor(self.norm_checks.projected_factors.hd.pass()),
            ConditionId::Kd3 => factor(self.norm_checks.projected_factors.kd.pass()),
            ConditionId::Hd4 => factor(self.norm_checks.full_factors.hd.pass()),
            ConditionId::Kd4 => factor(self.norm_checks.full_factors.kd.pass()),
            other => self.condition(other).map(|c| c.verdict).unwrap_or(Verdict::Vacuous),
        }
    }

    /// 0 when no selected condition FAILS or DIVERGES, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.selected_verdict.is_failure() {
            1
        } else {
            0
        }
    }
}

fn norm_estimate_summary(norms: &NormSequence<'_, f64>) -> Result<NormEstimateSummary, CliError> {
    let compat = check_compatibility(norms).map_err(|e| CliError::Validation("norms".into(), e))?;
    let t5 = verify_theorem5(norms, &compat);
    Ok(NormEstimateSummary {
        norms: norms.kind(),
        s: t5.s,
        witness: t5.witness,
        witness_trend: t5.witness_trend,
        witness_divergence: t5.witness_divergence,
        verdict: t5.verdict,
    })
}

fn series_summary(r: &SeriesReport<f64>) -> SeriesSummary {
    SeriesSummary {
        coefficients: r.coefficients.clone(),
        witness_trend: r.witness_trend.clone(),
        witness_divergence: r.witness_divergence.clone(),
        verdict: r.verdict,
        single_term_verdict: r.single_term.as_ref().map(|(a, b)| a.verdict().worst(b.verdict())),
    }
}

fn norm_summary(norms: &NormSequence<'_, f64>) -> Result<NormSummary, CliError> {
    let compat = check_compatibility(norms).map_err(|e| CliError::Validation("norms".into(), e))?;
    Ok(NormSummary {
        construction: norms.kind(),
        horizon: norms.horizon(),
        truncation: norms.tail_nonincreasing(),
        c: compat.c,
        c1: compat.c1,
        lower_ratio: compat.lower_ratio,
        samples: compat.samples,
    })
}

/// Runs the full pipeline in a fixed order. Structural problems (rank
/// changes, singular kernel restrictions) abort; condition failures are
/// recorded.
pub fn run_analysis(inputs: &Inputs, config: &AnalysisConfig) -> Result<Certificate, CliError> {
    let tol = config.tolerances;
    let system = &inputs.system;
    let norm = system.norm();
    let structural = |e| CliError::Validation("splitting".into(), e);
    let split = SplitSystem::new(system, inputs.projectors.clone(), tol.sigma_min).map_err(structural)?;
    let e = split.evolution();
    let p = &inputs.projectors;

    let cocycle = e.cocycle_residual();
    let strong = check_strong_invariance(p, e, tol.sigma_min).map_err(structural)?;
    let checks = StructuralChecks {
        projectors: check_projectors(p, norm, tol.projector),
        invariance: hk_dichotomy::model::check_invariance(p, e, tol.invariance).map_err(structural)?,
        cocycle_pass: cocycle.max_relative <= tol.cocycle,
        cocycle,
        strong_invariance: StrongInvarianceSummary {
            kernel_rank: strong.kernel_rank,
            min_sigma: strong.min_sigma,
            pairs: strong.pairs.len(),
            all_pass: strong.all_pass,
        },
        skew_identities: check_skew_identities(split.skew(), e, p, tol.identities).map_err(structural)?,
    };

    let (h, k) = (&inputs.h, &inputs.k);
    let hd1 = estimate_hd1(e, p, h).map_err(structural)?;
    let kd1 = estimate_kd1(e, p, k).map_err(structural)?;
    let (hg1, kg1) = estimate_hg1_kg1(e, p, h, k).map_err(structural)?;
    let (hd2, kd2) = estimate_hd2_kd2(&split, h, k);
    let (hg2, kg2) = estimate_hg2_kg2(&split, h, k);

    let dichotomy = build_dichotomy_norm(&split, h, k).map_err(structural)?;
    let growth = build_growth_norm(&split, h, k).map_err(structural)?;
    let base = NormSequence::base(&split, h, k).map_err(structural)?;
    let norms = vec![norm_summary(&dichotomy)?, norm_summary(&growth)?];

    let compat = check_compatibility(&dichotomy).map_err(structural)?;
    let t5 = verify_theorem5(&dichotomy, &compat);
    let norm_checks = NormChecks {
        projected_factors: verify_theorem2(&dichotomy),
        full_factors: verify_theorem3(&dichotomy),
        norm_estimate: NormEstimateSummary {
            norms: NormKind::Dichotomy,
            s: t5.s.clone(),
            witness: t5.witness.clone(),
            witness_trend: t5.witness_trend.clone(),
            witness_divergence: t5.witness_divergence.clone(),
            verdict: t5.verdict,
        },
        base_norm_estimate: norm_estimate_summary(&base)?,
    };

    let tilde = derive_tilde_rate(h, &config.tilde).map_err(|e| CliError::Validation("rates.tilde".into(), e))?;
    let barbashin = barbashin_sums(&dichotomy);
    let datko = datko_sums(&dichotomy, &tilde).map_err(structural)?;

    let mut conditions: Vec<ConditionReport> = vec![hd1, kd1, hg1, kg1, hd2, kd2, hg2, kg2]
        .into_iter()
        .map(ConditionReport::from)
        .collect();
    conditions.push(t5.hd.into());
    conditions.push(t5.kd.into());
    conditions.push(barbashin.stable.clone().into());
    conditions.push(barbashin.unstable.clone().into());
    conditions.push(datko.stable.clone().into());
    conditions.push(datko.unstable.clone().into());

    let mut cert = Certificate {
        tool: "hkdich",
        version: env!("CARGO_PKG_VERSION"),
        input_digest: inputs.digest.clone(),
        config: config.clone(),
        system: SystemSummary {
            source: inputs.source.clone(),
            dimension: system.dim(),
            window: system.window(),
            norm,
            projector_norms: (0..=split.window()).map(|n| split.projector_norms(n)).collect(),
        },
        checks,
        conditions,
        norms,
        norm_checks,
        tilde: TildeSummary {
            strategy: tilde.strategy,
            bound: tilde.bound,
            final_partial_sum: *tilde.partial_sums.last().unwrap_or(&0.0),
        },
        barbashin: series_summary(&barbashin),
        datko: series_summary(&datko),
        discrepancies: Vec::new(),
        selected_verdict: Verdict::Vacuous,
        timing_ms: None,
    };
    cert.selected_verdict = config.selected.iter().fold(Verdict::Vacuous, |v, id| v.worst(cert.verdict_of(*id)));
    cert.discrepancies = discrepancies(&cert, inputs, &split);
    Ok(cert)
}

/// Notes where a stated property of a built-in example and the measured
/// values disagree, or where truncation may understate a supremum.
fn discrepancies(cert: &Certificate, inputs: &Inputs, split: &SplitSystem<f64>) -> Vec<String> {
    let mut notes = Vec::new();
    let window = split.window();
    if inputs.source == "example2" {
        if let Some(kd1) = cert.condition(ConditionId::Kd1) {
            let max_dev = kd1.estimate.envelope.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            notes.push(format!(
                "example2 (kd1): stated to be non-uniform via (1+ln a_m) k_n ||A_m^n Q_n x|| = (1+ln a_n) k_m ||Q_n x||, \
                 which needs ||Q_m Q_n x|| = ||Q_n x||; measured ||Q_m Q_n x|| = a_m |x2|. Measured minimal (kd1) \
                 envelope deviates from 1 by at most {max_dev:.3e} on the window; the non-uniformity claim is unverified."
            ));
        }
        if let Some(norms) = &inputs.projector_norms {
            let (p, q) = norms[window];
            notes.push(format!(
                "example2 projectors: stated ||P_n x|| = (a_n+1)||x|| and ||Q_n x|| = a_n||x|| do not hold for general x; \
                 measured operator norms are recorded (at n = {window}: ||P_n|| = {p:.6e}, ||Q_n|| = {q:.6e})."
            ));
        }
    }
    if inputs.source == "example6" {
        if let Some(hg2) = cert.condition(ConditionId::Hg2) {
            let g: Vec<f64> = (0..=window).map(|n| 1.0 + n as f64).collect();
            if let Ok(check) = check_candidate(&hg2.estimate, &g, FACTOR_TOL) {
                if !check.pass {
                    notes.push(format!(
                        "example6 (hg2): candidate g_n = 1+n fails against the full-space condition because \
                         ||P_n|| = 1+a_n (margin {:.3e}); it passes (hg1) and (kg1).",
                        check.margin
                    ));
                }
            }
        }
    }
    for n in &cert.norms {
        if !n.truncation.nonincreasing {
            notes.push(format!(
                "{} norms: forward ratio not nonincreasing in m (worst relative rise {:.3e} at {:?}); suprema are \
                 truncated at m = {} and may understate the untruncated values.",
                serde_json::to_value(n.construction).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                n.truncation.worst_increase,
                n.truncation.at,
                n.horizon
            ));
        }
    }
    notes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Barbashin,
    Datko,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesOutput {
    pub tool: &'static str,
    pub version: &'static str,
    pub input_digest: String,
    pub criterion: SeriesKind,
    pub window: usize,
    pub norm: VectorNorm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilde: Option<TildeSummary>,
    pub stable: ConditionReport,
    pub unstable: ConditionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub single_term: Option<(ConditionReport, ConditionReport)>,
    pub summary: SeriesSummary,
}

impl SeriesOutput {
    pub fn exit_code(&self) -> i32 {
        if self.summary.verdict.is_failure() {
            1
        } else {
            0
        }
    }
}

/// One summation criterion in the dichotomy norms, without the rest of the
/// pipeline.
pub fn run_series(inputs: &Inputs, config: &AnalysisConfig, kind: SeriesKind) -> Result<SeriesOutput, CliError> {
    let structural = |e| CliError::Validation("splitting".into(), e);
    let split = SplitSystem::new(&inputs.system, inputs.projectors.clone(), config.tolerances.sigma_min).map_err(structural)?;
    let norms = build_dichotomy_norm(&split, &inputs.h, &inputs.k).map_err(structural)?;
    let (report, tilde) = match kind {
        SeriesKind::Barbashin => (barbashin_sums(&norms), None),
        SeriesKind::Datko => {
            let tilde =
                derive_tilde_rate(&inputs.h, &config.tilde).map_err(|e| CliError::Validation("rates.tilde".into(), e))?;
            let report = datko_sums(&norms, &tilde).map_err(structural)?;
            let summary = TildeSummary {
                strategy: tilde.strategy,
                bound: tilde.bound,
                final_partial_sum: *tilde.partial_sums.last().unwrap_or(&0.0),
            };
            (report, Some(summary))
        }
    };
    Ok(SeriesOutput {
        tool: "hkdich",
        version: env!("CARGO_PKG_VERSION"),
        input_digest: inputs.digest.clone(),
        criterion: kind,
        window: split.window(),
        norm: split.norm(),
        tilde,
        summary: series_summary(&report),
        stable: report.stable.into(),
        unstable: report.unstable.into(),
        single_term: report.single_term.map(|(a, b)| (a.into(), b.into())),
    })
}
