//! Spec files: the system, its splitting and the rates, as JSON.

use std::path::Path;

use hk_dichotomy::catalog::{ExampleSpec, ExampleSystem};
use hk_dichotomy::model::{build_evolution, check_invariance, check_projectors, validate_growth_rate};
use hk_dichotomy::series::TildeStrategy;
use hk_dichotomy::{GrowthRate, LinearSystem, ProjectorSequence, RateKind, VectorNorm};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Top-level spec file. Matrices are row-major, `dimension * dimension`
/// numbers each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub dimension: usize,
    pub window: usize,
    #[serde(default)]
    pub norm: VectorNorm,
    pub system: SystemSource,
    /// Required for explicit matrices; generators supply their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projectors: Option<ProjectorSource>,
    /// Overrides the generator's rates; required for explicit matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSource {
    Generator(ExampleSpec),
    /// `A_0, ..., A_{N-1}` (longer lists are truncated to the window).
    Matrices(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProjectorSource {
    /// The projectors of a named generator.
    Generator(ExampleSpec),
    /// `P_0, ..., P_N`.
    Matrices(Vec<Vec<f64>>),
    /// The same `P` at every index.
    Constant(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSpec {
    pub h: RateKind<f64>,
    pub k: RateKind<f64>,
    /// Used by the example2/example6 generators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<RateKind<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilde: Option<TildeStrategy<f64>>,
}

/// Fully validated analysis inputs.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub source: String,
    pub system: LinearSystem<f64>,
    pub projectors: ProjectorSequence<f64>,
    pub h: GrowthRate<f64>,
    pub k: GrowthRate<f64>,
    pub tilde: TildeStrategy<f64>,
    /// Measured `(||P_n||, ||Q_n||)` when the system comes from a generator.
    pub projector_norms: Option<Vec<(f64, f64)>>,
    pub digest: String,
}

/// Tolerances used while validating inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InputTolerances {
    pub projector: f64,
    pub invariance: f64,
}

impl SpecFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// SHA-256 over the canonical JSON form (sorted keys, no whitespace).
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let value = serde_json::to_value(self).expect("spec serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Builds and validates the inputs; `window` and `norm` override the
    /// spec's values.
    pub fn inputs(&self, window: Option<usize>, norm: Option<VectorNorm>, tol: InputTolerances) -> Result<Inputs, CliError> {
        let window = window.unwrap_or(self.window);
        let norm = norm.unwrap_or(self.norm);
        if window < 1 {
            return Err(CliError::validation("window", "must be at least 1"));
        }
        let rate = |field: &str, kind: &RateKind<f64>| {
            validate_growth_rate(kind.clone(), window).map_err(|e| CliError::Validation(format!("rates.{field}"), e))
        };
        let (source, system, generated, h, k) = match &self.system {
            SystemSource::Generator(spec) => {
                let spec = self.with_rate_overrides(spec);
                let ex: ExampleSystem<f64> =
                    spec.build(window).map_err(|e| CliError::Validation("system.generator".into(), e))?;
                let (h, k) = match &self.rates {
                    Some(r) => (rate("h", &r.h)?, rate("k", &r.k)?),
                    None => (ex.h.clone(), ex.k.clone()),
                };
                (spec.name().to_string(), ex.system.clone().with_norm(norm), Some(ex), h, k)
            }
            SystemSource::Matrices(list) => {
                if list.len() < window {
                    return Err(CliError::validation("system.matrices", format!("{} matrices, window needs {window}", list.len())));
                }
                let mats = list[..window]
                    .iter()
                    .enumerate()
                    .map(|(i, m)| self.matrix(&format!("system.matrices[{i}]"), m))
                    .collect::<Result<Vec<_>, _>>()?;
                let sys = LinearSystem::new(mats, norm).map_err(|e| CliError::Validation("system.matrices".into(), e))?;
                let r = self.rates.as_ref().ok_or_else(|| CliError::validation("rates", "required for explicit matrices"))?;
                ("matrices".to_string(), sys, None, rate("h", &r.h)?, rate("k", &r.k)?)
            }
        };
        if system.dim() != self.dimension {
            return Err(CliError::validation("dimension", format!("spec says {}, system has {}", self.dimension, system.dim())));
        }
        let projectors = match (&self.projectors, &generated) {
            (Some(ProjectorSource::Matrices(list)), _) => {
                if list.len() < window + 1 {
                    return Err(CliError::validation("projectors.matrices", format!("{} matrices, window needs {}", list.len(), window + 1)));
                }
                let mats = list[..=window]
                    .iter()
                    .enumerate()
                    .map(|(i, m)| self.matrix(&format!("projectors.matrices[{i}]"), m))
                    .collect::<Result<Vec<_>, _>>()?;
                ProjectorSequence::new(mats).map_err(|e| CliError::Validation("projectors.matrices".into(), e))?
            }
            (Some(ProjectorSource::Constant(m)), _) => {
                let p = self.matrix("projectors.constant", m)?;
                ProjectorSequence::constant(p, window).map_err(|e| CliError::Validation("projectors.constant".into(), e))?
            }
            (Some(ProjectorSource::Generator(spec)), _) => {
                let ex: ExampleSystem<f64> =
                    spec.build(window).map_err(|e| CliError::Validation("projectors.generator".into(), e))?;
                ex.projectors
            }
            (None, Some(ex)) => ex.projectors.clone(),
            (None, None) => return Err(CliError::validation("projectors", "required for explicit matrices")),
        };
        if projectors.dim() != self.dimension {
            return Err(CliError::validation("projectors", format!("dimension {} differs from {}", projectors.dim(), self.dimension)));
        }
        let report = check_projectors(&projectors, norm, tol.projector);
        if let Some(n) = report.pass.iter().position(|p| !p) {
            return Err(CliError::validation(
                format!("projectors[{n}]"),
                format!("not idempotent (relative residual {:.3e})", report.residuals[n]),
            ));
        }
        let evolution = build_evolution(&system).map_err(|e| CliError::Validation("system".into(), e))?;
        let inv = check_invariance(&projectors, &evolution, tol.invariance)
            .map_err(|e| CliError::Validation("projectors".into(), e))?;
        if !inv.pass {
            let (m, n) = inv.worst_pair;
            return Err(CliError::validation(
                format!("projectors at (m, n) = ({m}, {n})"),
                format!("not invariant (relative residual {:.3e})", inv.one_step_max.max(inv.cocycle_max)),
            ));
        }
        let tilde = self.rates.as_ref().and_then(|r| r.tilde.clone()).unwrap_or(TildeStrategy::Default);
        Ok(Inputs {
            source,
            system,
            projectors,
            h,
            k,
            tilde,
            projector_norms: generated.map(|ex| ex.projector_norms),
            digest: self.digest(),
        })
    }

    fn with_rate_overrides(&self, spec: &ExampleSpec) -> ExampleSpec {
        let Some(r) = &self.rates else { return spec.clone() };
        match spec {
            ExampleSpec::Example2 { a, .. } => ExampleSpec::Example2 {
                a: r.a.clone().unwrap_or_else(|| a.clone()),
                h: r.h.clone(),
                k: r.k.clone(),
            },
            ExampleSpec::Example6 { a, .. } => ExampleSpec::Example6 {
                a: r.a.clone().unwrap_or_else(|| a.clone()),
                h: r.h.clone(),
                k: r.k.clone(),
            },
            other => other.clone(),
        }
    }

    fn matrix(&self, location: &str, entries: &[f64]) -> Result<DMatrix<f64>, CliError> {
        let d = self.dimension;
        if entries.len() != d * d {
            return Err(CliError::validation(location, format!("expected {} entries, found {}", d * d, entries.len())));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(CliError::validation(location, "non-finite entry"));
        }
        Ok(DMatrix::from_row_slice(d, d, entries))
    }
}

/// Spec for a named generator with optional parameter overrides given as
/// JSON values.
pub fn example_spec(name: &str, params: &[(String, serde_json::Value)], window: usize) -> Result<SpecFile, CliError> {
    let mut object = serde_json::Map::new();
    object.insert("name".into(), serde_json::Value::String(name.into()));
    for (key, value) in params {
        object.insert(key.clone(), value.clone());
    }
    let generator: ExampleSpec =
        serde_json::from_value(serde_json::Value::Object(object)).map_err(|e| CliError::Parse(format!("example {name}: {e}")))?;
    Ok(SpecFile {
        dimension: 2,
        window,
        norm: VectorNorm::Max,
        system: SystemSource::Generator(generator),
        projectors: None,
        rates: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: InputTolerances = InputTolerances { projector: 1e-9, invariance: 1e-10 };

    #[test]
    fn generator_rates_can_be_overridden() {
        let text = r#"{
            "dimension": 2, "window": 6,
            "system": {"generator": {"name": "example2"}},
            "rates": {"h": {"kind": "exponential", "alpha": 1.0}, "k": {"kind": "exponential", "alpha": 1.5}}
        }"#;
        let inputs = SpecFile::parse(text).unwrap().inputs(None, None, TOL).unwrap();
        assert_eq!(inputs.h.kind(), &RateKind::Exponential { alpha: 1.0 });
        assert_eq!(inputs.source, "example2");
        assert_eq!(inputs.system.window(), 6);
    }

    #[test]
    fn window_and_norm_overrides_apply() {
        let spec = example_spec("uniform-exponential", &[], 10).unwrap();
        let inputs = spec.inputs(Some(4), Some(VectorNorm::Euclidean), TOL).unwrap();
        assert_eq!(inputs.system.window(), 4);
        assert_eq!(inputs.system.norm(), VectorNorm::Euclidean);
        assert!(spec.inputs(Some(0), None, TOL).is_err());
    }

    #[test]
    fn explicit_matrices_need_projectors_and_rates() {
        let text = r#"{"dimension": 1, "window": 2, "system": {"matrices": [[0.5], [0.5]]}}"#;
        let err = SpecFile::parse(text).unwrap().inputs(None, None, TOL).unwrap_err();
        assert!(err.to_string().contains("rates"), "{err}");
    }

    #[test]
    fn wrong_entry_count_reports_location() {
        let text = r#"{
            "dimension": 2, "window": 2,
            "system": {"matrices": [[1, 0, 0, 1], [1, 0, 0]]},
            "projectors": {"constant": [1, 0, 0, 0]},
            "rates": {"h": {"kind": "exponential", "alpha": 1.0}, "k": {"kind": "exponential", "alpha": 1.0}}
        }"#;
        let err = SpecFile::parse(text).unwrap().inputs(None, None, TOL).unwrap_err();
        assert!(err.to_string().contains("system.matrices[1]"), "{err}");
    }

    #[test]
    fn digest_ignores_formatting() {
        let a = SpecFile::parse(r#"{"dimension":2,"window":4,"system":{"generator":{"name":"example6"}}}"#).unwrap();
        let b = SpecFile::parse("{\n  \"window\": 4,\n  \"dimension\": 2,\n  \"system\": {\"generator\": {\"name\": \"example6\"}}\n}").unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
