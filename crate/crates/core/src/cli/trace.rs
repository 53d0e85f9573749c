use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    BestEffort,
    Failed,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Certified => "certified",
            Self::BestEffort => "best-effort",
            Self::Failed => "failed",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub scenario: String,
    pub config_hash: String,
    pub version: String,
    pub verdict: Verdict,
    pub summary: BTreeMap<String, f64>,
    pub steps: Vec<TraceStep>,
    pub notes: Vec<String>,
    pub runtime_seconds: f64,
}

impl RunTrace {
    /// Step indices strictly increase.
    pub fn check_monotone(&self) -> Result<(), CliError> {
        for w in self.steps.windows(2) {
            if w[1].step <= w[0].step {
                return Err(CliError::SchemaMismatch(format!(
                    "step {} follows step {}",
                    w[1].step, w[0].step
                )));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("traces serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let t: Self = toml::from_str(text).map_err(|e| CliError::SchemaMismatch(e.to_string()))?;
        t.check_monotone()?;
        Ok(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoldenTolerances {
    /// Relative tolerance on fields named `eps*`.
    pub eps_rel: f64,
    /// Allowed factor either way on defects and residuals.
    pub defect_factor: f64,
    /// Defects below this are compared as equal to it.
    pub defect_floor: f64,
}

impl Default for GoldenTolerances {
    fn default() -> Self {
        Self {
            eps_rel: 0.05,
            defect_factor: 10.0,
            defect_floor: 1e-13,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenReport {
    pub verdict: Verdict,
    pub compared: usize,
    /// One line per failing field.
    pub failures: Vec<String>,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum FieldKind {
    Eps,
    Defect,
    Other,
}

fn kind(name: &str) -> FieldKind {
    if name.starts_with("eps") {
        FieldKind::Eps
    } else if ["defect", "residual", "reversibility"].iter().any(|w| name.contains(w)) {
        FieldKind::Defect
    } else {
        FieldKind::Other
    }
}

fn field_ok(k: FieldKind, a: f64, g: f64, tol: &GoldenTolerances) -> bool {
    if a.is_nan() || g.is_nan() {
        return a.is_nan() && g.is_nan();
    }
    match k {
        FieldKind::Eps => (a - g).abs() <= tol.eps_rel * g.abs(),
        FieldKind::Defect => {
            let (a, g) = (a.abs().max(tol.defect_floor), g.abs().max(tol.defect_floor));
            a <= tol.defect_factor * g && g <= tol.defect_factor * a
        }
        FieldKind::Other => true,
    }
}

fn compare_maps(
    at: &str,
    run: &BTreeMap<String, f64>,
    gold: &BTreeMap<String, f64>,
    tol: &GoldenTolerances,
    failures: &mut Vec<String>,
) -> Result<usize, CliError> {
    if run.keys().ne(gold.keys()) {
        return Err(CliError::SchemaMismatch(format!(
            "{at}: fields {:?} against golden {:?}",
            run.keys().collect::<Vec<_>>(),
            gold.keys().collect::<Vec<_>>()
        )));
    }
    let mut n = 0;
    for (name, &g) in gold {
        let k = kind(name);
        if k == FieldKind::Other {
            continue;
        }
        n += 1;
        let a = run[name];
        if !field_ok(k, a, g, tol) {
            failures.push(format!("{at} {name}: {a:e} against golden {g:e}"));
        }
    }
    Ok(n)
}

/// Field-wise comparison: `eps*` fields within `eps_rel`, defects within `defect_factor`.
pub fn compare_golden(
    trace: &RunTrace,
    golden: &RunTrace,
    tol: &GoldenTolerances,
) -> Result<GoldenReport, CliError> {
    if trace.scenario != golden.scenario {
        return Err(CliError::SchemaMismatch(format!(
            "scenario {} against golden {}",
            trace.scenario, golden.scenario
        )));
    }
    let mut failures = Vec::new();
    if trace.verdict != golden.verdict {
        failures.push(format!("verdict: {} against golden {}", trace.verdict, golden.verdict));
    }
    if trace.steps.len() != golden.steps.len() {
        failures.push(format!(
            "steps: {} against golden {}",
            trace.steps.len(),
            golden.steps.len()
        ));
    }
    let mut compared = compare_maps("summary", &trace.summary, &golden.summary, tol, &mut failures)?;
    for (s, g) in trace.steps.iter().zip(&golden.steps) {
        if s.step != g.step {
            return Err(CliError::SchemaMismatch(format!("step {} against golden {}", s.step, g.step)));
        }
        compared += compare_maps(&format!("step {}", s.step), &s.metrics, &g.metrics, tol, &mut failures)?;
    }
    Ok(GoldenReport {
        verdict: if failures.is_empty() {
            Verdict::Certified
        } else {
            Verdict::Failed
        },
        compared,
        failures,
    })
}
