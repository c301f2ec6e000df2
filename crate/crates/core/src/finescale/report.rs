use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    assemble_rod, averaging_diagnostic, factorization_error, localization_profile, positive_spectrum, predicted,
    AveragingDiagnostic, FactorizationError, LocalizationRow, NormalizationRule, ResolutionPolicy,
};
use crate::cell::{build_effective_model, AeffWeighting, EffectiveConfig, EffectiveModel};
use crate::eigen::{negative_branch_probe, EigOptions};
use crate::error::{Error, Result, StageExt};
use crate::expr::{check_hypotheses, CoefficientProblem};
use crate::oscillator::{nu_closed_form, OscillatorSpec};

/// Version of the `report.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Sorted into decreasing order before solving.
    pub eps: Vec<f64>,
    pub j_max: usize,
    pub policy: ResolutionPolicy,
    pub normalization: NormalizationRule,
    pub weighting: AeffWeighting,
    pub tol: f64,
    /// Run the negative-branch existence probe on every rod.
    pub negative_probe: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            eps: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            j_max: 2,
            policy: ResolutionPolicy::default(),
            normalization: NormalizationRule::Paper,
            weighting: AeffWeighting::PsiSquared,
            tol: EigOptions::default().tol,
            negative_probe: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenRow {
    pub j: usize,
    pub lambda: f64,
    pub predicted: f64,
    /// `ε²λ − μ(0)`.
    pub leading_error: f64,
    /// `ε(λ − μ(0)/ε²) − ν_j`.
    pub first_order_error: f64,
    pub residual: f64,
    /// Within `1e−6` relative of the next eigenvalue; reported, not resolved.
    pub cluster_with_next: bool,
    /// Absent for matrix-valued `a`.
    pub factorization: Option<FactorizationError>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsResult {
    pub eps: f64,
    pub m1: usize,
    pub m2: usize,
    pub dofs: usize,
    pub shift: f64,
    pub lanczos_steps: usize,
    pub eigen: Vec<EigenRow>,
    /// First eigenfunction.
    pub localization: Vec<LocalizationRow>,
    /// First eigenfunction, `w = ρ`.
    pub averaging: AveragingDiagnostic,
    /// Negative eigenvalue closest to zero.
    pub negative_probe: Option<f64>,
    pub m_gram_offdiag: f64,
    pub b_gram_offdiag: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub problem: String,
    pub config: SweepConfig,
    pub model: EffectiveModel,
    pub oscillator: OscillatorSpec,
    pub theta: f64,
    pub nu: Vec<f64>,
    pub results: Vec<EpsResult>,
    pub notes: Vec<String>,
}

/// Validates and orders the `ε` list.
fn ordered_eps(cfg: &SweepConfig) -> Result<Vec<f64>> {
    if cfg.eps.is_empty() {
        return Err(Error::Precondition("empty eps list".into()));
    }
    if cfg.j_max == 0 {
        return Err(Error::Precondition("j_max must be at least 1".into()));
    }
    let mut eps = cfg.eps.clone();
    for &e in &eps {
        cfg.policy.rod_grid(e)?;
    }
    eps.sort_by(|a, b| b.total_cmp(a));
    if eps.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Precondition("repeated eps value".into()));
    }
    Ok(eps)
}

/// Effective model on the cell grid matched to the rod resolution, then one
/// independent rod solve per `ε`.
pub fn sweep(problem: &CoefficientProblem, cfg: &SweepConfig) -> Result<ConvergenceReport> {
    let eps = ordered_eps(cfg).stage("sweep config")?;
    let samples: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
    check_hypotheses(problem, &samples, 64)
        .and_then(|r| r.require())
        .stage("check_hypotheses")?;
    let effective = EffectiveConfig {
        grid: cfg.policy.model_grid()?,
        weighting: cfg.weighting,
        ..EffectiveConfig::default()
    };
    let model = build_effective_model(problem, &effective)?;
    let spec = OscillatorSpec::from_model(&model).stage("oscillator")?;
    let nu: Vec<f64> = (1..=cfg.j_max).map(|j| nu_closed_form(&spec, j)).collect();

    let results = eps
        .par_iter()
        .map(|&e| solve_one(problem, cfg, &model, &spec, &nu, e))
        .collect::<Result<Vec<_>>>()?;

    let mut notes = Vec::new();
    if !problem.a.is_scalar() {
        notes.push(
            "matrix-valued a: the factorization error column is omitted, the product reference only holds for scalar a"
                .to_string(),
        );
    }
    Ok(ConvergenceReport {
        schema_version: SCHEMA_VERSION,
        problem: problem.name.clone(),
        config: SweepConfig {
            eps,
            ..cfg.clone()
        },
        theta: spec.theta(),
        model,
        oscillator: spec,
        nu,
        results,
        notes,
    })
}

fn solve_one(
    problem: &CoefficientProblem,
    cfg: &SweepConfig,
    model: &EffectiveModel,
    spec: &OscillatorSpec,
    nu: &[f64],
    eps: f64,
) -> Result<EpsResult> {
    let label = |e: Error| Error::Internal(format!("eps = {eps}: {e}"));
    let opts = EigOptions {
        tol: cfg.tol,
        ..EigOptions::default()
    };
    let rod = assemble_rod(problem, eps, &cfg.policy).stage("assemble_rod")?;
    let spectrum = positive_spectrum(&rod, cfg.j_max, cfg.normalization, &opts)
        .map_err(|e| if e.is_hypothesis_failure() { e } else { label(e) })
        .stage("positive_spectrum")?;
    let scalar = problem.a.is_scalar();
    let mut eigen = Vec::with_capacity(cfg.j_max);
    for (i, &lambda) in spectrum.values.iter().enumerate() {
        let j = i + 1;
        let factorization = if scalar {
            Some(factorization_error(&rod, &spectrum.vectors[i], model, spec, j).stage("factorization_error")?)
        } else {
            None
        };
        eigen.push(EigenRow {
            j,
            lambda,
            predicted: predicted(model, spec, eps, j),
            leading_error: eps * eps * lambda - model.mu0,
            first_order_error: eps * (lambda - model.mu0 / (eps * eps)) - nu[i],
            residual: spectrum.residuals[i],
            cluster_with_next: spectrum.clusters.get(i).copied().unwrap_or(false),
            factorization,
        });
    }
    let first = &spectrum.vectors[0];
    let localization = localization_profile(&rod, first).stage("localization_profile")?;
    let averaging = averaging_diagnostic(&rod, problem, first).stage("averaging_diagnostic")?;
    let negative_probe = if cfg.negative_probe {
        negative_branch_probe(&rod.pencil, &opts).stage("negative_branch_probe")?
    } else {
        None
    };
    Ok(EpsResult {
        eps,
        m1: rod.grid.m1,
        m2: rod.grid.m2,
        dofs: rod.dim(),
        shift: spectrum.shift,
        lanczos_steps: spectrum.iterations,
        eigen,
        localization,
        averaging,
        negative_probe,
        m_gram_offdiag: spectrum.m_gram_offdiag,
        b_gram_offdiag: spectrum.b_gram_offdiag,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenCsvRow {
    pub eps: f64,
    pub j: usize,
    pub lambda: f64,
    pub predicted: f64,
    pub eps2_lambda: f64,
    pub leading_error: f64,
    pub first_order_error: f64,
    pub residual: f64,
    pub cluster_with_next: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationRow {
    pub eps: f64,
    pub j: usize,
    pub scaled_error: f64,
    pub relative_error: f64,
    pub fit_scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizationCsvRow {
    pub eps: f64,
    pub window_label: String,
    pub window: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AveragingRow {
    pub eps: f64,
    pub difference: f64,
    pub l2_norm: f64,
    pub grad_norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCheckRow {
    pub eps: f64,
    pub dofs: usize,
    pub shift: f64,
    pub lanczos_steps: usize,
    pub negative_probe: Option<f64>,
    pub m_gram_offdiag: f64,
    pub b_gram_offdiag: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

impl ConvergenceReport {
    pub fn eigen_rows(&self) -> Vec<EigenCsvRow> {
        self.results
            .iter()
            .flat_map(|r| {
                r.eigen.iter().map(move |e| EigenCsvRow {
                    eps: r.eps,
                    j: e.j,
                    lambda: e.lambda,
                    predicted: e.predicted,
                    eps2_lambda: r.eps * r.eps * e.lambda,
                    leading_error: e.leading_error,
                    first_order_error: e.first_order_error,
                    residual: e.residual,
                    cluster_with_next: e.cluster_with_next,
                })
            })
            .collect()
    }

    pub fn factorization_rows(&self) -> Vec<FactorizationRow> {
        self.results
            .iter()
            .flat_map(|r| {
                r.eigen.iter().filter_map(move |e| {
                    e.factorization.map(|f| FactorizationRow {
                        eps: r.eps,
                        j: e.j,
                        scaled_error: f.scaled,
                        relative_error: f.relative,
                        fit_scale: f.fit_scale,
                    })
                })
            })
            .collect()
    }

    pub fn localization_rows(&self) -> Vec<LocalizationCsvRow> {
        self.results
            .iter()
            .flat_map(|r| {
                r.localization.iter().map(move |l| LocalizationCsvRow {
                    eps: r.eps,
                    window_label: l.label.clone(),
                    window: l.window,
                    fraction: l.fraction,
                })
            })
            .collect()
    }

    pub fn averaging_rows(&self) -> Vec<AveragingRow> {
        self.results
            .iter()
            .map(|r| AveragingRow {
                eps: r.eps,
                difference: r.averaging.difference,
                l2_norm: r.averaging.l2_norm,
                grad_norm: r.averaging.grad_norm,
                ratio: r.averaging.ratio,
            })
            .collect()
    }

    pub fn spectrum_check_rows(&self) -> Vec<SpectrumCheckRow> {
        self.results
            .iter()
            .map(|r| SpectrumCheckRow {
                eps: r.eps,
                dofs: r.dofs,
                shift: r.shift,
                lanczos_steps: r.lanczos_steps,
                negative_probe: r.negative_probe,
                m_gram_offdiag: r.m_gram_offdiag,
                b_gram_offdiag: r.b_gram_offdiag,
            })
            .collect()
    }

    /// Column `j` (from 1) of a per-`ε` quantity, in sweep order.
    pub fn column<F: Fn(&EigenRow) -> f64>(&self, j: usize, f: F) -> Vec<f64> {
        self.results.iter().map(|r| f(&r.eigen[j - 1])).collect()
    }

    /// `report.json` and `tables/{eigenvalues,factorization,localization,averaging,spectrum_checks}.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let tables = dir.join("tables");
        fs::create_dir_all(&tables)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(dir.join("report.json"), json)?;
        write_csv(&tables.join("eigenvalues.csv"), &self.eigen_rows())?;
        write_csv(&tables.join("factorization.csv"), &self.factorization_rows())?;
        write_csv(&tables.join("localization.csv"), &self.localization_rows())?;
        write_csv(&tables.join("averaging.csv"), &self.averaging_rows())?;
        write_csv(&tables.join("spectrum_checks.csv"), &self.spectrum_check_rows())?;
        Ok(())
    }
}
