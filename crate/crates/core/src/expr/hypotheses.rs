use serde::{Deserialize, Serialize};

use super::CoefficientProblem;
use crate::error::{Error, Result};

/// Boundary samples along y2 used for the periodicity defect.
const PERIODICITY_SAMPLES: usize = 64;
const PERIODICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Not decidable from samples.
    Assumed,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub problem: String,
    pub x1_samples: Vec<f64>,
    pub quadrature_cells: usize,
    /// Smallest eigenvalue of `a` over all samples.
    pub ellipticity_lower_bound: f64,
    /// Per x1 sample: the weight takes both signs on the sample grid.
    pub sign_change_ok: Vec<bool>,
    /// Per x1 sample: cell average of the weight.
    pub local_average: Vec<f64>,
    pub periodicity_defect: f64,
    pub h1: Verdict,
    pub h2: Verdict,
    pub h3: Verdict,
    pub h4: Verdict,
    pub h5: Verdict,
}

impl HypothesisReport {
    /// H2–H5 all pass (H1 is assumed).
    pub fn all_pass(&self) -> bool {
        [self.h2, self.h3, self.h4, self.h5]
            .iter()
            .all(|v| *v == Verdict::Pass)
    }

    /// First failing hypothesis as an error, if any.
    pub fn require(&self) -> Result<()> {
        let checks = [
            ("H2", self.h2, "coefficients are not 1-periodic in y1"),
            ("H3", self.h3, "diffusion is not uniformly elliptic"),
            ("H4", self.h4, "weight does not change sign for every x1"),
            ("H5", self.h5, "weight cell average is not negative for every x1"),
        ];
        for (name, verdict, reason) in checks {
            if verdict == Verdict::Fail {
                return Err(Error::Hypothesis {
                    hypothesis: name.to_string(),
                    reason: reason.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Samples the coefficients on a `quad_n × quad_n` composite 2×2 Gauss grid of
/// the unit cell at each `x1` and checks H2–H5 numerically.
pub fn check_hypotheses(
    problem: &CoefficientProblem,
    x1_samples: &[f64],
    quad_n: usize,
) -> Result<HypothesisReport> {
    if quad_n < 32 {
        return Err(Error::Precondition(format!(
            "quadrature grid must be at least 32x32, got {quad_n}"
        )));
    }
    if x1_samples.is_empty() || x1_samples.iter().any(|x| !(-1.0..=1.0).contains(x)) {
        return Err(Error::Precondition(
            "x1 samples must be a nonempty subset of [-1, 1]".into(),
        ));
    }

    let h = 1.0 / quad_n as f64;
    let g = 0.5 / 3f64.sqrt();
    let offsets = [0.5 - g, 0.5 + g];

    let mut lambda_min = f64::INFINITY;
    let mut sign_change_ok = Vec::with_capacity(x1_samples.len());
    let mut local_average = Vec::with_capacity(x1_samples.len());
    let mut defect: f64 = 0.0;

    for &x1 in x1_samples {
        let mut sum = 0.0;
        let (mut has_pos, mut has_neg) = (false, false);
        for i in 0..quad_n {
            for j in 0..quad_n {
                for oy1 in offsets {
                    for oy2 in offsets {
                        let y1 = (i as f64 + oy1) * h;
                        let y2 = (j as f64 + oy2) * h;
                        let rho = problem.weight(x1, y1, y2)?;
                        has_pos |= rho > 0.0;
                        has_neg |= rho < 0.0;
                        sum += rho;
                        let a = problem.diffusion(x1, y1, y2)?;
                        lambda_min = lambda_min.min(a.min_eigenvalue());
                    }
                }
            }
        }
        sign_change_ok.push(has_pos && has_neg);
        local_average.push(sum * h * h * 0.25);

        for k in 0..PERIODICITY_SAMPLES {
            let y2 = k as f64 / (PERIODICITY_SAMPLES - 1) as f64;
            for e in problem.expressions() {
                let left = e.eval(x1, 0.0, y2)?;
                let right = e.eval(x1, 1.0, y2)?;
                defect = defect.max((left - right).abs());
            }
        }
    }

    Ok(HypothesisReport {
        problem: problem.name.clone(),
        x1_samples: x1_samples.to_vec(),
        quadrature_cells: quad_n,
        ellipticity_lower_bound: lambda_min,
        h1: Verdict::Assumed,
        h2: Verdict::from_bool(defect <= PERIODICITY_TOL),
        h3: Verdict::from_bool(lambda_min > 0.0),
        h4: Verdict::from_bool(sign_change_ok.iter().all(|&b| b)),
        h5: Verdict::from_bool(local_average.iter().all(|&m| m < 0.0)),
        sign_change_ok,
        local_average,
        periodicity_defect: defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<f64> {
        (0..9).map(|i| -1.0 + 0.25 * i as f64).collect()
    }

    #[test]
    fn identity_with_negative_average() {
        let p = CoefficientProblem::from_strs("t", "1", "cos(2*pi*y1) - 0.5").unwrap();
        let r = check_hypotheses(&p, &samples(), 32).unwrap();
        assert_eq!(r.ellipticity_lower_bound, 1.0);
        assert!(r.sign_change_ok.iter().all(|&b| b));
        for m in &r.local_average {
            assert!((m + 0.5).abs() < 1e-12, "{m}");
        }
        assert_eq!(r.h5, Verdict::Pass);
        assert_eq!(r.h1, Verdict::Assumed);
        assert!(r.all_pass());
    }

    #[test]
    fn positive_average_fails_h5() {
        let p = CoefficientProblem::from_strs("t", "1", "cos(2*pi*y1) + 0.5").unwrap();
        let r = check_hypotheses(&p, &samples(), 32).unwrap();
        for m in &r.local_average {
            assert!((m - 0.5).abs() < 1e-12);
        }
        assert_eq!(r.h5, Verdict::Fail);
        assert!(matches!(r.require(), Err(Error::Hypothesis { .. })));
    }

    #[test]
    fn constant_negative_weight_fails_h4() {
        let p = CoefficientProblem::from_strs("t", "1", "-1").unwrap();
        let r = check_hypotheses(&p, &samples(), 32).unwrap();
        assert!(r.sign_change_ok.iter().all(|&b| !b));
        assert_eq!(r.h4, Verdict::Fail);
        assert_eq!(r.h5, Verdict::Pass);
    }

    #[test]
    fn aperiodic_coefficient_fails_h2() {
        let p = CoefficientProblem::from_strs("t", "1 + 0.1*y1", "cos(2*pi*y1) - 0.5").unwrap();
        let r = check_hypotheses(&p, &samples(), 32).unwrap();
        assert_eq!(r.h2, Verdict::Fail);
        assert!((r.periodicity_defect - 0.1).abs() < 1e-12);
    }

    #[test]
    fn builtins_pass_h2_to_h5() {
        for name in CoefficientProblem::builtin_names() {
            let p = CoefficientProblem::builtin(name).unwrap();
            let r = check_hypotheses(&p, &samples(), 32).unwrap();
            assert!(r.all_pass(), "{name}: {r:?}");
        }
    }

    #[test]
    fn preconditions() {
        let p = CoefficientProblem::builtin("P_CONST").unwrap();
        assert!(check_hypotheses(&p, &[0.0], 16).is_err());
        assert!(check_hypotheses(&p, &[1.5], 32).is_err());
    }
}
