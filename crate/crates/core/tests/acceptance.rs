//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::time::Instant;

use common::{rel, CellRoot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinspec::cell::{
    cell_pencil, corrector_case1, corrector_weighted, mu_prime, mu_values, principal_cell_eig,
    AeffWeighting,
};
use thinspec::eigen::{principal_positive, EigOptions};
use thinspec::error::Error;
use thinspec::expr::CoefficientProblem;
use thinspec::fem::CellGrid;
use thinspec::finescale::{
    assemble_rod, positive_spectrum, sweep, ConvergenceReport, NormalizationRule, ResolutionPolicy,
    SweepConfig,
};
use thinspec::oscillator::{nu_closed_form, solve_truncated, OscillatorSpec};

type Outcome = Result<String, String>;

fn builtin(name: &str) -> CoefficientProblem {
    CoefficientProblem::builtin(name).unwrap()
}

fn grid(n1: usize, n2: usize) -> CellGrid {
    CellGrid::new(n1, n2).unwrap()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn c1_principal_vs_dense() -> Outcome {
    let start = Instant::now();
    let pencil = cell_pencil(&builtin("P_CONST"), 0.0, &grid(24, 24)).map_err(|e| e.to_string())?;
    let sparse = principal_positive(&pencil).map_err(|e| e.to_string())?.mu;
    let sparse_secs = start.elapsed().as_secs_f64();
    let dense = CellRoot::new(&pencil.a, &pencil.b, &pencil.m).root();
    let secs = start.elapsed().as_secs_f64();
    let r = rel(sparse, dense);
    ensure(
        r <= 1e-8 && secs < 10.0,
        format!("mu sparse {sparse:.12} dense {dense:.12} rel {r:.2e}, sparse {sparse_secs:.2} s, total {secs:.2} s"),
    )
}

fn c2_nonnegative_average() -> Outcome {
    let cases = [
        ("cos(2*pi*y1) + 0.5", 0.0),
        ("2*cos(2*pi*y1)*cos(pi*y2) + 0.1", 0.0),
        ("cos(2*pi*y1) + 0.3 + 0.2*x1^2", 0.5),
    ];
    let mut refused = 0;
    for (rho, x1) in cases {
        let p = CoefficientProblem::from_strs("nonneg", "1", rho).unwrap();
        if matches!(principal_cell_eig(&p, x1, &grid(32, 8)), Err(Error::NoPositivePrincipal { .. })) {
            refused += 1;
        }
    }
    ensure(refused == 3, format!("{refused}/3 refused with NoPositivePrincipal"))
}

fn c3_positivity() -> Outcome {
    let grids = [(16, 16), (24, 24), (32, 8), (48, 12), (64, 16), (128, 8)];
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for name in CoefficientProblem::builtin_names() {
        let p = builtin(name);
        for &(n1, n2) in &grids {
            let xs: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
            let pairs = mu_values(&p, &grid(n1, n2), &xs).map_err(|e| format!("{name} {n1}x{n2}: {e}"))?;
            for pair in pairs {
                let min = pair.psi.iter().copied().fold(f64::INFINITY, f64::min);
                worst = worst.min(min);
                count += 1;
            }
        }
    }
    ensure(worst > 0.0, format!("{count} eigenpairs, smallest nodal Psi {worst:.3e}"))
}

fn c4_mu_prime() -> Outcome {
    let p = builtin("P_LOC");
    let g = grid(64, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-3;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let x: f64 = rng.gen_range(-0.9..0.9);
        let pairs = mu_values(&p, &g, &[x - h, x, x + h]).map_err(|e| e.to_string())?;
        let fd = (pairs[2].mu - pairs[0].mu) / (2.0 * h);
        let formula = mu_prime(&p, &pairs[1]).map_err(|e| e.to_string())?;
        worst = worst.max(rel(formula, fd));
    }
    ensure(worst <= 1e-3, format!("max relative error {worst:.2e} over 10 points"))
}

fn c5_case1_analytics() -> Outcome {
    let rho = "cos(2*pi*y1) - 0.5";
    let layered = CoefficientProblem::from_strs("layered", "2 + cos(2*pi*y1)", rho).unwrap();
    let transverse = CoefficientProblem::from_strs("transverse", "2 + cos(2*pi*y2)", rho).unwrap();
    let constant = CoefficientProblem::from_strs("constant", "1.5", rho).unwrap();
    let (_, harmonic) = corrector_case1(&layered, 0.0, &grid(512, 4)).map_err(|e| e.to_string())?;
    let (_, arithmetic) = corrector_case1(&transverse, 0.0, &grid(16, 64)).map_err(|e| e.to_string())?;
    let (n, _) = corrector_case1(&constant, 0.0, &grid(32, 8)).map_err(|e| e.to_string())?;
    let e1 = rel(harmonic, 3f64.sqrt());
    let e2 = (arithmetic - 2.0).abs();
    let n_max = n.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure(
        e1 <= 1e-5 && e2 <= 1e-6 && n_max <= 1e-12,
        format!("layered rel {e1:.2e}, transverse abs {e2:.2e}, constant-a max |N| {n_max:.1e}"),
    )
}

fn c6_weighted_structure() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["P_CONST", "P_LOC"] {
        let p = builtin(name);
        let pair = principal_cell_eig(&p, 0.0, &grid(64, 16)).map_err(|e| e.to_string())?;
        let w = corrector_weighted(&p, &pair, AeffWeighting::PsiSquared).map_err(|e| e.to_string())?;
        let a21 = w.a_eff_matrix[1][0];
        ok &= a21.abs() <= 1e-8 && w.a_eff > 0.0;
        parts.push(format!("{name}: A21 {a21:.1e}, a_eff {:.6}", w.a_eff));
    }
    ensure(ok, parts.join("; "))
}

fn c7_oscillator() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut specs = vec![OscillatorSpec::new(1.0, 0.0, 2.0, 1.0).unwrap()];
    while specs.len() < 5 {
        specs.push(
            OscillatorSpec::new(
                rng.gen_range(0.5..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(1.0..10.0),
                rng.gen_range(0.5..2.0),
            )
            .unwrap(),
        );
    }
    let mut worst = 0.0f64;
    for spec in &specs {
        let sol = solve_truncated(spec, None, 2000, 4).map_err(|e| e.to_string())?;
        for j in 1..=4 {
            worst = worst.max(rel(sol.values[j - 1], nu_closed_form(spec, j)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-6 && secs < 5.0, format!("max relative error {worst:.2e}, {secs:.2} s"))
}

fn c8_asymptotics(report: &ConvergenceReport, secs: f64) -> Outcome {
    let mu0 = report.model.mu0;
    let leading: Vec<f64> = report.column(1, |r| r.leading_error.abs());
    let first: Vec<f64> = report.column(1, |r| r.first_order_error.abs());
    let gap = leading.last().unwrap() / mu0;
    ensure(
        strictly_decreasing(&leading) && gap <= 0.05 && strictly_decreasing(&first) && secs <= 600.0,
        format!(
            "|eps^2 lambda1 - mu0| {leading:.4?}, final gap {:.2}%, |first-order| {first:.4?}, {secs:.1} s",
            100.0 * gap
        ),
    )
}

fn c9_localization(report: &ConvergenceReport) -> Outcome {
    let last = report.results.last().unwrap();
    if (last.eps - 1.0 / 64.0).abs() > 1e-15 {
        return Err(format!("last eps is {}", last.eps));
    }
    let rows = &last.localization;
    let at6 = rows.iter().find(|r| r.label == "6sqrt(eps)").map(|r| r.fraction).unwrap_or(0.0);
    let monotone = rows.windows(2).all(|w| w[0].window <= w[1].window && w[0].fraction <= w[1].fraction);
    ensure(at6 >= 0.95 && monotone, format!("fraction within 6 sqrt(eps) {at6:.8}, monotone {monotone}"))
}

fn c10_factorization(report: &ConvergenceReport) -> Outcome {
    let col: Vec<f64> = report
        .results
        .iter()
        .map(|r| r.eigen[0].factorization.map(|f| f.scaled).unwrap_or(f64::NAN))
        .collect();
    ensure(strictly_decreasing(&col), format!("scaled errors {col:.4?}"))
}

fn c11_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut instances = 0;
    for (name, n1, n2) in [("P_CONST", 24, 24), ("P_LOC", 16, 8), ("P_TILT", 16, 8), ("P_MATRIX", 12, 12)] {
        let pencil = cell_pencil(&builtin(name), 0.3, &grid(n1, n2)).map_err(|e| e.to_string())?;
        let sparse = principal_positive(&pencil).map_err(|e| e.to_string())?.mu;
        worst = worst.max(rel(sparse, CellRoot::new(&pencil.a, &pencil.b, &pencil.m).root()));
        instances += 1;
    }
    let coarse = ResolutionPolicy { per_period: 8, m2: 4 };
    for (name, eps, policy) in [
        ("P_LOC", 0.125, coarse),
        ("P_LOC", 0.0625, coarse),
        ("P_TILT", 0.125, coarse),
        ("P_MATRIX", 0.125, coarse),
        ("P_LOC", 0.25, ResolutionPolicy::with_per_period(12)),
    ] {
        let rod = assemble_rod(&builtin(name), eps, &policy).map_err(|e| e.to_string())?;
        if rod.dim() > 3000 {
            return Err(format!("{name} at eps {eps} has {} DOF", rod.dim()));
        }
        let t = positive_spectrum(&rod, 3, NormalizationRule::Paper, &EigOptions::default())
            .map_err(|e| e.to_string())?;
        let dense = common::positive_branch(&rod.pencil.a, &rod.pencil.b, 3);
        for (s, d) in t.values.iter().zip(&dense) {
            worst = worst.max(rel(*s, *d));
        }
        instances += 1;
    }
    ensure(worst <= 1e-8, format!("{instances} instances, max relative difference {worst:.2e}"))
}

fn c12_averaging(report: &ConvergenceReport) -> Outcome {
    let ratios: Vec<f64> = report.results.iter().map(|r| r.averaging.ratio).collect();
    let base = ratios[0];
    let ok = ratios.iter().all(|&r| r <= 10.0 * base && r >= base / 10.0);
    ensure(ok, format!("ratios {ratios:.4?}"))
}

fn main() {
    let mut results: Vec<(&str, &str, Outcome)> = vec![
        ("C1", "principal cell eigenvalue vs dense oracle", c1_principal_vs_dense()),
        ("C2", "nonnegative-average rejection", c2_nonnegative_average()),
        ("C3", "positivity of Psi", c3_positivity()),
        ("C4", "mu' formula vs finite differences", c4_mu_prime()),
        ("C5", "case-1 effective coefficient analytics", c5_case1_analytics()),
        ("C6", "weighted corrector structure", c6_weighted_structure()),
        ("C7", "oscillator cross-validation", c7_oscillator()),
    ];

    let start = Instant::now();
    let swept = sweep(&builtin("P_LOC"), &SweepConfig::default());
    let secs = start.elapsed().as_secs_f64();
    match &swept {
        Ok(report) => {
            results.push(("C8", "eigenvalue asymptotics trend", c8_asymptotics(report, secs)));
            results.push(("C9", "localization", c9_localization(report)));
            results.push(("C10", "factorization error decay", c10_factorization(report)));
        }
        Err(e) => {
            for (id, what) in [
                ("C8", "eigenvalue asymptotics trend"),
                ("C9", "localization"),
                ("C10", "factorization error decay"),
            ] {
                results.push((id, what, Err(format!("sweep failed: {e}"))));
            }
        }
    }
    results.push(("C11", "oracle equivalence", c11_oracle()));
    results.push((
        "C12",
        "averaging diagnostic boundedness",
        swept.as_ref().map_err(|e| format!("sweep failed: {e}")).and_then(c12_averaging),
    ));

    let mut failed = 0;
    for (id, what, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {id:<3} {what}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id:<3} {what}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
