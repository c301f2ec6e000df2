mod common;

use common::rel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinspec::cell::{
    build_effective_model, c_effective, corrector_case1, corrector_weighted,
    corrector_weighted_field, mu_prime, mu_second_at_zero, mu_values, principal_cell_eig,
    rho_psi_average, AeffWeighting, EffectiveConfig, MU2_STEP,
};
use thinspec::error::Error;
use thinspec::expr::CoefficientProblem;
use thinspec::fem::{assemble_load, assemble_stiffness, CellGrid, QuadMesh};

fn builtin(name: &str) -> CoefficientProblem {
    CoefficientProblem::builtin(name).unwrap()
}

fn grid(n1: usize, n2: usize) -> CellGrid {
    CellGrid::new(n1, n2).unwrap()
}

const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Discrete layered-medium formula: harmonic mean of the 2-point Gauss
/// element averages of `f` along `y1`.
fn discrete_harmonic_mean(n1: usize, f: impl Fn(f64, usize) -> f64) -> f64 {
    let h = 1.0 / n1 as f64;
    let inv: f64 = (0..n1)
        .map(|e| {
            let avg = GAUSS.iter().map(|t| f((e as f64 + t) * h, e)).sum::<f64>() / 2.0;
            h / avg
        })
        .sum();
    1.0 / inv
}

#[test]
fn mu_is_grid_stable() {
    // P_CONST is y2-independent, so refining y2 leaves μ unchanged.
    let p = builtin("P_CONST");
    let full = principal_cell_eig(&p, 0.0, &grid(64, 64)).unwrap().mu;
    let thin = principal_cell_eig(&p, 0.0, &grid(64, 4)).unwrap().mu;
    assert!(rel(full, thin) < 1e-9, "{full} vs {thin}");

    let mu = |n: usize| principal_cell_eig(&p, 0.0, &grid(n, 4)).unwrap().mu;
    let (m64, m96, m128, m192) = (mu(64), mu(96), mu(128), mu(192));
    // A pure h² error gives (1/64² − 1/128²)/(1/128² − 1/192²) = 5.4.
    let ratio = (m64 - m128).abs() / (m128 - m192).abs();
    assert!((ratio - 5.4).abs() < 0.05 * 5.4, "ratio {ratio}");

    // Extrapolate from 64 and 96, predict 128.
    let c = (m64 - m96) / (1.0 / 4096.0 - 1.0 / 9216.0);
    let limit = m96 - c / 9216.0;
    let predicted = limit + c / 16384.0;
    assert!((m128 - m64).abs() <= 4.0 * (predicted - m64).abs());
    assert!((m128 - predicted).abs() < 1e-3 * (m128 - m64).abs());
}

#[test]
fn separable_problem_has_y2_independent_psi() {
    let g = grid(32, 8);
    let pair = principal_cell_eig(&builtin("P_CONST"), 0.0, &g).unwrap();
    for i in 0..g.n1 {
        let col: Vec<f64> = (0..=g.n2).map(|j| pair.psi[g.dof(i, j)]).collect();
        let spread = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - col.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread <= 1e-8, "column {i}: {spread}");
    }
    assert!(pair.min_psi > 0.0);
    assert!((pair.normalization - 1.0).abs() <= 1e-10);
}

#[test]
fn nonnegative_average_is_refused() {
    let p = CoefficientProblem::from_strs("pos", "1", "cos(2*pi*y1) + 0.1").unwrap();
    assert!(matches!(
        principal_cell_eig(&p, 0.0, &grid(16, 4)),
        Err(Error::NoPositivePrincipal { .. })
    ));
}

#[test]
fn mu_prime_examples() {
    let g = grid(32, 8);
    let pc = principal_cell_eig(&builtin("P_CONST"), 0.3, &g).unwrap();
    assert!(mu_prime(&builtin("P_CONST"), &pc).unwrap().abs() < 1e-8);

    let p = builtin("P_LOC");
    let at0 = principal_cell_eig(&p, 0.0, &g).unwrap();
    assert!(mu_prime(&p, &at0).unwrap().abs() < 2e-6);

    let h = 1e-3;
    let pairs = mu_values(&p, &g, &[0.5 - h, 0.5, 0.5 + h]).unwrap();
    let fd = (pairs[2].mu - pairs[0].mu) / (2.0 * h);
    let formula = mu_prime(&p, &pairs[1]).unwrap();
    assert!(rel(formula, fd) <= 1e-4, "{formula} vs {fd}");
}

#[test]
fn mu_prime_matches_finite_differences() {
    let g = grid(32, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in ["P_LOC", "P_TILT", "P_MATRIX"] {
        let p = builtin(name);
        for _ in 0..10 {
            let x: f64 = rng.gen_range(-0.9..0.9);
            let h = 1e-3;
            let pairs = mu_values(&p, &g, &[x - h, x, x + h]).unwrap();
            let fd = (pairs[2].mu - pairs[0].mu) / (2.0 * h);
            let formula = mu_prime(&p, &pairs[1]).unwrap();
            assert!(rel(formula, fd) <= 1e-3, "{name} at {x}: {formula} vs {fd}");
        }
    }
}

#[test]
fn scaling_the_weight_scales_mu() {
    let g = grid(24, 6);
    for name in ["P_LOC", "P_MATRIX"] {
        let p = builtin(name);
        let base = principal_cell_eig(&p, 0.25, &g).unwrap();
        for s in [0.5, 3.0] {
            let scaled = principal_cell_eig(&p.with_weight_scaled(s), 0.25, &g).unwrap();
            assert!(rel(scaled.mu * s, base.mu) <= 1e-9, "{name}, s = {s}");
            for (a, b) in scaled.psi.iter().zip(&base.psi) {
                assert!((a * s.sqrt() - b).abs() <= 1e-7 * b.abs().max(1.0));
            }
        }
    }
}

#[test]
fn case1_corrector_examples() {
    let identity = CoefficientProblem::from_strs("id", "1", "cos(2*pi*y1) - 0.5").unwrap();
    let (n, a) = corrector_case1(&identity, 0.0, &grid(16, 4)).unwrap();
    assert!(n.values.iter().all(|&v| v == 0.0));
    assert!((a - 1.0).abs() < 1e-14);

    let layered = CoefficientProblem::from_strs("l", "2 + cos(2*pi*y1)", "cos(2*pi*y1) - 0.5").unwrap();
    let a_of = |y: f64| 2.0 + (2.0 * std::f64::consts::PI * y).cos();
    for (n1, n2) in [(128, 8), (512, 4)] {
        let (field, a) = corrector_case1(&layered, 0.0, &grid(n1, n2)).unwrap();
        let discrete = discrete_harmonic_mean(n1, |y, _| a_of(y));
        assert!(rel(a, discrete) < 1e-10, "{n1}: {a} vs {discrete}");
        let m = thinspec::fem::assemble_mass(&grid(n1, n2), |_| Ok(1.0)).unwrap();
        let mean = m.bilinear(&vec![1.0; field.values.len()], &field.values);
        assert!(mean.abs() <= 1e-12);
    }
    let (_, a) = corrector_case1(&layered, 0.0, &grid(512, 4)).unwrap();
    assert!(rel(a, 3f64.sqrt()) <= 1e-5, "{a}");

    let transverse = CoefficientProblem::from_strs("t", "2 + cos(2*pi*y2)", "cos(2*pi*y1) - 0.5").unwrap();
    let (_, a) = corrector_case1(&transverse, 0.0, &grid(16, 64)).unwrap();
    assert!((a - 2.0).abs() <= 1e-6, "{a}");
}

#[test]
fn weighted_corrector_properties() {
    let g = grid(48, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in ["P_CONST", "P_LOC", "P_TILT", "P_MATRIX"] {
        let p = builtin(name);
        let pair = principal_cell_eig(&p, 0.0, &g).unwrap();
        let w = corrector_weighted(&p, &pair, AeffWeighting::PsiSquared).unwrap();
        let m = w.a_eff_matrix;
        assert!((m[0][1] - m[1][0]).abs() <= 1e-12, "{name}");
        assert!(w.a_eff > 0.0);
        assert!(rel(w.a_eff_defining[0][0], w.a_eff) <= 1e-10, "{name}");

        // Weak residual of each corrector against random periodic test vectors.
        let coef = |q: &thinspec::fem::QuadPoint| {
            let v = q.interpolate(&pair.psi);
            Ok(p.diffusion(0.0, q.fast[0], q.fast[1])?.scale(v * v))
        };
        let k = assemble_stiffness(&g, coef).unwrap();
        for (j, field) in [&w.n1, &w.n2].into_iter().enumerate() {
            let mut e = [0.0; 2];
            e[j] = 1.0;
            let f = assemble_load(&g, |q| Ok(coef(q)?.apply(e))).unwrap();
            let kn = k.mul_vec(&field.values);
            for _ in 0..50 {
                let v: Vec<f64> = (0..g.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let r: f64 = v.iter().zip(kn.iter().zip(&f)).map(|(v, (a, b))| v * (a + b)).sum();
                let scale: f64 = v.iter().zip(&f).map(|(v, b)| (v * b).abs()).sum();
                assert!(r.abs() <= 1e-10 * scale.max(1e-300), "{name} N{}: {r} / {scale}", j + 1);
            }
        }
    }
}

#[test]
fn weighted_corrector_examples() {
    let g = grid(64, 8);
    let p = builtin("P_CONST");
    let pair = principal_cell_eig(&p, 0.0, &g).unwrap();
    let w = corrector_weighted(&p, &pair, AeffWeighting::PsiSquared).unwrap();
    assert!(w.a_eff_matrix[1][0].abs() <= 1e-8);

    // Ψ depends on y1 only, so the weight aΨ² is layered.
    let psi_col: Vec<f64> = (0..g.n1).map(|i| pair.psi[g.dof(i, 0)]).collect();
    let n1 = g.n1;
    let expect = discrete_harmonic_mean(n1, |y, e| {
        let t = y * n1 as f64 - e as f64;
        let v = (1.0 - t) * psi_col[e] + t * psi_col[(e + 1) % n1];
        v * v
    });
    assert!(rel(w.a_eff, expect) <= 1e-9, "{} vs {expect}", w.a_eff);

    let c = 1.7;
    let w = corrector_weighted_field(&p, &g, 0.0, &vec![c; g.n_dofs()], AeffWeighting::PsiSquared).unwrap();
    assert!(w.n1.values.iter().all(|v| v.abs() <= 1e-12));
    assert!((w.a_eff - c * c).abs() <= 1e-12);
}

#[test]
fn c_eff_examples() {
    let g = grid(48, 8);
    let ceff = |p: &CoefficientProblem, h: f64| {
        let pairs = mu_values(p, &g, &[-h, 0.0, h]).unwrap();
        c_effective(p, &pairs[0], &pairs[1], &pairs[2]).unwrap()
    };
    assert!(ceff(&builtin("P_CONST"), 0.02).abs() <= 1e-6);
    let loc = (ceff(&builtin("P_LOC"), 0.02), ceff(&builtin("P_LOC"), 0.01));
    assert!((loc.0 - loc.1).abs() <= 1e-3 * loc.0.abs().max(1.0), "{loc:?}");

    // Ψ(x1, y) = Ψ0(y1 + x1/2π) for the tilted weight, which gives c_eff = μ0/π.
    let tilt = builtin("P_TILT");
    let (full, half) = (ceff(&tilt, 0.02), ceff(&tilt, 0.01));
    assert!(rel(full, half) <= 1e-3, "{full} vs {half}");
    let mu0 = principal_cell_eig(&tilt, 0.0, &g).unwrap().mu;
    assert!(rel(half, mu0 / std::f64::consts::PI) <= 1e-2, "{half} vs {}", mu0 / std::f64::consts::PI);

    // Constant Ψ kills both integrand terms.
    let flat = vec![1.0; g.n_dofs()];
    let mut pairs = mu_values(&tilt, &g, &[-0.02, 0.0, 0.02]).unwrap();
    pairs.iter_mut().for_each(|p| p.psi = flat.clone());
    assert_eq!(c_effective(&tilt, &pairs[0], &pairs[1], &pairs[2]).unwrap(), 0.0);
}

#[test]
fn rho_psi_average_hooks() {
    let g = grid(32, 8);
    let p = builtin("P_LOC");
    let pair = principal_cell_eig(&p, 0.0, &g).unwrap();
    assert!((rho_psi_average(&p, &g, 0.0, &pair.psi).unwrap() - 1.0).abs() <= 1e-10);
    let doubled: Vec<f64> = pair.psi.iter().map(|v| 2.0 * v).collect();
    assert!((rho_psi_average(&p, &g, 0.0, &doubled).unwrap() - 4.0).abs() <= 1e-9);
    let zero = CoefficientProblem::from_strs("z", "1", "0").unwrap();
    assert_eq!(rho_psi_average(&zero, &g, 0.0, &pair.psi).unwrap(), 0.0);
}

#[test]
fn effective_model_end_to_end() {
    let cfg = EffectiveConfig {
        grid: grid(32, 8),
        ..EffectiveConfig::default()
    };
    let m = build_effective_model(&builtin("P_LOC"), &cfg).unwrap();
    for v in [m.mu0, m.mu2, m.a_eff, m.c_eff, m.rho_psi_avg] {
        assert!(v.is_finite());
    }
    assert!(m.mu2 > 0.0 && m.a_eff > 0.0 && m.rho_psi_avg != 0.0);

    for name in ["P_CONST", "P_LOC_SHIFTED"] {
        let e = build_effective_model(&builtin(name), &cfg).unwrap_err();
        assert!(matches!(e.root(), Error::H6Violated { .. }), "{name}: {e}");
        assert!(e.is_hypothesis_failure());
    }
    let shifted = mu_second_at_zero(&builtin("P_LOC_SHIFTED"), &cfg.grid, MU2_STEP).unwrap_err();
    match shifted {
        Error::H6Violated { scan, .. } => assert_eq!(scan.len(), 9),
        other => panic!("{other}"),
    }

    let pos = CoefficientProblem::from_strs("pos", "1", "cos(2*pi*y1) + 0.5").unwrap();
    let e = build_effective_model(&pos, &cfg).unwrap_err();
    assert!(matches!(e.root(), Error::NoPositivePrincipal { .. }), "{e}");
}
