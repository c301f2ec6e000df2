mod common;

use common::{rel, CellRoot};
use thinspec::cell::cell_pencil;
use thinspec::eigen::{
    alpha1, positive_pencil_spectrum, principal_positive, smallest_eigs, Cholesky, EigOptions,
    PencilSpec,
};
use thinspec::error::Error;
use thinspec::expr::{CoefficientProblem, Sym2};
use thinspec::fem::{assemble_mass, assemble_stiffness, CellGrid, SparseSym};

fn problems() -> Vec<CoefficientProblem> {
    let mut v: Vec<_> = CoefficientProblem::builtin_names()
        .iter()
        .map(|n| CoefficientProblem::builtin(n).unwrap())
        .collect();
    v.push(CoefficientProblem::from_strs("layered", "2 + cos(2*pi*y1)", "sin(2*pi*y1) - 0.3").unwrap());
    v
}

fn tridiag(n: usize) -> SparseSym {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
        }
    }
    SparseSym::from_upper_triplets(n, t).unwrap()
}

#[test]
fn cholesky_examples() {
    let one = SparseSym::from_upper_triplets(1, vec![(0, 0, 4.0)]).unwrap();
    assert_eq!(Cholesky::factor(&one).unwrap().solve(&[8.0]), vec![2.0]);

    let t = tridiag(5);
    let x = Cholesky::factor(&t).unwrap().solve(&[1.0, 0.0, 0.0, 0.0, 0.0]);
    let want = t.to_dense().lu().solve(&nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
    for i in 0..5 {
        assert!((x[i] - want[i]).abs() <= 1e-12);
    }

    let singular = SparseSym::from_upper_triplets(2, vec![(0, 0, 1.0)]).unwrap();
    assert!(matches!(Cholesky::factor(&singular), Err(Error::NotSpd { .. })));
}

#[test]
fn smallest_eigs_examples() {
    let diag = SparseSym::diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
    let r = smallest_eigs(&diag, &SparseSym::identity(5), 3, &EigOptions::default()).unwrap();
    for (got, want) in r.values.iter().zip([1.0, 2.0, 3.0]) {
        assert!((got - want).abs() < 1e-10);
    }

    let g = CellGrid::new(6, 6).unwrap();
    let m = assemble_mass(&g, |_| Ok(1.0)).unwrap();
    let r = smallest_eigs(&m, &m, 4, &EigOptions::default()).unwrap();
    assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-10));

    let g = CellGrid::new(32, 32).unwrap();
    let a = assemble_stiffness(&g, |_| Ok(Sym2::IDENTITY)).unwrap();
    let m = assemble_mass(&g, |_| Ok(1.0)).unwrap();
    let r = smallest_eigs(&a, &m, 3, &EigOptions::default()).unwrap();
    assert!(r.values[0].abs() < 1e-10);
    // The first nonzero mode is cos(π y2); periodic modes start at (2π)².
    let pi2 = std::f64::consts::PI.powi(2);
    assert!(rel(r.values[1], pi2) < 5e-3, "{}", r.values[1]);
    assert!(r.residuals.iter().all(|&x| x <= 1e-10 * r.values[2].max(1.0)));
    for i in 0..3 {
        for j in 0..3 {
            let g = m.bilinear(&r.vectors[i], &r.vectors[j]);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g - want).abs() < 1e-10);
        }
    }
}

#[test]
fn alpha1_examples() {
    let g = CellGrid::new(16, 8).unwrap();
    let p_const = cell_pencil(&CoefficientProblem::builtin("P_CONST").unwrap(), 0.0, &g).unwrap();
    let at0 = alpha1(&p_const, 0.0).unwrap();
    assert!(at0.value.abs() < 1e-10);
    let spread = at0.vector.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(spread.1 - spread.0 < 1e-8);
    let oracle = CellRoot::new(&p_const.a, &p_const.b, &p_const.m);
    let small = alpha1(&p_const, 0.1).unwrap();
    assert!(small.value > 0.0);
    assert!((small.value - oracle.alpha1(0.1)).abs() < 1e-10);

    let neg = CoefficientProblem::from_strs("neg", "1", "-1").unwrap();
    let pencil = cell_pencil(&neg, 0.0, &g).unwrap();
    let v = alpha1(&pencil, 1.0).unwrap().value;
    assert!((v - 1.0).abs() < 1e-10, "{v}");
    assert!(matches!(
        principal_positive(&pencil),
        Err(Error::Unbracketable { .. } | Error::NoPositivePrincipal { .. })
    ));

    assert!(matches!(alpha1(&p_const, -1.0), Err(Error::Precondition(_))));
}

#[test]
fn alpha1_vanishes_at_zero_and_has_the_mean_slope() {
    let g = CellGrid::new(16, 8).unwrap();
    for p in problems() {
        for x1 in [-0.5, 0.0, 0.7] {
            let pencil = cell_pencil(&p, x1, &g).unwrap();
            let a0 = alpha1(&pencil, 0.0).unwrap().value;
            assert!(a0.abs() < 1e-10, "{} at {x1}: {a0}", p.name);
            let h = 1e-4;
            let ah = alpha1(&pencil, h).unwrap().value;
            let ones = vec![1.0; pencil.dim()];
            let want = -pencil.b.quad_form(&ones) / pencil.m.quad_form(&ones);
            let slope = (ah - a0) / h;
            assert!(rel(slope, want) <= 1e-3, "{}: {slope} vs {want}", p.name);
        }
    }
}

#[test]
fn alpha1_lies_above_its_chords() {
    let g = CellGrid::new(16, 8).unwrap();
    for p in problems() {
        let pencil = cell_pencil(&p, 0.3, &g).unwrap();
        let mu1 = principal_positive(&pencil).unwrap().mu;
        let mus = [0.0, 0.5 * mu1, mu1, 1.5 * mu1];
        let vals: Vec<f64> = mus.iter().map(|&m| alpha1(&pencil, m).unwrap().value).collect();
        for i in 0..4 {
            for j in i + 2..4 {
                for k in i + 1..j {
                    let t = (mus[k] - mus[i]) / (mus[j] - mus[i]);
                    let chord = (1.0 - t) * vals[i] + t * vals[j];
                    assert!(vals[k] >= chord - 1e-8, "{}: {vals:?}", p.name);
                }
            }
        }
    }
}

#[test]
fn principal_pair_properties() {
    let g = CellGrid::new(24, 12).unwrap();
    for p in problems() {
        let pencil = cell_pencil(&p, 0.2, &g).unwrap();
        let r = principal_positive(&pencil).unwrap();
        assert!(r.mu > 0.0);
        assert!(r.alpha.abs() <= 1e-10 * (1.0 + r.mu), "{}", p.name);
        assert!(r.psi.iter().all(|&x| x > 0.0), "{}", p.name);
        assert!((pencil.b.quad_form(&r.psi) - 1.0).abs() < 1e-12);
        let energy = pencil.a.quad_form(&r.psi);
        let weighted = pencil.b.quad_form(&r.psi);
        assert!((energy - r.mu * weighted).abs() <= 1e-8 * energy, "{}", p.name);
    }
}

#[test]
fn principal_matches_dense_bisection() {
    for (name, grid) in [("P_CONST", (24, 24)), ("P_LOC", (16, 8)), ("P_MATRIX", (12, 12))] {
        let g = CellGrid::new(grid.0, grid.1).unwrap();
        let pencil = cell_pencil(&CoefficientProblem::builtin(name).unwrap(), 0.4, &g).unwrap();
        let sparse = principal_positive(&pencil).unwrap().mu;
        let dense = CellRoot::new(&pencil.a, &pencil.b, &pencil.m).root();
        assert!(rel(sparse, dense) <= 1e-8, "{name}: {sparse} vs {dense}");
    }
}

#[test]
fn principal_refusals() {
    let g = CellGrid::new(12, 4).unwrap();
    let pos = CoefficientProblem::from_strs("pos", "1", "cos(2*pi*y1) + 0.5").unwrap();
    let pencil = cell_pencil(&pos, 0.0, &g).unwrap();
    assert!(matches!(principal_positive(&pencil), Err(Error::NoPositivePrincipal { .. })));
}

#[test]
fn positive_spectrum_examples() {
    let opts = EigOptions::default();
    let p = PencilSpec::new(SparseSym::identity(2), SparseSym::diagonal(&[2.0, 1.0]), SparseSym::identity(2)).unwrap();
    let r = positive_pencil_spectrum(&p, 2, &opts).unwrap();
    assert!((r.values[0] - 0.5).abs() < 1e-12 && (r.values[1] - 1.0).abs() < 1e-12);

    let p = PencilSpec::new(SparseSym::identity(2), SparseSym::diagonal(&[1.0, -1.0]), SparseSym::identity(2)).unwrap();
    let r = positive_pencil_spectrum(&p, 1, &opts).unwrap();
    assert!((r.values[0] - 1.0).abs() < 1e-12);
    assert!(matches!(
        positive_pencil_spectrum(&p, 2, &opts),
        Err(Error::PartialSpectrum { found: 1, requested: 2 })
    ));
}

#[test]
fn positive_spectrum_matches_dense() {
    let n = 60;
    let a = tridiag(n).scaled((n * n) as f64);
    let w: Vec<f64> = (0..n).map(|i| (0.7 * i as f64).cos() - 0.2).collect();
    let b = SparseSym::diagonal(&w);
    let p = PencilSpec::new(a.clone(), b.clone(), SparseSym::identity(n)).unwrap();
    let r = positive_pencil_spectrum(&p, 4, &EigOptions::default()).unwrap();
    let d = common::positive_branch(&a, &b, 4);
    for (x, y) in r.values.iter().zip(&d) {
        assert!(rel(*x, *y) <= 1e-8, "{x} vs {y}");
    }
}
