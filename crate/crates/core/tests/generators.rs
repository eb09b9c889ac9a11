mod common;

use augcg::linalg::sym_eigenvalues;
use augcg::{make_eigenvalues, make_operator, SeededRng, SpectrumSpec};
use common::jacobi_eigenvalues;

#[test]
fn generated_spectrum_matches_independent_eigensolver() {
    for spec in [
        SpectrumSpec::fastdecay(40).with_rate(0.8),
        SpectrumSpec::outliers(40, 5, 100.0),
        SpectrumSpec::bottom(40, 5, 100.0),
    ] {
        let eigs = make_eigenvalues(&spec).unwrap();
        let (op, _) = make_operator::<f64>(&eigs, &mut SeededRng::new(17, 0)).unwrap();
        let jac = jacobi_eigenvalues(op.matrix());
        let lib = sym_eigenvalues(op.matrix().clone());
        for i in 0..40 {
            assert!(
                (jac[i] - eigs[i]).abs() <= 1e-12 * eigs[0],
                "{i}: {} vs {}",
                jac[i],
                eigs[i]
            );
            assert!((lib[i] - jac[i]).abs() <= 1e-12 * eigs[0]);
        }
    }
}

#[test]
fn oracle_solution_solves_system() {
    let (op, oracle) = common::fastdecay(30, Some(0.7), 3);
    let b = nalgebra::DVector::from_fn(30, |i, _| (i as f64).sin() + 0.5);
    for mu in [0.0, 1e-3, 2.0] {
        let x = oracle.solve(mu, &b);
        let r = &b - (op.matrix() * &x + &x * mu);
        assert!(r.norm() <= 1e-9 * b.norm(), "mu {mu}: {}", r.norm());
    }
}
