#![allow(dead_code)]

use augcg::{
    make_eigenvalues, make_operator, DenseOperator, SeededRng, SpectralOracle, SpectrumSpec,
};
use nalgebra::DMatrix;

/// Cyclic Jacobi eigenvalues, sorted nonincreasing. Independent of the library's eigensolver.
pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * m.norm() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut v: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn fastdecay(
    d: usize,
    rate: Option<f64>,
    seed: u64,
) -> (DenseOperator<f64>, SpectralOracle<f64>) {
    let mut spec = SpectrumSpec::fastdecay(d);
    if let Some(r) = rate {
        spec = spec.with_rate(r);
    }
    let eigs = make_eigenvalues(&spec).unwrap();
    make_operator(&eigs, &mut SeededRng::new(seed, 0)).unwrap()
}
