use augcg::operator::{read_dense, CHUNKED_HEADER_LEN};
use augcg::{
    gaussian_matrix, open_chunked, write_chunked, DenseOperator, SeededRng, SymmetricOperator,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

fn random_symmetric(d: usize, seed: u64) -> DMatrix<f64> {
    let g = gaussian_matrix::<f64>(d, d, &mut SeededRng::new(seed, 0)).unwrap();
    (&g + g.transpose()) * 0.5
}

fn check(d: usize, chunk_rows: usize, n: usize, seed: u64) {
    let a = random_symmetric(d, seed);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.bin");
    write_chunked(&a, chunk_rows, &path).unwrap();
    assert_eq!(
        std::fs::metadata(&path).unwrap().len(),
        CHUNKED_HEADER_LEN + (d * d * 8) as u64
    );
    assert_eq!(read_dense(&path).unwrap(), a);

    let chunked = open_chunked::<f64>(&path).unwrap();
    let dense = DenseOperator::new(a).unwrap();
    let x = gaussian_matrix::<f64>(d, n, &mut SeededRng::new(seed, 1)).unwrap();
    let yc = chunked.apply_block(&x).unwrap();
    let yd = dense.apply_block(&x).unwrap();
    let rel = (&yc - &yd).norm() / yd.norm();
    assert!(rel <= 1e-12, "d={d} chunk={chunk_rows} n={n}: {rel}");
    assert_eq!(chunked.counters(), dense.counters());
    assert_eq!(chunked.num_chunks(), d.div_ceil(chunk_rows));
}

#[test]
fn chunked_matches_dense_small() {
    check(50, 16, 3, 1);
    check(200, 64, 8, 2);
}

#[test]
fn chunked_matches_dense_random_layouts() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..20 {
        let d = rng.random_range(1..=120);
        let chunk_rows = rng.random_range(1..=d + 3);
        let n = rng.random_range(1..=6);
        check(d, chunk_rows, n, 100 + trial);
    }
}
