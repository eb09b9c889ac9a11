use augcg::{
    block_lanczos, evaluate_bcg_block, gaussian_matrix, make_eigenvalues, make_operator,
    ReorthPolicy, SeededRng, Shifted, SpectrumSpec,
};
use augcg_harness::methods::parse_method_list;
use augcg_harness::output::{read_rows, write_rows};
use augcg_harness::presets::preset;
use augcg_harness::{
    run_comparison, run_diagnostics, run_regpath, run_sampling, ExperimentConfig, HarnessError, Row,
};
use nalgebra::DMatrix;

fn config(spectrum: SpectrumSpec, methods: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        id: "test".into(),
        methods: parse_method_list(methods).unwrap(),
        ..ExperimentConfig::default()
    };
    cfg.problem.spectrum = spectrum;
    cfg
}

fn rows_of<'a>(rows: &'a [Row], method: &str) -> Vec<&'a Row> {
    rows.iter().filter(|r| r.method == method).collect()
}

#[test]
fn cg_on_identity_converges_in_one_step() {
    let mut cfg = config(SpectrumSpec::explicit(vec![1.0; 12]), "cg");
    cfg.t_max = 3;
    let out = run_comparison(&cfg).unwrap();
    assert_eq!(out.failures, 0);
    let cg = rows_of(&out.rows, "cg");
    assert_eq!(cg.len(), 4);
    assert_eq!(cg[0].rel_err_anorm, Some(1.0));
    assert!(cg[1].rel_err_anorm.unwrap() <= 1e-12);
    assert_eq!(cg[1].matrix_loads, Some(1));
}

#[test]
fn comparison_rows_and_accounting() {
    let mut cfg = config(
        SpectrumSpec::fastdecay(60),
        "bcg, nystrom:s=2, deflation:r=4",
    );
    cfg.sketch = 4;
    cfg.t_max = 15;
    cfg.mu = vec![0.0, 1e-3];
    let out = run_comparison(&cfg).unwrap();
    assert_eq!(out.failures, 0);
    // one row per (method, mu, t)
    assert_eq!(out.rows.len(), 3 * 2 * 16);
    // block-CG: one load per iteration until the space is exhausted (60 / 5 = 12)
    for r in rows_of(&out.rows, "bcg") {
        let t = r.t.unwrap() as u64;
        assert_eq!(r.matrix_loads, Some(t.min(12)));
        assert_eq!(r.matvecs, Some(5 * t.min(12)));
        assert_eq!(r.l, Some(4));
    }
    // Nystrom-PCG: build loads are included
    for r in rows_of(&out.rows, "nystrom:s=2;theta=auto") {
        assert_eq!(r.matrix_loads, Some(2 + r.t.unwrap() as u64));
        assert_eq!(r.s, Some(2));
    }
    for r in rows_of(&out.rows, "deflation:r=4;theta=lambda_d") {
        assert_eq!(r.matrix_loads, Some(r.t.unwrap() as u64));
    }
    assert!(out.rows.iter().all(|r| r.residual_norm.is_some()));
}

#[test]
fn comparison_is_deterministic() {
    let mut cfg = config(SpectrumSpec::fastdecay(50), "bcg, cg, nystrom:s=1");
    cfg.sketch = 3;
    cfg.t_max = 10;
    let csv = |cfg: &ExperimentConfig| {
        let mut buf = Vec::new();
        write_rows(&mut buf, &run_comparison(cfg).unwrap().rows).unwrap();
        buf
    };
    let first = csv(&cfg);
    assert_eq!(first, csv(&cfg));
    assert_eq!(read_rows(first.as_slice()).unwrap().len(), 3 * 11);
    cfg.problem.seed = 1;
    assert_ne!(first, csv(&cfg));
}

#[test]
fn block_cg_dominates_nystrom_pcg() {
    let mut cfg = config(SpectrumSpec::fastdecay(80), "bcg, nystrom:s=1, nystrom:s=3");
    cfg.sketch = 4;
    cfg.t_max = 30;
    let rows = run_comparison(&cfg).unwrap().rows;
    let bcg = rows_of(&rows, "bcg");
    for s in [1usize, 3] {
        let pcg = rows_of(&rows, &format!("nystrom:s={s};theta=auto"));
        for t in s..=cfg.t_max {
            let b = bcg[t].rel_err_anorm.unwrap();
            let p = pcg[t - s].rel_err_anorm.unwrap();
            assert!(
                b <= p * (1.0 + 1e-6) || b <= 1e-12,
                "s={s} t={t}: {b} > {p}"
            );
        }
    }
}

#[test]
fn failing_method_records_an_error_row() {
    // depth 30 with a width-4 sketch needs 120 > 60 columns
    let mut cfg = config(SpectrumSpec::fastdecay(60), "nystrom:s=30, cg");
    cfg.sketch = 4;
    cfg.t_max = 5;
    let out = run_comparison(&cfg).unwrap();
    assert_eq!(out.failures, 1);
    assert!(out.rows[0].is_error());
    assert_eq!(out.rows[0].method, "nystrom:s=30;theta=auto[error]");
    assert_eq!(rows_of(&out.rows, "cg").len(), 6);
}

#[test]
fn relative_shifts_need_an_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.bin");
    let eigs = make_eigenvalues(&SpectrumSpec::fastdecay(20)).unwrap();
    let (op, _) = make_operator::<f64>(&eigs, &mut SeededRng::new(0, 0)).unwrap();
    augcg::write_chunked(op.matrix(), 7, &path).unwrap();
    let mut cfg = config(SpectrumSpec::fastdecay(20), "bcg, cg");
    cfg.problem.matrix = Some(path);
    cfg.sketch = 2;
    cfg.t_max = 4;
    // without the oracle there is no error column, but loads are still counted
    let out = run_comparison(&cfg).unwrap();
    assert!(out.rows.iter().all(|r| r.rel_err_anorm.is_none()));
    assert_eq!(out.rows.last().unwrap().matrix_loads, Some(4));
    cfg.mu_relative = true;
    assert!(matches!(run_comparison(&cfg), Err(HarnessError::Config(_))));
}

#[test]
fn regpath_loads_and_shift_consistency() {
    let mut cfg = config(SpectrumSpec::fastdecay(200), "bcg, nystrom:s=1");
    cfg.sketch = 3;
    cfg.t_max = 40;
    cfg.mu = augcg_harness::config::parse_mu_grid("log:1e-6:1:20").unwrap();
    cfg.mu.push(0.1);
    let out = run_regpath(&cfg).unwrap();
    assert_eq!(out.failures, 0);
    let bcg = rows_of(&out.rows, "bcg");
    assert_eq!(bcg.len(), 21);
    assert!(bcg
        .iter()
        .all(|r| r.matrix_loads == Some(40) && r.t == Some(40)));
    let pcg = rows_of(&out.rows, "nystrom:s=1;theta=auto");
    let mut previous = 1;
    for r in &pcg {
        let loads = r.matrix_loads.unwrap();
        assert_eq!(loads - previous, r.t.unwrap() as u64);
        previous = loads;
    }
    assert_eq!(pcg[19].matrix_loads, Some(1 + 20 * 40));

    // a dedicated run on A + 0.1 I with the same start block
    let eigs = make_eigenvalues(&cfg.problem.spectrum).unwrap();
    let (op, oracle) = make_operator::<f64>(&eigs, &mut SeededRng::new(0, 0)).unwrap();
    let b = gaussian_matrix::<f64>(200, 1, &mut SeededRng::new(0, 1)).unwrap();
    let omega = gaussian_matrix::<f64>(200, 3, &mut SeededRng::new(0, 2)).unwrap();
    let mut start = DMatrix::zeros(200, 4);
    start.set_column(0, &b.column(0));
    start.columns_mut(1, 3).copy_from(&omega);
    let shifted = Shifted::new(&op, 0.1);
    let dec = block_lanczos(&shifted, &start, 40, ReorthPolicy::Full).unwrap();
    let x = evaluate_bcg_block(&dec, 0.0)
        .unwrap()
        .solutions
        .column(0)
        .into_owned();
    let dedicated = oracle.a_norm_error(&x, 0.1, &b.column(0).into_owned());
    let from_path = bcg[20].rel_err_anorm.unwrap();
    assert_eq!(bcg[20].mu, Some(0.1));
    assert!(
        (from_path - dedicated).abs() <= 1e-8,
        "{from_path} vs {dedicated}"
    );
}

#[test]
fn regpath_single_shift_matches_comparison() {
    let mut cfg = config(SpectrumSpec::fastdecay(60), "bcg, nystrom:s=2");
    cfg.sketch = 3;
    cfg.t_max = 10;
    let path = run_regpath(&cfg).unwrap().rows;
    let trace = run_comparison(&cfg).unwrap().rows;
    for r in &path {
        let last = trace.iter().rfind(|x| x.method == r.method).unwrap();
        assert_eq!(r.matrix_loads, last.matrix_loads);
        assert_eq!(r.rel_err_anorm, last.rel_err_anorm);
    }
}

#[test]
fn sampling_on_identity_is_exact() {
    let mut cfg = config(SpectrumSpec::explicit(vec![1.0; 20]), "bcg");
    cfg.samples = 2;
    cfg.t_max = 2;
    let out = run_sampling(&cfg).unwrap();
    for method in ["sqrt-block:m=2", "sqrt-single:m=2"] {
        let rows = rows_of(&out.rows, method);
        assert!(rows[0].rel_err_anorm.unwrap() <= 1e-12, "{method}");
        assert_eq!(rows[0].matrix_loads, Some(2));
    }
    let check = rows_of(&out.rows, "isqrt-consistency");
    assert!(check[0].rel_err_anorm.unwrap() <= 1e-10);
}

#[test]
fn sampling_block_beats_single_vector() {
    let cfg = preset("sampling").unwrap();
    let out = run_sampling(&cfg).unwrap();
    assert_eq!(out.failures, 0);
    let block = rows_of(&out.rows, "sqrt-block:m=10");
    let single = rows_of(&out.rows, "sqrt-single:m=10");
    assert_eq!(block.len(), 30);
    let mut compared = 0;
    for b in &block {
        if let Some(s) = single.iter().find(|s| s.matrix_loads == b.matrix_loads) {
            assert!(b.rel_err_anorm.unwrap() <= s.rel_err_anorm.unwrap());
            compared += 1;
        }
    }
    assert!(compared >= 20);
    assert!(
        rows_of(&out.rows, "isqrt-consistency")[0]
            .rel_err_anorm
            .unwrap()
            <= 1e-10
    );
}

#[test]
fn sampling_needs_two_samples() {
    let mut cfg = config(SpectrumSpec::fastdecay(20), "bcg");
    cfg.samples = 1;
    assert!(matches!(run_sampling(&cfg), Err(HarnessError::Config(_))));
}

#[test]
fn diagnostics_reference_rows() {
    let mut cfg = preset("diagnostics").unwrap();
    cfg.problem.spectrum = SpectrumSpec::fastdecay(120).with_rate(0.9);
    cfg.seeds = 2;
    cfg.pairs = vec![(12, 5)];
    let out = run_diagnostics(&cfg).unwrap();
    assert_eq!(out.failures, 0);
    let eigs = make_eigenvalues(&cfg.problem.spectrum).unwrap();
    let lmin = eigs[119];
    for r in out.rows.iter().filter(|r| r.method == "identity") {
        let mu = r.mu.unwrap();
        let exact = (eigs[0] + mu) / (lmin + mu);
        assert!((r.kappa_actual.unwrap() - exact).abs() <= 1e-6 * exact);
    }
    let deflated: Vec<_> = out
        .rows
        .iter()
        .filter(|r| r.method == "deflation:r=10;theta=lambda_d")
        .collect();
    assert_eq!(deflated.len(), 2 * 6);
    for r in deflated {
        let mu = r.mu.unwrap();
        let exact = (eigs[10] + mu) / (lmin + mu);
        assert!((r.kappa_actual.unwrap() - exact).abs() <= 1e-6 * exact);
    }
    // the Nystrom rows respect the deterministic bound
    let label = "nystrom:s=5;l=12;theta=lambda_d";
    let actual = rows_of(&out.rows, label);
    let bound = rows_of(&out.rows, &format!("{label}/bound"));
    assert_eq!(actual.len(), 12);
    for (a, b) in actual.iter().zip(&bound) {
        assert_eq!(a.mu, b.mu);
        assert!(a.kappa_actual.unwrap() <= b.kappa_actual.unwrap() * (1.0 + 1e-8));
        assert_eq!(a.matrix_loads, Some(5));
    }
    let fraction = rows_of(&out.rows, &format!("{label}/fraction"));
    assert_eq!(fraction.len(), 1);
    assert_eq!(fraction[0].kappa_actual, Some(1.0));
    let d_eff = rows_of(&out.rows, "d_eff");
    assert!((d_eff[0].kappa_actual.unwrap() - 120.0).abs() < 1e-9);
}
