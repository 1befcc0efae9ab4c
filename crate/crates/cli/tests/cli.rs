use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use curvkit::export::CurvatureMetadata;
use curvkit::tensor::{flatten_permutation, load_matrix_csv};
use curvkit::Matrix;

fn nets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("nets")
}

fn run(args: &[&str], out: &Path) -> Output {
    run_with_env(args, out, &[])
}

fn run_with_env(args: &[&str], out: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_curvkit"));
    cmd.args(args).arg("--out").arg(out);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn net(name: &str) -> String {
    nets().join(name).to_string_lossy().into_owned()
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn curvature_shape_matches_parameter_count() {
    let dir = tempfile::tempdir().unwrap();
    let tanh = net("mlp-5-4-4-3-tanh.json");
    let o = run(
        &[
            "curvature",
            "--net",
            &tanh,
            "--data",
            "synthetic:seed=0,n=100",
            "--loss",
            "mse",
            "--kind",
            "ggn",
            "--flatten",
            "cvec",
            "--heatmap",
        ],
        dir.path(),
    );
    assert_ok(&o);
    let m = load_matrix_csv(dir.path().join("ggn_cvec.csv")).unwrap();
    assert_eq!(m.shape(), (59, 59));
    let meta: CurvatureMetadata =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ggn_cvec.json")).unwrap())
            .unwrap();
    assert_eq!(meta.dim, 59);
    assert_eq!(meta.blocks.len(), 3);
    let pgm = fs::read(dir.path().join("ggn_cvec.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n59 59\n255\n"));
}

#[test]
fn fd_hessian_with_relu_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let relu = net("mlp-5-4-4-3-relu.json");
    let o = run(
        &[
            "curvature",
            "--net",
            &relu,
            "--data",
            "synthetic:n=5",
            "--kind",
            "hessian-fd",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ReLU"));
}

#[test]
fn fd_hessian_with_tanh_is_written_with_a_note() {
    let dir = tempfile::tempdir().unwrap();
    let tanh = net("mlp-5-4-4-3-tanh.json");
    let o = run(
        &[
            "curvature",
            "--net",
            &tanh,
            "--data",
            "synthetic:n=5",
            "--kind",
            "hessian-fd",
            "--layer",
            "2",
        ],
        dir.path(),
    );
    assert_ok(&o);
    let m = load_matrix_csv(dir.path().join("hessian-fd_cvec_layer2.csv")).unwrap();
    assert_eq!(m.shape(), (20, 20));
    let meta: CurvatureMetadata = serde_json::from_str(
        &fs::read_to_string(dir.path().join("hessian-fd_cvec_layer2.json")).unwrap(),
    )
    .unwrap();
    assert!(meta.notes.iter().any(|n| n.contains("tanh")));
}

#[test]
fn rvec_output_is_permuted_cvec_output() {
    let dir = tempfile::tempdir().unwrap();
    let relu = net("mlp-5-4-4-3-relu.json");
    for order in ["cvec", "rvec"] {
        let o = run(
            &[
                "curvature",
                "--net",
                &relu,
                "--data",
                "synthetic:seed=2,n=30",
                "--loss",
                "ce",
                "--kind",
                "fisher-mc",
                "--mc-samples",
                "3",
                "--flatten",
                order,
            ],
            dir.path(),
        );
        assert_ok(&o);
    }
    let c = load_matrix_csv(dir.path().join("fisher-mc_cvec.csv")).unwrap();
    let r = load_matrix_csv(dir.path().join("fisher-mc_rvec.csv")).unwrap();
    let meta: CurvatureMetadata =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fisher-mc_cvec.json")).unwrap())
            .unwrap();
    let mut p = Vec::new();
    for b in &meta.blocks {
        p.extend(
            flatten_permutation(&[b.rows, b.cols])
                .into_iter()
                .map(|i| b.offset + i),
        );
    }
    assert_eq!(r, c.permute_symmetric(&p).unwrap());
}

fn summary(dir: &Path) -> Matrix {
    load_matrix_csv(dir.join("summary.csv")).unwrap()
}

#[test]
fn kfac_batch_size_one_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let relu = net("mlp-5-4-4-3-relu.json");
    for kind in ["ggn", "fisher-emp"] {
        let o = run(
            &[
                "kfac",
                "--net",
                &relu,
                "--data",
                "synthetic:seed=1,n=1",
                "--kind",
                kind,
            ],
            dir.path(),
        );
        assert_ok(&o);
        let s = summary(dir.path());
        assert_eq!(s.col(0), vec![0.0, 2.0, 4.0]);
        assert!(s.col(2).iter().all(|&r| r <= 1e-10), "{kind}: {s:?}");
    }
    let a = load_matrix_csv(dir.path().join("layer0_A.csv")).unwrap();
    let b = load_matrix_csv(dir.path().join("layer0_B.csv")).unwrap();
    assert_eq!((a.shape(), b.shape()), ((6, 6), (4, 4)));
}

#[test]
fn kfac_deep_linear_regression() {
    let dir = tempfile::tempdir().unwrap();
    let lin = net("deep-linear-4-3-3-2.json");
    let o = run(
        &[
            "kfac",
            "--net",
            &lin,
            "--data",
            "synthetic:seed=0,n=64",
            "--kind",
            "ggn",
            "--flatten",
            "rvec",
        ],
        dir.path(),
    );
    assert_ok(&o);
    assert!(summary(dir.path()).col(2).iter().all(|&r| r <= 1e-10));
    let o = run(
        &[
            "kfac",
            "--net",
            &lin,
            "--data",
            "synthetic:seed=0,n=64",
            "--kind",
            "fisher-emp",
        ],
        dir.path(),
    );
    assert_ok(&o);
    assert!(summary(dir.path()).col(2).iter().all(|&r| r > 1e-3));
}

#[test]
fn kfac_nonlinear_residuals_are_positive() {
    let dir = tempfile::tempdir().unwrap();
    let relu = net("mlp-5-4-4-3-relu.json");
    let o = run(
        &[
            "kfac",
            "--net",
            &relu,
            "--data",
            "synthetic:seed=0,n=100",
            "--loss",
            "ce",
            "--heatmap",
        ],
        dir.path(),
    );
    assert_ok(&o);
    assert!(summary(dir.path()).col(2).iter().all(|&r| r > 0.0));
    assert!(dir.path().join("layer4_kfac.pgm").exists());
    assert!(dir.path().join("layer4_exact.pgm").exists());
}

#[test]
fn kfac_rejects_fd_hessian() {
    let dir = tempfile::tempdir().unwrap();
    let tanh = net("mlp-5-4-4-3-tanh.json");
    let o = run(
        &[
            "kfac",
            "--net",
            &tanh,
            "--data",
            "synthetic:n=3",
            "--kind",
            "hessian-fd",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mc_sweep_is_deterministic_and_converges() {
    let relu = net("mlp-5-4-4-3-relu.json");
    let args = [
        "mc-sweep",
        "--net",
        relu.as_str(),
        "--data",
        "synthetic:seed=0,n=100",
        "--m-grid",
        "10,100,1000",
        "--seeds",
        "0,1,2,3,4",
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_ok(&run(&args, a.path()));
    assert_ok(&run_with_env(
        &args,
        b.path(),
        &[("RAYON_NUM_THREADS", "1")],
    ));
    let text_a = fs::read(a.path().join("mc_sweep.csv")).unwrap();
    assert_eq!(text_a, fs::read(b.path().join("mc_sweep.csv")).unwrap());

    let rows = load_matrix_csv(a.path().join("mc_sweep.csv")).unwrap();
    assert_eq!(rows.shape(), (15, 4));
    let median = |m: f64| {
        let mut v: Vec<f64> = (0..15)
            .filter(|&i| rows[(i, 0)] == m)
            .map(|i| rows[(i, 2)])
            .collect();
        v.sort_by(f64::total_cmp);
        v[2]
    };
    let (m10, m100, m1000) = (median(10.0), median(100.0), median(1000.0));
    assert!(m10 > m100 && m100 > m1000);
    assert!(m1000 < 0.5 * m10);
}

#[test]
fn repeated_sample_count_gives_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let lin = net("deep-linear-4-3-3-2.json");
    for _ in 0..2 {
        let o = run(
            &[
                "mc-sweep",
                "--net",
                &lin,
                "--data",
                "synthetic:n=20",
                "--m-grid",
                "50",
                "--seeds",
                "7,7",
            ],
            dir.path(),
        );
        assert_ok(&o);
    }
    let rows = load_matrix_csv(dir.path().join("mc_sweep.csv")).unwrap();
    assert_eq!(rows.row(0), rows.row(1));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let relu = net("mlp-5-4-4-3-relu.json");
    let args = [
        "curvature",
        "--net",
        relu.as_str(),
        "--data",
        "synthetic:seed=3,n=50",
        "--loss",
        "ce",
        "--kind",
        "fisher-mc",
        "--mc-samples",
        "4",
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_ok(&run_with_env(
        &args,
        a.path(),
        &[("RAYON_NUM_THREADS", "1")],
    ));
    assert_ok(&run_with_env(
        &args,
        b.path(),
        &[("RAYON_NUM_THREADS", "4")],
    ));
    for file in ["fisher-mc_cvec.csv", "fisher-mc_cvec.json"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap()
        );
    }
}

#[test]
fn csv_data_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    fs::write(&data, "0.1,0.2,0.3,0.4,0.5,2\n-1,0,1,0,-1,0\n").unwrap();
    let relu = net("mlp-5-4-4-3-relu.json");
    let o = run(
        &[
            "curvature",
            "--net",
            &relu,
            "--data",
            data.to_str().unwrap(),
            "--loss",
            "ce",
            "--reduction",
            "sum",
            "--layer",
            "4",
        ],
        dir.path(),
    );
    assert_ok(&o);
    assert_eq!(
        load_matrix_csv(dir.path().join("ggn_cvec_layer4.csv"))
            .unwrap()
            .shape(),
        (15, 15)
    );
}

#[test]
fn bad_inputs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let relu = net("mlp-5-4-4-3-relu.json");
    let cases: [&[&str]; 5] = [
        &[
            "curvature",
            "--net",
            "/nonexistent/net.json",
            "--data",
            "synthetic:n=3",
        ],
        &["curvature", "--net", &relu, "--data", "synthetic:seed=1"],
        &[
            "curvature",
            "--net",
            &relu,
            "--data",
            "synthetic:n=3",
            "--kind",
            "fisher-mc",
            "--mc-samples",
            "0",
        ],
        &[
            "curvature",
            "--net",
            &relu,
            "--data",
            "synthetic:n=3",
            "--layer",
            "1",
        ],
        &[
            "mc-sweep",
            "--net",
            &relu,
            "--data",
            "synthetic:n=3",
            "--m-grid",
            "100,10",
        ],
    ];
    for args in cases {
        let o = run(args, dir.path());
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}
