use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use time2cluster::synthgen::{generate, SegmentSpec};
use time2cluster::{KMeansConfig, RngSeed, Time2Cluster, TimeSeries};
use time2cluster_cli::{ingest_csv, project_2d, project_rows, ColumnSelector};

fn t2c(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_t2c"))
        .args(args)
        .output()
        .expect("t2c runs")
}

fn ok(args: &[&str]) -> Output {
    let out = t2c(args);
    assert!(
        out.status.success(),
        "t2c {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_series(path: &Path, values: &[f64], labels: &[usize]) {
    let mut text = String::from("index,value,label\n");
    for (i, (v, l)) in values.iter().zip(labels).enumerate() {
        text.push_str(&format!("{i},{v},{l}\n"));
    }
    fs::write(path, text).unwrap();
}

fn small_two_regime(path: &Path) {
    let (ts, truth) = generate(
        &[
            SegmentSpec::sinusoid(500, 30.0, 1.0).with_jitter(0.2),
            SegmentSpec::sinusoid(500, 12.0, 1.0)
                .with_jitter(0.2)
                .with_label(1),
        ],
        RngSeed(3),
    )
    .unwrap();
    write_series(path, ts.values(), &truth.labels);
}

/// Top two eigenpairs of the population covariance from a dense solver.
fn dense_pca(data: &[f64], rows: usize, dim: usize) -> Vec<(f64, Vec<f64>)> {
    let x = DMatrix::from_row_slice(rows, dim, data);
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let cov = centered.transpose() * &centered / rows as f64;
    let eig = SymmetricEigen::new(cov);
    let mut pairs: Vec<(f64, Vec<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, eig.eigenvectors.column(i).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.truncate(2);
    pairs
}

#[test]
fn projection_matches_dense_eigensolver() {
    let mut rng = RngSeed(40).rng();
    for _ in 0..20 {
        let data: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let proj = project_rows(&data, 10).unwrap();
        for (k, (lambda, vec)) in dense_pca(&data, 10, 10).into_iter().enumerate() {
            assert!((proj.variances[k] - lambda).abs() <= 1e-6 * lambda.max(1.0));
            let sign = if vec
                .iter()
                .zip(&proj.components[k])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                < 0.0
            {
                -1.0
            } else {
                1.0
            };
            for (a, b) in vec.iter().zip(&proj.components[k]) {
                assert!((sign * a - b).abs() <= 1e-6, "component {k}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn rank_two_rows_are_reconstructed() {
    let (rows, dim) = (40, 15);
    let mut rng = RngSeed(41).rng();
    let u: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let offset: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut data = Vec::with_capacity(rows * dim);
    for _ in 0..rows {
        let (a, b): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0));
        data.extend((0..dim).map(|j| offset[j] + a * u[j] + b * w[j]));
    }
    let proj = project_rows(&data, dim).unwrap();
    let mean: Vec<f64> = (0..dim)
        .map(|j| (0..rows).map(|i| data[i * dim + j]).sum::<f64>() / rows as f64)
        .collect();
    let (mut err, mut total) = (0.0, 0.0);
    for i in 0..rows {
        for j in 0..dim {
            let centered = data[i * dim + j] - mean[j];
            let rebuilt = proj.coords[i][0] * proj.components[0][j]
                + proj.coords[i][1] * proj.components[1][j];
            err += (centered - rebuilt).powi(2);
            total += centered * centered;
        }
    }
    assert!((err / total).sqrt() <= 1e-6);
    for c in &proj.components {
        let top = c
            .iter()
            .copied()
            .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        assert!(top > 0.0);
    }
}

#[test]
fn first_component_carries_more_variance() {
    let (ts, _) = generate(
        &[
            SegmentSpec::sinusoid(150, 20.0, 1.0),
            SegmentSpec::random_walk(150, 0.3).with_label(1),
        ],
        RngSeed(9),
    )
    .unwrap();
    let pipeline = Time2Cluster::new(20, 20, KMeansConfig::new(2));
    let (aug, _) = pipeline.augmented(&ts).unwrap();
    let proj = project_2d(&aug).unwrap();
    let var = |k: usize| {
        let mean = proj.coords.iter().map(|c| c[k]).sum::<f64>() / proj.coords.len() as f64;
        proj.coords
            .iter()
            .map(|c| (c[k] - mean).powi(2))
            .sum::<f64>()
            / proj.coords.len() as f64
    };
    assert!(var(0) >= var(1));
    assert!((var(0) - proj.variances[0]).abs() <= 1e-9 * proj.variances[0]);
}

#[test]
fn ingest_round_trips_a_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walk.csv");
    ok(&[
        "--seed",
        "4",
        "synth",
        "walkrun",
        "--out",
        path.to_str().unwrap(),
    ]);
    let got = ingest_csv(&path, None, Some(&ColumnSelector::Name("label".into()))).unwrap();
    let sc =
        time2cluster::synthgen::scenario(time2cluster::synthgen::ScenarioName::WalkRun, RngSeed(4))
            .unwrap();
    assert_eq!(got.series.values(), sc.series.values());
    assert_eq!(got.labels.unwrap().labels, sc.truth.labels);

    let small = dir.path().join("tv.csv");
    fs::write(&small, "t,v\n0,1.5\n").unwrap();
    let got = ingest_csv(&small, Some(&"v".parse().unwrap()), None).unwrap();
    assert_eq!(got.series, TimeSeries::new(vec![1.5]).unwrap());
}

#[test]
fn window_longer_than_series_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.csv");
    small_two_regime(&input);
    let out = t2c(&[
        "cluster",
        "--input",
        input.to_str().unwrap(),
        "--m",
        "5000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(
        msg.contains("m = 5000") && msg.contains("<= n = 1000"),
        "{msg}"
    );
    assert!(!dir.path().join("labels.csv").exists());
}

#[test]
fn memory_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.csv");
    small_two_regime(&input);
    let out = t2c(&[
        "--mem-cap",
        "64K",
        "cluster",
        "--input",
        input.to_str().unwrap(),
        "--m",
        "30",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("memory cap"));
}

#[test]
fn synth_cluster_eval_chain_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let input = format!("{d}/walkrun.csv");
    ok(&["synth", "walkrun", "--out", &input]);
    ok(&["cluster", "--input", &input, "--out", d]);
    ok(&[
        "eval",
        "--labels",
        &format!("{d}/labels.csv"),
        "--truth",
        &input,
        "--out",
        d,
    ]);
    let metrics = json(&dir.path().join("metrics.json"));
    let ari = metrics["ari"].as_f64().unwrap();
    assert!(ari >= 0.8, "ARI {ari}");
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["config"]["m_source"], "window-finder");
    assert_eq!(report["config"]["seed"], 0);
    assert!(report["timings"]["correlation_ms"].as_f64().unwrap() > 0.0);
}

#[test]
fn labels_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.csv");
    small_two_regime(&input);
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        ok(&[
            "--seed",
            "7",
            "cluster",
            "--input",
            input.to_str().unwrap(),
            "--m",
            "30",
            "--pca",
            "--out",
            out.to_str().unwrap(),
        ]);
        (
            fs::read(out.join("labels.csv")).unwrap(),
            fs::read(out.join("pca.csv")).unwrap(),
        )
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let text = String::from_utf8(a.0).unwrap();
    assert!(text.starts_with("index,subseq_label,timepoint_label,confidence\n"));
    assert_eq!(text.lines().count(), 1001);
    // The last m - 1 timepoints start no subsequence.
    assert!(text.lines().last().unwrap().starts_with("999,,"));
}

#[test]
fn stride_reports_original_indices() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.csv");
    small_two_regime(&input);
    let d = dir.path().to_str().unwrap();
    ok(&[
        "cluster",
        "--input",
        input.to_str().unwrap(),
        "--m",
        "15",
        "--stride",
        "2",
        "--label-column",
        "label",
        "--out",
        d,
    ]);
    let text = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert_eq!(text.lines().count(), 501);
    assert!(text.lines().nth(2).unwrap().starts_with("2,"));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["n"], 500);
    assert!(report["metrics"]["ari"].as_f64().unwrap() > 0.5);
    ok(&[
        "eval",
        "--labels",
        &format!("{d}/labels.csv"),
        "--truth",
        input.to_str().unwrap(),
        "--out",
        d,
    ]);
    assert_eq!(json(&dir.path().join("metrics.json"))["points"], 500);
}

#[test]
fn sweeps_write_plot_ready_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.csv");
    small_two_regime(&input);
    let (i, d) = (input.to_str().unwrap(), dir.path().to_str().unwrap());
    ok(&[
        "elbow",
        "--input",
        i,
        "--m",
        "30",
        "--k-max",
        "4",
        "--restarts",
        "2",
        "--out",
        d,
    ]);
    let elbow = fs::read_to_string(dir.path().join("elbow.csv")).unwrap();
    assert_eq!(elbow.lines().next(), Some("k,inertia"));
    assert_eq!(elbow.lines().count(), 5);

    ok(&[
        "sensitivity",
        "--input",
        i,
        "--label-column",
        "label",
        "--m-values",
        "15,30",
        "--restarts",
        "2",
        "--out",
        d,
    ]);
    let sens = fs::read_to_string(dir.path().join("sensitivity.csv")).unwrap();
    assert_eq!(sens.lines().next(), Some("m,ks,macro_f1,ari"));
    assert!(sens.lines().nth(2).unwrap().starts_with("30,30,"));

    ok(&[
        "robustness",
        "--input",
        i,
        "--label-column",
        "label",
        "--m",
        "30",
        "--fractions",
        "0,0.01",
        "--repeats",
        "2",
        "--restarts",
        "2",
        "--out",
        d,
    ]);
    let rob = fs::read_to_string(dir.path().join("robustness.csv")).unwrap();
    assert_eq!(
        rob.lines().next(),
        Some("fraction,mean_macro_f1,std_macro_f1,repeats")
    );
    assert_eq!(rob.lines().count(), 3);

    let missing = t2c(&["robustness", "--input", i, "--m", "30", "--out", d]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn window_reports_estimate_and_curve() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sine.csv");
    let values: Vec<f64> = (0..3000)
        .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 60.0).sin())
        .collect();
    write_series(&input, &values, &vec![0; values.len()]);
    let d = dir.path().to_str().unwrap();
    ok(&["window", "--input", input.to_str().unwrap(), "--out", d]);
    let report = json(&dir.path().join("window.json"));
    let w = report["window"].as_f64().unwrap();
    assert!((w - 60.0).abs() <= 6.0, "window {w}");
    let curve = fs::read_to_string(dir.path().join("movingdist.csv")).unwrap();
    assert_eq!(
        curve.lines().next(),
        Some("batch_start,w,score,local_minimum,valley,depth")
    );
    assert!(curve.lines().any(|l| l.contains(",true,true,")));

    ok(&[
        "window",
        "--input",
        input.to_str().unwrap(),
        "--variable",
        "--batch",
        "1000",
        "--out",
        d,
    ]);
    let report = json(&dir.path().join("window.json"));
    assert_eq!(report["batches"].as_array().unwrap().len(), 3);
}
