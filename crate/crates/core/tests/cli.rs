use std::fs;
use std::path::PathBuf;

use fiberpol::cli::main_with_args;
use fiberpol::io::read_measurements_csv;
use fiberpol::psg::table1_states;
use fiberpol::report::AnalysisReport;

const PCF: &str =
    r#"{"variant":"TwistedPCF","params":{"delta_n_cb":8e-7,"residual_delta_n_lb":1e-7}}"#;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("fiberpol").chain(args.iter().copied());
    let code = main_with_args(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(name)
}

#[test]
fn psg_lists_six_rows() {
    let (code, text, _) = run(&["psg"]);
    assert_eq!(code, 0);
    assert_eq!(text.lines().count(), 7);
    let (code, json, _) = run(&["psg", "--format", "json"]);
    assert_eq!(code, 0);
    let rows: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
    assert_eq!(rows.len(), 6);
    let (_, csv, _) = run(&["psg", "--format", "csv"]);
    assert!(csv.starts_with("label,ret1_waves,ret2_waves,s0,s1,s2,s3\n"));
}

#[test]
fn psg_matches_golden_file() {
    let golden: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(data("tests/golden/psg.json")).unwrap()).unwrap();
    let (_, json, _) = run(&["psg", "--format", "json"]);
    let now: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
    assert_eq!(golden.len(), now.len());
    for ((g, n), row) in golden.iter().zip(&now).zip(table1_states()) {
        assert_eq!(g["label"], n["label"]);
        assert_eq!(g["label"], row.label);
        for i in 0..4 {
            let (a, b) = (
                g["state"][i].as_f64().unwrap(),
                n["state"][i].as_f64().unwrap(),
            );
            assert!((a - b).abs() < 1e-12);
            assert!((a - row.state.to_array()[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn fixture_matches_golden_file() {
    let args = [
        "fixture",
        "--model",
        PCF,
        "--noise",
        "0.01",
        "--repeats",
        "2",
        "--length",
        "0.8",
        "--seed",
        "7",
    ];
    let (code, csv, _) = run(&args);
    assert_eq!(code, 0);
    let (_, again, _) = run(&args);
    assert_eq!(csv, again);

    let golden_text = fs::read_to_string(data("tests/golden/fixture_small.csv")).unwrap();
    assert_eq!(csv.lines().next(), golden_text.lines().next());
    let golden = read_measurements_csv(golden_text.as_bytes(), 808e-9, 0.8).unwrap();
    let now = read_measurements_csv(csv.as_bytes(), 808e-9, 0.8).unwrap();
    for (g, n) in golden.records.iter().zip(&now.records) {
        assert_eq!(g.label, n.label);
        for (a, b) in g.samples_out.iter().zip(&n.samples_out) {
            assert!(a.max_abs_diff(*b) < 1e-12);
        }
    }
}

#[test]
fn simulate_twisted_pcf_stays_on_equator() {
    let model = r#"{"variant":"TwistedPCF","params":{"delta_n_cb":8e-7}}"#;
    let (code, csv, _) = run(&[
        "simulate", "--model", model, "--input", "H", "--length", "4.6", "--dz", "0.01",
    ]);
    assert_eq!(code, 0);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("z,s0,s1,s2,s3"));
    let mut n = 0;
    for line in lines {
        let s3: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(s3.abs() < 1e-10);
        n += 1;
    }
    assert_eq!(n, 461);
}

#[test]
fn pipeline_on_bundled_fixture() {
    let input = data("data/twisted_pcf_0p8m.csv");
    let args = [
        "pipeline",
        "--input",
        input.to_str().unwrap(),
        "--lambda",
        "808e-9",
        "--length",
        "0.8",
        "--prior-cb",
        "8e-7",
        "--prior-lb",
        "1e-7",
        "--seed",
        "3",
    ];
    let (code, json, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    let rep: AnalysisReport = serde_json::from_str(&json).unwrap();
    assert!((rep.circular.delta_n - 8e-7).abs() < 5e-9);
    assert!((rep.circular.delta_n - 8e-7).abs() < 5.0 * rep.circular.sigma);
    assert!((rep.linear.delta_n - 1e-7).abs() < 5e-9);
    assert_eq!(rep.provenance.seed, 3);
    assert_eq!(
        rep.provenance.input.as_deref(),
        Some("twisted_pcf_0p8m.csv")
    );

    // byte-identical on rerun, and lossless through its own schema
    let (_, again, _) = run(&args);
    assert_eq!(json, again);
    let reserialized = serde_json::to_string_pretty(&rep).unwrap() + "\n";
    assert_eq!(reserialized, json);
}

#[test]
fn reconstruct_and_decompose() {
    let input = data("data/twisted_pcf_0p8m.csv");
    let (code, json, err) = run(&[
        "reconstruct",
        "--input",
        input.to_str().unwrap(),
        "--resamples",
        "200",
        "--seed",
        "1",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["estimate"]["m"].as_array().unwrap().len(), 16);
    assert_eq!(v["uncertainty"]["resamples"], 200);

    let (code, json, _) = run(&[
        "decompose",
        "--matrix",
        "[1,0,0,0, 0,1,0,0, 0,0,0,-1, 0,0,1,0]",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let lb = v["retardance"]["delta_lb"].as_f64().unwrap();
    assert!((lb - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn small_commands() {
    let (code, json, _) = run(&["beat-length", "--lambda", "808e-9", "--bm", "1e-6"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!((v["beat_length"].as_f64().unwrap() - 0.808).abs() < 1e-12);

    for (n, units) in [("1", 0), ("2", 1), ("3", 2)] {
        let (code, json, _) = run(&["penalty", "--observables", n]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["extra_noise_units"], units);
    }

    let model = r#"{"variant":"TwistedPCF","params":{"delta_n_cb":8e-7}}"#;
    let (code, json, _) = run(&[
        "plan",
        "--model",
        model,
        "--length",
        "0.8",
        "--calibrate",
        "H",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["plan"]["analyzer_kind"], "linear");
    assert_eq!(v["plan"]["extra_noise_units"], 0);

    let random = r#"{"variant":"StandardRandom","params":{"correlation_length":0.1,"delta_rms":1.0,"seed":0}}"#;
    let (code, json, _) = run(&["plan", "--model", random]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["plan"]["extra_noise_units"], 2);

    let args = [
        "ensemble", "--model", random, "--n", "500", "--length", "10", "--seed", "4",
    ];
    let (code, a, _) = run(&args);
    assert_eq!(code, 0);
    let (_, b, _) = run(&args);
    assert_eq!(a, b);
}

#[test]
fn writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let (code, stdout, _) = run(&[
        "simulate",
        "--model",
        PCF,
        "--input",
        "+",
        "--length",
        "1",
        "--dz",
        "0.25",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 6);
}

#[test]
fn exit_codes() {
    // file and schema problems
    assert_eq!(
        run(&[
            "pipeline",
            "--input",
            "/no/such.csv",
            "--length",
            "1",
            "--prior-cb",
            "1",
            "--prior-lb",
            "1",
            "--seed",
            "1"
        ])
        .0,
        2
    );
    assert_eq!(
        run(&[
            "simulate",
            "--model",
            r#"{"variant":"Nope"}"#,
            "--input",
            "H",
            "--length",
            "1",
            "--dz",
            "0.1"
        ])
        .0,
        2
    );
    assert_eq!(run(&["decompose", "--matrix", "[1,2,3]"]).0, 2);
    assert_eq!(
        run(&[
            "fixture",
            "--model",
            PCF,
            "--noise",
            "0.1",
            "--repeats",
            "3",
            "--length",
            "1"
        ])
        .0,
        2
    );
    assert_eq!(
        run(&[
            "decompose",
            "--matrix",
            "[1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]",
            "--format",
            "csv"
        ])
        .0,
        2
    );
    assert_eq!(run(&["bogus"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let missing_dir = dir.path().join("nope").join("x.json");
    assert_eq!(
        run(&[
            "penalty",
            "--observables",
            "1",
            "--out",
            missing_dir.to_str().unwrap()
        ])
        .0,
        2
    );

    // domain errors
    let (code, _, err) = run(&["penalty", "--observables", "5"]);
    assert_eq!(code, 3);
    assert!(err.contains("penalty"));
    assert_eq!(run(&["beat-length", "--bm", "0"]).0, 3);
    assert_eq!(
        run(&[
            "decompose",
            "--matrix",
            "[-1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]"
        ])
        .0,
        3
    );

    // ill-posed: only H and V inputs
    let rows = "label,s0_in,s1_in,s2_in,s3_in,s0_out,s1_out,s2_out,s3_out,sample_idx
H,1,1,0,0,1,1,0,0,0
H,1,1,0,0,1,1,0,0,1
V,1,-1,0,0,1,-1,0,0,0
V,1,-1,0,0,1,-1,0,0,1
";
    let path = dir.path().join("hv.csv");
    fs::write(&path, rows).unwrap();
    let (code, _, err) = run(&[
        "pipeline",
        "--input",
        path.to_str().unwrap(),
        "--length",
        "1",
        "--prior-cb",
        "1e-7",
        "--prior-lb",
        "1e-7",
        "--seed",
        "1",
    ]);
    assert_eq!(code, 4);
    assert!(err.contains("retrieval"), "{err}");
}
