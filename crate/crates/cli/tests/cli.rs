use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn swsyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swsyn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const RSC: &str = "q 2\nout 1 0 1\nfeedback 1 1 1\n";

#[test]
fn encode_then_noiseless_decode_recovers_source() {
    let dir = tempfile::tempdir().unwrap();
    let code = dir.path().join("rsc.code");
    let x = dir.path().join("x.txt");
    let s = dir.path().join("s.txt");
    fs::write(&code, RSC).unwrap();
    fs::write(&x, "1 0 1 1 0 0 1 0 0 1 1 1\n").unwrap();

    let enc = swsyn(&[
        "encode",
        "--code",
        p(&code),
        "--input",
        p(&x),
        "--out",
        p(&s),
    ]);
    assert!(
        enc.status.success(),
        "{}",
        String::from_utf8_lossy(&enc.stderr)
    );
    assert_eq!(
        fs::read_to_string(&s).unwrap().split_whitespace().count(),
        6
    );

    for strategy in [
        "complementary",
        "isf",
        "isf-reencode",
        "parity-perspective",
        "syndrome-trellis",
        "map",
    ] {
        let dec = swsyn(&[
            "decode",
            "--code",
            p(&code),
            "--side-info",
            p(&x),
            "--syndrome",
            p(&s),
            "--epsilon",
            "0",
            "--strategy",
            strategy,
        ]);
        assert!(
            dec.status.success(),
            "{strategy}: {}",
            String::from_utf8_lossy(&dec.stderr)
        );
        let got: Vec<String> = String::from_utf8(dec.stdout)
            .unwrap()
            .split_whitespace()
            .map(String::from)
            .collect();
        assert_eq!(got.join(" "), "1 0 1 1 0 0 1 0 0 1 1 1", "{strategy}");
    }
}

#[test]
fn turbo_encode_decode() {
    let dir = tempfile::tempdir().unwrap();
    let code = dir.path().join("turbo.code");
    fs::write(
        &code,
        format!("turbo\npermutation 2 0 3 1\nconstituent\n{RSC}constituent\n{RSC}"),
    )
    .unwrap();
    let x = dir.path().join("x.txt");
    fs::write(&x, "1 0 1 1  0 1 0 0  1 1 0 1\n").unwrap();
    let enc = swsyn(&["encode", "--code", p(&code), "--input", p(&x)]);
    assert!(enc.status.success());
    let s = dir.path().join("s.txt");
    fs::write(&s, &enc.stdout).unwrap();
    assert_eq!(
        String::from_utf8_lossy(&enc.stdout)
            .split_whitespace()
            .count(),
        8
    );
    let dec = swsyn(&[
        "decode",
        "--code",
        p(&code),
        "--side-info",
        p(&x),
        "--syndrome",
        p(&s),
        "--epsilon",
        "0",
    ]);
    assert!(
        dec.status.success(),
        "{}",
        String::from_utf8_lossy(&dec.stderr)
    );
    let got: Vec<String> = String::from_utf8(dec.stdout)
        .unwrap()
        .split_whitespace()
        .map(String::from)
        .collect();
    assert_eq!(got.join(" "), "1 0 1 1 0 1 0 0 1 1 0 1");
}

fn experiment(dir: &Path) -> std::path::PathBuf {
    fs::write(dir.join("rsc.code"), RSC).unwrap();
    let cfg = dir.join("exp.json");
    fs::write(
        &cfg,
        r#"{"code": "rsc.code", "block_length": 128, "strategies": ["map", "complementary"],
            "epsilons": [0.1, 0.02], "trials": 8, "seed": 5}"#,
    )
    .unwrap();
    cfg
}

#[test]
fn simulate_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = experiment(dir.path());
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.csv"));
        let run = swsyn(&[
            "simulate",
            "--config",
            p(&cfg),
            "--threads",
            threads,
            "--out",
            p(&out),
        ]);
        assert!(
            run.status.success(),
            "{}",
            String::from_utf8_lossy(&run.stderr)
        );
        outputs.push((
            fs::read(&out).unwrap(),
            fs::read(out.with_extension("json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 8 * 2);

    let reseeded = dir.path().join("s.csv");
    assert!(swsyn(&[
        "simulate",
        "--config",
        p(&cfg),
        "--seed",
        "6",
        "--out",
        p(&reseeded)
    ])
    .status
    .success());
    assert_ne!(fs::read(&reseeded).unwrap(), outputs[0].0);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = experiment(dir.path());
    let out = dir.path().join("o.csv");
    let bad = swsyn(&[
        "simulate",
        "--config",
        p(&cfg),
        "--strategy",
        "viterbi",
        "--out",
        p(&out),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("strategies[0]"));

    let broken = dir.path().join("broken.json");
    fs::write(&broken, r#"{"code": "rsc.code", "trials": "many"}"#).unwrap();
    assert_eq!(
        swsyn(&["simulate", "--config", p(&broken), "--out", p(&out)])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        swsyn(&["audit", "--config", p(&dir.path().join("absent.json"))])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn audit_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = experiment(dir.path());
    assert_eq!(
        swsyn(&["audit", "--config", p(&cfg)]).status.code(),
        Some(0)
    );

    let spec = dir.path().join("audit.json");
    fs::write(
        &spec,
        r#"{"audit": {"instances": 20, "block_lengths": [8, 32], "seed": 9}}"#,
    )
    .unwrap();
    let ok = swsyn(&["audit", "--config", p(&spec), "--threads", "2"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("violations 0"));

    let strict = swsyn(&["audit", "--config", p(&spec), "--tolerance", "0"]);
    assert_eq!(strict.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("replay seeds"));

    assert_eq!(
        swsyn(&["verify", "--instances", "20"]).status.code(),
        Some(0)
    );
    let small = dir.path().join("small.json");
    fs::write(
        &small,
        r#"{"code": "rsc.code", "block_length": 5, "strategies": ["complementary", "map"], "epsilons": [0.2], "trials": 4}"#,
    )
    .unwrap();
    assert_eq!(
        swsyn(&["verify", "--config", p(&small)]).status.code(),
        Some(0)
    );
}
