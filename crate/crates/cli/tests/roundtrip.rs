//! Simulator -> CSV -> ingest round trip: the re-read dataset must yield
//! identical statistics (floats are written in shortest-round-trip form).

use std::process::Command;

fn gtcorrect(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gtcorrect"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn simulated_dataset_survives_write_read_identically() {
    let dir = std::env::temp_dir().join("gtcorrect-cli-test-roundtrip");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sim.csv");

    let out = gtcorrect(&[
        "simulate",
        "--sigma-real", "2.78",
        "--sigma-mark", "0.14",
        "--shift", "1.5,0.5",
        "--n", "4000",
        "--seed", "77",
        "--output", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sim_doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();

    let out = gtcorrect(&["stats", "--input", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats_doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();

    for kind in ["validation", "real", "marking"] {
        for metric in ["mean", "p25", "median", "p75", "p95"] {
            let simulated = sim_doc["results"][kind][metric].as_f64().unwrap();
            let reread = stats_doc["results"][kind][metric].as_f64().unwrap();
            assert_eq!(
                simulated.to_bits(),
                reread.to_bits(),
                "{kind}.{metric}: {simulated} != {reread} after round trip"
            );
        }
    }
}

#[test]
fn same_seed_same_file_bytes() {
    let dir = std::env::temp_dir().join("gtcorrect-cli-test-determinism");
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for path in [&a, &b] {
        let out = gtcorrect(&[
            "simulate", "--sigma-real", "1.0", "--n", "1000", "--seed", "123",
            "--output", path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
