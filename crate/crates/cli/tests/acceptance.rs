//! Acceptance suite: runs every verification criterion at its pinned
//! threshold and prints one pass/fail line per criterion. Criterion 12
//! (byte-identical reports) exercises the real binary twice.

use std::process::Command;

use ellarr::verify::{run, runtime_cap_ms, within_budget, VerifyConfig, CRITERIA};

const ACCEPTANCE_SEED: u64 = 20240517;

#[test]
fn criteria_01_to_11_pass_within_budget() {
    let config = VerifyConfig {
        seed: ACCEPTANCE_SEED,
        ..VerifyConfig::default()
    };
    let results = run(&config).expect("suite runs");
    assert_eq!(results.len(), CRITERIA.len());
    let mut failures = Vec::new();
    for r in &results {
        println!("{r}");
        if !r.pass {
            failures.push(format!("criterion {} failed: {}", r.id, r.detail));
        }
        if !within_budget(r) {
            failures.push(format!(
                "criterion {} took {} ms, budget {} ms",
                r.id,
                r.elapsed_ms,
                runtime_cap_ms(r.id).unwrap()
            ));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn criterion_12_verify_reports_are_byte_identical() {
    let args = ["verify", "--seed", "99991", "--format", "json"];
    let run_once = || {
        Command::new(env!("CARGO_BIN_EXE_ellarr"))
            .args(args)
            .env_remove("ELLARR_TOLERANCES")
            .output()
            .expect("binary runs")
    };
    let a = run_once();
    let b = run_once();
    println!(
        "{} [12] determinism: two verify runs, {} bytes each",
        if a.stdout == b.stdout && a.status.success() {
            "PASS"
        } else {
            "FAIL"
        },
        a.stdout.len()
    );
    assert!(a.status.success(), "first verify run failed");
    assert!(b.status.success(), "second verify run failed");
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout, "reports differ between runs");
}
