//! Acceptance: repeating any invocation with the same seed produces
//! byte-identical JSON (run with `-- --nocapture` to see the PASS lines).

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_effdim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {criterion} failed: {detail}");
}

#[test]
fn criterion_8_byte_identical_output() {
    let invocations: Vec<Vec<&str>> = vec![
        vec![
            "verify-theorem1",
            "--dim",
            "3",
            "--cutoff",
            "2",
            "--n",
            "2",
            "--trials",
            "1000",
            "--seed",
            "7",
        ],
        vec![
            "verify-beta",
            "--dims",
            "2,2,2",
            "--n",
            "2",
            "--trials",
            "60",
            "--seed",
            "41",
        ],
        vec![
            "verify-lemma",
            "--dim",
            "5",
            "--trials",
            "500",
            "--seed",
            "13",
        ],
        vec!["hetero", "--vmax", "4", "--d", "40", "--method", "polar"],
        vec![
            "dps",
            "--gamma",
            "0.2",
            "--n0",
            "2",
            "--block-size",
            "2",
            "--m0",
            "10",
        ],
        vec![
            "plan",
            "--protocol",
            "dps",
            "--gamma",
            "0.5",
            "--n0",
            "2",
            "--block-size",
            "2",
            "--epsilon",
            "1e-3",
            "--n",
            "1e6",
        ],
        vec![
            "scaling",
            "--protocol",
            "hetero",
            "--vmax",
            "4",
            "--method",
            "exact",
            "--eps-grid",
            "1e-2,1e-4",
            "--n-grid",
            "1e4,1e8",
        ],
        vec![
            "budget",
            "--delta",
            "1e-7",
            "--eps-smooth",
            "1e-8",
            "--eps-ir",
            "2e-8",
            "--eps-pe",
            "3e-8",
        ],
    ];
    let mut all_identical = true;
    for args in &invocations {
        let first = run(args);
        let second = run(args);
        if first.stdout != second.stdout
            || first.status.code() != second.status.code()
            || first.status.code() != Some(0)
        {
            all_identical = false;
            eprintln!("non-deterministic or failing invocation: {args:?}");
        }
        if args[0] == "verify-theorem1" {
            let text = String::from_utf8_lossy(&first.stdout).to_string();
            let ok = text.contains("\"passes\": 1000") && text.contains("\"failures\": 0");
            if !ok {
                all_identical = false;
                eprintln!("verifier did not report 1000 clean passes");
            }
        }
    }
    report(
        "8 (byte-identical deterministic output)",
        all_identical,
        &format!("{} invocations, each run twice", invocations.len()),
    );
}
