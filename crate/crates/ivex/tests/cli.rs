//! End-to-end tests of the command-line surface: exit codes, report
//! reproducibility, and the CSV export format.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ivex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn audit_exit_codes_follow_the_contract() {
    // 0 = holds
    let out = run(&[
        "audit",
        &fixture("example31.json"),
        "--class",
        "sluep",
        "--samples",
        "3000",
    ]);
    assert_eq!(code(&out), 0);

    // 1 = counterexample, with the witness in the report
    let out = run(&[
        "audit",
        &fixture("example31.json"),
        "--class",
        "ssluep",
        "--samples",
        "3000",
    ]);
    assert_eq!(code(&out), 1);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let witness = &report["results"]["verdict"]["outcome"]["witness"];
    assert!(witness["margin"].as_f64().unwrap() > 1e-9);
    assert!(witness["sample_index"].is_u64());

    // 2 = input error (missing required map for this class)
    let out = run(&["audit", &fixture("example31.json"), "--class", "epi-gsei"]);
    assert_eq!(code(&out), 2);

    // 3 = not checkable (constant map is not invertible)
    let out = run(&[
        "audit",
        &fixture("example36.json"),
        "--class",
        "condition-a",
        "--samples",
        "500",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn gradient_semantics_flag_switches_the_verdict() {
    let out = run(&[
        "audit",
        &fixture("example36.json"),
        "--class",
        "weakly-sei",
        "--grad",
        "direct",
        "--samples",
        "2000",
    ]);
    assert_eq!(code(&out), 1);

    let out = run(&[
        "audit",
        &fixture("example36.json"),
        "--class",
        "weakly-sei",
        "--grad",
        "composite",
        "--samples",
        "2000",
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn psluep_supplied_mode_uses_the_file_certificate() {
    let out = run(&[
        "audit",
        &fixture("example33.json"),
        "--class",
        "psluep",
        "--phi",
        "supplied",
        "--samples",
        "3000",
    ]);
    assert_eq!(code(&out), 0);

    // a fixture without a Phi entry is an input error in supplied mode
    let out = run(&[
        "audit",
        &fixture("example31.json"),
        "--class",
        "psluep",
        "--phi",
        "supplied",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn eval_prints_both_readings_and_rejects_outside_points() {
    let out = run(&["eval", &fixture("p1star.json"), "--point", "ln(2)"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("h(E(zeta)) = [2.4548225555204377, 4.909645111040875]"));

    let out = run(&["eval", &fixture("example32.json"), "--point", "-0.25"]);
    assert_eq!(code(&out), 2); // outside the box

    let out = run(&["eval", &fixture("example31.json"), "--point", "-0.25"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("h(zeta) = [-0.25, 0.75]"));

    let out = run(&["eval", &fixture("example31.json"), "--point", "nonsense"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn kkt_dominance_and_local_global_exit_codes() {
    let p1 = fixture("p1star.json");
    assert_eq!(
        code(&run(&[
            "kkt",
            &p1,
            "--point",
            "ln(2)",
            "--multipliers",
            "0,0",
            "--samples",
            "3000"
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "kkt",
            &p1,
            "--point",
            "ln(3)",
            "--multipliers",
            "0,0",
            "--samples",
            "3000"
        ])),
        1
    );
    assert_eq!(
        code(&run(&[
            "kkt",
            &p1,
            "--point",
            "ln(2)",
            "--multipliers",
            "0"
        ])),
        2
    );

    assert_eq!(
        code(&run(&[
            "dominance",
            &p1,
            "--point",
            "ln(2)",
            "--samples",
            "3000"
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "dominance",
            &p1,
            "--point",
            "ln(4)",
            "--samples",
            "3000"
        ])),
        1
    );
    assert_eq!(code(&run(&["dominance", &p1, "--point", "ln(5)"])), 2);

    let pp = fixture("p1star_as_p.json");
    assert_eq!(
        code(&run(&[
            "local-global",
            &pp,
            "--point",
            "ln(2)",
            "--samples",
            "2000"
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "local-global",
            &pp,
            "--point",
            "ln(3)",
            "--samples",
            "2000"
        ])),
        1
    );
}

#[test]
fn reports_are_reproducible_apart_from_timing() {
    let args = [
        "audit",
        &fixture("example32.json"),
        "--class",
        "sluep",
        "--samples",
        "2500",
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = run(&args);
    let mut ra: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let mut rb: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    ra.as_object_mut().unwrap().remove("timing");
    rb.as_object_mut().unwrap().remove("timing");
    assert_eq!(
        serde_json::to_string(&ra).unwrap(),
        serde_json::to_string(&rb).unwrap()
    );
    // the report carries the input digest and echoes the config
    assert_eq!(ra["config"]["seed"], 7);
    assert_eq!(ra["input"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn witness_replays_from_the_report_alone() {
    let out = run(&[
        "audit",
        &fixture("example32.json"),
        "--class",
        "sluep",
        "--samples",
        "2000",
    ]);
    assert_eq!(code(&out), 1);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let w = &report["results"]["verdict"]["outcome"]["witness"];

    // rebuild both sides from the stored tuple only
    let lp =
        ivex::problem::LoadedProblem::from_path(&PathBuf::from(fixture("example32.json"))).unwrap();
    let zeta: Vec<f64> = w["zeta"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let delta: Vec<f64> = w["delta"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let (lhs, rhs) = ivex::invexity::sluep_sides(
        &lp.problem.objective,
        &lp.problem.e,
        &lp.problem.psi,
        &zeta,
        &delta,
        w["alpha"].as_f64().unwrap(),
        w["lambda"].as_f64().unwrap(),
    )
    .unwrap();
    assert!((lhs.lo() - w["lhs"]["lo"].as_f64().unwrap()).abs() <= 1e-12);
    assert!((lhs.hi() - w["lhs"]["hi"].as_f64().unwrap()).abs() <= 1e-12);
    assert!((rhs.lo() - w["rhs"]["lo"].as_f64().unwrap()).abs() <= 1e-12);
    assert!((rhs.hi() - w["rhs"]["hi"].as_f64().unwrap()).abs() <= 1e-12);
}

#[test]
fn csv_export_has_the_documented_columns() {
    let out = run(&["sample-csv", &fixture("example31.json"), "--grid", "61"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "z1,hL,hU,hL_of_E,hU_of_E");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 61);
    // on the negative side the endpoints track z; past zero they flatten
    for r in &rows {
        let (z, h_lo, h_hi) = (r[0], r[1], r[2]);
        if z <= 0.0 {
            assert!((h_lo - z).abs() < 1e-12 && (h_hi - (z + 1.0)).abs() < 1e-12);
        } else {
            assert_eq!((h_lo, h_hi), (0.0, 1.0));
        }
        // the composed endpoints are constant for this fixture
        assert_eq!((r[3], r[4]), (0.0, 1.0));
    }
}

#[test]
fn candidates_subcommand_reports_the_front() {
    let out = run(&["candidates", &fixture("p1star.json")]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let front = report["results"]["candidates"].as_array().unwrap();
    assert!(!front.is_empty());
    let top = front[0]["point"][0].as_f64().unwrap();
    assert!((top - std::f64::consts::LN_2).abs() <= 1e-4);
}

#[test]
fn report_flag_writes_the_same_document() {
    let dir = std::env::temp_dir().join(format!("ivex-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = run(&[
        "audit",
        &fixture("example33.json"),
        "--class",
        "sluep",
        "--samples",
        "1500",
        "--report",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let from_file = std::fs::read(&path).unwrap();
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        String::from_utf8(from_file).unwrap().trim()
    );
    std::fs::remove_dir_all(&dir).ok();
}
