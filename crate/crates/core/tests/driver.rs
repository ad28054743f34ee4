use std::process::Command;

use specint::chc::{parse_constraint, Verdict};
use specint::driver::{verify_source, Direction, PipelineConfig, Source};
use specint::polyhedra::entails;
use specint::specializer::Generalization;

fn corpus(name: &str) -> String {
    format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(name: &str, cfg: &PipelineConfig) -> specint::driver::Report {
    let src = Source::from_path(std::path::Path::new(&corpus(name))).unwrap();
    verify_source(src, cfg).unwrap()
}

fn verify(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
    )
}

#[test]
fn accumulator_is_safe_in_the_first_iteration() {
    let r = run("fig1.imp", &PipelineConfig::default());
    assert_eq!(r.verdict.name(), "SAFE");
    assert_eq!(r.iterations_used, 1);
    let inv = &r.loop_invariants["new1"];
    assert!(entails(
        &inv.constraint,
        &parse_constraint("X >= 1, Y >= 0, X >= Y").unwrap()
    ));
}

#[test]
fn unsafe_variant_reaches_the_violation_after_one_iteration() {
    let r = run("fig1_unsafe.imp", &PipelineConfig::default());
    let Verdict::Unsafe(t) = &r.verdict else {
        panic!("expected UNSAFE, got {}", r.verdict.name())
    };
    assert!(t.replays());
    let env = r.final_env.as_ref().unwrap();
    assert_eq!(env["x"].to_string(), "1");
    assert_eq!(env["y"].to_string(), "1");
    assert!(!r.imp.as_ref().unwrap().assertion_holds(env));
}

#[test]
fn loop_free_programs_never_reach_the_solver() {
    let r = run("straight_safe.imp", &PipelineConfig::default());
    assert_eq!(r.verdict.name(), "SAFE");
    assert!(r.phases.iter().all(|p| p.name != "ihcs"));
}

#[test]
fn configurations_never_contradict_each_other() {
    let names = [
        "fig1.imp",
        "fig1_unsafe.imp",
        "straight_safe.imp",
        "straight_unsafe.imp",
        "countdown.imp",
        "nested.imp",
        "bounded_unsafe.imp",
        "fig1b.clp",
        "fig1c.clp",
    ];
    for name in names {
        let mut seen = Vec::new();
        for gen in [Generalization::Monovariant, Generalization::Polyhedral] {
            for dir in [Direction::Forward, Direction::Backward] {
                for iters in [0, 2] {
                    let cfg = PipelineConfig {
                        gen,
                        initial_direction: dir,
                        max_iterations: iters,
                        phase_deadline: std::time::Duration::from_secs(3),
                        total_deadline: std::time::Duration::from_secs(6),
                        ..PipelineConfig::default()
                    };
                    let v = run(name, &cfg).verdict.name();
                    if v != "UNKNOWN" {
                        seen.push(v);
                    }
                }
            }
        }
        seen.dedup();
        assert!(seen.len() <= 1, "{name}: {seen:?}");
    }
}

#[test]
fn reversal_iterations_are_counted() {
    let cfg = PipelineConfig {
        initial_direction: Direction::Backward,
        ..PipelineConfig::default()
    };
    let r = run("fig1.imp", &cfg);
    assert_eq!(r.verdict.name(), "SAFE");
    assert!(r.iterations_used >= 1);
    let reversals = r.phases.iter().filter(|p| p.name == "reverse").count();
    // The initial reversal is not a cycle.
    assert_eq!(reversals, r.iterations_used);
}

#[test]
fn cli_exit_codes() {
    let (code, out) = verify(&[&corpus("fig1.imp"), "--gen", "ph"]);
    assert_eq!((code, out.lines().next()), (0, Some("SAFE")));
    let (code, out) = verify(&[&corpus("fig1_unsafe.imp")]);
    assert_eq!((code, out.lines().next()), (1, Some("UNSAFE")));
    assert!(out.contains("final state x=1 y=1"));
    let (code, _) = verify(&["missing.imp"]);
    assert_eq!(code, 3);
    let (code, _) = verify(&[&corpus("fig1.imp"), "--gen", "quux"]);
    assert_eq!(code, 3);
    let (code, out) = verify(&[&corpus("fig1c.clp"), "--emit", "chc"]);
    assert_eq!(code, 0);
    assert!(out.lines().nth(1).unwrap().starts_with("unsafe :- "));
}

#[test]
fn cli_oracle_mode() {
    let (code, out) = verify(&[&corpus("fig1_unsafe.imp"), "--oracle-depth", "10"]);
    assert_eq!((code, out.trim()), (1, "UNSAFE"));
    let (code, out) = verify(&[&corpus("fig1.imp"), "--oracle-depth", "10"]);
    assert_eq!((code, out.trim()), (2, "UNKNOWN"));
}

#[test]
fn json_reports_are_stable() {
    let (_, a) = verify(&[&corpus("fig1.imp"), "--emit", "json"]);
    let body = a.split_once('\n').unwrap().1;
    let json: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(json["verdict"], "SAFE");
    let order = [
        "\"verdict\"",
        "\"reason\"",
        "\"iterations_used\"",
        "\"phases\"",
        "\"invariants\"",
    ];
    let at: Vec<usize> = order.iter().map(|k| body.find(k).unwrap()).collect();
    assert!(at.windows(2).all(|w| w[0] < w[1]), "{at:?}");
    let (_, b) = verify(&[&corpus("fig1.imp"), "--emit", "json"]);
    assert_eq!(strip_durations(&a), strip_durations(&b));
}

fn strip_durations(s: &str) -> String {
    s.lines()
        .filter(|l| !l.contains("\"duration_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}
