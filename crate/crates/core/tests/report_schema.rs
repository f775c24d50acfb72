use serde_json::Value;

use sossplit_core::bench::{gen_named, run_check, GenSpec, RunOptions, Verdict};
use sossplit_core::sdp::SolverMode;
use sossplit_core::Polynomial;

const SCHEMA: &str = include_str!("../schema/run_report.schema.json");

fn validator() -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn check(p: &Polynomial, opts: &RunOptions, want: Verdict) -> Value {
    let report = run_check(p, opts);
    assert_eq!(report.verdict, want, "{report:?}");
    let json = serde_json::to_value(&report).unwrap();
    let v = validator();
    let errors: Vec<String> = v
        .iter_errors(&json)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{errors:#?}");
    json
}

#[test]
fn sos_report_validates() {
    let json = check(&gen_named("ex5").unwrap(), &RunOptions::default(), Verdict::Sos);
    assert!(json["certificate"].is_object());
}

#[test]
fn refuted_reports_validate() {
    let json = check(&gen_named("motzkin").unwrap(), &RunOptions::default(), Verdict::NotSos);
    assert_eq!(json["refutation_reason"], "negative_diagonal");
    assert_eq!(json["certificate"], Value::Null);
    check(&gen_named("choilam").unwrap(), &RunOptions::default(), Verdict::NotSos);
    let no_prechecks = RunOptions {
        prechecks: false,
        ..RunOptions::default()
    };
    let json = check(&gen_named("ex3").unwrap(), &no_prechecks, Verdict::NotSos);
    assert_eq!(json["leaves"][0]["status"], "infeasible_certified_upstream");
}

#[test]
fn inconclusive_reports_validate() {
    let hard = GenSpec::new("bm(3)".parse().unwrap(), 0).generate().unwrap();
    let json = check(&hard, &RunOptions::default(), Verdict::Inconclusive);
    assert_eq!(json["certificate"], Value::Null);

    let p = GenSpec::new("sqr(4,5,4,3)".parse().unwrap(), 1).generate().unwrap();

    let mut broken = RunOptions::default();
    broken.solve.mode = SolverMode::External {
        command: "/nonexistent/solver".into(),
        convention: sossplit_core::sdp::OutputConvention::Primal,
        workdir: None,
    };
    let json = check(&p, &broken, Verdict::Inconclusive);
    assert!(json["note"].is_string());
}

#[test]
fn schema_rejects_unknown_fields() {
    let report = run_check(&gen_named("motzkin").unwrap(), &RunOptions::default());
    let mut json = serde_json::to_value(&report).unwrap();
    json["extra"] = Value::Bool(true);
    assert!(!validator().is_valid(&json));
    let mut json = serde_json::to_value(&report).unwrap();
    json["verdict"] = "maybe".into();
    assert!(!validator().is_valid(&json));
}
