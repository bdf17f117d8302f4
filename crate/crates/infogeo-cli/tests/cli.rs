//! End-to-end tests of the `infogeo` binary: documented examples,
//! output-schema conformance, determinism, and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_infogeo"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

// ------------------------------------------------------------- schema check

fn schema() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas/output.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).expect("schema file"))
        .expect("schema parses")
}

fn resolve<'a>(root: &'a Value, node: &'a Value) -> &'a Value {
    match node.get("$ref").and_then(Value::as_str) {
        Some(r) => {
            let mut cur = root;
            for seg in r.strip_prefix("#/").expect("local ref").split('/') {
                cur = cur.get(seg).expect("ref target exists");
            }
            cur
        }
        None => node,
    }
}

fn type_matches(t: &str, value: &Value) -> bool {
    match t {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "number" => value.is_number(),
        "integer" => value.is_i64() || value.is_u64(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        _ => panic!("unknown schema type {t}"),
    }
}

/// Structural validator for the subset of JSON Schema the shipped
/// schema uses: $ref into #/definitions, oneOf, const, enum, type,
/// required, properties, additionalProperties:false, items,
/// minItems/maxItems, minimum.
fn check(root: &Value, schema: &Value, value: &Value, path: &str, errors: &mut Vec<String>) {
    let schema = resolve(root, schema);

    if let Some(options) = schema.get("oneOf").and_then(Value::as_array) {
        let hits = options
            .iter()
            .filter(|s| {
                let mut e = Vec::new();
                check(root, s, value, path, &mut e);
                e.is_empty()
            })
            .count();
        if hits != 1 {
            errors.push(format!("{path}: matched {hits} oneOf branches, want 1"));
        }
        return;
    }
    if let Some(c) = schema.get("const") {
        if c != value {
            errors.push(format!("{path}: expected {c}, got {value}"));
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            errors.push(format!("{path}: {value} not in enum"));
        }
    }
    if let Some(t) = schema.get("type").and_then(Value::as_str) {
        if !type_matches(t, value) {
            errors.push(format!("{path}: not a {t}: {value}"));
            return;
        }
    }
    match value {
        Value::Object(map) => {
            if let Some(req) = schema.get("required").and_then(Value::as_array) {
                for k in req.iter().filter_map(Value::as_str) {
                    if !map.contains_key(k) {
                        errors.push(format!("{path}: missing required key {k}"));
                    }
                }
            }
            let props = schema.get("properties").and_then(Value::as_object);
            if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
                for k in map.keys() {
                    if props.is_none_or(|p| !p.contains_key(k)) {
                        errors.push(format!("{path}: unexpected key {k}"));
                    }
                }
            }
            if let Some(props) = props {
                for (k, sub) in props {
                    if let Some(v) = map.get(k) {
                        check(root, sub, v, &format!("{path}.{k}"), errors);
                    }
                }
            }
        }
        Value::Array(items) => {
            if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
                if (items.len() as u64) < min {
                    errors.push(format!("{path}: fewer than {min} items"));
                }
            }
            if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
                if (items.len() as u64) > max {
                    errors.push(format!("{path}: more than {max} items"));
                }
            }
            if let Some(sub) = schema.get("items") {
                for (i, v) in items.iter().enumerate() {
                    check(root, sub, v, &format!("{path}[{i}]"), errors);
                }
            }
        }
        Value::Number(n) => {
            if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
                if n.as_f64().is_some_and(|x| x < min) {
                    errors.push(format!("{path}: {n} below minimum {min}"));
                }
            }
        }
        _ => {}
    }
}

fn assert_schema_valid(doc: &Value) {
    let root = schema();
    let mut errors = Vec::new();
    check(&root, &root, doc, "$", &mut errors);
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

// ------------------------------------------------------------- fixtures

struct Fixtures {
    dir: PathBuf,
}

impl Fixtures {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("infogeo-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).expect("temp dir");
        Self { dir }
    }

    fn write(&self, name: &str, contents: &str) -> String {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).expect("fixture write");
        path.to_string_lossy().into_owned()
    }
}

impl Drop for Fixtures {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.dir);
    }
}

// ------------------------------------------------------------- examples

#[test]
fn ricci_at_the_symmetric_loop_point_is_twelve() {
    let doc = stdout_json(&run(&["ricci", "--name", "D4", "--point", "all=0.5"]));
    assert_eq!(doc["result"]["dim"], 10);
    assert_eq!(doc["result"]["points"][0]["ricci"], 12.0);
    assert_schema_valid(&doc);
}

#[test]
fn topology_reports_dimension_and_cycle_class() {
    let doc = stdout_json(&run(&["topology", "--name", "D4"]));
    assert_eq!(doc["result"]["dim"], 10);
    assert_eq!(doc["result"]["skeleton"]["beta1"], 1);
    assert_eq!(doc["result"]["quantization_class"], "RationalExpected");
    assert_schema_valid(&doc);

    let doc = stdout_json(&run(&["topology", "--name", "C6"]));
    assert_eq!(doc["result"]["dim"], 37);
    assert_eq!(doc["result"]["quantization_class"], "HalfIntegerExpected");
    assert_schema_valid(&doc);
}

#[test]
fn quadrature_volume_of_the_three_node_complete_tree() {
    let doc = stdout_json(&run(&["volume", "--name", "K3", "--method", "quad"]));
    let v = doc["result"]["estimate"]["value"].as_f64().unwrap();
    let exact = std::f64::consts::PI.powi(4) / 6.0;
    assert!(
        ((v - exact) / exact).abs() < 1e-4,
        "volume {v} vs pi^4/6 = {exact}"
    );
    assert_schema_valid(&doc);
}

#[test]
fn reduced_loop_average_reports_both_exponent_routes() {
    let doc = stdout_json(&run(&["avg-ricci", "--name", "D4", "--method", "reduced"]));
    let headline = doc["result"]["estimate"]["value"].as_f64().unwrap();
    let full = doc["result"]["alternate_exponent_route"]["value"]
        .as_f64()
        .unwrap();
    assert!((headline - 7.2).abs() < 1e-4, "5/2-weight route: {headline}");
    assert!((full - 4.0).abs() < 1e-4, "full-element route: {full}");
    assert_schema_valid(&doc);
}

#[test]
fn reduced_collapsing_star_average_carries_fit_details() {
    let doc = stdout_json(&run(&["avg-ricci", "--name", "C3", "--method", "reduced"]));
    let v = doc["result"]["estimate"]["value"].as_f64().unwrap();
    assert!((v - 2.0).abs() < 1e-6, "C3 average: {v}");
    let a = doc["result"]["collapsing_star"]["fit"]["a"].as_f64().unwrap();
    assert!((a - 10.0).abs() < 1e-6, "C3 intercept: {a}");
    assert_schema_valid(&doc);
}

#[test]
fn sample_counts_accept_scientific_notation() {
    let doc = stdout_json(&run(&[
        "avg-ricci", "--name", "K2", "--method", "mc", "--samples", "2e6",
    ]));
    assert_eq!(doc["config"]["samples"], 2_000_000);
    // Constant curvature short-circuits, so this stays fast.
    assert_eq!(doc["result"]["estimate"]["status"], "constant-curvature");
    let v = doc["result"]["estimate"]["value"].as_f64().unwrap();
    assert!((v - 1.5).abs() < 1e-12, "constant value: {v}");
    assert_schema_valid(&doc);
}

// ------------------------------------------------------------- determinism

#[test]
fn monte_carlo_json_is_byte_identical_across_runs_and_thread_counts() {
    let args = [
        "avg-ricci", "--name", "L3", "--method", "mc", "--samples", "1e5", "--seed", "42",
    ];
    let base = run(&args);
    assert!(base.status.success());
    for threads in ["1", "4"] {
        let out = bin()
            .args(args)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .expect("binary runs");
        assert_eq!(
            base.stdout, out.stdout,
            "output differs with RAYON_NUM_THREADS={threads}"
        );
    }
    let again = run(&args);
    assert_eq!(base.stdout, again.stdout, "output differs between runs");
    assert_schema_valid(&stdout_json(&base));
}

#[test]
fn partition_count_defaults_from_the_environment() {
    let args = [
        "avg-ricci", "--name", "L3", "--method", "mc", "--samples", "1e4", "--seed", "5",
    ];
    let out = bin()
        .args(args)
        .env("INFOGEO_PARTITIONS", "32")
        .output()
        .expect("binary runs");
    let doc = stdout_json(&out);
    assert_eq!(doc["config"]["partitions"], 32);

    let bad = bin()
        .args(args)
        .env("INFOGEO_PARTITIONS", "zero")
        .output()
        .expect("binary runs");
    assert_eq!(exit_code(&bad), 4);
}

// ------------------------------------------------------------- tables

#[test]
fn gaussian_table_passes_and_exits_zero() {
    let out = run(&["table", "gaussian"]);
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["all_required_pass"], true);
    assert_eq!(doc["result"]["rows"].as_array().unwrap().len(), 5);
    assert_schema_valid(&doc);
}

#[test]
fn classical_table_reports_the_refuted_rows_and_exits_two() {
    let out = run(&["table", "classical"]);
    assert_eq!(exit_code(&out), 2);
    let doc: Value = serde_json::from_slice(&out.stdout).expect("json");
    assert_eq!(doc["result"]["all_required_pass"], false);
    let rows = doc["result"]["rows"].as_array().unwrap();
    let failing: Vec<&str> = rows
        .iter()
        .filter(|r| r["pass"] == false)
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["L3", "D4"], "exactly the refuted rows fail");
    assert_schema_valid(&doc);
}

#[test]
fn collapsing_table_refutes_the_five_parent_row_and_exits_two() {
    let out = run(&["table", "collapsing"]);
    assert_eq!(exit_code(&out), 2);
    let doc: Value = serde_json::from_slice(&out.stdout).expect("json");
    let rows = doc["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 15);
    let failing: Vec<&str> = rows
        .iter()
        .filter(|r| r["pass"] == false)
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["C6 (n=5) intercept a", "C6 (n=5) average R"]);
    // The computed five-parent average is positive, against the
    // predicted sign change.
    let avg = rows
        .iter()
        .find(|r| r["name"] == "C6 (n=5) average R")
        .unwrap();
    assert!((avg["computed"].as_f64().unwrap() - 40.0).abs() < 1e-3);
    assert_schema_valid(&doc);
}

// ------------------------------------------------------------- score

#[test]
fn score_ranks_structures_and_flags_starved_slots() {
    let fx = Fixtures::new("score");
    let k2 = fx.write("k2.json", r#"{"kind":"bitnet","nodes":["a","b"],"edges":[[0,1]]}"#);
    let indep = fx.write("indep.json", r#"{"kind":"bitnet","nodes":["a","b"],"edges":[]}"#);
    let data = fx.write(
        "data.csv",
        "a,b\n0,0\n0,0\n0,1\n1,1\n1,1\n1,1\n1,0\n0,0\n1,1\n0,0\n\
         1,1\n1,0\n0,0\n0,1\n1,1\n1,1\n0,0\n0,0\n1,1\n1,0\n",
    );
    let out = run(&["score", "--model", &k2, "--model", &indep, "--data", &data]);
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["data_rows"], 20);
    let ranking = doc["result"]["ranking"].as_array().unwrap();
    assert_eq!(ranking.len(), 2);
    // The strongly correlated columns favor the edge over independence.
    assert!(ranking[0]["model"].as_str().unwrap().ends_with("k2.json"));
    assert!(
        ranking[0]["report"]["total"].as_f64().unwrap()
            > ranking[1]["report"]["total"].as_f64().unwrap()
    );
    assert_schema_valid(&doc);

    // A never-observed parent configuration leaves the score undefined
    // and produces an advisory on stderr, not a failure.
    let starved = fx.write("starved.csv", "a,b\n1,1\n1,0\n1,1\n1,1\n1,0\n1,1\n");
    let out = run(&["score", "--model", &k2, "--data", &starved]);
    assert_eq!(exit_code(&out), 0);
    let doc = stdout_json(&out);
    assert!(doc["result"]["ranking"][0]["report"]["total"].is_null());
    assert_eq!(
        doc["result"]["ranking"][0]["report"]["starved_slots"]
            .as_array()
            .unwrap()
            .len(),
        1
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no matching rows"), "stderr: {stderr}");
    assert_schema_valid(&doc);
}

#[test]
fn score_marks_loop_skeleton_candidates_with_an_advisory() {
    let fx = Fixtures::new("loopscore");
    let tree = fx.write(
        "tree.json",
        r#"{"kind":"bitnet","nodes":["a","b","c","d"],"edges":[[0,1],[0,2],[0,3]]}"#,
    );
    let loop_model = fx.write(
        "loop.json",
        r#"{"kind":"bitnet","nodes":["a","b","c","d"],"edges":[[0,1],[0,2],[1,3],[2,3]]}"#,
    );
    let data = fx.write(
        "data.csv",
        "a,b,c,d\n0,0,0,0\n1,1,0,1\n0,1,1,0\n1,0,1,1\n1,1,1,1\n0,0,1,0\n\
         1,0,0,1\n0,1,0,0\n1,1,1,0\n0,0,0,1\n1,0,1,0\n0,1,1,1\n",
    );
    let out = run(&["score", "--model", &tree, "--model", &loop_model, "--data", &data]);
    let doc = stdout_json(&out);
    let ranking = doc["result"]["ranking"].as_array().unwrap();
    let loop_entry = ranking
        .iter()
        .find(|e| e["model"].as_str().unwrap().ends_with("loop.json"))
        .expect("loop candidate present");
    let tree_entry = ranking
        .iter()
        .find(|e| e["model"].as_str().unwrap().ends_with("tree.json"))
        .expect("tree candidate present");
    assert!(loop_entry["report"]["advisory"].is_string());
    assert!(tree_entry["report"]["advisory"].is_null());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("advisory"), "stderr: {stderr}");
    assert_schema_valid(&doc);
}

#[test]
fn table_tolerance_can_be_overridden() {
    // 1e-12 is far tighter than the default 1e-6; the constant rows
    // hold at machine precision, so the table stays green and the
    // override is echoed in the config block.
    let out = run(&["table", "gaussian", "--tolerance", "1e-12"]);
    assert_eq!(exit_code(&out), 0);
    let doc: Value = serde_json::from_slice(&out.stdout).expect("json");
    assert_eq!(doc["result"]["all_required_pass"], true);
    assert_eq!(doc["config"]["tolerance"], 1e-12);
    assert!(doc["result"]["rows"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["tolerance"] == 1e-12));
    assert_schema_valid(&doc);

    assert_eq!(exit_code(&run(&["table", "gaussian", "--tolerance", "-1"])), 4);
}

#[test]
fn score_works_on_file_models_with_named_columns() {
    let fx = Fixtures::new("vmodel");
    let v = fx.write(
        "v.json",
        r#"{"kind":"bitnet","nodes":["left","right","sink"],"edges":[[0,2],[1,2]]}"#,
    );
    let data = fx.write(
        "data.csv",
        "left,right,sink\n0,0,0\n1,0,1\n0,1,1\n1,1,1\n0,0,0\n1,1,1\n0,1,0\n1,0,1\n",
    );
    let out = run(&["score", "--model", &v, "--data", &data]);
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["ranking"].as_array().unwrap().len(), 1);
    assert_schema_valid(&doc);
}

// ------------------------------------------------------------- exit codes

#[test]
fn error_paths_use_distinct_exit_codes() {
    // Input errors: 4.
    assert_eq!(exit_code(&run(&["ricci", "--name", "nosuch", "--point", "all=0.5"])), 4);
    assert_eq!(exit_code(&run(&["ricci", "--name", "D4", "--point", "0.5,0.5"])), 4);
    assert_eq!(exit_code(&run(&["ricci", "--name", "D4", "--point", "all=1.5"])), 4);
    assert_eq!(exit_code(&run(&["ricci", "--name", "D4"])), 4);
    assert_eq!(exit_code(&run(&["nosuchcommand"])), 4);
    assert_eq!(exit_code(&run(&["avg-ricci", "--name", "K2", "--method", "mc", "--samples", "nan"])), 4);

    // Capability limits: 3.
    assert_eq!(exit_code(&run(&["volume", "--name", "gauss:chain3"])), 3);
    assert_eq!(exit_code(&run(&["avg-ricci", "--name", "L3", "--method", "reduced"])), 3);

    // Help is not an error.
    let help = run(&["--help"]);
    assert_eq!(exit_code(&help), 0);
}

#[test]
fn file_models_round_trip_through_topology_and_ricci() {
    let fx = Fixtures::new("filemodel");
    let diamond = fx.write(
        "diamond.json",
        r#"{"kind":"gaussian","nodes":["s","l","r","t"],"edges":[[0,1],[0,2],[1,3],[2,3]]}"#,
    );
    let doc = stdout_json(&run(&["topology", "--file", &diamond]));
    assert_eq!(doc["result"]["kind"], "gaussian");
    assert_eq!(doc["result"]["dim"], 8);
    assert_eq!(doc["result"]["skeleton"]["beta1"], 1);
    assert_eq!(doc["result"]["node_names"][3], "t");
    assert_schema_valid(&doc);

    let doc = stdout_json(&run(&[
        "ricci", "--file", &diamond, "--random", "3", "--seed", "7",
    ]));
    let pts = doc["result"]["points"].as_array().unwrap();
    assert_eq!(pts.len(), 3);
    for p in pts {
        assert!(p["ricci"].as_f64().unwrap() < 0.0, "gaussian R must be negative");
    }
    assert_schema_valid(&doc);

    let bad = fx.write("cyclic.json", r#"{"kind":"bitnet","nodes":["a","b"],"edges":[[0,1],[1,0]]}"#);
    assert_eq!(exit_code(&run(&["topology", "--file", &bad])), 4);

    // A skeleton with two independent cycles reports beta1 = 2.
    let two_loops = fx.write(
        "two_loops.json",
        r#"{"kind":"bitnet","nodes":["a","b","c","d"],"edges":[[0,1],[0,2],[0,3],[1,3],[2,3]]}"#,
    );
    let doc = stdout_json(&run(&["topology", "--file", &two_loops]));
    assert_eq!(doc["result"]["skeleton"]["beta1"], 2);
    assert_eq!(doc["result"]["quantization_class"], "IrrationalConjectured");
    assert_schema_valid(&doc);
}

// ------------------------------------------------------------- formats

#[test]
fn csv_and_pretty_formats_render_every_command() {
    let csv = run(&["ricci", "--name", "K2", "--point", "all=0.5", "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p0,p1,p2,ricci"));
    assert!(lines.next().unwrap().ends_with(",1.5"));

    let pretty = run(&["table", "gaussian", "--format", "pretty"]);
    let text = String::from_utf8(pretty.stdout).unwrap();
    assert!(text.contains("all required rows pass: yes"), "{text}");

    let csv = run(&["topology", "--name", "K3", "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.lines().any(|l| l == "dim,7"), "{text}");
}
