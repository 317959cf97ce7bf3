use std::path::{Path, PathBuf};
use std::process::Command;

use jsonschema::JSONSchema;
use serde_json::Value;
use tempfile::TempDir;
use villadsen_core::cli::{run, Outcome};

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn assert_schema(name: &str, doc: &Value) {
    let path = schema_dir().join(format!("{name}.schema.json"));
    let text = std::fs::read_to_string(&path).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let compiled = JSONSchema::compile(&schema).unwrap();
    let msgs: Vec<String> = match compiled.validate(doc) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{e} at {}", e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "{name} schema violations: {msgs:#?}");
}

fn villadsen(args: &[&str]) -> Outcome {
    run(std::iter::once("villadsen").chain(args.iter().copied()))
}

fn json(out: &Outcome) -> Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", out.stdout))
}

/// Synthesizes the two-member ω = 1 family into a temporary directory.
fn workspace() -> (TempDir, Value) {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = villadsen(&["synthesize", "--omega", "1", "--count", "2", "--out-dir", out_dir]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    (dir, json(&out))
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn write(dir: &TempDir, name: &str, out: &Outcome) -> String {
    let path = p(dir, name);
    std::fs::write(&path, &out.stdout).unwrap();
    path
}

const BAD_DESCRIPTOR: &str = r#"{
  "m": 2,
  "seeds": [{"dim": 1, "solid": true, "contractible": true},
            {"dim": 1, "solid": true, "contractible": true}],
  "d": [{"tail": {"kind": "constant", "value": 2}}, {"tail": {"kind": "constant", "value": 2}}],
  "mu": {"kind": "symmetric_two_seed",
         "l": {"tail": {"kind": "constant", "value": 4}},
         "c": {"tail": {"kind": "constant", "value": 2}}},
  "r0": [1, 1]
}"#;

#[test]
fn synthesize_emits_members_with_base_parameters() {
    let (dir, doc) = workspace();
    assert_schema("synthesize", &doc);
    let members = doc.as_array().unwrap();
    assert_eq!(members.len(), 2);
    for (i, m) in members.iter().enumerate() {
        assert_eq!(m["provenance"]["h"], 3);
        assert_eq!(m["provenance"]["kappa1"], "2/3");
        assert_eq!(m["provenance"]["N"], 1);
        let file: Value = serde_json::from_str(&std::fs::read_to_string(p(&dir, &format!("member-{}.json", i + 1))).unwrap()).unwrap();
        assert_eq!(&file, m);
        assert_schema("member", &file);
        assert_schema("descriptor", &file["descriptor"]);
    }
}

#[test]
fn pipeline_is_byte_deterministic() {
    let run_once = || {
        let (dir, _) = workspace();
        let member = p(&dir, "member-1.json");
        let inv = villadsen(&["invariants", "--in", &member]);
        let fp = villadsen(&["fingerprint", "--in", &member]);
        let member_text = std::fs::read_to_string(&member).unwrap();
        (member_text, inv.stdout, fp.stdout)
    };
    assert_eq!(run_once(), run_once());
}

#[test]
fn invariants_report_matches_schema() {
    let (dir, _) = workspace();
    let out = villadsen(&["invariants", "--in", &p(&dir, "member-1.json")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let doc = json(&out);
    assert_schema("invariants", &doc);
    assert_eq!(doc["rc"]["lo"], "1/1");
    assert_eq!(doc["rc"]["hi"], "1/1");
    assert_eq!(doc["kappa"][0]["lo"], "2/3");
    assert_eq!(doc["certified"], true);
}

#[test]
fn invariants_reject_l_below_2c_plus_1() {
    let dir = TempDir::new().unwrap();
    let path = p(&dir, "bad.json");
    std::fs::write(&path, BAD_DESCRIPTOR).unwrap();
    let out = villadsen(&["invariants", "--in", &path]);
    assert_eq!(out.code, 2);
    let doc = json(&out);
    assert_schema("error", &doc);
    assert!(doc["error"]["message"].as_str().unwrap().contains("l(n) ≥ 2c(n)+1"));
    assert!(out.stderr.contains("l(n) ≥ 2c(n)+1"));

    let out = villadsen(&["verify", "--in", &path]);
    assert_eq!(out.code, 2);
    let doc = json(&out);
    assert_schema("verify", &doc);
    assert_eq!(doc["two_seed"]["holds"], "false");
    assert_eq!(doc["two_seed"]["first_failure"]["clause"], "l(n) ≥ 2c(n)+1");
}

#[test]
fn verify_passes_on_members() {
    let (dir, _) = workspace();
    let out = villadsen(&["verify", "--in", &p(&dir, "member-2.json")]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    let doc = json(&out);
    assert_schema("verify", &doc);
    assert_eq!(doc["simplicity"]["holds"], "true");
    assert_eq!(doc["two_seed"]["holds"], "true");
    assert_eq!(doc["construction"]["violations"], Value::Array(vec![]));
}

#[test]
fn fingerprint_against_sigma_image_is_not_distinguishable() {
    let (dir, _) = workspace();
    let fp = villadsen(&["fingerprint", "--in", &p(&dir, "member-1.json")]);
    assert_eq!(fp.code, 0, "{}", fp.stderr);
    assert_schema("fingerprint", &json(&fp));
    let f1 = write(&dir, "f1.json", &fp);
    let swapped = villadsen(&["fingerprint", "--in", &f1, "--sigma"]);
    assert_eq!(json(&swapped)["corners_swapped"], true);
    let f1s = write(&dir, "f1s.json", &swapped);

    let out = villadsen(&["discriminate", "--a", &f1, "--b", &f1s]);
    assert_eq!(out.code, 0);
    let doc = json(&out);
    assert_schema("discrimination", &doc);
    assert_eq!(doc["verdict"], "not_distinguishable");
}

#[test]
fn different_members_are_distinguishable() {
    let (dir, _) = workspace();
    let fps = villadsen(&["fingerprint", "--in", &p(&dir, "member-1.json")]);
    let f1 = write(&dir, "f1.json", &fps);
    let fps = villadsen(&["fingerprint", "--in", &p(&dir, "member-2.json")]);
    let f2 = write(&dir, "f2.json", &fps);
    let out = villadsen(&["discriminate", "--a", &f1, "--b", &f2]);
    assert_eq!(out.code, 0);
    assert_eq!(json(&out)["verdict"], "distinguishable");
}

#[test]
fn fingerprint_accepts_member_arrays_in_order() {
    let (dir, doc) = workspace();
    let all = p(&dir, "all.json");
    std::fs::write(&all, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = villadsen(&["fingerprint", "--in", &all]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let fps = json(&out);
    assert_schema("fingerprint", &fps);
    let betas: Vec<_> = fps.as_array().unwrap().iter().map(|f| f["beta"].clone()).collect();
    let expected: Vec<_> = doc.as_array().unwrap().iter().map(|m| m["beta"].clone()).collect();
    assert_eq!(betas, expected);
}

#[test]
fn levels_output() {
    let (dir, _) = workspace();
    let out = villadsen(&["levels", "--in", &p(&dir, "member-1.json"), "--depth", "3"]);
    assert_eq!(out.code, 0);
    let doc = json(&out);
    assert_schema("levels", &doc);
    // l = 4, 10, 82: r(n) = 1, 4, 40, 3280; r′ = ∏ (l − 2) = 1, 2, 16, 1280.
    let r: Vec<_> = doc["levels"].as_array().unwrap().iter().map(|lv| lv["r"][0].clone()).collect();
    assert_eq!(r, vec!["1", "4", "40", "3280"]);
    let rp: Vec<_> = doc["levels"].as_array().unwrap().iter().map(|lv| lv["r_prime"].clone()).collect();
    assert_eq!(rp, vec!["1", "2", "16", "1280"]);
}

#[test]
fn k0_commands() {
    let (dir, _) = workspace();
    let member = p(&dir, "member-1.json");

    let out = villadsen(&["k0", "cone", "--lambda", "1/2", "--x", "1", "--y", "-3/2"]);
    assert_eq!(out.code, 0);
    let doc = json(&out);
    assert_schema("k0-cone", &doc);
    assert_eq!(doc["decision"], "positive");
    assert_eq!(doc["margin"]["lo"], "1/4");

    let out = villadsen(&["k0", "cone", "--lambda-lo", "1/3", "--lambda-hi", "1/2", "--x", "1", "--y", "5/2"]);
    assert_eq!(out.code, 3);
    assert_eq!(json(&out)["decision"], "unknown");

    let out = villadsen(&["k0", "cone", "--lambda", "1/2", "--x", "-1", "--y", "0"]);
    assert_eq!(json(&out)["decision"], "not_positive");

    let out = villadsen(&["k0", "state", "--in", &member, "--x", "1", "--y", "1", "--t", "-1"]);
    assert_eq!(out.code, 0);
    let doc = json(&out);
    assert_schema("k0-state", &doc);

    let out = villadsen(&["k0", "gamma", "--in", &member, "--level", "3", "--m1", "5", "--m2", "-2"]);
    assert_eq!(out.code, 0);
    let doc = json(&out);
    assert_schema("k0-gamma", &doc);
    assert_eq!(doc["image"], doc["next_image"]);

    let out = villadsen(&["k0", "autos", "--in", &member, "--q", "1,1/2,0,1"]);
    assert_eq!(out.code, 0);
    let doc = json(&out);
    assert_schema("k0-autos", &doc);
    assert_eq!(doc["witness"]["outcome"], "found");
    assert_eq!(doc["canonical"].as_array().unwrap().len(), 2);

    let out = villadsen(&["k0", "autos", "--lambda", "1/2", "--q", "1,0,0,-1"]);
    assert_eq!(json(&out)["witness"]["outcome"], "not_applicable");

    let out = villadsen(&["k0", "divisibility", "--in", &member, "--max-k", "12", "--depth", "400"]);
    assert_eq!(out.code, 0);
    let doc = json(&out);
    assert_schema("k0-divisibility", &doc);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 12);
}

#[test]
fn parse_failures_exit_4() {
    for args in [
        &["synthesize", "--omega", "0.5", "--count", "2"][..],
        &["synthesize", "--omega", "1", "--count", "2", "--bogus"],
        &["frobnicate"],
        &["k0", "cone", "--x", "1", "--y", "0"],
        &["synthesize", "--omega", "1"],
    ] {
        let out = villadsen(args);
        assert_eq!(out.code, 4, "{args:?}: {}", out.stdout);
        let doc = json(&out);
        assert_schema("error", &doc);
        assert_eq!(doc["error"]["kind"], "parse");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn malformed_json_input_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let path = p(&dir, "junk.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = villadsen(&["invariants", "--in", &path]);
    assert_eq!(out.code, 4);
}

#[test]
fn missing_input_file_is_a_precondition_failure() {
    let out = villadsen(&["levels", "--in", "/nonexistent/desc.json"]);
    assert_eq!(out.code, 2);
}

#[test]
fn output_keys_are_sorted() {
    let out = villadsen(&["k0", "state", "--lambda", "1/2", "--x", "1", "--y", "1", "--t", "1/2"]);
    let keys: Vec<&str> = ["\"element\"", "\"lambda\"", "\"t\"", "\"value\""]
        .iter()
        .map(|k| {
            assert!(out.stdout.contains(k));
            *k
        })
        .collect();
    let positions: Vec<usize> = keys.iter().map(|k| out.stdout.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    assert!(out.stdout.ends_with('\n') && !out.stdout.trim_end().contains('\n'));
}

#[test]
fn binary_writes_json_to_stdout_and_sets_exit_code() {
    let bin = env!("CARGO_BIN_EXE_villadsen");
    let out = Command::new(bin)
        .args(["synthesize", "--omega", "1", "--count", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc.as_array().unwrap().len(), 2);

    let out = Command::new(bin).args(["synthesize", "--omega", "1/0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(!out.stderr.is_empty());
}
