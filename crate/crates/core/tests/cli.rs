use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use zkmap::corpus::bundled_dir;

fn zkmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zkmap"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture(name: &str) -> String {
    bundled_dir().join(name).display().to_string()
}

fn compiled(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join("a.zkb.json");
    let (src, o) = (fixture("zkvoting.msol"), out.display().to_string());
    let mut args = vec!["compile", src.as_str(), "-o", o.as_str()];
    args.extend_from_slice(extra);
    let r = zkmap(&args);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    out
}

#[test]
fn compile_writes_a_mapped_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let sm = dir.path().join("map.json");
    let smc = dir.path().join("map.txt");
    let a = compiled(
        dir.path(),
        &[
            "--sourcemap-out",
            sm.to_str().unwrap(),
            "--sourcemap-compressed-out",
            smc.to_str().unwrap(),
        ],
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a).unwrap()).unwrap();
    assert!(!json["sourcemap"]["entries"].as_array().unwrap().is_empty());
    assert!(json["timings"].is_object());
    assert!(std::fs::read_to_string(sm).unwrap().contains("\"entries\""));
    assert!(std::fs::read_to_string(smc).unwrap().contains(";"));
}

#[test]
fn no_mapping_gives_an_empty_map_and_same_bytecode() {
    let dir = tempfile::tempdir().unwrap();
    let on = compiled(dir.path(), &["--no-timing"]);
    let on: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(on).unwrap()).unwrap();
    let off = zkmap(&[
        "compile",
        &fixture("zkvoting.msol"),
        "--no-mapping",
        "--no-timing",
    ]);
    let off: serde_json::Value = serde_json::from_slice(&off.stdout).unwrap();
    assert_eq!(off["sourcemap"]["entries"].as_array().unwrap().len(), 0);
    assert_eq!(off["bytecode_hex"], on["bytecode_hex"]);
}

#[test]
fn emit_ir_prints_annotated_instructions() {
    let o = zkmap(&[
        "compile",
        &fixture("loop_sum.msol"),
        "--emit-ir",
        "--passes",
        "const_fold,dce",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.lines()
            .any(|l| l.contains(" = ") && l.contains("conf=")),
        "{text}"
    );
}

#[test]
fn compile_errors_and_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.msol");
    std::fs::write(&bad, "contract C { function f() external { x = ; } }").unwrap();
    assert_eq!(
        zkmap(&["compile", bad.to_str().unwrap()]).status.code(),
        Some(1)
    );
    assert_eq!(
        zkmap(&["compile", &fixture("bank.msol"), "--passes", "gvn"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        zkmap(&[
            "compile",
            &fixture("bank.msol"),
            "--passes",
            "zk_instrument,dce"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        zkmap(&["compile", "/no/such/file.msol"]).status.code(),
        Some(2)
    );
    assert_eq!(zkmap(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn validate_accepts_honest_and_rejects_corrupted() {
    let dir = tempfile::tempdir().unwrap();
    let a = compiled(dir.path(), &[]);
    let ok = zkmap(&["validate", a.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("0 violations"));

    let mut json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    let entries = json["sourcemap"]["entries"].as_array_mut().unwrap();
    let s = entries[5]["s"].as_u64().unwrap();
    entries[5]["s"] = (s + 3).into();
    let bad = dir.path().join("bad.zkb.json");
    std::fs::write(&bad, serde_json::to_string(&json).unwrap()).unwrap();
    let r = zkmap(&["validate", bad.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stdout(&r).contains("violation:"));

    let r = zkmap(&["validate", bad.to_str().unwrap(), "--format", "structured"]);
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!(!v["violations"].as_array().unwrap().is_empty());

    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(
        zkmap(&["validate", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn trace_shows_the_failing_require() {
    let dir = tempfile::tempdir().unwrap();
    let a = compiled(dir.path(), &[]);
    let txs = fixture("zkvoting.txs.json");
    let o = zkmap(&["trace", a.to_str().unwrap(), "--tx", &txs, "--index", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("Already voted"), "{text}");
    assert!(
        text.contains("reverted") && text.contains("require(!hasVoted[msg.sender]"),
        "{text}"
    );

    let o = zkmap(&[
        "trace",
        a.to_str().unwrap(),
        "--tx",
        &txs,
        "--format",
        "structured",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
    assert_eq!(v[2]["failing"]["zk_constraint"], 1);

    assert_eq!(
        zkmap(&["trace", a.to_str().unwrap(), "--tx", &txs, "--index", "9"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn trace_exits_1_on_expectation_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let a = compiled(dir.path(), &[]);
    let txs = dir.path().join("wrong.txs.json");
    std::fs::write(
        &txs,
        r#"[{"function": "submitVote", "args": [1], "sender": 7, "expect": {"status": "revert"}}]"#,
    )
    .unwrap();
    let o = zkmap(&["trace", a.to_str().unwrap(), "--tx", txs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("expectation:"));
}

#[test]
fn query_both_directions() {
    let dir = tempfile::tempdir().unwrap();
    let a = compiled(dir.path(), &[]);
    let a = a.to_str().unwrap();
    let o = zkmap(&["query", a, "--offset", "0x80", "--format", "structured"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let span = format!("{}:{}:{}", v["s"], v["l"], v["f"]);
    let o = zkmap(&["query", a, "--span", &span, "--format", "structured"]);
    let offsets: Vec<u32> = serde_json::from_slice(&o.stdout).unwrap();
    assert!(offsets.contains(&v["offset"].as_u64().unwrap().try_into().unwrap()));
    assert_eq!(zkmap(&["query", a]).status.code(), Some(2));
    assert_eq!(
        zkmap(&["query", a, "--span", "1:0:0"]).status.code(),
        Some(2)
    );
}

#[test]
fn disasm_annotates_source() {
    let dir = tempfile::tempdir().unwrap();
    let a = compiled(dir.path(), &[]);
    let o = zkmap(&["disasm", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("0x0000 JUMPDEST"));
    assert!(text.contains("hasVoted[msg.sender] = true"));
}

#[test]
fn structured_bench_is_reproducible() {
    let dir = bundled_dir().display().to_string();
    let run = || zkmap(&["bench", &dir, "--no-timing", "--format", "structured"]);
    let (a, b) = (run(), run());
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["accuracy"][0]["aggregate_pct"], 100.0);
    assert!(v.get("overhead").is_none());
}

#[test]
fn bench_rejects_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        zkmap(&["bench", dir.path().to_str().unwrap(), "--no-timing"])
            .status
            .code(),
        Some(2)
    );
}
