mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Command, Output, Stdio};

use common::{fixture, fixture_path};

fn forge() -> Command {
    Command::new(env!("CARGO_BIN_EXE_grammar-forge"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8(b.to_vec()).unwrap()
}

#[test]
fn generate_and_optimize_reproduce_the_goldens() {
    let dir = tempfile::tempdir().unwrap();
    let generated = dir.path().join("g.gxt");
    let o = run(forge().args(["generate", "-m"]).arg(fixture_path("mini_eatxt.mm.json")).arg("-o").arg(&generated));
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(std::fs::read_to_string(&generated).unwrap(), fixture("mini_eatxt.generated.gxt"));

    let report = dir.path().join("report.txt");
    let o = run(forge()
        .args(["optimize", "-g"])
        .arg(&generated)
        .arg("-c")
        .arg(fixture_path("mini_eatxt.goc"))
        .arg("--report")
        .arg(&report));
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(text(&o.stdout), fixture("mini_eatxt.optimized.gxt"));
    let report = std::fs::read_to_string(&report).unwrap();
    assert!(report.contains("applied"));
    assert!(o.stderr.is_empty());
}

#[test]
fn preview_is_reproducible() {
    let args = ["preview", "-g", &fixture_path("mini_eatxt.optimized.gxt"), "-m", &fixture_path("mini_eatxt.mm.json"), "--seed", "42", "--count", "3"];
    let a = run(forge().args(args));
    let b = run(forge().args(args));
    assert!(a.status.success(), "{}", text(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let out = text(&a.stdout);
    assert!(out.starts_with("# sample 1\n"));
    assert!(out.contains("# sample 3\n"));
    let c = run(forge().args(["preview", "-g", &fixture_path("mini_eatxt.optimized.gxt"), "--seed", "43"]));
    assert!(c.status.success());
    assert_ne!(c.stdout, a.stdout);
}

#[test]
fn preview_reprints_programs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.txt");
    std::fs::write(&p, "EAXML { packages { EAPackage \"P1\" { } } }").unwrap();
    let o = run(forge().args(["preview", "-g", &fixture_path("mini_eatxt.optimized.gxt"), "-m", &fixture_path("mini_eatxt.mm.json"), "--count", "0", "-p"]).arg(&p));
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).ends_with("EAXML {\n    packages {\n        EAPackage \"P1\" { }\n    }\n}\n"));
}

#[test]
fn malformed_config_is_reported_by_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.goc");
    std::fs::write(&bad, "remove_keyword rule=* keyword=uuid\n\nfrobnicate rule=*\n").unwrap();
    let o = run(forge().args(["optimize", "-g", &fixture_path("mini_eatxt.generated.gxt"), "-c"]).arg(&bad));
    assert_eq!(o.status.code(), Some(2));
    let err = text(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn failing_entries_exit_with_input_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.goc");
    std::fs::write(&cfg, "rename_rule rule=EAPackage new_name=EAXML\n").unwrap();
    let o = run(forge().args(["optimize", "-g", &fixture_path("mini_eatxt.generated.gxt"), "-c"]).arg(&cfg));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(text(&o.stdout), fixture("mini_eatxt.generated.gxt"));
    assert!(text(&o.stderr).contains("entry 0"));
}

#[test]
fn styles_list_apply_and_install() {
    let dir = tempfile::tempdir().unwrap();
    let styles = dir.path().join("styles");
    let list = || run(forge().arg("style").arg("list").env("GRAMMAR_FORGE_STYLES", &styles));
    let o = list();
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("python_style\tv1\tbuilt-in"));

    let o = run(forge()
        .args(["style", "apply", "-g", &fixture_path("mini_eatxt.generated.gxt"), "-n", "c_style"])
        .env("GRAMMAR_FORGE_STYLES", &styles));
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_ne!(text(&o.stdout), fixture("mini_eatxt.generated.gxt"));

    let doc = dir.path().join("terse.style");
    std::fs::write(&doc, "name: terse\ndescription: drop uuid keywords\nversion: 1\nremove_keyword keyword=uuid\n").unwrap();
    let o = run(forge().args(["style", "install"]).arg(&doc).env("GRAMMAR_FORGE_STYLES", &styles));
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&list().stdout).contains("terse\tv1\tinstalled"));
    let o = run(forge().args(["style", "install"]).arg(&doc).env("GRAMMAR_FORGE_STYLES", &styles));
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&doc, "name: terse\ndescription: drop uuid keywords\nversion: 2\nremove_keyword keyword=uuid\n").unwrap();
    let o = run(forge().args(["style", "install", "--force"]).arg(&doc).env("GRAMMAR_FORGE_STYLES", &styles));
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&list().stdout).contains("terse\tv2\tinstalled"));
}

#[test]
fn infer_writes_grammar_and_metamodel() {
    let dir = tempfile::tempdir().unwrap();
    let mm = dir.path().join("m.mm.json");
    let o = run(forge().args(["infer", "-a", &fixture_path("infer/reference.ann.json"), "--metamodel-out"]).arg(&mm));
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("returns"));
    let g = dir.path().join("g.gxt");
    std::fs::write(&g, &o.stdout).unwrap();
    let back = run(forge().arg("generate").arg("-m").arg(&mm));
    assert!(back.status.success(), "{}", text(&back.stderr));
}

#[test]
fn evolve_reports_the_rename() {
    let o = run(forge().args([
        "evolve",
        "-m",
        &fixture_path("mini_eatxt_v2.mm.json"),
        "-c",
        &fixture_path("mini_eatxt.goc"),
        "--old",
        &fixture_path("mini_eatxt.mm.json"),
        "--json",
    ]));
    assert!(o.status.success(), "{}", text(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&text(&o.stderr)).unwrap();
    assert_eq!(report["summary"]["stale_no_target"], 1);
    assert_eq!(report["summary"]["applied"], 7);
    let stale = report["entries"].as_array().unwrap().iter().find(|e| e["status"] == "stale-no-target").unwrap();
    assert_eq!(stale["suggestion"]["rename_to"], "EAPkg");
    assert!(text(&o.stdout).contains("EAPkg returns EAPkg"));
}

#[test]
fn serve_answers_health_checks() {
    let mut child = forge()
        .args(["serve", "--port", "0"])
        .stderr(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap_or_else(|| panic!("{line}")).to_string();
    let mut s = TcpStream::connect(&addr).unwrap();
    write!(s, "GET /health HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut resp = String::new();
    s.read_to_string(&mut resp).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.ends_with("ok"));
}
