use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mulab(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mulab"));
    c.env_remove("MULAB_CACHE_DIR").args(args);
    c
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (Output, String) {
    let out = dir.join(name);
    let o = mulab(args).arg("--out").arg(&out).output().unwrap();
    let body = std::fs::read_to_string(&out).unwrap_or_default();
    (o, body)
}

/// CSV rows after the `# config:` line and the header.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn correlate_single_row_small() {
    let dir = tempfile::tempdir().unwrap();
    let (o, body) = run_to(dir.path(), "c.csv", &["correlate", "--func", "liouville", "--shifts", "0,1", "--N", "1e6"]);
    assert!(o.status.success());
    assert!(body.starts_with("# config: {"));
    let r = rows(&body);
    assert_eq!(r.len(), 1);
    let (re, im): (f64, f64) = (r[0][3].parse().unwrap(), r[0][4].parse().unwrap());
    assert!(re.hypot(im) <= 0.01);
}

#[test]
fn log_patterns_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let (o, body) =
        run_to(dir.path(), "p.csv", &["patterns", "--func", "liouville", "--ell", "3", "--N", "1e7", "--avg", "log"]);
    assert!(o.status.success());
    let r = rows(&body);
    assert_eq!(r.len(), 8);
    let total: f64 = r.iter().map(|row| row[4].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() <= 1e-9, "{total}");
}

#[test]
fn gcs_check_holds() {
    let dir = tempfile::tempdir().unwrap();
    let (o, body) = run_to(dir.path(), "g.json", &["check", "--suite", "gcs", "--seeds", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&body).unwrap();
    let suite = &v["result"][0];
    assert_eq!(suite["suite"], "gcs");
    assert_eq!(suite["holds"], 100);
    assert_eq!(suite["all_hold"], true);
}

#[test]
fn report_embeds_replay_config_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (o, body) = run_to(dir.path(), "sub/k.csv", &["katai", "--K", "12", "--N", "1e4", "--seed", "4"]);
    assert!(o.status.success());
    let first = body.lines().next().unwrap();
    let cfg: Value = serde_json::from_str(first.strip_prefix("# config: ").unwrap()).unwrap();
    assert_eq!(cfg["tool"], "mulab");
    assert_eq!(cfg["seed"], 4);
    assert_eq!(cfg["command"]["katai"]["K"], 12);
    let m: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sub/k.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["replay"], cfg);
    assert!(m["tool_version"].is_string());
    assert!(m["wall_ms"].is_u64());
    assert_eq!(m["outputs"].as_array().unwrap().len(), 1);
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cache_s = cache.to_str().unwrap();
    let (o, _) = run_to(dir.path(), "s.json", &["sieve", "--func", "liouville", "--N", "2e5", "--cache-dir", cache_s]);
    assert!(o.status.success());
    let files: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(files.len(), 1);

    let args = ["correlate", "--shifts", "0,2", "--N", "1e5"];
    let (_, plain) = run_to(dir.path(), "plain.csv", &args);
    let (_, cached) = run_to(dir.path(), "cached.csv", &[&args[..], &["--cache-dir", cache_s]].concat());
    assert_eq!(plain, cached);

    // the environment variable supplies the same directory
    let out = dir.path().join("env.csv");
    let o = mulab(&args).env("MULAB_CACHE_DIR", &cache).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(out).unwrap(), plain);
}

#[test]
fn cached_block_is_actually_used() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    // a planted "liouville" file holding (-1)^n makes every lag-1 product -1
    let fake = mulab::seqgen::materialize(&mulab::seqgen::SyntheticSpec::Alternating.into(), 1, 5001).unwrap();
    mulab::seqgen::cache::write(&mulab::seqgen::cache::cache_path(&cache, "liouville", 1, 5000), &fake).unwrap();
    let args = ["correlate", "--shifts", "0,1", "--N", "1e3"];
    let (_, with) = run_to(dir.path(), "with.csv", &[&args[..], &["--cache-dir", cache.to_str().unwrap()]].concat());
    let (_, without) = run_to(dir.path(), "without.csv", &args);
    assert_eq!(rows(&with)[0][3], "-1");
    assert_ne!(rows(&without)[0][3], "-1");

    // unreadable files are skipped, not fatal
    std::fs::write(cache.join("liouville_1_9000.mulab"), b"not a cache file").unwrap();
    let (o, _) = run_to(dir.path(), "c.csv", &["correlate", "--shifts", "0,1", "--N", "8e3", "--cache-dir", cache.to_str().unwrap()]);
    assert!(o.status.success());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run_to(dir.path(), "x", args).0.status.code();
    assert_eq!(code(&["correlate", "--shifts", "0,1", "--N", "1.5"]), Some(2));
    assert_eq!(code(&["correlate", "--func", "nope", "--shifts", "0,1", "--N", "10"]), Some(2));
    assert_eq!(code(&["correlate", "--shifts", "0,1"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["check", "--M", "1000"]), Some(2));
    assert_eq!(code(&["pretentious", "--mode", "aperiodicity", "--N-list", "100", "--q-max", "101"]), Some(2));
    assert_eq!(code(&["nilseq", "--length", "1e9"]), Some(3));
    assert_eq!(code(&["gowers", "--s", "4", "--N", "1e6", "--method", "direct"]), Some(3));
}

#[test]
fn scientific_counts_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let (a, x) = run_to(dir.path(), "a.json", &["sieve", "--N", "1e4"]);
    let (b, y) = run_to(dir.path(), "b.json", &["sieve", "--N", "10000"]);
    assert!(a.status.success() && b.status.success());
    let (x, y): (Value, Value) = (serde_json::from_str(&x).unwrap(), serde_json::from_str(&y).unwrap());
    assert_eq!(x["result"], y["result"]);
}
