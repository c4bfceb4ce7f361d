//! Drives the `xmodal` binary through a small synthetic run.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use xmodal::store::sha256_hex;

pub fn xmodal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xmodal"))
        .current_dir(dir)
        .env_remove(xmodal::LOG_ENV)
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs the command and panics with its stderr unless it exits 0.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = xmodal(dir, args);
    assert!(
        out.status.success(),
        "xmodal {}: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const ADAPTER: &str = "[adapter]\nd_in = 16\nd_h = 6\nd_txt = 8\nt_max = 12\n";

fn stage_config(out: &str, params_in: Option<&str>, steps: u32) -> String {
    let mut s = format!("[run]\nseed = 5\nlog = warn\n[paths]\ntrain = data/train.jsonl\nval = data/val.jsonl\nout = {out}\n");
    if let Some(p) = params_in {
        s += &format!("params_in = {p}\n");
    }
    s + ADAPTER + &format!("[stage]\nsteps = {steps}\nbatch_size = 4\neval_every = 5\n")
}

/// gen, stage1, stage2, stage3, joint, infer and evaluation, all inside `dir`.
/// Returns the pwcca printout.
pub fn run(dir: &Path) -> String {
    fs::write(
        dir.join("synth.ini"),
        "[run]\nseed = 5\n[synth]\nn_train = 24\nn_val = 6\nlen_min = 16\nlen_max = 40\nseed = 11\n",
    )
    .unwrap();
    ok(
        dir,
        &["synth", "gen", "--config", "synth.ini", "--out", "data"],
    );
    let stages = [
        ("stage1", "s1.ini", "out/s1", None),
        ("stage2", "s2.ini", "out/s2", Some("out/s1")),
        ("stage3", "s3.ini", "out/s3", Some("out/s2")),
        ("joint", "joint.ini", "out/joint", Some("out/s3")),
    ];
    for (stage, file, out, params_in) in stages {
        fs::write(dir.join(file), stage_config(out, params_in, 12)).unwrap();
        ok(dir, &["train", stage, "--config", file]);
    }
    ok(
        dir,
        &[
            "infer",
            "--manifest",
            "data/val.jsonl",
            "--params",
            "out/s3",
            "--out",
            "gen",
        ],
    );
    ok(
        dir,
        &[
            "infer",
            "--features",
            "data/features/val-00000.cmtf",
            "--params",
            "out/joint",
            "--out",
            "single.cmtf",
        ],
    );
    let pwcca = ok(
        dir,
        &[
            "eval",
            "pwcca",
            "--x",
            "gen/generated.cmtf",
            "--y",
            "gen/reference.cmtf",
        ],
    );
    fs::write(dir.join("pwcca.txt"), &pwcca).unwrap();
    pwcca
}

/// SHA-256 of every file below `dir` except run metadata, keyed by relative path.
pub fn digests(dir: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if path.file_name().is_some_and(|n| n != "run.json") {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, sha256_hex(&fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
