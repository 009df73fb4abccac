#![allow(dead_code)]

use std::path::{Path, PathBuf};

use geoaccess_cli::run_cli;

pub fn run(args: &[&str]) -> i32 {
    run_cli(std::iter::once("geoaccess").chain(args.iter().copied()))
}

pub fn run_ok(args: &[&str]) {
    assert_eq!(run(args), 0, "geoaccess {}", args.join(" "));
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows of a CSV as header-keyed maps.
pub fn records(path: &Path) -> Vec<std::collections::BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

/// Writes the seed-42 synthetic region into `dir`.
pub fn synth(dir: &Path) {
    run_ok(&["synth", "--seed", "42", "--out-dir", s(dir)]);
}

pub fn pipeline(region: &Path, out: &Path, extra: &[&str]) {
    let zones = region.join("zones.csv");
    let facilities = region.join("facilities.csv");
    let counties = region.join("counties.csv");
    let geometry = region.join("zones.geojson");
    let mut args = vec![
        "pipeline",
        "--zones",
        s(&zones),
        "--facilities",
        s(&facilities),
        "--counties",
        s(&counties),
        "--geometry",
        s(&geometry),
        "--out-dir",
        s(out),
    ];
    args.extend_from_slice(extra);
    run_ok(&args);
}
