//! Replays the checked-in fuzz seeds through the same entry points as the
//! fuzz targets, so that a broken seed or a parser panic shows up in the
//! ordinary test run.

use std::fs;
use std::path::PathBuf;

use gmi_core::alber::StabilityVerdict;
use gmi_core::io::{decode_field_with_sidecar, encode_field};
use gmi_core::seastate::parse_modes_csv;
use gmi_core::spectrum::parse_spectrum_csv;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn spectrum_csv_seeds() {
    let accepted: Vec<_> = seeds("spectrum_csv")
        .into_iter()
        .filter(|(_, d)| parse_spectrum_csv(d.as_slice()).is_ok())
        .map(|(n, _)| n)
        .collect();
    assert_eq!(accepted, ["comment.csv", "triangle.csv"]);
}

#[test]
fn modes_csv_seeds() {
    for (name, data) in seeds("modes_csv") {
        assert_eq!(parse_modes_csv(data.as_slice()).is_ok(), name == "two_modes.csv", "{name}");
    }
}

#[test]
fn run_config_seeds() {
    for (name, data) in seeds("run_config") {
        let cfg = gmi_cli::parse_config(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = serde_json::to_string(&cfg).unwrap();
        assert_eq!(gmi_cli::parse_config(&again).unwrap(), cfg);
    }
}

#[test]
fn raw_field_seeds() {
    for (name, data) in seeds("raw_field") {
        let split = data.iter().position(|&b| b == 0).unwrap();
        let json = std::str::from_utf8(&data[..split]).unwrap();
        let raw = &data[split + 1..];
        match decode_field_with_sidecar(raw, json) {
            Ok((side, snaps)) => {
                assert_eq!(name, "two_by_two.bin");
                assert_eq!(snaps.len(), side.times.len());
                assert_eq!(encode_field(&snaps), raw);
            }
            Err(_) => assert_eq!(name, "short_raw.bin"),
        }
    }
}

#[test]
fn verdict_json_seeds() {
    for (name, data) in seeds("verdict_json") {
        let v = StabilityVerdict::from_json(std::str::from_utf8(&data).unwrap()).unwrap();
        assert_eq!(v.unstable, name == "unstable.json");
    }
}
