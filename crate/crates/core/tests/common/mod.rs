#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use qoetm_core::{generate_corpus, GenParams, Scenario, TargetGrid, UtilityCurve};

pub fn data(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join(path)
}

/// Rows of a golden CSV as string maps keyed by header.
pub fn read_rows(path: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(data(path)).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            headers
                .iter()
                .zip(rec.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

pub fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key]
        .parse()
        .unwrap_or_else(|_| panic!("{key}={}", row[key]))
}

pub fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// 5 clips x 6 sessions x 220 windows from the default corpus.
pub fn reference_scenario() -> Scenario {
    let clips: Vec<_> = generate_corpus(&GenParams::default())
        .unwrap()
        .into_iter()
        .map(Arc::new)
        .collect();
    Scenario::from_clips(
        &clips,
        6,
        220,
        TargetGrid::default(),
        UtilityCurve::default(),
    )
    .unwrap()
}
