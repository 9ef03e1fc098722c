#![allow(dead_code)]

use std::path::{Path, PathBuf};

use medbench_core::backends::{MockEntry, MockScript};
use medbench_core::dataset::load_manifest;
use medbench_core::DatasetManifest;

/// Smallest byte string the harness accepts as a PNG: the signature plus
/// an IHDR-shaped tail so base64 payloads differ per sample.
pub fn png_bytes(tag: u32) -> Vec<u8> {
    let mut b = vec![0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];
    b.extend_from_slice(&[0, 0, 0, 13, b'I', b'H', b'D', b'R']);
    b.extend_from_slice(&tag.to_be_bytes());
    b
}

pub struct SampleSpec {
    pub id: String,
    pub truth: String,
    pub split: Option<&'static str>,
}

pub fn spec(id: impl Into<String>, truth: &str, split: Option<&'static str>) -> SampleSpec {
    SampleSpec {
        id: id.into(),
        truth: truth.into(),
        split,
    }
}

/// Write images and a manifest into `dir`; returns the manifest path.
pub fn write_dataset(dir: &Path, modality: &str, labels: &str, samples: &[SampleSpec]) -> PathBuf {
    std::fs::create_dir_all(dir.join("img")).unwrap();
    let mut text = format!("dataset_id=fixture-{modality}\nmodality={modality}\nlabels={labels}\n");
    for (i, s) in samples.iter().enumerate() {
        let rel = format!("img/{}.png", s.id);
        std::fs::write(dir.join(&rel), png_bytes(i as u32)).unwrap();
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            s.id,
            rel,
            s.truth,
            s.split.unwrap_or("-")
        ));
    }
    let path = dir.join("manifest.tsv");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn manifest(path: &Path) -> DatasetManifest {
    load_manifest(path).unwrap()
}

pub fn entry(label: &str, confidence: Option<f64>, response: &str, time: f64) -> MockEntry {
    MockEntry {
        label: label.into(),
        confidence,
        response_text: response.into(),
        exec_time_s: Some(time),
    }
}

pub fn write_script(path: &Path, script: &MockScript) -> PathBuf {
    std::fs::write(path, script.render()).unwrap();
    path.to_path_buf()
}

pub fn reply_json(label: &str, confidence: f64, rationale: &str) -> String {
    serde_json::json!({ "label": label, "confidence": confidence, "rationale": rationale })
        .to_string()
}

/// Assigned X-ray labels in canonical order.
pub const XRAY: [&str; 4] = ["covid", "normal", "lung opacity", "viral pneumonia"];
