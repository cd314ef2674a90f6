#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use persal::fgrd;
use persal::formats::{AnnotationRecord, DetectionEntry, DetectionRecord, ImageId, MappingFile, PvecFile};
use persal_core::synth::{synth_dataset, SynthConfig, SynthDataset};
use persal_core::DetectionSet;

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn persal(cwd: &Path, args: &[&str]) -> Output {
    persal_env(cwd, args, &[])
}

pub fn persal_env(cwd: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_persal"));
    cmd.current_dir(cwd).args(args).env_remove("PERSAL_JOBS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn record(id: u64, set: &DetectionSet) -> DetectionRecord {
    DetectionRecord {
        image_id: ImageId::Number(id),
        width: set.image_w(),
        height: set.image_h(),
        timestamp: set.timestamp(),
        detections: set
            .detections()
            .iter()
            .map(|d| DetectionEntry { category_id: d.category_id, score: d.confidence, bbox: [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h] })
            .collect(),
    }
}

pub struct Fixture {
    pub data: SynthDataset,
    pub annotations: PathBuf,
    pub mapping: PathBuf,
    pub pvec: PathBuf,
    pub fixations: PathBuf,
}

/// Writes a synthetic annotated dataset under `dir`: `fix/<i>.fgrd`,
/// `annotations.json`, `mapping.json` and `pvec.json`.
pub fn write_fixture(dir: &Path, cfg: &SynthConfig, seed: u64) -> Fixture {
    let data = synth_dataset(cfg, seed);
    let fixations = dir.join("fix");
    fs::create_dir_all(&fixations).unwrap();
    let mut records = Vec::new();
    for (i, img) in data.images.iter().enumerate() {
        fgrd::write_grid(&img.sal, fixations.join(format!("{i}.fgrd"))).unwrap();
        records.push(AnnotationRecord { record: record(i as u64, &img.boxes), fixation: format!("fix/{i}.fgrd").into() });
    }
    let annotations = dir.join("annotations.json");
    fs::write(&annotations, serde_json::to_string_pretty(&records).unwrap()).unwrap();
    let mapping = dir.join("mapping.json");
    fs::write(&mapping, serde_json::to_string(&MappingFile::from_mapping(&data.mapping)).unwrap()).unwrap();
    let pvec = dir.join("pvec.json");
    fs::write(&pvec, serde_json::to_string(&PvecFile::from_pvec(&data.pvec)).unwrap()).unwrap();
    Fixture { data, annotations, mapping, pvec, fixations }
}

/// Relative file paths and contents of every file under `dir`, sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
