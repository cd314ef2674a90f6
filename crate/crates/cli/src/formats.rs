//! JSON configs and manifests, plus the plain CSV grid format.
//!
//! Mapping file:
//! `{"super_categories": [...], "map": {"17": 0, "dog": 0, ...}, "catch_all": 1}`
//! where map keys are numeric category ids or COCO category names.
//!
//! Preference vector file: `{"names": [...], "weights": [...]}`.
//!
//! Detection manifest: an array (or a single record) of
//! `{"image_id", "width", "height", "timestamp"?, "detections": [{"category_id", "score", "bbox": [x, y, w, h]}]}`.
//! Annotation manifests use the same records plus `"fixation"`, the path of
//! an FGRD fixation map relative to the manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use persal_core::{BBox, CategoryMapping, Detection, DetectionSet, PreferenceVector, SaliencyGrid};
use serde::{Deserialize, Serialize};

use crate::coco;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingFile {
    pub super_categories: Vec<String>,
    pub map: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catch_all: Option<usize>,
}

impl MappingFile {
    pub fn to_mapping(&self) -> CliResult<CategoryMapping> {
        let mut entries = BTreeMap::new();
        for (key, &sup) in &self.map {
            let id = match key.trim().parse::<u32>() {
                Ok(id) => id,
                Err(_) => coco::category_id(key.trim())
                    .ok_or_else(|| CliError::invalid(format!("unknown category name {key:?} in mapping")))?,
            };
            if entries.insert(id, sup).is_some_and(|prev| prev != sup) {
                return Err(CliError::invalid(format!("category {id} is mapped twice")));
            }
        }
        Ok(CategoryMapping::new(self.super_categories.clone(), entries, self.catch_all)?)
    }

    pub fn from_mapping(m: &CategoryMapping) -> Self {
        Self {
            super_categories: m.super_names().to_vec(),
            map: m.entries().iter().map(|(id, sup)| (id.to_string(), *sup)).collect(),
            catch_all: m.catch_all(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvecFile {
    pub names: Vec<String>,
    pub weights: Vec<f64>,
}

impl PvecFile {
    pub fn to_pvec(&self) -> CliResult<PreferenceVector> {
        Ok(PreferenceVector::new(self.names.clone(), self.weights.clone())?)
    }

    pub fn from_pvec(p: &PreferenceVector) -> Self {
        Self { names: p.names().to_vec(), weights: p.weights().to_vec() }
    }
}

/// COCO image ids are integers; other datasets use strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImageId {
    Number(u64),
    Text(String),
}

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageId::Number(n) => write!(f, "{n}"),
            ImageId::Text(s) => f.write_str(s),
        }
    }
}

impl ImageId {
    /// The id as a file stem; ids that could escape the output directory are
    /// rejected.
    pub fn file_stem(&self) -> CliResult<String> {
        let s = self.to_string();
        let bad = s.is_empty() || s == "." || s == ".." || s.contains(['/', '\\', '\0']);
        if bad {
            return Err(CliError::invalid(format!("image id {s:?} cannot be used as a file name")));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEntry {
    pub category_id: u32,
    pub score: f64,
    pub bbox: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: ImageId,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
    #[serde(default)]
    pub detections: Vec<DetectionEntry>,
}

impl DetectionRecord {
    pub fn to_set(&self) -> CliResult<DetectionSet> {
        let dets = self
            .detections
            .iter()
            .map(|d| {
                let [x, y, w, h] = d.bbox;
                Detection::new(d.category_id, d.score, BBox::new(x, y, w, h))
            })
            .collect();
        DetectionSet::new(self.width, self.height, dets, self.timestamp)
            .map_err(|e| CliError::invalid(format!("image {}: {e}", self.image_id)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    #[serde(flatten)]
    pub record: DetectionRecord,
    pub fixation: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    Many(Vec<T>),
    One(T),
}

impl<T> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::Many(v) => v,
            OneOrMany::One(t) => vec![t],
        }
    }
}

pub fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8], path: &Path) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Rejects duplicate image ids.
pub fn ensure_unique_ids<'a>(ids: impl IntoIterator<Item = &'a ImageId>) -> CliResult<()> {
    let mut seen = std::collections::BTreeSet::new();
    for id in ids {
        if !seen.insert(id.to_string()) {
            return Err(CliError::invalid(format!("duplicate image id {id}")));
        }
    }
    Ok(())
}

/// `"38x38"` (height x width).
pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    if h == 0 || w == 0 {
        return Err(format!("dimensions must be positive, got {s:?}"));
    }
    Ok((h, w))
}

/// Comma-separated floats.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?}")))
        .collect()
}

/// `"0.8:0.2"` or `"0.8,0.2"`.
pub fn parse_ratio(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once([':', ',']).ok_or_else(|| format!("expected BETA:GAMMA, got {s:?}"))?;
    let a = a.trim().parse().map_err(|_| format!("bad number in {s:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad number in {s:?}"))?;
    Ok((a, b))
}

/// One CSV row per grid row, no header.
pub fn grid_to_csv(grid: &SaliencyGrid) -> String {
    let mut out = String::new();
    for r in 0..grid.height() {
        let row: Vec<String> = (0..grid.width()).map(|c| grid.get(r, c).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn grid_from_csv(bytes: &[u8], path: &Path) -> CliResult<SaliencyGrid> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(bytes);
    let mut values = Vec::new();
    let mut rows = 0;
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|source| CliError::Csv { path: path.to_path_buf(), source })?;
        if width.is_some_and(|w| w != record.len()) {
            return Err(CliError::invalid(format!("{}: ragged row {}", path.display(), rows + 1)));
        }
        width = Some(record.len());
        for field in &record {
            let v = field
                .parse::<f64>()
                .map_err(|_| CliError::invalid(format!("{}: bad number {field:?}", path.display())))?;
            values.push(v);
        }
        rows += 1;
    }
    Ok(SaliencyGrid::new(rows, width.unwrap_or(0), values)?)
}
