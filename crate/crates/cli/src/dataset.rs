//! Discovery of image / truth / field-of-view triples on disk.
//!
//! Three layouts are understood:
//!
//! * `drive`: `images/<n>_<set>.*`, truth `1st_manual/<n>_manual1.*`,
//!   fov `mask/<n>_<set>_mask.*`
//! * `stare`: `images/<id>.*`, truth `labels/<id>.ah.*`
//! * `flat`: `<id>.*` next to optional `<id>_truth.*` and `<id>_fov.*`

use crate::error::{CliError, Result};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Extensions the image decoder handles.
pub const IMAGE_EXTENSIONS: &[&str] = &["png", "ppm", "pgm", "pbm", "pnm", "tif", "tiff"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Drive,
    Stare,
    Flat,
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "drive" => Ok(Layout::Drive),
            "stare" => Ok(Layout::Stare),
            "flat" => Ok(Layout::Flat),
            other => Err(format!("unknown layout `{other}` (drive, stare, flat)")),
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Drive => "drive",
            Layout::Stare => "stare",
            Layout::Flat => "flat",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetRecord {
    pub id: String,
    pub image_path: PathBuf,
    pub truth_path: Option<PathBuf>,
    pub fov_path: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    /// Sorted by id.
    pub records: Vec<DatasetRecord>,
    /// Pairing problems found while scanning, one line each.
    pub warnings: Vec<String>,
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn is_gif(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("gif"))
}

/// Regular files of `dir` keyed by file name. A missing directory is empty.
fn list_files(dir: &Path, required: bool) -> Result<BTreeMap<String, PathBuf>> {
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => {
            return Ok(BTreeMap::new())
        }
        Err(e) => return Err(CliError::io(dir)(e)),
    };
    let mut out = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(CliError::io(dir))?;
        let path = entry.path();
        if path.is_file() {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                out.insert(name.to_string(), path);
            }
        }
    }
    Ok(out)
}

/// File name without its last extension.
fn stem(name: &str) -> &str {
    name.rsplit_once('.').map_or(name, |(s, _)| s)
}

/// Finds the decodable file in `files` whose stem is exactly `wanted`.
fn find_companion(
    files: &BTreeMap<String, PathBuf>,
    wanted: &str,
    id: &str,
    what: &str,
    warnings: &mut Vec<String>,
) -> Option<PathBuf> {
    let candidates: Vec<&PathBuf> = files
        .iter()
        .filter(|(name, _)| stem(name) == wanted)
        .map(|(_, p)| p)
        .collect();
    let usable: Vec<&PathBuf> = candidates.iter().copied().filter(|p| is_image(p)).collect();
    match usable.as_slice() {
        [] => {
            if candidates.iter().any(|p| is_gif(p)) {
                warnings.push(format!(
                    "{id}: {what} is GIF only; convert it to PNG to use it"
                ));
            }
            None
        }
        [one] => Some((*one).clone()),
        [first, ..] => {
            warnings.push(format!(
                "{id}: {} candidate {what} files, using {}",
                usable.len(),
                first.display()
            ));
            Some((*first).clone())
        }
    }
}

/// Scans `root` in the given layout. Ids listed in `exclude` are dropped.
pub fn load_dataset(root: &Path, layout: Layout, exclude: &[String]) -> Result<Dataset> {
    if !root.is_dir() {
        return Err(CliError::Input(format!(
            "{} is not a readable directory",
            root.display()
        )));
    }
    let mut ds = Dataset::default();
    let image_dir = match layout {
        Layout::Drive | Layout::Stare => root.join("images"),
        Layout::Flat => root.to_path_buf(),
    };
    let images = list_files(&image_dir, true)?;
    let (truths, fovs) = match layout {
        Layout::Drive => (
            list_files(&root.join("1st_manual"), false)?,
            list_files(&root.join("mask"), false)?,
        ),
        Layout::Stare => (list_files(&root.join("labels"), false)?, BTreeMap::new()),
        Layout::Flat => (images.clone(), images.clone()),
    };

    for (name, path) in &images {
        let id = stem(name);
        if layout == Layout::Flat && (id.ends_with("_truth") || id.ends_with("_fov")) {
            continue;
        }
        if !is_image(path) {
            if is_gif(path) {
                ds.warnings
                    .push(format!("{id}: GIF images are not supported, skipped"));
            }
            continue;
        }
        if exclude.iter().any(|e| e == id) {
            continue;
        }
        let (truth_stem, fov_stem) = match layout {
            Layout::Drive => {
                let number = id.split('_').next().unwrap_or(id);
                (format!("{number}_manual1"), Some(format!("{id}_mask")))
            }
            Layout::Stare => (format!("{id}.ah"), None),
            Layout::Flat => (format!("{id}_truth"), Some(format!("{id}_fov"))),
        };
        let truth_path = find_companion(&truths, &truth_stem, id, "truth", &mut ds.warnings);
        let fov_path =
            fov_stem.and_then(|s| find_companion(&fovs, &s, id, "fov", &mut ds.warnings));
        ds.records.push(DatasetRecord {
            id: id.to_string(),
            image_path: path.clone(),
            truth_path,
            fov_path,
        });
    }
    ds.records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(ds)
}
