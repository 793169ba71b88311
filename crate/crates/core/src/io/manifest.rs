//! Dataset manifests and registration tables.
//!
//! `manifest.csv` has the header
//! `path,label,subject_id,binding_ratio,scale,rotation_deg,translation,pose_scale,asymmetry`
//! plus a trailing `provenance` column once the volumes have been
//! preprocessed. Only `path`, `label` and `subject_id` are required; the rest
//! are phantom ground truth and may be empty. Rotation and translation are
//! `;`-separated `x;y;z` triples. Relative paths resolve against the
//! manifest's directory.
//!
//! `transforms.csv` maps `subject_id` to the 12 row-major parameters of the
//! affine matrix that registers that subject's volume to the template.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::preprocess::AffineMatrix;
use crate::Label;

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const TRANSFORMS_FILE: &str = "transforms.csv";

const BASE_COLUMNS: [&str; 9] =
    ["path", "label", "subject_id", "binding_ratio", "scale", "rotation_deg", "translation", "pose_scale", "asymmetry"];

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub path: String,
    pub label: Label,
    pub subject_id: String,
    pub binding_ratio: Option<f64>,
    pub scale: Option<f64>,
    pub rotation_deg: Option<[f64; 3]>,
    pub translation: Option<[f64; 3]>,
    pub pose_scale: Option<f64>,
    pub asymmetry: Option<f64>,
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    /// Directory relative paths are resolved against.
    pub root: PathBuf,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn resolve(&self, row: &ManifestRow) -> PathBuf {
        let p = Path::new(&row.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }
}

#[derive(Deserialize)]
struct RawRow {
    path: String,
    label: String,
    subject_id: String,
    #[serde(default)]
    binding_ratio: Option<f64>,
    #[serde(default)]
    scale: Option<f64>,
    #[serde(default)]
    rotation_deg: Option<String>,
    #[serde(default)]
    translation: Option<String>,
    #[serde(default)]
    pose_scale: Option<f64>,
    #[serde(default)]
    asymmetry: Option<f64>,
    #[serde(default)]
    provenance: Option<String>,
}

fn parse_triple(s: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = s
        .split(';')
        .map(|p| p.trim().parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}"))))
        .collect::<Result<_>>()?;
    v.try_into().map_err(|_| Error::Parse(format!("'{s}' is not an x;y;z triple")))
}

fn fmt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_triple(v: Option<[f64; 3]>) -> String {
    v.map(|t| format!("{};{};{}", t[0], t[1], t[2])).unwrap_or_default()
}

pub fn parse_manifest(text: &str, root: &Path) -> Result<Manifest> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<RawRow>().enumerate() {
        let raw = rec?;
        let label = raw.label.parse().map_err(|e| Error::Parse(format!("manifest row {}: {e}", i + 1)))?;
        let nonempty = |s: Option<String>| s.filter(|v| !v.is_empty());
        rows.push(ManifestRow {
            path: raw.path,
            label,
            subject_id: raw.subject_id,
            binding_ratio: raw.binding_ratio,
            scale: raw.scale,
            rotation_deg: nonempty(raw.rotation_deg).map(|s| parse_triple(&s)).transpose()?,
            translation: nonempty(raw.translation).map(|s| parse_triple(&s)).transpose()?,
            pose_scale: raw.pose_scale,
            asymmetry: raw.asymmetry,
            provenance: nonempty(raw.provenance),
        });
    }
    if rows.is_empty() {
        return Err(Error::Empty("manifest has no rows".into()));
    }
    Ok(Manifest { root: root.to_path_buf(), rows })
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&std::fs::read_to_string(path)?, &root)
}

pub fn manifest_to_string(rows: &[ManifestRow]) -> Result<String> {
    let with_prov = rows.iter().any(|r| r.provenance.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if with_prov {
        header.push("provenance");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.path.clone(),
            r.label.to_string(),
            r.subject_id.clone(),
            fmt_f64(r.binding_ratio),
            fmt_f64(r.scale),
            fmt_triple(r.rotation_deg),
            fmt_triple(r.translation),
            fmt_f64(r.pose_scale),
            fmt_f64(r.asymmetry),
        ];
        if with_prov {
            rec.push(r.provenance.clone().unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    into_string(w)
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    write_atomic(path, manifest_to_string(rows)?.as_bytes())
}

pub(crate) fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub type Transforms = BTreeMap<String, AffineMatrix>;

pub fn transforms_to_string(t: &Transforms) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["subject_id".to_string()];
    header.extend((0..12).map(|i| format!("a{}{}", i / 4, i % 4)));
    w.write_record(&header)?;
    for (id, m) in t {
        let mut rec = vec![id.clone()];
        rec.extend(m.params().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    into_string(w)
}

pub fn parse_transforms(text: &str) -> Result<Transforms> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Transforms::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 13 {
            return Err(Error::Parse(format!("transform row has {} fields, expected 13", rec.len())));
        }
        let mut p = [0.0; 12];
        for (i, v) in p.iter_mut().enumerate() {
            *v = rec[i + 1].parse().map_err(|e| Error::Parse(format!("transform of {}: {e}", &rec[0])))?;
        }
        out.insert(rec[0].to_string(), AffineMatrix::from_params(p)?);
    }
    Ok(out)
}

pub fn read_transforms(path: &Path) -> Result<Transforms> {
    parse_transforms(&std::fs::read_to_string(path)?)
}

pub fn write_transforms(path: &Path, t: &Transforms) -> Result<()> {
    write_atomic(path, transforms_to_string(t)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: usize) -> ManifestRow {
        ManifestRow {
            path: format!("sub-{i:04}.nvol"),
            label: if i.is_multiple_of(2) { Label::Control } else { Label::Pd },
            subject_id: format!("sub-{i:04}"),
            binding_ratio: Some(2.75),
            scale: Some(0.5),
            rotation_deg: Some([1.5, -2.0, 0.25]),
            translation: Some([0.0, 1.0, -1.0]),
            pose_scale: Some(1.01),
            asymmetry: None,
            provenance: None,
        }
    }

    #[test]
    fn round_trip() {
        let rows: Vec<_> = (0..3).map(row).collect();
        let text = manifest_to_string(&rows).unwrap();
        assert!(text.starts_with("path,label,subject_id,binding_ratio,scale,rotation_deg,translation"));
        let m = parse_manifest(&text, Path::new("/data")).unwrap();
        assert_eq!(m.rows, rows);
        assert_eq!(m.resolve(&m.rows[0]), Path::new("/data/sub-0000.nvol"));

        let mut prov = rows.clone();
        prov.iter_mut().for_each(|r| r.provenance = Some("int_u".into()));
        let text = manifest_to_string(&prov).unwrap();
        assert!(text.lines().next().unwrap().ends_with(",provenance"));
        assert_eq!(parse_manifest(&text, Path::new("")).unwrap().rows, prov);
    }

    #[test]
    fn minimal_columns_and_errors() {
        let m = parse_manifest("path,label,subject_id\na.nvol,hc,a\nb.nvol,pd,b\n", Path::new("")).unwrap();
        assert_eq!(m.labels(), vec![Label::Control, Label::Pd]);
        assert!(parse_manifest("path,label,subject_id\na.nvol,maybe,a\n", Path::new("")).is_err());
        assert!(parse_manifest("path,label,subject_id\n", Path::new("")).is_err());
    }

    #[test]
    fn transforms_round_trip() {
        let mut t = Transforms::new();
        t.insert("s1".into(), crate::preprocess::make_similarity(1.02, [3.0, -1.0, 7.5], [0.5, 0.0, -2.0]).unwrap());
        t.insert("s2".into(), AffineMatrix::IDENTITY);
        let back = parse_transforms(&transforms_to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
