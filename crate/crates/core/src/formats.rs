//! CSV files exchanged between pipeline stages: frame manifests, label
//! sequences, ground truth, events and prototype lists.
//!
//! Lines starting with `#` are comments and are skipped on read.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};

use crate::error::{Error, Result};
use crate::metrics::TruthLabel;
use crate::scene::{FrameLabel, Label, SceneTally};
use crate::timeline::EventSegment;

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("bad timestamp '{s}': {e}"))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn parse_error(origin: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_string(),
        message: message.into(),
    }
}

fn row_error(origin: &str, record: &csv::StringRecord, message: impl std::fmt::Display) -> Error {
    let line = record.position().map(|p| p.line()).unwrap_or(0);
    parse_error(origin, format!("row at line {line}: {message}"))
}

fn csv_error(origin: &str, e: csv::Error) -> Error {
    parse_error(origin, e.to_string())
}

fn expect_header(origin: &str, headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(parse_error(
            origin,
            format!("expected header '{}', found '{}'", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn open_file(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_file(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub frame_id: String,
    pub path: PathBuf,
    pub timestamp: DateTime<Utc>,
}

/// Reads `frame_id,path,timestamp`; relative paths resolve against `base_dir`.
pub fn read_manifest_from<R: Read>(input: R, base_dir: &Path, origin: &str) -> Result<Vec<ManifestEntry>> {
    let mut rdr = reader(input);
    expect_header(origin, rdr.headers().map_err(|e| csv_error(origin, e))?, &["frame_id", "path", "timestamp"])?;
    let mut entries: Vec<ManifestEntry> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(origin, e))?;
        let timestamp = parse_timestamp(&rec[2]).map_err(|m| row_error(origin, &rec, m))?;
        let path = PathBuf::from(&rec[1]);
        let entry = ManifestEntry {
            frame_id: rec[0].to_string(),
            path: if path.is_absolute() { path } else { base_dir.join(path) },
            timestamp,
        };
        if let Some(prev) = entries.last() {
            if entry.timestamp < prev.timestamp {
                return Err(Error::InvalidSequence(format!(
                    "{origin}: frame '{}' is earlier than '{}'",
                    entry.frame_id, prev.frame_id
                )));
            }
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    read_manifest_from(open_file(path)?, base, &path.display().to_string())
}

pub fn write_manifest<W: Write>(out: W, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::input(e.to_string());
    w.write_record(["frame_id", "path", "timestamp"]).map_err(err)?;
    for e in entries {
        w.write_record([
            e.frame_id.as_str(),
            &e.path.to_string_lossy(),
            &format_timestamp(&e.timestamp),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::input(e.to_string()))
}

/// Writes `frame_id,timestamp,label,<scene>_count,<scene>_max,...`.
/// `comment`, when given, becomes a leading `# ...` line.
pub fn write_labels<W: Write>(mut out: W, scenes: &[String], labels: &[FrameLabel], comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}").map_err(|e| Error::input(e.to_string()))?;
    }
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::input(e.to_string());
    let mut header = vec!["frame_id".to_string(), "timestamp".to_string(), "label".to_string()];
    for s in scenes {
        header.push(format!("{s}_count"));
        header.push(format!("{s}_max"));
    }
    w.write_record(&header).map_err(err)?;
    for l in labels {
        let mut row = vec![l.frame_id.clone(), format_timestamp(&l.timestamp), l.label.to_string()];
        for s in scenes {
            let (count, max) = l.tally(s).map(|t| (t.count, t.max_response)).unwrap_or((0, 0.0));
            row.push(count.to_string());
            row.push(format!("{max:?}"));
        }
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::input(e.to_string()))
}

pub fn save_labels(path: &Path, scenes: &[String], labels: &[FrameLabel], comment: Option<&str>) -> Result<()> {
    let mut buf = Vec::new();
    write_labels(&mut buf, scenes, labels, comment)?;
    std::fs::write(path, buf).map_err(io_err(path))
}

/// Parses a labels file; returns the scene columns (in order) and the rows.
pub fn read_labels_from<R: Read>(input: R, origin: &str) -> Result<(Vec<String>, Vec<FrameLabel>)> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(origin, e))?.clone();
    if headers.len() < 3 || &headers[0] != "frame_id" || &headers[1] != "timestamp" || &headers[2] != "label" {
        return Err(parse_error(origin, "header must start with 'frame_id,timestamp,label'"));
    }
    if (headers.len() - 3) % 2 != 0 {
        return Err(parse_error(origin, "scene columns must come in <scene>_count,<scene>_max pairs"));
    }
    let mut scenes = Vec::new();
    for pair in (3..headers.len()).step_by(2) {
        let scene = headers[pair]
            .strip_suffix("_count")
            .filter(|s| headers[pair + 1].strip_suffix("_max") == Some(*s))
            .ok_or_else(|| {
                parse_error(
                    origin,
                    format!("columns '{}','{}' are not a <scene>_count,<scene>_max pair", &headers[pair], &headers[pair + 1]),
                )
            })?;
        scenes.push(scene.to_string());
    }

    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(origin, e))?;
        let timestamp = parse_timestamp(&rec[1]).map_err(|m| row_error(origin, &rec, m))?;
        let label: Label = rec[2].parse().map_err(|e| row_error(origin, &rec, e))?;
        let mut tallies = Vec::with_capacity(scenes.len());
        for (i, scene) in scenes.iter().enumerate() {
            let count = rec[3 + 2 * i]
                .parse::<usize>()
                .map_err(|e| row_error(origin, &rec, format!("{scene}_count: {e}")))?;
            let max_response = rec[4 + 2 * i]
                .parse::<f64>()
                .map_err(|e| row_error(origin, &rec, format!("{scene}_max: {e}")))?;
            tallies.push(SceneTally {
                scene: scene.clone(),
                count,
                max_response,
            });
        }
        labels.push(FrameLabel {
            frame_id: rec[0].to_string(),
            timestamp,
            label,
            tallies,
        });
    }
    Ok((scenes, labels))
}

pub fn read_labels(path: &Path) -> Result<(Vec<String>, Vec<FrameLabel>)> {
    read_labels_from(open_file(path)?, &path.display().to_string())
}

pub fn read_truth_from<R: Read>(input: R, origin: &str) -> Result<Vec<TruthLabel>> {
    let mut rdr = reader(input);
    expect_header(origin, rdr.headers().map_err(|e| csv_error(origin, e))?, &["frame_id", "label"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(origin, e))?;
        let label = rec[1].parse().map_err(|e| row_error(origin, &rec, e))?;
        out.push(TruthLabel {
            frame_id: rec[0].to_string(),
            label,
        });
    }
    Ok(out)
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthLabel>> {
    read_truth_from(open_file(path)?, &path.display().to_string())
}

pub fn write_truth<W: Write>(out: W, truth: &[TruthLabel]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::input(e.to_string());
    w.write_record(["frame_id", "label"]).map_err(err)?;
    for t in truth {
        w.write_record([t.frame_id.clone(), t.label.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::input(e.to_string()))
}

/// Writes `scene,start,end,duration_seconds,n_frames`.
pub fn write_events<W: Write>(mut out: W, events: &[EventSegment], comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}").map_err(|e| Error::input(e.to_string()))?;
    }
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::input(e.to_string());
    w.write_record(["scene", "start", "end", "duration_seconds", "n_frames"]).map_err(err)?;
    for e in events {
        w.write_record([
            e.scene.clone(),
            format_timestamp(&e.start),
            format_timestamp(&e.end),
            format!("{}", e.duration_seconds()),
            e.frame_ids.len().to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::input(e.to_string()))
}

/// One prototype keypoint to configure a filter from.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeEntry {
    pub image: PathBuf,
    pub keypoint: (usize, usize),
    pub scene: String,
    pub name: String,
}

/// Reads `image,keypoint_x,keypoint_y,scene,name`; relative image paths resolve against `base_dir`.
pub fn read_prototypes_from<R: Read>(input: R, base_dir: &Path, origin: &str) -> Result<Vec<PrototypeEntry>> {
    let mut rdr = reader(input);
    expect_header(
        origin,
        rdr.headers().map_err(|e| csv_error(origin, e))?,
        &["image", "keypoint_x", "keypoint_y", "scene", "name"],
    )?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(origin, e))?;
        let coord = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|e| row_error(origin, &rec, format!("keypoint: {e}")))
        };
        let image = PathBuf::from(&rec[0]);
        out.push(PrototypeEntry {
            image: if image.is_absolute() { image } else { base_dir.join(image) },
            keypoint: (coord(1)?, coord(2)?),
            scene: rec[3].to_string(),
            name: rec[4].to_string(),
        });
    }
    Ok(out)
}

pub fn read_prototypes(path: &Path) -> Result<Vec<PrototypeEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    read_prototypes_from(open_file(path)?, base, &path.display().to_string())
}

pub fn write_prototypes<W: Write>(out: W, entries: &[PrototypeEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::input(e.to_string());
    w.write_record(["image", "keypoint_x", "keypoint_y", "scene", "name"]).map_err(err)?;
    for e in entries {
        w.write_record([
            e.image.to_string_lossy().into_owned(),
            e.keypoint.0.to_string(),
            e.keypoint.1.to_string(),
            e.scene.clone(),
            e.name.clone(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::input(e.to_string()))
}

/// Creates `path` and hands a writer to `f`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>) -> Result<()> {
    let mut w = std::io::BufWriter::new(create_file(path)?);
    f(&mut w)?;
    w.flush().map_err(io_err(path))
}
