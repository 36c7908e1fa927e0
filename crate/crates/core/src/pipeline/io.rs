//! Plain-text file formats.
//!
//! * detections: `frame,id,left,top,width,height,score,-1,-1,-1`
//! * ground truth: `frame,id,left,top,width,height,flag,class,visibility`
//! * correspondences: `t t' px py px' py'`, one match per line
//! * tracks: `frame,track_id,left,top,width,height,-1,-1,-1,-1`
//!
//! Floats are written with Rust's shortest round-trip formatting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::CorrespondenceSet;
use crate::graph::{BoundingBox, Detection};
use crate::tracks::{Track, TrackBox};
use crate::truth::{GroundTruth, GtBox};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

struct Rows<'a> {
    path: &'a Path,
}

impl Rows<'_> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    fn fields<'s>(&self, line: usize, text: &'s str, sep: Option<char>, expected: usize) -> Result<Vec<&'s str>> {
        let fields: Vec<&str> = match sep {
            Some(c) => text.split(c).map(str::trim).collect(),
            None => text.split_whitespace().collect(),
        };
        if fields.len() != expected {
            return Err(self.err(line, format!("expected {expected} fields, found {}", fields.len())));
        }
        Ok(fields)
    }

    fn num<T: std::str::FromStr>(&self, line: usize, field: &str, what: &str) -> Result<T> {
        field
            .parse()
            .map_err(|_| self.err(line, format!("bad {what} '{field}'")))
    }
}

/// Non-empty, non-comment lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Detection ids are assigned in row order; the file's id column is ignored.
pub fn load_detections(path: &Path) -> Result<Vec<Detection>> {
    parse_detections(&read(path)?, path)
}

pub fn parse_detections(text: &str, path: &Path) -> Result<Vec<Detection>> {
    let rows = Rows { path };
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let f = rows.fields(line, l, Some(','), 10)?;
        let frame: u32 = rows.num(line, f[0], "frame")?;
        let left: f64 = rows.num(line, f[2], "left")?;
        let top: f64 = rows.num(line, f[3], "top")?;
        let w: f64 = rows.num(line, f[4], "width")?;
        let h: f64 = rows.num(line, f[5], "height")?;
        let score: f64 = rows.num(line, f[6], "score")?;
        let det = Detection::from_tlwh(out.len(), frame, left, top, w, h, score)
            .map_err(|e| rows.err(line, e.to_string()))?;
        out.push(det);
    }
    Ok(out)
}

pub fn format_detections(detections: &[Detection]) -> String {
    let mut out = String::new();
    for d in detections {
        let b = d.bbox();
        let _ = writeln!(out, "{},-1,{},{},{},{},{},-1,-1,-1", d.frame, b.left, b.top, b.width, b.height, d.score);
    }
    out
}

/// Rows with flag 0 are skipped.
pub fn load_gt(path: &Path) -> Result<GroundTruth> {
    parse_gt(&read(path)?, path)
}

pub fn parse_gt(text: &str, path: &Path) -> Result<GroundTruth> {
    let rows = Rows { path };
    let mut boxes = Vec::new();
    for (line, l) in content_lines(text) {
        let f = rows.fields(line, l, Some(','), 9)?;
        let frame: u32 = rows.num(line, f[0], "frame")?;
        let id: i64 = rows.num(line, f[1], "id")?;
        let left: f64 = rows.num(line, f[2], "left")?;
        let top: f64 = rows.num(line, f[3], "top")?;
        let width: f64 = rows.num(line, f[4], "width")?;
        let height: f64 = rows.num(line, f[5], "height")?;
        let flag: i64 = rows.num(line, f[6], "flag")?;
        let _class: i64 = rows.num(line, f[7], "class")?;
        let visibility: f64 = rows.num(line, f[8], "visibility")?;
        if flag == 0 {
            continue;
        }
        if frame < 1 || !(width > 0.0 && height > 0.0) {
            return Err(rows.err(line, "frame must be >= 1 and box size positive"));
        }
        boxes.push(GtBox {
            frame,
            id,
            bbox: BoundingBox::new(left, top, width, height),
            visibility,
        });
    }
    Ok(GroundTruth::new(boxes))
}

pub fn format_gt(gt: &GroundTruth) -> String {
    let mut out = String::new();
    for b in &gt.boxes {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},1,1,{}",
            b.frame, b.id, b.bbox.left, b.bbox.top, b.bbox.width, b.bbox.height, b.visibility
        );
    }
    out
}

/// Match ids are assigned per frame pair in line order.
pub fn load_matches(path: &Path) -> Result<CorrespondenceSet> {
    parse_matches(&read(path)?, path)
}

pub fn parse_matches(text: &str, path: &Path) -> Result<CorrespondenceSet> {
    let rows = Rows { path };
    let mut set = CorrespondenceSet::new();
    for (line, l) in content_lines(text) {
        let f = rows.fields(line, l, None, 6)?;
        let t: u32 = rows.num(line, f[0], "frame")?;
        let t_next: u32 = rows.num(line, f[1], "frame")?;
        if t >= t_next {
            return Err(rows.err(line, format!("frames must be increasing, got {t} -> {t_next}")));
        }
        let p: Vec<f64> = f[2..]
            .iter()
            .map(|s| rows.num(line, s, "coordinate"))
            .collect::<Result<_>>()?;
        set.push(t, t_next, (p[0], p[1]), (p[2], p[3]))?;
    }
    Ok(set)
}

pub fn format_matches(set: &CorrespondenceSet) -> String {
    let mut out = String::new();
    for m in set.iter() {
        let _ = writeln!(out, "{} {} {} {} {} {}", m.t, m.t_next, m.src.0, m.src.1, m.dst.0, m.dst.1);
    }
    out
}

/// Rows ordered by frame, then track id.
pub fn format_tracks(tracks: &[Track]) -> String {
    let mut rows: Vec<(u32, usize, &TrackBox)> = tracks
        .iter()
        .flat_map(|t| t.boxes.iter().map(move |(&f, b)| (f, t.id, b)))
        .collect();
    rows.sort_by_key(|r| (r.0, r.1));
    let mut out = String::new();
    for (f, id, b) in rows {
        let bb = b.bbox();
        let _ = writeln!(out, "{f},{id},{},{},{},{},-1,-1,-1,-1", bb.left, bb.top, bb.width, bb.height);
    }
    out
}

pub fn load_tracks(path: &Path) -> Result<Vec<Track>> {
    parse_tracks(&read(path)?, path)
}

pub fn parse_tracks(text: &str, path: &Path) -> Result<Vec<Track>> {
    let rows = Rows { path };
    let mut tracks: BTreeMap<usize, BTreeMap<u32, TrackBox>> = BTreeMap::new();
    for (line, l) in content_lines(text) {
        let f = rows.fields(line, l, Some(','), 10)?;
        let frame: u32 = rows.num(line, f[0], "frame")?;
        let id: usize = rows.num(line, f[1], "track id")?;
        let left: f64 = rows.num(line, f[2], "left")?;
        let top: f64 = rows.num(line, f[3], "top")?;
        let w: f64 = rows.num(line, f[4], "width")?;
        let h: f64 = rows.num(line, f[5], "height")?;
        if !(w > 0.0 && h > 0.0) {
            return Err(rows.err(line, "box size must be positive"));
        }
        let b = TrackBox { x: left + w / 2.0, y: top + h / 2.0, w, h };
        if tracks.entry(id).or_default().insert(frame, b).is_some() {
            return Err(rows.err(line, format!("track {id} has two boxes in frame {frame}")));
        }
    }
    Ok(tracks.into_iter().map(|(id, boxes)| Track { id, boxes }).collect())
}

/// Sequence metadata in the MOT `seqinfo.ini` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqInfo {
    pub name: String,
    pub frames: u32,
    pub width: f64,
    pub height: f64,
}

pub fn format_seqinfo(info: &SeqInfo) -> String {
    format!(
        "[Sequence]\nname={}\nseqLength={}\nimWidth={}\nimHeight={}\n",
        info.name, info.frames, info.width, info.height
    )
}

pub fn parse_seqinfo(text: &str, path: &Path) -> Result<SeqInfo> {
    let rows = Rows { path };
    let mut kv = BTreeMap::new();
    for (line, l) in content_lines(text) {
        if l.starts_with('[') || l.starts_with(';') {
            continue;
        }
        let (k, v) = l.split_once('=').ok_or_else(|| rows.err(line, "expected key=value"))?;
        kv.insert(k.trim().to_string(), (line, v.trim().to_string()));
    }
    let get = |k: &str| kv.get(k).ok_or_else(|| rows.err(0, format!("missing key '{k}'")));
    let (l, frames) = get("seqLength")?;
    let frames = rows.num(*l, frames, "seqLength")?;
    let (l, width) = get("imWidth")?;
    let width = rows.num(*l, width, "imWidth")?;
    let (l, height) = get("imHeight")?;
    let height = rows.num(*l, height, "imHeight")?;
    Ok(SeqInfo {
        name: kv.get("name").map_or_else(|| "sequence".to_string(), |(_, v)| v.clone()),
        frames,
        width,
        height,
    })
}

/// File locations inside a sequence directory.
#[derive(Debug, Clone)]
pub struct SeqPaths {
    pub root: PathBuf,
}

impl SeqPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        SeqPaths { root: root.into() }
    }

    pub fn seqinfo(&self) -> PathBuf {
        self.root.join("seqinfo.ini")
    }

    pub fn detections(&self) -> PathBuf {
        self.root.join("det").join("det.txt")
    }

    pub fn gt(&self) -> PathBuf {
        self.root.join("gt").join("gt.txt")
    }

    pub fn matches(&self) -> PathBuf {
        self.root.join("matches.txt")
    }
}
