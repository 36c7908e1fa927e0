//! Pairwise features for tracking-graph edges.
//!
//! Two schemes are supported. [`Scheme::Dm`] summarises how many point
//! correspondences between two frames agree with a pair of boxes, combined
//! with the weaker detection confidence. [`Scheme::St`] is the purely
//! geometric baseline built from box offsets, scale change and overlap.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{iou_unchecked, Detection};
use crate::truth::GroundTruth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Correspondence overlap features `(f1..f5)`.
    Dm,
    /// Geometric features `(dt, dx, dy, dh, iou, score_min)`.
    St,
}

impl Scheme {
    pub fn dim(self) -> usize {
        match self {
            Scheme::Dm => 5,
            Scheme::St => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Dm => "dm",
            Scheme::St => "st",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dm" => Ok(Scheme::Dm),
            "st" => Ok(Scheme::St),
            other => Err(Error::invalid(format!("unknown feature scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub scheme: Scheme,
    pub values: Vec<f64>,
}

/// A single correspondence from frame `t` to a later frame `t_next`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMatch {
    pub id: usize,
    pub t: u32,
    pub t_next: u32,
    pub src: (f64, f64),
    pub dst: (f64, f64),
}

/// Point correspondences grouped by ordered frame pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrespondenceSet {
    pairs: BTreeMap<(u32, u32), Vec<PointMatch>>,
}

impl CorrespondenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a match, numbering it after the matches already stored for its
    /// frame pair.
    pub fn push(&mut self, t: u32, t_next: u32, src: (f64, f64), dst: (f64, f64)) -> Result<usize> {
        if t >= t_next {
            return Err(Error::invalid(format!(
                "match frames must be increasing, got {t} -> {t_next}"
            )));
        }
        let list = self.pairs.entry((t, t_next)).or_default();
        let id = list.len();
        list.push(PointMatch { id, t, t_next, src, dst });
        Ok(id)
    }

    /// Insert a match with an explicit id.
    pub fn insert(&mut self, m: PointMatch) -> Result<()> {
        if m.t >= m.t_next {
            return Err(Error::invalid(format!(
                "match frames must be increasing, got {} -> {}",
                m.t, m.t_next
            )));
        }
        let list = self.pairs.entry((m.t, m.t_next)).or_default();
        if list.iter().any(|o| o.id == m.id) {
            return Err(Error::invalid(format!(
                "duplicate match id {} for frames ({}, {})",
                m.id, m.t, m.t_next
            )));
        }
        list.push(m);
        Ok(())
    }

    pub fn get(&self, t: u32, t_next: u32) -> &[PointMatch] {
        self.pairs.get(&(t, t_next)).map_or(&[], Vec::as_slice)
    }

    pub fn frame_pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pairs.keys().copied()
    }

    /// All matches in frame-pair order, then insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &PointMatch> + '_ {
        self.pairs.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.pairs.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sizes of the intersection and union of two boxes' match sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOverlap {
    pub mi: usize,
    pub mu: usize,
    /// Set when the detections share a frame and no correspondences apply.
    pub no_correspondence: bool,
}

/// Count correspondences supporting a detection pair.
///
/// The earlier detection's set holds the matches whose source point lies in
/// its box; the later detection's set holds those whose target point lies in
/// its box. A match in both sets links the two boxes.
pub fn match_sets(v: &Detection, w: &Detection, c: &CorrespondenceSet) -> MatchOverlap {
    if v.frame == w.frame {
        return MatchOverlap {
            mi: 0,
            mu: 0,
            no_correspondence: true,
        };
    }
    let (early, late) = if v.frame < w.frame { (v, w) } else { (w, v) };
    let (be, bl) = (early.bbox(), late.bbox());
    let (mut mi, mut mu) = (0, 0);
    for m in c.get(early.frame, late.frame) {
        let in_early = be.contains(m.src.0, m.src.1);
        let in_late = bl.contains(m.dst.0, m.dst.1);
        mi += usize::from(in_early && in_late);
        mu += usize::from(in_early || in_late);
    }
    MatchOverlap {
        mi,
        mu,
        no_correspondence: false,
    }
}

/// The five correspondence features of an edge.
pub fn dm_features(v: &Detection, w: &Detection, c: &CorrespondenceSet) -> FeatureVector {
    let overlap = match_sets(v, w, c);
    let f1 = if overlap.mu == 0 {
        0.0
    } else {
        overlap.mi as f64 / overlap.mu as f64
    };
    let f2 = v.score.min(w.score);
    FeatureVector {
        scheme: Scheme::Dm,
        values: vec![f1, f2, f1 * f2, f1 * f1, f2 * f2],
    }
}

/// Geometric features, with offsets normalised by the mean box height.
pub fn st_features(v: &Detection, w: &Detection) -> Result<FeatureVector> {
    let h_mean = (v.h + w.h) / 2.0;
    if h_mean.is_nan() || h_mean <= 0.0 {
        return Err(Error::invalid(format!(
            "mean box height must be positive for detections {} and {}",
            v.id, w.id
        )));
    }
    let dt = f64::from(v.frame.abs_diff(w.frame));
    let dx = (v.x - w.x).abs() / h_mean;
    let dy = (v.y - w.y).abs() / h_mean;
    let dh = (v.h - w.h).abs() / h_mean;
    let overlap = if v.w > 0.0 && w.w > 0.0 {
        iou_unchecked(&v.bbox(), &w.bbox())
    } else {
        return Err(Error::invalid("box width must be positive"));
    };
    Ok(FeatureVector {
        scheme: Scheme::St,
        values: vec![dt, dx, dy, dh, overlap, v.score.min(w.score)],
    })
}

/// Features used to score an edge: same-frame pairs always fall back to
/// geometry since no correspondences connect a frame to itself.
pub fn edge_features(
    scheme: Scheme,
    v: &Detection,
    w: &Detection,
    c: &CorrespondenceSet,
) -> Result<FeatureVector> {
    match scheme {
        Scheme::Dm if v.frame != w.frame => Ok(dm_features(v, w, c)),
        _ => st_features(v, w),
    }
}

/// Scheme actually used for edges with frame gap `dt`.
pub fn scheme_for_gap(scheme: Scheme, dt: u32) -> Scheme {
    if dt == 0 {
        Scheme::St
    } else {
        scheme
    }
}

/// Generate surrogate point correspondences from ground truth.
///
/// For each frame pair, `per_pair` matches are drawn. With probability
/// `1 - noise` a match links the same relative location on one identity
/// visible in both frames; otherwise (or when nobody is visible in both)
/// both endpoints are uniform over the image.
pub fn synth_matches(
    gt: &GroundTruth,
    frame_pairs: &[(u32, u32)],
    per_pair: usize,
    noise: f64,
    image_size: (f64, f64),
    seed: u64,
) -> Result<CorrespondenceSet> {
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::invalid(format!("match noise must be in [0, 1], got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_frame = gt.by_frame();
    let mut out = CorrespondenceSet::new();
    let mut seen = HashSet::new();
    for &(t, t_next) in frame_pairs {
        if !seen.insert((t, t_next)) {
            continue;
        }
        let visible = |f: u32| {
            by_frame
                .get(&f)
                .map(|v| v.iter().filter(|b| b.visibility > 0.0).copied().collect::<Vec<_>>())
                .unwrap_or_default()
        };
        let (here, there) = (visible(t), visible(t_next));
        let shared: Vec<_> = here
            .iter()
            .filter_map(|a| there.iter().find(|b| b.id == a.id).map(|b| (*a, *b)))
            .collect();
        for _ in 0..per_pair {
            let background = rng.random::<f64>() < noise || shared.is_empty();
            let (src, dst) = if background {
                let src = (
                    rng.random::<f64>() * image_size.0,
                    rng.random::<f64>() * image_size.1,
                );
                let dst = (
                    rng.random::<f64>() * image_size.0,
                    rng.random::<f64>() * image_size.1,
                );
                (src, dst)
            } else {
                let (a, b) = shared[rng.random_range(0..shared.len())];
                let (u, v) = (rng.random::<f64>(), rng.random::<f64>());
                (
                    (a.bbox.left + u * a.bbox.width, a.bbox.top + v * a.bbox.height),
                    (b.bbox.left + u * b.bbox.width, b.bbox.top + v * b.bbox.height),
                )
            };
            out.push(t, t_next, src, dst)?;
        }
    }
    Ok(out)
}
