//! Detections and the spatio-temporal tracking graph.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};

/// Default temporal window: edges connect detections at most this many
/// frames apart.
pub const DEFAULT_TAU_MAX: u32 = 10;

/// A person hypothesis in one frame, stored in center form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub id: usize,
    pub frame: u32,
    /// Box center, pixels.
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

impl Detection {
    pub fn new(id: usize, frame: u32, x: f64, y: f64, w: f64, h: f64, score: f64) -> Result<Self> {
        let det = Detection {
            id,
            frame,
            x,
            y,
            w,
            h,
            score,
        };
        det.validate()?;
        Ok(det)
    }

    /// Build from a top-left anchored box, as stored in MOT files.
    pub fn from_tlwh(
        id: usize,
        frame: u32,
        left: f64,
        top: f64,
        w: f64,
        h: f64,
        score: f64,
    ) -> Result<Self> {
        Self::new(id, frame, left + w / 2.0, top + h / 2.0, w, h, score)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame < 1 {
            return Err(Error::invalid(format!("detection {}: frame must be >= 1", self.id)));
        }
        if !(self.w > 0.0 && self.h > 0.0) {
            return Err(Error::invalid(format!(
                "detection {}: non-positive box size {}x{}",
                self.id, self.w, self.h
            )));
        }
        if !(self.x.is_finite() && self.y.is_finite() && self.score.is_finite()) {
            return Err(Error::invalid(format!("detection {}: non-finite value", self.id)));
        }
        Ok(())
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox {
            left: self.x - self.w / 2.0,
            top: self.y - self.h / 2.0,
            width: self.w,
            height: self.h,
        }
    }
}

/// Axis-aligned box anchored at its top-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    pub fn new(left: f64, top: f64, width: f64, height: f64) -> Self {
        BoundingBox {
            left,
            top,
            width,
            height,
        }
    }

    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Half-open containment: `[left, right) x [top, bottom)`.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        px >= self.left && px < self.right() && py >= self.top && py < self.bottom()
    }

    fn check(&self) -> Result<()> {
        if self.width > 0.0 && self.height > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "box has non-positive size {}x{}",
                self.width, self.height
            )))
        }
    }
}

/// Intersection over union of two boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> Result<f64> {
    a.check()?;
    b.check()?;
    Ok(iou_unchecked(a, b))
}

/// [`iou`] without the size check, for callers holding validated boxes.
pub(crate) fn iou_unchecked(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.left.max(b.left)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.top.max(b.top)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphEdge {
    /// Position of the first endpoint in [`TrackingGraph::nodes`]; always `u < v`.
    pub u: usize,
    pub v: usize,
    /// Absolute frame gap between the endpoints.
    pub dt: u32,
}

/// Detections plus every candidate edge inside the temporal window.
///
/// Edges reference nodes by position in `nodes`, which preserves the input
/// order of the detections that survived score filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingGraph {
    pub nodes: Vec<Detection>,
    pub edges: Vec<GraphEdge>,
    pub tau_max: u32,
}

impl TrackingGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Connect every pair of detections at most `tau_max` frames apart,
/// including pairs in the same frame.
///
/// A negative window is rejected; `score_min` drops detections scoring
/// strictly below it.
pub fn build_graph(
    detections: &[Detection],
    tau_max: i64,
    score_min: Option<f64>,
) -> Result<TrackingGraph> {
    if tau_max < 0 {
        return Err(Error::invalid(format!("tau_max must be >= 0, got {tau_max}")));
    }
    let tau_max = u32::try_from(tau_max)
        .map_err(|_| Error::invalid(format!("tau_max {tau_max} out of range")))?;

    let mut seen = HashSet::with_capacity(detections.len());
    for d in detections {
        d.validate()?;
        if !seen.insert(d.id) {
            return Err(Error::invalid(format!("duplicate detection id {}", d.id)));
        }
    }

    let nodes: Vec<Detection> = detections
        .iter()
        .filter(|d| score_min.is_none_or(|s| d.score >= s))
        .copied()
        .collect();

    let mut by_frame: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, d) in nodes.iter().enumerate() {
        by_frame.entry(d.frame).or_default().push(i);
    }

    let mut edges = Vec::new();
    for (&frame, members) in &by_frame {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                edges.push(GraphEdge { u: i.min(j), v: i.max(j), dt: 0 });
            }
        }
        if tau_max == 0 {
            continue;
        }
        let hi = frame.saturating_add(tau_max);
        for (&other, others) in by_frame.range(frame + 1..=hi) {
            let dt = other - frame;
            for &i in members {
                for &j in others {
                    edges.push(GraphEdge { u: i.min(j), v: i.max(j), dt });
                }
            }
        }
    }
    edges.sort_unstable();

    Ok(TrackingGraph {
        nodes,
        edges,
        tau_max,
    })
}
