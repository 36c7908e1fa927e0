//! Ground-truth trajectories.

use std::collections::BTreeMap;

use crate::graph::BoundingBox;

/// One annotated box of a ground-truth identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtBox {
    pub frame: u32,
    pub id: i64,
    pub bbox: BoundingBox,
    /// Visible fraction in `[0, 1]`; fully occluded boxes still count for
    /// evaluation but carry no image evidence.
    pub visibility: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub boxes: Vec<GtBox>,
}

impl GroundTruth {
    pub fn new(boxes: Vec<GtBox>) -> Self {
        GroundTruth { boxes }
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn by_frame(&self) -> BTreeMap<u32, Vec<&GtBox>> {
        let mut out: BTreeMap<u32, Vec<&GtBox>> = BTreeMap::new();
        for b in &self.boxes {
            out.entry(b.frame).or_default().push(b);
        }
        out
    }

    /// Trajectories keyed by identity, each sorted by frame.
    pub fn trajectories(&self) -> BTreeMap<i64, Vec<&GtBox>> {
        let mut out: BTreeMap<i64, Vec<&GtBox>> = BTreeMap::new();
        for b in &self.boxes {
            out.entry(b.id).or_default().push(b);
        }
        for boxes in out.values_mut() {
            boxes.sort_by_key(|b| b.frame);
        }
        out
    }
}
