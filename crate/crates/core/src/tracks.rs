//! From solver clusters to per-frame tracks.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{BoundingBox, Detection};
use crate::multicut::Partition;

/// Clusters smaller than this are discarded as spurious.
pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 5;

/// Cluster labels where some nodes may be discarded (`None`). Surviving
/// labels are canonical: `0..k` by first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<Option<usize>>,
}

impl ClusterAssignment {
    pub fn cluster_count(&self) -> usize {
        self.labels.iter().flatten().max().map_or(0, |m| m + 1)
    }

    fn canonical(raw: impl Iterator<Item = Option<usize>>) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .map(|l| {
                l.map(|l| {
                    let next = map.len();
                    *map.entry(l).or_insert(next)
                })
            })
            .collect();
        ClusterAssignment { labels }
    }
}

impl From<&Partition> for ClusterAssignment {
    fn from(p: &Partition) -> Self {
        ClusterAssignment {
            labels: p.labels().iter().map(|&l| Some(l)).collect(),
        }
    }
}

/// Discard every cluster with fewer than `min_size` members.
pub fn filter_clusters(assignment: &ClusterAssignment, min_size: usize) -> Result<ClusterAssignment> {
    if min_size < 1 {
        return Err(Error::invalid("min cluster size must be at least 1"));
    }
    let mut sizes = vec![0usize; assignment.cluster_count()];
    for l in assignment.labels.iter().flatten() {
        sizes[*l] += 1;
    }
    Ok(ClusterAssignment::canonical(
        assignment.labels.iter().map(|l| l.filter(|&l| sizes[l] >= min_size)),
    ))
}

/// Representative box of a track in one frame, in center form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl TrackBox {
    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::new(self.x - self.w / 2.0, self.y - self.h / 2.0, self.w, self.h)
    }

    fn lerp(a: &TrackBox, b: &TrackBox, t: f64) -> TrackBox {
        let mix = |p: f64, q: f64| p + (q - p) * t;
        TrackBox {
            x: mix(a.x, b.x),
            y: mix(a.y, b.y),
            w: mix(a.w, b.w),
            h: mix(a.h, b.h),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: usize,
    pub boxes: BTreeMap<u32, TrackBox>,
}

impl Track {
    pub fn birth(&self) -> Option<u32> {
        self.boxes.keys().next().copied()
    }

    pub fn death(&self) -> Option<u32> {
        self.boxes.keys().next_back().copied()
    }
}

/// Average each cluster's detections per frame into one box per frame.
///
/// With `max_gap = Some(g)`, frames missing between two observed frames at
/// most `g` apart are filled by linear interpolation. Tracks are not
/// extended beyond their first and last observed frames. Track ids are the
/// cluster label plus one.
pub fn clusters_to_tracks(
    assignment: &ClusterAssignment,
    detections: &[Detection],
    max_gap: Option<u32>,
) -> Result<Vec<Track>> {
    if assignment.labels.len() != detections.len() {
        return Err(Error::invalid(format!(
            "assignment covers {} nodes but {} detections were given",
            assignment.labels.len(),
            detections.len()
        )));
    }
    let k = assignment.cluster_count();
    let mut sums: Vec<BTreeMap<u32, ([f64; 4], usize)>> = vec![BTreeMap::new(); k];
    for (label, d) in assignment.labels.iter().zip(detections) {
        if let Some(l) = label {
            let entry = sums[*l].entry(d.frame).or_insert(([0.0; 4], 0));
            entry.0[0] += d.x;
            entry.0[1] += d.y;
            entry.0[2] += d.w;
            entry.0[3] += d.h;
            entry.1 += 1;
        }
    }
    let tracks = sums
        .into_iter()
        .enumerate()
        .map(|(label, per_frame)| {
            let mut boxes: BTreeMap<u32, TrackBox> = per_frame
                .into_iter()
                .map(|(f, (s, c))| {
                    let c = c as f64;
                    (f, TrackBox { x: s[0] / c, y: s[1] / c, w: s[2] / c, h: s[3] / c })
                })
                .collect();
            if let Some(g) = max_gap {
                let observed: Vec<(u32, TrackBox)> = boxes.iter().map(|(&f, &b)| (f, b)).collect();
                for pair in observed.windows(2) {
                    let ((f0, b0), (f1, b1)) = (pair[0], pair[1]);
                    if f1 - f0 > 1 && f1 - f0 <= g {
                        for f in f0 + 1..f1 {
                            let t = f64::from(f - f0) / f64::from(f1 - f0);
                            boxes.insert(f, TrackBox::lerp(&b0, &b1, t));
                        }
                    }
                }
            }
            Track { id: label + 1, boxes }
        })
        .collect();
    Ok(tracks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(id: usize, frame: u32, x: f64, y: f64) -> Detection {
        Detection::new(id, frame, x, y, 20.0, 40.0, 1.0).unwrap()
    }

    fn assignment(raw: &[usize]) -> ClusterAssignment {
        ClusterAssignment::from(&Partition::from_labels(raw))
    }

    #[test]
    fn size_four_removed_size_five_kept() {
        let a = assignment(&[0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let f = filter_clusters(&a, 5).unwrap();
        assert_eq!(f.labels[..4], [None; 4]);
        assert_eq!(f.labels[4..], [Some(0); 5]);
    }

    #[test]
    fn min_size_one_is_identity() {
        let a = assignment(&[0, 1, 1, 2, 0]);
        assert_eq!(filter_clusters(&a, 1).unwrap(), a);
        assert!(filter_clusters(&a, 0).is_err());
    }

    #[test]
    fn same_frame_detections_are_averaged() {
        let dets = [det(0, 3, 10.0, 50.0), det(1, 3, 20.0, 50.0)];
        let tracks = clusters_to_tracks(&assignment(&[0, 0]), &dets, None).unwrap();
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].boxes[&3].x, 15.0);
    }

    #[test]
    fn one_detection_per_frame_is_reproduced() {
        let dets: Vec<Detection> = (1..=4).map(|f| det(f as usize, f, f as f64 * 3.0, 7.0)).collect();
        let tracks = clusters_to_tracks(&assignment(&[0, 0, 0, 0]), &dets, Some(10)).unwrap();
        for d in &dets {
            let b = tracks[0].boxes[&d.frame];
            assert_eq!((b.x, b.y, b.w, b.h), (d.x, d.y, d.w, d.h));
        }
    }

    #[test]
    fn gap_is_interpolated_at_midpoint() {
        let a = Detection::new(0, 1, 10.0, 20.0, 30.0, 60.0, 1.0).unwrap();
        let b = Detection::new(1, 3, 30.0, 40.0, 50.0, 100.0, 1.0).unwrap();
        let labels = assignment(&[0, 0]);
        let tracks = clusters_to_tracks(&labels, &[a, b], Some(10)).unwrap();
        assert_eq!(tracks[0].boxes[&2], TrackBox { x: 20.0, y: 30.0, w: 40.0, h: 80.0 });
        let off = clusters_to_tracks(&labels, &[a, b], None).unwrap();
        assert!(!off[0].boxes.contains_key(&2));
        let short = clusters_to_tracks(&labels, &[a, b], Some(1)).unwrap();
        assert!(!short[0].boxes.contains_key(&2));
    }

    #[test]
    fn discarded_nodes_produce_no_tracks() {
        let dets: Vec<Detection> = (0..6).map(|i| det(i, 1 + i as u32, 0.0, 0.0)).collect();
        let f = filter_clusters(&assignment(&[0, 0, 0, 0, 0, 1]), 5).unwrap();
        let tracks = clusters_to_tracks(&f, &dets, Some(10)).unwrap();
        assert_eq!(tracks.len(), 1);
        assert_eq!((tracks[0].birth(), tracks[0].death()), (Some(1), Some(5)));
    }

    proptest! {
        #[test]
        fn filtering_is_idempotent(raw in proptest::collection::vec(0usize..6, 0..40), m in 1usize..6) {
            let once = filter_clusters(&assignment(&raw), m).unwrap();
            prop_assert_eq!(filter_clusters(&once, m).unwrap(), once);
        }

        #[test]
        fn tracks_stay_in_member_hull(
            pts in proptest::collection::vec((1u32..6, 0.0..100.0f64, 0.0..100.0f64, 0usize..3), 1..30),
        ) {
            let dets: Vec<Detection> = pts
                .iter()
                .enumerate()
                .map(|(i, &(f, x, y, _))| det(i, f, x, y))
                .collect();
            let raw: Vec<usize> = pts.iter().map(|p| p.3).collect();
            let a = assignment(&raw);
            let tracks = clusters_to_tracks(&a, &dets, None).unwrap();
            prop_assert_eq!(tracks.len(), a.cluster_count());
            for t in &tracks {
                for (&f, b) in &t.boxes {
                    let members: Vec<&Detection> = dets
                        .iter()
                        .zip(&a.labels)
                        .filter(|(d, l)| d.frame == f && **l == Some(t.id - 1))
                        .map(|(d, _)| d)
                        .collect();
                    prop_assert!(!members.is_empty());
                    let (lo, hi) = members.iter().fold((f64::MAX, f64::MIN), |(lo, hi), d| (lo.min(d.x), hi.max(d.x)));
                    prop_assert!(b.x >= lo - 1e-9 && b.x <= hi + 1e-9);
                    let (lo, hi) = members.iter().fold((f64::MAX, f64::MIN), |(lo, hi), d| (lo.min(d.y), hi.max(d.y)));
                    prop_assert!(b.y >= lo - 1e-9 && b.y <= hi + 1e-9);
                }
            }
        }
    }
}
