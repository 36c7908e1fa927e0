//! Pair-classification accuracy and CLEAR MOT tracking metrics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::assignment::linear_sum_assignment;
use crate::cost::{join_probability, LabeledPair, PairModel};
use crate::error::{Error, Result};
use crate::graph::{iou_unchecked, BoundingBox};
use crate::tracks::Track;
use crate::truth::GroundTruth;

pub const DEFAULT_IOU_THRESH: f64 = 0.5;

/// Accuracy and support per frame gap.
pub type AccuracyTable = BTreeMap<u32, (f64, usize)>;

/// Rate of pairs whose predicted join decision (`p > 0.5`) agrees with the
/// label, per frame gap. Gaps without pairs are omitted.
pub fn pair_accuracy(model: &PairModel, pairs: &[LabeledPair]) -> Result<AccuracyTable> {
    let mut counts: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for p in pairs {
        let prob = join_probability(model, &p.features, p.dt)?;
        let entry = counts.entry(p.dt).or_default();
        entry.0 += usize::from((prob > 0.5) == p.label);
        entry.1 += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(dt, (ok, n))| (dt, (ok as f64 / n as f64, n)))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mota: f64,
    /// Mean IoU of matched pairs; informational.
    pub motp: f64,
    pub fp: usize,
    pub fn_: usize,
    pub idsw: usize,
    pub frag: usize,
    /// Fraction of ground-truth trajectories matched in at least 80% of their frames.
    pub mt: f64,
    /// Fraction matched in at most 20% of their frames.
    pub ml: f64,
    /// Number of ground-truth boxes.
    pub gt: usize,
    pub gt_tracks: usize,
    pub matches: usize,
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>8} {:>8} {:>7} {:>7} {:>6} {:>6} {:>7} {:>7} {:>7} {:>6}",
            "MOTA", "MOTP", "FP", "FN", "IDSW", "Frag", "MT", "ML", "GT", "GTtrk"
        );
        let _ = writeln!(
            out,
            "{:>7.2}% {:>8.4} {:>7} {:>7} {:>6} {:>6} {:>6.1}% {:>6.1}% {:>7} {:>6}",
            self.mota * 100.0,
            self.motp,
            self.fp,
            self.fn_,
            self.idsw,
            self.frag,
            self.mt * 100.0,
            self.ml * 100.0,
            self.gt,
            self.gt_tracks
        );
        out
    }

    /// `key,value` rows with round-trip float formatting.
    pub fn to_csv(&self) -> String {
        format!(
            "mota,{:?}\nmotp,{:?}\nfp,{}\nfn,{}\nidsw,{}\nfrag,{}\nmt,{:?}\nml,{:?}\ngt,{}\ngt_tracks,{}\nmatches,{}\n",
            self.mota,
            self.motp,
            self.fp,
            self.fn_,
            self.idsw,
            self.frag,
            self.mt,
            self.ml,
            self.gt,
            self.gt_tracks,
            self.matches
        )
    }
}

/// CLEAR MOT evaluation.
///
/// Per frame, correspondences from earlier frames are kept while their IoU
/// stays at or above `iou_thresh`; remaining boxes are matched by an
/// assignment that first maximises the number of valid pairs and then their
/// total IoU. A ground-truth identity matched to a different track than at
/// its previous match counts one identity switch.
pub fn clear_mot(tracks: &[Track], gt: &GroundTruth, iou_thresh: f64) -> Result<EvalReport> {
    if gt.is_empty() {
        return Err(Error::NoSupervision);
    }
    if !(iou_thresh > 0.0 && iou_thresh < 1.0) {
        return Err(Error::invalid(format!("iou threshold must be in (0, 1), got {iou_thresh}")));
    }

    let mut gt_frames: BTreeMap<u32, Vec<(i64, BoundingBox)>> = BTreeMap::new();
    for b in &gt.boxes {
        gt_frames.entry(b.frame).or_default().push((b.id, b.bbox));
    }
    let mut hyp_frames: BTreeMap<u32, Vec<(usize, BoundingBox)>> = BTreeMap::new();
    for t in tracks {
        for (&f, b) in &t.boxes {
            hyp_frames.entry(f).or_default().push((t.id, b.bbox()));
        }
    }
    // Sort within frames so results do not depend on input order.
    for v in gt_frames.values_mut() {
        v.sort_by_key(|e| e.0);
    }
    for v in hyp_frames.values_mut() {
        v.sort_by_key(|e| e.0);
    }
    let frames: BTreeSet<u32> = gt_frames.keys().chain(hyp_frames.keys()).copied().collect();

    let mut last_match: HashMap<i64, usize> = HashMap::new();
    // Per GT identity: matched flag in every frame where it exists.
    let mut history: BTreeMap<i64, Vec<bool>> = BTreeMap::new();
    let (mut fp, mut fn_, mut idsw, mut matches) = (0, 0, 0, 0);
    let mut iou_sum = 0.0;
    let empty_g = Vec::new();
    let empty_h = Vec::new();

    for f in frames {
        let gts = gt_frames.get(&f).unwrap_or(&empty_g);
        let hyps = hyp_frames.get(&f).unwrap_or(&empty_h);
        let overlap: Vec<Vec<f64>> = gts
            .iter()
            .map(|(_, g)| hyps.iter().map(|(_, h)| iou_unchecked(g, h)).collect())
            .collect();

        let mut gt_match: Vec<Option<usize>> = vec![None; gts.len()];
        let mut hyp_taken = vec![false; hyps.len()];
        for (gi, (gid, _)) in gts.iter().enumerate() {
            if let Some(&tid) = last_match.get(gid) {
                if let Some(hi) = hyps.iter().position(|(id, _)| *id == tid) {
                    if !hyp_taken[hi] && overlap[gi][hi] >= iou_thresh {
                        gt_match[gi] = Some(hi);
                        hyp_taken[hi] = true;
                    }
                }
            }
        }

        let free_g: Vec<usize> = (0..gts.len()).filter(|&g| gt_match[g].is_none()).collect();
        let free_h: Vec<usize> = (0..hyps.len()).filter(|&h| !hyp_taken[h]).collect();
        if !free_g.is_empty() && !free_h.is_empty() {
            // Forbidden pairs cost more than any combination of valid ones,
            // so the solver maximises the number of valid pairs first.
            let forbidden = 2.0 * (free_g.len().max(free_h.len()) as f64 + 1.0);
            let costs: Vec<f64> = free_g
                .iter()
                .flat_map(|&g| {
                    free_h.iter().map(move |&h| (g, h))
                })
                .map(|(g, h)| {
                    let o = overlap[g][h];
                    if o >= iou_thresh {
                        1.0 - o
                    } else {
                        forbidden
                    }
                })
                .collect();
            let assigned = linear_sum_assignment(&costs, free_g.len(), free_h.len());
            for (k, col) in assigned.into_iter().enumerate() {
                if let Some(c) = col {
                    let (g, h) = (free_g[k], free_h[c]);
                    if overlap[g][h] >= iou_thresh {
                        gt_match[g] = Some(h);
                        hyp_taken[h] = true;
                    }
                }
            }
        }

        for (gi, (gid, _)) in gts.iter().enumerate() {
            let matched = gt_match[gi];
            history.entry(*gid).or_default().push(matched.is_some());
            match matched {
                Some(hi) => {
                    let tid = hyps[hi].0;
                    if last_match.get(gid).is_some_and(|&prev| prev != tid) {
                        idsw += 1;
                    }
                    last_match.insert(*gid, tid);
                    matches += 1;
                    iou_sum += overlap[gi][hi];
                }
                None => fn_ += 1,
            }
        }
        fp += hyp_taken.iter().filter(|&&t| !t).count();
    }

    let gt_count = gt.len();
    let gt_tracks = history.len();
    let (mut mt, mut ml, mut frag) = (0usize, 0usize, 0usize);
    for flags in history.values() {
        let covered = flags.iter().filter(|&&m| m).count() as f64 / flags.len() as f64;
        mt += usize::from(covered >= 0.8);
        ml += usize::from(covered <= 0.2);
        // A fragmentation is a resumption of tracking after an interruption.
        let mut seen_match = false;
        for w in flags.windows(2) {
            seen_match |= w[0];
            if seen_match && !w[0] && w[1] {
                frag += 1;
            }
        }
    }

    Ok(EvalReport {
        mota: 1.0 - (fp + fn_ + idsw) as f64 / gt_count as f64,
        motp: if matches > 0 { iou_sum / matches as f64 } else { 0.0 },
        fp,
        fn_,
        idsw,
        frag,
        mt: mt as f64 / gt_tracks as f64,
        ml: ml as f64 / gt_tracks as f64,
        gt: gt_count,
        gt_tracks,
        matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{BinModel, Standardizer};
    use crate::features::{FeatureVector, Scheme};
    use crate::tracks::TrackBox;
    use crate::truth::GtBox;

    fn gt_box(frame: u32, id: i64, left: f64) -> GtBox {
        GtBox { frame, id, bbox: BoundingBox::new(left, 10.0, 20.0, 40.0), visibility: 1.0 }
    }

    fn track_from(id: usize, boxes: &[(u32, f64)]) -> Track {
        Track {
            id,
            boxes: boxes
                .iter()
                .map(|&(f, left)| (f, TrackBox { x: left + 10.0, y: 30.0, w: 20.0, h: 40.0 }))
                .collect(),
        }
    }

    fn two_people(frames: u32) -> GroundTruth {
        let mut boxes = Vec::new();
        for f in 1..=frames {
            boxes.push(gt_box(f, 1, 0.0));
            boxes.push(gt_box(f, 2, 300.0));
        }
        GroundTruth::new(boxes)
    }

    #[test]
    fn perfect_tracking() {
        let gt = two_people(6);
        let tracks = vec![
            track_from(7, &(1..=6).map(|f| (f, 0.0)).collect::<Vec<_>>()),
            track_from(9, &(1..=6).map(|f| (f, 300.0)).collect::<Vec<_>>()),
        ];
        let r = clear_mot(&tracks, &gt, 0.5).unwrap();
        assert_eq!((r.fp, r.fn_, r.idsw, r.frag), (0, 0, 0, 0));
        assert_eq!(r.mota, 1.0);
        assert_eq!((r.mt, r.ml), (1.0, 0.0));
    }

    #[test]
    fn swapped_ids_count_two_switches() {
        let gt = two_people(6);
        let a: Vec<(u32, f64)> = (1..=6).map(|f| (f, if f <= 3 { 0.0 } else { 300.0 })).collect();
        let b: Vec<(u32, f64)> = (1..=6).map(|f| (f, if f <= 3 { 300.0 } else { 0.0 })).collect();
        let r = clear_mot(&[track_from(1, &a), track_from(2, &b)], &gt, 0.5).unwrap();
        assert_eq!((r.fp, r.fn_, r.idsw), (0, 0, 2));
        assert!((r.mota - (1.0 - 2.0 / 12.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_output_gives_zero_mota() {
        let gt = two_people(4);
        let r = clear_mot(&[], &gt, 0.5).unwrap();
        assert_eq!(r.fn_, 8);
        assert_eq!(r.mota, 0.0);
        assert_eq!(r.ml, 1.0);
    }

    #[test]
    fn empty_ground_truth_is_an_error() {
        assert!(matches!(clear_mot(&[], &GroundTruth::default(), 0.5), Err(Error::NoSupervision)));
        assert!(clear_mot(&[], &two_people(1), 1.0).is_err());
    }

    #[test]
    fn injected_false_positives_lower_mota_exactly() {
        let gt = two_people(5);
        let mut tracks = vec![
            track_from(1, &(1..=5).map(|f| (f, 0.0)).collect::<Vec<_>>()),
            track_from(2, &(1..=5).map(|f| (f, 300.0)).collect::<Vec<_>>()),
        ];
        tracks.push(track_from(3, &[(2, 900.0), (3, 900.0), (4, 900.0)]));
        let r = clear_mot(&tracks, &gt, 0.5).unwrap();
        assert_eq!(r.fp, 3);
        assert!((r.mota - (1.0 - 3.0 / 10.0)).abs() < 1e-12);
    }

    #[test]
    fn interruption_counts_fragmentation() {
        let gt = two_people(6);
        let tracks = vec![
            track_from(1, &[(1, 0.0), (2, 0.0), (5, 0.0), (6, 0.0)]),
            track_from(2, &(1..=6).map(|f| (f, 300.0)).collect::<Vec<_>>()),
        ];
        let r = clear_mot(&tracks, &gt, 0.5).unwrap();
        assert_eq!((r.fn_, r.frag, r.idsw), (2, 1, 0));
    }

    #[test]
    fn report_is_invariant_to_track_order_and_ids() {
        let gt = two_people(5);
        let a = track_from(1, &(1..=5).map(|f| (f, 0.0)).collect::<Vec<_>>());
        let b = track_from(2, &[(1, 300.0), (2, 300.0), (4, 600.0)]);
        let r1 = clear_mot(&[a.clone(), b.clone()], &gt, 0.5).unwrap();
        let (mut a2, mut b2) = (a, b);
        a2.id = 40;
        b2.id = 3;
        let r2 = clear_mot(&[b2, a2], &gt, 0.5).unwrap();
        assert_eq!(r1, r2);
        let mut shuffled = gt.clone();
        shuffled.boxes.reverse();
        assert_eq!(clear_mot(&[], &shuffled, 0.5).unwrap(), clear_mot(&[], &gt, 0.5).unwrap());
    }

    #[test]
    fn mota_identity_holds() {
        let gt = two_people(5);
        let tracks = vec![track_from(1, &[(1, 0.0), (2, 5.0), (3, 300.0), (4, 700.0)])];
        let r = clear_mot(&tracks, &gt, 0.5).unwrap();
        assert_eq!(r.mota, 1.0 - (r.fp + r.fn_ + r.idsw) as f64 / r.gt as f64);
        assert_eq!(r.matches + r.fn_, r.gt);
    }

    fn constant_model(bias: f64) -> PairModel {
        PairModel {
            scheme: Scheme::St,
            tau_max: 1,
            bins: vec![
                BinModel { scheme: Scheme::St, theta: vec![bias, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], stats: Standardizer { mean: vec![0.0; 6], sigma: vec![1.0; 6] } };
                2
            ],
        }
    }

    fn labeled(dt: u32, label: bool) -> LabeledPair {
        LabeledPair { v: 0, w: 1, dt, features: FeatureVector { scheme: Scheme::St, values: vec![0.0; 6] }, label }
    }

    #[test]
    fn perfect_predictor_is_fully_accurate() {
        let pairs = vec![labeled(1, true), labeled(1, true), labeled(0, true)];
        let table = pair_accuracy(&constant_model(50.0), &pairs).unwrap();
        assert_eq!(table[&1], (1.0, 2));
        assert_eq!(table[&0], (1.0, 1));
    }

    #[test]
    fn one_half_counts_as_negative() {
        let pairs = vec![labeled(1, true), labeled(1, false)];
        let table = pair_accuracy(&constant_model(0.0), &pairs).unwrap();
        assert_eq!(table[&1], (0.5, 2));
        assert!(!table.contains_key(&0));
    }
}
