//! Seeded synthetic sequences: walking people, a shaky camera, a noisy
//! detector and surrogate point correspondences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::SequenceBundle;
use crate::error::{Error, Result};
use crate::features::synth_matches;
use crate::graph::{BoundingBox, Detection};
use crate::truth::{GroundTruth, GtBox};

/// A span of frames during which one person is fully hidden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occlusion {
    /// Index of the person, `0..persons`.
    pub person: usize,
    pub start: u32,
    pub len: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub name: String,
    pub persons: usize,
    pub frames: u32,
    pub image_size: (f64, f64),
    /// Range of person box heights in pixels; width is 0.41 of height.
    pub height_range: (f64, f64),
    /// Maximum horizontal speed in pixels per frame.
    pub max_speed: f64,
    /// Per-frame standard deviation of the camera's random-walk offset.
    pub camera_jitter: f64,
    /// Detection position/scale noise as a fraction of box height.
    pub det_jitter: f64,
    /// Per-person, per-frame probability of a spurious background box.
    pub fp_rate: f64,
    /// Probability that a visible person is missed.
    pub fn_rate: f64,
    /// Probability that a detected person gets a second, shifted box.
    pub dup_rate: f64,
    /// Score distributions (mean, sd) for true and spurious boxes; clamped to `[0, 1]`.
    pub tp_score: (f64, f64),
    pub fp_score: (f64, f64),
    pub matches_per_pair: usize,
    pub match_noise: f64,
    /// Correspondences are generated for frame gaps `1..=match_window`.
    pub match_window: u32,
    pub occlusions: Vec<Occlusion>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            name: "synth".into(),
            persons: 5,
            frames: 200,
            image_size: (1920.0, 1080.0),
            height_range: (140.0, 260.0),
            max_speed: 4.0,
            camera_jitter: 0.0,
            det_jitter: 0.04,
            fp_rate: 0.1,
            fn_rate: 0.1,
            dup_rate: 0.1,
            tp_score: (0.7, 0.12),
            fp_score: (0.3, 0.12),
            matches_per_pair: 60,
            match_noise: 0.2,
            match_window: 10,
            occlusions: Vec::new(),
        }
    }
}

impl SynthConfig {
    /// Noise-free detections equal to the ground-truth boxes.
    pub fn noiseless(persons: usize, frames: u32) -> Self {
        SynthConfig {
            persons,
            frames,
            det_jitter: 0.0,
            fp_rate: 0.0,
            fn_rate: 0.0,
            dup_rate: 0.0,
            tp_score: (0.9, 0.0),
            match_noise: 0.0,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.persons < 1 {
            return Err(Error::invalid("need at least one person"));
        }
        if self.frames < 2 {
            return Err(Error::invalid("need at least two frames"));
        }
        for (name, r) in [
            ("fp_rate", self.fp_rate),
            ("fn_rate", self.fn_rate),
            ("dup_rate", self.dup_rate),
            ("match_noise", self.match_noise),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::invalid(format!("{name} must be in [0, 1], got {r}")));
            }
        }
        let (lo, hi) = self.height_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::invalid("height range must be positive and ordered"));
        }
        if self.det_jitter < 0.0 || self.camera_jitter < 0.0 || self.max_speed < 0.0 {
            return Err(Error::invalid("noise levels and speed must be non-negative"));
        }
        if self.tp_score.1 < 0.0 || self.fp_score.1 < 0.0 {
            return Err(Error::invalid("score deviations must be non-negative"));
        }
        for o in &self.occlusions {
            if o.person >= self.persons {
                return Err(Error::invalid(format!("occlusion refers to unknown person {}", o.person)));
            }
        }
        Ok(())
    }
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("standard deviation validated non-negative")
}

/// Generate a sequence. Identical config and seed give identical output.
pub fn synth_sequence(config: &SynthConfig, seed: u64) -> Result<SequenceBundle> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (img_w, img_h) = config.image_size;

    // Ground-truth motion in world (camera-free) coordinates.
    struct Walker {
        x: f64,
        y: f64,
        vx: f64,
        vy: f64,
        h: f64,
    }
    let mut walkers: Vec<Walker> = (0..config.persons)
        .map(|_| {
            let h = rng.random_range(config.height_range.0..=config.height_range.1);
            Walker {
                x: rng.random_range(0.1 * img_w..0.9 * img_w),
                y: rng.random_range(0.45 * img_h..0.7 * img_h),
                vx: rng.random_range(-config.max_speed..=config.max_speed),
                vy: rng.random_range(-0.1 * config.max_speed..=0.1 * config.max_speed),
                h,
            }
        })
        .collect();

    let cam_step = normal(0.0, config.camera_jitter);
    let (mut cam_x, mut cam_y) = (0.0, 0.0);
    let mut gt = Vec::new();
    for frame in 1..=config.frames {
        if frame > 1 {
            cam_x += cam_step.sample(&mut rng);
            cam_y += 0.5 * cam_step.sample(&mut rng);
            for w in &mut walkers {
                w.x += w.vx;
                w.y += w.vy;
                if w.x < 0.05 * img_w || w.x > 0.95 * img_w {
                    w.vx = -w.vx;
                }
                if w.y < 0.3 * img_h || w.y > 0.8 * img_h {
                    w.vy = -w.vy;
                }
            }
        }
        for (p, w) in walkers.iter().enumerate() {
            let occluded = config
                .occlusions
                .iter()
                .any(|o| o.person == p && frame >= o.start && frame < o.start + o.len);
            let bw = 0.41 * w.h;
            gt.push(GtBox {
                frame,
                id: p as i64 + 1,
                bbox: BoundingBox::new(w.x + cam_x - bw / 2.0, w.y + cam_y - w.h / 2.0, bw, w.h),
                visibility: if occluded { 0.0 } else { 1.0 },
            });
        }
    }
    let gt = GroundTruth::new(gt);

    let tp_score = normal(config.tp_score.0, config.tp_score.1);
    let fp_score = normal(config.fp_score.0, config.fp_score.1);
    let jitter = normal(0.0, config.det_jitter);
    let mut raw: Vec<(u32, f64, f64, f64, f64, f64)> = Vec::new();
    let jittered = |rng: &mut ChaCha8Rng, b: &BoundingBox, extra: f64| {
        let h = b.height;
        let cx = b.left + b.width / 2.0 + (jitter.sample(rng) + extra) * h;
        let cy = b.top + h / 2.0 + jitter.sample(rng) * h;
        let scale = (1.0 + jitter.sample(rng)).max(0.2);
        (cx, cy, b.width * scale, h * scale)
    };
    for frame in 1..=config.frames {
        for g in gt.boxes.iter().filter(|g| g.frame == frame) {
            if g.visibility <= 0.0 || rng.random::<f64>() < config.fn_rate {
                continue;
            }
            let (x, y, w, h) = jittered(&mut rng, &g.bbox, 0.0);
            raw.push((frame, x, y, w, h, tp_score.sample(&mut rng).clamp(0.0, 1.0)));
            if rng.random::<f64>() < config.dup_rate {
                let side = if rng.random_bool(0.5) { 0.08 } else { -0.08 };
                let (x, y, w, h) = jittered(&mut rng, &g.bbox, side);
                let s = tp_score.sample(&mut rng).clamp(0.0, 1.0) * 0.9;
                raw.push((frame, x, y, w, h, s));
            }
        }
        for _ in 0..config.persons {
            if rng.random::<f64>() < config.fp_rate {
                let h = rng.random_range(config.height_range.0..=config.height_range.1);
                let x = rng.random_range(0.0..img_w);
                let y = rng.random_range(0.3 * img_h..0.8 * img_h);
                raw.push((frame, x, y, 0.41 * h, h, fp_score.sample(&mut rng).clamp(0.0, 1.0)));
            }
        }
    }
    let detections = raw
        .into_iter()
        .enumerate()
        .map(|(id, (f, x, y, w, h, s))| Detection::new(id, f, x, y, w, h, s))
        .collect::<Result<Vec<_>>>()?;

    let frame_pairs: Vec<(u32, u32)> = (1..=config.frames)
        .flat_map(|t| (1..=config.match_window).map(move |d| (t, t + d)))
        .filter(|&(_, t)| t <= config.frames)
        .collect();
    let matches = synth_matches(
        &gt,
        &frame_pairs,
        config.matches_per_pair,
        config.match_noise,
        config.image_size,
        rng.random(),
    )?;

    Ok(SequenceBundle {
        name: config.name.clone(),
        frames: config.frames,
        image_size: config.image_size,
        detections,
        gt: Some(gt),
        matches,
    })
}
