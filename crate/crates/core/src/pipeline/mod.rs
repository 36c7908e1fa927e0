//! End-to-end orchestration: load or synthesise a sequence, train pair
//! models, track, and evaluate.

pub mod io;
pub mod synth;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use crate::cost::{edge_cost, harvest_pairs, LabeledPair, PairModel, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::DEFAULT_IOU_THRESH;
use crate::features::{edge_features, CorrespondenceSet, Scheme};
use crate::graph::{build_graph, Detection, DEFAULT_TAU_MAX};
use crate::multicut::{greedy_contract, klj_solve, CostEdge, MulticutInstance, Partition};
use crate::tracks::{clusters_to_tracks, filter_clusters, ClusterAssignment, Track, DEFAULT_MIN_CLUSTER_SIZE};
use crate::truth::GroundTruth;

use self::io::{SeqInfo, SeqPaths};

/// Everything known about one video sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBundle {
    pub name: String,
    pub frames: u32,
    pub image_size: (f64, f64),
    pub detections: Vec<Detection>,
    pub gt: Option<GroundTruth>,
    pub matches: CorrespondenceSet,
}

impl SequenceBundle {
    pub fn validate(&self) -> Result<()> {
        let in_range = |f: u32| (1..=self.frames).contains(&f);
        if let Some(d) = self.detections.iter().find(|d| !in_range(d.frame)) {
            return Err(Error::invalid(format!("detection {} in frame {} outside 1..={}", d.id, d.frame, self.frames)));
        }
        if let Some(b) = self.gt.iter().flat_map(|g| &g.boxes).find(|b| !in_range(b.frame)) {
            return Err(Error::invalid(format!("ground truth frame {} outside 1..={}", b.frame, self.frames)));
        }
        if let Some((t, u)) = self.matches.frame_pairs().find(|&(t, u)| !in_range(t) || !in_range(u)) {
            return Err(Error::invalid(format!("matches for frames ({t}, {u}) outside 1..={}", self.frames)));
        }
        Ok(())
    }

    /// Read a MOT-style sequence directory. Ground truth and matches are
    /// optional.
    pub fn load(dir: &Path) -> Result<Self> {
        let paths = SeqPaths::new(dir);
        let info_path = paths.seqinfo();
        let info_text = std::fs::read_to_string(&info_path).map_err(|e| Error::io(&info_path, e))?;
        let info = io::parse_seqinfo(&info_text, &info_path)?;
        let detections = io::load_detections(&paths.detections())?;
        let gt = paths.gt().exists().then(|| io::load_gt(&paths.gt())).transpose()?;
        let matches = if paths.matches().exists() {
            io::load_matches(&paths.matches())?
        } else {
            CorrespondenceSet::new()
        };
        let bundle = SequenceBundle {
            name: info.name,
            frames: info.frames,
            image_size: (info.width, info.height),
            detections,
            gt,
            matches,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let paths = SeqPaths::new(dir);
        let info = SeqInfo {
            name: self.name.clone(),
            frames: self.frames,
            width: self.image_size.0,
            height: self.image_size.1,
        };
        io::write_text(&paths.seqinfo(), &io::format_seqinfo(&info))?;
        io::write_text(&paths.detections(), &io::format_detections(&self.detections))?;
        if let Some(gt) = &self.gt {
            io::write_text(&paths.gt(), &io::format_gt(gt))?;
        }
        io::write_text(&paths.matches(), &io::format_matches(&self.matches))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Greedy additive edge contraction.
    Gaec,
    Singleton,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Gaec => "gaec",
            InitMode::Singleton => "singleton",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaec" => Ok(InitMode::Gaec),
            "singleton" => Ok(InitMode::Singleton),
            other => Err(Error::invalid(format!("unknown init mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub tau_max: u32,
    pub min_cluster_size: usize,
    pub score_min: Option<f64>,
    pub scheme: Scheme,
    pub init: InitMode,
    pub max_passes: usize,
    /// Fill frames missing inside a track, for gaps up to `tau_max`.
    pub interpolate: bool,
    /// IoU needed to assign a detection to a ground-truth identity when
    /// harvesting training pairs.
    pub iou_assign: f64,
    pub iou_eval: f64,
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tau_max: DEFAULT_TAU_MAX,
            min_cluster_size: DEFAULT_MIN_CLUSTER_SIZE,
            score_min: None,
            scheme: Scheme::Dm,
            init: InitMode::Gaec,
            max_passes: 100,
            interpolate: true,
            iou_assign: DEFAULT_IOU_THRESH,
            iou_eval: DEFAULT_IOU_THRESH,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// `key = value` lines describing every effective setting.
    pub fn to_text(&self) -> String {
        let score = self.score_min.map_or_else(|| "none".to_string(), |s| format!("{s:?}"));
        format!(
            "tau_max = {}\nmin_cluster_size = {}\nscore_min = {}\nscheme = {}\ninit = {}\nmax_passes = {}\ninterpolate = {}\niou_assign = {:?}\niou_eval = {:?}\nseed = {}\nlambda = {:?}\ngrad_tol = {:?}\nmax_iter = {}\n",
            self.tau_max,
            self.min_cluster_size,
            score,
            self.scheme,
            self.init,
            self.max_passes,
            self.interpolate,
            self.iou_assign,
            self.iou_eval,
            self.seed,
            self.train.lambda,
            self.train.grad_tol,
            self.train.max_iter
        )
    }
}

/// Label all edges of the given sequences and fit one model per frame gap.
pub fn harvest_training_pairs(bundles: &[SequenceBundle], config: &PipelineConfig) -> Result<Vec<LabeledPair>> {
    let mut pairs = Vec::new();
    for b in bundles {
        let gt = b.gt.as_ref().ok_or(Error::NoSupervision)?;
        pairs.extend(harvest_pairs(&b.detections, gt, config.tau_max, config.iou_assign, config.scheme, &b.matches)?);
    }
    Ok(pairs)
}

pub fn train_model(bundles: &[SequenceBundle], config: &PipelineConfig) -> Result<PairModel> {
    let pairs = harvest_training_pairs(bundles, config)?;
    PairModel::fit(&pairs, config.scheme, config.tau_max, &config.train)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub nodes: usize,
    pub edges: usize,
    pub passes: usize,
    pub objective: f64,
    pub clusters: usize,
    pub tracks: usize,
    pub solve_seconds: f64,
    pub total_seconds: f64,
}

/// Graph, costs and solver instance for a sequence, before solving.
pub struct Problem {
    pub nodes: Vec<Detection>,
    pub instance: MulticutInstance,
}

pub fn build_problem(bundle: &SequenceBundle, model: &PairModel, config: &PipelineConfig) -> Result<Problem> {
    if model.scheme != config.scheme {
        return Err(Error::invalid(format!(
            "model scheme {} does not match configured scheme {}",
            model.scheme, config.scheme
        )));
    }
    if model.tau_max < config.tau_max {
        return Err(Error::invalid(format!(
            "model covers gaps up to {} but tau_max is {}",
            model.tau_max, config.tau_max
        )));
    }
    let graph = build_graph(&bundle.detections, i64::from(config.tau_max), config.score_min)?;
    let edges = graph
        .edges
        .iter()
        .map(|e| {
            let f = edge_features(config.scheme, &graph.nodes[e.u], &graph.nodes[e.v], &bundle.matches)?;
            Ok(CostEdge {
                u: e.u,
                v: e.v,
                cost: edge_cost(model, &f, e.dt)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let instance = MulticutInstance::new(graph.nodes.len(), edges)?;
    Ok(Problem {
        nodes: graph.nodes,
        instance,
    })
}

/// Graph construction, edge costs, multicut, cluster filtering and track
/// assembly for one sequence.
pub fn run_tracking(
    bundle: &SequenceBundle,
    model: &PairModel,
    config: &PipelineConfig,
) -> Result<(Vec<Track>, Diagnostics)> {
    let start = Instant::now();
    let problem = build_problem(bundle, model, config)?;
    let n = problem.instance.node_count();
    let solve_start = Instant::now();
    let init = match config.init {
        InitMode::Gaec => greedy_contract(&problem.instance),
        InitMode::Singleton => Partition::singletons(n),
    };
    let (partition, stats) = klj_solve(&problem.instance, &init, config.max_passes)?;
    let solve_seconds = solve_start.elapsed().as_secs_f64();
    let kept = filter_clusters(&ClusterAssignment::from(&partition), config.min_cluster_size)?;
    let max_gap = config.interpolate.then_some(config.tau_max);
    let tracks = clusters_to_tracks(&kept, &problem.nodes, max_gap)?;
    let diagnostics = Diagnostics {
        nodes: n,
        edges: problem.instance.edges().len(),
        passes: stats.passes,
        objective: stats.objective(),
        clusters: partition.cluster_count(),
        tracks: tracks.len(),
        solve_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    log::info!(
        "{}: |V|={} |E|={} passes={} objective={:.4} tracks={} solve={:.3}s",
        bundle.name,
        diagnostics.nodes,
        diagnostics.edges,
        diagnostics.passes,
        diagnostics.objective,
        diagnostics.tracks,
        diagnostics.solve_seconds
    );
    Ok((tracks, diagnostics))
}
