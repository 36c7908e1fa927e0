use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multicut_tracking::cost::PairModel;
use multicut_tracking::eval::{clear_mot, pair_accuracy, AccuracyTable, DEFAULT_IOU_THRESH};
use multicut_tracking::features::Scheme;
use multicut_tracking::graph::DEFAULT_TAU_MAX;
use multicut_tracking::pipeline::io::{format_tracks, load_tracks, write_text};
use multicut_tracking::pipeline::synth::{synth_sequence, Occlusion, SynthConfig};
use multicut_tracking::pipeline::{
    harvest_training_pairs, run_tracking, train_model, InitMode, PipelineConfig, SequenceBundle,
};
use multicut_tracking::tracks::DEFAULT_MIN_CLUSTER_SIZE;
use multicut_tracking::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "mctrack", version, about = "Multi-person tracking by minimum-cost multicut")]
struct Cli {
    /// Write the effective configuration to this path ("-" for stdout).
    #[arg(long, global = true, value_name = "PATH")]
    dump_config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic sequence directory.
    Synth(SynthArgs),
    /// Write labeled training pairs with their features as CSV.
    Pairs(PairsArgs),
    /// Fit per-gap pair models.
    Train(TrainArgs),
    /// Track one sequence with a trained model.
    Track(TrackArgs),
    /// Score a track file against ground truth.
    Eval(EvalArgs),
    /// Synthetic train/test benchmark with a score-threshold sweep.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value_t = DEFAULT_TAU_MAX)]
    tau_max: u32,
    #[arg(long, default_value_t = DEFAULT_MIN_CLUSTER_SIZE)]
    min_cluster_size: usize,
    /// Drop detections scoring below this value.
    #[arg(long)]
    score_min: Option<f64>,
    #[arg(long, default_value = "dm", value_parser = parse_scheme)]
    scheme: Scheme,
    #[arg(long, default_value = "gaec", value_parser = parse_init)]
    init: InitMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESH)]
    iou_thresh: f64,
    #[arg(long, default_value_t = 100)]
    max_passes: usize,
    /// Do not fill gaps inside tracks.
    #[arg(long)]
    no_interpolate: bool,
}

impl Common {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            tau_max: self.tau_max,
            min_cluster_size: self.min_cluster_size,
            score_min: self.score_min,
            scheme: self.scheme,
            init: self.init,
            max_passes: self.max_passes,
            interpolate: !self.no_interpolate,
            iou_assign: self.iou_thresh,
            iou_eval: self.iou_thresh,
            seed: self.seed,
            ..PipelineConfig::default()
        }
    }
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_init(s: &str) -> std::result::Result<InitMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// `person:start:len`, person counted from zero.
fn parse_occlusion(s: &str) -> std::result::Result<Occlusion, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("expected person:start:len, got '{s}'");
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(Occlusion {
        person: parts[0].parse().map_err(|_| bad())?,
        start: parts[1].parse().map_err(|_| bad())?,
        len: parts[2].parse().map_err(|_| bad())?,
    })
}

#[derive(Args, Debug, Clone)]
struct SynthOptions {
    #[arg(long, default_value_t = 5)]
    persons: usize,
    #[arg(long, default_value_t = 200)]
    frames: u32,
    #[arg(long, default_value_t = 0.1)]
    fp_rate: f64,
    #[arg(long, default_value_t = 0.1)]
    fn_rate: f64,
    #[arg(long, default_value_t = 0.1)]
    dup_rate: f64,
    /// Box jitter as a fraction of box height.
    #[arg(long, default_value_t = 0.04)]
    det_jitter: f64,
    /// Per-frame standard deviation of the global camera offset, pixels.
    #[arg(long, default_value_t = 0.0)]
    camera_jitter: f64,
    #[arg(long, default_value_t = 60)]
    matches_per_pair: usize,
    #[arg(long, default_value_t = 0.2)]
    match_noise: f64,
    /// Hide a person, as `person:start:len`. Repeatable.
    #[arg(long = "occlude", value_parser = parse_occlusion)]
    occlusions: Vec<Occlusion>,
}

impl SynthOptions {
    fn config(&self, name: &str) -> SynthConfig {
        SynthConfig {
            name: name.to_string(),
            persons: self.persons,
            frames: self.frames,
            fp_rate: self.fp_rate,
            fn_rate: self.fn_rate,
            dup_rate: self.dup_rate,
            det_jitter: self.det_jitter,
            camera_jitter: self.camera_jitter,
            matches_per_pair: self.matches_per_pair,
            match_noise: self.match_noise,
            occlusions: self.occlusions.clone(),
            ..SynthConfig::default()
        }
    }

    fn to_text(&self) -> String {
        let occ: Vec<String> = self
            .occlusions
            .iter()
            .map(|o| format!("{}:{}:{}", o.person, o.start, o.len))
            .collect();
        format!(
            "persons = {}\nframes = {}\nfp_rate = {:?}\nfn_rate = {:?}\ndup_rate = {:?}\ndet_jitter = {:?}\ncamera_jitter = {:?}\nmatches_per_pair = {}\nmatch_noise = {:?}\nocclusions = {}\n",
            self.persons,
            self.frames,
            self.fp_rate,
            self.fn_rate,
            self.dup_rate,
            self.det_jitter,
            self.camera_jitter,
            self.matches_per_pair,
            self.match_noise,
            occ.join(",")
        )
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    /// Output sequence directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "synth")]
    name: String,
    #[command(flatten)]
    synth: SynthOptions,
}

#[derive(Args, Debug)]
struct PairsArgs {
    /// Sequence directories with ground truth.
    #[arg(long = "seq", required = true)]
    seqs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long = "seq", required = true)]
    seqs: Vec<PathBuf>,
    /// Model output path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TrackArgs {
    #[arg(long)]
    seq: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Track file in MOT submission format.
    #[arg(long)]
    out: PathBuf,
    /// Also write solver diagnostics here.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    seq: PathBuf,
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESH)]
    iou_thresh: f64,
    /// Report path; the table goes to stdout either way.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the report as CSV instead of a table.
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Directory for sequences, models and reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Score thresholds to sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.0,0.2,0.4,0.6,0.8")]
    sweep: Vec<f64>,
    #[command(flatten)]
    synth: SynthOptions,
    #[command(flatten)]
    common: Common,
}

fn dump(path: &Path, text: &str) -> Result<()> {
    if path == Path::new("-") {
        print!("{text}");
        Ok(())
    } else {
        write_text(path, text)
    }
}

fn load_all(dirs: &[PathBuf]) -> Result<Vec<SequenceBundle>> {
    dirs.iter().map(|d| SequenceBundle::load(d)).collect()
}

fn format_accuracy(rows: &[(&str, &AccuracyTable)]) -> String {
    let mut dts: Vec<u32> = rows.iter().flat_map(|(_, t)| t.keys().copied()).collect();
    dts.sort_unstable();
    dts.dedup();
    let mut out = format!("{:>6}", "scheme");
    for dt in &dts {
        let _ = write!(out, " {:>7}", format!("dt={dt}"));
    }
    out.push('\n');
    for (name, table) in rows {
        let _ = write!(out, "{name:>6}");
        for dt in &dts {
            match table.get(dt) {
                Some((acc, _)) => {
                    let _ = write!(out, " {acc:>7.4}");
                }
                None => {
                    let _ = write!(out, " {:>7}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            if let Some(p) = &cli.dump_config {
                dump(p, &format!("seed = {}\n{}", a.seed, a.synth.to_text()))?;
            }
            let bundle = synth_sequence(&a.synth.config(&a.name), a.seed)?;
            bundle.save(&a.out)?;
            log::info!("wrote {} detections to {}", bundle.detections.len(), a.out.display());
        }
        Command::Pairs(a) => {
            let config = a.common.config();
            if let Some(p) = &cli.dump_config {
                dump(p, &config.to_text())?;
            }
            let pairs = harvest_training_pairs(&load_all(&a.seqs)?, &config)?;
            let dim = config.scheme.dim();
            let mut out = String::from("v,w,dt,label");
            for j in 1..=dim {
                let _ = write!(out, ",f{j}");
            }
            out.push('\n');
            for p in &pairs {
                let _ = write!(out, "{},{},{},{}", p.v, p.w, p.dt, u8::from(p.label));
                for x in &p.features.values {
                    let _ = write!(out, ",{x:?}");
                }
                out.push('\n');
            }
            write_text(&a.out, &out)?;
        }
        Command::Train(a) => {
            let config = a.common.config();
            if let Some(p) = &cli.dump_config {
                dump(p, &config.to_text())?;
            }
            let model = train_model(&load_all(&a.seqs)?, &config)?;
            model.save(&a.out)?;
        }
        Command::Track(a) => {
            let config = a.common.config();
            if let Some(p) = &cli.dump_config {
                dump(p, &config.to_text())?;
            }
            let bundle = SequenceBundle::load(&a.seq)?;
            let model = PairModel::load(&a.model)?;
            let (tracks, d) = run_tracking(&bundle, &model, &config)?;
            write_text(&a.out, &format_tracks(&tracks))?;
            if let Some(path) = &a.diagnostics {
                write_text(
                    path,
                    &format!(
                        "nodes = {}\nedges = {}\npasses = {}\nobjective = {:?}\nclusters = {}\ntracks = {}\nsolve_seconds = {:.3}\ntotal_seconds = {:.3}\n",
                        d.nodes, d.edges, d.passes, d.objective, d.clusters, d.tracks, d.solve_seconds, d.total_seconds
                    ),
                )?;
            }
        }
        Command::Eval(a) => {
            if let Some(p) = &cli.dump_config {
                dump(p, &format!("iou_thresh = {:?}\n", a.iou_thresh))?;
            }
            let bundle = SequenceBundle::load(&a.seq)?;
            let gt = bundle.gt.as_ref().ok_or(Error::NoSupervision)?;
            let report = clear_mot(&load_tracks(&a.tracks)?, gt, a.iou_thresh)?;
            print!("{}", report.to_table());
            if let Some(out) = &a.out {
                write_text(out, &if a.csv { report.to_csv() } else { report.to_table() })?;
            }
        }
        Command::Bench(a) => bench(cli.dump_config.as_deref(), &a)?,
    }
    Ok(())
}

fn bench(dump_config: Option<&Path>, a: &BenchArgs) -> Result<()> {
    let base = a.common.config();
    if let Some(p) = dump_config {
        dump(p, &format!("{}{}", base.to_text(), a.synth.to_text()))?;
    }
    let train = synth_sequence(&a.synth.config("bench-train"), base.seed)?;
    let test = synth_sequence(&a.synth.config("bench-test"), base.seed.wrapping_add(1))?;

    let mut models = Vec::new();
    let mut tables = Vec::new();
    for scheme in [Scheme::Dm, Scheme::St] {
        let cfg = PipelineConfig { scheme, ..base.clone() };
        let model = train_model(std::slice::from_ref(&train), &cfg)?;
        let pairs = harvest_training_pairs(std::slice::from_ref(&test), &cfg)?;
        tables.push(pair_accuracy(&model, &pairs)?);
        models.push(model);
    }
    let accuracy = format_accuracy(&[("DM", &tables[0]), ("ST", &tables[1])]);

    let model = &models[if base.scheme == Scheme::Dm { 0 } else { 1 }];
    let gt = test.gt.as_ref().ok_or(Error::NoSupervision)?;
    let mut sweep = format!(
        "{:>9} {:>7} {:>9} {:>7} {:>9} {:>8} {:>5} {:>5} {:>5}\n",
        "score_min", "|V|", "|E|", "passes", "solve_s", "MOTA", "FP", "FN", "IDSW"
    );
    for &s in &a.sweep {
        let cfg = PipelineConfig { score_min: Some(s), ..base.clone() };
        let (tracks, d) = run_tracking(&test, model, &cfg)?;
        let r = clear_mot(&tracks, gt, cfg.iou_eval)?;
        let _ = writeln!(
            sweep,
            "{:>9.2} {:>7} {:>9} {:>7} {:>9.3} {:>8.4} {:>5} {:>5} {:>5}",
            s, d.nodes, d.edges, d.passes, d.solve_seconds, r.mota, r.fp, r.fn_, r.idsw
        );
    }
    print!("pair accuracy\n{accuracy}\ntracking ({})\n{sweep}", base.scheme);
    if let Some(dir) = &a.out {
        train.save(&dir.join("train"))?;
        test.save(&dir.join("test"))?;
        models[0].save(&dir.join("model-dm.txt"))?;
        models[1].save(&dir.join("model-st.txt"))?;
        write_text(&dir.join("accuracy.txt"), &accuracy)?;
        write_text(&dir.join("sweep.txt"), &sweep)?;
    }
    Ok(())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").replace('"', "'")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            eprintln!("error: kind=usage msg=\"{}\"", one_line(text.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: kind={} msg=\"{}\"", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
