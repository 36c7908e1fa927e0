//! Logistic join-probability models and signed edge costs.
//!
//! One model is fitted per frame gap `dt in 0..=tau_max`. Features are
//! z-scored with statistics of the gap's training pairs, the bias is left
//! unpenalised, and the weights carry a small L2 penalty. The probability
//! `p` that two detections show the same person becomes the edge cost
//! `ln(p / (1 - p))`: positive costs discourage cutting, negative costs
//! reward it.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{edge_features, scheme_for_gap, CorrespondenceSet, FeatureVector, Scheme};
use crate::graph::{build_graph, iou_unchecked, Detection};
use crate::truth::GroundTruth;

/// Probabilities are clamped to `[EPS, 1 - EPS]`.
pub const PROB_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub v: usize,
    pub w: usize,
    pub dt: u32,
    pub features: FeatureVector,
    /// `true` when both detections belong to the same ground-truth person.
    pub label: bool,
}

/// Ground-truth identity of each detection: the highest-IoU box in the same
/// frame with IoU at least `iou_assign`, or `None` for background.
pub fn assign_identities(detections: &[Detection], gt: &GroundTruth, iou_assign: f64) -> Vec<Option<i64>> {
    let by_frame = gt.by_frame();
    detections
        .iter()
        .map(|d| {
            let bb = d.bbox();
            let mut best: Option<(f64, i64)> = None;
            for g in by_frame.get(&d.frame).into_iter().flatten() {
                let o = iou_unchecked(&bb, &g.bbox);
                if o >= iou_assign && best.is_none_or(|(b, id)| o > b || (o == b && g.id < id)) {
                    best = Some((o, g.id));
                }
            }
            best.map(|(_, id)| id)
        })
        .collect()
}

/// Label every edge of the tracking graph over `detections`.
///
/// `v`/`w` in the returned pairs are detection ids.
pub fn harvest_pairs(
    detections: &[Detection],
    gt: &GroundTruth,
    tau_max: u32,
    iou_assign: f64,
    scheme: Scheme,
    correspondences: &CorrespondenceSet,
) -> Result<Vec<LabeledPair>> {
    if gt.is_empty() {
        return Err(Error::NoSupervision);
    }
    let graph = build_graph(detections, i64::from(tau_max), None)?;
    let identity = assign_identities(&graph.nodes, gt, iou_assign);
    graph
        .edges
        .iter()
        .map(|e| {
            let (a, b) = (&graph.nodes[e.u], &graph.nodes[e.v]);
            let label = matches!((identity[e.u], identity[e.v]), (Some(x), Some(y)) if x == y);
            Ok(LabeledPair {
                v: a.id,
                w: b.id,
                dt: e.dt,
                features: edge_features(scheme, a, b, correspondences)?,
                label,
            })
        })
        .collect()
}

/// Z-score statistics of one bin's training features.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Standardizer {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>, dim: usize) -> Self {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in &rows {
            for ((s, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        let sigma = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, sigma }
    }

    fn apply_into(&self, raw: &[f64], out: &mut Vec<f64>) {
        out.push(1.0);
        out.extend(
            raw.iter()
                .zip(self.mean.iter().zip(&self.sigma))
                .map(|(x, (m, s))| (x - m) / s),
        );
    }
}

/// Standardized design matrix with a leading bias column.
#[derive(Debug, Clone)]
pub struct Dataset {
    cols: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    /// `rows` must already include the bias column.
    pub fn new(rows: &[Vec<f64>], labels: &[bool]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::invalid("row and label counts differ"));
        }
        let cols = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged design matrix"));
        }
        Ok(Dataset {
            cols,
            x: rows.iter().flatten().copied().collect(),
            y: labels.iter().map(|&l| f64::from(u8::from(l))).collect(),
        })
    }

    fn standardized(raw: &[&[f64]], labels: &[bool], stats: &Standardizer) -> Self {
        let cols = stats.mean.len() + 1;
        let mut x = Vec::with_capacity(raw.len() * cols);
        for r in raw {
            stats.apply_into(r, &mut x);
        }
        Dataset {
            cols,
            x,
            y: labels.iter().map(|&l| f64::from(u8::from(l))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.cols..(i + 1) * self.cols]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.y[i]
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean negative log-likelihood plus `lambda * |w|^2` (bias excluded), and
/// its exact gradient.
pub fn loss_and_gradient(theta: &[f64], data: &Dataset, lambda: f64) -> (f64, Vec<f64>) {
    assert_eq!(theta.len(), data.cols(), "parameter and feature dimensions differ");
    let n = data.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; theta.len()];
    for i in 0..data.len() {
        let row = data.row(i);
        let y = data.label(i);
        let z = dot(theta, row);
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        for (g, x) in grad.iter_mut().zip(row) {
            *g += r * x;
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    for (g, t) in grad.iter_mut().zip(theta).skip(1) {
        loss += lambda * t * t;
        *g += 2.0 * lambda * t;
    }
    (loss, grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1e-4,
            grad_tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    pub iterations: usize,
    pub loss: f64,
    pub grad_norm: f64,
    /// Loss after every accepted step, starting with the initial loss.
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent with an Armijo backtracking line search.
/// Each search starts from the Barzilai-Borwein step of the previous
/// iteration.
pub fn minimize(data: &Dataset, config: &TrainConfig) -> (Vec<f64>, TrainStats) {
    let mut theta = vec![0.0; data.cols()];
    let (mut loss, mut grad) = loss_and_gradient(&theta, data, config.lambda);
    let mut history = vec![loss];
    let mut step = 1.0;
    let mut iterations = 0;
    while iterations < config.max_iter {
        let gnorm2 = dot(&grad, &grad);
        if gnorm2.sqrt() <= config.grad_tol {
            break;
        }
        iterations += 1;
        let mut alpha = step;
        let accepted = loop {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - alpha * g).collect();
            let (tl, tg) = loss_and_gradient(&trial, data, config.lambda);
            if tl <= loss - 1e-4 * alpha * gnorm2 {
                break Some((trial, tl, tg));
            }
            alpha *= 0.5;
            if alpha < 1e-20 {
                break None;
            }
        };
        let Some((next, next_loss, next_grad)) = accepted else {
            break;
        };
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        step = if sy > 0.0 { dot(&s, &s) / sy } else { 1.0 };
        theta = next;
        loss = next_loss;
        grad = next_grad;
        history.push(loss);
    }
    let grad_norm = dot(&grad, &grad).sqrt();
    (
        theta,
        TrainStats {
            iterations,
            loss,
            grad_norm,
            loss_history: history,
        },
    )
}

/// Fitted parameters for one frame gap.
#[derive(Debug, Clone, PartialEq)]
pub struct BinModel {
    pub scheme: Scheme,
    /// Bias first, then one weight per standardized feature.
    pub theta: Vec<f64>,
    pub stats: Standardizer,
}

impl BinModel {
    pub fn logit(&self, f: &FeatureVector) -> Result<f64> {
        if f.scheme != self.scheme || f.values.len() != self.stats.mean.len() {
            return Err(Error::invalid(format!(
                "feature scheme {} does not match model scheme {}",
                f.scheme, self.scheme
            )));
        }
        let mut row = Vec::with_capacity(self.theta.len());
        self.stats.apply_into(&f.values, &mut row);
        Ok(dot(&self.theta, &row))
    }
}

/// Fit the model for one gap from the pairs with that gap.
pub fn train(
    pairs: &[LabeledPair],
    scheme: Scheme,
    dt: u32,
    config: &TrainConfig,
) -> Result<(BinModel, TrainStats)> {
    let bin_scheme = scheme_for_gap(scheme, dt);
    let selected: Vec<&LabeledPair> = pairs
        .iter()
        .filter(|p| p.dt == dt && p.features.scheme == bin_scheme)
        .collect();
    let positives = selected.iter().filter(|p| p.label).count();
    if positives == 0 || positives == selected.len() {
        return Err(Error::DegenerateLabels { bin: dt as usize });
    }
    let raw: Vec<&[f64]> = selected.iter().map(|p| p.features.values.as_slice()).collect();
    let labels: Vec<bool> = selected.iter().map(|p| p.label).collect();
    let stats = Standardizer::fit(raw.iter().copied(), bin_scheme.dim());
    let data = Dataset::standardized(&raw, &labels, &stats);
    let (theta, report) = minimize(&data, config);
    log::debug!(
        "bin dt={dt}: {} pairs, {positives} positive, loss {:.6} after {} iterations",
        selected.len(),
        report.loss,
        report.iterations
    );
    Ok((
        BinModel {
            scheme: bin_scheme,
            theta,
            stats,
        },
        report,
    ))
}

/// Per-gap logistic models for gaps `0..=tau_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    pub scheme: Scheme,
    pub tau_max: u32,
    pub bins: Vec<BinModel>,
}

impl PairModel {
    /// Train every bin; bins are independent and fitted in parallel.
    pub fn fit(pairs: &[LabeledPair], scheme: Scheme, tau_max: u32, config: &TrainConfig) -> Result<Self> {
        let bins = std::thread::scope(|s| {
            let handles: Vec<_> = (0..=tau_max)
                .map(|dt| s.spawn(move || train(pairs, scheme, dt, config)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training thread panicked").map(|(m, _)| m))
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(PairModel {
            scheme,
            tau_max,
            bins,
        })
    }

    pub fn bin(&self, dt: u32) -> Result<&BinModel> {
        self.bins.get(dt as usize).ok_or(Error::UnknownBin(dt as usize))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }

    /// Key-value text form; floats use the shortest representation that
    /// parses back to the same bits.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut out = String::from("# multicut-tracking pair model\n");
        let _ = writeln!(out, "scheme {}", self.scheme);
        let _ = writeln!(out, "tau_max {}", self.tau_max);
        for (dt, b) in self.bins.iter().enumerate() {
            let _ = writeln!(out, "bin {dt} {}", b.scheme);
            let _ = writeln!(out, "theta {}", join(&b.theta));
            let _ = writeln!(out, "mean {}", join(&b.stats.mean));
            let _ = writeln!(out, "sigma {}", join(&b.stats.sigma));
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut scheme = None;
        let mut tau_max = None;
        // (scheme, theta, mean, sigma) per bin, in file order.
        #[allow(clippy::type_complexity)]
        let mut bins: Vec<(Scheme, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            let floats = |rest: &[&str]| -> Result<Vec<f64>> {
                rest.iter()
                    .map(|s| s.parse::<f64>().map_err(|e| perr(lineno, format!("bad number '{s}': {e}"))))
                    .collect()
            };
            match key {
                "scheme" => {
                    let s = rest.first().ok_or_else(|| perr(lineno, "missing scheme".into()))?;
                    scheme = Some(s.parse::<Scheme>().map_err(|e| perr(lineno, e.to_string()))?);
                }
                "tau_max" => {
                    let s = rest.first().ok_or_else(|| perr(lineno, "missing tau_max".into()))?;
                    tau_max = Some(s.parse::<u32>().map_err(|e| perr(lineno, e.to_string()))?);
                }
                "bin" => {
                    let [dt, s] = rest[..] else {
                        return Err(perr(lineno, "expected 'bin <dt> <scheme>'".into()));
                    };
                    let dt: usize = dt.parse().map_err(|_| perr(lineno, format!("bad bin index '{dt}'")))?;
                    if dt != bins.len() {
                        return Err(perr(lineno, format!("expected bin {}, found {dt}", bins.len())));
                    }
                    let s = s.parse::<Scheme>().map_err(|e| perr(lineno, e.to_string()))?;
                    bins.push((s, Vec::new(), Vec::new(), Vec::new()));
                }
                "theta" | "mean" | "sigma" => {
                    let bin = bins.last_mut().ok_or_else(|| perr(lineno, format!("'{key}' before any bin")))?;
                    let values = floats(&rest)?;
                    match key {
                        "theta" => bin.1 = values,
                        "mean" => bin.2 = values,
                        _ => bin.3 = values,
                    }
                }
                other => return Err(perr(lineno, format!("unknown key '{other}'"))),
            }
        }
        let scheme = scheme.ok_or_else(|| perr(0, "missing scheme".into()))?;
        let tau_max = tau_max.ok_or_else(|| perr(0, "missing tau_max".into()))?;
        if bins.len() != tau_max as usize + 1 {
            return Err(perr(0, format!("expected {} bins, found {}", tau_max + 1, bins.len())));
        }
        let bins = bins
            .into_iter()
            .enumerate()
            .map(|(dt, (s, theta, mean, sigma))| {
                let d = s.dim();
                if theta.len() != d + 1 || mean.len() != d || sigma.len() != d {
                    return Err(perr(0, format!("bin {dt}: wrong vector lengths for scheme {s}")));
                }
                if sigma.iter().any(|&x| x.is_nan() || x <= 0.0) {
                    return Err(perr(0, format!("bin {dt}: sigma must be positive")));
                }
                Ok(BinModel {
                    scheme: s,
                    theta,
                    stats: Standardizer { mean, sigma },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PairModel {
            scheme,
            tau_max,
            bins,
        })
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Probability that the pair shows the same person.
pub fn join_probability(model: &PairModel, f: &FeatureVector, dt: u32) -> Result<f64> {
    let z = model.bin(dt)?.logit(f)?;
    Ok(clamp_prob(sigmoid(z)))
}

/// `ln(p / (1 - p))` of a join probability.
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Signed cost paid when the edge is cut.
pub fn edge_cost(model: &PairModel, f: &FeatureVector, dt: u32) -> Result<f64> {
    Ok(logit(join_probability(model, f, dt)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BoundingBox;
    use crate::truth::GtBox;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(dt: u32, values: Vec<f64>, label: bool) -> LabeledPair {
        LabeledPair {
            v: 0,
            w: 1,
            dt,
            features: FeatureVector { scheme: Scheme::St, values },
            label,
        }
    }

    fn single_bin(theta: Vec<f64>, dim: usize) -> PairModel {
        PairModel {
            scheme: Scheme::St,
            tau_max: 0,
            bins: vec![BinModel {
                scheme: Scheme::St,
                theta,
                stats: Standardizer { mean: vec![0.0; dim], sigma: vec![1.0; dim] },
            }],
        }
    }

    fn st(values: Vec<f64>) -> FeatureVector {
        FeatureVector { scheme: Scheme::St, values }
    }

    #[test]
    fn zero_parameters_give_one_half() {
        let m = single_bin(vec![0.0; 7], 6);
        let f = st(vec![1.0, 2.0, 3.0, 4.0, 0.5, 0.1]);
        assert_eq!(join_probability(&m, &f, 0).unwrap(), 0.5);
        assert_eq!(edge_cost(&m, &f, 0).unwrap(), 0.0);
    }

    #[test]
    fn logit_of_ln3_is_three_quarters() {
        let mut theta = vec![0.0; 7];
        theta[0] = 3f64.ln();
        let m = single_bin(theta, 6);
        let f = st(vec![0.0; 6]);
        let p = join_probability(&m, &f, 0).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
        assert!((edge_cost(&m, &f, 0).unwrap() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn clamped_probability_gives_finite_cost() {
        let mut theta = vec![0.0; 7];
        theta[0] = 1e3;
        let m = single_bin(theta, 6);
        let c = edge_cost(&m, &st(vec![0.0; 6]), 0).unwrap();
        let expected = ((1.0 - 1e-6) / 1e-6f64).ln();
        assert!((c - expected).abs() < 1e-6);
        assert!((c - 13.8155).abs() < 1e-4);
    }

    #[test]
    fn unknown_bin_and_wrong_scheme_are_errors() {
        let m = single_bin(vec![0.0; 7], 6);
        assert!(matches!(join_probability(&m, &st(vec![0.0; 6]), 3), Err(Error::UnknownBin(3))));
        let dm = FeatureVector { scheme: Scheme::Dm, values: vec![0.0; 5] };
        assert!(join_probability(&m, &dm, 0).is_err());
    }

    #[test]
    fn loss_at_zero_is_ln2() {
        let rows = vec![vec![1.0, 0.3], vec![1.0, -1.2], vec![1.0, 2.0], vec![1.0, 0.1]];
        let data = Dataset::new(&rows, &[true, false, true, false]).unwrap();
        let (loss, _) = loss_and_gradient(&[0.0, 0.0], &data, 1e-4);
        assert!((loss - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn saturated_pair_has_finite_loss() {
        let data = Dataset::new(&[vec![1.0]], &[true]).unwrap();
        let (loss, grad) = loss_and_gradient(&[800.0], &data, 0.0);
        assert!(loss.is_finite() && loss >= 0.0);
        assert!(grad[0].is_finite());
        let data = Dataset::new(&[vec![1.0]], &[false]).unwrap();
        let (loss, _) = loss_and_gradient(&[800.0], &data, 0.0);
        assert_eq!(loss, 800.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let mut r = vec![1.0];
                r.extend((0..4).map(|_| rng.random_range(-2.0..2.0)));
                r
            })
            .collect();
        let labels: Vec<bool> = (0..40).map(|_| rng.random_bool(0.4)).collect();
        let data = Dataset::new(&rows, &labels).unwrap();
        let theta: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grad) = loss_and_gradient(&theta, &data, 0.01);
        let h = 1e-5;
        for k in 0..theta.len() {
            let mut up = theta.clone();
            up[k] += h;
            let mut dn = theta.clone();
            dn[k] -= h;
            let fd = (loss_and_gradient(&up, &data, 0.01).0 - loss_and_gradient(&dn, &data, 0.01).0) / (2.0 * h);
            assert!((fd - grad[k]).abs() <= 1e-7 * (1.0 + grad[k].abs()), "k={k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn separable_data_is_learned() {
        let mut pairs = Vec::new();
        for i in 0..200 {
            let x = i as f64 / 10.0;
            pairs.push(pair(1, vec![1.0, x, 0.0, 0.0, 0.0, 0.5], x > 10.0));
        }
        let (bin, stats) = train(&pairs, Scheme::St, 1, &TrainConfig::default()).unwrap();
        let correct = pairs
            .iter()
            .filter(|p| (bin.logit(&p.features).unwrap() > 0.0) == p.label)
            .count();
        assert!(correct as f64 / pairs.len() as f64 >= 0.99);
        assert!(stats.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn uninformative_features_give_class_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pairs: Vec<LabeledPair> = (0..20_000)
            .map(|_| {
                let values = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
                pair(2, values, rng.random_bool(0.3))
            })
            .collect();
        let prior = pairs.iter().filter(|p| p.label).count() as f64 / pairs.len() as f64;
        let (bin, _) = train(&pairs, Scheme::St, 2, &TrainConfig::default()).unwrap();
        let model = PairModel { scheme: Scheme::St, tau_max: 2, bins: vec![bin.clone(), bin.clone(), bin] };
        for p in pairs.iter().take(200) {
            let prob = join_probability(&model, &p.features, 2).unwrap();
            assert!((prob - prior).abs() <= 0.05, "p={prob} prior={prior}");
        }
    }

    #[test]
    fn single_class_bin_is_degenerate() {
        let pairs = vec![pair(1, vec![0.0; 6], true), pair(1, vec![1.0; 6], true)];
        assert!(matches!(
            train(&pairs, Scheme::St, 1, &TrainConfig::default()),
            Err(Error::DegenerateLabels { bin: 1 })
        ));
        assert!(matches!(
            train(&pairs, Scheme::St, 4, &TrainConfig::default()),
            Err(Error::DegenerateLabels { bin: 4 })
        ));
    }

    #[test]
    fn zero_variance_feature_gets_unit_sigma() {
        let rows: Vec<Vec<f64>> = vec![vec![2.0, 1.0], vec![2.0, 3.0]];
        let s = Standardizer::fit(rows.iter().map(Vec::as_slice), 2);
        assert_eq!(s.mean, vec![2.0, 2.0]);
        assert_eq!(s.sigma, vec![1.0, 1.0]);
    }

    fn gt_box(frame: u32, id: i64, left: f64) -> GtBox {
        GtBox { frame, id, bbox: BoundingBox::new(left, 0.0, 20.0, 40.0), visibility: 1.0 }
    }

    #[test]
    fn harvest_labels_follow_identity() {
        let gt = GroundTruth::new(vec![gt_box(1, 5, 0.0), gt_box(2, 5, 2.0), gt_box(2, 6, 200.0)]);
        let dets = vec![
            Detection::from_tlwh(0, 1, 0.0, 0.0, 20.0, 40.0, 0.9).unwrap(),
            Detection::from_tlwh(1, 2, 2.0, 0.0, 20.0, 40.0, 0.9).unwrap(),
            Detection::from_tlwh(2, 2, 200.0, 0.0, 20.0, 40.0, 0.9).unwrap(),
            Detection::from_tlwh(3, 2, 600.0, 300.0, 20.0, 40.0, 0.2).unwrap(),
        ];
        let pairs = harvest_pairs(&dets, &gt, 10, 0.5, Scheme::St, &CorrespondenceSet::new()).unwrap();
        let label = |a: usize, b: usize| pairs.iter().find(|p| p.v == a && p.w == b).unwrap().label;
        assert!(label(0, 1));
        assert!(!label(0, 2));
        assert!(!label(1, 2));
        assert!(!label(0, 3) && !label(1, 3) && !label(2, 3));
        assert_eq!(pairs.len(), 6);
    }

    #[test]
    fn harvest_requires_ground_truth() {
        let dets = vec![Detection::from_tlwh(0, 1, 0.0, 0.0, 20.0, 40.0, 0.9).unwrap()];
        assert!(matches!(
            harvest_pairs(&dets, &GroundTruth::default(), 10, 0.5, Scheme::Dm, &CorrespondenceSet::new()),
            Err(Error::NoSupervision)
        ));
    }

    #[test]
    fn model_text_round_trips_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut rv = |n: usize| (0..n).map(|_| rng.random_range(-3.0..3.0) / 7.0).collect::<Vec<f64>>();
        let model = PairModel {
            scheme: Scheme::Dm,
            tau_max: 2,
            bins: vec![
                BinModel { scheme: Scheme::St, theta: rv(7), stats: Standardizer { mean: rv(6), sigma: vec![0.1, 1.0, 3.3, 1e-3, 2.0, 1.0 / 3.0] } },
                BinModel { scheme: Scheme::Dm, theta: rv(6), stats: Standardizer { mean: rv(5), sigma: vec![1.0; 5] } },
                BinModel { scheme: Scheme::Dm, theta: rv(6), stats: Standardizer { mean: rv(5), sigma: vec![0.7; 5] } },
            ],
        };
        let text = model.to_text();
        let back = PairModel::from_text(&text, Path::new("m.txt")).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn malformed_model_reports_line() {
        let err = PairModel::from_text("scheme dm\ntau_max 0\nbin 0 st\ntheta 1 x\n", Path::new("m")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    proptest! {
        #[test]
        fn cost_is_antisymmetric(p in 1e-6..(1.0 - 1e-6f64)) {
            prop_assert!((logit(p) + logit(1.0 - p)).abs() <= 1e-9 * (1.0 + logit(p).abs()));
        }

        #[test]
        fn probability_increases_with_logit(a in -20.0..20.0f64, d in 1e-3..5.0f64) {
            let lo = clamp_prob(sigmoid(a));
            let hi = clamp_prob(sigmoid(a + d));
            prop_assert!(hi >= lo);
            if (-13.0..13.0).contains(&a) && a + d < 13.0 {
                prop_assert!(hi > lo);
            }
        }
    }
}
