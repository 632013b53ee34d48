//! Benchmark workflow: up-scale held-out pairs with the network and the
//! classical baselines, then score them with PSNR and trimmed relative-error
//! statistics over the whole window and its transition region.

use serde::{Deserialize, Serialize};

use crate::dataset::{chart_coordinate, from_model_space, make_sample, pack, to_model_space, CropStrategy, Sample};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::interp::{locate, upscale_grid, GridData, InterpolationMethod};
use crate::metrics::{psnr, region_stats, relative_error_physical, ErrorReport, Region, ScenarioTag};
use crate::net::{predict_grid, Network};
use crate::phase::{minmax_normalize, transition_mask, AxisGrid, PhaseDiagram, TransitionMask};
use crate::rng::{stream, Stream};

pub const NETWORK_LABEL: &str = "nn-iqs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    InRange,
    BeyondRatio,
    UnseenW,
    LargeN,
}

impl Scenario {
    pub fn tag(self, ratio: usize) -> ScenarioTag {
        match self {
            Scenario::InRange => ScenarioTag::InRange(ratio),
            Scenario::BeyondRatio => ScenarioTag::BeyondRatio(ratio),
            Scenario::UnseenW => ScenarioTag::UnseenW(ratio),
            Scenario::LargeN => ScenarioTag::LargeN(ratio),
        }
    }

    /// Up-scaling ratios examined by default.
    pub fn default_ratios(self) -> Vec<usize> {
        match self {
            Scenario::InRange | Scenario::UnseenW => vec![2, 3, 4],
            Scenario::BeyondRatio => vec![6, 8, 10],
            Scenario::LargeN => vec![4],
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" | "in-range" => Ok(Scenario::InRange),
            "beyond" | "beyond-ratio" => Ok(Scenario::BeyondRatio),
            "unseenw" | "unseen-w" => Ok(Scenario::UnseenW),
            "largen" | "large-n" => Ok(Scenario::LargeN),
            other => Err(Error::invalid(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub scenario: Scenario,
    pub ratios: Vec<usize>,
    pub pairs_per_ratio: usize,
    pub input_side: usize,
    pub strategy: CropStrategy,
    pub seed: u64,
}

impl EvalConfig {
    pub fn new(scenario: Scenario, input_side: usize, seed: u64) -> Self {
        EvalConfig {
            scenario,
            ratios: scenario.default_ratios(),
            pairs_per_ratio: 1,
            input_side,
            strategy: CropStrategy::RandomCoordinates,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratios.is_empty() || self.ratios.contains(&0) {
            return Err(Error::invalid("evaluation ratios must be non-empty and positive"));
        }
        if self.pairs_per_ratio == 0 || self.input_side < 2 {
            return Err(Error::invalid("evaluation needs at least one pair and an input side of 2"));
        }
        Ok(())
    }
}

fn clamp_axis(targets: &[f64], hull: &[f64]) -> Vec<f64> {
    targets.iter().map(|&x| x.clamp(hull[0], hull[hull.len() - 1])).collect()
}

/// Fractional-index coordinates of `x` along `axis`, linear within each cell.
fn index_coordinates(axis: &[f64], xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let (i, f) = locate(axis, x);
            i as f64 + f
        })
        .collect()
}

/// Interpolates `values` given at `axes` onto `targets`, clamping targets into
/// the hull. Cubic convolution runs in index space so that non-uniform input
/// axes are accepted.
pub fn baseline_upscale(
    values: &Grid,
    axes: [&[f64]; 2],
    targets: [&[f64]; 2],
    method: InterpolationMethod,
) -> Result<Grid> {
    let tr = clamp_axis(targets[0], axes[0]);
    let tc = clamp_axis(targets[1], axes[1]);
    if method == InterpolationMethod::Bicubic {
        let ir: Vec<f64> = (0..axes[0].len()).map(|i| i as f64).collect();
        let ic: Vec<f64> = (0..axes[1].len()).map(|j| j as f64).collect();
        let data = GridData::new(values, &ir, &ic)?;
        return upscale_grid(&data, method, &index_coordinates(axes[0], &tr), &index_coordinates(axes[1], &tc));
    }
    upscale_grid(&GridData::new(values, axes[0], axes[1])?, method, &tr, &tc)
}

/// A method's prediction for a sample's full target window, in model space.
pub fn predict_sample(sample: &Sample, network: Option<&Network>, method: Option<InterpolationMethod>) -> Result<Grid> {
    let axes = sample.target_axes();
    let targets = [axes[0].as_slice(), axes[1].as_slice()];
    match (network, method) {
        (Some(net), None) => {
            let latent = net.encode(&sample.input, &sample.input_coords)?;
            predict_grid(&latent, net, targets, sample.cell())
        }
        (None, Some(m)) => {
            let coords = [sample.input_coords[0].as_slice(), sample.input_coords[1].as_slice()];
            baseline_upscale(&sample.input_grid(), coords, targets, m)
        }
        _ => Err(Error::invalid("exactly one of network or baseline method must be given")),
    }
}

/// Scores of one method on one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub diagram: usize,
    pub ratio: usize,
    pub method: String,
    pub psnr: f64,
    pub whole: Vec<f64>,
    pub transition: Vec<f64>,
    pub floored: usize,
}

/// Transition region of the window, taken from the full source diagram.
pub fn window_mask(diagram: &PhaseDiagram, sample: &Sample) -> Result<TransitionMask> {
    let full = transition_mask(&minmax_normalize(diagram)?);
    Ok(full.select(&sample.provenance.window_rows, &sample.provenance.window_cols))
}

fn score(sample: &Sample, mask: &TransitionMask, method: &str, pred: &Grid) -> Result<PairScore> {
    let truth = sample.target_grid();
    let db = psnr(pred, &truth)?;
    let window = &sample.provenance;
    let truth_phys = truth.try_map(from_model_space)?;
    let pred_phys = pred.try_map(from_model_space)?;
    let rel = relative_error_physical(&pred_phys, &truth_phys);
    let values = rel.errors.as_slice();
    let transition = values.iter().zip(mask.cells()).filter(|(_, &m)| m).map(|(&v, _)| v).collect();
    Ok(PairScore {
        diagram: window.diagram,
        ratio: window.ratio,
        method: method.to_string(),
        psnr: db,
        whole: values.to_vec(),
        transition,
        floored: rel.floored,
    })
}

/// Scores the network (when given) and every baseline on one pair.
pub fn evaluate_sample(
    network: Option<&Network>,
    methods: &[InterpolationMethod],
    diagram: &PhaseDiagram,
    sample: &Sample,
) -> Result<Vec<PairScore>> {
    let mask = window_mask(diagram, sample)?;
    let mut out = Vec::with_capacity(methods.len() + 1);
    if let Some(net) = network {
        out.push(score(sample, &mask, NETWORK_LABEL, &predict_sample(sample, Some(net), None)?)?);
    }
    for &m in methods {
        out.push(score(sample, &mask, m.name(), &predict_sample(sample, None, Some(m))?)?);
    }
    Ok(out)
}

/// Pairs for every `(diagram, ratio, repeat)`, each from its own stream.
pub fn evaluation_samples(config: &EvalConfig, diagrams: &[PhaseDiagram], ids: &[usize]) -> Result<Vec<Sample>> {
    config.validate()?;
    let mut out = Vec::new();
    let mut index = 0u64;
    for &id in ids {
        let diagram = diagrams.get(id).ok_or_else(|| Error::invalid(format!("diagram index {id} out of range")))?;
        for &ratio in &config.ratios {
            for _ in 0..config.pairs_per_ratio {
                let mut rng = stream(config.seed, Stream::EvalPair, index);
                index += 1;
                out.push(make_sample(id, diagram, config.strategy, config.input_side, ratio, &mut rng)?);
            }
        }
    }
    Ok(out)
}

/// Pooled statistics of one method at one ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub ratio: usize,
    pub pairs: usize,
    pub mean_psnr: f64,
    pub whole: ErrorReport,
    /// Absent when no window touched the transition region.
    pub transition: Option<ErrorReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: EvalConfig,
    pub diagrams: Vec<usize>,
    pub summaries: Vec<MethodSummary>,
}

impl BenchmarkReport {
    pub fn find(&self, method: &str, ratio: usize) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method && s.ratio == ratio)
    }
}

fn pooled(values: &[f64], region: Region, tag: ScenarioTag, floored: usize) -> Result<ErrorReport> {
    let mask = TransitionMask::full(1, values.len());
    let grid = Grid::from_vec(1, values.len(), values.to_vec())?;
    let mut report = region_stats(&grid, &mask, region)?;
    report.scenario = Some(tag);
    report.floored = floored;
    Ok(report)
}

/// Pools pair scores per `(method, ratio)` in first-seen order.
pub fn summarize(scores: &[PairScore], scenario: Scenario) -> Result<Vec<MethodSummary>> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for s in scores {
        let key = (s.method.clone(), s.ratio);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, ratio)| {
            let group: Vec<&PairScore> = scores.iter().filter(|s| s.method == method && s.ratio == ratio).collect();
            let whole: Vec<f64> = group.iter().flat_map(|s| s.whole.iter().copied()).collect();
            let transition: Vec<f64> = group.iter().flat_map(|s| s.transition.iter().copied()).collect();
            let floored = group.iter().map(|s| s.floored).sum();
            let tag = scenario.tag(ratio);
            Ok(MethodSummary {
                pairs: group.len(),
                mean_psnr: group.iter().map(|s| s.psnr).sum::<f64>() / group.len() as f64,
                whole: pooled(&whole, Region::Whole, tag, floored)?,
                transition: if transition.is_empty() {
                    None
                } else {
                    Some(pooled(&transition, Region::Transition, tag, 0)?)
                },
                method,
                ratio,
            })
        })
        .collect()
}

pub fn benchmark(
    network: Option<&Network>,
    methods: &[InterpolationMethod],
    diagrams: &[PhaseDiagram],
    ids: &[usize],
    config: &EvalConfig,
) -> Result<BenchmarkReport> {
    let samples = evaluation_samples(config, diagrams, ids)?;
    if samples.is_empty() {
        return Err(Error::Empty("no evaluation pairs".into()));
    }
    let mut scores = Vec::new();
    for s in &samples {
        scores.extend(evaluate_sample(network, methods, &diagrams[s.provenance.diagram], s)?);
    }
    Ok(BenchmarkReport {
        config: config.clone(),
        diagrams: ids.to_vec(),
        summaries: summarize(&scores, config.scenario)?,
    })
}

/// How a diagram is up-scaled.
#[derive(Debug, Clone, Copy)]
pub enum Upscaler<'a> {
    Network(&'a Network),
    Baseline(InterpolationMethod),
}

/// Affine map from a physical axis onto the chart whose cell centers are the
/// `count` target nodes spanning `[lo, hi]`.
fn to_chart(lo: f64, hi: f64, count: usize) -> impl Fn(f64) -> f64 {
    let first = chart_coordinate(0, count);
    let last = chart_coordinate(count - 1, count);
    move |x| first + (x - lo) / (hi - lo) * (last - first)
}

/// Up-scales a physical diagram onto `target` axes. Both the input and the
/// targets are mapped onto the target chart, and interpolation runs in model
/// space for every method.
pub fn upscale_diagram(input: &PhaseDiagram, target: &AxisGrid, how: Upscaler) -> Result<PhaseDiagram> {
    target.validate()?;
    let (rows, cols) = target.shape();
    if rows < 2 || cols < 2 {
        return Err(Error::invalid("target axes need at least two points each"));
    }
    let (t, m) = (&target.t_values, &target.mu_values);
    let ft = to_chart(t[0], t[rows - 1], rows);
    let fm = to_chart(m[0], m[cols - 1], cols);
    let in_axes = [
        input.axes.t_values.iter().map(|&x| ft(x)).collect::<Vec<_>>(),
        input.axes.mu_values.iter().map(|&x| fm(x)).collect::<Vec<_>>(),
    ];
    let out_axes = [t.iter().map(|&x| ft(x)).collect::<Vec<_>>(), m.iter().map(|&x| fm(x)).collect::<Vec<_>>()];
    let model = input.values.map(to_model_space);
    let targets = [out_axes[0].as_slice(), out_axes[1].as_slice()];
    let pred = match how {
        Upscaler::Network(net) => {
            let latent = net.encode(&pack(&model), &in_axes)?;
            predict_grid(&latent, net, targets, [2.0 / rows as f64, 2.0 / cols as f64])?
        }
        Upscaler::Baseline(method) => baseline_upscale(&model, [&in_axes[0], &in_axes[1]], targets, method)?,
    };
    let mut out = PhaseDiagram::new(input.params, target.clone(), pred.try_map(from_model_space)?)?;
    out.generator_version = input.generator_version.clone();
    Ok(out)
}

/// Prediction scored against ground truth on the same axes, both physical.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramComparison {
    pub psnr: f64,
    pub errors: Grid,
    pub mask: TransitionMask,
    pub whole: ErrorReport,
    pub transition: Option<ErrorReport>,
}

pub fn compare_diagrams(pred: &PhaseDiagram, truth: &PhaseDiagram) -> Result<DiagramComparison> {
    pred.values.ensure_same_shape(&truth.values)?;
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * y.abs().max(1.0));
    if !close(&pred.axes.t_values, &truth.axes.t_values) || !close(&pred.axes.mu_values, &truth.axes.mu_values) {
        return Err(Error::ShapeMismatch("prediction and truth lie on different axes".into()));
    }
    let db = psnr(&pred.values.map(to_model_space), &truth.values.map(to_model_space))?;
    let rel = relative_error_physical(&pred.values, &truth.values);
    let (rows, cols) = truth.values.shape();
    let mask = match minmax_normalize(truth) {
        Ok(n) => transition_mask(&n),
        Err(Error::DegenerateNormalization) => TransitionMask::from_cells(rows, cols, vec![false; rows * cols])?,
        Err(e) => return Err(e),
    };
    let mut whole = region_stats(&rel.errors, &TransitionMask::full(rows, cols), Region::Whole)?;
    whole.floored = rel.floored;
    let transition = match region_stats(&rel.errors, &mask, Region::Transition) {
        Ok(r) => Some(r),
        Err(Error::Empty(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(DiagramComparison { psnr: db, errors: rel.errors, mask, whole, transition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::chart_axis;
    use crate::interp::interpolate_point;
    use crate::phase::{generate, AxisGrid};
    use crate::spin::ModelParams;

    fn diagram() -> PhaseDiagram {
        generate(&ModelParams::new(4, 0.8, 0.0).unwrap(), &AxisGrid::default_window(24).unwrap()).unwrap()
    }

    #[test]
    fn warped_bicubic_matches_plain_bicubic_on_uniform_axes() {
        let g = Grid::from_fn(6, 7, |i, j| ((i * 3 + j) as f64 * 0.4).sin());
        let (r, c) = (chart_axis(6), chart_axis(7));
        let targets = [chart_axis(12), chart_axis(14)];
        let warped = baseline_upscale(&g, [&r, &c], [&targets[0], &targets[1]], InterpolationMethod::Bicubic).unwrap();
        let data = GridData::new(&g, &r, &c).unwrap();
        for (i, &x) in targets[0].iter().enumerate() {
            for (j, &y) in targets[1].iter().enumerate() {
                let x = x.clamp(r[0], r[5]);
                let y = y.clamp(c[0], c[6]);
                let direct = interpolate_point(&data, InterpolationMethod::Bicubic, [x, y]).unwrap();
                assert!((warped.get(i, j) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn baselines_are_node_exact_on_random_inputs() {
        let d = diagram();
        let mut rng = stream(3, Stream::EvalPair, 0);
        let s = make_sample(0, &d, CropStrategy::RandomCoordinates, 6, 4, &mut rng).unwrap();
        let input = s.input_grid();
        for m in InterpolationMethod::ALL {
            let pred = predict_sample(&s, None, Some(m)).unwrap();
            for (a, &i) in s.provenance.input_rows.iter().enumerate() {
                for (b, &j) in s.provenance.input_cols.iter().enumerate() {
                    assert!((pred.get(i, j) - input.get(a, b)).abs() < 1e-14, "{m:?}");
                }
            }
        }
    }

    #[test]
    fn benchmark_pools_every_method_and_ratio() {
        let d = vec![diagram()];
        let cfg = EvalConfig { ratios: vec![2, 3], pairs_per_ratio: 2, ..EvalConfig::new(Scenario::InRange, 6, 1) };
        let report = benchmark(None, &InterpolationMethod::ALL, &d, &[0], &cfg).unwrap();
        assert_eq!(report.summaries.len(), 6);
        let s = report.find("bilinear", 3).unwrap();
        assert_eq!(s.pairs, 2);
        assert_eq!(s.whole.stats.total, 2 * 18 * 18);
        assert_eq!(s.whole.scenario, Some(ScenarioTag::InRange(3)));
    }

    #[test]
    fn identical_diagrams_compare_to_zero_error() {
        let d = diagram();
        let c = compare_diagrams(&d, &d).unwrap();
        assert_eq!(c.whole.stats.mean, 0.0);
        assert_eq!(c.whole.stats.max_after_trim, 0.0);
        assert_eq!(c.psnr, crate::metrics::PSNR_CAP_DB);
    }

    #[test]
    fn upscaling_onto_own_axes_is_identity_for_baselines() {
        let d = diagram();
        for m in InterpolationMethod::ALL {
            let out = upscale_diagram(&d, &d.axes, Upscaler::Baseline(m)).unwrap();
            for (a, b) in out.values.as_slice().iter().zip(d.values.as_slice()) {
                assert!((a - b).abs() < 1e-12 * b.abs().max(1e-3), "{m:?}");
            }
        }
        let net = Network::new(crate::net::ArchConfig::mini(), 1).unwrap();
        let fine = AxisGrid::uniform(0.1, 2.5, 40, 1.4, 40).unwrap();
        let out = upscale_diagram(&d, &fine, Upscaler::Network(&net)).unwrap();
        assert_eq!(out.values.shape(), (40, 40));
    }

    #[test]
    fn scenario_names_parse() {
        assert_eq!("beyond".parse::<Scenario>().unwrap(), Scenario::BeyondRatio);
        assert_eq!("largen".parse::<Scenario>().unwrap().default_ratios(), vec![4]);
        assert!("sideways".parse::<Scenario>().is_err());
    }
}
