use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nniqs_core::dataset::{DatasetSpec, W_RANGE};
use nniqs_core::evaluation::{self, compare_diagrams, upscale_diagram, EvalConfig, Scenario, Upscaler};
use nniqs_core::interp::InterpolationMethod;
use nniqs_core::manifest::{self, Manifest, SplitRule};
use nniqs_core::metrics::{write_error_csv, write_json, ErrorReport, ScenarioTag};
use nniqs_core::net::{self, checkpoint, ArchConfig, Network, NetworkState, TrainingConfig};
use nniqs_core::phase::{generate, linspace, minmax_normalize_values, AxisGrid, PhaseDiagram};
use nniqs_core::{phd, theory, CropStrategy, Error, ModelParams, Result};
use serde::Serialize;
use serde_json::json;

use crate::args::*;

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(a, &cli),
        Command::Theory(a) => theory_table(a, &cli),
        Command::Dataset(a) => dataset(a, &cli),
        Command::Train(a) => train(a, &cli),
        Command::Predict(a) => predict(a, &cli),
        Command::Baseline(a) => baseline(a, &cli),
        Command::Evaluate(a) => evaluate(a, &cli),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

/// Writes `<name>.config.json` with the parsed arguments and the resolved
/// configuration.
fn echo(dir: &Path, name: &str, cli: &Cli, resolved: impl Serialize) -> Result<()> {
    let doc = json!({
        "command": name,
        "generator": nniqs_core::phase::generator_version(),
        "cli": cli,
        "resolved": resolved,
    });
    write_json(dir.join(format!("{name}.config.json")), &doc)
}

fn simulate(a: &SimulateArgs, cli: &Cli) -> Result<()> {
    let params = ModelParams::new(a.n, a.w_over_g, 0.0)?;
    let axes = AxisGrid::uniform(a.window.t_min, a.window.t_max, a.grid, a.window.mu_max, a.grid)?;
    let diagram = generate(&params, &axes)?;
    create_dir(&a.out)?;
    phd::write(a.out.join(&a.name), &diagram)?;
    echo(&a.out, "simulate", cli, json!({ "params": params, "axes": axes }))
}

fn theory_table(a: &TheoryArgs, cli: &Cli) -> Result<()> {
    let t = linspace(a.t_min, a.t_max, a.grid);
    let values = theory::analytic_condensate(&t)?;
    let normalized = minmax_normalize_values(&values)?;
    create_dir(&a.out)?;
    let path = a.out.join("theory.csv");
    let mut text = String::from("t_over_g,condensate,normalized\n");
    for ((t, v), n) in t.iter().zip(&values).zip(&normalized) {
        text.push_str(&format!("{t},{v},{n}\n"));
    }
    fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
    echo(&a.out, "theory", cli, json!({ "t_values": t }))
}

fn dataset(a: &DatasetArgs, cli: &Cli) -> Result<()> {
    let w_values = match &a.w_values {
        Some(w) => w.clone(),
        None => linspace(W_RANGE.0, W_RANGE.1, a.w_count),
    };
    let spec = DatasetSpec {
        n_values: a.n_values.clone(),
        w_values,
        ground_side: a.grid,
        input_side: a.input_side,
        ratio_min: a.ratio_min,
        ratio_max: a.ratio_max,
        train_fraction: a.train_fraction,
        seed: a.seed,
        t_min: a.window.t_min,
        t_max: a.window.t_max,
        mu_max: a.window.mu_max,
    };
    let rule = match a.split {
        SplitArg::Random => SplitRule::Random,
        SplitArg::Unseenw => SplitRule::UNSEEN_W_DEFAULT,
        SplitArg::Test => SplitRule::TestOnly,
    };
    let (path, m) = manifest::build(&spec, rule, &a.out)?;
    echo(&a.out, "dataset", cli, json!({ "spec": spec, "split": rule, "manifest": path, "diagrams": m.diagrams.len() }))
}

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn train(a: &TrainArgs, cli: &Cli) -> Result<()> {
    let m = Manifest::read(&a.manifest)?;
    let diagrams = m.load_diagrams(manifest_dir(&a.manifest))?;
    let defaults = TrainingConfig::default();
    let mut pairs = m.spec.pair_config(CropStrategy::ContiguousBlock);
    if let Some(r) = a.ratio_max {
        pairs.ratio_max = r;
    }
    let epochs = a.epochs.unwrap_or(defaults.epochs);
    let config = TrainingConfig {
        epochs,
        learning_rate: a.learning_rate.unwrap_or(defaults.learning_rate),
        milestones: a.milestones.clone().unwrap_or(defaults.milestones),
        decay: a.decay.unwrap_or(defaults.decay),
        batch_size: a.batch_size.unwrap_or(defaults.batch_size),
        seed: a.seed.unwrap_or(m.spec.seed),
        pairs,
        pairs_per_diagram: a.pairs_per_diagram.unwrap_or(defaults.pairs_per_diagram),
        targets_per_pair: a.targets_per_pair.or(defaults.targets_per_pair),
        validation_ratios: (pairs.ratio_min.max(2)..=pairs.ratio_max).collect(),
        ..defaults
    };
    config.validate()?;

    let base = ArchConfig::default();
    let requested = ArchConfig {
        latent_dim: a.latent_dim.unwrap_or(base.latent_dim),
        res_blocks: a.res_blocks.unwrap_or(base.res_blocks),
        hidden_width: a.hidden_width.unwrap_or(base.hidden_width),
        hidden_layers: a.hidden_layers.unwrap_or(base.hidden_layers),
        ..base
    };
    let arch_flags =
        a.latent_dim.is_some() || a.res_blocks.is_some() || a.hidden_width.is_some() || a.hidden_layers.is_some();
    let state = match &a.init {
        Some(path) => checkpoint::load(path, arch_flags.then_some(&requested))?,
        None => NetworkState::new(Network::new(requested, config.seed)?),
    };
    let arch = *state.network.arch();

    create_dir(&a.out)?;
    echo(&a.out, "train", cli, json!({ "training": config, "architecture": arch, "manifest": a.manifest }))?;
    let quiet = a.quiet;
    let (state, history) = net::train_with(state, &config, &diagrams, &m.train, &m.validation, |r| {
        if !quiet {
            eprintln!(
                "epoch {} train_l1={:.6e} val_l1={:.6e} val_psnr={:.3}",
                r.epoch, r.train_l1, r.val_l1, r.val_psnr
            );
        }
    })?;
    checkpoint::save(a.out.join("model.iqs"), &state)?;
    net::write_history(a.out.join("history.csv"), &history)
}

/// Target axes over the input's own window.
fn target_axes(input: &PhaseDiagram, t: &TargetArgs) -> Result<AxisGrid> {
    let (rows, cols) = input.values.shape();
    let (tr, tc) = match (t.grid, t.ratio) {
        (Some(g), _) => (g, g),
        (None, Some(r)) => (rows * r, cols * r),
        (None, None) => return Err(Error::InvalidParameter("give --grid or --ratio".into())),
    };
    let (ta, ma) = (&input.axes.t_values, &input.axes.mu_values);
    AxisGrid::new(linspace(ta[0], ta[rows - 1], tr), linspace(ma[0], ma[cols - 1], tc))
}

fn write_upscaled(out: &Path, name: &str, diagram: &PhaseDiagram) -> Result<()> {
    create_dir(out)?;
    phd::write(out.join(name), diagram)
}

fn predict(a: &PredictArgs, cli: &Cli) -> Result<()> {
    let state = checkpoint::load(&a.checkpoint, None)?;
    let input = phd::read(&a.input)?;
    let axes = target_axes(&input, &a.target)?;
    let out = upscale_diagram(&input, &axes, Upscaler::Network(&state.network))?;
    write_upscaled(&a.out, &a.name, &out)?;
    echo(&a.out, "predict", cli, json!({ "target_axes": axes, "architecture": state.network.arch() }))
}

fn baseline(a: &BaselineArgs, cli: &Cli) -> Result<()> {
    let input = phd::read(&a.input)?;
    let axes = target_axes(&input, &a.target)?;
    let method = match a.method {
        MethodArg::Bilinear => Some(InterpolationMethod::Bilinear),
        MethodArg::Axiscubic => Some(InterpolationMethod::AxisCubic),
        MethodArg::Bicubic => Some(InterpolationMethod::Bicubic),
        MethodArg::Nniqs => None,
    };
    let out = match method {
        Some(m) => upscale_diagram(&input, &axes, Upscaler::Baseline(m))?,
        None => {
            let path = a
                .checkpoint
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("--method nniqs needs --checkpoint".into()))?;
            let state = checkpoint::load(path, None)?;
            upscale_diagram(&input, &axes, Upscaler::Network(&state.network))?
        }
    };
    write_upscaled(&a.out, &a.name, &out)?;
    echo(&a.out, "baseline", cli, json!({ "target_axes": axes }))
}

fn scenario(s: ScenarioArg) -> Scenario {
    match s {
        ScenarioArg::Basic => Scenario::InRange,
        ScenarioArg::Beyond => Scenario::BeyondRatio,
        ScenarioArg::Unseenw => Scenario::UnseenW,
        ScenarioArg::Largen => Scenario::LargeN,
    }
}

#[derive(Serialize)]
struct ComparisonReport {
    scenario: Option<ScenarioTag>,
    psnr: f64,
    whole: ErrorReport,
    transition: Option<ErrorReport>,
}

fn evaluate(a: &EvaluateArgs, cli: &Cli) -> Result<()> {
    let scenario = scenario(a.scenario);
    create_dir(&a.out)?;
    if let (Some(pred), Some(truth)) = (&a.pred, &a.truth) {
        let p = phd::read(pred)?;
        let t = phd::read(truth)?;
        let c = compare_diagrams(&p, &t)?;
        let tag = a.ratio.as_ref().and_then(|r| r.first()).map(|&r| scenario.tag(r));
        let with_tag = |mut r: ErrorReport| {
            r.scenario = tag;
            r
        };
        let report = ComparisonReport {
            scenario: tag,
            psnr: c.psnr,
            whole: with_tag(c.whole),
            transition: c.transition.map(with_tag),
        };
        write_json(a.out.join("report.json"), &report)?;
        write_error_csv(a.out.join("errors.csv"), &c.errors, &t.axes.t_values, &t.axes.mu_values, &c.mask)?;
        return echo(&a.out, "evaluate", cli, json!({ "mode": "compare" }));
    }
    let (Some(ckpt), Some(man)) = (&a.checkpoint, &a.manifest) else {
        return Err(Error::InvalidParameter("give --pred and --truth, or --checkpoint and --manifest".into()));
    };
    let state = checkpoint::load(ckpt, None)?;
    let m = Manifest::read(man)?;
    let diagrams = m.load_diagrams(manifest_dir(man))?;
    let ids = match scenario {
        Scenario::InRange => m.validation.clone(),
        _ if !m.test.is_empty() => m.test.clone(),
        _ => m.validation.clone(),
    };
    let mut config = EvalConfig::new(scenario, m.spec.input_side, a.seed);
    if let Some(r) = &a.ratio {
        config.ratios = r.clone();
    }
    config.pairs_per_ratio = a.pairs_per_ratio;
    let report = evaluation::benchmark(Some(&state.network), &InterpolationMethod::ALL, &diagrams, &ids, &config)?;
    write_json(a.out.join("benchmark.json"), &report)?;
    let mut summary = String::from("method,ratio,pairs,mean_psnr,whole_mean,whole_median,transition_mean\n");
    for s in &report.summaries {
        let tr = s.transition.as_ref().map_or(String::new(), |t| t.stats.mean.to_string());
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.method, s.ratio, s.pairs, s.mean_psnr, s.whole.stats.mean, s.whole.stats.median, tr
        ));
    }
    let path = a.out.join("benchmark.csv");
    fs::File::create(&path)
        .and_then(|mut f| f.write_all(summary.as_bytes()))
        .map_err(|e| Error::Io { path, source: e })?;
    echo(&a.out, "evaluate", cli, json!({ "mode": "benchmark", "config": config, "diagrams": ids }))
}
