use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use punn_core::analysis::{self, FixedPointPolicy, SurfaceGrid};
use punn_core::baselines::{self, LinearKind};
use punn_core::dataset::{self, load_dataset, load_inputs};
use punn_core::evolution::{run_experiment, AggregateResult, EAConfig, TrainingMode};
use punn_core::metrics::{render_table, TableRow};
use punn_core::netmodel::{self, reference_punn};
use punn_core::normalize::{fit_normalizer, DEFAULT_INPUT_INTERVAL, DEFAULT_OUTPUT_INTERVAL};
use punn_core::synth::{self, LabelSource, Noise, SynthConfig};
use punn_core::{BasisKind, Dataset, Error, FeatureSchema, NetworkModel, RangeCheck, Result};

use crate::args::*;
use crate::config;
use crate::output::{write_artifact, write_atomic, Provenance};

const REFERENCE: &str = "reference";
const MODEL_FILE: &str = "best_model.json";
const HISTORY_FILE: &str = "history.csv";
const REPORT_FILE: &str = "report.txt";

fn echo(settings: &[(&str, String)]) {
    for (k, v) in settings {
        eprintln!("config: {k} = {v}");
    }
}

fn show(p: &Option<impl AsRef<Path>>) -> String {
    match p {
        Some(p) => p.as_ref().display().to_string(),
        None => "-".into(),
    }
}

fn load_model(spec: &str) -> Result<NetworkModel> {
    if spec == REFERENCE {
        return Ok(reference_punn());
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Error::io(spec, e))?;
    netmodel::deserialize(&text)
}

fn load(path: &Path) -> Result<Dataset> {
    load_dataset(path, &FeatureSchema::standard(), RangeCheck::Warn)
}

/// Training and test sets: an explicit test file, or a seeded split.
fn train_test(data: &Path, split: &SplitArgs, seed: u64) -> Result<(Dataset, Dataset)> {
    let all = load(data)?;
    match &split.test {
        Some(t) => Ok((all, load(t)?)),
        None => dataset::split(&all, split.split, seed),
    }
}

fn parse_pair<T: std::str::FromStr>(text: &str, sep: char, what: &str) -> Result<(T, T)> {
    let bad = || Error::InvalidArgument(format!("cannot read {what} from `{text}`"));
    let (a, b) = text.split_once(sep).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn gen(args: &GenArgs) -> Result<()> {
    let seed = args.seed.seed;
    echo(&[
        ("out", args.out.display().to_string()),
        ("seed", seed.to_string()),
        ("noise", args.noise.to_string()),
        ("count", args.count.map_or("all".into(), |c| c.to_string())),
        ("labels", show(&args.labels)),
    ]);
    let labels = match &args.labels {
        Some(p) => LabelSource::Model(Box::new(load_model(&p.to_string_lossy())?)),
        None => LabelSource::Reference,
    };
    let generated = synth::generate(&SynthConfig {
        seed,
        noise: Noise::RangeFraction(args.noise),
        labels,
        sample: args.count,
    })?;
    let prov = Provenance::new(Some(seed));
    let mut lines = prov.lines().to_vec();
    lines.extend(generated.dataset.provenance().iter().cloned());
    let ds = generated.dataset.with_provenance(lines);
    let mut buf = Vec::new();
    dataset::write_csv(&ds, &FeatureSchema::standard(), &mut buf)?;
    write_atomic(&args.out, &buf)?;
    eprintln!("generated {} patterns", ds.len());
    Ok(())
}

/// Defaults for the mode, then the config file, then the preset and flags.
fn resolve_train_config(args: &TrainArgs) -> Result<EAConfig> {
    let mode = match args.mode {
        ModeArg::Simple => TrainingMode::Simple,
        ModeArg::Complex => TrainingMode::Complex,
    };
    let mut c = EAConfig::for_mode(mode);
    if let Some(path) = &args.config {
        config::load(path, &mut c)?;
    }
    if args.preset == Some(PresetArg::Desk) {
        c.runs = 3;
        c.population_size = 100;
    }
    if let Some(v) = args.runs {
        c.runs = v;
    }
    if let Some(v) = args.pop {
        c.population_size = v;
    }
    if let Some(v) = args.gens {
        c.generations = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(t) = args.time_budget {
        c.time_budget = Some(Duration::try_from_secs_f64(t).map_err(|_| {
            Error::InvalidArgument(format!("time budget must be a non-negative number, got {t}"))
        })?);
    }
    c.validate()?;
    Ok(c)
}

fn history_csv(result: &AggregateResult) -> String {
    let mut out = String::from("run,seed,generation,best_fitness,best_mse\n");
    for (r, run) in result.runs.iter().enumerate() {
        let h = &run.history;
        for (g, (f, m)) in h.best_fitness.iter().zip(&h.best_mse).enumerate() {
            let _ = writeln!(out, "{},{},{g},{f},{m}", r + 1, run.seed);
        }
    }
    out
}

fn train_report(result: &AggregateResult) -> String {
    let mut out = result.render();
    out.push('\n');
    let _ = writeln!(
        out,
        "{:>4} {:>6} {:>14} {:>14} {:>6} {:>6} {:>8}",
        "run", "seed", "train_mse", "test_mse", "links", "gens", "stopped"
    );
    for (r, run) in result.runs.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4} {:>6} {:>14.6e} {:>14.6e} {:>6} {:>6} {:>8}",
            r + 1,
            run.seed,
            run.train_mse(),
            run.test.metrics.global_mse,
            run.test.links,
            run.history.generations(),
            if run.history.stopped_early { "yes" } else { "no" }
        );
    }
    let _ = writeln!(out, "best run: {} (lowest train MSE)", result.best + 1);
    out
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let c = resolve_train_config(args)?;
    let basis = match args.basis {
        BasisArg::Punn => BasisKind::ProductUnit,
        BasisArg::Sunn => BasisKind::SigmoidUnit,
    };
    let described = config::describe(&c);
    echo(&[
        ("data", args.data.display().to_string()),
        ("test", show(&args.split.test)),
        ("split", args.split.split.to_string()),
        ("basis", basis.short_name().to_string()),
        ("out_dir", args.out_dir.display().to_string()),
    ]);
    for line in &described {
        eprintln!("config: {line}");
    }

    let (train, test) = train_test(&args.data, &args.split, c.seed)?;
    eprintln!("training on {} patterns, testing on {}", train.len(), test.len());
    let result = run_experiment(&train, &test, &c, basis)?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let prov = Provenance::new(Some(c.seed));
    let best = result.best_run();
    let model_prov = prov.clone().with(format!("best of {} runs, run seed {}", result.runs.len(), best.seed));
    write_artifact(&args.out_dir.join(MODEL_FILE), &model_prov, &netmodel::serialize(&best.model))?;
    write_artifact(&args.out_dir.join(HISTORY_FILE), &prov, &history_csv(&result))?;

    let report = train_report(&result);
    let mut report_prov = prov;
    for line in described {
        report_prov = report_prov.with(format!("config: {line}"));
    }
    write_artifact(&args.out_dir.join(REPORT_FILE), &report_prov, &report)?;
    print!("{report}");
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    echo(&[
        ("model", args.model.clone()),
        ("data", args.data.display().to_string()),
        ("out", show(&args.out)),
    ]);
    let model = load_model(&args.model)?;
    let data = load(&args.data)?;
    let report = netmodel::evaluate(&model, &data)?;
    let row = TableRow::from_report(model.basis().short_name(), &report.metrics, Some(report.links as f64));
    let title = format!("{} on {} ({} patterns)", args.model, args.data.display(), data.len());
    let text = render_table(&title, &[row]);
    if let Some(out) = &args.out {
        write_artifact(out, &Provenance::new(None), &text)?;
    }
    print!("{text}");
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    echo(&[
        ("model", args.model.clone()),
        ("input", args.input.display().to_string()),
        ("out", show(&args.out)),
    ]);
    let schema = FeatureSchema::standard();
    let model = load_model(&args.model)?;
    let inputs = load_inputs(&args.input, &schema)?;
    let mut body = dataset::csv_header(&schema).join(",");
    body.push('\n');
    for x in &inputs {
        let y = model.predict(x)?;
        let cells: Vec<String> = x.iter().chain(y.iter()).map(|v| v.to_string()).collect();
        body.push_str(&cells.join(","));
        body.push('\n');
    }
    let prov = Provenance::new(None);
    match &args.out {
        Some(out) => write_artifact(out, &prov, &body)?,
        None => print!("{}{body}", prov.header()),
    }
    Ok(())
}

pub fn analyze(args: &AnalyzeArgs) -> Result<()> {
    echo(&[
        ("model", args.model.clone()),
        ("data", show(&args.data)),
        ("fixed", format!("{:?}", args.fixed).to_lowercase()),
        ("influence", show(&args.influence)),
        ("surface", args.surface.clone().unwrap_or_else(|| "-".into())),
        ("grid", args.grid.clone()),
        ("out", show(&args.out)),
    ]);
    let schema = FeatureSchema::standard();
    let model = load_model(&args.model)?;
    let data = match &args.data {
        Some(p) => load(p)?,
        None if args.model == REFERENCE => synth::generate(&SynthConfig::default())?.dataset,
        None => {
            return Err(Error::InvalidArgument(
                "--data is required to place the fixed point of a trained model".into(),
            ))
        }
    };
    let policy = match args.fixed {
        PolicyArg::Mean => FixedPointPolicy::Mean,
        PolicyArg::Median => FixedPointPolicy::Median,
    };
    let fixed = policy.resolve(Some(&data))?;
    let prov = Provenance::new(None);

    let want_influence = args.influence.is_some() || args.surface.is_none();
    if want_influence {
        let nominal = model.normalization().normalize_inputs(&fixed);
        let table = analysis::influence(&model, &nominal)?.to_csv(&schema);
        match &args.influence {
            Some(p) => write_artifact(p, &prov, &table)?,
            None => print!("{}{table}", prov.header()),
        }
    }

    if let Some(pair) = &args.surface {
        let (a, b): (String, String) = parse_pair(pair, ',', "a variable pair")?;
        let index = |name: &str| {
            schema
                .input_index(name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown input `{name}`")))
        };
        let (ia, ib) = (index(&a)?, index(&b)?);
        let mut grid = SurfaceGrid::over_working_ranges(&schema, ia, ib);
        grid.counts = parse_pair(&args.grid.to_ascii_lowercase(), 'x', "a grid size")?;
        if let Some(r) = &args.range_a {
            grid.range_a = parse_pair(r, ':', "a range")?;
        }
        if let Some(r) = &args.range_b {
            grid.range_b = parse_pair(r, ':', "a range")?;
        }
        let surf = analysis::surface(&model, ia, ib, &grid, &fixed)?;
        let mut sprov = prov.clone();
        if !surf.non_physical_axes.is_empty() {
            log::warn!("pole-count axis includes values no physical motor has");
            sprov = sprov.with("note: pole-count axis includes non-physical values");
        }
        let csv = surf.to_csv(&schema);
        let ext = analysis::extremes(&surf).render(&schema);
        match &args.out {
            Some(p) => {
                write_artifact(p, &sprov, &csv)?;
                print!("{ext}");
            }
            None => {
                print!("{}{csv}", sprov.header());
                eprint!("{ext}");
            }
        }
    }
    Ok(())
}

pub fn baseline(args: &BaselineArgs) -> Result<()> {
    let seed = args.seed.seed;
    echo(&[
        ("data", args.data.display().to_string()),
        ("test", show(&args.split.test)),
        ("split", args.split.split.to_string()),
        ("kind", format!("{:?}", args.kind).to_lowercase()),
        ("lambda", args.lambda.map_or("cross-validated".into(), |l| l.to_string())),
        ("ratio", args.ratio.to_string()),
        ("seed", seed.to_string()),
        ("out", show(&args.out)),
    ]);
    let kinds: Vec<LinearKind> = match args.kind {
        BaselineKindArg::All => vec![LinearKind::Ols, LinearKind::Ridge, LinearKind::Lasso, LinearKind::ElasticNet],
        BaselineKindArg::Linear => vec![LinearKind::Ols],
        BaselineKindArg::Ridge => vec![LinearKind::Ridge],
        BaselineKindArg::Lasso => vec![LinearKind::Lasso],
        BaselineKindArg::ElasticNet => vec![LinearKind::ElasticNet],
    };
    let (train, test) = train_test(&args.data, &args.split, seed)?;
    let spec = fit_normalizer(&train, DEFAULT_INPUT_INTERVAL, DEFAULT_OUTPUT_INTERVAL)?;
    let train_n = spec.normalize_dataset(&train);

    let mut rows = Vec::new();
    let mut notes = String::new();
    for kind in kinds {
        let lambda = match (kind, args.lambda) {
            (LinearKind::Ols, _) => 0.0,
            (_, Some(l)) => l,
            (_, None) => baselines::select_lambda(&train_n, kind, &baselines::default_lambda_grid(), args.ratio, seed)?,
        };
        let model = baselines::fit_baseline(kind, &train_n, lambda, args.ratio)?;
        if !model.converged() {
            log::warn!("{} did not converge at lambda {lambda:e}", kind.label());
        }
        let report = baselines::evaluate_linear(&model, &test, &spec)?;
        rows.push(TableRow::from_report(kind.label(), &report, Some(model.links() as f64)));
        if kind != LinearKind::Ols {
            let _ = writeln!(notes, "{}: lambda = {lambda:e}", kind.label());
        }
    }
    let title = format!("Linear baselines ({} train / {} test patterns)", train.len(), test.len());
    let mut text = render_table(&title, &rows);
    if !notes.is_empty() {
        text.push('\n');
        text.push_str(&notes);
    }
    if let Some(out) = &args.out {
        write_artifact(out, &Provenance::new(Some(seed)), &text)?;
    }
    print!("{text}");
    Ok(())
}
