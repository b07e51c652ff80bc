use std::io::Write;
use std::path::Path;

use histlearn_core::evalbench::derived_seed;
use histlearn_core::io;
use histlearn_core::online::TracePoint;
use histlearn_core::workload::{
    gen_gaussian_mixture, gen_queries, ingest_records_csv, label_queries, streams, MixtureSpec, QueryModelSpec,
};
use histlearn_core::{
    avg_rel_error, emit_results, fit_equihist, fit_sphist, run_experiment, simulate_stream, AttributeDomain,
    BucketHistogram, CellLimit, DatabaseUpdate, EquiLayout, ExperimentConfig, HistError, OnlineState, OutOfDomain,
    Preset, QueryFeedbackRecord, QueryModel, RangeQuery, SelectionRule, SpHistOptions, StreamScenario, WaveletSketch,
};

use crate::args::{
    BoundaryArg, Command, Estimate, Evaluate, GenData, GenQueries, Label, MethodArg, ModelArg, ModelSource,
    OnlineSim, PresetArg, RuleArg, Sweep, Train,
};

/// Failure of a subcommand, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or paths; exit 1.
    Usage(String),
    /// Malformed input data or a failed computation; exit 2.
    Data(HistError),
}

impl From<HistError> for CliError {
    fn from(e: HistError) -> Self {
        CliError::Data(e)
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn input(path: &Path) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("input file {} does not exist", path.display())))
    }
}

fn output(path: &Path) -> CliResult {
    if path.is_dir() {
        return Err(usage(format!("output {} is a directory", path.display())));
    }
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(usage(format!("output directory {} does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

pub fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::GenData(a) => gen_data(a),
        Command::GenQueries(a) => gen_queries_cmd(a),
        Command::Label(a) => label(a),
        Command::Train(a) => train(a),
        Command::Estimate(a) => estimate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::OnlineSim(a) => online_sim(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn preset(p: PresetArg) -> Preset {
    match p {
        PresetArg::Type1 => Preset::Type1,
        PresetArg::Type2 => Preset::Type2,
        PresetArg::GaussNd => Preset::GaussNd,
    }
}

fn ranges(r: &[usize], dims: Option<usize>) -> CliResult<Vec<usize>> {
    match dims {
        None => Ok(r.to_vec()),
        Some(0) => Err(usage("--dims must be positive")),
        Some(d) if r.len() == 1 => Ok(vec![r[0]; d]),
        Some(d) if r.len() == d => Ok(r.to_vec()),
        Some(d) => Err(usage(format!("--r lists {} ranges but --dims is {d}", r.len()))),
    }
}

fn gen_data(a: GenData) -> CliResult {
    if let Some(p) = &a.from_records {
        input(p)?;
    }
    output(&a.out)?;
    let domain = AttributeDomain::new(ranges(&a.r, a.dims)?)?;
    CellLimit::from_env()?.check(domain.volume())?;
    let freq = match &a.from_records {
        Some(p) => ingest_records_csv(p, &domain, a.zero_based)?,
        None => {
            let mut spec = MixtureSpec::from_preset(preset(a.preset), domain, a.records, a.seed)?;
            spec.out_of_domain = match a.out_of_domain {
                BoundaryArg::Clamp => OutOfDomain::Clamp,
                BoundaryArg::Redraw => OutOfDomain::Redraw,
            };
            gen_gaussian_mixture(&spec, a.seed)?
        }
    };
    io::write_dataset(&a.out, &freq)?;
    Ok(())
}

fn gen_queries_cmd(a: GenQueries) -> CliResult {
    input(&a.data)?;
    output(&a.out)?;
    let freq = io::read_dataset(&a.data)?;
    let spec = QueryModelSpec {
        model: match a.model {
            ModelArg::Uniform => QueryModel::Uniform,
            ModelArg::DataDependent => QueryModel::DataDependent,
        },
        count: a.count,
        max_volume_fraction: a.max_volume_fraction,
        seed: a.seed,
    };
    let queries = gen_queries(&spec, &freq)?;
    io::write_queries(&a.out, freq.domain(), &queries)?;
    Ok(())
}

fn label(a: Label) -> CliResult {
    input(&a.data)?;
    input(&a.queries)?;
    output(&a.out)?;
    let freq = io::read_dataset(&a.data)?;
    let (domain, queries) = io::read_queries(&a.queries)?;
    freq.domain().ensure_same(&domain)?;
    let qfrs = label_queries(&freq, &queries)?;
    io::write_qfrs(&a.out, &domain, &qfrs)?;
    Ok(())
}

fn layout(domain: AttributeDomain, buckets: usize, per_dim: Option<Vec<usize>>) -> CliResult<EquiLayout> {
    Ok(match per_dim {
        Some(p) => EquiLayout::new(domain, p)?,
        None => EquiLayout::with_total(domain, buckets)?,
    })
}

fn train(a: Train) -> CliResult {
    input(&a.qfrs)?;
    output(&a.out)?;
    if let Some(p) = &a.sketch_out {
        if a.method != MethodArg::Sphist {
            return Err(usage("--sketch-out requires --method sphist"));
        }
        output(p)?;
    }
    if a.per_dim.is_some() && a.method == MethodArg::Sphist {
        return Err(usage("--per-dim applies only to equi-width methods"));
    }
    let (domain, qfrs) = io::read_qfrs(&a.qfrs)?;
    let hist = match a.method {
        MethodArg::Equihist => {
            let l = layout(domain, a.buckets, a.per_dim)?;
            fit_equihist(&qfrs, &l, a.ridge.unwrap_or(0.0))?.1
        }
        MethodArg::OnlineEquihist => {
            let l = layout(domain, a.buckets, a.per_dim)?;
            let mut st = OnlineState::new(l, a.ridge, a.decay)?;
            for r in &qfrs {
                st.observe(r)?;
            }
            st.histogram()?
        }
        MethodArg::Sphist => {
            let opts = SpHistOptions {
                omp_budget: a.omp_budget,
                selection_rule: match a.selection_rule {
                    RuleArg::Absolute => SelectionRule::Absolute,
                    RuleArg::Signed => SelectionRule::Signed,
                },
                normalize_columns: a.normalize_columns,
                ridge: a.ridge.unwrap_or(0.0),
                cell_limit: CellLimit::from_env()?,
                ..SpHistOptions::new(a.buckets)
            };
            let fit = fit_sphist(&qfrs, &domain, &opts)?;
            if let Some(p) = &a.sketch_out {
                io::write_sketch(p, &fit.sketch)?;
            }
            fit.histogram
        }
    };
    io::write_histogram(&a.out, &hist)?;
    Ok(())
}

enum Model {
    Hist(BucketHistogram),
    Sketch(WaveletSketch),
}

impl Model {
    fn check(src: &ModelSource) -> CliResult {
        match (&src.hist, &src.sketch) {
            (Some(p), _) | (_, Some(p)) => input(p),
            (None, None) => Err(usage("one of --hist or --sketch is required")),
        }
    }

    fn load(src: &ModelSource) -> CliResult<Model> {
        Ok(match (&src.hist, &src.sketch) {
            (Some(p), _) => Model::Hist(io::read_histogram(p)?),
            (_, Some(p)) => Model::Sketch(io::read_sketch(p)?),
            (None, None) => return Err(usage("one of --hist or --sketch is required")),
        })
    }

    fn domain(&self) -> &AttributeDomain {
        match self {
            Model::Hist(h) => h.domain(),
            Model::Sketch(s) => s.domain().original(),
        }
    }

    fn estimate(&self, q: &RangeQuery) -> CliResult<f64> {
        Ok(match self {
            Model::Hist(h) => h.estimate(q)?,
            Model::Sketch(s) => s.estimate(q)?,
        })
    }
}

fn estimate(a: Estimate) -> CliResult {
    Model::check(&a.model)?;
    input(&a.queries)?;
    if let Some(p) = &a.out {
        output(p)?;
    }
    let model = Model::load(&a.model)?;
    let (domain, queries) = io::read_queries(&a.queries)?;
    model.domain().ensure_same(&domain)?;
    let records = queries
        .into_iter()
        .map(|q| {
            let est = model.estimate(&q)?;
            Ok(QueryFeedbackRecord::new(q, est)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    match &a.out {
        Some(p) => io::write_qfrs(p, &domain, &records)?,
        None => print_stdout(&io::qfrs_to_string(&domain, &records)),
    }
    Ok(())
}

fn evaluate(a: Evaluate) -> CliResult {
    Model::check(&a.model)?;
    input(&a.qfrs)?;
    let model = Model::load(&a.model)?;
    let (domain, qfrs) = io::read_qfrs(&a.qfrs)?;
    model.domain().ensure_same(&domain)?;
    let truths: Vec<f64> = qfrs.iter().map(|r| r.cardinality).collect();
    let estimates = qfrs
        .iter()
        .map(|r| model.estimate(&r.query))
        .collect::<CliResult<Vec<_>>>()?;
    let err = avg_rel_error(&truths, &estimates)?;
    print_stdout(&format!("{err:.6}\n"));
    Ok(())
}

fn trace_csv(points: &[TracePoint]) -> String {
    let mut s = String::from("step,avg_rel_error\n");
    for p in points {
        s.push_str(&format!("{},{}\n", p.step, p.avg_rel_error));
    }
    s
}

fn online_sim(a: OnlineSim) -> CliResult {
    input(&a.data)?;
    input(&a.stream)?;
    input(&a.test)?;
    output(&a.out)?;
    let truth = io::read_dataset(&a.data)?;
    let (stream_domain, stream) = io::read_queries(&a.stream)?;
    let (test_domain, test) = io::read_queries(&a.test)?;
    truth.domain().ensure_same(&stream_domain)?;
    truth.domain().ensure_same(&test_domain)?;
    let base = derived_seed(a.seed, streams::PERTURB);
    let updates = a
        .perturb_at
        .iter()
        .enumerate()
        .map(|(i, &step)| DatabaseUpdate {
            after_step: step,
            fraction: a.perturb_fraction,
            seed: base.wrapping_add(i as u64),
        })
        .collect();
    let l = layout(truth.domain().clone(), a.buckets, a.per_dim)?;
    let mut state = OnlineState::new(l, a.ridge, a.decay)?;
    let scenario = StreamScenario {
        truth,
        stream,
        test,
        eval_every: a.eval_every,
        updates,
    };
    let trace = simulate_stream(&mut state, &scenario)?;
    write_file(&a.out, &trace_csv(&trace.points))
}

fn sweep(a: Sweep) -> CliResult {
    input(&a.experiment)?;
    output(&a.out)?;
    let plot = a.plot.clone().unwrap_or_else(|| a.out.with_extension("gp"));
    output(&plot)?;
    let mut cfg = ExperimentConfig::from_file(&a.experiment)?;
    for s in &mut cfg.seeds {
        *s = s.wrapping_add(a.seed);
    }
    cfg.timing |= a.timing;
    cfg.cell_limit = CellLimit::from_env()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| usage(format!("cannot start {} worker threads: {e}", a.jobs)))?;
    let table = pool.install(|| run_experiment(&cfg))?;
    emit_results(&table, &a.out, &plot)?;
    Ok(())
}

fn write_file(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| {
        CliError::Data(HistError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn print_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    // A closed pipe is not an error for a report.
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}
