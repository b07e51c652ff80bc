//! Error metric, seeded experiment sweeps, and result emission.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::equihist::{fit_equihist, EquiLayout};
use crate::error::{HistError, Result};
use crate::histcore::{AttributeDomain, BucketHistogram, CellLimit, FrequencyTensor, QueryFeedbackRecord};
use crate::online::OnlineState;
use crate::sphist::{fit_sphist, SelectionRule, SpHistOptions};
use crate::workload::{
    gen_gaussian_mixture, gen_queries, label_queries, rng_for, streams, MixtureSpec, Preset, QueryModel,
    OutOfDomain, QueryModelSpec, DEFAULT_MAX_VOLUME_FRACTION, DEFAULT_RECORDS,
};

/// Cardinalities below this value are measured against it instead.
pub const RELATIVE_ERROR_FLOOR: f64 = 100.0;

pub const DEFAULT_TEST_SIZE: usize = 5000;

/// Mean of `|s − ŝ| / max(100, s)`, in percent.
pub fn avg_rel_error(truths: &[f64], estimates: &[f64]) -> Result<f64> {
    if truths.len() != estimates.len() {
        return Err(HistError::LengthMismatch {
            expected: truths.len(),
            got: estimates.len(),
        });
    }
    if truths.is_empty() {
        return Err(HistError::NoData);
    }
    let sum: f64 = truths
        .iter()
        .zip(estimates)
        .map(|(&s, &e)| (s - e).abs() / s.max(RELATIVE_ERROR_FLOOR))
        .sum();
    Ok(100.0 * sum / truths.len() as f64)
}

/// Average relative error of a histogram on labeled queries.
pub fn histogram_error(h: &BucketHistogram, test: &[QueryFeedbackRecord]) -> Result<f64> {
    let truths: Vec<f64> = test.iter().map(|r| r.cardinality).collect();
    let estimates = test
        .iter()
        .map(|r| h.estimate(&r.query))
        .collect::<Result<Vec<_>>>()?;
    avg_rel_error(&truths, &estimates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    EquiHist,
    SpHist,
    OnlineEquiHist,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::EquiHist => "equihist",
            Method::SpHist => "sphist",
            Method::OnlineEquiHist => "online-equihist",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HistError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equihist" => Ok(Method::EquiHist),
            "sphist" => Ok(Method::SpHist),
            "online-equihist" => Ok(Method::OnlineEquiHist),
            _ => Err(HistError::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

/// Which configuration field the sweep values replace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// Number of training queries.
    TrainSize,
    Buckets,
    /// Range of every dimension.
    Range,
    /// Number of dimensions, each with the first configured range.
    Dims,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::TrainSize => "train_size",
            SweepVar::Buckets => "buckets",
            SweepVar::Range => "range",
            SweepVar::Dims => "dims",
        }
    }
}

impl FromStr for SweepVar {
    type Err = HistError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train_size" | "n" => Ok(SweepVar::TrainSize),
            "buckets" | "k" => Ok(SweepVar::Buckets),
            "range" | "r" => Ok(SweepVar::Range),
            "dims" | "d" => Ok(SweepVar::Dims),
            _ => Err(HistError::InvalidParameter(format!("unknown sweep variable {s:?}"))),
        }
    }
}

/// Parameters of a seeded sweep.
///
/// Every `(sweep value, seed)` cell generates its own dataset, training and
/// test workloads from the seed alone, so cells are independent and the
/// training queries for a smaller `N` are a prefix of those for a larger one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub ranges: Vec<usize>,
    pub records: u64,
    pub out_of_domain: OutOfDomain,
    pub query_model: QueryModel,
    pub max_volume_fraction: f64,
    pub methods: Vec<Method>,
    pub buckets: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub seeds: Vec<u64>,
    pub sweep: SweepVar,
    pub values: Vec<usize>,
    pub omp_budget: Option<usize>,
    pub selection_rule: SelectionRule,
    pub normalize_columns: bool,
    /// Ridge for batch EquiHist.
    pub ridge: f64,
    /// Decay for online EquiHist.
    pub decay: f64,
    /// Record wall time; when off, `wall_ms` is zero and output is reproducible bit for bit.
    pub timing: bool,
    pub cell_limit: CellLimit,
}

impl ExperimentConfig {
    pub fn new(preset: Preset, ranges: Vec<usize>) -> Self {
        ExperimentConfig {
            preset,
            ranges,
            records: DEFAULT_RECORDS,
            out_of_domain: OutOfDomain::Clamp,
            query_model: QueryModel::Uniform,
            max_volume_fraction: DEFAULT_MAX_VOLUME_FRACTION,
            methods: vec![Method::EquiHist, Method::SpHist],
            buckets: 20,
            train_size: 200,
            test_size: DEFAULT_TEST_SIZE,
            seeds: (0..10).collect(),
            sweep: SweepVar::TrainSize,
            values: vec![200],
            omp_budget: None,
            selection_rule: SelectionRule::default(),
            normalize_columns: false,
            ridge: 0.0,
            decay: 1.0,
            timing: false,
            cell_limit: CellLimit::default(),
        }
    }

    /// Parses `key=value` lines on top of the defaults.
    ///
    /// Blank lines and lines starting with `#` are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::new(Preset::Type1, vec![1024]);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HistError::InvalidParameter(format!("line {}: expected key=value", i + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| HistError::InvalidParameter(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HistError::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| HistError::InvalidParameter(format!("{key}: invalid {what} {value:?}"));
        let uint = |v: &str| v.trim().parse::<usize>().map_err(|_| bad("integer"));
        let list = |v: &str| v.split(',').map(uint).collect::<Result<Vec<_>>>();
        match key {
            "preset" => self.preset = value.parse()?,
            "domain" | "range" | "r" => self.ranges = list(value)?,
            "records" => self.records = value.parse().map_err(|_| bad("integer"))?,
            "out_of_domain" => self.out_of_domain = value.parse()?,
            "query_model" | "model" => self.query_model = value.parse()?,
            "max_volume_fraction" => self.max_volume_fraction = value.parse().map_err(|_| bad("number"))?,
            "methods" | "method" => {
                self.methods = value
                    .split(',')
                    .map(|m| m.trim().parse())
                    .collect::<Result<Vec<_>>>()?
            }
            "buckets" | "k" => self.buckets = uint(value)?,
            "train_size" | "n" => self.train_size = uint(value)?,
            "test_size" => self.test_size = uint(value)?,
            "seeds" => self.seeds = parse_seeds(value).ok_or_else(|| bad("seed list"))?,
            "sweep" => self.sweep = value.parse()?,
            "values" => self.values = list(value)?,
            "omp_budget" => self.omp_budget = Some(uint(value)?),
            "selection_rule" => {
                self.selection_rule = match value {
                    "absolute" => SelectionRule::Absolute,
                    "signed" => SelectionRule::Signed,
                    _ => return Err(bad("selection rule")),
                }
            }
            "normalize_columns" => self.normalize_columns = value.parse().map_err(|_| bad("boolean"))?,
            "ridge" => self.ridge = value.parse().map_err(|_| bad("number"))?,
            "decay" => self.decay = value.parse().map_err(|_| bad("number"))?,
            "timing" => self.timing = value.parse().map_err(|_| bad("boolean"))?,
            _ => return Err(HistError::InvalidParameter(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(HistError::InvalidParameter(m.into()));
        if self.methods.is_empty() {
            return fail("no methods");
        }
        if self.seeds.is_empty() {
            return fail("no seeds");
        }
        if self.values.is_empty() {
            return fail("no sweep values");
        }
        if self.values.contains(&0) {
            return fail("sweep values must be positive");
        }
        if self.test_size == 0 {
            return fail("test size must be at least 1");
        }
        if self.train_size == 0 || self.buckets == 0 || self.records == 0 {
            return fail("train size, buckets and records must be positive");
        }
        if self.ranges.is_empty() {
            return fail("empty domain");
        }
        Ok(())
    }

    /// Configuration of a single sweep point.
    pub fn at(&self, value: usize) -> ExperimentConfig {
        let mut c = self.clone();
        match self.sweep {
            SweepVar::TrainSize => c.train_size = value,
            SweepVar::Buckets => c.buckets = value,
            SweepVar::Range => c.ranges = vec![value; self.ranges.len()],
            SweepVar::Dims => c.ranges = vec![self.ranges[0]; value],
        }
        c.values = vec![value];
        c
    }

    /// Fits `method` on `train` over `domain` with this configuration's options.
    pub fn fit(&self, method: Method, domain: &AttributeDomain, train: &[QueryFeedbackRecord]) -> Result<BucketHistogram> {
        match method {
            Method::EquiHist => {
                let layout = EquiLayout::with_total(domain.clone(), self.buckets)?;
                Ok(fit_equihist(train, &layout, self.ridge)?.1)
            }
            Method::SpHist => {
                let opts = SpHistOptions {
                    omp_budget: self.omp_budget,
                    selection_rule: self.selection_rule,
                    normalize_columns: self.normalize_columns,
                    cell_limit: self.cell_limit,
                    ..SpHistOptions::new(self.buckets)
                };
                Ok(fit_sphist(train, domain, &opts)?.histogram)
            }
            Method::OnlineEquiHist => {
                let layout = EquiLayout::with_total(domain.clone(), self.buckets)?;
                let mut st = OnlineState::new(layout, None, self.decay)?;
                for r in train {
                    st.observe(r)?;
                }
                st.histogram()
            }
        }
    }
}

/// `a,b,c` or a half-open range `a..b`.
fn parse_seeds(s: &str) -> Option<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (a < b).then(|| (a..b).collect());
    }
    s.split(',').map(|v| v.trim().parse().ok()).collect()
}

/// Training and test workloads of one seed.
#[derive(Debug, Clone)]
pub struct Workload {
    pub domain: AttributeDomain,
    pub truth: FrequencyTensor,
    pub train: Vec<QueryFeedbackRecord>,
    pub test: Vec<QueryFeedbackRecord>,
}

/// Seed for a query stream derived from the run seed.
pub fn derived_seed(seed: u64, stream: u64) -> u64 {
    rng_for(seed, stream).random()
}

/// Dataset plus labeled train/test queries for one configuration and seed.
pub fn build_workload(cfg: &ExperimentConfig, seed: u64) -> Result<Workload> {
    let domain = AttributeDomain::new(cfg.ranges.clone())?;
    let mut spec = MixtureSpec::from_preset(cfg.preset, domain.clone(), cfg.records, seed)?;
    spec.out_of_domain = cfg.out_of_domain;
    let freq = gen_gaussian_mixture(&spec, seed)?;
    let queries = |count, stream| {
        let qs = QueryModelSpec {
            max_volume_fraction: cfg.max_volume_fraction,
            ..QueryModelSpec::new(cfg.query_model, count, derived_seed(seed, stream))
        };
        label_queries(&freq, &gen_queries(&qs, &freq)?)
    };
    Ok(Workload {
        train: queries(cfg.train_size, streams::TRAIN_QUERIES)?,
        test: queries(cfg.test_size, streams::TEST_QUERIES)?,
        domain,
        truth: freq,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub sweep_value: usize,
    pub mean_err_pct: f64,
    /// Sample standard deviation over seeds; zero for a single seed.
    pub std_err_pct: f64,
    /// Per-seed errors in seed-list order.
    pub errors: Vec<f64>,
    /// Summed fit-and-evaluate time over seeds.
    pub wall_ms: u64,
}

impl ResultRow {
    pub fn seeds(&self) -> usize {
        self.errors.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub sweep_var: SweepVar,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn row(&self, method: Method, sweep_value: usize) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.sweep_value == sweep_value)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,sweep_var,sweep_value,mean_err_pct,std_err_pct,seeds,wall_ms\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.method,
                self.sweep_var.name(),
                r.sweep_value,
                r.mean_err_pct,
                r.std_err_pct,
                r.seeds(),
                r.wall_ms
            );
        }
        out
    }

    /// Gnuplot script drawing one log-scale series per method from `csv_name`.
    pub fn plot_script(&self, csv_name: &str) -> String {
        let mut methods: Vec<Method> = self.rows.iter().map(|r| r.method).collect();
        methods.sort();
        methods.dedup();
        let mut out = String::new();
        let _ = writeln!(out, "set datafile separator \",\"");
        let _ = writeln!(out, "set logscale y");
        let _ = writeln!(out, "set xlabel \"{}\"", self.sweep_var.name());
        let _ = writeln!(out, "set ylabel \"average relative error (%)\"");
        let _ = writeln!(out, "set key top right");
        let series: Vec<String> = methods
            .iter()
            .map(|m| {
                format!(
                    "\"{csv_name}\" every ::1 using 3:(strcol(1) eq \"{m}\" ? $4 : 1/0) with linespoints title \"{m}\""
                )
            })
            .collect();
        let _ = writeln!(out, "plot {}", series.join(", \\\n     "));
        out
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_cell(cfg: &ExperimentConfig, value: usize, seed: u64) -> Result<Vec<(f64, u64)>> {
    let point = cfg.at(value);
    let annotate = |method: &str, e: HistError| HistError::Experiment {
        method: method.to_string(),
        sweep_var: cfg.sweep.name().to_string(),
        sweep_value: value,
        seed,
        source: Box::new(e),
    };
    let work = build_workload(&point, seed).map_err(|e| annotate("workload", e))?;
    point
        .methods
        .iter()
        .map(|&m| {
            let start = Instant::now();
            let h = point.fit(m, &work.domain, &work.train).map_err(|e| annotate(m.name(), e))?;
            let err = histogram_error(&h, &work.test).map_err(|e| annotate(m.name(), e))?;
            let ms = if cfg.timing { start.elapsed().as_millis() as u64 } else { 0 };
            Ok((err, ms))
        })
        .collect()
}

/// Runs every `(sweep value, seed)` cell, in parallel on the current rayon
/// pool, and aggregates per `(method, sweep value)` in configuration order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let cells: Vec<(usize, u64)> = cfg
        .values
        .iter()
        .flat_map(|&v| cfg.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(v, s)| run_cell(cfg, v, s))
        .collect::<Result<Vec<_>>>()?;
    let per_value = cfg.seeds.len();
    let mut rows = Vec::new();
    for (m_idx, &method) in cfg.methods.iter().enumerate() {
        for (v_idx, &value) in cfg.values.iter().enumerate() {
            let chunk = &results[v_idx * per_value..(v_idx + 1) * per_value];
            let errors: Vec<f64> = chunk.iter().map(|c| c[m_idx].0).collect();
            let (mean, std) = mean_std(&errors);
            rows.push(ResultRow {
                method,
                sweep_value: value,
                mean_err_pct: mean,
                std_err_pct: std,
                errors,
                wall_ms: chunk.iter().map(|c| c[m_idx].1).sum(),
            });
        }
    }
    Ok(ResultTable {
        sweep_var: cfg.sweep,
        rows,
    })
}

/// Writes the results CSV and a gnuplot script that plots it.
pub fn emit_results(table: &ResultTable, csv_path: &Path, plot_path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(HistError::InvalidParameter("empty result table".into()));
    }
    std::fs::write(csv_path, table.to_csv()).map_err(|e| HistError::io(csv_path, e))?;
    let name = csv_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    std::fs::write(plot_path, table.plot_script(&name)).map_err(|e| HistError::io(plot_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        assert!((avg_rel_error(&[100.0, 40.0], &[110.0, 50.0]).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(avg_rel_error(&[3.0, 500.0], &[3.0, 500.0]).unwrap(), 0.0);
        assert!((avg_rel_error(&[200.0], &[100.0]).unwrap() - 50.0).abs() < 1e-12);
        assert!(matches!(avg_rel_error(&[1.0], &[]), Err(HistError::LengthMismatch { .. })));
        assert!(avg_rel_error(&[], &[]).is_err());
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::parse(
            "# sweep over N\npreset=type2\nr=1024\nquery_model=data-dependent\nmethods=equihist,sphist\n\
             buckets=20\nseeds=0..3\nsweep=train_size\nvalues=25,700\n",
        )
        .unwrap();
        assert_eq!(cfg.preset, Preset::Type2);
        assert_eq!(cfg.seeds, vec![0, 1, 2]);
        assert_eq!(cfg.values, vec![25, 700]);
        assert_eq!(cfg.at(700).train_size, 700);
        assert!(ExperimentConfig::parse("bogus=1").is_err());
        assert!(ExperimentConfig::parse("values=").is_err());
        assert!(ExperimentConfig::parse("test_size=0").is_err());
        assert!(ExperimentConfig::parse("seeds=3..3").is_err());
    }

    #[test]
    fn sweep_points() {
        let mut cfg = ExperimentConfig::new(Preset::Type1, vec![32, 32]);
        cfg.sweep = SweepVar::Range;
        assert_eq!(cfg.at(64).ranges, vec![64, 64]);
        cfg.sweep = SweepVar::Dims;
        assert_eq!(cfg.at(3).ranges, vec![32, 32, 32]);
    }

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Preset::Type2, vec![128]);
        cfg.records = 5000;
        cfg.test_size = 200;
        cfg.seeds = vec![4];
        cfg.values = vec![50];
        cfg.buckets = 8;
        cfg
    }

    #[test]
    fn single_cell_table_and_emission() {
        let cfg = small();
        let t = run_experiment(&cfg).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows.iter().all(|r| r.seeds() == 1 && r.std_err_pct == 0.0));
        let dir = tempfile::tempdir().unwrap();
        let (c, p) = (dir.path().join("r.csv"), dir.path().join("r.gp"));
        emit_results(&t, &c, &p).unwrap();
        let csv = std::fs::read_to_string(&c).unwrap();
        assert_eq!(csv.lines().count(), 3);
        let gp = std::fs::read_to_string(&p).unwrap();
        assert!(gp.contains("set logscale y"));
        assert_eq!(gp.matches("title").count(), 2);
        let empty = ResultTable {
            sweep_var: SweepVar::TrainSize,
            rows: vec![],
        };
        assert!(emit_results(&empty, &c, &p).is_err());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let mut cfg = small();
        cfg.seeds = vec![1, 2];
        let a = run_experiment(&cfg).unwrap().to_csv();
        let b = run_experiment(&cfg).unwrap().to_csv();
        assert_eq!(a, b);
        cfg.seeds = vec![3, 4];
        let c = run_experiment(&cfg).unwrap();
        assert_ne!(a, c.to_csv());
    }

    #[test]
    fn online_method_runs() {
        let mut cfg = small();
        cfg.methods = vec![Method::OnlineEquiHist, Method::EquiHist];
        let t = run_experiment(&cfg).unwrap();
        let (o, b) = (&t.rows[0], &t.rows[1]);
        assert!((o.mean_err_pct - b.mean_err_pct).abs() < 1e-3 * b.mean_err_pct.max(1.0));
    }

    #[test]
    fn errors_are_annotated() {
        let mut cfg = small();
        cfg.ranges = vec![2048];
        cfg.methods = vec![Method::SpHist];
        cfg.cell_limit = CellLimit(1 << 10);
        match run_experiment(&cfg) {
            Err(HistError::Experiment { method, seed, .. }) => {
                assert_eq!(method, "sphist");
                assert_eq!(seed, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
