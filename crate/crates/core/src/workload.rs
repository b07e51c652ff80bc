//! Synthetic data and query workloads.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)` and, where a run needs several independent streams,
//! selected with `set_stream(id)`. ChaCha8 output is specified bit-for-bit and
//! does not depend on platform or word size, so a given seed reproduces the
//! same datasets and workloads everywhere (for a fixed `rand`/`rand_distr` version).

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{HistError, Result};
use crate::histcore::{
    AttributeDomain, FrequencyTensor, Interval, PrefixCounts, QueryFeedbackRecord, RangeQuery,
};

/// Default number of synthetic records.
pub const DEFAULT_RECORDS: u64 = 100_000;

/// Default cap on query volume as a fraction of the domain volume.
pub const DEFAULT_MAX_VOLUME_FRACTION: f64 = 0.2;

/// Seeded generator for stream `stream` of `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 17 components, variance 625.
    Type1,
    /// 5 components, variance 100 (spiky).
    Type2,
    /// Multi-dimensional: 9 components / variance 100 in 2-D, otherwise 5 / 25.
    GaussNd,
    Custom,
}

impl Preset {
    /// `(components, variance)` for a domain of dimension `d`.
    pub fn parameters(self, d: usize) -> Option<(usize, f64)> {
        match self {
            Preset::Type1 => Some((17, 625.0)),
            Preset::Type2 => Some((5, 100.0)),
            Preset::GaussNd if d == 2 => Some((9, 100.0)),
            Preset::GaussNd => Some((5, 25.0)),
            Preset::Custom => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Type1 => "type1",
            Preset::Type2 => "type2",
            Preset::GaussNd => "gauss-nd",
            Preset::Custom => "custom",
        }
    }
}

impl FromStr for Preset {
    type Err = HistError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "type1" => Ok(Preset::Type1),
            "type2" => Ok(Preset::Type2),
            "gauss-nd" => Ok(Preset::GaussNd),
            "custom" => Ok(Preset::Custom),
            _ => Err(HistError::InvalidParameter(format!("unknown preset {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub mean: Vec<f64>,
    pub variance: f64,
    pub weight: f64,
}

/// Treatment of Gaussian draws that round to a cell outside the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutOfDomain {
    /// Move the draw to the nearest boundary cell.
    #[default]
    Clamp,
    /// Redraw the record, component included, until it lands inside.
    Redraw,
}

impl FromStr for OutOfDomain {
    type Err = HistError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamp" => Ok(OutOfDomain::Clamp),
            "redraw" => Ok(OutOfDomain::Redraw),
            _ => Err(HistError::InvalidParameter(format!("unknown out-of-domain mode {s:?}"))),
        }
    }
}

/// Spherical Gaussian mixture over an integer domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub domain: AttributeDomain,
    pub components: Vec<MixtureComponent>,
    pub records: u64,
    pub preset: Preset,
    pub out_of_domain: OutOfDomain,
}

impl MixtureSpec {
    pub fn new(
        domain: AttributeDomain,
        components: Vec<MixtureComponent>,
        records: u64,
        preset: Preset,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(HistError::InvalidParameter("mixture has no components".into()));
        }
        if records == 0 {
            return Err(HistError::InvalidParameter("record count must be positive".into()));
        }
        for (i, c) in components.iter().enumerate() {
            if c.mean.len() != domain.dims() {
                return Err(HistError::InvalidParameter(format!(
                    "component {i}: mean has {} coordinates, domain has {}",
                    c.mean.len(),
                    domain.dims()
                )));
            }
            if !(c.variance > 0.0) || !(c.weight > 0.0) || !c.variance.is_finite() {
                return Err(HistError::InvalidParameter(format!(
                    "component {i}: variance and weight must be positive"
                )));
            }
        }
        Ok(MixtureSpec {
            domain,
            components,
            records,
            preset,
            out_of_domain: OutOfDomain::Clamp,
        })
    }

    /// Preset mixture with equal weights and means uniform in `[0, r_i]`.
    pub fn from_preset(preset: Preset, domain: AttributeDomain, records: u64, seed: u64) -> Result<Self> {
        let (n, variance) = preset
            .parameters(domain.dims())
            .ok_or_else(|| HistError::InvalidParameter("custom preset needs explicit components".into()))?;
        let mut rng = rng_for(seed, streams::MEANS);
        let components = (0..n)
            .map(|_| MixtureComponent {
                mean: domain
                    .ranges()
                    .iter()
                    .map(|&r| rng.random_range(0.0..=r as f64))
                    .collect(),
                variance,
                weight: 1.0,
            })
            .collect();
        Self::new(domain, components, records, preset)
    }
}

/// Stream ids used to derive independent generators from one seed.
pub mod streams {
    pub const MEANS: u64 = 1;
    pub const RECORDS: u64 = 2;
    pub const TRAIN_QUERIES: u64 = 3;
    pub const TEST_QUERIES: u64 = 4;
    pub const PERTURB: u64 = 5;
    pub const STREAM_QUERIES: u64 = 6;
}

/// Draws `spec.records` points, rounds each to the nearest cell and clamps to the domain.
pub fn gen_gaussian_mixture(spec: &MixtureSpec, seed: u64) -> Result<FrequencyTensor> {
    let mut freq = FrequencyTensor::zeros(spec.domain.clone())?;
    let weights = WeightedIndex::new(spec.components.iter().map(|c| c.weight))
        .map_err(|e| HistError::InvalidParameter(format!("mixture weights: {e}")))?;
    let sds: Vec<f64> = spec.components.iter().map(|c| c.variance.sqrt()).collect();
    let ranges = spec.domain.ranges();
    let strides = spec.domain.strides();
    let mut rng = rng_for(seed, streams::RECORDS);
    let redraw = spec.out_of_domain == OutOfDomain::Redraw;
    let mut added = 0;
    let mut attempts: u64 = 0;
    let max_attempts = spec.records.saturating_mul(1000);
    'records: while added < spec.records {
        attempts += 1;
        if attempts > max_attempts {
            return Err(HistError::InvalidParameter(
                "mixture places almost no mass inside the domain".into(),
            ));
        }
        let c = weights.sample(&mut rng);
        let comp = &spec.components[c];
        let mut flat = 0;
        for (i, (&mu, &r)) in comp.mean.iter().zip(ranges).enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let x = (mu + sds[c] * z).round();
            if redraw && !(1.0..=r as f64).contains(&x) {
                continue 'records;
            }
            flat += (x.clamp(1.0, r as f64) as usize - 1) * strides[i];
        }
        freq.add_at_flat(flat, 1);
        added += 1;
    }
    Ok(freq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryModel {
    /// Centers uniform over the domain.
    Uniform,
    /// Centers drawn from the data distribution.
    DataDependent,
}

impl FromStr for QueryModel {
    type Err = HistError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(QueryModel::Uniform),
            "data-dependent" | "data" => Ok(QueryModel::DataDependent),
            _ => Err(HistError::InvalidParameter(format!("unknown query model {s:?}"))),
        }
    }
}

impl QueryModel {
    pub fn name(self) -> &'static str {
        match self {
            QueryModel::Uniform => "uniform",
            QueryModel::DataDependent => "data-dependent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryModelSpec {
    pub model: QueryModel,
    pub count: usize,
    pub max_volume_fraction: f64,
    pub seed: u64,
}

impl QueryModelSpec {
    pub fn new(model: QueryModel, count: usize, seed: u64) -> Self {
        QueryModelSpec {
            model,
            count,
            max_volume_fraction: DEFAULT_MAX_VOLUME_FRACTION,
            seed,
        }
    }
}

/// Samples cells proportionally to their counts.
#[derive(Debug, Clone)]
pub struct RecordSampler {
    cumulative: Vec<u64>,
}

impl RecordSampler {
    pub fn new(freq: &FrequencyTensor) -> Result<Self> {
        if freq.total() == 0 {
            return Err(HistError::EmptyDataset);
        }
        let mut acc = 0;
        let cumulative = freq
            .counts()
            .iter()
            .map(|&c| {
                acc += c;
                acc
            })
            .collect();
        Ok(RecordSampler { cumulative })
    }

    /// Flat index of a cell drawn with probability `count / total`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random_range(0..total);
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// Largest per-dimension widths whose product stays within `fraction` of the volume.
pub fn max_query_widths(domain: &AttributeDomain, fraction: f64) -> Vec<usize> {
    let d = domain.dims() as f64;
    let side = fraction.powf(1.0 / d);
    let mut widths: Vec<usize> = domain
        .ranges()
        .iter()
        .map(|&r| ((side * r as f64).floor() as usize).clamp(1, r))
        .collect();
    let cap = (fraction * domain.volume() as f64).floor().max(1.0);
    while widths.iter().map(|&w| w as f64).product::<f64>() > cap {
        let (i, _) = widths.iter().enumerate().max_by_key(|(_, w)| **w).unwrap();
        if widths[i] == 1 {
            break;
        }
        widths[i] -= 1;
    }
    widths
}

/// Generates range queries around uniform or data-drawn centers.
///
/// Per dimension the width is uniform in `1..=W_i` with `W_i = ⌊frac^{1/d}·r_i⌋`,
/// so every query's volume is at most `frac · ∏ r_i`; the box is centered on the
/// center cell (low side gets the smaller half for even widths) and clipped to the domain.
pub fn gen_queries(spec: &QueryModelSpec, freq: &FrequencyTensor) -> Result<Vec<RangeQuery>> {
    if !(spec.max_volume_fraction > 0.0 && spec.max_volume_fraction <= 1.0) {
        return Err(HistError::InvalidParameter(format!(
            "max volume fraction {} outside (0, 1]",
            spec.max_volume_fraction
        )));
    }
    let domain = freq.domain();
    let sampler = match spec.model {
        QueryModel::DataDependent => Some(RecordSampler::new(freq)?),
        QueryModel::Uniform => None,
    };
    let widths = max_query_widths(domain, spec.max_volume_fraction);
    let strides = domain.strides();
    let ranges = domain.ranges();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    let mut center = vec![0usize; ranges.len()];
    for _ in 0..spec.count {
        match &sampler {
            Some(s) => {
                let mut rem = s.sample(&mut rng);
                for (c, st) in center.iter_mut().zip(&strides) {
                    *c = rem / st + 1;
                    rem %= st;
                }
            }
            None => {
                for (c, &r) in center.iter_mut().zip(ranges) {
                    *c = rng.random_range(1..=r);
                }
            }
        }
        let bounds = center
            .iter()
            .zip(&widths)
            .zip(ranges)
            .map(|((&c, &wmax), &r)| {
                let w = rng.random_range(1..=wmax);
                let below = (w - 1) / 2;
                let above = w - 1 - below;
                Interval::new(c.saturating_sub(below).max(1), (c + above).min(r))
            })
            .collect();
        out.push(RangeQuery::new(bounds)?);
    }
    Ok(out)
}

/// Pairs each query with its exact cardinality, preserving order.
pub fn label_queries(freq: &FrequencyTensor, queries: &[RangeQuery]) -> Result<Vec<QueryFeedbackRecord>> {
    if queries.is_empty() {
        return Ok(Vec::new());
    }
    let prefix = PrefixCounts::new(freq);
    queries
        .iter()
        .map(|q| {
            let s = prefix.count(q)?;
            QueryFeedbackRecord::new(q.clone(), s as f64)
        })
        .collect()
}

/// Moves `round(fraction · total)` randomly chosen records to uniformly random cells.
pub fn perturb_mass(freq: &FrequencyTensor, fraction: f64, seed: u64) -> Result<FrequencyTensor> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(HistError::InvalidParameter(format!(
            "perturbation fraction {fraction} outside [0, 1]"
        )));
    }
    let mut out = freq.clone();
    let total = freq.total();
    let moves = (fraction * total as f64).round() as u64;
    if moves == 0 {
        return Ok(out);
    }
    let mut rng = rng_for(seed, streams::PERTURB);
    // one entry per record so each record moves at most once
    let mut records: Vec<u32> = Vec::with_capacity(total as usize);
    for (flat, &c) in freq.counts().iter().enumerate() {
        records.extend(std::iter::repeat_n(flat as u32, c as usize));
    }
    let cells = freq.counts().len();
    for i in 0..moves as usize {
        let j = rng.random_range(i..records.len());
        records.swap(i, j);
        let to = rng.random_range(0..cells);
        out.move_records(records[i] as usize, to, 1);
    }
    Ok(out)
}

/// Reads one record per line (`d` integer columns) into a frequency tensor.
///
/// Blank lines and lines starting with `#` are skipped. With `zero_based`, every
/// value is shifted by one before the range check.
pub fn ingest_records_csv(path: &Path, domain: &AttributeDomain, zero_based: bool) -> Result<FrequencyTensor> {
    let file = std::fs::File::open(path).map_err(|e| HistError::io(path, e))?;
    let mut freq = FrequencyTensor::zeros(domain.clone())?;
    let strides = domain.strides();
    let shift = i64::from(zero_based);
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HistError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != domain.dims() {
            return Err(HistError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("expected {} columns, found {}", domain.dims(), fields.len()),
            });
        }
        let mut flat = 0;
        for (col, (f, &r)) in fields.iter().zip(domain.ranges()).enumerate() {
            let v: i64 = f.parse().map_err(|_| HistError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("column {}: {f:?} is not an integer", col + 1),
            })?;
            let v = v + shift;
            if v < 1 || v as u64 > r as u64 {
                return Err(HistError::OutOfRange {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    column: col + 1,
                    value: v,
                    max: r,
                });
            }
            flat += (v as usize - 1) * strides[col];
        }
        freq.add_at_flat(flat, 1);
    }
    Ok(freq)
}
