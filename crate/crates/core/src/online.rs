//! Streaming maintenance of least-squares histograms.
//!
//! Each observation updates the sufficient statistics `G ← γG + xxᵀ`,
//! `c ← γc + x·s` in `O(b²)`; the current weights solve
//! `(G/τ + λI) w = c/τ` where `τ` is the decayed observation weight. With
//! `γ = 1` this replays the full regularized objective (follow the regularized
//! leader); `γ < 1` biases towards recent feedback.

use crate::equihist::{EquiLayout, NormalEquations};
use crate::error::{HistError, Result};
use crate::evalbench::avg_rel_error;
use crate::haar::{range_basis_dot, HaarIndex, PaddedDomain};
use crate::histcore::{AttributeDomain, BucketHistogram, FrequencyTensor, QueryFeedbackRecord, RangeQuery, WaveletSketch};
use crate::linalg::{solve_ridge, FALLBACK_RIDGE_FACTOR};
use crate::workload::{label_queries, perturb_mass};

/// Linear features of a range query.
pub trait FeatureMap {
    fn dim(&self) -> usize;
    fn domain(&self) -> &AttributeDomain;
    /// Non-zero features of `q` as `(index, value)`.
    fn features(&self, q: &RangeQuery) -> Vec<(usize, f64)>;
}

impl FeatureMap for EquiLayout {
    fn dim(&self) -> usize {
        self.bucket_count()
    }

    fn domain(&self) -> &AttributeDomain {
        EquiLayout::domain(self)
    }

    fn features(&self, q: &RangeQuery) -> Vec<(usize, f64)> {
        self.sparse_overlap(q)
    }
}

/// A fixed set of Haar coefficients whose values are re-fitted online.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenSupport {
    domain: PaddedDomain,
    indices: Vec<usize>,
    decoded: Vec<Vec<HaarIndex>>,
}

impl FrozenSupport {
    pub fn new(domain: PaddedDomain, indices: Vec<usize>) -> Result<Self> {
        let decoded = indices
            .iter()
            .map(|&flat| {
                domain
                    .unflatten(flat)?
                    .iter()
                    .zip(domain.padded())
                    .map(|(&j, &n)| HaarIndex::from_flat(j, n))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FrozenSupport {
            domain,
            indices,
            decoded,
        })
    }

    /// Support of an existing sketch.
    pub fn from_sketch(sketch: &WaveletSketch) -> Result<Self> {
        Self::new(
            sketch.domain().clone(),
            sketch.entries().iter().map(|e| e.0).collect(),
        )
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

impl FeatureMap for FrozenSupport {
    fn dim(&self) -> usize {
        self.indices.len()
    }

    fn domain(&self) -> &AttributeDomain {
        self.domain.original()
    }

    fn features(&self, q: &RangeQuery) -> Vec<(usize, f64)> {
        self.decoded
            .iter()
            .enumerate()
            .filter_map(|(i, js)| {
                let v = range_basis_dot(q.bounds(), js, self.domain.padded());
                (v != 0.0).then_some((i, v))
            })
            .collect()
    }
}

/// Online least-squares state over a feature map.
#[derive(Debug, Clone)]
pub struct OnlineState<F> {
    features: F,
    stats: NormalEquations,
    observations: u64,
    ridge: Option<f64>,
    decay: f64,
}

impl<F: FeatureMap> OnlineState<F> {
    /// `ridge = None` selects `1e-8 · trace(G/τ) / b` at solve time.
    pub fn new(features: F, ridge: Option<f64>, decay: f64) -> Result<Self> {
        if let Some(l) = ridge {
            if !(l >= 0.0) {
                return Err(HistError::InvalidParameter(format!("ridge {l} must be >= 0")));
            }
        }
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(HistError::InvalidParameter(format!("decay {decay} outside (0, 1]")));
        }
        let dim = features.dim();
        Ok(OnlineState {
            features,
            stats: NormalEquations::new(dim),
            observations: 0,
            ridge,
            decay,
        })
    }

    pub fn features(&self) -> &F {
        &self.features
    }

    pub fn stats(&self) -> &NormalEquations {
        &self.stats
    }

    pub fn observations(&self) -> u64 {
        self.observations
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn observe(&mut self, qfr: &QueryFeedbackRecord) -> Result<()> {
        qfr.query.check_within(self.features.domain())?;
        let x = self.features.features(&qfr.query);
        self.stats.decay(self.decay);
        self.stats.add(&x, qfr.cardinality);
        self.observations += 1;
        Ok(())
    }

    /// Current weights.
    pub fn weights(&self) -> Result<Vec<f64>> {
        if self.observations == 0 {
            return Err(HistError::NoData);
        }
        let tau = self.stats.weight;
        let g = &self.stats.gram / tau;
        let c: Vec<f64> = self.stats.rhs.iter().map(|v| v / tau).collect();
        let b = self.stats.dim().max(1) as f64;
        let ridge = self
            .ridge
            .unwrap_or_else(|| FALLBACK_RIDGE_FACTOR * g.trace().max(0.0) / b);
        Ok(solve_ridge(&g, &c, ridge).x)
    }

    /// Estimate of `q` under the current weights, clamped at zero.
    pub fn estimator(&self) -> Result<impl Fn(&RangeQuery) -> f64 + '_> {
        let w = self.weights()?;
        Ok(move |q: &RangeQuery| {
            self.features
                .features(q)
                .iter()
                .map(|&(j, v)| v * w[j])
                .sum::<f64>()
                .max(0.0)
        })
    }
}

impl OnlineState<EquiLayout> {
    pub fn histogram(&self) -> Result<BucketHistogram> {
        self.features.histogram(&self.weights()?)
    }
}

impl OnlineState<FrozenSupport> {
    pub fn sketch(&self) -> Result<WaveletSketch> {
        let w = self.weights()?;
        WaveletSketch::new(
            self.features.domain.clone(),
            self.features.indices.iter().copied().zip(w).collect(),
        )
    }
}

/// Database update applied right after a given stream step.
#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseUpdate {
    pub after_step: usize,
    /// Fraction of records moved to uniformly random cells.
    pub fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct StreamScenario {
    pub truth: FrequencyTensor,
    pub stream: Vec<RangeQuery>,
    pub test: Vec<RangeQuery>,
    pub eval_every: usize,
    pub updates: Vec<DatabaseUpdate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub step: usize,
    pub avg_rel_error: f64,
    /// Measured immediately after a database update, against the new truth.
    pub after_update: bool,
}

#[derive(Debug, Clone)]
pub struct StreamTrace {
    pub points: Vec<TracePoint>,
    /// Stream records as labeled at the time they were observed.
    pub labeled: Vec<QueryFeedbackRecord>,
    /// Ground truth at the end of the stream.
    pub final_truth: FrequencyTensor,
}

fn evaluate<F: FeatureMap>(state: &OnlineState<F>, test: &[QueryFeedbackRecord]) -> Result<f64> {
    let est = state.estimator()?;
    let truths: Vec<f64> = test.iter().map(|r| r.cardinality).collect();
    let estimates: Vec<f64> = test.iter().map(|r| est(&r.query)).collect();
    avg_rel_error(&truths, &estimates)
}

/// Feeds the stream one record at a time, measuring test error every
/// `eval_every` steps, at the final step, and around each database update.
pub fn simulate_stream<F: FeatureMap>(
    state: &mut OnlineState<F>,
    scenario: &StreamScenario,
) -> Result<StreamTrace> {
    if scenario.stream.is_empty() || scenario.test.is_empty() {
        return Err(HistError::NoData);
    }
    if scenario.eval_every == 0 {
        return Err(HistError::InvalidParameter("eval_every must be positive".into()));
    }
    let mut truth = scenario.truth.clone();
    let mut test = label_queries(&truth, &scenario.test)?;
    let mut points = Vec::new();
    let mut labeled = Vec::with_capacity(scenario.stream.len());
    let n = scenario.stream.len();
    let mut updates = scenario.updates.clone();
    updates.sort_by_key(|u| u.after_step);
    let mut next_update = updates.iter().peekable();
    for (i, q) in scenario.stream.iter().enumerate() {
        let step = i + 1;
        let rec = QueryFeedbackRecord::new(q.clone(), truth.exact_cardinality(q)? as f64)?;
        state.observe(&rec)?;
        labeled.push(rec);
        let pending = next_update.peek().is_some_and(|u| u.after_step == step);
        if step % scenario.eval_every == 0 || step == n || pending {
            points.push(TracePoint {
                step,
                avg_rel_error: evaluate(state, &test)?,
                after_update: false,
            });
        }
        while let Some(u) = next_update.next_if(|u| u.after_step == step) {
            truth = perturb_mass(&truth, u.fraction, u.seed)?;
            test = label_queries(&truth, &scenario.test)?;
            points.push(TracePoint {
                step,
                avg_rel_error: evaluate(state, &test)?,
                after_update: true,
            });
        }
    }
    Ok(StreamTrace {
        points,
        labeled,
        final_truth: truth,
    })
}
