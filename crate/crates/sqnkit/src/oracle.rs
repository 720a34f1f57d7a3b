//! Stochastic first-order oracle: mini-batch index sampling, batched
//! gradient assembly, and SFO-call accounting.
//!
//! A "call" is one component-gradient evaluation, so a mini batch of size m
//! costs m calls. Gradient sums run left to right over the batch order,
//! keeping every run bit-reproducible for a fixed seed.

use crate::error::{Error, Result};
use crate::numerics::ParameterVector;
use crate::rng::StreamRng;

/// A finite-sum objective f(x) = (1/T) sum_i f_i(x) exposing component
/// losses and gradients.
pub trait FiniteSumProblem {
    /// Number of components T.
    fn num_components(&self) -> usize;

    /// Dimension n of the iterate.
    fn dim(&self) -> usize;

    fn component_loss(&self, index: usize, x: &ParameterVector) -> Result<f64>;

    /// Accumulates `out += scale * grad f_index(x)`.
    fn accumulate_component_gradient(
        &self,
        index: usize,
        x: &ParameterVector,
        scale: f64,
        out: &mut ParameterVector,
    ) -> Result<()>;
}

/// Mini-batch sampling policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingPolicy {
    /// Indices distinct within one batch; batches independent of each other.
    WithoutReplacement,
    /// Independent draws, duplicates allowed.
    WithReplacement,
}

/// The indices drawn for one iteration's mini batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchIndices {
    indices: Vec<usize>,
    iteration: u64,
}

impl BatchIndices {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Builds a batch directly from indices (used for exhaustive-enumeration
    /// oracles and full-batch configurations).
    pub fn from_indices(indices: Vec<usize>, iteration: u64) -> Self {
        BatchIndices { indices, iteration }
    }
}

/// Counts component-gradient evaluations, total and per iteration.
#[derive(Debug, Clone, Default)]
pub struct SfoCounter {
    total_calls: u64,
    per_iteration: Vec<u64>,
}

impl SfoCounter {
    pub fn new() -> Self {
        SfoCounter::default()
    }

    /// Opens a new per-iteration bucket.
    pub fn begin_iteration(&mut self) {
        self.per_iteration.push(0);
    }

    /// Records `calls` evaluations against the current bucket.
    pub fn record(&mut self, calls: u64) {
        if self.per_iteration.is_empty() {
            self.per_iteration.push(0);
        }
        *self.per_iteration.last_mut().unwrap() += calls;
        self.total_calls += calls;
    }

    pub fn total_calls(&self) -> u64 {
        self.total_calls
    }

    pub fn per_iteration(&self) -> &[u64] {
        &self.per_iteration
    }
}

/// Draws a mini batch of `m` indices from `0..dataset_size`.
///
/// Without replacement uses a partial Fisher-Yates shuffle, so the batch is
/// the prefix of a uniform random permutation; with replacement draws m
/// independent uniform indices.
pub fn sample_batch(
    rng: &mut StreamRng,
    dataset_size: usize,
    m: usize,
    policy: SamplingPolicy,
) -> Result<BatchIndices> {
    sample_batch_at(rng, dataset_size, m, policy, 0)
}

/// As [`sample_batch`], tagging the batch with the iteration that drew it.
pub fn sample_batch_at(
    rng: &mut StreamRng,
    dataset_size: usize,
    m: usize,
    policy: SamplingPolicy,
    iteration: u64,
) -> Result<BatchIndices> {
    if m == 0 {
        return Err(Error::Argument("batch size must be at least 1".into()));
    }
    if dataset_size == 0 {
        return Err(Error::Sampling("cannot sample from an empty dataset".into()));
    }
    let indices = match policy {
        SamplingPolicy::WithoutReplacement => {
            if m > dataset_size {
                return Err(Error::Sampling(format!(
                    "batch size {m} exceeds dataset size {dataset_size} without replacement"
                )));
            }
            let mut pool: Vec<usize> = (0..dataset_size).collect();
            for i in 0..m {
                let j = i + rng.uniform_below((dataset_size - i) as u64) as usize;
                pool.swap(i, j);
            }
            pool.truncate(m);
            pool
        }
        SamplingPolicy::WithReplacement => (0..m)
            .map(|_| rng.uniform_below(dataset_size as u64) as usize)
            .collect(),
    };
    Ok(BatchIndices { indices, iteration })
}

fn validate_batch(problem: &dyn FiniteSumProblem, batch: &BatchIndices) -> Result<()> {
    let len = problem.num_components();
    for &i in batch.indices() {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
    }
    Ok(())
}

fn averaged_gradient(
    problem: &dyn FiniteSumProblem,
    x: &ParameterVector,
    indices: &[usize],
) -> Result<ParameterVector> {
    let mut acc = ParameterVector::zeros(problem.dim());
    for &i in indices {
        problem.accumulate_component_gradient(i, x, 1.0, &mut acc)?;
    }
    acc.scale(1.0 / indices.len() as f64)?;
    Ok(acc)
}

/// Mini-batch gradient estimate `(1/m) sum_{i in batch} grad f_i(x)`.
///
/// Costs `m` SFO calls.
pub fn batch_gradient(
    problem: &dyn FiniteSumProblem,
    x: &ParameterVector,
    batch: &BatchIndices,
    counter: &mut SfoCounter,
) -> Result<ParameterVector> {
    validate_batch(problem, batch)?;
    let g = averaged_gradient(problem, x, batch.indices())?;
    counter.record(batch.len() as u64);
    Ok(g)
}

/// Re-evaluates the previous iteration's batch at a new point.
///
/// This is the extra gradient evaluation that makes a stochastic damped
/// L-BFGS iteration cost `m_k + m_{k-1}` calls: the gradient difference
/// must be formed on the same samples at both endpoints.
pub fn batch_gradient_at(
    problem: &dyn FiniteSumProblem,
    x_new: &ParameterVector,
    batch_prev: &BatchIndices,
    counter: &mut SfoCounter,
) -> Result<ParameterVector> {
    batch_gradient(problem, x_new, batch_prev, counter)
}

/// Exact gradient of the finite sum; costs T calls.
pub fn full_gradient(
    problem: &dyn FiniteSumProblem,
    x: &ParameterVector,
    counter: &mut SfoCounter,
) -> Result<ParameterVector> {
    let t = problem.num_components();
    let all = BatchIndices::from_indices((0..t).collect(), 0);
    batch_gradient(problem, x, &all, counter)
}
