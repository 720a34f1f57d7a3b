//! Benchmark objectives, synthetic data generation, dataset ingestion, and
//! evaluation metrics.
//!
//! The benchmark objective is the nonconvex sigmoid-loss SVM
//!
//! ```text
//! f_i(x) = 1 - tanh(v_i <x, u_i>) + lambda ||x||^2
//! ```
//!
//! over labeled sparse samples (u_i, v_i), v_i in {-1, +1}.

mod io;

pub use io::{
    load_sparse_dataset, read_dense_vector, write_dense_vector, write_sidecar_metadata,
    write_sparse_dataset, SidecarMetadata,
};

use crate::error::{Error, Result};
use crate::numerics::{sparse_dot, ParameterVector, SparseVector};
use crate::oracle::FiniteSumProblem;
use crate::rng::StreamRng;

/// One labeled datum: sparse features plus a binary label.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSample {
    pub features: SparseVector,
    /// Label, always -1 or +1.
    pub label: i8,
}

/// A dataset of sparse samples sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<SparseSample>,
    dim: usize,
}

impl LabeledDataset {
    pub fn new(samples: Vec<SparseSample>, dim: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("dataset must contain at least one sample".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: s.features.dim(),
                });
            }
            if s.label != 1 && s.label != -1 {
                return Err(Error::Argument(format!(
                    "sample {i} has label {}, expected -1 or +1",
                    s.label
                )));
            }
        }
        Ok(LabeledDataset { samples, dim })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample(&self, i: usize) -> &SparseSample {
        &self.samples[i]
    }

    pub fn samples(&self) -> &[SparseSample] {
        &self.samples
    }
}

/// Sign convention used for labels and classification: ties map to +1.
#[inline]
pub fn sign_plus(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// sech^2(z), computed via 1/cosh to stay accurate in the saturated tails.
#[inline]
fn sech_squared(z: f64) -> f64 {
    let s = 1.0 / z.cosh();
    s * s
}

/// The regularized sigmoid-SVM objective over a dataset.
#[derive(Debug, Clone)]
pub struct SigmoidSvmProblem {
    dataset: LabeledDataset,
    lambda: f64,
}

impl SigmoidSvmProblem {
    pub fn new(dataset: LabeledDataset, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Argument(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(SigmoidSvmProblem { dataset, lambda })
    }

    pub fn dataset(&self) -> &LabeledDataset {
        &self.dataset
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Mean component loss over the whole training set.
    pub fn objective(&self, x: &ParameterVector) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..self.dataset.len() {
            acc += self.component_loss(i, x)?;
        }
        Ok(acc / self.dataset.len() as f64)
    }
}

impl FiniteSumProblem for SigmoidSvmProblem {
    fn num_components(&self) -> usize {
        self.dataset.len()
    }

    fn dim(&self) -> usize {
        self.dataset.dim()
    }

    /// `1 - tanh(v <x, u>) + lambda ||x||^2`, in [lambda||x||^2, 2 + lambda||x||^2].
    fn component_loss(&self, index: usize, x: &ParameterVector) -> Result<f64> {
        if index >= self.dataset.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.dataset.len(),
            });
        }
        let sample = self.dataset.sample(index);
        let margin = f64::from(sample.label) * sparse_dot(&sample.features, x)?;
        Ok(1.0 - margin.tanh() + self.lambda * x.norm_squared())
    }

    /// `out += scale * (-v sech^2(v <x, u>) u + 2 lambda x)`.
    fn accumulate_component_gradient(
        &self,
        index: usize,
        x: &ParameterVector,
        scale: f64,
        out: &mut ParameterVector,
    ) -> Result<()> {
        if index >= self.dataset.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.dataset.len(),
            });
        }
        let sample = self.dataset.sample(index);
        let v = f64::from(sample.label);
        let margin = v * sparse_dot(&sample.features, x)?;
        let coeff = scale * (-v) * sech_squared(margin);
        accumulate_sparse(out, coeff, &sample.features)?;
        out.add_scaled(scale * 2.0 * self.lambda, x)
    }
}

fn accumulate_sparse(out: &mut ParameterVector, coeff: f64, u: &SparseVector) -> Result<()> {
    if out.len() != u.dim() {
        return Err(Error::Dimension {
            expected: out.len(),
            actual: u.dim(),
        });
    }
    // Densified scatter-add; reconstruct through the safe constructor path.
    let mut values = out.as_slice().to_vec();
    for (i, val) in u.entries() {
        values[i] += coeff * val;
    }
    *out = ParameterVector::new(values).map_err(|_| Error::NonFinite {
        context: "component gradient",
    })?;
    Ok(())
}

/// Component loss as a free function matching the module surface.
pub fn component_loss(problem: &SigmoidSvmProblem, i: usize, x: &ParameterVector) -> Result<f64> {
    problem.component_loss(i, x)
}

/// Component gradient `-v sech^2(v <x,u>) u + 2 lambda x` as a dense vector.
pub fn component_gradient(
    problem: &SigmoidSvmProblem,
    i: usize,
    x: &ParameterVector,
) -> Result<ParameterVector> {
    let mut out = ParameterVector::zeros(problem.dim());
    problem.accumulate_component_gradient(i, x, 1.0, &mut out)?;
    Ok(out)
}

/// Squared norm of the estimated full gradient over a test set:
/// `|| (1/N) sum_i grad_x F(x; u_i, v_i) + 2 lambda x ||^2`.
pub fn sng(x: &ParameterVector, testset: &LabeledDataset, lambda: f64) -> Result<f64> {
    if testset.is_empty() {
        return Err(Error::Argument("sng needs a nonempty test set".into()));
    }
    if testset.dim() != x.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: testset.dim(),
        });
    }
    let mut mean = ParameterVector::zeros(x.len());
    for sample in testset.samples() {
        let v = f64::from(sample.label);
        let margin = v * sparse_dot(&sample.features, x)?;
        accumulate_sparse(&mut mean, -v * sech_squared(margin), &sample.features)?;
    }
    mean.scale(1.0 / testset.len() as f64)?;
    mean.add_scaled(2.0 * lambda, x)?;
    Ok(mean.norm_squared())
}

/// Fraction of test samples with `sign(<x, u>) == v`; ties count as +1.
pub fn accuracy(x: &ParameterVector, testset: &LabeledDataset) -> Result<f64> {
    if testset.is_empty() {
        return Err(Error::Argument("accuracy needs a nonempty test set".into()));
    }
    let mut correct = 0usize;
    for sample in testset.samples() {
        let score = sparse_dot(&sample.features, x)?;
        if sign_plus(score) == sample.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / testset.len() as f64)
}

/// Draws one synthetic sample stream: positions without replacement, values
/// uniform on (0, 1] (the open end keeps stored values nonzero).
fn synthetic_sample(
    n: usize,
    nnz: usize,
    xbar: &ParameterVector,
    rng: &mut StreamRng,
) -> Result<SparseSample> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..nnz {
        let j = i + rng.uniform_below((n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(nnz);
    pool.sort_unstable();
    let values: Vec<f64> = (0..nnz).map(|_| 1.0 - rng.next_f64()).collect();
    let features = SparseVector::new(pool, values, n)?;
    let label = sign_plus(sparse_dot(&features, xbar)?);
    Ok(SparseSample { features, label })
}

/// Generates `count` samples labeled by a planted hyperplane `xbar`.
///
/// Each sample has exactly `round(density * n)` nonzeros at uniformly chosen
/// positions with values uniform on (0, 1]. The `stream_tag` keeps train and
/// test draws on disjoint streams for the same seed.
pub fn generate_with_planted(
    n: usize,
    count: usize,
    density: f64,
    seed: u64,
    stream_tag: &str,
    xbar: &ParameterVector,
) -> Result<LabeledDataset> {
    validate_synthetic_args(n, count, density)?;
    if xbar.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: xbar.len(),
        });
    }
    let nnz = (density * n as f64).round() as usize;
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = StreamRng::for_stream(seed, stream_tag, i as u64);
        samples.push(synthetic_sample(n, nnz, xbar, &mut rng)?);
    }
    LabeledDataset::new(samples, n)
}

/// Generates a synthetic dataset plus its planted hyperplane
/// `xbar ~ U[-1, 1]^n`; labels are `sign(<xbar, u>)` with ties mapped to +1.
pub fn generate_synthetic(
    n: usize,
    count: usize,
    density: f64,
    seed: u64,
) -> Result<(LabeledDataset, ParameterVector)> {
    validate_synthetic_args(n, count, density)?;
    let mut xbar_rng = StreamRng::for_stream(seed, "synth/xbar", 0);
    let xbar =
        ParameterVector::new((0..n).map(|_| 2.0 * xbar_rng.next_f64() - 1.0).collect())?;
    let dataset = generate_with_planted(n, count, density, seed, "synth/train", &xbar)?;
    Ok((dataset, xbar))
}

fn validate_synthetic_args(n: usize, count: usize, density: f64) -> Result<()> {
    if n == 0 || count == 0 {
        return Err(Error::Argument("n and count must be at least 1".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Argument(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    Ok(())
}

/// Starting iterate `x_1 = 5 * u` with `u ~ U[0, 1]^n`, keyed by run seed.
pub fn initial_iterate(n: usize, seed: u64) -> Result<ParameterVector> {
    let mut rng = StreamRng::for_stream(seed, "x1", 0);
    ParameterVector::new((0..n).map(|_| 5.0 * rng.next_f64()).collect())
}

/// Splits a dataset into train/test by a seeded shuffle.
///
/// `train_fraction` defaults to 0.6 in the harness; both halves must end up
/// nonempty.
pub fn split_train_test(
    dataset: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let t = dataset.len();
    let train_len = ((t as f64) * train_fraction).round() as usize;
    if train_len == 0 || train_len == t {
        return Err(Error::Argument(format!(
            "split of {t} samples at fraction {train_fraction} leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..t).collect();
    let mut rng = StreamRng::for_stream(seed, "split", 0);
    for i in 0..t - 1 {
        let j = i + rng.uniform_below((t - i) as u64) as usize;
        order.swap(i, j);
    }
    let pick = |ids: &[usize]| -> Result<LabeledDataset> {
        LabeledDataset::new(
            ids.iter().map(|&i| dataset.sample(i).clone()).collect(),
            dataset.dim(),
        )
    };
    Ok((pick(&order[..train_len])?, pick(&order[train_len..])?))
}
