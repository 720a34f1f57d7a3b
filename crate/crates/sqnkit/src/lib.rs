//! Stochastic quasi-Newton optimization toolkit for nonconvex empirical
//! risk minimization.
//!
//! The core pieces:
//!
//! - [`dlbfgs`]: the stochastic damped L-BFGS inverse-Hessian operator.
//!   Damping enforces `s'y_bar >= 0.25 * gamma * ||s||^2` so the operator
//!   stays positive definite without convexity or line searches; the
//!   two-loop recursion applies it in `(4p + 6) n` multiplications.
//! - [`solvers`]: the mini-batch quasi-Newton driver
//!   `x_{k+1} = x_k - alpha_k H_k g_k`, its variance-reduced variant with
//!   snapshot-anchored gradients and constant step sizes, random-output
//!   selection, and SFO budget planning.
//! - [`oracle`]: batch sampling and gradient assembly with strict SFO-call
//!   accounting (one call per component gradient).
//! - [`problems`]: the sigmoid-loss SVM benchmark, synthetic planted-model
//!   data generation, a sparse dataset text format, and the SNG/accuracy
//!   metrics.
//! - [`harness`]: a config-driven experiment runner emitting CSV traces;
//!   see the `sqnkit` binary for the CLI.
//!
//! Everything random flows through counter-based streams keyed by
//! `(seed, purpose, iteration)` ([`rng`]), so runs are reproducible to the
//! byte.
//!
//! ```
//! use sqnkit::oracle::SamplingPolicy;
//! use sqnkit::problems::{generate_synthetic, generate_with_planted, SigmoidSvmProblem};
//! use sqnkit::solvers::{sqn_run, GammaMode, SolverConfig, StepSchedule, SvmEvaluator};
//!
//! let (train, planted) = generate_synthetic(50, 400, 0.1, 7)?;
//! let testset = generate_with_planted(50, 200, 0.1, 7, "synth/test", &planted)?;
//! let problem = SigmoidSvmProblem::new(train, 1e-4)?;
//!
//! let config = SolverConfig {
//!     batch_size: 20,
//!     memory: 5,
//!     delta: 0.01,
//!     schedule: StepSchedule::Diminishing { base: 10.0 },
//!     max_iters: 200,
//!     seed: 1,
//!     eval_every: 50,
//!     sampling: SamplingPolicy::WithoutReplacement,
//!     initial_gamma: 1.0,
//!     gamma_mode: GammaMode::Adaptive,
//!     initial_iterate: None,
//!     vr: None,
//! };
//! let evaluator = SvmEvaluator { problem: &problem, testset: &testset };
//! let trace = sqn_run(&problem, &config, &evaluator)?;
//!
//! let last = trace.records.last().unwrap();
//! assert!(!trace.diverged());
//! assert!(last.accuracy > 0.5);
//! // Damped L-BFGS pays m calls for the first iteration, 2m afterwards.
//! assert_eq!(trace.sfo.total_calls(), 20 + 40 * 199);
//! # Ok::<(), sqnkit::Error>(())
//! ```

pub mod dlbfgs;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod oracle;
pub mod problems;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use numerics::{ParameterVector, SparseVector};
