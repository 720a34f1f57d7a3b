//! Reproducible experiment harness: dataset preparation, multi-run
//! fan-out, and CSV emission for external plotting.
//!
//! Independent (algorithm, seed) runs execute on a small worker pool capped
//! by `SQNKIT_THREADS`; each run writes its own trace file and the summary
//! is assembled by the coordinator in configuration order, so outputs are
//! byte-identical no matter how the pool schedules work.

mod config;
mod csv;

pub use config::{
    load_config, parse_config, serialize_config, AlgorithmKind, AlgorithmSpec, ExperimentConfig,
    Overrides, ProblemSpec,
};
pub use csv::{
    format_compare, format_summary, format_trace, read_trace, write_summary, write_trace,
    SummaryRow, COMPARE_HEADER, SUMMARY_HEADER, TRACE_HEADER,
};

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::problems::{
    generate_synthetic, generate_with_planted, load_sparse_dataset, split_train_test,
    write_dense_vector, write_sidecar_metadata, write_sparse_dataset, LabeledDataset,
    SidecarMetadata, SigmoidSvmProblem,
};
use crate::rng::RNG_VERSION;
use crate::solvers::{sdlbfgs_vr_run, sqn_run, RunTrace, SvmEvaluator};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "SQNKIT_THREADS";

/// Train/test pair the solvers run against.
pub struct PreparedProblem {
    pub problem: SigmoidSvmProblem,
    pub testset: LabeledDataset,
}

/// Materializes the problem spec: synthetic data is regenerated in memory
/// from its seed (identical to what `generate` writes), dataset files are
/// loaded and split if no test file is given.
pub fn prepare_problem(config: &ExperimentConfig) -> Result<PreparedProblem> {
    let (train, test) = match &config.problem {
        ProblemSpec::Synthetic {
            n,
            train_size,
            test_size,
            density,
            seed,
        } => {
            let (train, xbar) = generate_synthetic(*n, *train_size, *density, *seed)?;
            let test =
                generate_with_planted(*n, *test_size, *density, *seed, "synth/test", &xbar)?;
            (train, test)
        }
        ProblemSpec::Dataset {
            train,
            test,
            split,
            split_seed,
        } => {
            let full = load_sparse_dataset(train)?;
            match test {
                Some(test_path) => {
                    let test = load_sparse_dataset(test_path)?;
                    if test.dim() != full.dim() {
                        // Files without a dim header can disagree; make the
                        // fix explicit on the data side rather than guessing.
                        return Err(Error::Data {
                            path: test_path.clone(),
                            message: format!(
                                "test dimension {} != train dimension {}; \
                                 declare `# dim:` headers in both files",
                                test.dim(),
                                full.dim()
                            ),
                        });
                    }
                    (full, test)
                }
                None => split_train_test(&full, *split, *split_seed)?,
            }
        }
    };
    Ok(PreparedProblem {
        problem: SigmoidSvmProblem::new(train, config.lambda)?,
        testset: test,
    })
}

/// Files written by `cmd_generate`.
pub struct GeneratedFiles {
    pub train: PathBuf,
    pub test: PathBuf,
    pub xbar: PathBuf,
    pub metadata: PathBuf,
}

/// Writes the synthetic train/test files, the planted hyperplane, and a
/// metadata sidecar into the output directory.
pub fn cmd_generate(config: &ExperimentConfig) -> Result<GeneratedFiles> {
    config.validate()?;
    let ProblemSpec::Synthetic {
        n,
        train_size,
        test_size,
        density,
        seed,
    } = &config.problem
    else {
        return Err(Error::Config(
            "generate needs a synthetic problem spec".into(),
        ));
    };
    std::fs::create_dir_all(&config.out_dir)?;
    let (train, xbar) = generate_synthetic(*n, *train_size, *density, *seed)?;
    let test = generate_with_planted(*n, *test_size, *density, *seed, "synth/test", &xbar)?;

    let files = GeneratedFiles {
        train: config.out_dir.join("train.txt"),
        test: config.out_dir.join("test.txt"),
        xbar: config.out_dir.join("xbar.txt"),
        metadata: config.out_dir.join("meta.toml"),
    };
    write_sparse_dataset(&files.train, &train)?;
    write_sparse_dataset(&files.test, &test)?;
    write_dense_vector(&files.xbar, &xbar)?;
    write_sidecar_metadata(
        &files.metadata,
        &SidecarMetadata {
            seed: *seed,
            n: *n,
            density: *density,
            train_count: *train_size,
            test_count: *test_size,
            xbar_path: "xbar.txt".into(),
            rng: RNG_VERSION.into(),
        },
    )?;
    Ok(files)
}

fn trace_path(out_dir: &Path, label: &str, seed: u64) -> PathBuf {
    out_dir.join(format!("trace_{label}_seed{seed}.csv"))
}

fn worker_count(runs: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(runs);
    cap.min(runs).max(1)
}

fn execute_run(
    prepared: &PreparedProblem,
    spec: &AlgorithmSpec,
    seed: u64,
    eval_every: u64,
) -> Result<RunTrace> {
    let solver_config = spec.solver_config(seed, eval_every)?;
    let evaluator = SvmEvaluator {
        problem: &prepared.problem,
        testset: &prepared.testset,
    };
    if spec.kind.is_variance_reduced() {
        sdlbfgs_vr_run(&prepared.problem, &solver_config, &evaluator)
    } else {
        sqn_run(&prepared.problem, &solver_config, &evaluator)
    }
}

/// Result of a `run` invocation.
pub struct RunOutcome {
    pub summaries: Vec<SummaryRow>,
    pub summary_path: PathBuf,
    pub all_diverged: bool,
}

/// Runs every (algorithm, seed) combination, writing one trace CSV per run
/// plus a summary CSV.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let prepared = prepare_problem(config)?;
    std::fs::create_dir_all(&config.out_dir)?;

    let jobs: Vec<(usize, &AlgorithmSpec, u64)> = config
        .algorithms
        .iter()
        .flat_map(|spec| config.seeds.iter().map(move |&seed| (spec, seed)))
        .enumerate()
        .map(|(i, (spec, seed))| (i, spec, seed))
        .collect();

    let results: Vec<Mutex<Option<Result<RunTrace>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let cursor = AtomicUsize::new(0);
    let workers = worker_count(jobs.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let (_, spec, seed) = jobs[i];
                let result = execute_run(&prepared, spec, seed, config.eval_every);
                *results[i].lock().unwrap() = Some(result);
            });
        }
    });

    let mut summaries = Vec::with_capacity(jobs.len());
    for (i, spec, seed) in &jobs {
        let trace = results[*i]
            .lock()
            .unwrap()
            .take()
            .expect("worker finished without a result")?;
        let label = spec.label();
        write_trace(&trace_path(&config.out_dir, &label, *seed), &trace)?;
        summaries.push(SummaryRow::from_trace(&label, *seed, &trace));
    }
    let summary_path = config.out_dir.join("summary.csv");
    write_summary(&summary_path, &summaries)?;
    let all_diverged = summaries.iter().all(|s| s.diverged);
    Ok(RunOutcome {
        summaries,
        summary_path,
        all_diverged,
    })
}

/// Aligns every configured trace into one long-format CSV keyed by
/// (algorithm, seed, iteration, sfo_total).
pub fn cmd_compare(config: &ExperimentConfig) -> Result<PathBuf> {
    config.validate()?;
    let mut traces = Vec::new();
    for spec in &config.algorithms {
        let label = spec.label();
        for &seed in &config.seeds {
            let path = trace_path(&config.out_dir, &label, seed);
            if !path.exists() {
                return Err(Error::Data {
                    path,
                    message: "trace file missing; run `run` first".into(),
                });
            }
            traces.push((label.clone(), seed, read_trace(&path)?));
        }
    }
    let out = config.out_dir.join("compare.csv");
    std::fs::write(&out, format_compare(&traces))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_config(dir: &Path) -> ExperimentConfig {
        parse_config(&format!(
            r#"
out_dir = "{}"
seeds = [1, 2, 3]
eval_every = 5

[problem]
kind = "synthetic"
n = 30
train_size = 120
test_size = 60
density = 0.1
seed = 11

[[algorithm]]
kind = "sgd"
batch_size = 12
max_iters = 30
step = {{ kind = "diminishing", base = 5.0 }}

[[algorithm]]
kind = "sdlbfgs"
batch_size = 12
memory = 4
max_iters = 30
step = {{ kind = "diminishing", base = 5.0 }}
"#,
            dir.display()
        ))
        .unwrap()
    }

    #[test]
    fn generate_is_byte_deterministic_and_consistent() {
        let dir = tempfile::tempdir().unwrap();
        let config = demo_config(dir.path());
        let files = cmd_generate(&config).unwrap();
        let first = std::fs::read(&files.train).unwrap();
        let first_meta = std::fs::read(&files.metadata).unwrap();
        cmd_generate(&config).unwrap();
        assert_eq!(std::fs::read(&files.train).unwrap(), first);
        assert_eq!(std::fs::read(&files.metadata).unwrap(), first_meta);

        // Labels in the written file match the planted hyperplane.
        let train = load_sparse_dataset(&files.train).unwrap();
        let xbar = crate::problems::read_dense_vector(&files.xbar).unwrap();
        for s in train.samples() {
            let score = crate::numerics::sparse_dot(&s.features, &xbar).unwrap();
            assert_eq!(crate::problems::sign_plus(score), s.label);
        }

        // Density 0.1 of n=30 is 3 features per line.
        for s in train.samples() {
            assert_eq!(s.features.nnz(), 3);
        }
    }

    #[test]
    fn run_fans_out_and_wires_summary() {
        let dir = tempfile::tempdir().unwrap();
        let config = demo_config(dir.path());
        let outcome = cmd_run(&config).unwrap();
        // Two algorithms x three seeds.
        assert_eq!(outcome.summaries.len(), 6);
        assert!(!outcome.all_diverged);
        for spec in &config.algorithms {
            for &seed in &config.seeds {
                assert!(trace_path(&config.out_dir, &spec.label(), seed).exists());
            }
        }
        assert!(outcome.summary_path.exists());

        let compare = cmd_compare(&config).unwrap();
        let text = std::fs::read_to_string(&compare).unwrap();
        let rows = text.lines().count() - 1;
        let expected: usize = outcome.summaries.iter().map(|_| 30 / 5).sum();
        assert_eq!(rows, expected);
    }

    #[test]
    fn rerun_is_byte_identical_even_single_threaded() {
        let dir = tempfile::tempdir().unwrap();
        let config = demo_config(dir.path());
        cmd_run(&config).unwrap();
        let summary_a = std::fs::read(config.out_dir.join("summary.csv")).unwrap();
        let trace_a =
            std::fs::read(trace_path(&config.out_dir, "sdlbfgs", 2)).unwrap();

        std::env::set_var(THREADS_ENV, "1");
        cmd_run(&config).unwrap();
        std::env::remove_var(THREADS_ENV);
        assert_eq!(
            std::fs::read(config.out_dir.join("summary.csv")).unwrap(),
            summary_a
        );
        assert_eq!(
            std::fs::read(trace_path(&config.out_dir, "sdlbfgs", 2)).unwrap(),
            trace_a
        );
    }

    #[test]
    fn compare_without_traces_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let config = demo_config(dir.path());
        assert!(matches!(cmd_compare(&config), Err(Error::Data { .. })));
    }

    #[test]
    fn dataset_problem_round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let gen_config = demo_config(dir.path());
        let files = cmd_generate(&gen_config).unwrap();

        let config = parse_config(&format!(
            r#"
out_dir = "{}"
seeds = [5]

[problem]
kind = "dataset"
train = "{}"
test = "{}"

[[algorithm]]
kind = "sdlbfgs"
batch_size = 10
memory = 3
max_iters = 10
step = {{ kind = "diminishing", base = 2.0 }}
"#,
            dir.path().join("from-files").display(),
            files.train.display(),
            files.test.display(),
        ))
        .unwrap();
        let outcome = cmd_run(&config).unwrap();
        assert_eq!(outcome.summaries.len(), 1);
        assert!(outcome.summaries[0].final_sng.is_finite());
    }
}
