//! Exercises the C ABI the way a foreign binding would: through the
//! exported extern "C" functions only.

use std::ffi::{CStr, CString};
use std::ptr;

use sqnkit_ffi::*;

unsafe fn last_error() -> String {
    CStr::from_ptr(sqn_last_error_message())
        .to_string_lossy()
        .into_owned()
}

#[test]
fn abi_version_is_stable() {
    assert_eq!(sqn_abi_version(), 1);
}

#[test]
fn dataset_generate_save_load_round_trip() {
    unsafe {
        let mut generated: *mut SqnDataset = ptr::null_mut();
        let status = sqn_dataset_generate(7, 40, 25, 0.1, &mut generated);
        assert_eq!(status, SqnStatus::Ok);
        assert_eq!(sqn_dataset_len(generated), 25);
        assert_eq!(sqn_dataset_dim(generated), 40);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("data.txt").to_str().unwrap()).unwrap();
        assert_eq!(sqn_dataset_save(generated, path.as_ptr()), SqnStatus::Ok);

        let mut loaded: *mut SqnDataset = ptr::null_mut();
        assert_eq!(sqn_dataset_load(path.as_ptr(), &mut loaded), SqnStatus::Ok);
        assert_eq!(sqn_dataset_len(loaded), 25);
        assert_eq!(sqn_dataset_dim(loaded), 40);

        sqn_dataset_free(generated);
        sqn_dataset_free(loaded);
    }
}

#[test]
fn null_and_bad_arguments_produce_status_and_message() {
    unsafe {
        let mut out: *mut SqnDataset = ptr::null_mut();
        assert_eq!(
            sqn_dataset_load(ptr::null(), &mut out),
            SqnStatus::NullArgument
        );
        assert!(!last_error().is_empty());

        let missing = CString::new("/definitely/not/here.txt").unwrap();
        assert_eq!(
            sqn_dataset_load(missing.as_ptr(), &mut out),
            SqnStatus::IoError
        );

        // density outside (0, 1]
        assert_eq!(
            sqn_dataset_generate(1, 10, 10, 0.0, &mut out),
            SqnStatus::InvalidArgument
        );
        assert!(last_error().contains("density"));
    }
}

#[test]
fn run_sdlbfgs_and_walk_the_trace() {
    unsafe {
        let mut train: *mut SqnDataset = ptr::null_mut();
        let mut test: *mut SqnDataset = ptr::null_mut();
        assert_eq!(sqn_dataset_generate(3, 30, 120, 0.1, &mut train), SqnStatus::Ok);
        assert_eq!(sqn_dataset_generate(3, 30, 60, 0.1, &mut test), SqnStatus::Ok);

        let mut opts = std::mem::MaybeUninit::<SqnSolverOptions>::uninit();
        assert_eq!(sqn_solver_options_default(opts.as_mut_ptr()), SqnStatus::Ok);
        let mut opts = opts.assume_init();
        opts.seed = 5;
        opts.batch_size = 12;
        opts.memory = 4;
        opts.max_iters = 40;
        opts.eval_every = 10;

        let mut trace: *mut SqnTrace = ptr::null_mut();
        assert_eq!(sqn_run(train, test, &opts, &mut trace), SqnStatus::Ok);

        let len = sqn_trace_len(trace);
        assert_eq!(len, 4);
        let mut record = std::mem::MaybeUninit::<SqnTraceRecord>::uninit();
        assert_eq!(
            sqn_trace_record(trace, 0, record.as_mut_ptr()),
            SqnStatus::Ok
        );
        let record = record.assume_init();
        assert_eq!(record.iteration, 10);
        assert!(record.sng.is_finite());
        assert_eq!(
            sqn_trace_record(trace, len, ptr::null_mut()),
            SqnStatus::NullArgument
        );
        let mut sink = std::mem::MaybeUninit::<SqnTraceRecord>::uninit();
        assert_eq!(
            sqn_trace_record(trace, len, sink.as_mut_ptr()),
            SqnStatus::IndexError
        );

        // m + 2m * (K - 1) calls for damped L-BFGS.
        assert_eq!(sqn_trace_sfo_total(trace), 12 + 24 * 39);
        assert_eq!(sqn_trace_diverged(trace), 0);

        let dim = sqn_trace_solution_dim(trace);
        assert_eq!(dim, 30);
        let mut x = vec![0.0f64; dim];
        assert_eq!(sqn_trace_solution(trace, x.as_mut_ptr(), dim), SqnStatus::Ok);
        assert!(x.iter().all(|v| v.is_finite()));
        assert_eq!(
            sqn_trace_solution(trace, x.as_mut_ptr(), dim - 1),
            SqnStatus::InvalidArgument
        );

        sqn_trace_free(trace);
        sqn_dataset_free(train);
        sqn_dataset_free(test);
    }
}

#[test]
fn svrg_and_vr_share_the_variance_reduced_driver() {
    unsafe {
        let mut train: *mut SqnDataset = ptr::null_mut();
        let mut test: *mut SqnDataset = ptr::null_mut();
        assert_eq!(sqn_dataset_generate(9, 20, 60, 0.2, &mut train), SqnStatus::Ok);
        assert_eq!(sqn_dataset_generate(9, 20, 30, 0.2, &mut test), SqnStatus::Ok);

        let mut opts = std::mem::MaybeUninit::<SqnSolverOptions>::uninit();
        assert_eq!(sqn_solver_options_default(opts.as_mut_ptr()), SqnStatus::Ok);
        let mut opts = opts.assume_init();
        opts.algorithm = SqnAlgorithm::SdlbfgsVr;
        opts.seed = 2;
        opts.batch_size = 6;
        opts.memory = 3;
        opts.step_kind = SqnStepKind::Constant;
        opts.step_base = 0.05;
        opts.epochs = 2;
        opts.inner_iters = 5;
        opts.eval_every = 5;

        let mut trace: *mut SqnTrace = ptr::null_mut();
        assert_eq!(sqn_run(train, test, &opts, &mut trace), SqnStatus::Ok);
        // Each epoch costs T + 2qm = 60 + 2*5*6 = 120.
        assert_eq!(sqn_trace_sfo_total(trace), 240);
        sqn_trace_free(trace);

        opts.algorithm = SqnAlgorithm::Svrg;
        let mut svrg: *mut SqnTrace = ptr::null_mut();
        assert_eq!(sqn_run(train, test, &opts, &mut svrg), SqnStatus::Ok);
        assert_eq!(sqn_trace_sfo_total(svrg), 240);
        sqn_trace_free(svrg);

        sqn_dataset_free(train);
        sqn_dataset_free(test);
    }
}
