use sparsebench::ensembles::{sample_gaussian, sample_sparse_signal, AmplitudeModel, EnsembleKind, SparseSignalSpec};
use sparsebench::geometry::{cone_kernel_intersect, gaussian_width_d_mc, gordon_escape_probability};
use sparsebench::harness::{run_phase_transition, PhaseGrid};
use sparsebench::numerics::RngStream;

#[test]
fn escape_frequency_respects_gordon_bound() {
    let (n, r, kernels) = (20, 2, 500);
    let f = sample_sparse_signal(
        &SparseSignalSpec { n, r, amplitude: AmplitudeModel::Gaussian, seed: 5 },
        &mut RngStream::new(5, 0),
    )
    .unwrap();
    let w_d = gaussian_width_d_mc(n, r, 20_000, &RngStream::new(5, 1)).unwrap();
    let w = (1.0 + std::f64::consts::SQRT_2) * w_d.mean;
    for k in [10, 14, 18] {
        let mut escapes = 0usize;
        for trial in 0..kernels {
            let mut rng = RngStream::derive(5, trial as u64, &format!("escape/{k}"));
            let phi = sample_gaussian(k, n, &mut rng).unwrap();
            if !cone_kernel_intersect(&phi, &f).unwrap().intersects {
                escapes += 1;
            }
        }
        let bound = gordon_escape_probability(k, w).unwrap();
        if !bound.vacuous {
            let freq = escapes as f64 / kernels as f64;
            let stderr = (bound.value * (1.0 - bound.value) / kernels as f64).sqrt();
            assert!(freq >= bound.value - 3.0 * stderr, "k={k}: {freq} vs {}", bound.value);
        }
    }
}

#[test]
fn phase_table_independent_of_thread_count() {
    let grid = PhaseGrid::new(EnsembleKind::Gaussian, 40, 2, (6, 18, 6), 12, 99);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_phase_transition(&grid).unwrap())
    };
    let single = run(1);
    assert_eq!(single, run(4));
    assert_eq!(single.to_csv(), run(3).to_csv());
}
