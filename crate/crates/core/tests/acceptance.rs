use std::process::ExitCode;
use std::time::Instant;

use sparsebench::ensembles::{sample_gaussian, sample_sparse_signal, AmplitudeModel, EnsembleKind, Signal, SparseSignalSpec};
use sparsebench::geometry::{
    cone_kernel_intersect, d_norm, gaussian_width_d_bound, gaussian_width_d_mc, gordon_escape_probability,
    maurey_approximate, recovery_probability_bound, sample_complexity_gaussian, sample_cone_sphere,
};
use sparsebench::harness::{empirical_k_star, run_phase_transition, PhaseGrid};
use sparsebench::numerics::{axpy, dot, norm2, RealMatrix, RngStream};
use sparsebench::recovery::{basis_pursuit, l0_oracle, verify_recovery, RecoveryVerdict};
use sparsebench::ric::{operator_lln_deviation, ric_condition_holds, scaled_dft_vectors};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn exact(phi: &RealMatrix, f: &Signal) -> bool {
    let y = phi.matvec(f.values());
    basis_pursuit(phi, &y).is_ok_and(|bp| verify_recovery(f, &bp, 1e-6) == RecoveryVerdict::Exact)
}

fn signal(n: usize, r: usize, amplitude: AmplitudeModel, rng: &mut RngStream) -> Signal {
    sample_sparse_signal(&SparseSignalSpec { n, r, amplitude, seed: rng.seed() }, rng).unwrap()
}

fn gaussian_bound_reproduction() -> Outcome {
    let grid = PhaseGrid::new(EnsembleKind::Gaussian, 1024, 2, (181, 181, 1), 50, 2024);
    let table = run_phase_transition(&grid).unwrap();
    let rate = table.rows[0].success_rate;
    outcome(rate >= 0.9, format!("n=1024 r=2 k=181: success rate {rate:.2} (need >= 0.90)"))
}

fn k_star_under_bound() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [1, 2, 4] {
        let bound = sample_complexity_gaussian(r, 512).unwrap();
        let k_max = (bound / 8.0).ceil() as usize * 8;
        let grid = PhaseGrid::new(EnsembleKind::Gaussian, 512, r, (8, k_max, 8), 50, 7);
        let report = empirical_k_star(&run_phase_transition(&grid).unwrap(), 0.9).unwrap();
        let k_star = report.entries[0].k_star;
        pass &= k_star.is_some_and(|k| k as f64 <= bound);
        parts.push(format!("r={r}: k*={} bound={bound:.1}", k_star.map_or("none".into(), |k| k.to_string())));
    }
    outcome(pass, parts.join("; "))
}

fn fourier_shape() -> Outcome {
    let mut ratios = Vec::new();
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [128, 256, 512] {
        let grid = PhaseGrid::new(EnsembleKind::PartialFourier, n, 4, (8, n / 2, 8), 50, 11);
        let report = empirical_k_star(&run_phase_transition(&grid).unwrap(), 0.9).unwrap();
        let entry = &report.entries[0];
        match (entry.k_star, entry.ratio) {
            (Some(k), Some(ratio)) => {
                ratios.push(ratio);
                parts.push(format!("n={n}: k*={k} k*/(4 ln n)={ratio:.2}"));
            }
            _ => {
                pass = false;
                parts.push(format!("n={n}: no plateau up to k=n/2"));
            }
        }
    }
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    pass &= ratios.len() == 3 && spread <= 2.0;
    parts.push(format!("spread {spread:.2} (need <= 2)"));
    outcome(pass, parts.join("; "))
}

fn width_bound() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (n, r)) in [(64, 2), (256, 4), (1024, 8)].into_iter().enumerate() {
        let est = gaussian_width_d_mc(n, r, 100_000, &RngStream::new(4, i as u64)).unwrap();
        pass &= est.mean <= est.bound + 3.0 * est.stderr && est.mean >= 0.5 * est.bound;
        parts.push(format!("({n},{r}): mean {:.4} ± {:.4}, bound {:.4}", est.mean, est.stderr, est.bound));
    }
    let spot = gaussian_width_d_bound(256, 4).unwrap();
    pass &= (spot - 6.7284).abs() < 1e-4;
    outcome(pass, parts.join("; "))
}

fn cone_inclusion() -> Outcome {
    let mut rng = RngStream::new(5, 0);
    let limit = std::f64::consts::SQRT_2 + 1.0 + 1e-9;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let f = signal(32, 3, AmplitudeModel::Gaussian, &mut rng);
        let t = sample_cone_sphere(&f, &mut rng).unwrap();
        worst = worst.max(d_norm(&t, 3).unwrap());
    }
    outcome(worst <= limit, format!("max D-norm over 10^4 cone points {worst:.6} (limit {limit:.6})"))
}

/// Random `k x n` matrix with orthonormal rows.
fn tight_frame(k: usize, n: usize, rng: &mut RngStream) -> RealMatrix {
    let g = sample_gaussian(k, n, rng).unwrap();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..k {
        let mut v = g.row(i).to_vec();
        for _ in 0..2 {
            for q in &rows {
                axpy(-dot(q, &v), q, &mut v);
            }
        }
        let norm = norm2(&v);
        v.iter_mut().for_each(|x| *x /= norm);
        rows.push(v);
    }
    RealMatrix::from_rows(&rows).unwrap()
}

/// Matrices passing the condition and signed 1-sparse signals not recovered.
fn condition_implies_recovery(matrices: impl Iterator<Item = RealMatrix>) -> (usize, usize) {
    let (mut certified, mut counterexamples) = (0, 0);
    for phi in matrices {
        if !ric_condition_holds(&phi, 1).unwrap().holds {
            continue;
        }
        certified += 1;
        let n = phi.cols();
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut f = vec![0.0; n];
                f[i] = sign;
                if !exact(&phi, &Signal::new(f)) {
                    counterexamples += 1;
                }
            }
        }
    }
    (certified, counterexamples)
}

fn ric_end_to_end() -> Outcome {
    let gaussian = (0..20).map(|s| sample_gaussian(12, 16, &mut RngStream::derive(6, s, "ct")).unwrap());
    let (certified, bad) = condition_implies_recovery(gaussian);
    let frames = (0..100).map(|s| tight_frame(12, 13, &mut RngStream::derive(6, s, "ct-frame")));
    let (frame_certified, frame_bad) = condition_implies_recovery(frames);
    outcome(
        bad == 0 && frame_bad == 0,
        format!(
            "Gaussian 12x16: condition held on {certified}/20, {bad} counterexamples; \
             tight frames 12x13: held on {frame_certified}/100, {frame_bad} counterexamples"
        ),
    )
}

fn l0_l1_equivalence() -> Outcome {
    let (mut exact_count, mut mismatches) = (0, 0);
    for s in 0..100 {
        let mut rng = RngStream::derive(7, s, "l0");
        let phi = sample_gaussian(6, 10, &mut rng).unwrap();
        let f = signal(10, 2, AmplitudeModel::Gaussian, &mut rng);
        if !exact(&phi, &f) {
            continue;
        }
        exact_count += 1;
        let y = phi.matvec(f.values());
        match l0_oracle(&phi, &y, 2) {
            Ok(sol) if sol.support == f.support() => {}
            _ => mismatches += 1,
        }
    }
    outcome(mismatches == 0, format!("{exact_count}/100 exact recoveries, {mismatches} support mismatches"))
}

fn cone_kernel_equivalence() -> Outcome {
    let mut disagreements = Vec::new();
    let mut all_degenerate = true;
    for s in 0..200 {
        let mut rng = RngStream::derive(8, s, "cone");
        let phi = sample_gaussian(6, 12, &mut rng).unwrap();
        let f = signal(12, 1, AmplitudeModel::Rademacher, &mut rng);
        let report = cone_kernel_intersect(&phi, &f).unwrap();
        if report.intersects == exact(&phi, &f) {
            let objective = report.objective.unwrap_or(0.0);
            all_degenerate &= objective.abs() <= 1e-8;
            disagreements.push(format!("instance {s}: objective {objective:.3e}"));
        }
    }
    let detail = if disagreements.is_empty() {
        "0 disagreements in 200 instances".to_string()
    } else {
        format!("{} disagreements: {}", disagreements.len(), disagreements.join(", "))
    };
    outcome(disagreements.len() <= 2 && all_degenerate, detail)
}

fn maurey_rate() -> Outcome {
    let x = scaled_dft_vectors(64);
    let y = vec![1.0 / 64.0; 64];
    let mean_error = |m: usize| {
        let mut rng = RngStream::derive(9, m as u64, "maurey");
        (0..500).map(|_| maurey_approximate(&y, m, &x, &mut rng).unwrap().error).sum::<f64>() / 500.0
    };
    let (m, e1, e4) = (16, mean_error(16), mean_error(64));
    let ratio = e1 / e4;
    outcome(
        (1.7..=2.3).contains(&ratio),
        format!("m={m}: {e1:.4}, m={}: {e4:.4}, ratio {ratio:.3} (need [1.7, 2.3])", 4 * m),
    )
}

fn operator_lln() -> Outcome {
    let x = scaled_dft_vectors(16);
    let full: Vec<usize> = (0..16).collect();
    let at_n = operator_lln_deviation(&x, &full, 2).unwrap();
    let means: Vec<f64> = [4, 8, 12]
        .iter()
        .map(|&k| {
            (0..50)
                .map(|t| {
                    let omega = RngStream::derive(10, t, &format!("lln/{k}")).subset(16, k);
                    operator_lln_deviation(&x, &omega, 2).unwrap()
                })
                .sum::<f64>()
                / 50.0
        })
        .collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    outcome(
        at_n <= 1e-10 && decreasing,
        format!("k=n: {at_n:.2e}; means k=4,8,12: {:.4}, {:.4}, {:.4}", means[0], means[1], means[2]),
    )
}

fn probability_formulas() -> Outcome {
    let rec = recovery_probability_bound(800, 2, 1024).unwrap().value;
    let esc = gordon_escape_probability(100, 5.0).unwrap().value;
    outcome(
        (rec - 0.999983).abs() <= 1e-5 && (esc - 0.103).abs() <= 1e-3,
        format!("recovery bound {rec:.6}, escape probability {esc:.4}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("Gaussian bound reproduction", gaussian_bound_reproduction),
        ("empirical k* under the Gaussian bound", k_star_under_bound),
        ("Fourier recovery shape", fourier_shape),
        ("Gaussian width bound", width_bound),
        ("cone inclusion in scaled D", cone_inclusion),
        ("RIC condition implies recovery", ric_end_to_end),
        ("l0/l1 equivalence", l0_l1_equivalence),
        ("cone/kernel equivalence", cone_kernel_equivalence),
        ("Maurey rate", maurey_rate),
        ("operator LLN", operator_lln),
        ("probability formulas", probability_formulas),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!result.pass);
        println!(
            "[{verdict}] criterion {:>2}: {name}: {} ({:.1}s)",
            i + 1,
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
