use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use sparsebench::ensembles::{
    sample_sparse_signal, AmplitudeModel, BoundedOrthogonal, EnsembleKind, EnsembleSpec, SparseSignalSpec,
};
use sparsebench::geometry::{
    cone_kernel_intersect, gaussian_width_d_mc, gordon_escape_probability, maurey_approximate,
    recovery_probability_bound, sample_complexity_gaussian,
};
use sparsebench::harness::{run_phase_transition, write_svg, PhaseGrid, DEFAULT_TRIALS};
use sparsebench::numerics::{read_matrix_file, DenseMatrix, RngStream};
use sparsebench::recovery::{
    basis_pursuit, basis_pursuit_lp, l2_error, verify_recovery, RecoveryVerdict, DEFAULT_RECOVERY_TOL,
};
use sparsebench::ric::{ric_condition_holds, restricted_isometry_constant, scaled_dft_vectors, RicMode};
use sparsebench::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "sparsebench", version, about = "Sparse recovery experiments: basis pursuit, RIC and cone geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Success rate of basis pursuit over a grid of measurement counts.
    Phase(PhaseArgs),
    /// One basis-pursuit recovery of a random sparse signal.
    Recover(RecoverArgs),
    /// Restricted isometry constant of a matrix.
    Ric(RicArgs),
    /// Monte-Carlo Gaussian width of the D-norm ball against its bound.
    Width(WidthArgs),
    /// Escape-through-the-mesh or Gaussian recovery probability bound.
    Escape(EscapeArgs),
    /// Cone/kernel intersection against basis-pursuit recovery.
    ConeCheck(ConeCheckArgs),
    /// Maurey empirical approximation error of the uniform point of B1.
    Maurey(MaureyArgs),
}

#[derive(Args)]
struct EnsembleArgs {
    /// gaussian, fourier or ortho.
    #[arg(long, default_value = "gaussian")]
    ensemble: EnsembleKind,
    /// Square source matrix for the ortho ensemble.
    #[arg(long)]
    matrix_file: Option<PathBuf>,
    /// Nonzero amplitudes: rademacher or gaussian.
    #[arg(long, default_value = "rademacher")]
    amp: AmplitudeModel,
}

impl EnsembleArgs {
    fn source(&self) -> anyhow::Result<Option<BoundedOrthogonal>> {
        match (&self.ensemble, &self.matrix_file) {
            (EnsembleKind::BoundedOrthogonal, Some(path)) => Ok(Some(BoundedOrthogonal::new(read_matrix_file(path)?)?)),
            (EnsembleKind::BoundedOrthogonal, None) => bail!(usage("--ensemble ortho requires --matrix-file")),
            (_, Some(_)) => bail!(usage("--matrix-file is only used with --ensemble ortho")),
            (_, None) => Ok(None),
        }
    }
}

#[derive(Args)]
struct PhaseArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    k_min: usize,
    #[arg(long)]
    k_max: usize,
    #[arg(long, default_value_t = 1)]
    k_step: usize,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct RecoverArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the basis-pursuit LP in text form to this file.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

#[derive(Args)]
struct RicArgs {
    #[arg(long)]
    matrix_file: PathBuf,
    #[arg(long)]
    r: usize,
    /// Enumerate every subset (default).
    #[arg(long, conflicts_with = "sampled")]
    exact: bool,
    /// Sample this many random subsets instead; the result is a lower bound.
    #[arg(long, value_name = "N")]
    sampled: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct WidthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EscapeArgs {
    #[arg(long)]
    k: usize,
    /// Gaussian width of the set to escape.
    #[arg(long, conflicts_with_all = ["r", "n"], required_unless_present_all = ["r", "n"])]
    w: Option<f64>,
    #[arg(long, requires = "n")]
    r: Option<usize>,
    #[arg(long, requires = "r")]
    n: Option<usize>,
}

#[derive(Args)]
struct ConeCheckArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MaureyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A command-line misuse detected after parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: &str) -> Usage {
    Usage(msg.to_string())
}

/// Numerical trouble that should map to the numerical-failure exit code.
#[derive(Debug)]
struct NumericalBudget(String);

impl std::fmt::Display for NumericalBudget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalBudget {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<NumericalBudget>().is_some() {
        return EXIT_NUMERICAL;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Solver(_) | Error::Numerical(_) | Error::RankDeficient { .. } | Error::Sampling(_)) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn csv_line(fields: &[String]) -> String {
    fields.join(",")
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn phase(args: PhaseArgs) -> anyhow::Result<()> {
    let mut grid = PhaseGrid::new(
        args.ensemble.ensemble,
        args.n,
        args.r,
        (args.k_min, args.k_max, args.k_step),
        args.trials,
        args.seed,
    );
    grid.amplitude = args.ensemble.amp;
    grid.source = args.ensemble.source()?;
    let table = run_phase_transition(&grid)?;
    match &args.out {
        Some(path) => table.write_csv(path)?,
        None => print!("{}", table.to_csv()),
    }
    if let Some(path) = &args.svg {
        write_svg(&table, path)?;
    }
    if table.solver_failure_budget_exceeded() {
        return Err(NumericalBudget("more than 10% solver failures in at least one cell".into()).into());
    }
    Ok(())
}

fn recover(args: RecoverArgs) -> anyhow::Result<()> {
    let mut spec = EnsembleSpec::new(args.ensemble.ensemble, args.n, args.k, args.seed);
    spec.source = args.ensemble.source()?;
    let signal_spec = SparseSignalSpec { n: args.n, r: args.r, amplitude: args.ensemble.amp, seed: args.seed };
    signal_spec.validate()?;
    if args.k < 2 * args.r {
        log::warn!("k = {} is below 2r = {}; recovery cannot be unique", args.k, 2 * args.r);
    }
    let mut rng = RngStream::derive(args.seed, 0, "recover");
    let phi = spec.sample(&mut rng)?;
    let f = sample_sparse_signal(&signal_spec, &mut rng)?;
    let a = phi.real_constraints();
    let y = a.matvec(f.values());
    if let Some(path) = &args.dump_lp {
        let lp = basis_pursuit_lp(&a, &y)?;
        std::fs::write(path, lp.to_text()).with_context(|| format!("writing {}", path.display()))?;
    }
    let bp = basis_pursuit(&a, &y)?;
    let verdict = match verify_recovery(&f, &bp, DEFAULT_RECOVERY_TOL) {
        RecoveryVerdict::Exact => "exact",
        RecoveryVerdict::Failed => "failed",
    };
    let support: Vec<String> = bp.recovered.support().iter().map(usize::to_string).collect();
    println!("support,l2_error,l1_objective,verdict");
    println!(
        "{}",
        csv_line(&[support.join(" "), l2_error(&f, &bp).to_string(), bp.objective.to_string(), verdict.into()])
    );
    Ok(())
}

fn ric(args: RicArgs) -> anyhow::Result<()> {
    let phi: DenseMatrix = read_matrix_file(&args.matrix_file)?;
    let mode = match args.sampled {
        Some(trials) => RicMode::Sampled { trials, seed: args.seed },
        None => RicMode::Exact,
    };
    let report = restricted_isometry_constant(&phi, args.r, mode).map_err(|e| match e {
        Error::BudgetExceeded { subsets, .. } => {
            anyhow::Error::new(e).context(format!("{subsets} subsets; rerun with --sampled N for a lower bound"))
        }
        e => e.into(),
    })?;
    let verdict = match mode {
        RicMode::Exact if 4 * args.r <= phi.rows() => ric_condition_holds(&phi, args.r).ok(),
        _ => None,
    };
    let mode_label = match mode {
        RicMode::Exact => "exact".to_string(),
        RicMode::Sampled { trials, .. } => format!("sampled({trials})"),
    };
    println!("r,mode,lambda_min,lambda_max,c_opt,delta,delta_3r,delta_4r,verdict");
    println!(
        "{}",
        csv_line(&[
            report.r.to_string(),
            mode_label,
            report.lambda_min.to_string(),
            report.lambda_max.to_string(),
            report.c_opt.to_string(),
            report.delta.to_string(),
            fmt_opt(verdict.map(|v| v.delta_3r)),
            fmt_opt(verdict.map(|v| v.delta_4r)),
            fmt_opt(verdict.map(|v| v.holds)),
        ])
    );
    Ok(())
}

fn width(args: WidthArgs) -> anyhow::Result<()> {
    let est = gaussian_width_d_mc(args.n, args.r, args.samples, &RngStream::new(args.seed, 0))?;
    println!("n,r,samples,mean,stderr,bound");
    println!(
        "{}",
        csv_line(&[
            args.n.to_string(),
            args.r.to_string(),
            est.samples.to_string(),
            est.mean.to_string(),
            est.stderr.to_string(),
            est.bound.to_string(),
        ])
    );
    Ok(())
}

fn escape(args: EscapeArgs) -> anyhow::Result<()> {
    println!("formula,k,w,r,n,k_rn,probability,vacuous");
    let line = match (args.w, args.r, args.n) {
        (Some(w), _, _) => {
            let p = gordon_escape_probability(args.k, w)?;
            ["escape".into(), args.k.to_string(), w.to_string(), String::new(), String::new(), String::new(), p.value.to_string(), p.vacuous.to_string()]
        }
        (None, Some(r), Some(n)) => {
            let p = recovery_probability_bound(args.k, r, n)?;
            let k_rn = sample_complexity_gaussian(r, n)?;
            ["recovery".into(), args.k.to_string(), String::new(), r.to_string(), n.to_string(), k_rn.to_string(), p.value.to_string(), p.vacuous.to_string()]
        }
        _ => bail!(usage("escape needs --w or both --r and --n")),
    };
    println!("{}", csv_line(&line));
    Ok(())
}

fn cone_check(args: ConeCheckArgs) -> anyhow::Result<()> {
    let signal_spec = SparseSignalSpec { n: args.n, r: args.r, amplitude: AmplitudeModel::Rademacher, seed: args.seed };
    signal_spec.validate()?;
    let spec = EnsembleSpec::new(EnsembleKind::Gaussian, args.n, args.k, args.seed);
    spec.validate()?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "trial,intersects,objective,degenerate,bp_exact,agree")?;
    let mut disagreements = 0;
    for t in 0..args.trials {
        let mut rng = RngStream::derive(args.seed, t as u64, "cone-check");
        let phi = spec.sample(&mut rng)?.real_constraints();
        let f = sample_sparse_signal(&signal_spec, &mut rng)?;
        let report = cone_kernel_intersect(&phi, &f)?;
        let y = phi.matvec(f.values());
        let exact = basis_pursuit(&phi, &y).is_ok_and(|bp| verify_recovery(&f, &bp, DEFAULT_RECOVERY_TOL) == RecoveryVerdict::Exact);
        let agree = report.intersects != exact;
        disagreements += usize::from(!agree);
        writeln!(
            out,
            "{}",
            csv_line(&[
                t.to_string(),
                report.intersects.to_string(),
                fmt_opt(report.objective),
                report.degenerate.to_string(),
                exact.to_string(),
                agree.to_string(),
            ])
        )?;
    }
    eprintln!("{disagreements} of {} trials disagree", args.trials);
    Ok(())
}

fn maurey(args: MaureyArgs) -> anyhow::Result<()> {
    if args.n == 0 || args.trials == 0 {
        bail!(usage("--n and --trials must be positive"));
    }
    let x = scaled_dft_vectors(args.n);
    let y = vec![1.0 / args.n as f64; args.n];
    let mut rng = RngStream::derive(args.seed, args.m as u64, "maurey");
    let errors = (0..args.trials)
        .map(|_| maurey_approximate(&y, args.m, &x, &mut rng).map(|a| a.error))
        .collect::<Result<Vec<f64>, _>>()?;
    let count = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / count;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
    println!("n,m,trials,mean_error,stderr");
    println!(
        "{}",
        csv_line(&[
            args.n.to_string(),
            args.m.to_string(),
            args.trials.to_string(),
            mean.to_string(),
            (var / count).sqrt().to_string(),
        ])
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Phase(a) => phase(a),
        Command::Recover(a) => recover(a),
        Command::Ric(a) => ric(a),
        Command::Width(a) => width(a),
        Command::Escape(a) => escape(a),
        Command::ConeCheck(a) => cone_check(a),
        Command::Maurey(a) => maurey(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
