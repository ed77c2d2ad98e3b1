//! Phase-transition experiments: grids of `(n, r, k)` cells, per-trial
//! recovery, empirical sample complexity and CSV/SVG output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::ensembles::{
    sample_sparse_signal, AmplitudeModel, BoundedOrthogonal, EnsembleKind, EnsembleSpec, SparseSignalSpec,
};
use crate::error::{Error, Result};
use crate::geometry::sample_complexity_gaussian;
use crate::numerics::RngStream;
use crate::recovery::{basis_pursuit, l2_error, verify_recovery, RecoveryVerdict, DEFAULT_RECOVERY_TOL};

pub const CSV_HEADER: [&str; 11] = [
    "ensemble",
    "n",
    "r",
    "k",
    "trials",
    "successes",
    "failures",
    "solver_failures",
    "success_rate",
    "mean_l2_error",
    "seed",
];
pub const DEFAULT_THRESHOLD: f64 = 0.9;
pub const DEFAULT_TRIALS: usize = 50;
/// Largest tolerated fraction of solver failures in one cell.
pub const SOLVER_FAILURE_BUDGET: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub ensemble: EnsembleKind,
    /// Source matrix for the bounded-orthogonal ensemble.
    pub source: Option<BoundedOrthogonal>,
    pub amplitude: AmplitudeModel,
    pub n_values: Vec<usize>,
    pub r_values: Vec<usize>,
    pub k_min: usize,
    pub k_max: usize,
    pub k_step: usize,
    pub trials: usize,
    pub seed: u64,
}

impl PhaseGrid {
    pub fn new(ensemble: EnsembleKind, n: usize, r: usize, k_range: (usize, usize, usize), trials: usize, seed: u64) -> Self {
        PhaseGrid {
            ensemble,
            source: None,
            amplitude: AmplitudeModel::Rademacher,
            n_values: vec![n],
            r_values: vec![r],
            k_min: k_range.0,
            k_max: k_range.1,
            k_step: k_range.2,
            trials,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if self.k_step == 0 || self.k_min == 0 || self.k_min > self.k_max {
            return Err(Error::Parameter(format!(
                "k range needs 1 <= k_min <= k_max and step >= 1, got {}..={} step {}",
                self.k_min, self.k_max, self.k_step
            )));
        }
        if self.n_values.is_empty() || self.r_values.is_empty() {
            return Err(Error::Parameter("grid needs at least one n and one r".into()));
        }
        let n_max = self.n_values.iter().copied().max().unwrap_or(0);
        if self.k_max > n_max {
            return Err(Error::Parameter(format!("k_max = {} exceeds n = {n_max}", self.k_max)));
        }
        for &n in &self.n_values {
            for &r in &self.r_values {
                SparseSignalSpec { n, r, amplitude: self.amplitude, seed: self.seed }.validate()?;
            }
            let mut spec = EnsembleSpec::new(self.ensemble, n, self.k_min.min(n), self.seed);
            spec.source = self.source.clone();
            spec.validate()?;
        }
        if self.cells().is_empty() {
            return Err(Error::Parameter("grid has no cell with k <= n".into()));
        }
        Ok(())
    }

    /// Grid `k` values not exceeding `n`.
    pub fn k_values(&self, n: usize) -> Vec<usize> {
        (self.k_min..=self.k_max.min(n)).step_by(self.k_step.max(1)).collect()
    }

    /// All `(n, r, k)` cells in canonical order.
    pub fn cells(&self) -> Vec<(usize, usize, usize)> {
        let mut ns = self.n_values.clone();
        ns.sort_unstable();
        ns.dedup();
        let mut rs = self.r_values.clone();
        rs.sort_unstable();
        rs.dedup();
        let mut cells = Vec::new();
        for &n in &ns {
            for &r in &rs {
                cells.extend(self.k_values(n).into_iter().map(|k| (n, r, k)));
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrialOutcome {
    Success { l2_error: f64 },
    Failure { l2_error: f64 },
    SolverFailure,
}

/// One recovery trial of a cell, reproducible from `(seed, n, r, k, trial)`.
pub fn run_trial(grid: &PhaseGrid, n: usize, r: usize, k: usize, trial: usize) -> TrialOutcome {
    let tag = format!("phase/{}/{n}/{r}/{k}", grid.ensemble);
    let mut rng = RngStream::derive(grid.seed, trial as u64, &tag);
    let mut spec = EnsembleSpec::new(grid.ensemble, n, k, grid.seed);
    spec.source = grid.source.clone();
    let Ok(phi) = spec.sample(&mut rng) else {
        return TrialOutcome::SolverFailure;
    };
    let signal_spec = SparseSignalSpec { n, r, amplitude: grid.amplitude, seed: grid.seed };
    let Ok(f) = sample_sparse_signal(&signal_spec, &mut rng) else {
        return TrialOutcome::SolverFailure;
    };
    let a = phi.real_constraints();
    let y = a.matvec(f.values());
    match basis_pursuit(&a, &y) {
        Ok(bp) => {
            let err = l2_error(&f, &bp);
            match verify_recovery(&f, &bp, DEFAULT_RECOVERY_TOL) {
                RecoveryVerdict::Exact => TrialOutcome::Success { l2_error: err },
                RecoveryVerdict::Failed => TrialOutcome::Failure { l2_error: err },
            }
        }
        Err(_) => TrialOutcome::SolverFailure,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRow {
    pub ensemble: String,
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    pub failures: usize,
    pub solver_failures: usize,
    pub success_rate: f64,
    /// Mean over trials where the solver returned a signal; NaN if none did.
    pub mean_l2_error: f64,
    pub seed: u64,
}

impl PhaseRow {
    fn from_outcomes(ensemble: &str, (n, r, k): (usize, usize, usize), seed: u64, outcomes: &[TrialOutcome]) -> Self {
        let (mut successes, mut failures, mut solver_failures) = (0, 0, 0);
        let mut errors = Vec::new();
        for o in outcomes {
            match *o {
                TrialOutcome::Success { l2_error } => {
                    successes += 1;
                    errors.push(l2_error);
                }
                TrialOutcome::Failure { l2_error } => {
                    failures += 1;
                    errors.push(l2_error);
                }
                TrialOutcome::SolverFailure => solver_failures += 1,
            }
        }
        let trials = outcomes.len();
        PhaseRow {
            ensemble: ensemble.to_string(),
            n,
            r,
            k,
            trials,
            successes,
            failures,
            solver_failures,
            success_rate: successes as f64 / trials as f64,
            mean_l2_error: if errors.is_empty() {
                f64::NAN
            } else {
                errors.iter().sum::<f64>() / errors.len() as f64
            },
            seed,
        }
    }

    fn key(&self) -> (&str, usize, usize, usize) {
        (&self.ensemble, self.n, self.r, self.k)
    }

    pub fn exceeds_solver_failure_budget(&self) -> bool {
        self.solver_failures as f64 > SOLVER_FAILURE_BUDGET * self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseTable {
    pub rows: Vec<PhaseRow>,
}

impl PhaseTable {
    pub fn new(mut rows: Vec<PhaseRow>) -> Self {
        rows.sort_by(|a, b| a.key().cmp(&b.key()));
        PhaseTable { rows }
    }

    pub fn solver_failure_budget_exceeded(&self) -> bool {
        self.rows.iter().any(PhaseRow::exceeds_solver_failure_budget)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for row in &self.rows {
            w.write_record([
                row.ensemble.clone(),
                row.n.to_string(),
                row.r.to_string(),
                row.k.to_string(),
                row.trials.to_string(),
                row.successes.to_string(),
                row.failures.to_string(),
                row.solver_failures.to_string(),
                row.success_rate.to_string(),
                row.mean_l2_error.to_string(),
                row.seed.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
    }

    pub fn from_csv(text: &str) -> Result<PhaseTable> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `{}`", CSV_HEADER.join(",")),
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            if rec.len() != CSV_HEADER.len() {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {} fields, got {}", CSV_HEADER.len(), rec.len()),
                });
            }
            fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
                rec[i].parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad {} value `{}`", CSV_HEADER[i], &rec[i]),
                })
            }
            let row = PhaseRow {
                ensemble: rec[0].to_string(),
                n: field(&rec, 1, line)?,
                r: field(&rec, 2, line)?,
                k: field(&rec, 3, line)?,
                trials: field(&rec, 4, line)?,
                successes: field(&rec, 5, line)?,
                failures: field(&rec, 6, line)?,
                solver_failures: field(&rec, 7, line)?,
                success_rate: field(&rec, 8, line)?,
                mean_l2_error: field(&rec, 9, line)?,
                seed: field(&rec, 10, line)?,
            };
            if row.successes + row.failures + row.solver_failures != row.trials {
                return Err(Error::Parse {
                    line,
                    msg: "successes + failures + solver_failures must equal trials".into(),
                });
            }
            rows.push(row);
        }
        Ok(PhaseTable { rows })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<PhaseTable> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PhaseTable::from_csv(&text)
    }

    /// Rows grouped by `(ensemble, n, r)`, each group sorted by `k`.
    pub fn groups(&self) -> BTreeMap<(String, usize, usize), Vec<&PhaseRow>> {
        let mut groups: BTreeMap<_, Vec<&PhaseRow>> = BTreeMap::new();
        for row in &self.rows {
            groups.entry((row.ensemble.clone(), row.n, row.r)).or_default().push(row);
        }
        groups.values_mut().for_each(|g| g.sort_by_key(|row| row.k));
        groups
    }
}

/// Runs every cell of the grid; trials run in parallel on the current rayon
/// pool and the result does not depend on its size.
pub fn run_phase_transition(grid: &PhaseGrid) -> Result<PhaseTable> {
    grid.validate()?;
    let label = grid.ensemble.to_string();
    let rows = grid
        .cells()
        .into_iter()
        .map(|(n, r, k)| {
            if k < 2 * r {
                log::warn!("k = {k} is below 2r = {} measurements; recovery cannot be unique", 2 * r);
            }
            let outcomes: Vec<TrialOutcome> =
                (0..grid.trials).into_par_iter().map(|t| run_trial(grid, n, r, k, t)).collect();
            PhaseRow::from_outcomes(&label, (n, r, k), grid.seed, &outcomes)
        })
        .collect();
    Ok(PhaseTable::new(rows))
}

/// Reference measurement count for a group: the Gaussian sample complexity,
/// or the unit `r ln n` for row-subsampled ensembles.
pub fn bound_for(ensemble: &str, n: usize, r: usize) -> Result<f64> {
    match ensemble.parse::<EnsembleKind>()? {
        EnsembleKind::Gaussian => sample_complexity_gaussian(r, n),
        _ => Ok(r as f64 * (n as f64).ln()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KStarEntry {
    pub ensemble: String,
    pub n: usize,
    pub r: usize,
    /// Smallest grid `k` from which every larger grid `k` meets the threshold.
    pub k_star: Option<usize>,
    pub bound: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KStarReport {
    pub threshold: f64,
    pub entries: Vec<KStarEntry>,
}

impl KStarReport {
    pub fn get(&self, ensemble: &str, n: usize, r: usize) -> Option<&KStarEntry> {
        self.entries.iter().find(|e| e.ensemble == ensemble && e.n == n && e.r == r)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["ensemble", "n", "r", "k_star", "bound", "ratio", "threshold"])
            .expect("in-memory write");
        let opt = |v: Option<String>| v.unwrap_or_default();
        for e in &self.entries {
            w.write_record([
                e.ensemble.clone(),
                e.n.to_string(),
                e.r.to_string(),
                opt(e.k_star.map(|k| k.to_string())),
                e.bound.to_string(),
                opt(e.ratio.map(|r| r.to_string())),
                self.threshold.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
    }
}

/// Smallest `k` of a `k`-sorted rate sequence from which all rates are at
/// least `threshold`.
pub fn plateau_start(rates: &[(usize, f64)], threshold: f64) -> Option<usize> {
    let tail = rates.iter().rev().take_while(|(_, rate)| *rate >= threshold).count();
    (tail > 0).then(|| rates[rates.len() - tail].0)
}

pub fn empirical_k_star(table: &PhaseTable, threshold: f64) -> Result<KStarReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Parameter(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let mut entries = Vec::new();
    for ((ensemble, n, r), rows) in table.groups() {
        let rates: Vec<(usize, f64)> = rows.iter().map(|row| (row.k, row.success_rate)).collect();
        let k_star = plateau_start(&rates, threshold);
        let bound = bound_for(&ensemble, n, r)?;
        entries.push(KStarEntry {
            ratio: k_star.map(|k| k as f64 / bound),
            ensemble,
            n,
            r,
            k_star,
            bound,
        });
    }
    Ok(KStarReport { threshold, entries })
}

/// Least-squares non-decreasing fit (pool adjacent violators) with weights.
pub fn isotonic_fit(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (v2, w2, c2) = blocks.pop().expect("two blocks");
            let last = blocks.last_mut().expect("two blocks");
            let w = last.1 + w2;
            *last = ((last.0 * last.1 + v2 * w2) / w, w, last.2 + c2);
        }
    }
    blocks.into_iter().flat_map(|(v, _, c)| std::iter::repeat_n(v, c)).collect()
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 400.0;
const SVG_MARGIN: f64 = 48.0;
const SVG_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Success rate against `k`, one polyline per `(ensemble, n, r)` with a
/// dashed vertical marker at that group's reference bound.
pub fn render_svg(table: &PhaseTable) -> Result<String> {
    let groups = table.groups();
    let mut bounds = Vec::new();
    for (ensemble, n, r) in groups.keys() {
        bounds.push(bound_for(ensemble, *n, *r)?);
    }
    let k_hi = table
        .rows
        .iter()
        .map(|row| row.k as f64)
        .chain(bounds.iter().copied())
        .fold(1.0, f64::max);
    let plot_w = SVG_WIDTH - 2.0 * SVG_MARGIN;
    let plot_h = SVG_HEIGHT - 2.0 * SVG_MARGIN;
    let px = |k: f64| SVG_MARGIN + plot_w * k / k_hi;
    let py = |rate: f64| SVG_HEIGHT - SVG_MARGIN - plot_h * rate;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="{m}" y="{m}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#,
        m = SVG_MARGIN
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">k</text>"#, SVG_WIDTH / 2.0, SVG_HEIGHT - 12.0);
    let _ = writeln!(out, r#"<text x="12" y="{}" transform="rotate(-90 12 {0})">success rate</text>"#, SVG_HEIGHT / 2.0);
    for tick in [0.0, 0.5, 1.0] {
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{tick}</text>"#, SVG_MARGIN - 4.0, py(tick) + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{k_hi:.0}</text>"#, px(k_hi), SVG_HEIGHT - SVG_MARGIN + 14.0);
    for (idx, (((ensemble, n, r), rows), bound)) in groups.iter().zip(&bounds).enumerate() {
        let color = SVG_COLORS[idx % SVG_COLORS.len()];
        let points: Vec<String> = rows
            .iter()
            .map(|row| format!("{:.2},{:.2}", px(row.k as f64), py(row.success_rate)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="{color}" stroke-dasharray="4 3"/>"#,
            py(0.0),
            py(1.0),
            x = px(*bound)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{ensemble} n={n} r={r} (bound {bound:.1})</text>"#,
            SVG_MARGIN + 8.0,
            SVG_MARGIN + 14.0 * (idx + 1) as f64
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_svg(table: &PhaseTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_svg(table)?).map_err(|e| Error::io(path, e))
}
