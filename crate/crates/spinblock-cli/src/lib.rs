//! Job plumbing behind the `spinblock` binary: spectra, sweeps, schedules and
//! analytic-versus-numeric comparison reports written as CSV.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use spinblock::analytic::{blockade_shift_harmonic, effective_params, resonant_period, side_dips};
use spinblock::engine::{
    run_schedule, sweep_trace, ElectronState, PolarisationTrace, RunParams, ScheduleStage, ScheduleTrace, SequenceSpec,
    DEFAULT_WAIT_US,
};
use spinblock::floquet::{compute_spectrum, find_crossings, merge_crossings, AvoidedCrossing};
use spinblock::peaks::{dips_below, global_peak, linspace};
use spinblock::pulses::{Protocol, PulseMode};
use spinblock::spin::{load_register, precession_frequency, SpinRegister};

/// Trace floor below which a sample counts as part of a dip.
pub const DIP_FLOOR: f64 = 0.01;
/// Default phase-gap ceiling (rad) for reported crossings.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1.5;
/// Side-dip orders reported by `compare`.
pub const DIP_ORDERS: u32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid job: {0}")]
    Validation(String),
    #[error("cannot read register config {path}: {source}")]
    Config { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Model(#[from] spinblock::Error),
}

impl CliError {
    /// 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

impl From<spinblock::spin::SpinError> for CliError {
    fn from(e: spinblock::spin::SpinError) -> Self {
        CliError::Model(e.into())
    }
}

impl From<spinblock::engine::EngineError> for CliError {
    fn from(e: spinblock::engine::EngineError) -> Self {
        CliError::Model(e.into())
    }
}

impl From<spinblock::floquet::FloquetError> for CliError {
    fn from(e: spinblock::floquet::FloquetError) -> Self {
        CliError::Model(e.into())
    }
}

impl From<spinblock::pulses::PulseError> for CliError {
    fn from(e: spinblock::pulses::PulseError) -> Self {
        CliError::Model(e.into())
    }
}

/// Period grid, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.steps < 2 {
            return Err(CliError::Validation(format!("--steps must be at least 2, got {}", self.steps)));
        }
        if !(self.start > 0.0 && self.start < self.stop && self.stop.is_finite()) {
            return Err(CliError::Validation(format!(
                "need 0 < --t-start < --t-stop, got {} and {}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.steps)
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.steps - 1) as f64
    }
}

/// How polarisations are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutputConvention {
    /// Multiply by -1.
    pub flip_sign: bool,
    /// Report `2 <I_z>` in [-1, 1] instead of `<I_z>` in [-1/2, 1/2].
    pub full_scale: bool,
}

impl OutputConvention {
    pub fn apply(&self, p: f64) -> f64 {
        let s = if self.flip_sign { -1.0 } else { 1.0 };
        let k = if self.full_scale { 2.0 } else { 1.0 };
        s * k * p
    }
}

/// Everything a verb needs.
#[derive(Debug, Clone)]
pub struct SweepJob {
    pub register_path: Option<PathBuf>,
    pub register: SpinRegister,
    pub protocol: Protocol,
    pub harmonic: u32,
    pub grid: GridSpec,
    pub n_p: u32,
    pub repetitions: usize,
    pub wait_time: f64,
    pub pulse_mode: PulseMode,
    pub output: PathBuf,
    pub workers: usize,
    pub convention: OutputConvention,
    pub reinit_state: ElectronState,
}

impl SweepJob {
    /// Job with defaults around a given register.
    pub fn new(register: SpinRegister, grid: GridSpec, output: impl Into<PathBuf>) -> Self {
        Self {
            register_path: None,
            register,
            protocol: Protocol::PulsePol,
            harmonic: 3,
            grid,
            n_p: 4,
            repetitions: 1,
            wait_time: DEFAULT_WAIT_US,
            pulse_mode: PulseMode::Ideal,
            output: output.into(),
            workers: 1,
            convention: OutputConvention::default(),
            reinit_state: ElectronState::Zero,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grid.validate()?;
        if self.workers == 0 {
            return Err(CliError::Validation("--workers must be at least 1".into()));
        }
        if self.harmonic == 0 {
            return Err(CliError::Validation("--harmonic must be at least 1".into()));
        }
        if self.n_p == 0 || self.repetitions == 0 {
            return Err(CliError::Validation("--np and --reps must be at least 1".into()));
        }
        if !(self.wait_time >= 0.0 && self.wait_time.is_finite()) {
            return Err(CliError::Validation(format!("--wait-us must be >= 0, got {}", self.wait_time)));
        }
        if let PulseMode::Finite { rabi } = self.pulse_mode {
            if !(rabi > 0.0 && rabi.is_finite()) {
                return Err(CliError::Validation(format!("--rabi must be positive, got {rabi}")));
            }
        }
        Ok(())
    }

    pub fn sequence_spec(&self) -> SequenceSpec {
        SequenceSpec { protocol: self.protocol, harmonic: self.harmonic, mode: self.pulse_mode }
    }

    pub fn run_params(&self) -> RunParams {
        RunParams { n_p: self.n_p, repetitions: self.repetitions, wait_time: self.wait_time, reinit_state: self.reinit_state }
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CliError::Validation(format!("cannot start {} workers: {e}", self.workers)))
    }
}

/// Read and validate a TOML register description.
pub fn read_register(path: &Path) -> Result<SpinRegister, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Config { path: path.to_path_buf(), source })?;
    load_register(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output { path: path.to_path_buf(), source })?;
    }
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output { path: path.to_path_buf(), source }
}

/// `foo.csv` -> `foo_<suffix>.csv`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}{ext}"))
}

/// Spectrum CSV plus a crossing summary next to it. Returns merged crossings.
pub fn cmd_spectrum(job: &SweepJob) -> Result<Vec<AvoidedCrossing>, CliError> {
    job.validate()?;
    let spec = job.sequence_spec();
    let grid = job.grid.points();
    let spectrum = job.pool()?.install(|| compute_spectrum(&job.register, &spec, &grid))?;
    if spectrum.unresolved_intervals > 0 {
        log::warn!("{} grid intervals kept overlap below threshold after refinement", spectrum.unresolved_intervals);
    }
    let mut w = create(&job.output)?;
    spectrum.write_csv(&mut w, job.protocol.period_over_tau()).map_err(io_err(&job.output))?;
    w.flush().map_err(io_err(&job.output))?;

    let crossings = merge_crossings(&find_crossings(&spectrum, DEFAULT_GAP_THRESHOLD), 2.0 * job.grid.step());
    let path = sibling_path(&job.output, "crossings");
    let mut w = create(&path)?;
    write_crossings(&mut w, &crossings, job.protocol.period_over_tau()).map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))?;
    Ok(crossings)
}

pub fn write_crossings<W: Write>(w: &mut W, crossings: &[AvoidedCrossing], period_over_tau: f64) -> std::io::Result<()> {
    writeln!(w, "t_center_us,tau_center_us,gap_rad,branch_a,branch_b,participating_spins")?;
    for c in crossings {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            c.t_center,
            c.t_center / period_over_tau,
            c.gap,
            c.branch_pair.0,
            c.branch_pair.1,
            c.participating_spins.join(";")
        )?;
    }
    Ok(())
}

/// Polarisation trace CSV.
pub fn cmd_sweep(job: &SweepJob) -> Result<PolarisationTrace, CliError> {
    job.validate()?;
    let grid = job.grid.points();
    let trace = job.pool()?.install(|| sweep_trace(&job.register, &job.sequence_spec(), &job.run_params(), &grid))?;
    let mut w = create(&job.output)?;
    write_trace(&mut w, &trace, job.convention).map_err(io_err(&job.output))?;
    w.flush().map_err(io_err(&job.output))?;
    Ok(trace)
}

pub fn write_trace<W: Write>(w: &mut W, trace: &PolarisationTrace, conv: OutputConvention) -> std::io::Result<()> {
    writeln!(w, "T_us,tau_us,spin_label,polarisation,n_p,repetitions")?;
    for ((t, tau), row) in trace.t_grid.iter().zip(&trace.tau_grid).zip(&trace.values) {
        for (label, p) in trace.labels.iter().zip(row) {
            writeln!(w, "{t},{tau},{label},{},{},{}", conv.apply(*p), trace.n_p, trace.repetitions)?;
        }
    }
    Ok(())
}

/// One stage as given on the command line: period and repetitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageArg {
    pub period: f64,
    pub repetitions: usize,
}

impl std::str::FromStr for StageArg {
    type Err = String;

    /// `T:reps`, e.g. `7.41:200`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (t, r) = s.split_once(':').ok_or_else(|| format!("stage `{s}` is not of the form T_us:reps"))?;
        let period: f64 = t.trim().parse().map_err(|_| format!("bad stage period `{t}`"))?;
        let repetitions: usize = r.trim().parse().map_err(|_| format!("bad stage repetition count `{r}`"))?;
        if !(period > 0.0 && period.is_finite()) {
            return Err(format!("stage period must be positive, got {period}"));
        }
        if repetitions == 0 {
            return Err("stage repetition count must be at least 1".into());
        }
        Ok(Self { period, repetitions })
    }
}

/// Multi-stage schedule CSV. Grid flags are ignored; `--np` and `--wait-us` apply to all stages.
pub fn cmd_schedule(job: &SweepJob, stages: &[StageArg]) -> Result<ScheduleTrace, CliError> {
    if stages.is_empty() {
        return Err(CliError::Validation("schedule needs at least one --stage T_us:reps".into()));
    }
    if job.workers == 0 {
        return Err(CliError::Validation("--workers must be at least 1".into()));
    }
    let stages: Vec<ScheduleStage> = stages
        .iter()
        .map(|s| ScheduleStage { period: s.period, params: RunParams { repetitions: s.repetitions, ..job.run_params() } })
        .collect();
    let trace = run_schedule(&job.register, &job.sequence_spec(), &stages)?;
    let mut w = create(&job.output)?;
    write_schedule(&mut w, &trace, job.convention).map_err(io_err(&job.output))?;
    w.flush().map_err(io_err(&job.output))?;
    Ok(trace)
}

pub fn write_schedule<W: Write>(w: &mut W, trace: &ScheduleTrace, conv: OutputConvention) -> std::io::Result<()> {
    writeln!(w, "stage_index,T_us,tau_us,repetition,cumulative_time_us,spin_label,polarisation,n_p")?;
    for row in &trace.rows {
        for (label, p) in trace.labels.iter().zip(&row.polarisation) {
            writeln!(
                w,
                "{},{},{},{},{},{label},{},{}",
                row.stage_index,
                row.period,
                row.tau,
                row.repetition,
                row.cumulative_time_us,
                conv.apply(*p),
                row.n_p
            )?;
        }
    }
    Ok(())
}

/// Analytic versus numeric summary for one nucleus.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub is_blockade: bool,
    /// Bare resonance period.
    pub t_r: f64,
    /// First-order displaced resonance; absent for the blockade spin.
    pub t_r_shifted: Option<f64>,
    /// Numeric peak: from the blockade-plus-this-spin run for weak spins, from a
    /// single-repetition single-spin run for the blockade spin.
    pub numeric_peak: Option<f64>,
    pub peak_polarisation: Option<f64>,
    /// Side dips inside the grid.
    pub dips_analytic: Vec<f64>,
    /// Sub-floor minima of the single-spin trace.
    pub dips_numeric: Vec<f64>,
}

impl ComparisonRow {
    pub fn predicted_shift(&self) -> Option<f64> {
        self.t_r_shifted.map(|t| t / self.t_r - 1.0)
    }

    pub fn numeric_shift(&self) -> Option<f64> {
        self.numeric_peak.map(|t| t / self.t_r - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub blockade: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn row(&self, label: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "spin_label,is_blockade,t_r_us,t_r_shifted_us,predicted_shift,numeric_peak_us,numeric_shift,peak_polarisation,dips_analytic_us,dips_numeric_us"
        )?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.label,
                r.is_blockade,
                r.t_r,
                opt(r.t_r_shifted),
                opt(r.predicted_shift()),
                opt(r.numeric_peak),
                opt(r.numeric_shift()),
                opt(r.peak_polarisation),
                list(&r.dips_analytic),
                list(&r.dips_numeric)
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "blockade spin: {}", self.blockade)?;
        writeln!(f, "{:<8} {:>10} {:>10} {:>9} {:>10} {:>9} {:>8}", "spin", "T_r", "T_r'", "pred", "peak", "numeric", "P_max")?;
        let opt = |v: Option<f64>, p: usize| v.map_or_else(|| "-".to_string(), |x| format!("{x:.p$}"));
        for r in &self.rows {
            writeln!(
                f,
                "{:<8} {:>10.4} {:>10} {:>9} {:>10} {:>9} {:>8}",
                r.label,
                r.t_r,
                opt(r.t_r_shifted, 4),
                opt(r.predicted_shift(), 4),
                opt(r.numeric_peak, 4),
                opt(r.numeric_shift(), 4),
                opt(r.peak_polarisation, 3)
            )?;
        }
        for r in &self.rows {
            let fmt_list = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
            writeln!(f, "{} dips analytic: [{}]", r.label, fmt_list(&r.dips_analytic))?;
            writeln!(f, "{} dips numeric:  [{}]", r.label, fmt_list(&r.dips_numeric))?;
        }
        Ok(())
    }
}

/// Default blockade spin: largest perpendicular coupling, first on ties.
pub fn default_blockade(register: &SpinRegister) -> Option<String> {
    register
        .nuclei
        .iter()
        .fold(None::<&spinblock::spin::NuclearSpin>, |best, n| match best {
            Some(b) if b.a_perp >= n.a_perp => Some(b),
            _ => Some(n),
        })
        .map(|n| n.label.clone())
}

/// Resonances, blockade shifts and dips per nucleus, analytic against numeric.
pub fn cmd_compare(job: &SweepJob, blockade: Option<&str>) -> Result<ComparisonReport, CliError> {
    job.validate()?;
    let reg = &job.register;
    let blockade = match blockade {
        Some(l) => {
            reg.index_of(l).ok_or_else(|| CliError::Validation(format!("blockade spin `{l}` is not in the register")))?;
            l.to_string()
        }
        None => default_blockade(reg).ok_or_else(|| CliError::Validation("compare needs at least one nucleus".into()))?,
    };
    let strong = reg.nuclei[reg.index_of(&blockade).expect("checked")].clone();
    let grid = job.grid.points();
    let (lo, hi) = (job.grid.start, job.grid.stop);
    let spec = job.sequence_spec();
    let params = job.run_params();
    let k = job.harmonic;

    let pool = job.pool()?;
    let rows = pool.install(|| {
        reg.nuclei
            .par_iter()
            .map(|nuc| -> Result<ComparisonRow, CliError> {
                let is_blockade = nuc.label == blockade;
                let t_r = resonant_period(precession_frequency(nuc, reg.larmor), k);
                let ep = effective_params(nuc, reg.larmor, t_r, k);
                let single = reg.subset(&[&nuc.label])?;
                let single_trace = sweep_trace(&single, &spec, &params, &grid)?;
                let ys = single_trace.column(&nuc.label).expect("label present");
                let dips_numeric: Vec<f64> = dips_below(&grid, &ys, DIP_FLOOR).iter().map(|d| d.x).collect();
                let dips_analytic: Vec<f64> =
                    side_dips(&ep, job.n_p, DIP_ORDERS).into_iter().filter(|t| *t >= lo && *t <= hi).collect();
                let (t_r_shifted, peak) = if is_blockade {
                    // Many repetitions flatten a strong spin's resonance into a
                    // plateau, so its centre is read from one repetition.
                    let once = RunParams { repetitions: 1, ..params };
                    let located = global_peak(&grid, &sweep_trace(&single, &spec, &once, &grid)?.column(&nuc.label).expect("label present"));
                    let height = global_peak(&grid, &ys);
                    (None, located.zip(height).map(|(l, h)| (l.x, h.y)))
                } else {
                    let shifted = match blockade_shift_harmonic(&strong, nuc, reg.larmor, k) {
                        Ok(s) => Some(s.shifted_period),
                        Err(e) => {
                            log::warn!("no blockade prediction for {}: {e}", nuc.label);
                            None
                        }
                    };
                    let pair = reg.subset(&[&blockade, &nuc.label])?;
                    let pair_trace = sweep_trace(&pair, &spec, &params, &grid)?;
                    let p = global_peak(&grid, &pair_trace.column(&nuc.label).expect("label present"));
                    (shifted, p.map(|p| (p.x, p.y)))
                };
                Ok(ComparisonRow {
                    label: nuc.label.clone(),
                    is_blockade,
                    t_r,
                    t_r_shifted,
                    numeric_peak: peak.map(|p| p.0),
                    peak_polarisation: peak.map(|p| job.convention.apply(p.1)),
                    dips_analytic,
                    dips_numeric,
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let report = ComparisonReport { blockade, rows };
    let mut w = create(&job.output)?;
    report.write_csv(&mut w).map_err(io_err(&job.output))?;
    w.flush().map_err(io_err(&job.output))?;
    Ok(report)
}
