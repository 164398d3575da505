use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use spinblock::engine::{ElectronState, DEFAULT_WAIT_US};
use spinblock::pulses::{Protocol, PulseMode};
use spinblock_cli::{
    cmd_compare, cmd_schedule, cmd_spectrum, cmd_sweep, read_register, CliError, GridSpec, OutputConvention, StageArg,
    SweepJob,
};

#[derive(Parser, Debug)]
#[command(name = "spinblock", version, about = "Pulse-based nuclear polarisation: Floquet spectra, sweeps and schedules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Floquet eigenphases against period, plus detected avoided crossings.
    Spectrum(JobArgs),
    /// Per-nucleus polarisation against period.
    Sweep(JobArgs),
    /// Polarisation against cumulative time for consecutive stages.
    Schedule {
        #[command(flatten)]
        job: JobArgs,
        /// Stage as `T_us:reps`; repeat for several stages.
        #[arg(long = "stage", required = true)]
        stages: Vec<StageArg>,
    },
    /// Analytic resonances, blockade shifts and dips against numerics.
    Compare {
        #[command(flatten)]
        job: JobArgs,
        /// Blockade spin label; defaults to the largest perpendicular coupling.
        #[arg(long)]
        blockade: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProtocolArg {
    Pulsepol,
    Cpmg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReinitArg {
    Zero,
    MinusOne,
}

#[derive(Args, Debug)]
struct JobArgs {
    /// Register description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// First period, us.
    #[arg(long, default_value_t = 6.0)]
    t_start: f64,
    /// Last period, us.
    #[arg(long, default_value_t = 8.0)]
    t_stop: f64,
    #[arg(long, default_value_t = 201)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = ProtocolArg::Pulsepol)]
    protocol: ProtocolArg,
    /// Resonance harmonic k; the default follows the protocol (3 for PulsePol, 1 for CPMG).
    #[arg(long)]
    harmonic: Option<u32>,
    /// Protocol cycles per repetition.
    #[arg(long, default_value_t = 4)]
    np: u32,
    /// Repetitions.
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Nuclear free evolution between repetitions, us.
    #[arg(long, default_value_t = DEFAULT_WAIT_US)]
    wait_us: f64,
    /// Rabi frequency for finite pulses, rad/us; ideal pulses when absent.
    #[arg(long)]
    rabi: Option<f64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Electron re-initialisation state.
    #[arg(long, value_enum, default_value_t = ReinitArg::Zero)]
    reinit: ReinitArg,
    /// Write -<I_z> instead of <I_z>.
    #[arg(long)]
    flip_sign: bool,
    /// Write 2<I_z> in [-1, 1].
    #[arg(long)]
    full_scale: bool,
}

impl JobArgs {
    fn into_job(self) -> Result<SweepJob, CliError> {
        let register = read_register(&self.config)?;
        let protocol = match self.protocol {
            ProtocolArg::Pulsepol => Protocol::PulsePol,
            ProtocolArg::Cpmg => Protocol::Cpmg,
        };
        let harmonic = self.harmonic.unwrap_or(match protocol {
            Protocol::PulsePol => 3,
            Protocol::Cpmg => 1,
        });
        let mut job = SweepJob::new(register, GridSpec { start: self.t_start, stop: self.t_stop, steps: self.steps }, self.out);
        job.register_path = Some(self.config);
        job.protocol = protocol;
        job.harmonic = harmonic;
        job.n_p = self.np;
        job.repetitions = self.reps;
        job.wait_time = self.wait_us;
        job.pulse_mode = self.rabi.map_or(PulseMode::Ideal, |rabi| PulseMode::Finite { rabi });
        job.workers = self.workers;
        job.convention = OutputConvention { flip_sign: self.flip_sign, full_scale: self.full_scale };
        job.reinit_state = match self.reinit {
            ReinitArg::Zero => ElectronState::Zero,
            ReinitArg::MinusOne => ElectronState::MinusOne,
        };
        Ok(job)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum(args) => {
            let job = args.into_job()?;
            let crossings = cmd_spectrum(&job)?;
            info!("wrote {}", job.output.display());
            println!("{} avoided crossing(s)", crossings.len());
            for c in &crossings {
                println!("  T = {:.5} us  gap = {:.5} rad  spins = {}", c.t_center, c.gap, c.participating_spins.join(","));
            }
        }
        Command::Sweep(args) => {
            let job = args.into_job()?;
            let trace = cmd_sweep(&job)?;
            println!("{} grid points x {} nuclei -> {}", trace.t_grid.len(), trace.labels.len(), job.output.display());
        }
        Command::Schedule { job, stages } => {
            let job = job.into_job()?;
            let trace = cmd_schedule(&job, &stages)?;
            if let (Some(last), Some(p)) = (trace.rows.last(), trace.final_polarisation()) {
                println!("after {:.1} us:", last.cumulative_time_us);
                for (l, v) in trace.labels.iter().zip(p) {
                    println!("  {l}: {:.4}", job.convention.apply(*v));
                }
            }
        }
        Command::Compare { job, blockade } => {
            let job = job.into_job()?;
            let report = cmd_compare(&job, blockade.as_deref())?;
            print!("{report}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
