//! Density-matrix simulation of the repetition protocol.
//!
//! One repetition is `N_p` protocol periods of coherent evolution from an
//! electron prepared in the re-initialisation state, followed by tracing out
//! the electron, a free nuclear wait, and re-preparing the electron.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{exp_from_eigen, hermitian_eigensolve, kron, partial_trace, ComplexMatrix, LinalgError};
use crate::pulses::{Propagator, Protocol, PulseError, PulseMode, PulseSequence};
use crate::spin::{conditional_nuclear_hamiltonian, SpinError, SpinRegister};

/// Default instrumental wait between repetitions, us.
pub const DEFAULT_WAIT_US: f64 = 10.0;

/// Repetition cap for [`asymptotic_envelope`].
pub const ENVELOPE_REPETITION_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid run parameter: {0}")]
    Validation(String),
    #[error("density state invariant violated: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spin(#[from] SpinError),
}

/// Electron basis state used for optical re-initialisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ElectronState {
    /// m_s = 0, the upper basis state.
    #[default]
    Zero,
    /// m_s = -1.
    MinusOne,
}

impl ElectronState {
    pub fn index(self) -> usize {
        match self {
            ElectronState::Zero => 0,
            ElectronState::MinusOne => 1,
        }
    }

    /// +1 when the state is electron "up". Reported polarisations are
    /// `orientation * <I_z>`, so transfer toward the re-initialised electron
    /// direction reads positive.
    pub fn orientation(self) -> f64 {
        match self {
            ElectronState::Zero => 1.0,
            ElectronState::MinusOne => -1.0,
        }
    }

    fn projector(self) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(2, 2);
        p[(self.index(), self.index())] = 1.0.into();
        p
    }
}

/// Joint electron-nuclear density matrix.
#[derive(Debug, Clone)]
pub struct DensityState {
    pub rho: ComplexMatrix,
    pub register: SpinRegister,
}

impl DensityState {
    /// Electron in `electron`, nuclei in `rho_nuclear`.
    pub fn from_nuclear(register: &SpinRegister, rho_nuclear: &ComplexMatrix, electron: ElectronState) -> Result<Self, EngineError> {
        let d = register.nuclear_dim();
        if rho_nuclear.rows() != d || !rho_nuclear.is_square() {
            return Err(EngineError::Validation(format!("nuclear state must be {d}x{d}")));
        }
        Ok(Self { rho: kron(&electron.projector(), rho_nuclear), register: register.clone() })
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    /// Reduced nuclear state.
    pub fn nuclear_state(&self) -> ComplexMatrix {
        partial_trace(&self.rho, &[2, self.register.nuclear_dim()], 0).expect("register dims are consistent")
    }

    /// Raw `<I_z>` per nucleus.
    pub fn nuclear_z(&self) -> Vec<f64> {
        nuclear_expectations(&self.nuclear_state(), self.register.n_nuclei())
    }

    pub fn purity(&self) -> f64 {
        self.rho.matmul(&self.rho).trace().re
    }

    /// Hermiticity, unit trace and positivity.
    pub fn check_invariants(&self, tol: f64) -> Result<(), EngineError> {
        let h = self.rho.hermiticity_error();
        if h > tol {
            return Err(EngineError::InvalidState(format!("hermiticity error {h:.3e}")));
        }
        let tr = self.rho.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(EngineError::InvalidState(format!("trace {tr}")));
        }
        let min = hermitian_eigensolve(&self.rho.hermitian_part())?.real_eigenvalues()[0];
        if min < -tol {
            return Err(EngineError::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }
}

/// `<I_z^(n)>` on a nuclear-only density matrix.
pub fn nuclear_expectations(rho_nuclear: &ComplexMatrix, n_nuclei: usize) -> Vec<f64> {
    (0..n_nuclei)
        .map(|k| {
            let d = rho_nuclear.rows();
            // I_z^(k) is diagonal: +1/2 when bit k (from the most significant side) is 0.
            (0..d)
                .map(|i| {
                    let bit = (i >> (n_nuclei - 1 - k)) & 1;
                    let s = if bit == 0 { 0.5 } else { -0.5 };
                    s * rho_nuclear[(i, i)].re
                })
                .sum()
        })
        .collect()
}

/// Electron in |0>, nuclei maximally mixed.
pub fn initial_state(register: &SpinRegister) -> DensityState {
    let d = register.nuclear_dim();
    let mixed = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
    DensityState::from_nuclear(register, &mixed, ElectronState::Zero).expect("dims match by construction")
}

/// Protocol, cycles per repetition, repetitions, wait, re-initialisation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolRun {
    pub sequence: PulseSequence,
    pub n_p: u32,
    pub repetitions: usize,
    pub wait_time: f64,
    pub reinit_state: ElectronState,
}

impl ProtocolRun {
    pub fn new(sequence: PulseSequence, n_p: u32, repetitions: usize) -> Self {
        Self { sequence, n_p, repetitions, wait_time: DEFAULT_WAIT_US, reinit_state: ElectronState::Zero }
    }

    pub fn with_wait(mut self, wait_time: f64) -> Self {
        self.wait_time = wait_time;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.n_p == 0 {
            return Err(EngineError::Validation("n_p must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(EngineError::Validation("repetitions must be at least 1".into()));
        }
        if !(self.wait_time.is_finite() && self.wait_time >= 0.0) {
            return Err(EngineError::Validation(format!("wait time must be >= 0, got {}", self.wait_time)));
        }
        Ok(())
    }

    /// Wall time of one repetition: `N_p T + wait`.
    pub fn repetition_time(&self) -> f64 {
        self.n_p as f64 * self.sequence.period + self.wait_time
    }
}

/// How sequences are built for a given period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequenceSpec {
    pub protocol: Protocol,
    pub harmonic: u32,
    pub mode: PulseMode,
}

impl Default for SequenceSpec {
    fn default() -> Self {
        Self { protocol: Protocol::PulsePol, harmonic: 3, mode: PulseMode::Ideal }
    }
}

impl SequenceSpec {
    pub fn pulsepol(harmonic: u32) -> Self {
        Self { harmonic, ..Self::default() }
    }

    pub fn build(&self, period: f64) -> Result<PulseSequence, PulseError> {
        self.protocol.build_period(period, self.harmonic, self.mode)
    }
}

/// Run parameters shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunParams {
    pub n_p: u32,
    pub repetitions: usize,
    pub wait_time: f64,
    pub reinit_state: ElectronState,
}

impl RunParams {
    pub fn new(n_p: u32, repetitions: usize) -> Self {
        Self { n_p, repetitions, wait_time: DEFAULT_WAIT_US, reinit_state: ElectronState::Zero }
    }

    pub fn with_wait(mut self, wait_time: f64) -> Self {
        self.wait_time = wait_time;
        self
    }

    pub fn to_run(&self, sequence: PulseSequence) -> ProtocolRun {
        ProtocolRun {
            sequence,
            n_p: self.n_p,
            repetitions: self.repetitions,
            wait_time: self.wait_time,
            reinit_state: self.reinit_state,
        }
    }
}

/// Cached register data for repeated protocol runs.
#[derive(Debug, Clone)]
pub struct Engine {
    propagator: Propagator,
    wait_eig: [crate::linalg::EigenDecomposition; 2],
}

impl Engine {
    pub fn new(register: &SpinRegister) -> Result<Self, EngineError> {
        let propagator = Propagator::new(register)?;
        let wait_eig = [
            hermitian_eigensolve(&conditional_nuclear_hamiltonian(register, 0))?,
            hermitian_eigensolve(&conditional_nuclear_hamiltonian(register, 1))?,
        ];
        Ok(Self { propagator, wait_eig })
    }

    pub fn register(&self) -> &SpinRegister {
        &self.propagator.register
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    /// Nuclear free evolution with the electron held in `electron`.
    pub fn wait_unitary(&self, electron: ElectronState, t: f64) -> ComplexMatrix {
        exp_from_eigen(&self.wait_eig[electron.index()], t)
    }

    /// `U(T)^{N_p}` by repeated multiplication.
    pub fn block_unitary(&self, run: &ProtocolRun) -> Result<ComplexMatrix, EngineError> {
        let u = self.propagator.period_unitary(&run.sequence)?;
        let mut acc = u.clone();
        for _ in 1..run.n_p {
            acc = u.matmul(&acc);
        }
        Ok(acc)
    }

    /// Execute `run` from `state`. When `log` is set, the oriented polarisation of
    /// every nucleus is recorded after each repetition.
    pub fn run_protocol(
        &self,
        state: &DensityState,
        run: &ProtocolRun,
        log: bool,
    ) -> Result<(DensityState, Vec<Vec<f64>>), EngineError> {
        self.run_observed(state, run, |_, s| {
            if log {
                Some(oriented(&s.nuclear_z(), run.reinit_state))
            } else {
                None
            }
        })
    }

    /// Execute `run`, calling `observe(repetition, state)` after every repetition
    /// and collecting whatever it returns.
    pub fn run_observed<T>(
        &self,
        state: &DensityState,
        run: &ProtocolRun,
        mut observe: impl FnMut(usize, &DensityState) -> Option<T>,
    ) -> Result<(DensityState, Vec<T>), EngineError> {
        run.validate()?;
        if state.dim() != self.propagator.dim() {
            return Err(EngineError::Validation("state and register dimensions differ".into()));
        }
        let ub = self.block_unitary(run)?;
        let ubd = ub.adjoint();
        let w = self.wait_unitary(run.reinit_state, run.wait_time);
        let wd = w.adjoint();
        let reinit = run.reinit_state.projector();
        let nd = self.register().nuclear_dim();
        let mut rho = state.rho.clone();
        let mut out = Vec::new();
        for r in 0..run.repetitions {
            let evolved = ub.matmul(&rho).matmul(&ubd);
            let rn = partial_trace(&evolved, &[2, nd], 0)?;
            let rn = w.matmul(&rn).matmul(&wd);
            rho = kron(&reinit, &rn);
            if !rho.is_finite() {
                return Err(LinalgError::NonFinite("run_protocol").into());
            }
            let current = DensityState { rho, register: self.register().clone() };
            if let Some(v) = observe(r, &current) {
                out.push(v);
            }
            rho = current.rho;
        }
        Ok((DensityState { rho, register: self.register().clone() }, out))
    }

    /// Kraus operators of one repetition acting on the nuclear state:
    /// `K_e' = W <e'| U^{N_p} |e_reinit>`.
    pub fn repetition_kraus(&self, run: &ProtocolRun) -> Result<Vec<ComplexMatrix>, EngineError> {
        let ub = self.block_unitary(run)?;
        let nd = self.register().nuclear_dim();
        let e = run.reinit_state.index();
        let w = self.wait_unitary(run.reinit_state, run.wait_time);
        Ok((0..2).map(|ep| w.matmul(&ub.block(ep * nd, e * nd, nd, nd))).collect())
    }

    /// Oriented polarisations after a fresh run at one period.
    pub fn polarisation_at(&self, spec: &SequenceSpec, params: &RunParams, period: f64) -> Result<Vec<f64>, EngineError> {
        let run = params.to_run(spec.build(period)?);
        let (fin, _) = self.run_protocol(&initial_state(self.register()), &run, false)?;
        Ok(oriented(&fin.nuclear_z(), run.reinit_state))
    }
}

fn oriented(z: &[f64], reinit: ElectronState) -> Vec<f64> {
    z.iter().map(|v| v * reinit.orientation()).collect()
}

/// Free-standing form of [`Engine::run_protocol`].
pub fn run_protocol(
    state: &DensityState,
    run: &ProtocolRun,
    log: bool,
) -> Result<(DensityState, Vec<Vec<f64>>), EngineError> {
    Engine::new(&state.register)?.run_protocol(state, run, log)
}

/// Oriented per-nucleus polarisation on a period grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarisationTrace {
    pub t_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub labels: Vec<String>,
    /// `values[i][n]`: nucleus n at grid point i.
    pub values: Vec<Vec<f64>>,
    pub n_p: u32,
    pub repetitions: usize,
}

impl PolarisationTrace {
    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let k = self.labels.iter().position(|l| l == label)?;
        Some(self.values.iter().map(|row| row[k]).collect())
    }
}

/// Fresh initial state and full protocol at every grid period, in parallel.
/// Output order follows `t_grid` regardless of scheduling.
pub fn sweep_trace(
    register: &SpinRegister,
    spec: &SequenceSpec,
    params: &RunParams,
    t_grid: &[f64],
) -> Result<PolarisationTrace, EngineError> {
    let engine = Engine::new(register)?;
    let values = t_grid
        .par_iter()
        .map(|&t| engine.polarisation_at(spec, params, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PolarisationTrace {
        t_grid: t_grid.to_vec(),
        tau_grid: t_grid.iter().map(|t| t / spec.protocol.period_over_tau()).collect(),
        labels: register.nuclei.iter().map(|n| n.label.clone()).collect(),
        values,
        n_p: params.n_p,
        repetitions: params.repetitions,
    })
}

/// One stage of a multi-stage schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleStage {
    pub period: f64,
    pub params: RunParams,
}

/// One logged repetition of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub stage_index: usize,
    pub repetition: usize,
    pub period: f64,
    pub tau: f64,
    pub n_p: u32,
    pub cumulative_time_us: f64,
    pub polarisation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleTrace {
    pub labels: Vec<String>,
    pub rows: Vec<ScheduleRow>,
}

impl ScheduleTrace {
    pub fn final_polarisation(&self) -> Option<&[f64]> {
        self.rows.last().map(|r| r.polarisation.as_slice())
    }
}

/// Run stages back to back, carrying the state, logging every repetition
/// against cumulative wall time.
pub fn run_schedule(register: &SpinRegister, spec: &SequenceSpec, stages: &[ScheduleStage]) -> Result<ScheduleTrace, EngineError> {
    if stages.is_empty() {
        return Err(EngineError::Validation("a schedule needs at least one stage".into()));
    }
    let engine = Engine::new(register)?;
    let mut state = initial_state(register);
    let mut rows = Vec::new();
    let mut clock = 0.0;
    for (si, stage) in stages.iter().enumerate() {
        let run = stage.params.to_run(spec.build(stage.period)?);
        let step = run.repetition_time();
        let tau = run.sequence.tau();
        let (next, logged) = engine.run_observed(&state, &run, |r, s| {
            Some(ScheduleRow {
                stage_index: si,
                repetition: r + 1,
                period: stage.period,
                tau,
                n_p: run.n_p,
                cumulative_time_us: clock + (r + 1) as f64 * step,
                polarisation: oriented(&s.nuclear_z(), run.reinit_state),
            })
        })?;
        clock += run.repetitions as f64 * step;
        rows.extend(logged);
        state = next;
    }
    Ok(ScheduleTrace { labels: register.nuclei.iter().map(|n| n.label.clone()).collect(), rows })
}

/// Converged repetition limit on a period grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeTrace {
    pub trace: PolarisationTrace,
    /// Repetitions used at each grid point.
    pub iterations: Vec<usize>,
    /// False where the repetition cap was hit first.
    pub converged: Vec<bool>,
}

impl EnvelopeTrace {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Repeat until no nucleus changes by more than `tol` in one repetition.
pub fn asymptotic_envelope(
    register: &SpinRegister,
    spec: &SequenceSpec,
    params: &RunParams,
    t_grid: &[f64],
    tol: f64,
    cap: usize,
) -> Result<EnvelopeTrace, EngineError> {
    if !(tol > 0.0) {
        return Err(EngineError::Validation("convergence tolerance must be positive".into()));
    }
    let engine = Engine::new(register)?;
    let nd = register.nuclear_dim();
    let n = register.n_nuclei();
    let results = t_grid
        .par_iter()
        .map(|&t| -> Result<(Vec<f64>, usize, bool), EngineError> {
            let run = params.to_run(spec.build(t)?);
            run.validate()?;
            let kraus = engine.repetition_kraus(&run)?;
            let kraus_d: Vec<ComplexMatrix> = kraus.iter().map(|k| k.adjoint()).collect();
            let mut rn = ComplexMatrix::identity(nd).scale_real(1.0 / nd as f64);
            let mut prev = nuclear_expectations(&rn, n);
            for it in 1..=cap {
                let mut next = ComplexMatrix::zeros(nd, nd);
                for (k, kd) in kraus.iter().zip(&kraus_d) {
                    next += &k.matmul(&rn).matmul(kd);
                }
                rn = next;
                let z = nuclear_expectations(&rn, n);
                let change = z.iter().zip(&prev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                prev = z;
                if change < tol {
                    return Ok((oriented(&prev, run.reinit_state), it, true));
                }
            }
            log::warn!("envelope at T = {t:.4} us hit the {cap} repetition cap");
            Ok((oriented(&prev, run.reinit_state), cap, false))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut values = Vec::with_capacity(results.len());
    let mut iterations = Vec::with_capacity(results.len());
    let mut converged = Vec::with_capacity(results.len());
    for (v, it, ok) in results {
        values.push(v);
        iterations.push(it);
        converged.push(ok);
    }
    Ok(EnvelopeTrace {
        trace: PolarisationTrace {
            t_grid: t_grid.to_vec(),
            tau_grid: t_grid.iter().map(|t| t / spec.protocol.period_over_tau()).collect(),
            labels: register.nuclei.iter().map(|n| n.label.clone()).collect(),
            values,
            n_p: params.n_p,
            repetitions: *iterations.iter().max().unwrap_or(&0),
        },
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{reference_register, NuclearSpin};

    #[test]
    fn initial_state_shape() {
        let reg = reference_register(&["C3"]).unwrap();
        let s = initial_state(&reg);
        let want = ComplexMatrix::from_real(4, 4, &[0.5, 0., 0., 0., 0., 0.5, 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.]);
        assert!(s.rho.max_diff(&want) < 1e-15);
        let reg3 = reference_register(&["C3", "C16", "C21"]).unwrap();
        let s3 = initial_state(&reg3);
        assert!((s3.rho.trace().re - 1.0).abs() < 1e-15);
        assert!((s3.purity() - 0.125).abs() < 1e-15);
        assert!(s3.nuclear_z().iter().all(|z| z.abs() < 1e-15));
    }

    #[test]
    fn uncoupled_nucleus_is_invariant() {
        let reg = SpinRegister::new(2.7, vec![NuclearSpin::new("free", 0.0, 0.0)]).unwrap();
        let spec = SequenceSpec::default();
        let run = RunParams::new(4, 25).to_run(spec.build(6.9).unwrap());
        let s0 = initial_state(&reg);
        let (s1, _) = run_protocol(&s0, &run, false).unwrap();
        assert!(s1.rho.max_diff(&s0.rho) < 1e-12);
    }

    #[test]
    fn invalid_runs_are_rejected() {
        let reg = reference_register(&["C3"]).unwrap();
        let seq = SequenceSpec::default().build(6.9).unwrap();
        let s0 = initial_state(&reg);
        assert!(run_protocol(&s0, &ProtocolRun::new(seq.clone(), 0, 1), false).is_err());
        assert!(run_protocol(&s0, &ProtocolRun::new(seq.clone(), 1, 0), false).is_err());
        assert!(run_protocol(&s0, &ProtocolRun::new(seq, 1, 1).with_wait(-1.0), false).is_err());
        assert!(run_schedule(&reg, &SequenceSpec::default(), &[]).is_err());
    }

    #[test]
    fn reinit_orientation() {
        assert_eq!(ElectronState::Zero.orientation(), 1.0);
        assert_eq!(ElectronState::MinusOne.index(), 1);
    }
}
