//! Pulse sequences, period unitaries and toggling-frame modulation functions.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{exp_from_eigen, hermitian_eigensolve, kron, ComplexMatrix, EigenDecomposition, LinalgError};
use crate::spin::{
    build_operators, embed, pauli, precession_frequency, static_hamiltonian, HyperfineConvention, NuclearSpin,
    SpinError, SpinRegister,
};

/// Pulse phases.
pub const PHASE_X: f64 = 0.0;
pub const PHASE_Y: f64 = FRAC_PI_2;
pub const PHASE_MINUS_X: f64 = PI;

/// Midpoint-rule steps per period for [`average_hamiltonian_numeric`].
pub const AVERAGE_GRID_STEPS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("invalid tau {0} us: must be positive and leave room for the pulses")]
    InvalidTau(f64),
    #[error("invalid Rabi frequency {0} rad/us")]
    InvalidRabi(f64),
    #[error("average Hamiltonian requires ideal pulses")]
    NotIdealPulses,
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum PulseMode {
    /// Instantaneous rotations.
    #[default]
    Ideal,
    /// Square pulses with the given Rabi frequency (rad/us); free intervals are
    /// measured between pulse centres.
    Finite { rabi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PulseKind {
    Rotation { angle: f64, phase: f64 },
    FreeEvolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    pub kind: PulseKind,
    /// us; zero for ideal rotations.
    pub duration: f64,
}

impl PulseEvent {
    pub fn free(duration: f64) -> Self {
        Self { kind: PulseKind::FreeEvolution, duration }
    }

    pub fn rotation(angle: f64, phase: f64, mode: PulseMode) -> Self {
        let duration = match mode {
            PulseMode::Ideal => 0.0,
            PulseMode::Finite { rabi } => angle / rabi,
        };
        Self { kind: PulseKind::Rotation { angle, phase }, duration }
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self.kind, PulseKind::Rotation { .. })
    }
}

/// Which protocol a sequence implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    PulsePol,
    Cpmg,
}

impl Protocol {
    /// Period in units of tau.
    pub fn period_over_tau(self) -> f64 {
        match self {
            Protocol::PulsePol => 4.0,
            Protocol::Cpmg => 2.0,
        }
    }

    pub fn build(self, tau: f64, mode: PulseMode) -> Result<PulseSequence, PulseError> {
        match self {
            Protocol::PulsePol => pulsepol_sequence(tau, mode),
            Protocol::Cpmg => cpmg_sequence(tau, mode),
        }
    }

    /// Sequence for a given period `T` and resonance harmonic.
    pub fn build_period(self, period: f64, harmonic: u32, mode: PulseMode) -> Result<PulseSequence, PulseError> {
        Ok(self.build(period / self.period_over_tau(), mode)?.with_harmonic(harmonic))
    }
}

/// One protocol period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub events: Vec<PulseEvent>,
    /// T in us.
    pub period: f64,
    pub harmonic: u32,
    pub label: String,
    pub protocol: Protocol,
    pub mode: PulseMode,
}

impl PulseSequence {
    pub fn with_harmonic(mut self, k: u32) -> Self {
        assert!(k >= 1, "harmonic must be positive");
        self.harmonic = k;
        self
    }

    pub fn tau(&self) -> f64 {
        self.period / self.protocol.period_over_tau()
    }

    pub fn total_duration(&self) -> f64 {
        self.events.iter().map(|e| e.duration).sum()
    }

    pub fn rotation_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_rotation()).count()
    }

    pub fn free_count(&self) -> usize {
        self.events.len() - self.rotation_count()
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self.mode, PulseMode::Ideal)
    }

    /// Protocol angular frequency `2 k pi / T`.
    pub fn protocol_frequency(&self) -> f64 {
        TAU * self.harmonic as f64 / self.period
    }
}

impl fmt::Display for PulseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} T = {:.6} us (tau = {:.6} us, k = {})", self.label, self.period, self.tau(), self.harmonic)?;
        let mut t = 0.0;
        for e in &self.events {
            match e.kind {
                PulseKind::Rotation { angle, phase } => writeln!(
                    f,
                    "  {t:>10.6}  rot   {:>6.1} deg  phase {:>6.1} deg  ({:.6} us)",
                    angle.to_degrees(),
                    phase.to_degrees(),
                    e.duration
                )?,
                PulseKind::FreeEvolution => writeln!(f, "  {t:>10.6}  free  {:.6} us", e.duration)?,
            }
            t += e.duration;
        }
        Ok(())
    }
}

fn check_mode(mode: PulseMode) -> Result<(), PulseError> {
    if let PulseMode::Finite { rabi } = mode {
        if !(rabi.is_finite() && rabi > 0.0) {
            return Err(PulseError::InvalidRabi(rabi));
        }
    }
    Ok(())
}

fn pulse_length(angle: f64, mode: PulseMode) -> f64 {
    match mode {
        PulseMode::Ideal => 0.0,
        PulseMode::Finite { rabi } => angle / rabi,
    }
}

/// PulsePol period `T = 4 tau`: the bracket
/// `(pi/2)_Y, tau/2, (pi)_-X, tau/2, (pi/2)_Y (pi/2)_X, tau/2, (pi)_Y, tau/2, (pi/2)_X`
/// applied twice.
///
/// With finite pulses each free gap is shortened so that the spacing between
/// the centres of neighbouring pulse groups stays `tau/2`; the back-to-back
/// `pi/2` pairs count as one group centred on their junction.
pub fn pulsepol_sequence(tau: f64, mode: PulseMode) -> Result<PulseSequence, PulseError> {
    check_mode(mode)?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(PulseError::InvalidTau(tau));
    }
    let half = pulse_length(FRAC_PI_2, mode);
    let full = pulse_length(PI, mode);
    let gap = tau / 2.0 - half - full / 2.0;
    if gap < -1e-12 {
        return Err(PulseError::InvalidTau(tau));
    }
    let gap = gap.max(0.0);
    let rot = |a, p| PulseEvent::rotation(a, p, mode);
    let bracket = [
        rot(FRAC_PI_2, PHASE_Y),
        PulseEvent::free(gap),
        rot(PI, PHASE_MINUS_X),
        PulseEvent::free(gap),
        rot(FRAC_PI_2, PHASE_Y),
        rot(FRAC_PI_2, PHASE_X),
        PulseEvent::free(gap),
        rot(PI, PHASE_Y),
        PulseEvent::free(gap),
        rot(FRAC_PI_2, PHASE_X),
    ];
    let events: Vec<PulseEvent> = bracket.iter().chain(bracket.iter()).copied().collect();
    Ok(PulseSequence {
        events,
        period: 4.0 * tau,
        harmonic: 3,
        label: "PulsePol".into(),
        protocol: Protocol::PulsePol,
        mode,
    })
}

/// CPMG period `T = 2 tau`: `[tau/2, (pi)_X, tau/2]` twice.
pub fn cpmg_sequence(tau: f64, mode: PulseMode) -> Result<PulseSequence, PulseError> {
    check_mode(mode)?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(PulseError::InvalidTau(tau));
    }
    let full = pulse_length(PI, mode);
    let gap = tau / 2.0 - full / 2.0;
    if gap < -1e-12 {
        return Err(PulseError::InvalidTau(tau));
    }
    let gap = gap.max(0.0);
    let half_period = [PulseEvent::free(gap), PulseEvent::rotation(PI, PHASE_X, mode), PulseEvent::free(gap)];
    let events = half_period.iter().chain(half_period.iter()).copied().collect();
    Ok(PulseSequence { events, period: 2.0 * tau, harmonic: 1, label: "CPMG".into(), protocol: Protocol::Cpmg, mode })
}

/// `exp(-i theta S_phi)` on the electron alone.
pub fn electron_rotation(angle: f64, phase: f64) -> ComplexMatrix {
    let c = C64::new((angle / 2.0).cos(), 0.0);
    let s = C64::new(0.0, -(angle / 2.0).sin());
    let sphi2 = pauli::s_phi(phase).scale_real(2.0);
    &ComplexMatrix::identity(2).scale(c) + &sphi2.scale(s)
}

/// Cached static Hamiltonian of a register, for building many period unitaries.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub register: SpinRegister,
    pub h0: ComplexMatrix,
    h0_eig: EigenDecomposition,
}

impl Propagator {
    pub fn new(register: &SpinRegister) -> Result<Self, PulseError> {
        register.validate()?;
        let ops = build_operators(register)?;
        let h0 = static_hamiltonian(register, &ops);
        let h0_eig = hermitian_eigensolve(&h0)?;
        Ok(Self { register: register.clone(), h0, h0_eig })
    }

    pub fn dim(&self) -> usize {
        self.h0.rows()
    }

    /// `exp(-i H0 t)`.
    pub fn free(&self, t: f64) -> ComplexMatrix {
        exp_from_eigen(&self.h0_eig, t)
    }

    fn pulse(&self, angle: f64, phase: f64, duration: f64) -> Result<ComplexMatrix, PulseError> {
        let nd = self.register.nuclear_dim();
        if duration == 0.0 {
            return Ok(kron(&electron_rotation(angle, phase), &ComplexMatrix::identity(nd)));
        }
        let drive = embed(&pauli::s_phi(phase), 0, self.register.n_nuclei() + 1);
        let rabi = angle / duration;
        let h = &self.h0 + &drive.scale_real(rabi);
        Ok(crate::linalg::matrix_exponential_hermitian(&h, duration)?)
    }

    /// Time-ordered product over one period.
    pub fn period_unitary(&self, seq: &PulseSequence) -> Result<ComplexMatrix, PulseError> {
        let mut u = ComplexMatrix::identity(self.dim());
        let mut free_cache: Vec<(f64, ComplexMatrix)> = Vec::new();
        let mut pulse_cache: Vec<((f64, f64, f64), ComplexMatrix)> = Vec::new();
        for ev in &seq.events {
            let step = match ev.kind {
                PulseKind::FreeEvolution => {
                    if ev.duration == 0.0 {
                        continue;
                    }
                    match free_cache.iter().find(|(d, _)| *d == ev.duration) {
                        Some((_, m)) => m.clone(),
                        None => {
                            let m = self.free(ev.duration);
                            free_cache.push((ev.duration, m.clone()));
                            m
                        }
                    }
                }
                PulseKind::Rotation { angle, phase } => {
                    let key = (angle, phase, ev.duration);
                    match pulse_cache.iter().find(|(k, _)| *k == key) {
                        Some((_, m)) => m.clone(),
                        None => {
                            let m = self.pulse(angle, phase, ev.duration)?;
                            pulse_cache.push((key, m.clone()));
                            m
                        }
                    }
                }
            };
            u = step.matmul(&u);
        }
        if !u.is_finite() {
            return Err(LinalgError::NonFinite("period_unitary").into());
        }
        Ok(u)
    }
}

/// One-period unitary of `seq` for `register`.
pub fn period_unitary(seq: &PulseSequence, register: &SpinRegister) -> Result<ComplexMatrix, PulseError> {
    Propagator::new(register)?.period_unitary(seq)
}

/// Piecewise-constant toggling-frame modulation functions of PulsePol.
///
/// In the toggling frame of the ideal pulses the electron `S_z` becomes
/// `-(f1 S_x + f2 S_y)`, with `f2(t) = f1(t - tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationFunctions {
    pub tau: f64,
}

/// Sign pattern of `f1` on the eight `tau/2` slots of one period.
const F1_SLOTS: [f64; 8] = [1.0, -1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0];

impl ModulationFunctions {
    pub fn period(&self) -> f64 {
        4.0 * self.tau
    }

    fn slot(&self, t: f64) -> usize {
        let tt = t.rem_euclid(self.period());
        ((tt / (self.tau / 2.0)).floor() as usize).min(7)
    }

    pub fn f1(&self, t: f64) -> f64 {
        F1_SLOTS[self.slot(t)]
    }

    pub fn f2(&self, t: f64) -> f64 {
        F1_SLOTS[(self.slot(t) + 6) % 8]
    }

    /// Cosine coefficient of `f1` at harmonic k (`f = sum a_k cos(2 pi k t/T) + b_k sin(2 pi k t/T)`).
    pub fn a1(k: u32) -> f64 {
        let k = k as f64;
        odd_factor(k) * (4.0 * (k * PI / 4.0).sin() - 2.0 * (k * PI / 2.0).sin()) / (k * PI)
    }

    pub fn b1(k: u32) -> f64 {
        let k = k as f64;
        odd_factor(k) * (-4.0 * (k * PI / 4.0).cos() + 2.0) / (k * PI)
    }

    /// `f2` is `f1` delayed by a quarter period, which mixes the `f1` coefficients.
    pub fn a2(k: u32) -> f64 {
        -quarter_sign(k) * Self::b1(k)
    }

    pub fn b2(k: u32) -> f64 {
        quarter_sign(k) * Self::a1(k)
    }

    /// `(a1, b1, a2, b2)` for k = 1..=k_max.
    pub fn coefficients(k_max: u32) -> Vec<[f64; 4]> {
        (1..=k_max).map(|k| [Self::a1(k), Self::b1(k), Self::a2(k), Self::b2(k)]).collect()
    }

    /// Truncated Fourier series of `f1`.
    pub fn f1_series(&self, t: f64, k_max: u32) -> f64 {
        let w = TAU / self.period();
        (1..=k_max).map(|k| Self::a1(k) * (k as f64 * w * t).cos() + Self::b1(k) * (k as f64 * w * t).sin()).sum()
    }

    pub fn f2_series(&self, t: f64, k_max: u32) -> f64 {
        let w = TAU / self.period();
        (1..=k_max).map(|k| Self::a2(k) * (k as f64 * w * t).cos() + Self::b2(k) * (k as f64 * w * t).sin()).sum()
    }
}

fn odd_factor(k: f64) -> f64 {
    (1.0 - (-1f64).powi(k as i32)) / 2.0
}

/// `sin(k pi / 2)` evaluated exactly: 0, +1, 0, -1 for k mod 4 = 0..3.
fn quarter_sign(k: u32) -> f64 {
    match k % 4 {
        1 => 1.0,
        3 => -1.0,
        _ => 0.0,
    }
}

pub fn modulation_functions(tau: f64) -> Result<ModulationFunctions, PulseError> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(PulseError::InvalidTau(tau));
    }
    Ok(ModulationFunctions { tau })
}

/// Electron `S_z` in the toggling frame of the ideal pulses, for each event.
/// Returns 2x2 operators aligned with `seq.events` (identity-frame value for rotations).
pub fn toggling_frame_sz(seq: &PulseSequence) -> Vec<ComplexMatrix> {
    let mut acc = ComplexMatrix::identity(2);
    let sz = pauli::sz();
    seq.events
        .iter()
        .map(|e| {
            if let PulseKind::Rotation { angle, phase } = e.kind {
                acc = electron_rotation(angle, phase).matmul(&acc);
            }
            acc.adjoint().matmul(&sz).matmul(&acc)
        })
        .collect()
}

/// Splitting of the electron-averaged nuclear field under a convention.
pub fn mean_field_frequency(nucleus: &NuclearSpin, larmor: f64, convention: HyperfineConvention) -> f64 {
    match convention {
        HyperfineConvention::NvProjector => precession_frequency(nucleus, larmor),
        HyperfineConvention::Symmetric => larmor,
    }
}

/// First-order average Hamiltonian over one period, in the toggling frame of the
/// pulses and a nuclear frame rotating about z at `frame_frequency`.
///
/// Each nucleus contributes `(omega - frame) I_z` from its mean field and
/// `S~_z(t) (A_z I_z + A_x I~_x(t))` from the electron-conditioned part, with
/// `I~_x(t) = I_x cos(frame t) - I_y sin(frame t)`. The tilt of the mean field
/// away from z is neglected, as in the flip-flop analysis. The time integral is a
/// midpoint rule on [`AVERAGE_GRID_STEPS`] points.
pub fn average_hamiltonian_numeric(
    seq: &PulseSequence,
    register: &SpinRegister,
    frame_frequency: f64,
) -> Result<ComplexMatrix, PulseError> {
    if !seq.is_ideal() {
        return Err(PulseError::NotIdealPulses);
    }
    let ops = build_operators(register)?;
    let dim = register.dim();
    let n_sites = register.n_nuclei() + 1;
    let frames = toggling_frame_sz(seq);

    // Segment table: (start, end, toggled S_z embedded).
    let mut segments = Vec::new();
    let mut t0 = 0.0;
    for (e, s) in seq.events.iter().zip(&frames) {
        if e.duration > 0.0 {
            segments.push((t0, t0 + e.duration, embed(s, 0, n_sites)));
        }
        t0 += e.duration;
    }

    let mut h = ComplexMatrix::zeros(dim, dim);
    for (nuc, site) in register.nuclei.iter().zip(&ops.nuclei) {
        let w = mean_field_frequency(nuc, register.larmor, register.convention);
        h += &site.z.scale_real(w - frame_frequency);
    }
    if register.n_nuclei() == 0 {
        return Ok(h);
    }

    let n = AVERAGE_GRID_STEPS;
    let dt = seq.period / n as f64;
    // Accumulate sum_t S~(t) (x) [c(t) X + s(t) Y] per segment via scalar sums.
    for (start, end, stog) in &segments {
        let mut sum_one = 0.0;
        let mut sum_cos = 0.0;
        let mut sum_sin = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) * dt;
            if t >= *start && t < *end {
                sum_one += 1.0;
                sum_cos += (frame_frequency * t).cos();
                sum_sin += (frame_frequency * t).sin();
            }
        }
        if sum_one == 0.0 {
            continue;
        }
        let mut field = ComplexMatrix::zeros(dim, dim);
        for (nuc, site) in register.nuclei.iter().zip(&ops.nuclei) {
            field += &site.z.scale_real(nuc.a_parallel * sum_one);
            field += &site.x.scale_real(nuc.a_perp * sum_cos);
            field += &site.y.scale_real(-nuc.a_perp * sum_sin);
        }
        h += &stog.matmul(&field).scale_real(1.0 / n as f64);
    }
    Ok(h.hermitian_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::reference_register;

    #[test]
    fn pulsepol_layout() {
        let s = pulsepol_sequence(1.0, PulseMode::Ideal).unwrap();
        assert_eq!(s.rotation_count(), 12);
        assert_eq!(s.free_count(), 8);
        assert!((s.total_duration() - 4.0).abs() < 1e-12);
        let phases: Vec<f64> = s
            .events
            .iter()
            .filter_map(|e| match e.kind {
                PulseKind::Rotation { phase, .. } => Some(phase),
                _ => None,
            })
            .take(6)
            .collect();
        assert_eq!(phases, vec![PHASE_Y, PHASE_MINUS_X, PHASE_Y, PHASE_X, PHASE_Y, PHASE_X]);
    }

    #[test]
    fn finite_pulses_keep_period() {
        let s = pulsepol_sequence(1.7, PulseMode::Finite { rabi: 200.0 }).unwrap();
        assert!((s.total_duration() - 6.8).abs() < 1e-12);
        let c = cpmg_sequence(1.0, PulseMode::Finite { rabi: 100.0 }).unwrap();
        assert!((c.total_duration() - 2.0).abs() < 1e-12);
        assert!(pulsepol_sequence(0.01, PulseMode::Finite { rabi: 10.0 }).is_err());
    }

    #[test]
    fn invalid_tau() {
        assert_eq!(pulsepol_sequence(0.0, PulseMode::Ideal), Err(PulseError::InvalidTau(0.0)));
        assert!(cpmg_sequence(-1.0, PulseMode::Ideal).is_err());
    }

    #[test]
    fn cpmg_layout() {
        let s = cpmg_sequence(1.0, PulseMode::Ideal).unwrap();
        assert_eq!(s.rotation_count(), 2);
        assert!((s.period - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ideal_pi_squared_is_minus_identity() {
        let r = electron_rotation(PI, PHASE_X);
        assert!(r.matmul(&r).max_diff(&ComplexMatrix::identity(2).scale_real(-1.0)) < 1e-15);
    }

    #[test]
    fn empty_sequence_is_free_evolution() {
        let reg = reference_register(&["C3"]).unwrap();
        let p = Propagator::new(&reg).unwrap();
        let seq = PulseSequence {
            events: vec![PulseEvent::free(2.5)],
            period: 2.5,
            harmonic: 1,
            label: "free".into(),
            protocol: Protocol::Cpmg,
            mode: PulseMode::Ideal,
        };
        let u = p.period_unitary(&seq).unwrap();
        let want = crate::linalg::matrix_exponential_hermitian(&p.h0, 2.5).unwrap();
        assert!(u.max_diff(&want) < 1e-12);
    }

    #[test]
    fn modulation_table() {
        let m = modulation_functions(1.0).unwrap();
        let f1: Vec<f64> = (0..8).map(|i| m.f1(0.25 + 0.5 * i as f64)).collect();
        assert_eq!(f1, vec![1.0, -1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0]);
        let f2: Vec<f64> = (0..8).map(|i| m.f2(0.25 + 0.5 * i as f64)).collect();
        assert_eq!(f2, vec![0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0, 1.0]);
        for k in (2..40).step_by(2) {
            for c in [ModulationFunctions::a1(k), ModulationFunctions::b1(k), ModulationFunctions::a2(k)] {
                assert_eq!(c, 0.0);
            }
        }
    }

    #[test]
    fn toggled_sz_matches_modulation_functions() {
        let tau = 1.3;
        let seq = pulsepol_sequence(tau, PulseMode::Ideal).unwrap();
        let m = modulation_functions(tau).unwrap();
        let frames = toggling_frame_sz(&seq);
        let mut t = 0.0;
        for (e, s) in seq.events.iter().zip(&frames) {
            if e.duration > 0.0 {
                let mid = t + e.duration / 2.0;
                let want = &pauli::sx().scale_real(-m.f1(mid)) - &pauli::sy().scale_real(m.f2(mid));
                assert!(s.max_diff(&want) < 1e-14, "segment at {mid}");
            }
            t += e.duration;
        }
    }

    #[test]
    fn pulse_product_is_electron_identity_up_to_phase() {
        let seq = pulsepol_sequence(1.0, PulseMode::Ideal).unwrap();
        let mut acc = ComplexMatrix::identity(2);
        for e in &seq.events {
            if let PulseKind::Rotation { angle, phase } = e.kind {
                acc = electron_rotation(angle, phase).matmul(&acc);
            }
        }
        let ph = acc[(0, 0)];
        assert!((ph.norm() - 1.0).abs() < 1e-12);
        assert!(acc.max_diff(&ComplexMatrix::identity(2).scale(ph)) < 1e-12);
    }

    #[test]
    fn zero_hyperfine_average_is_zero() {
        let mut reg = reference_register(&["C3"]).unwrap();
        reg.nuclei[0].a_parallel = 0.0;
        reg.nuclei[0].a_perp = 0.0;
        let seq = pulsepol_sequence(1.7, PulseMode::Ideal).unwrap();
        let h = average_hamiltonian_numeric(&seq, &reg, reg.larmor).unwrap();
        assert!(h.max_abs() < 1e-14);
    }

    #[test]
    fn average_rejects_finite_pulses() {
        let reg = reference_register(&["C3"]).unwrap();
        let seq = pulsepol_sequence(1.7, PulseMode::Finite { rabi: 100.0 }).unwrap();
        assert_eq!(average_hamiltonian_numeric(&seq, &reg, 2.7), Err(PulseError::NotIdealPulses));
    }
}
