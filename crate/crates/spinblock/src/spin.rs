//! Spin registers, embedded spin-1/2 operators and the static Hamiltonian.

use std::collections::HashSet;
use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{kron, ComplexMatrix};

/// Carbon-13 gyromagnetic ratio over 2 pi, in kHz per gauss.
pub const GAMMA_C13_KHZ_PER_G: f64 = 1.0705;

/// Field used when a register config gives neither field nor Larmor frequency.
pub const DEFAULT_B_FIELD_GAUSS: f64 = 403.0;

/// Largest supported register (joint dimension 2^(1+N) <= 256).
pub const MAX_NUCLEI: usize = 7;

/// kHz (cyclic) to rad/us.
pub fn khz_to_rad_per_us(khz: f64) -> f64 {
    khz * TAU * 1e-3
}

pub fn rad_per_us_to_khz(w: f64) -> f64 {
    w / (TAU * 1e-3)
}

/// Nuclear Larmor frequency in rad/us for a field in gauss.
pub fn larmor_from_field(b_gauss: f64) -> f64 {
    khz_to_rad_per_us(GAMMA_C13_KHZ_PER_G * b_gauss)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("register has {0} nuclei; at most {MAX_NUCLEI} are supported")]
    DimensionOverflow(usize),
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("invalid field `{field}`: {message}")]
    ValidationError { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SpinError {
    SpinError::ValidationError { field: field.into(), message: message.into() }
}

/// One hyperfine-coupled nucleus. Couplings are angular frequencies in rad/us.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearSpin {
    pub label: String,
    /// A_z, parallel to the field.
    pub a_parallel: f64,
    /// A_x, perpendicular to the field, non-negative.
    pub a_perp: f64,
}

impl NuclearSpin {
    pub fn new(label: impl Into<String>, a_parallel: f64, a_perp: f64) -> Self {
        Self { label: label.into(), a_parallel, a_perp }
    }

    pub fn from_khz(label: impl Into<String>, a_parallel_khz: f64, a_perp_khz: f64) -> Self {
        Self::new(label, khz_to_rad_per_us(a_parallel_khz), khz_to_rad_per_us(a_perp_khz))
    }
}

/// How the electron spin enters the hyperfine term `S_z (A . I)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HyperfineConvention {
    /// `S_z -> diag(0, -1)` on {|0>, |-1>}: the hyperfine field acts only in m_s = -1.
    /// The mean field seen by a nucleus then has magnitude omega_I, which places
    /// the polarisation resonances at `2 k pi / omega_I`.
    #[default]
    NvProjector,
    /// `S_z -> diag(+1/2, -1/2)`. The hyperfine field averages to zero under the
    /// pulses and resonances sit at `2 k pi / omega_L`.
    Symmetric,
}

impl HyperfineConvention {
    /// Diagonal of the electron factor multiplying `A . I`, ordered {|0>, |-1>}.
    pub fn electron_weights(self) -> [f64; 2] {
        match self {
            HyperfineConvention::NvProjector => [0.0, -1.0],
            HyperfineConvention::Symmetric => [0.5, -0.5],
        }
    }
}

/// Central electron plus an ordered set of nuclei.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinRegister {
    /// omega_L in rad/us.
    pub larmor: f64,
    pub nuclei: Vec<NuclearSpin>,
    pub b_field_gauss: Option<f64>,
    #[serde(default)]
    pub convention: HyperfineConvention,
}

impl SpinRegister {
    pub fn new(larmor: f64, nuclei: Vec<NuclearSpin>) -> Result<Self, SpinError> {
        let reg = Self { larmor, nuclei, b_field_gauss: None, convention: HyperfineConvention::default() };
        reg.validate()?;
        Ok(reg)
    }

    pub fn with_convention(mut self, convention: HyperfineConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn validate(&self) -> Result<(), SpinError> {
        if !(self.larmor.is_finite() && self.larmor > 0.0) {
            return Err(invalid("larmor_rad_per_us", format!("must be positive, got {}", self.larmor)));
        }
        if self.nuclei.len() > MAX_NUCLEI {
            return Err(SpinError::DimensionOverflow(self.nuclei.len()));
        }
        let mut seen = HashSet::new();
        for (i, n) in self.nuclei.iter().enumerate() {
            if n.label.is_empty() {
                return Err(invalid(format!("nuclei[{i}].label"), "must not be empty"));
            }
            if !seen.insert(n.label.as_str()) {
                return Err(invalid(format!("nuclei[{i}].label"), format!("duplicate label `{}`", n.label)));
            }
            if !n.a_parallel.is_finite() || !n.a_perp.is_finite() {
                return Err(invalid(format!("nuclei[{i}]"), "couplings must be finite"));
            }
            if n.a_perp < 0.0 {
                return Err(invalid(format!("nuclei[{i}].a_perp_khz"), "must be non-negative"));
            }
            if n.a_parallel.abs() >= self.larmor || n.a_perp >= self.larmor {
                log::warn!("nucleus {} is outside the weak-coupling regime (|A| >= omega_L)", n.label);
            }
        }
        Ok(())
    }

    pub fn n_nuclei(&self) -> usize {
        self.nuclei.len()
    }

    /// Joint Hilbert dimension, electron included.
    pub fn dim(&self) -> usize {
        1 << (1 + self.nuclei.len())
    }

    /// Nuclear-only dimension.
    pub fn nuclear_dim(&self) -> usize {
        1 << self.nuclei.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.nuclei.iter().position(|n| n.label == label)
    }

    /// A register with only the named nuclei, in the given order.
    pub fn subset(&self, labels: &[&str]) -> Result<Self, SpinError> {
        let mut nuclei = Vec::with_capacity(labels.len());
        for l in labels {
            let i = self.index_of(l).ok_or_else(|| invalid("nuclei", format!("unknown label `{l}`")))?;
            nuclei.push(self.nuclei[i].clone());
        }
        let reg = Self { nuclei, ..self.clone() };
        reg.validate()?;
        Ok(reg)
    }

    pub fn precession_frequencies(&self) -> Vec<f64> {
        self.nuclei.iter().map(|n| precession_frequency(n, self.larmor)).collect()
    }
}

/// omega_I = sqrt((omega_L - A_z/2)^2 + (A_x/2)^2).
pub fn precession_frequency(nucleus: &NuclearSpin, larmor: f64) -> f64 {
    (larmor - nucleus.a_parallel / 2.0).hypot(nucleus.a_perp / 2.0)
}

/// Spin-1/2 matrices in the {|up>, |down>} basis.
pub mod pauli {
    use super::*;

    pub fn sx() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 0.5, 0.5, 0.0])
    }
    pub fn sy() -> ComplexMatrix {
        let z = C64::new(0.0, 0.0);
        ComplexMatrix::from_vec(2, 2, vec![z, C64::new(0.0, -0.5), C64::new(0.0, 0.5), z])
    }
    pub fn sz() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, -0.5])
    }
    pub fn splus() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0])
    }
    pub fn sminus() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0])
    }
    /// `cos(phi) S_x + sin(phi) S_y`.
    pub fn s_phi(phi: f64) -> ComplexMatrix {
        &sx().scale_real(phi.cos()) + &sy().scale_real(phi.sin())
    }
}

/// Single-site operators embedded in the joint space.
#[derive(Debug, Clone)]
pub struct SiteOperators {
    pub x: ComplexMatrix,
    pub y: ComplexMatrix,
    pub z: ComplexMatrix,
    pub plus: ComplexMatrix,
    pub minus: ComplexMatrix,
}

/// Electron and per-nucleus operators on the joint space. The electron is the
/// first tensor factor, nuclei follow in register order.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    pub dim: usize,
    pub electron: SiteOperators,
    pub nuclei: Vec<SiteOperators>,
}

impl SpinOperatorSet {
    /// Sum of all nuclear `I_z`.
    pub fn total_nuclear_z(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for n in &self.nuclei {
            acc += &n.z;
        }
        acc
    }
}

/// Embed a 2x2 operator at `site` of `n_sites` qubits.
pub fn embed(op: &ComplexMatrix, site: usize, n_sites: usize) -> ComplexMatrix {
    let id = ComplexMatrix::identity(2);
    let mut acc: Option<ComplexMatrix> = None;
    for s in 0..n_sites {
        let f = if s == site { op } else { &id };
        acc = Some(match acc {
            None => f.clone(),
            Some(a) => kron(&a, f),
        });
    }
    acc.expect("at least one site")
}

fn site_ops(site: usize, n_sites: usize) -> SiteOperators {
    SiteOperators {
        x: embed(&pauli::sx(), site, n_sites),
        y: embed(&pauli::sy(), site, n_sites),
        z: embed(&pauli::sz(), site, n_sites),
        plus: embed(&pauli::splus(), site, n_sites),
        minus: embed(&pauli::sminus(), site, n_sites),
    }
}

pub fn build_operators(register: &SpinRegister) -> Result<SpinOperatorSet, SpinError> {
    let n = register.n_nuclei();
    if n > MAX_NUCLEI {
        return Err(SpinError::DimensionOverflow(n));
    }
    let sites = n + 1;
    Ok(SpinOperatorSet {
        dim: register.dim(),
        electron: site_ops(0, sites),
        nuclei: (1..sites).map(|s| site_ops(s, sites)).collect(),
    })
}

/// `H0 = omega_L sum I_z + S_z sum (A_z I_z + A_x I_x)`, with `S_z` per the
/// register's [`HyperfineConvention`].
pub fn static_hamiltonian(register: &SpinRegister, ops: &SpinOperatorSet) -> ComplexMatrix {
    let [w0, w1] = register.convention.electron_weights();
    let e = ComplexMatrix::from_real(2, 2, &[w0, 0.0, 0.0, w1]);
    let ez = embed(&e, 0, register.n_nuclei() + 1);
    let mut h = ComplexMatrix::zeros(ops.dim, ops.dim);
    for (nuc, site) in register.nuclei.iter().zip(&ops.nuclei) {
        h += &site.z.scale_real(register.larmor);
        let field = &site.z.scale_real(nuc.a_parallel) + &site.x.scale_real(nuc.a_perp);
        h += &ez.matmul(&field);
    }
    h
}

/// Nuclear Hamiltonian with the electron frozen in basis state `electron` (0 for |0>, 1 for |-1>).
pub fn conditional_nuclear_hamiltonian(register: &SpinRegister, electron: usize) -> ComplexMatrix {
    assert!(electron < 2);
    let w = register.convention.electron_weights()[electron];
    nuclear_field_hamiltonian(register, |nuc| (register.larmor + w * nuc.a_parallel, w * nuc.a_perp))
}

/// Nuclear Hamiltonian averaged over the two electron states. Under the NV
/// projector this is `sum (omega_L - A_z/2) I_z - (A_x/2) I_x`, whose per-spin
/// splitting is omega_I.
pub fn mean_field_nuclear_hamiltonian(register: &SpinRegister) -> ComplexMatrix {
    let [w0, w1] = register.convention.electron_weights();
    let w = 0.5 * (w0 + w1);
    nuclear_field_hamiltonian(register, |nuc| (register.larmor + w * nuc.a_parallel, w * nuc.a_perp))
}

fn nuclear_field_hamiltonian(register: &SpinRegister, field: impl Fn(&NuclearSpin) -> (f64, f64)) -> ComplexMatrix {
    let n = register.n_nuclei();
    let d = register.nuclear_dim();
    if n == 0 {
        return ComplexMatrix::zeros(1, 1);
    }
    let mut h = ComplexMatrix::zeros(d, d);
    for (k, nuc) in register.nuclei.iter().enumerate() {
        let (bz, bx) = field(nuc);
        h += &embed(&pauli::sz(), k, n).scale_real(bz);
        h += &embed(&pauli::sx(), k, n).scale_real(bx);
    }
    h
}

/// Nucleus entry in a register config file.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusConfig {
    pub label: String,
    pub a_parallel_khz: f64,
    pub a_perp_khz: f64,
}

/// On-disk register description (TOML).
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterConfig {
    pub larmor_rad_per_us: Option<f64>,
    pub b_field_gauss: Option<f64>,
    #[serde(default)]
    pub nuclei: Vec<NucleusConfig>,
}

impl RegisterConfig {
    pub fn into_register(self) -> Result<SpinRegister, SpinError> {
        if let Some(b) = self.b_field_gauss {
            if !(b.is_finite() && b > 0.0) {
                return Err(invalid("b_field_gauss", format!("must be positive, got {b}")));
            }
        }
        let larmor = match (self.larmor_rad_per_us, self.b_field_gauss) {
            (Some(w), _) => {
                if !(w.is_finite() && w > 0.0) {
                    return Err(invalid("larmor_rad_per_us", format!("must be positive, got {w}")));
                }
                w
            }
            (None, Some(b)) => larmor_from_field(b),
            (None, None) => larmor_from_field(DEFAULT_B_FIELD_GAUSS),
        };
        let b_field_gauss = self.b_field_gauss.or(if self.larmor_rad_per_us.is_none() {
            Some(DEFAULT_B_FIELD_GAUSS)
        } else {
            None
        });
        let nuclei = self
            .nuclei
            .into_iter()
            .map(|n| NuclearSpin::from_khz(n.label, n.a_parallel_khz, n.a_perp_khz))
            .collect();
        let reg = SpinRegister { larmor, nuclei, b_field_gauss, convention: HyperfineConvention::default() };
        reg.validate()?;
        Ok(reg)
    }
}

/// Parse a TOML register description. Couplings are given in kHz.
pub fn load_register(source: &str) -> Result<SpinRegister, SpinError> {
    let cfg: RegisterConfig = toml::from_str(source).map_err(|e| {
        let line = e.span().map(|s| source[..s.start.min(source.len())].matches('\n').count() + 1).unwrap_or(0);
        SpinError::ParseError { line, message: e.message().to_string() }
    })?;
    cfg.into_register()
}

/// Hyperfine couplings `(label, A_z kHz, A_x kHz, tabulated omega_I rad/us)` of the
/// 27-nucleus reference register.
pub const REFERENCE_TABLE: [(&str, f64, f64, f64); 27] = [
    ("C0", 213.153, 3.0, 2.04),
    ("C1", -36.308, 26.62, 2.83),
    ("C2", 20.569, 41.51, 2.65),
    ("C3", -11.346, 59.21, 2.75),
    ("C4", 8.029, 21.0, 2.69),
    ("C5", 24.399, 24.81, 2.64),
    ("C6", -48.58, 9.0, 2.86),
    ("C7", 14.58, 10.0, 2.67),
    ("C8", 7.683, 4.0, 2.69),
    ("C9", -20.72, 12.0, 2.78),
    ("C10", -23.22, 13.0, 2.78),
    ("C11", -13.961, 9.0, 2.75),
    ("C12", -31.25, 8.0, 2.81),
    ("C13", -14.07, 13.0, 2.76),
    ("C15", -5.62, 5.0, 2.73),
    ("C16", -19.815, 5.3, 2.77),
    ("C17", -4.66, 7.0, 2.73),
    ("C18", 17.643, 8.6, 2.66),
    ("C20", -8.32, 3.0, 2.74),
    ("C21", -9.79, 5.0, 2.74),
    ("C22", 1.212, 13.0, 2.71),
    ("C23", 2.69, 11.0, 2.70),
    ("C24", -3.177, 2.0, 2.72),
    ("C25", -4.039, 0.5, 2.72),
    ("C26", -4.225, 0.771, 2.72),
    ("C27", -3.873, 1.247, 2.72),
    ("C28", -3.618, 9.472, 2.72),
];

/// Look up a reference nucleus by label.
pub fn reference_nucleus(label: &str) -> Option<NuclearSpin> {
    REFERENCE_TABLE.iter().find(|r| r.0 == label).map(|&(l, az, ax, _)| NuclearSpin::from_khz(l, az, ax))
}

/// Register of named reference nuclei at the default 403 G field.
pub fn reference_register(labels: &[&str]) -> Result<SpinRegister, SpinError> {
    let nuclei = labels
        .iter()
        .map(|l| reference_nucleus(l).ok_or_else(|| invalid("nuclei", format!("unknown reference label `{l}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut reg = SpinRegister::new(larmor_from_field(DEFAULT_B_FIELD_GAUSS), nuclei)?;
    reg.b_field_gauss = Some(DEFAULT_B_FIELD_GAUSS);
    Ok(reg)
}
