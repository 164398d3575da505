//! Fourier content of the PulsePol modulation functions against direct quadrature.

use std::f64::consts::{PI, TAU};

use spinblock::analytic::{flip_flop_rate, is_flip_flop};
use spinblock::pulses::{average_hamiltonian_numeric, modulation_functions, ModulationFunctions, Protocol, PulseMode};
use spinblock::spin::{precession_frequency, NuclearSpin, SpinRegister};

/// `(2/T) int_0^T f(t) {cos, sin}(2 pi k t / T) dt` by the midpoint rule.
fn quadrature(f: impl Fn(f64) -> f64, period: f64, k: u32) -> (f64, f64) {
    let n = 200_000;
    let h = period / n as f64;
    let w = TAU * k as f64 / period;
    let (mut a, mut b) = (0.0, 0.0);
    for i in 0..n {
        let t = (i as f64 + 0.5) * h;
        a += f(t) * (w * t).cos();
        b += f(t) * (w * t).sin();
    }
    (2.0 * a * h / period, 2.0 * b * h / period)
}

#[test]
fn coefficients_match_quadrature() {
    let m = modulation_functions(1.3).unwrap();
    for k in 1..=12 {
        let (a1, b1) = quadrature(|t| m.f1(t), m.period(), k);
        let (a2, b2) = quadrature(|t| m.f2(t), m.period(), k);
        assert!((a1 - ModulationFunctions::a1(k)).abs() < 1e-4, "a1 k={k}: {a1} vs {}", ModulationFunctions::a1(k));
        assert!((b1 - ModulationFunctions::b1(k)).abs() < 1e-4, "b1 k={k}");
        assert!((a2 - ModulationFunctions::a2(k)).abs() < 1e-4, "a2 k={k}");
        assert!((b2 - ModulationFunctions::b2(k)).abs() < 1e-4, "b2 k={k}");
    }
}

#[test]
fn third_harmonic_rate_from_quadrature() {
    let m = modulation_functions(1.0).unwrap();
    let (a, b) = quadrature(|t| m.f1(t), m.period(), 3);
    let a_perp = 0.37;
    let g = a_perp * (a * a + b * b).sqrt() / 4.0;
    assert!((g - a_perp * (2f64.sqrt() + 2.0) / (6.0 * PI)).abs() < 1e-6);
    assert!((flip_flop_rate(a_perp, 3) - g).abs() < 1e-6);
}

#[test]
fn series_converges_to_square_wave() {
    let m = modulation_functions(2.0).unwrap();
    // Mid-slot points, away from the jumps.
    for slot in 0..8 {
        let t = (slot as f64 + 0.5) * m.tau / 2.0;
        assert!((m.f1_series(t, 4001) - m.f1(t)).abs() < 2e-3, "slot {slot}");
        assert!((m.f2_series(t, 4001) - m.f2(t)).abs() < 2e-3, "slot {slot}");
    }
}

#[test]
fn numeric_average_reproduces_rate_on_flip_flop_harmonics() {
    let n = NuclearSpin::from_khz("a", -11.3, 59.0);
    let reg = SpinRegister::new(2.7107, vec![n.clone()]).unwrap();
    let w = precession_frequency(&n, reg.larmor);
    for k in [3, 7, 11] {
        assert!(is_flip_flop(k));
        let t = 2.0 * k as f64 * PI / w;
        let seq = Protocol::PulsePol.build_period(t, k, PulseMode::Ideal).unwrap();
        let h = average_hamiltonian_numeric(&seq, &reg, w).unwrap();
        let g = h[(1, 2)].norm();
        assert!((g / flip_flop_rate(n.a_perp, k) - 1.0).abs() < 1e-3, "k={k}: {g}");
        // No flip-flip term at these harmonics.
        assert!(h[(0, 3)].norm() < 1e-3 * g, "k={k}");
    }
}

/// Fourier coefficients of a piecewise-constant function, integrated slot by slot.
fn exact_coefficients(f: impl Fn(f64) -> f64, tau: f64, k: u32) -> (f64, f64) {
    let period = 4.0 * tau;
    let w = TAU * k as f64 / period;
    let (mut a, mut b) = (0.0, 0.0);
    for slot in 0..8 {
        let (t0, t1) = (slot as f64 * tau / 2.0, (slot + 1) as f64 * tau / 2.0);
        let v = f(0.5 * (t0 + t1));
        a += v * ((w * t1).sin() - (w * t0).sin()) / w;
        b -= v * ((w * t1).cos() - (w * t0).cos()) / w;
    }
    (2.0 * a / period, 2.0 * b / period)
}

#[test]
fn coefficients_match_exact_segment_integrals() {
    let m = modulation_functions(0.9).unwrap();
    for k in 1..=21 {
        let (a1, b1) = exact_coefficients(|t| m.f1(t), m.tau, k);
        let (a2, b2) = exact_coefficients(|t| m.f2(t), m.tau, k);
        let want = [ModulationFunctions::a1(k), ModulationFunctions::b1(k), ModulationFunctions::a2(k), ModulationFunctions::b2(k)];
        for (got, want) in [a1, b1, a2, b2].into_iter().zip(want) {
            assert!((got - want).abs() < 1e-10, "k={k}: {got} vs {want}");
        }
    }
}

#[test]
fn modest_partial_sum_is_already_close() {
    let m = modulation_functions(1.0).unwrap();
    for slot in 0..8 {
        let t = (slot as f64 + 0.5) * m.tau / 2.0;
        assert!((m.f1_series(t, 201) - m.f1(t)).abs() < 0.02, "slot {slot}");
        assert!((m.f2_series(t, 201) - m.f2(t)).abs() < 0.02, "slot {slot}");
    }
}

#[test]
fn detuning_appears_as_longitudinal_term() {
    let n = NuclearSpin::from_khz("a", -11.3, 59.0);
    let reg = SpinRegister::new(2.7107, vec![n.clone()]).unwrap();
    let w = precession_frequency(&n, reg.larmor);
    let delta = 0.002;
    let t = 6.0 * PI / (w - delta);
    let seq = Protocol::PulsePol.build_period(t, 3, PulseMode::Ideal).unwrap();
    let frame = seq.protocol_frequency();
    let h = average_hamiltonian_numeric(&seq, &reg, frame).unwrap();
    // Nuclear I_z coefficient from the |0,up> and |0,down> diagonal entries.
    let iz = (h[(0, 0)] - h[(1, 1)]).re;
    assert!((iz / delta - 1.0).abs() < 0.02, "{iz} vs {delta}");
}
