//! Floquet eigenphase spectra of the one-period unitary and avoided-crossing
//! detection.
//!
//! Eigenphases are tracked across the period grid by eigenvector continuity.
//! Ideal pulse sequences leave the electron nearly degenerate, so eigenvectors
//! whose phases lie within [`CLUSTER_TOL`] of each other are treated as one
//! subspace: previous-point vectors are projected into it and re-orthonormalised,
//! which keeps branches smooth where the solver's basis choice is arbitrary.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

use crate::engine::SequenceSpec;
use crate::linalg::{unitary_eigensolve, wrap_phase, ComplexMatrix, LinalgError};
use crate::peaks::parabolic_vertex;
use crate::pulses::{Propagator, PulseError};
use crate::spin::SpinRegister;

/// Adjacent-point overlap below which an interval is bisected.
pub const CONTINUITY_THRESHOLD: f64 = 0.9;
/// Maximum bisection depth per grid interval.
pub const MAX_REFINE_DEPTH: u32 = 6;
/// Eigenphases closer than this (rad) are stitched as one subspace.
pub const CLUSTER_TOL: f64 = 1e-3;
/// Minimum participation for a nucleus to be attributed to a crossing.
pub const PARTICIPATION_THRESHOLD: f64 = 0.2;
/// Minimum prominence (rad) of a gap minimum.
pub const CROSSING_PROMINENCE: f64 = 1e-4;
/// Largest Hilbert dimension accepted.
pub const MAX_DIM: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloquetError {
    #[error("period grid must be strictly increasing with at least one point")]
    InvalidGrid,
    #[error("Hilbert dimension {0} exceeds {MAX_DIM}")]
    TooLarge(usize),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Eigenphase branches on a period grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloquetSpectrum {
    /// Periods in us, including points inserted by refinement.
    pub t_grid: Vec<f64>,
    /// `branches[j][b]`: phase of branch b at `t_grid[j]`, in (-pi, pi].
    pub branches: Vec<Vec<f64>>,
    /// `overlaps[j][b]`: continuity of branch b from `t_grid[j-1]`; 1 at j = 0.
    pub overlaps: Vec<Vec<f64>>,
    /// `nuclear_z[j][b][n]`: `<I_z>` of nucleus n in branch b.
    pub nuclear_z: Vec<Vec<Vec<f64>>>,
    /// True for points added by bisection.
    pub refined: Vec<bool>,
    pub labels: Vec<String>,
    /// Intervals still below the continuity threshold after full refinement.
    pub unresolved_intervals: usize,
}

impl FloquetSpectrum {
    pub fn dim(&self) -> usize {
        self.branches.first().map_or(0, |b| b.len())
    }

    pub fn branch(&self, b: usize) -> Vec<f64> {
        self.branches.iter().map(|p| p[b]).collect()
    }

    /// Smallest adjacent-point overlap over all branches and intervals.
    pub fn min_overlap(&self) -> f64 {
        self.overlaps.iter().skip(1).flatten().fold(1.0, |m: f64, &o| m.min(o))
    }

    /// CSV with header `T_us,tau_us,branch_index,eigenphase_rad`.
    pub fn write_csv<W: Write>(&self, w: &mut W, period_over_tau: f64) -> std::io::Result<()> {
        writeln!(w, "T_us,tau_us,branch_index,eigenphase_rad")?;
        for (t, phases) in self.t_grid.iter().zip(&self.branches) {
            for (b, p) in phases.iter().enumerate() {
                writeln!(w, "{t:.9},{:.9},{b},{p:.12}", t / period_over_tau)?;
            }
        }
        Ok(())
    }
}

/// Minimum-gap location of two branches that repel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvoidedCrossing {
    pub t_center: f64,
    pub gap: f64,
    pub branch_pair: (usize, usize),
    /// Labels with participation >= [`PARTICIPATION_THRESHOLD`], strongest first.
    pub participating_spins: Vec<String>,
    /// Participation of every nucleus, register order.
    pub participation: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Point {
    period: f64,
    phases: Vec<f64>,
    vectors: ComplexMatrix,
    eigenvalues: Vec<C64>,
}

fn decompose(prop: &Propagator, spec: &SequenceSpec, period: f64) -> Result<Point, FloquetError> {
    let u = prop.period_unitary(&spec.build(period)?)?;
    let eig = unitary_eigensolve(&u)?;
    let phases = eig.eigenphases();
    Ok(Point { period, phases, vectors: eig.eigenvectors, eigenvalues: eig.eigenvalues })
}

/// Groups of indices whose phases are within `tol` on the circle.
fn phase_clusters(phases: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let n = phases.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| phases[a].total_cmp(&phases[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if phases[i] - phases[*g.last().unwrap()] < tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    if groups.len() > 1 {
        let first = phases[groups[0][0]];
        let last = phases[*groups.last().unwrap().last().unwrap()];
        if first + 2.0 * PI - last < tol {
            let tail = groups.pop().unwrap();
            groups[0].extend(tail);
        }
    }
    groups
}

fn inner(a: &ComplexMatrix, i: usize, b: &ComplexMatrix, k: usize) -> C64 {
    (0..a.rows()).map(|r| a[(r, i)].conj() * b[(r, k)]).sum()
}

/// Align `next` to `prev`. Returns the stitched point (columns in branch
/// order) and the per-branch overlaps.
fn stitch(prev: &Point, next: &Point) -> (Point, Vec<f64>) {
    let d = prev.phases.len();
    let clusters = phase_clusters(&next.phases, CLUSTER_TOL);
    // Weight of previous branch i inside cluster c.
    let mut scores: Vec<(f64, usize, usize)> = Vec::with_capacity(d * clusters.len());
    let ov: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|k| inner(&prev.vectors, i, &next.vectors, k).norm_sqr()).collect()).collect();
    for i in 0..d {
        for (c, members) in clusters.iter().enumerate() {
            let s: f64 = members.iter().map(|&k| ov[i][k]).sum();
            scores.push((s, i, c));
        }
    }
    scores.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut slots: Vec<usize> = clusters.iter().map(|m| m.len()).collect();
    let mut owner: Vec<Option<(usize, f64)>> = vec![None; d];
    for (s, i, c) in scores {
        if owner[i].is_none() && slots[c] > 0 {
            owner[i] = Some((c, s));
            slots[c] -= 1;
        }
    }

    let mut vectors = ComplexMatrix::zeros(d, d);
    let mut phases = vec![0.0; d];
    let mut overlaps = vec![0.0; d];
    for (c, members) in clusters.iter().enumerate() {
        let mut assigned: Vec<(usize, f64)> =
            (0..d).filter_map(|i| owner[i].filter(|o| o.0 == c).map(|o| (i, o.1))).collect();
        assigned.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        if members.len() == 1 {
            let (i, s) = assigned[0];
            let k = members[0];
            for r in 0..d {
                vectors[(r, i)] = next.vectors[(r, k)];
            }
            phases[i] = next.phases[k];
            overlaps[i] = s.sqrt();
            continue;
        }
        // Project previous vectors into the cluster span and orthonormalise.
        let mut basis: Vec<Vec<C64>> = Vec::new();
        let mut spare = members.iter().copied();
        for &(i, s) in &assigned {
            let mut v = vec![C64::new(0.0, 0.0); d];
            for &k in members {
                let c = inner(&next.vectors, k, &prev.vectors, i);
                for r in 0..d {
                    v[r] += c * next.vectors[(r, k)];
                }
            }
            let mut candidate = Some(v);
            loop {
                let mut v = match candidate.take() {
                    Some(v) => v,
                    None => match spare.next() {
                        Some(k) => next.vectors.column(k),
                        None => break,
                    },
                };
                for b in &basis {
                    let c: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                    for r in 0..d {
                        v[r] -= c * b[r];
                    }
                }
                let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                if n > 1e-6 {
                    for x in v.iter_mut() {
                        *x /= n;
                    }
                    basis.push(v);
                    break;
                }
            }
            let v = basis.last().expect("cluster span has room").clone();
            // Rayleigh quotient through the cluster's eigenvalues.
            let mut lam = C64::new(0.0, 0.0);
            for &k in members {
                let c: C64 = (0..d).map(|r| next.vectors[(r, k)].conj() * v[r]).sum();
                lam += next.eigenvalues[k] * c.norm_sqr();
            }
            for r in 0..d {
                vectors[(r, i)] = v[r];
            }
            phases[i] = wrap_phase(lam.arg());
            overlaps[i] = s.sqrt().min(1.0);
        }
    }
    let eigenvalues = phases.iter().map(|&p| C64::from_polar(1.0, p)).collect();
    (Point { period: next.period, phases, vectors, eigenvalues }, overlaps)
}

fn nuclear_z_of(point: &Point, n_nuclei: usize) -> Vec<Vec<f64>> {
    let d = point.phases.len();
    (0..d)
        .map(|b| {
            (0..n_nuclei)
                .map(|n| {
                    (0..d)
                        .map(|r| {
                            let bit = (r >> (n_nuclei - 1 - n)) & 1;
                            let s = if bit == 0 { 0.5 } else { -0.5 };
                            s * point.vectors[(r, b)].norm_sqr()
                        })
                        .sum()
                })
                .collect()
        })
        .collect()
}

struct Builder<'a> {
    prop: &'a Propagator,
    spec: &'a SequenceSpec,
    n_nuclei: usize,
    out: FloquetSpectrum,
}

impl Builder<'_> {
    fn push(&mut self, p: &Point, overlaps: Vec<f64>, refined: bool) {
        self.out.t_grid.push(p.period);
        self.out.branches.push(p.phases.clone());
        self.out.overlaps.push(overlaps);
        self.out.nuclear_z.push(nuclear_z_of(p, self.n_nuclei));
        self.out.refined.push(refined);
    }

    /// Stitch `next` onto `prev`, bisecting while continuity is poor. Returns
    /// the aligned `next`.
    fn advance(&mut self, prev: &Point, next: Point, depth: u32) -> Result<Point, FloquetError> {
        let (aligned, ov) = stitch(prev, &next);
        let worst = ov.iter().cloned().fold(1.0, f64::min);
        if worst >= CONTINUITY_THRESHOLD {
            self.push(&aligned, ov, depth > 0);
            return Ok(aligned);
        }
        if depth >= MAX_REFINE_DEPTH {
            self.out.unresolved_intervals += 1;
            log::debug!("continuity {worst:.3} unresolved near T = {:.6} us", next.period);
            self.push(&aligned, ov, depth > 0);
            return Ok(aligned);
        }
        let mid = decompose(self.prop, self.spec, 0.5 * (prev.period + next.period))?;
        let mid_aligned = self.advance(prev, mid, depth + 1)?;
        self.advance(&mid_aligned, next, depth + 1)
    }
}

/// Eigenphase spectrum of the one-period unitary on `t_grid` (periods, us).
pub fn compute_spectrum(register: &SpinRegister, spec: &SequenceSpec, t_grid: &[f64]) -> Result<FloquetSpectrum, FloquetError> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FloquetError::InvalidGrid);
    }
    if register.dim() > MAX_DIM {
        return Err(FloquetError::TooLarge(register.dim()));
    }
    let prop = Propagator::new(register)?;
    let raw = t_grid.par_iter().map(|&t| decompose(&prop, spec, t)).collect::<Result<Vec<_>, _>>()?;
    let mut b = Builder {
        prop: &prop,
        spec,
        n_nuclei: register.n_nuclei(),
        out: FloquetSpectrum {
            t_grid: Vec::new(),
            branches: Vec::new(),
            overlaps: Vec::new(),
            nuclear_z: Vec::new(),
            refined: Vec::new(),
            labels: register.nuclei.iter().map(|n| n.label.clone()).collect(),
            unresolved_intervals: 0,
        },
    };
    let mut iter = raw.into_iter();
    let mut prev = iter.next().expect("non-empty grid");
    b.push(&prev, vec![1.0; prev.phases.len()], false);
    for next in iter {
        prev = b.advance(&prev, next, 0)?;
    }
    Ok(b.out)
}

/// Interior local minima of pairwise branch gaps below `gap_threshold` (rad)
/// that do not change sign (true crossings do) and involve at least one
/// nucleus. Centres minimise the quasi-energy gap `gap / T`; the reported gap
/// is the phase gap there.
pub fn find_crossings(spectrum: &FloquetSpectrum, gap_threshold: f64) -> Vec<AvoidedCrossing> {
    let n_pts = spectrum.t_grid.len();
    let d = spectrum.dim();
    let mut out = Vec::new();
    if n_pts < 3 {
        return out;
    }
    let xs = &spectrum.t_grid;
    for a in 0..d {
        for b in a + 1..d {
            let signed: Vec<f64> = spectrum.branches.iter().map(|p| wrap_phase(p[a] - p[b])).collect();
            let gap: Vec<f64> = signed.iter().map(|s| s.abs()).collect();
            // Locate on the quasi-energy gap; the phase gap carries an extra
            // factor of T that drags its minimum off resonance.
            let quasi: Vec<f64> = gap.iter().zip(xs).map(|(g, t)| g / t).collect();
            for i in 1..n_pts - 1 {
                if !(gap[i] < gap_threshold && quasi[i] <= quasi[i - 1] && quasi[i] < quasi[i + 1]) {
                    continue;
                }
                if signed[i - 1].signum() != signed[i + 1].signum() || signed[i] == 0.0 {
                    continue;
                }
                if prominence(&quasi, i) * xs[i] < CROSSING_PROMINENCE {
                    continue;
                }
                let participation: Vec<f64> = (0..spectrum.labels.len())
                    .map(|n| {
                        let za = spectrum.nuclear_z[i][a][n].abs();
                        let zb = spectrum.nuclear_z[i][b][n].abs();
                        (1.0 - (za + zb)).clamp(0.0, 1.0)
                    })
                    .collect();
                let mut ranked: Vec<usize> =
                    (0..participation.len()).filter(|&n| participation[n] >= PARTICIPATION_THRESHOLD).collect();
                if ranked.is_empty() {
                    continue;
                }
                ranked.sort_by(|&x, &y| participation[y].total_cmp(&participation[x]).then(x.cmp(&y)));
                let (t_center, q) = parabolic_vertex(xs, &quasi, i);
                out.push(AvoidedCrossing {
                    t_center,
                    gap: (q * t_center).max(0.0),
                    branch_pair: (a, b),
                    participating_spins: ranked.iter().map(|&n| spectrum.labels[n].clone()).collect(),
                    participation,
                });
            }
        }
    }
    out.sort_by(|x, y| x.t_center.total_cmp(&y.t_center).then(x.branch_pair.cmp(&y.branch_pair)));
    out
}

fn prominence(y: &[f64], i: usize) -> f64 {
    let mut left = y[i];
    for j in (0..i).rev() {
        if y[j] < y[i] {
            break;
        }
        left = left.max(y[j]);
    }
    let mut right = y[i];
    for &v in &y[i + 1..] {
        if v < y[i] {
            break;
        }
        right = right.max(v);
    }
    left.min(right) - y[i]
}

/// Merge crossings that share a leading spin and lie within `t_tol` of each
/// other, keeping the smallest gap. Useful for summaries where spectator
/// spins duplicate the same resonance across their own states.
pub fn merge_crossings(crossings: &[AvoidedCrossing], t_tol: f64) -> Vec<AvoidedCrossing> {
    let mut out: Vec<AvoidedCrossing> = Vec::new();
    for c in crossings {
        let lead = &c.participating_spins[0];
        match out.iter_mut().find(|o| &o.participating_spins[0] == lead && (o.t_center - c.t_center).abs() <= t_tol) {
            Some(o) if c.gap < o.gap => *o = c.clone(),
            Some(_) => {}
            None => out.push(c.clone()),
        }
    }
    out
}
