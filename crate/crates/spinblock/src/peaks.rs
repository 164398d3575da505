//! Peak and dip location on sampled traces.

/// Located extremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub y: f64,
    pub index: usize,
}

/// Vertex of the parabola through three samples around `i`. Falls back to the
/// sample itself at the edges or when the points are collinear.
pub fn parabolic_vertex(xs: &[f64], ys: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= xs.len() {
        return (xs[i], ys[i]);
    }
    let (x0, x1, x2) = (xs[i - 1], xs[i], xs[i + 1]);
    let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let a = (d1 - d0) / (x2 - x0);
    if a.abs() < 1e-300 {
        return (x1, y1);
    }
    let b = d0 - a * (x0 + x1);
    let xv = (-b / (2.0 * a)).clamp(x0, x2);
    // Newton form of the interpolant.
    (xv, y0 + d0 * (xv - x0) + a * (xv - x0) * (xv - x1))
}

/// Global maximum with parabolic refinement.
pub fn global_peak(xs: &[f64], ys: &[f64]) -> Option<Extremum> {
    assert_eq!(xs.len(), ys.len());
    let (i, _) = ys
        .iter()
        .enumerate()
        .filter(|(_, y)| y.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let (x, y) = parabolic_vertex(xs, ys, i);
    Some(Extremum { x, y, index: i })
}

/// Global maximum restricted to `lo <= x <= hi`.
pub fn peak_in_window(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> Option<Extremum> {
    let idx: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] >= lo && xs[i] <= hi).collect();
    let &best = idx.iter().max_by(|&&a, &&b| ys[a].total_cmp(&ys[b]))?;
    let (x, y) = parabolic_vertex(xs, ys, best);
    Some(Extremum { x, y, index: best })
}

/// Interior local maxima above `min_height`, refined, in ascending x.
pub fn local_peaks(xs: &[f64], ys: &[f64], min_height: f64) -> Vec<Extremum> {
    (1..ys.len().saturating_sub(1))
        .filter(|&i| ys[i] >= min_height && ys[i] > ys[i - 1] && ys[i] >= ys[i + 1])
        .map(|i| {
            let (x, y) = parabolic_vertex(xs, ys, i);
            Extremum { x, y, index: i }
        })
        .collect()
}

/// Dips where the trace falls below `floor`. Each contiguous below-floor run
/// contributes its refined minimum.
pub fn dips_below(xs: &[f64], ys: &[f64], floor: f64) -> Vec<Extremum> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < ys.len() {
        if ys[i] < floor {
            let start = i;
            while i < ys.len() && ys[i] < floor {
                i += 1;
            }
            let run = start..i;
            let m = run.clone().min_by(|&a, &b| ys[a].total_cmp(&ys[b])).expect("non-empty run");
            let (x, y) = parabolic_vertex(xs, ys, m);
            out.push(Extremum { x, y, index: m });
        } else {
            i += 1;
        }
    }
    out
}

/// Full width at half maximum of the peak containing index `i`, by linear
/// interpolation of the half-height crossings. `None` if either side never
/// drops below half height.
pub fn fwhm(xs: &[f64], ys: &[f64], i: usize) -> Option<f64> {
    let half = ys[i] / 2.0;
    let mut l = i;
    while l > 0 && ys[l] > half {
        l -= 1;
    }
    if ys[l] > half {
        return None;
    }
    let mut r = i;
    while r + 1 < ys.len() && ys[r] > half {
        r += 1;
    }
    if ys[r] > half {
        return None;
    }
    let xl = xs[l] + (half - ys[l]) * (xs[l + 1] - xs[l]) / (ys[l + 1] - ys[l]);
    let xr = xs[r - 1] + (half - ys[r - 1]) * (xs[r] - xs[r - 1]) / (ys[r] - ys[r - 1]);
    Some(xr - xl)
}

/// Evenly spaced grid including both ends.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex_is_exact_for_quadratics() {
        let xs = linspace(0.0, 1.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 5.0 * (x - 0.437).powi(2)).collect();
        let p = global_peak(&xs, &ys).unwrap();
        assert!((p.x - 0.437).abs() < 1e-12);
        assert!((p.y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dips_of_squared_sine() {
        let xs = linspace(0.0, 10.0, 2001);
        let ys: Vec<f64> = xs.iter().map(|x| x.sin().powi(2)).collect();
        let d = dips_below(&xs, &ys, 0.01);
        assert_eq!(d.len(), 4);
        for (k, e) in d.iter().enumerate() {
            assert!((e.x - k as f64 * std::f64::consts::PI).abs() < 1e-6, "{e:?}");
        }
    }

    #[test]
    fn gaussian_fwhm() {
        let xs = linspace(-5.0, 5.0, 4001);
        let ys: Vec<f64> = xs.iter().map(|x| (-x * x / 2.0).exp()).collect();
        let p = global_peak(&xs, &ys).unwrap();
        let w = fwhm(&xs, &ys, p.index).unwrap();
        assert!((w - 2.0 * (2.0 * 2f64.ln()).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn window_and_local() {
        let xs = linspace(0.0, 4.0 * std::f64::consts::PI, 400);
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        assert_eq!(local_peaks(&xs, &ys, 0.5).len(), 2);
        let p = peak_in_window(&xs, &ys, 6.0, 9.0).unwrap();
        assert!((p.x - 2.5 * std::f64::consts::PI).abs() < 1e-3);
        assert!(peak_in_window(&xs, &ys, 100.0, 200.0).is_none());
    }
}
