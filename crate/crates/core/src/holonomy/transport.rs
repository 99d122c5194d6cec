use nalgebra::DMatrix;

use super::{connection_coefficients, TorsionField};
use crate::chart::Chart;
use crate::error::{Error, Result};

fn generator(chart: &Chart, torsion: &TorsionField, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
    let gamma = connection_coefficients(chart, torsion, x, 0.0)?;
    let d = chart.dim();
    let mut a = DMatrix::zeros(d, d);
    for (g, &va) in gamma.iter().zip(v) {
        if va != 0.0 {
            a += g * va;
        }
    }
    Ok(-a)
}

/// Parallel transport around the closed polyline through `vertices` (the
/// last vertex connects back to the first), RK4 with `steps` per segment.
/// Solves `P' = −Γ(ẋ) P`.
pub fn loop_transport(
    chart: &Chart,
    torsion: &TorsionField,
    vertices: &[Vec<f64>],
    steps: usize,
) -> Result<DMatrix<f64>> {
    for v in vertices {
        chart.check_interior(v, 0.0)?;
    }
    let d = chart.dim();
    let mut p = DMatrix::identity(d, d);
    let n = vertices.len();
    let steps = steps.max(1);
    for s in 0..n {
        let start = &vertices[s];
        let end = &vertices[(s + 1) % n];
        let vel: Vec<f64> = start.iter().zip(end).map(|(a, b)| b - a).collect();
        let at = |t: f64| -> Vec<f64> { start.iter().zip(&vel).map(|(a, v)| a + t * v).collect() };
        let dt = 1.0 / steps as f64;
        for k in 0..steps {
            let t = k as f64 * dt;
            let a0 = generator(chart, torsion, &at(t), &vel)?;
            let am = generator(chart, torsion, &at(t + 0.5 * dt), &vel)?;
            let a1 = generator(chart, torsion, &at(t + dt), &vel)?;
            let k1 = &a0 * &p;
            let k2 = &am * (&p + &k1 * (0.5 * dt));
            let k3 = &am * (&p + &k2 * (0.5 * dt));
            let k4 = &a1 * (&p + &k3 * dt);
            p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
    }
    Ok(p)
}

/// Coordinate square of side `eps` at `p` in the `(a, b)` plane, traversed
/// along `b` first so that `log P ≈ eps² R_ab`.
pub fn square_loop(p: &[f64], a: usize, b: usize, eps: f64) -> Vec<Vec<f64>> {
    let shift = |da: f64, db: f64| {
        let mut v = p.to_vec();
        v[a] += da;
        v[b] += db;
        v
    };
    vec![shift(0.0, 0.0), shift(0.0, eps), shift(eps, eps), shift(eps, 0.0)]
}

/// `log P` by the Mercator series; `P` must be close to the identity.
pub fn matrix_log(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = p.nrows();
    let x = p - DMatrix::identity(d, d);
    if x.norm() >= 0.5 {
        return Err(Error::InvalidSpec(format!(
            "transport too far from identity for the log series (|P − I| = {:.3e})",
            x.norm()
        )));
    }
    let mut out = DMatrix::zeros(d, d);
    let mut power = x.clone();
    for n in 1..200 {
        let term = &power / n as f64;
        if n % 2 == 1 {
            out += &term;
        } else {
            out -= &term;
        }
        if term.norm() < 1e-18 {
            break;
        }
        power = &power * &x;
    }
    Ok(out)
}

/// Least-squares slope of `ln |log P|` against `ln ε` over square loops in
/// the `(a, b)` plane; curvature-dominated loops give 2.
pub fn loop_slope(
    chart: &Chart,
    torsion: &TorsionField,
    p: &[f64],
    (a, b): (usize, usize),
    sizes: &[f64],
    steps: usize,
) -> Result<f64> {
    let pts = sizes
        .iter()
        .map(|&eps| {
            let hol = loop_transport(chart, torsion, &square_loop(p, a, b, eps), steps)?;
            Ok((eps.ln(), matrix_log(&hol)?.norm().ln()))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
    let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|q| (q.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
