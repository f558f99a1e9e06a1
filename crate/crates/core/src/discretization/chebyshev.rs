//! Rectangular Chebyshev collocation: unknowns on second-kind points,
//! equations on first-kind points.

use std::f64::consts::PI;

use super::EdgeBlock;

pub(super) fn edge_block(length: f64, n: usize, potential: &dyn Fn(f64) -> f64) -> EdgeBlock {
    let m = n + 1;
    let x_ext: Vec<f64> = (0..=m)
        .map(|k| 0.5 * length * (1.0 - (k as f64 * PI / m as f64).cos()))
        .collect();
    let x_int: Vec<f64> = (1..=n)
        .map(|k| 0.5 * length * (1.0 - ((2 * k - 1) as f64 * PI / (2 * n) as f64).cos()))
        .collect();
    let bw = barycentric_weights(m);
    let dm = differentiation_matrix(&x_ext, &bw);
    let pm = resampling_matrix(&x_ext, &bw, &x_int);

    let np = m + 1;
    // P (D² − diag V)
    let mut d2 = vec![0.0; np * np];
    for i in 0..np {
        for k in 0..np {
            let a = dm[i * np + k];
            if a != 0.0 {
                for j in 0..np {
                    d2[i * np + j] += a * dm[k * np + j];
                }
            }
        }
        d2[i * np + i] -= potential(x_ext[i]);
    }
    let mut l = Vec::with_capacity(n * np);
    let mut p = Vec::with_capacity(n * np);
    for r in 0..n {
        for j in 0..np {
            let mut s = 0.0;
            for k in 0..np {
                s += pm[r * np + k] * d2[k * np + j];
            }
            l.push((r, j, s));
            p.push((r, j, pm[r * np + j]));
        }
    }
    let mut d = Vec::with_capacity(np * np);
    for i in 0..np {
        for j in 0..np {
            d.push((i, j, dm[i * np + j]));
        }
    }
    let outward = [
        (0..np).map(|j| (j, dm[j])).collect(),
        (0..np).map(|j| (j, -dm[m * np + j])).collect(),
    ];
    let weights = clenshaw_curtis(m).into_iter().map(|w| 0.5 * length * w).collect();

    EdgeBlock {
        x_ext,
        x_int,
        step: None,
        l,
        p,
        d,
        weights,
        value: [vec![(0, 1.0)], vec![(m, 1.0)]],
        outward,
    }
}

/// Barycentric weights of the `m + 1` second-kind points, equal to the
/// difference products `1 / Π_{l≠k}(x_k − x_l)` up to a common factor.
fn barycentric_weights(m: usize) -> Vec<f64> {
    (0..=m)
        .map(|k| {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == m {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Row-major differentiation matrix; diagonal by the negative row sum.
fn differentiation_matrix(x: &[f64], w: &[f64]) -> Vec<f64> {
    let np = x.len();
    let mut d = vec![0.0; np * np];
    for i in 0..np {
        let mut diag = 0.0;
        for j in 0..np {
            if i != j {
                let v = w[j] / w[i] / (x[i] - x[j]);
                d[i * np + j] = v;
                diag -= v;
            }
        }
        d[i * np + i] = diag;
    }
    d
}

/// Row-major barycentric interpolation from nodes `x` to points `y`.
fn resampling_matrix(x: &[f64], w: &[f64], y: &[f64]) -> Vec<f64> {
    let np = x.len();
    let scale = x[np - 1] - x[0];
    let mut p = vec![0.0; y.len() * np];
    for (r, &yr) in y.iter().enumerate() {
        let row = &mut p[r * np..(r + 1) * np];
        if let Some(j) = x.iter().position(|&xj| (yr - xj).abs() <= 1e-14 * scale) {
            row[j] = 1.0;
            continue;
        }
        let mut sum = 0.0;
        for j in 0..np {
            let t = w[j] / (yr - x[j]);
            row[j] = t;
            sum += t;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    p
}

/// Clenshaw–Curtis weights on `[-1, 1]` for the points `cos(kπ/m)`.
fn clenshaw_curtis(m: usize) -> Vec<f64> {
    let mf = m as f64;
    let mut w = vec![0.0; m + 1];
    let mut v = vec![1.0; m.saturating_sub(1)];
    let theta = |i: usize| (i as f64) * PI / mf;
    if m % 2 == 0 {
        w[0] = 1.0 / (mf * mf - 1.0);
        w[m] = w[0];
        for k in 1..m / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * k as f64 * theta(i + 1)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (mf * theta(i + 1)).cos() / (mf * mf - 1.0);
        }
    } else {
        w[0] = 1.0 / (mf * mf);
        w[m] = w[0];
        for k in 1..=(m - 1) / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * k as f64 * theta(i + 1)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for i in 1..m {
        w[i] = 2.0 * v[i - 1] / mf;
    }
    w
}
