//! Ghost-point finite differences on a staggered grid.

use super::EdgeBlock;

/// Grid of `n` interior points plus one ghost point beyond each end.
pub(super) fn edge_block(length: f64, n: usize, potential: &dyn Fn(f64) -> f64) -> EdgeBlock {
    let h = length / n as f64;
    let x_ext: Vec<f64> = (0..n + 2).map(|k| (k as f64 - 0.5) * h).collect();
    let x_int = x_ext[1..=n].to_vec();
    let h2 = 1.0 / (h * h);

    let mut l = Vec::with_capacity(3 * n);
    let mut p = Vec::with_capacity(n);
    for j in 0..n {
        let k = j + 1;
        l.push((j, k - 1, h2));
        l.push((j, k, -2.0 * h2 - potential(x_ext[k])));
        l.push((j, k + 1, h2));
        p.push((j, k, 1.0));
    }

    let mut d = Vec::with_capacity(3 * (n + 2));
    let c = 0.5 / h;
    d.extend([(0, 0, -3.0 * c), (0, 1, 4.0 * c), (0, 2, -c)]);
    for k in 1..=n {
        d.push((k, k - 1, -c));
        d.push((k, k + 1, c));
    }
    let last = n + 1;
    d.extend([(last, last, 3.0 * c), (last, last - 1, -4.0 * c), (last, last - 2, c)]);

    let mut weights = vec![h; n + 2];
    weights[0] = 0.0;
    weights[last] = 0.0;

    EdgeBlock {
        x_ext,
        x_int,
        step: Some(h),
        l,
        p,
        d,
        weights,
        value: [vec![(0, 0.5), (1, 0.5)], vec![(n, 0.5), (last, 0.5)]],
        outward: [vec![(1, 1.0 / h), (0, -1.0 / h)], vec![(n, 1.0 / h), (last, -1.0 / h)]],
    }
}
