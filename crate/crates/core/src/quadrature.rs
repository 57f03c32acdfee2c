//! Composite trapezoid rule on arbitrary ordered nodes.

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// `n + 1` equispaced nodes on `[a, b]`, with the last node pinned to `b`.
pub fn uniform_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..=n).map(|i| if i == n { b } else { a + i as f64 * h }).collect()
}
