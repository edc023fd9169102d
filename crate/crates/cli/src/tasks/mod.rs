//! One module per subcommand.

pub mod decay_study;
pub mod envelope;
pub mod oracle;
pub mod propagation;
pub mod rates;
pub mod simulate;

/// Log-spaced grid with exact endpoints.
pub(crate) fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == points {
                hi
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}
