//! Small dense linear solves for the Newton steps of the ranking fit.

use alloc::vec::Vec;

/// Solves `a x = b` for a row-major `k x k` matrix by Gaussian elimination
/// with partial pivoting. Returns `None` for a (numerically) singular system.
pub(crate) fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    debug_assert_eq!(a.len(), k * k);
    for col in 0..k {
        let pivot = (col..k).max_by(|&r, &s| a[r * k + col].abs().total_cmp(&a[s * k + col].abs()))?;
        if a[pivot * k + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for c in 0..k {
                a.swap(pivot * k + c, col * k + c);
            }
            b.swap(pivot, col);
        }
        for r in col + 1..k {
            let factor = a[r * k + col] / a[col * k + col];
            if factor != 0.0 {
                for c in col..k {
                    a[r * k + c] -= factor * a[col * k + c];
                }
                b[r] -= factor * b[col];
            }
        }
    }
    let mut x = alloc::vec![0.0; k];
    for r in (0..k).rev() {
        let tail: f64 = (r + 1..k).map(|c| a[r * k + c] * x[c]).sum();
        x[r] = (b[r] - tail) / a[r * k + r];
    }
    Some(x)
}
