//! Dense complex solve with scaled partial pivoting.

use super::Complex;

/// Pivots smaller than this, relative to their row's largest original
/// entry, mark the system as singular.
pub const PIVOT_THRESHOLD: f64 = 1e-14;

/// Solves `A X = B` in place for several right-hand sides.
///
/// `a` is row-major `n×n`, `b` is row-major `n×m`. Returns `None` when the
/// matrix is numerically singular or the result is not finite.
pub fn solve(mut a: Vec<Vec<Complex>>, mut b: Vec<Vec<Complex>>) -> Option<Vec<Vec<Complex>>> {
    let n = a.len();
    debug_assert!(a.iter().all(|r| r.len() == n));
    debug_assert_eq!(b.len(), n);
    let m = b.first().map_or(0, Vec::len);

    let mut scale: Vec<f64> = a.iter().map(|row| row.iter().map(|z| z.norm()).fold(0.0, f64::max)).collect();
    if scale.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return None;
    }

    for k in 0..n {
        let (pivot_row, ratio) =
            (k..n)
                .map(|i| (i, a[i][k].norm() / scale[i]))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(ratio >= PIVOT_THRESHOLD) {
            return None;
        }
        if pivot_row != k {
            a.swap(pivot_row, k);
            b.swap(pivot_row, k);
            scale.swap(pivot_row, k);
        }
        let pivot = a[k][k];
        for i in (k + 1)..n {
            let factor = a[i][k] / pivot;
            if factor.re == 0.0 && factor.im == 0.0 {
                continue;
            }
            a[i][k] = Complex::new(0.0, 0.0);
            for j in (k + 1)..n {
                let t = a[k][j];
                a[i][j] -= factor * t;
            }
            for j in 0..m {
                let t = b[k][j];
                b[i][j] -= factor * t;
            }
        }
    }

    for k in (0..n).rev() {
        for j in 0..m {
            let mut acc = b[k][j];
            for c in (k + 1)..n {
                acc -= a[k][c] * b[c][j];
            }
            b[k][j] = acc / a[k][k];
        }
    }

    if b.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(b)
    } else {
        None
    }
}
