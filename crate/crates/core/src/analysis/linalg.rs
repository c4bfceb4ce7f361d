//! Dense helpers on column-major data: pivoted Householder QR and a one-sided
//! Jacobi SVD. Sizes here are small (tens of columns), so clarity wins.

use alloc::vec;
use alloc::vec::Vec;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Orthonormal basis (as columns) for the span of `cols`, dropping directions
/// whose pivot falls below `rel_tol` times the largest one.
pub(crate) fn orthonormal_basis(cols: &[Vec<f64>], rel_tol: f64) -> Vec<Vec<f64>> {
    let n = cols.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<f64>> = cols.to_vec();
    let d = a.len();
    let mut reflectors: Vec<Vec<f64>> = Vec::new();
    let mut first_pivot = 0.0;
    for k in 0..d.min(n) {
        let (p, _) =
            (k..d)
                .map(|j| (j, dot(&a[j][k..], &a[j][k..])))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        a.swap(k, p);
        let alpha = norm(&a[k][k..]);
        if k == 0 {
            first_pivot = alpha;
        }
        if alpha == 0.0 || alpha <= rel_tol * first_pivot {
            break;
        }
        let mut v = a[k][k..].to_vec();
        v[0] += if v[0] >= 0.0 { alpha } else { -alpha };
        let vn = norm(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        for col in a.iter_mut().skip(k) {
            let proj = 2.0 * dot(&v, &col[k..]);
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= proj * vi;
            }
        }
        reflectors.push(v);
    }
    (0..reflectors.len())
        .map(|j| {
            let mut q = vec![0.0; n];
            q[j] = 1.0;
            for (k, v) in reflectors.iter().enumerate().rev() {
                let proj = 2.0 * dot(v, &q[k..]);
                for (x, vi) in q[k..].iter_mut().zip(v) {
                    *x -= proj * vi;
                }
            }
            q
        })
        .collect()
}

/// One-sided Jacobi on the columns of `b`. Returns the column norms (the
/// singular values) and the accumulated right rotation, both sorted by
/// decreasing singular value.
pub(crate) fn jacobi_svd(mut b: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let q = b.len();
    let mut v: Vec<Vec<f64>> = (0..q)
        .map(|j| {
            let mut e = vec![0.0; q];
            e[j] = 1.0;
            e
        })
        .collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..q {
            for j in i + 1..q {
                let alpha = dot(&b[i], &b[i]);
                let beta = dot(&b[j], &b[j]);
                let gamma = dot(&b[i], &b[j]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut b, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = b.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]).then(x.cmp(&y)));
    (
        order.iter().map(|&k| sigma[k]).collect(),
        order.iter().map(|&k| v[k].clone()).collect(),
    )
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    for r in 0..cols[i].len() {
        let (x, y) = (cols[i][r], cols[j][r]);
        cols[i][r] = c * x - s * y;
        cols[j][r] = s * x + c * y;
    }
}
