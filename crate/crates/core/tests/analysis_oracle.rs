//! CCA checked against a covariance/Cholesky/symmetric-eigen route, which
//! shares no code with the QR + SVD implementation.

use xmodal_core::analysis::{cca, layer_ranking, pwcca, AnalysisError, RepMatrix};
use xmodal_core::rng;

type Mat = Vec<Vec<f64>>; // row-major

fn random(n: usize, d: usize, seed: u64) -> Mat {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|_| (0..d).map(|_| rng::normal(&mut r)).collect())
        .collect()
}

fn rep(m: &Mat) -> RepMatrix {
    RepMatrix::new(m.len(), m[0].len(), m.concat()).unwrap()
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum())
                .collect()
        })
        .collect()
}

fn transpose(a: &Mat) -> Mat {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

fn center(a: &Mat) -> Mat {
    let n = a.len() as f64;
    let means: Vec<f64> = (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    a.iter()
        .map(|r| r.iter().zip(&means).map(|(v, m)| v - m).collect())
        .collect()
}

fn cholesky(s: &Mat) -> Mat {
    let d = s.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let partial: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (s[i][i] - partial).sqrt();
            } else {
                l[i][j] = (s[i][j] - partial) / l[j][j];
            }
        }
    }
    l
}

/// Solves `L z = b` for lower-triangular `L`.
fn forward_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; b.len()];
    for i in 0..b.len() {
        let partial: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (b[i] - partial) / l[i][i];
    }
    z
}

/// Solves `Lᵀ z = b`.
fn backward_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let d = b.len();
    let mut z = vec![0.0; d];
    for i in (0..d).rev() {
        let partial: f64 = (i + 1..d).map(|k| l[k][i] * z[k]).sum();
        z[i] = (b[i] - partial) / l[i][i];
    }
    z
}

/// Classical two-sided Jacobi for a symmetric matrix: (eigenvalues, eigenvectors as columns).
fn sym_eigen(mut a: Mat) -> (Vec<f64>, Mat) {
    let d = a.len();
    let mut v: Mat = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..200 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..d).map(|i| a[i][i]).collect(), v)
}

struct OracleCca {
    rho: Vec<f64>,
    pwcca: f64,
}

fn oracle(x: &Mat, y: &Mat) -> OracleCca {
    let (xc, yc) = (center(x), center(y));
    let (xt, yt) = (transpose(&xc), transpose(&yc));
    let sxx = mul(&xt, &xc);
    let syy = mul(&yt, &yc);
    let sxy = mul(&xt, &yc);
    let (lx, ly) = (cholesky(&sxx), cholesky(&syy));
    // Row j of Sxy Ly⁻ᵀ is Ly⁻¹ applied to row j of Sxy.
    let right: Mat = sxy.iter().map(|row| forward_solve(&ly, row)).collect();
    let k_cols: Mat = (0..right[0].len())
        .map(|j| forward_solve(&lx, &right.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect();
    let k = transpose(&k_cols);
    let kkt = mul(&k, &transpose(&k));
    let (vals, vecs) = sym_eigen(kkt);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let m = x[0].len().min(y[0].len());
    let rho: Vec<f64> = order
        .iter()
        .take(m)
        .map(|&i| vals[i].max(0.0).sqrt().min(1.0))
        .collect();
    let alpha: Vec<f64> = order
        .iter()
        .take(m)
        .map(|&i| {
            let u: Vec<f64> = vecs.iter().map(|r| r[i]).collect();
            let a = backward_solve(&lx, &u);
            let h: Vec<f64> = xc
                .iter()
                .map(|row| row.iter().zip(&a).map(|(p, q)| p * q).sum())
                .collect();
            (0..xc[0].len())
                .map(|j| {
                    h.iter()
                        .zip(&xc)
                        .map(|(hi, row)| hi * row[j])
                        .sum::<f64>()
                        .abs()
                })
                .sum()
        })
        .collect();
    let total: f64 = alpha.iter().sum();
    let pwcca = alpha.iter().zip(&rho).map(|(a, r)| a * r).sum::<f64>() / total;
    OracleCca { rho, pwcca }
}

fn noisy_mix(x: &Mat, dy: usize, noise: f64, seed: u64) -> Mat {
    let a = random(x[0].len(), dy, seed);
    let e = random(x.len(), dy, seed + 1);
    mul(x, &a)
        .iter()
        .zip(&e)
        .map(|(r, er)| r.iter().zip(er).map(|(v, n)| v + noise * n).collect())
        .collect()
}

#[test]
fn hand_sized_case_matches_dense_eigen_oracle() {
    let x = random(50, 3, 11);
    let y = noisy_mix(&x, 4, 0.8, 12);
    let want = oracle(&x, &y);
    let got = cca(&rep(&x), &rep(&y)).unwrap();
    assert_eq!(got.len(), 3);
    for (g, w) in got.iter().zip(&want.rho) {
        assert!((g - w).abs() < 1e-8, "{g} vs {w}");
    }
    let score = pwcca(&rep(&x), &rep(&y)).unwrap();
    assert!(
        (score - want.pwcca).abs() < 1e-8,
        "{score} vs {}",
        want.pwcca
    );
}

#[test]
fn oracle_agreement_over_random_shapes() {
    for seed in 0..20u64 {
        let dx = 2 + (seed % 4) as usize;
        let dy = 1 + (seed % 5) as usize;
        let x = random(30 + seed as usize, dx, 100 + seed);
        let y = noisy_mix(&x, dy, 0.5 + seed as f64 * 0.1, 200 + seed);
        let want = oracle(&x, &y);
        let got = cca(&rep(&x), &rep(&y)).unwrap();
        for (g, w) in got.iter().zip(&want.rho) {
            assert!((g - w).abs() < 1e-8, "seed {seed}: {g} vs {w}");
        }
        let score = pwcca(&rep(&x), &rep(&y)).unwrap();
        assert!((score - want.pwcca).abs() < 1e-8, "seed {seed}");
    }
}

#[test]
fn invertible_transform_gives_unit_correlations() {
    let x = random(60, 4, 3);
    let a = random(4, 4, 4);
    let y = mul(&x, &a);
    for r in cca(&rep(&x), &rep(&y)).unwrap() {
        assert!((r - 1.0).abs() < 1e-8);
    }
}

#[test]
fn independent_data_has_small_correlations() {
    let x = random(10_000, 10, 5);
    let y = random(10_000, 10, 6);
    let got = cca(&rep(&x), &rep(&y)).unwrap();
    assert_eq!(got.len(), 10);
    assert!(got.iter().all(|&r| r < 0.2), "{got:?}");
    let want = oracle(&x, &y);
    for (g, w) in got.iter().zip(&want.rho) {
        assert!((g - w).abs() < 1e-8);
    }
}

#[test]
fn correlations_are_symmetric() {
    let x = random(40, 3, 7);
    let y = noisy_mix(&x, 5, 1.0, 8);
    let xy = cca(&rep(&x), &rep(&y)).unwrap();
    let yx = cca(&rep(&y), &rep(&x)).unwrap();
    for (a, b) in xy.iter().zip(&yx) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn pwcca_invariant_under_transform_of_y_and_bounded_by_rho() {
    let x = random(80, 4, 9);
    let y = noisy_mix(&x, 4, 1.0, 10);
    let base = pwcca(&rep(&x), &rep(&y)).unwrap();
    let moved = mul(&y, &random(4, 4, 13));
    let after = pwcca(&rep(&x), &rep(&moved)).unwrap();
    assert!((base - after).abs() < 1e-6);
    let rho = cca(&rep(&x), &rep(&y)).unwrap();
    let (lo, hi) = (rho[rho.len() - 1], rho[0]);
    assert!(base >= lo - 1e-12 && base <= hi + 1e-12);
}

#[test]
fn ranking_follows_shared_subspace_size() {
    let n = 400;
    let z = random(n, 5, 20);
    let layers: Vec<RepMatrix> = (0..=5usize)
        .map(|shared| {
            let noise = random(n, 5, 30 + shared as u64);
            let m: Mat = (0..n)
                .map(|i| {
                    (0..5)
                        .map(|j| if j < shared { z[i][j] } else { noise[i][j] })
                        .collect()
                })
                .collect();
            rep(&m)
        })
        .collect();
    let ranked = layer_ranking(&layers, &rep(&z)).unwrap();
    let order: Vec<usize> = ranked.iter().map(|r| r.0).collect();
    assert_eq!(order, vec![5, 4, 3, 2, 1, 0]);

    let noise = rep(&random(n, 5, 99));
    let ranked = layer_ranking(&[noise, rep(&z)], &rep(&z)).unwrap();
    assert_eq!(ranked[0].0, 1);
}

#[test]
fn rank_deficiency_is_handled_and_small_n_rejected() {
    let x = random(30, 3, 1);
    let dup: Mat = x.iter().map(|r| vec![r[0], r[1], r[0] + r[1]]).collect();
    assert_eq!(cca(&rep(&dup), &rep(&x)).unwrap().len(), 2);
    let tiny = random(3, 3, 1);
    assert!(matches!(
        cca(&rep(&tiny), &rep(&tiny)),
        Err(AnalysisError::TooFewSamples { .. })
    ));
}
