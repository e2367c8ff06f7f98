//! Dense complex linear algebra kernels used across the crate: LU solves,
//! a Hermitian eigensolver, and a scaling-and-squaring matrix exponential.
//!
//! Everything here is self-contained so the crate carries no BLAS/LAPACK
//! link-time requirements; the largest matrices we exponentiate are the
//! vectorized generators of small master equations (order a few hundred).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

/// Maximum-magnitude entry of `a`.
pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest entry-wise deviation between two matrices.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Induced 1-norm (maximum absolute column sum).
pub fn one_norm(a: &Array2<C64>) -> f64 {
    let (n, m) = a.dim();
    let mut best = 0.0_f64;
    for j in 0..m {
        let mut s = 0.0;
        for i in 0..n {
            s += a[[i, j]].norm();
        }
        best = best.max(s);
    }
    best
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Deviation from Hermiticity, `max |a - a†|`.
pub fn hermiticity_defect(a: &Array2<C64>) -> f64 {
    let (n, m) = a.dim();
    assert_eq!(n, m);
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..m {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Solve `A X = B` in place via LU with partial pivoting. `B` holds the
/// solution on return. Panics on dimension mismatch; returns `None` if `A`
/// is numerically singular.
pub fn lu_solve(a: &Array2<C64>, b: &mut Array2<C64>) -> Option<()> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let mut pivot = k;
        let mut best = lu[[k, k]].norm();
        for i in (k + 1)..n {
            let v = lu[[i, k]].norm();
            if v > best {
                best = v;
                pivot = i;
            }
        }
        if best == 0.0 {
            return None;
        }
        if pivot != k {
            perm.swap(pivot, k);
            for j in 0..n {
                let tmp = lu[[k, j]];
                lu[[k, j]] = lu[[pivot, j]];
                lu[[pivot, j]] = tmp;
            }
        }
        let inv = C64::new(1.0, 0.0) / lu[[k, k]];
        for i in (k + 1)..n {
            let factor = lu[[i, k]] * inv;
            lu[[i, k]] = factor;
            if factor != C64::new(0.0, 0.0) {
                for j in (k + 1)..n {
                    let sub = factor * lu[[k, j]];
                    lu[[i, j]] -= sub;
                }
            }
        }
    }

    let nrhs = b.ncols();
    // Apply the row permutation to B.
    let orig = b.clone();
    for (i, &pi) in perm.iter().enumerate() {
        for j in 0..nrhs {
            b[[i, j]] = orig[[pi, j]];
        }
    }
    // Forward substitution (unit lower triangle).
    for i in 1..n {
        for k in 0..i {
            let f = lu[[i, k]];
            if f != C64::new(0.0, 0.0) {
                for j in 0..nrhs {
                    let sub = f * b[[k, j]];
                    b[[i, j]] -= sub;
                }
            }
        }
    }
    // Back substitution; rows below i are already final solutions.
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let f = lu[[i, k]];
            if f != C64::new(0.0, 0.0) {
                for j in 0..nrhs {
                    let sub = f * b[[k, j]];
                    b[[i, j]] -= sub;
                }
            }
        }
        let inv = C64::new(1.0, 0.0) / lu[[i, i]];
        for j in 0..nrhs {
            b[[i, j]] *= inv;
        }
    }
    Some(())
}

/// Eigenvalues and eigenvectors of a Hermitian matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in ascending order; column `k` of the
/// second return value is the eigenvector for eigenvalue `k`.
pub fn eigh(a: &Array2<C64>) -> (Array1<f64>, Array2<C64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut v: Array2<C64> = Array2::eye(n);
    if n <= 1 {
        let vals = Array1::from(vec![if n == 1 { m[[0, 0]].re } else { 0.0 }; n]);
        return (vals, v);
    }

    let scale = max_abs(&m).max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;
    for _sweep in 0..60 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[[p, q]].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = m[[p, q]];
                if g.norm() <= tol * 1e-2 {
                    continue;
                }
                let alpha = m[[p, p]].re;
                let beta = m[[q, q]].re;
                let d = 0.5 * (alpha - beta);
                let r = (d * d + g.norm_sqr()).sqrt();
                // Eigenvector of the 2x2 block for the larger eigenvalue:
                // (g, r - d) up to normalization; r - d computed stably.
                let rd = if d > 0.0 { g.norm_sqr() / (r + d) } else { r - d };
                let nrm = (g.norm_sqr() + rd * rd).sqrt();
                if nrm == 0.0 {
                    continue;
                }
                let c_p = g / nrm; // component along p for the "+" vector
                let c_q = C64::new(rd / nrm, 0.0); // component along q
                // Unitary J with columns (u+, u-): u+ = (c_p, c_q),
                // u- = (-c_q, c_p*). Update M <- J† M J and V <- V J.
                for i in 0..n {
                    let mip = m[[i, p]];
                    let miq = m[[i, q]];
                    m[[i, p]] = mip * c_p + miq * c_q;
                    m[[i, q]] = -mip * c_q + miq * c_p.conj();
                }
                for j in 0..n {
                    let mpj = m[[p, j]];
                    let mqj = m[[q, j]];
                    m[[p, j]] = c_p.conj() * mpj + c_q * mqj;
                    m[[q, j]] = -c_q * mpj + c_p * mqj;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = vip * c_p + viq * c_q;
                    v[[i, q]] = -vip * c_q + viq * c_p.conj();
                }
                // Clean the rotated pivot pair.
                m[[p, q]] = C64::new(0.0, 0.0);
                m[[q, p]] = C64::new(0.0, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    let sorted_vals = Array1::from(order.iter().map(|&i| vals[i]).collect::<Vec<_>>());
    let mut sorted_vecs = Array2::zeros((n, n));
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[[i, new]] = v[[i, old]];
        }
    }
    (sorted_vals, sorted_vecs)
}

/// Eigenvalues only.
pub fn eigvalsh(a: &Array2<C64>) -> Array1<f64> {
    eigh(a).0
}

/// Hermitian square root via eigendecomposition. Eigenvalues below a small
/// multiple of the largest are treated as exact zeros: the square root is
/// infinitely steep at 0, so round-off noise there would otherwise dominate.
pub fn sqrtm_psd(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let (vals, vecs) = eigh(a);
    let cutoff = 1e-14 * vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut out = Array2::zeros((n, n));
    for k in 0..n {
        let lam = if vals[k] <= cutoff {
            0.0
        } else {
            vals[k].sqrt()
        };
        if lam == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] += vecs[[i, k]] * C64::new(lam, 0.0) * vecs[[j, k]].conj();
            }
        }
    }
    out
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade_lower(a: &Array2<C64>, coeffs: &[f64]) -> Array2<C64> {
    // coeffs = b_0..b_m for the [m/m] approximant, m in {3,5,7,9}
    let n = a.nrows();
    let eye: Array2<C64> = Array2::eye(n);
    let a2 = a.dot(a);
    let mut even = &eye * C64::new(coeffs[0], 0.0);
    let mut odd_poly = &eye * C64::new(coeffs[1], 0.0);
    let mut pow = eye.clone();
    let mut k = 2;
    while k < coeffs.len() {
        pow = pow.dot(&a2);
        even = even + &pow * C64::new(coeffs[k], 0.0);
        if k + 1 < coeffs.len() {
            odd_poly = odd_poly + &pow * C64::new(coeffs[k + 1], 0.0);
        }
        k += 2;
    }
    let u = a.dot(&odd_poly);
    let v = even;
    let mut rhs = &v + &u;
    let lhs = &v - &u;
    lu_solve(&lhs, &mut rhs).expect("Pade solve: singular system");
    rhs
}

/// Matrix exponential `e^A` by Padé approximation with scaling and squaring.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let norm = one_norm(a);

    const THETA3: f64 = 1.495585217958292e-2;
    const THETA5: f64 = 2.539398330063230e-1;
    const THETA7: f64 = 9.504178996162932e-1;
    const THETA9: f64 = 2.097847961257068e0;
    const THETA13: f64 = 5.371920351148152e0;

    if norm <= THETA9 {
        let coeffs: &[f64] = if norm <= THETA3 {
            &[120.0, 60.0, 12.0, 1.0]
        } else if norm <= THETA5 {
            &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]
        } else if norm <= THETA7 {
            &[
                17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
            ]
        } else {
            &[
                17643225600.0,
                8821612800.0,
                2075673600.0,
                302702400.0,
                30270240.0,
                2162160.0,
                110880.0,
                3960.0,
                90.0,
                1.0,
            ]
        };
        return pade_lower(a, coeffs);
    }

    let s = ((norm / THETA13).log2().ceil() as i32).max(0);
    let scaled = a.mapv(|z| z / C64::new(2f64.powi(s), 0.0));
    let eye: Array2<C64> = Array2::eye(n);
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let b = &PADE13;
    let u_inner = &a6 * C64::new(b[13], 0.0)
        + &a4 * C64::new(b[11], 0.0)
        + &a2 * C64::new(b[9], 0.0);
    let u_poly = a6.dot(&u_inner)
        + &a6 * C64::new(b[7], 0.0)
        + &a4 * C64::new(b[5], 0.0)
        + &a2 * C64::new(b[3], 0.0)
        + &eye * C64::new(b[1], 0.0);
    let u = scaled.dot(&u_poly);
    let v_inner = &a6 * C64::new(b[12], 0.0)
        + &a4 * C64::new(b[10], 0.0)
        + &a2 * C64::new(b[8], 0.0);
    let v = a6.dot(&v_inner)
        + &a6 * C64::new(b[6], 0.0)
        + &a4 * C64::new(b[4], 0.0)
        + &a2 * C64::new(b[2], 0.0)
        + &eye * C64::new(b[0], 0.0);
    let mut rhs = &v + &u;
    let lhs = &v - &u;
    lu_solve(&lhs, &mut rhs).expect("Pade solve: singular system");
    let mut f = rhs;
    for _ in 0..s {
        f = f.dot(&f);
    }
    f
}

/// Kronecker product of two dense matrices.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn lu_solves_small_system() {
        let a = array![
            [c(2.0, 0.0), c(1.0, 1.0)],
            [c(0.0, -1.0), c(3.0, 0.0)],
        ];
        let x_true = array![[c(1.0, 2.0)], [c(-1.0, 0.5)]];
        let mut b = a.dot(&x_true);
        lu_solve(&a, &mut b).unwrap();
        assert!(max_abs_diff(&b, &x_true) < 1e-13);
    }

    #[test]
    fn eigh_matches_pauli_y() {
        let sy = array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let (vals, vecs) = eigh(&sy);
        assert!((vals[0] + 1.0).abs() < 1e-13);
        assert!((vals[1] - 1.0).abs() < 1e-13);
        // Residual check A v = lambda v.
        for k in 0..2 {
            let v = vecs.column(k).to_owned();
            let av = sy.dot(&v);
            let lv = v.mapv(|z| z * c(vals[k], 0.0));
            let resid: f64 = av
                .iter()
                .zip(lv.iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(resid < 1e-13);
        }
    }

    #[test]
    fn eigh_random_hermitian_residual() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 12;
        let mut a: Array2<C64> = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let h = (&a + &dagger(&a)).mapv(|z| z * c(0.5, 0.0));
        let (vals, vecs) = eigh(&h);
        // Trace and residual checks.
        let tr: f64 = (0..n).map(|i| h[[i, i]].re).sum();
        let sum: f64 = vals.sum();
        assert!((tr - sum).abs() < 1e-11);
        for k in 0..n {
            let v = vecs.column(k).to_owned();
            let hv = h.dot(&v);
            let resid: f64 = hv
                .iter()
                .zip(v.iter())
                .map(|(x, y)| (x - y * c(vals[k], 0.0)).norm())
                .fold(0.0, f64::max);
            assert!(resid < 1e-11, "residual {resid} for eigenpair {k}");
        }
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z: Array2<C64> = Array2::zeros((4, 4));
        let e = expm(&z);
        assert!(max_abs_diff(&e, &Array2::eye(4)) < 1e-15);
    }

    #[test]
    fn expm_diagonal() {
        let a = Array2::from_diag(&Array1::from(vec![c(0.3, -1.0), c(-2.0, 4.0)]));
        let e = expm(&a);
        assert!((e[[0, 0]] - c(0.3, -1.0).exp()).norm() < 1e-14);
        assert!((e[[1, 1]] - c(-2.0, 4.0).exp()).norm() < 1e-13);
        assert!(e[[0, 1]].norm() < 1e-15);
    }

    #[test]
    fn expm_pauli_rotation() {
        // exp(-i theta sx) = cos(theta) I - i sin(theta) sx
        let sx = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let theta = 7.3; // forces scaling-and-squaring branch after scaling by norm
        let gen = sx.mapv(|z| z * c(0.0, -theta));
        let e = expm(&gen);
        let expect = array![
            [c(theta.cos(), 0.0), c(0.0, -theta.sin())],
            [c(0.0, -theta.sin()), c(theta.cos(), 0.0)],
        ];
        assert!(max_abs_diff(&e, &expect) < 1e-12);
    }

    #[test]
    fn sqrtm_squares_back() {
        let a = array![
            [c(2.0, 0.0), c(0.5, 0.5)],
            [c(0.5, -0.5), c(1.0, 0.0)],
        ];
        let r = sqrtm_psd(&a);
        assert!(max_abs_diff(&r.dot(&r), &a) < 1e-12);
    }
}
