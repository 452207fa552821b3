//! Dense complex kernels shared by the spectral layer: a cyclic Jacobi
//! eigensolver for Hermitian matrices, LU inversion with partial pivoting,
//! and Householder QR. All routines are deterministic (fixed sweep and
//! pivot orders) so repeated runs on identical input are bit-identical.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Off-diagonal convergence tolerance for the Jacobi sweep, relative to the
/// Frobenius norm of the input.
pub(crate) const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;

#[inline]
pub(crate) fn idx(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

pub(crate) fn matmul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[idx(n, i, k)];
            if aik == Complex64::ZERO {
                continue;
            }
            for j in 0..n {
                out[idx(n, i, j)] += aik * b[idx(n, k, j)];
            }
        }
    }
    out
}

pub(crate) fn adjoint(a: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            out[idx(n, i, j)] = a[idx(n, j, i)].conj();
        }
    }
    out
}

pub(crate) fn frobenius(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// matrix. Column `j` of `vectors` (entries `vectors[i*n + j]`) is the
/// eigenvector for `eigenvalues[j]`.
#[derive(Debug, Clone)]
pub(crate) struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Complex64>,
    pub n: usize,
}

/// Cyclic complex Jacobi iteration. The input is assumed Hermitian; only the
/// Hermitian part participates (callers symmetrize beforehand).
pub(crate) fn hermitian_eigen(a: &[Complex64], n: usize) -> Result<HermitianEigen> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        v[idx(n, i, i)] = Complex64::ONE;
    }
    let scale = frobenius(&m);
    if scale == 0.0 || n == 1 {
        let eigenvalues = (0..n).map(|i| m[idx(n, i, i)].re).collect();
        return Ok(HermitianEigen {
            eigenvalues,
            vectors: v,
            n,
        });
    }
    let tol = JACOBI_OFF_TOL * scale;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[idx(n, i, j)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[idx(n, p, q)];
                let r = apq.norm();
                if r <= tol / (n as f64) {
                    continue;
                }
                let phase = apq / r; // e^{iθ}
                let app = m[idx(n, p, p)].re;
                let aqq = m[idx(n, q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Plane rotation R: R_pp = c, R_pq = s,
                // R_qp = -s·conj(phase), R_qq = c·conj(phase).
                let rqp = -s * phase.conj();
                let rqq = c * phase.conj();

                // Columns: M ← M·R.
                for i in 0..n {
                    let mip = m[idx(n, i, p)];
                    let miq = m[idx(n, i, q)];
                    m[idx(n, i, p)] = mip * c + miq * rqp;
                    m[idx(n, i, q)] = mip * s + miq * rqq;
                }
                // Rows: M ← R*·M.
                for j in 0..n {
                    let mpj = m[idx(n, p, j)];
                    let mqj = m[idx(n, q, j)];
                    m[idx(n, p, j)] = mpj * c + mqj * rqp.conj();
                    m[idx(n, q, j)] = mpj * s + mqj * rqq.conj();
                }
                // Clean the pivot pair exactly.
                m[idx(n, p, q)] = Complex64::ZERO;
                m[idx(n, q, p)] = Complex64::ZERO;
                m[idx(n, p, p)] = Complex64::new(app - t * r, 0.0);
                m[idx(n, q, q)] = Complex64::new(aqq + t * r, 0.0);

                // Accumulate V ← V·R.
                for i in 0..n {
                    let vip = v[idx(n, i, p)];
                    let viq = v[idx(n, i, q)];
                    v[idx(n, i, p)] = vip * c + viq * rqp;
                    v[idx(n, i, q)] = vip * s + viq * rqq;
                }
            }
        }
    }
    if !converged {
        // One final check after the last sweep.
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[idx(n, i, j)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() > tol {
            return Err(Error::NoConvergence {
                what: "Jacobi eigensolver",
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[idx(n, i, i)].re).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| diag[j]).collect();
    let mut vectors = vec![Complex64::ZERO; n * n];
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[idx(n, i, new_j)] = v[idx(n, i, old_j)];
        }
    }
    Ok(HermitianEigen {
        eigenvalues,
        vectors,
        n,
    })
}

impl HermitianEigen {
    /// Rebuild V·f(Λ)·V*.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::ZERO; n * n];
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let flambda = f(lambda);
            if flambda == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[idx(n, i, k)];
                if vik == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    out[idx(n, i, j)] += flambda * vik * self.vectors[idx(n, j, k)].conj();
                }
            }
        }
        out
    }
}

/// Inverse by LU with partial pivoting. For (block-)triangular input the
/// pivot order never swaps, so the inverse preserves the triangular pattern
/// exactly. Errors only on an effectively zero pivot; callers wanting a
/// conditioning guard check singular values first.
pub(crate) fn lu_inverse(a: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    let mut lu = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = lu.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Singular {
            smallest_singular_value: 0.0,
        });
    }
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[idx(n, k, k)].norm();
        for i in (k + 1)..n {
            let mag = lu[idx(n, i, k)].norm();
            if mag > best {
                best = mag;
                piv = i;
            }
        }
        if best <= 1e-15 * scale {
            return Err(Error::Singular {
                smallest_singular_value: best,
            });
        }
        if piv != k {
            for j in 0..n {
                lu.swap(idx(n, k, j), idx(n, piv, j));
            }
            perm.swap(k, piv);
        }
        let pivot = lu[idx(n, k, k)];
        for i in (k + 1)..n {
            let factor = lu[idx(n, i, k)] / pivot;
            lu[idx(n, i, k)] = factor;
            if factor == Complex64::ZERO {
                continue;
            }
            for j in (k + 1)..n {
                let sub = factor * lu[idx(n, k, j)];
                lu[idx(n, i, j)] -= sub;
            }
        }
    }
    // Solve A·x = e_m for every m.
    let mut inv = vec![Complex64::ZERO; n * n];
    let mut col = vec![Complex64::ZERO; n];
    for m in 0..n {
        for i in 0..n {
            col[i] = if perm[i] == m {
                Complex64::ONE
            } else {
                Complex64::ZERO
            };
        }
        // Forward: L y = P b.
        for i in 0..n {
            let mut acc = col[i];
            for j in 0..i {
                if lu[idx(n, i, j)] != Complex64::ZERO && col[j] != Complex64::ZERO {
                    acc -= lu[idx(n, i, j)] * col[j];
                }
            }
            col[i] = acc;
        }
        // Back: U x = y.
        for i in (0..n).rev() {
            let mut acc = col[i];
            for j in (i + 1)..n {
                if col[j] != Complex64::ZERO {
                    acc -= lu[idx(n, i, j)] * col[j];
                }
            }
            col[i] = acc / lu[idx(n, i, i)];
        }
        for i in 0..n {
            inv[idx(n, i, m)] = col[i];
        }
    }
    Ok(inv)
}

/// Solve the dense linear system A·x = b in place (used for the normal
/// equations). Same pivoting as [`lu_inverse`].
pub(crate) fn lu_solve(a: &[Complex64], b: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    assert_eq!(b.len(), n);
    let inv = lu_inverse(a, n)?;
    let mut x = vec![Complex64::ZERO; n];
    for i in 0..n {
        for j in 0..n {
            x[i] += inv[idx(n, i, j)] * b[j];
        }
    }
    Ok(x)
}

/// Householder QR: returns (Q, R) with Q unitary and R upper triangular with
/// exactly zero entries below the diagonal. No diagonal normalization here;
/// callers fix phases as needed.
pub(crate) fn householder_qr(a: &[Complex64], n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut r = a.to_vec();
    let mut q = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        q[idx(n, i, i)] = Complex64::ONE;
    }
    let mut v = vec![Complex64::ZERO; n];
    for k in 0..n {
        let mut normx_sq = 0.0;
        for i in k..n {
            normx_sq += r[idx(n, i, k)].norm_sqr();
        }
        let normx = normx_sq.sqrt();
        if normx == 0.0 {
            continue;
        }
        let x0 = r[idx(n, k, k)];
        let alpha = if x0.norm() == 0.0 {
            Complex64::new(-normx, 0.0)
        } else {
            -(x0 / x0.norm()) * normx
        };
        for i in k..n {
            v[i] = r[idx(n, i, k)];
        }
        v[k] -= alpha;
        let vnorm_sq: f64 = (k..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm_sq <= f64::MIN_POSITIVE {
            continue;
        }
        let beta = 2.0 / vnorm_sq;
        // R ← H R, H = I − β v v*.
        for j in k..n {
            let mut w = Complex64::ZERO;
            for i in k..n {
                w += v[i].conj() * r[idx(n, i, j)];
            }
            let w = beta * w;
            for i in k..n {
                let delta = v[i] * w;
                r[idx(n, i, j)] -= delta;
            }
        }
        // Q ← Q H.
        for i in 0..n {
            let mut w = Complex64::ZERO;
            for m in k..n {
                w += q[idx(n, i, m)] * v[m];
            }
            let w = beta * w;
            for m in k..n {
                let delta = w * v[m].conj();
                q[idx(n, i, m)] -= delta;
            }
        }
        r[idx(n, k, k)] = alpha;
        for i in (k + 1)..n {
            r[idx(n, i, k)] = Complex64::ZERO;
        }
    }
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> Vec<Complex64> {
        // Small deterministic pseudo-random fill, symmetrized.
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                a[idx(n, i, j)] = c(next(), next());
            }
        }
        let at = adjoint(&a, n);
        for i in 0..n * n {
            a[i] = 0.5 * (a[i] + at[i]);
        }
        a
    }

    #[test]
    fn jacobi_diagonal_input() {
        let a = vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)];
        let eig = hermitian_eigen(&a, 2).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_complex_2x2_known() {
        // [[0, -i],[i, 0]] has eigenvalues ±1.
        let a = vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)];
        let eig = hermitian_eigen(&a, 2).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-13);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn jacobi_reconstruction_and_orthogonality() {
        for n in [2usize, 3, 5, 8] {
            let a = random_hermitian(n, 7 + n as u64);
            let eig = hermitian_eigen(&a, n).unwrap();
            let rebuilt = eig.apply(|x| x);
            let fro = frobenius(&a).max(1e-30);
            let err: f64 = a
                .iter()
                .zip(rebuilt.iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12 * fro.max(1.0), "n={n} err={err:e}");
            // V*V = I.
            let vt = adjoint(&eig.vectors, n);
            let gram = matmul(&vt, &eig.vectors, n);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { Complex64::ONE } else { Complex64::ZERO };
                    assert!((gram[idx(n, i, j)] - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn lu_inverse_roundtrip() {
        let n = 5;
        let mut a = random_hermitian(n, 99);
        for i in 0..n {
            a[idx(n, i, i)] += c(3.0, 0.0);
        }
        let inv = lu_inverse(&a, n).unwrap();
        let prod = matmul(&a, &inv, n);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { Complex64::ONE } else { Complex64::ZERO };
                assert!((prod[idx(n, i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lu_inverse_of_upper_triangular_stays_upper() {
        let n = 4;
        let mut a = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for j in i..n {
                a[idx(n, i, j)] = c(1.0 + (i + j) as f64, if i == j { 0.0 } else { 0.5 });
            }
        }
        let inv = lu_inverse(&a, n).unwrap();
        for i in 0..n {
            for j in 0..i {
                assert_eq!(inv[idx(n, i, j)], Complex64::ZERO);
            }
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let a = vec![Complex64::ZERO; 4];
        assert!(matches!(lu_inverse(&a, 2), Err(Error::Singular { .. })));
    }

    #[test]
    fn qr_reconstruction_unitarity_pattern() {
        let n = 5;
        let a = random_hermitian(n, 1234);
        let (q, r) = householder_qr(&a, n);
        // R exactly upper.
        for i in 0..n {
            for j in 0..i {
                assert_eq!(r[idx(n, i, j)], Complex64::ZERO);
            }
        }
        // Q unitary.
        let qt = adjoint(&q, n);
        let gram = matmul(&qt, &q, n);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { Complex64::ONE } else { Complex64::ZERO };
                assert!((gram[idx(n, i, j)] - want).norm() < 1e-13);
            }
        }
        // QR = A.
        let prod = matmul(&q, &r, n);
        let err: f64 = a
            .iter()
            .zip(prod.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-13);
    }
}
