use super::matrix::CMatrix;
use super::QuantumError;

/// Matrices whose `max |A − A†|` exceeds this are rejected.
pub const HERMITIAN_TOL: f64 = 1e-10;

const SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// ascending.
fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-32 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// `H = A + iB` is embedded as the real symmetric `[[A, −B], [B, A]]`,
/// whose spectrum is that of `H` with every eigenvalue doubled.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>, QuantumError> {
    let dev = m.hermitian_deviation();
    if !(dev <= HERMITIAN_TOL) {
        return Err(QuantumError::NotHermitian { deviation: dev });
    }
    let n = m.dim();
    let mut big = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            // Symmetrize so the tolerance slack does not leak in.
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            big[i][j] = v.re;
            big[i + n][j + n] = v.re;
            big[i][j + n] = -v.im;
            big[i + n][j] = v.im;
        }
    }
    let doubled = symmetric_eigenvalues(big);
    Ok(doubled.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Largest eigenvalue modulus of a Hermitian matrix.
pub fn operator_norm(m: &CMatrix) -> Result<f64, QuantumError> {
    Ok(hermitian_eigenvalues(m)?
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::matrix::c;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = c(rng.random_range(-2.0..2.0), 0.0);
            for j in i + 1..n {
                let v = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        m
    }

    /// Characteristic polynomial by Faddeev–LeVerrier, highest degree first.
    fn char_poly(m: &CMatrix) -> Vec<f64> {
        let n = m.dim();
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        let mut mk = CMatrix::zeros(n);
        for k in 1..=n {
            let shifted = &mk + &CMatrix::identity(n).scale(*coeffs.last().unwrap());
            mk = m * &shifted;
            coeffs.push(-mk.trace() / k as f64);
        }
        coeffs.iter().map(|z| z.re).collect()
    }

    /// Real roots by sign changes on a fine grid, refined by bisection.
    fn roots_oracle(p: &[f64], radius: f64) -> Vec<f64> {
        let eval = |x: f64| p.iter().fold(0.0, |acc, c| acc * x + c);
        let steps = 200_000;
        let mut out = Vec::new();
        let mut prev = -radius;
        for s in 1..=steps {
            let x = -radius + 2.0 * radius * s as f64 / steps as f64;
            if eval(prev).signum() != eval(x).signum() {
                let (mut lo, mut hi) = (prev, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if eval(lo).signum() == eval(mid).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            prev = x;
        }
        out
    }

    #[test]
    fn identity_norm() {
        assert!((operator_norm(&CMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(operator_norm(&m), Err(QuantumError::NotHermitian { .. })));
    }

    #[test]
    fn matches_characteristic_polynomial_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = random_hermitian(&mut rng, 4);
            let eig = hermitian_eigenvalues(&m).unwrap();
            let roots = roots_oracle(&char_poly(&m), 20.0);
            assert_eq!(roots.len(), 4, "{eig:?}");
            for (a, b) in eig.iter().zip(&roots) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn trace_and_determinant_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let m = random_hermitian(&mut rng, 2);
            let eig = hermitian_eigenvalues(&m).unwrap();
            let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
            assert!((eig[0] + eig[1] - m.trace().re).abs() < 1e-12);
            assert!((eig[0] * eig[1] - det).abs() < 1e-12);
        }
    }
}
