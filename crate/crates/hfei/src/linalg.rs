//! Small dense linear-algebra routines used by the filter and samplers.
//!
//! Everything here operates on modest matrices (posterior precision
//! blocks, innovation covariances, companion polynomials), so plain
//! Cholesky and a Durand–Kerner root finder are enough; no external
//! LAPACK backend is pulled in.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix. Fails if a pivot is not strictly positive.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Build(format!(
            "cholesky needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::Numeric(format!(
                        "matrix not positive definite (pivot {sum:e} at {i})"
                    )));
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        for k in 0..i {
            let v = x[k];
            x[i] -= l[[i, k]] * v;
        }
        x[i] /= l[[i, i]];
    }
    x
}

/// Solves `L' x = b` for lower-triangular `L`.
pub fn solve_lower_t(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let v = x[k];
            x[i] -= l[[k, i]] * v;
        }
        x[i] /= l[[i, i]];
    }
    x
}

/// Solves `A x = b` with `A` symmetric positive definite.
pub fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let l = cholesky(a)?;
    Ok(solve_lower_t(&l, &solve_lower(&l, b)))
}

/// Inverse of a symmetric positive-definite matrix.
pub fn inv_spd(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let l = cholesky(a)?;
    let mut inv = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut e = Array1::<f64>::zeros(n);
        e[j] = 1.0;
        let col = solve_lower_t(&l, &solve_lower(&l, &e));
        inv.column_mut(j).assign(&col);
    }
    // Clean up asymmetric round-off.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (inv[[i, j]] + inv[[j, i]]);
            inv[[i, j]] = v;
            inv[[j, i]] = v;
        }
    }
    Ok(inv)
}

/// Log-determinant of a symmetric positive-definite matrix.
pub fn ln_det_spd(a: &Array2<f64>) -> Result<f64> {
    let l = cholesky(a)?;
    Ok(2.0 * (0..a.nrows()).map(|i| l[[i, i]].ln()).sum::<f64>())
}

/// Symmetrizes a matrix in place: `A ← (A + A')/2`.
pub fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    symmetrize_flat(a.as_slice_mut().expect("contiguous"), n);
}

/// Flat-buffer version of [`symmetrize`] for a row-major n × n matrix.
pub fn symmetrize_flat(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
}

/// Minimal complex number for the polynomial root finder.
#[derive(Clone, Copy, Debug)]
struct Cpx {
    re: f64,
    im: f64,
}

impl Cpx {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }

    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }

    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    fn div(self, o: Self) -> Self {
        let d = o.re * o.re + o.im * o.im;
        Self::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }

    fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Moduli of the roots of the monic polynomial
/// `z^p - c[0] z^(p-1) - ... - c[p-1]`, i.e. the eigenvalues of the
/// companion matrix of an AR(p) with coefficients `c`.
///
/// Uses Durand–Kerner iteration with fixed deterministic starting points;
/// adequate for the short lag polynomials that appear here (p < 12).
pub fn companion_root_moduli(coefs: &[f64]) -> Vec<f64> {
    let p = coefs.len();
    if p == 0 {
        return Vec::new();
    }
    if p == 1 {
        return vec![coefs[0].abs()];
    }
    // Monic polynomial coefficients a[k] for z^k, k = 0..p, a[p] = 1.
    let mut a = vec![0.0f64; p + 1];
    a[p] = 1.0;
    for (h, &c) in coefs.iter().enumerate() {
        a[p - 1 - h] = -c;
    }
    let eval = |z: Cpx| -> Cpx {
        let mut acc = Cpx::new(a[p], 0.0);
        for k in (0..p).rev() {
            acc = acc.mul(z).add(Cpx::new(a[k], 0.0));
        }
        acc
    };
    // Start on a circle of radius slightly above 1 with irrational angles
    // so no two starting points coincide with each other or with real roots.
    let mut roots: Vec<Cpx> = (0..p)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / p as f64 + 0.4;
            Cpx::new(1.3 * ang.cos(), 1.3 * ang.sin())
        })
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..p {
            let mut denom = Cpx::new(1.0, 0.0);
            for j in 0..p {
                if j != i {
                    denom = denom.mul(roots[i].sub(roots[j]));
                }
            }
            let step = eval(roots[i]).div(denom);
            roots[i] = roots[i].sub(step);
            moved = moved.max(step.abs());
        }
        if moved < 1e-13 {
            break;
        }
    }
    roots.iter().map(|r| r.abs()).collect()
}

/// True when all companion eigenvalues of the AR coefficient vector lie
/// strictly inside the unit circle.
pub fn is_stationary(coefs: &[f64]) -> bool {
    if coefs.iter().all(|c| *c == 0.0) {
        return true;
    }
    companion_root_moduli(coefs).iter().all(|m| *m < 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn cholesky_reconstructs() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let l = cholesky(&a).unwrap();
        let back = l.dot(&l.t());
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(back[[i, j]], a[[i, j]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(cholesky(&a).is_err());
    }

    #[test]
    fn spd_solve_roundtrip() {
        let a = array![[4.0, 2.0], [2.0, 5.0]];
        let b = array![1.0, -3.0];
        let x = solve_spd(&a, &b).unwrap();
        let ax = a.dot(&x);
        assert_abs_diff_eq!(ax[0], b[0], epsilon = 1e-12);
        assert_abs_diff_eq!(ax[1], b[1], epsilon = 1e-12);
    }

    #[test]
    fn inv_spd_matches_solve() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let inv = inv_spd(&a).unwrap();
        let id = a.dot(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(id[[i, j]], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ln_det_known_value() {
        let a = array![[2.0, 0.0], [0.0, 8.0]];
        assert_abs_diff_eq!(ln_det_spd(&a).unwrap(), (16.0f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn ar1_root_is_coefficient() {
        let m = companion_root_moduli(&[0.7]);
        assert_abs_diff_eq!(m[0], 0.7, epsilon = 1e-12);
        assert!(is_stationary(&[0.95]));
        assert!(!is_stationary(&[1.01]));
    }

    #[test]
    fn ar2_known_factorization() {
        // (1 - 0.5L)(1 - 0.3L) = 1 - 0.8L + 0.15L^2: roots 0.5, 0.3.
        let mut m = companion_root_moduli(&[0.8, -0.15]);
        m.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(m[0], 0.3, epsilon = 1e-8);
        assert_abs_diff_eq!(m[1], 0.5, epsilon = 1e-8);
    }

    #[test]
    fn random_walk_is_not_stationary() {
        assert!(!is_stationary(&[1.0]));
        assert!(!is_stationary(&[0.5, 0.5]));
    }

    #[test]
    fn higher_order_roots_match_construction() {
        // Construct a degree-5 polynomial from known roots and recover
        // their moduli.
        let true_roots = [0.9, -0.6, 0.3, 0.2, -0.1];
        let mut poly = vec![1.0];
        for r in true_roots {
            let mut next = vec![0.0; poly.len() + 1];
            for (k, &c) in poly.iter().enumerate() {
                next[k] += c * (-r);
                next[k + 1] += c;
            }
            poly = next;
        }
        // poly[k] multiplies z^k and poly[5] = 1; convert to AR form.
        let coefs: Vec<f64> = (0..5).map(|h| -poly[4 - h]).collect();
        let mut m = companion_root_moduli(&coefs);
        m.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<f64> = true_roots.iter().map(|r| r.abs()).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in m.iter().zip(want.iter()) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-7);
        }
    }

    proptest! {
        // AR(2) stationarity triangle: |c2| < 1, c2 + c1 < 1, c2 - c1 < 1.
        #[test]
        fn ar2_stationarity_matches_triangle(c1 in -2.0f64..2.0, c2 in -1.5f64..1.5) {
            let triangle = c2.abs() < 1.0 && c2 + c1 < 1.0 && c2 - c1 < 1.0;
            // Stay away from the boundary where root moduli sit at 1.0.
            let margin = (1.0 - c2.abs()).abs().min((1.0 - (c2 + c1)).abs())
                .min((1.0 - (c2 - c1)).abs());
            prop_assume!(margin > 1e-3);
            prop_assert_eq!(is_stationary(&[c1, c2]), triangle);
        }
    }
}
