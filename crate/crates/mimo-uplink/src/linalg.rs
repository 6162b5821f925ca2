//! Minimal complex linear algebra: exactly the kernels the rate engines need.
//!
//! Matrices are column-major `Complex64` buffers. The only O(n^3) products go
//! through `matrixmultiply::zgemm`; the Cholesky factorization and triangular
//! solves are small (K x K) and written directly.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex64::ZERO; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Scale column `j` by a real factor.
    pub fn scale_col(&mut self, j: usize, s: f64) {
        for v in self.col_mut(j) {
            *v *= s;
        }
    }

    pub fn conj(&self) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// self + other, elementwise.
    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// self - other, elementwise.
    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[j * self.rows + i]
    }
}

/// C = A * B through zgemm.
pub fn mul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.cols, b.rows, "dimension mismatch in mul");
    let mut c = CMat::zeros(a.rows, b.cols);
    zgemm_raw(a, 1, a.rows as isize, b, 1, b.rows as isize, &mut c);
    c
}

/// C = A^H * B. The conjugate of A is materialized once; the transpose is a
/// stride trick inside zgemm.
pub fn conj_t_mul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.rows, b.rows, "dimension mismatch in conj_t_mul");
    let ac = a.conj();
    let mut c = CMat::zeros(a.cols, b.cols);
    // A^T is (cols x rows): row stride = a.rows (a column step), col stride = 1.
    zgemm_raw(&ac, ac.rows as isize, 1, b, 1, b.rows as isize, &mut c);
    c
}

/// Gram matrix M^H M (Hermitian positive semidefinite).
pub fn gram(m: &CMat) -> CMat {
    conj_t_mul(m, m)
}

fn zgemm_raw(a: &CMat, rsa: isize, csa: isize, b: &CMat, rsb: isize, csb: isize, c: &mut CMat) {
    let (m, n) = (c.rows, c.cols);
    let k = if rsa == 1 { a.cols } else { a.rows };
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.data.fill(Complex64::ZERO);
        return;
    }
    // Complex64 is repr(C) { re: f64, im: f64 }, layout-identical to [f64; 2].
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.data.as_ptr() as *const [f64; 2],
            rsa,
            csa,
            b.data.as_ptr() as *const [f64; 2],
            rsb,
            csb,
            [0.0, 0.0],
            c.data.as_mut_ptr() as *mut [f64; 2],
            1,
            c.rows as isize,
        );
    }
}

/// In-place lower Cholesky factorization of a Hermitian positive-definite
/// matrix. Only the lower triangle of the input is referenced; on success the
/// lower triangle holds L with L L^H = A.
pub fn cholesky_in_place(a: &mut CMat) -> Result<()> {
    let n = a.rows;
    assert_eq!(n, a.cols, "cholesky needs a square matrix");
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag -= a[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::numerical(format!(
                "cholesky breakdown at column {j}: pivot {diag}"
            )));
        }
        let ljj = diag.sqrt();
        a[(j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)].conj();
            }
            a[(i, j)] = s / ljj;
        }
    }
    Ok(())
}

/// log2 |I + D^{1/2} P D^{1/2}| for a Hermitian PSD Gram matrix `P` and a
/// nonnegative diagonal `diag`. Exploits |I_N + M A M^H| = |I_K + A^{1/2}
/// M^H M A^{1/2}| so only the K x K factorization is needed.
pub fn logdet2_i_plus_scaled(p: &CMat, diag: &[f64]) -> Result<f64> {
    let n = p.rows;
    assert_eq!(n, p.cols);
    assert_eq!(n, diag.len());
    let root: Vec<f64> = diag.iter().map(|&a| a.sqrt()).collect();
    let mut s = CMat::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            s[(i, j)] = p[(i, j)] * (root[i] * root[j]);
        }
        s[(j, j)] += 1.0;
    }
    cholesky_in_place(&mut s)?;
    let mut acc = 0.0;
    for j in 0..n {
        acc += s[(j, j)].re.ln();
    }
    Ok(2.0 * acc * std::f64::consts::LOG2_E)
}

/// log2 |I + A| for Hermitian PSD `A` (N x N form, used when K > N).
pub fn logdet2_i_plus(a: &CMat) -> Result<f64> {
    let n = a.rows;
    let mut s = a.clone();
    for j in 0..n {
        s[(j, j)] += 1.0;
    }
    cholesky_in_place(&mut s)?;
    let mut acc = 0.0;
    for j in 0..n {
        acc += s[(j, j)].re.ln();
    }
    Ok(2.0 * acc * std::f64::consts::LOG2_E)
}

/// Solve (L L^H) X = B in place given the lower Cholesky factor `l`.
pub fn cholesky_solve_in_place(l: &CMat, b: &mut CMat) {
    let n = l.rows;
    assert_eq!(n, b.rows);
    for j in 0..b.cols {
        let col = b.col_mut(j);
        // Forward: L y = b
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= l[(i, k)] * col[k];
            }
            col[i] = s / l[(i, i)].re;
        }
        // Backward: L^H x = y
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in (i + 1)..n {
                s -= l[(k, i)].conj() * col[k];
            }
            col[i] = s / l[(i, i)].re;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian, substream, Domain};
    use rand::Rng;

    fn random_cmat(rows: usize, cols: usize, idx: u64) -> CMat {
        let mut rng = substream(99, Domain::Channel, idx);
        CMat::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng))
    }

    /// Reference O(n^3) triple-loop product.
    fn mul_naive(a: &CMat, b: &CMat) -> CMat {
        let mut c = CMat::zeros(a.rows(), b.cols());
        for j in 0..b.cols() {
            for i in 0..a.rows() {
                let mut s = Complex64::ZERO;
                for k in 0..a.cols() {
                    s += a[(i, k)] * b[(k, j)];
                }
                c[(i, j)] = s;
            }
        }
        c
    }

    #[test]
    fn zgemm_matches_naive_product() {
        let a = random_cmat(7, 5, 0);
        let b = random_cmat(5, 6, 1);
        let c = mul(&a, &b);
        let r = mul_naive(&a, &b);
        assert!(c.sub(&r).frobenius_norm() < 1e-12);
    }

    #[test]
    fn conj_t_mul_matches_naive() {
        let a = random_cmat(8, 3, 2);
        let b = random_cmat(8, 4, 3);
        let c = conj_t_mul(&a, &b);
        let mut ah = CMat::zeros(3, 8);
        for i in 0..8 {
            for j in 0..3 {
                ah[(j, i)] = a[(i, j)].conj();
            }
        }
        let r = mul_naive(&ah, &b);
        assert!(c.sub(&r).frobenius_norm() < 1e-12);
    }

    #[test]
    fn cholesky_solve_roundtrip() {
        let m = random_cmat(6, 6, 4);
        let mut a = gram(&m);
        for j in 0..6 {
            a[(j, j)] += 1.0; // well conditioned
        }
        let x_true = random_cmat(6, 2, 5);
        let mut b = mul(&a, &x_true);
        let mut l = a.clone();
        cholesky_in_place(&mut l).unwrap();
        cholesky_solve_in_place(&l, &mut b);
        assert!(b.sub(&x_true).frobenius_norm() < 1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        a[(1, 1)] = Complex64::new(-1.0, 0.0);
        assert!(cholesky_in_place(&mut a).is_err());
    }

    /// Gram-form equality: log|I_N + M A M^H| = log|I_K + A^{1/2} M^H M A^{1/2}|
    /// on random small instances.
    #[test]
    fn gram_form_equality() {
        let mut rng = substream(5, Domain::Channel, 9);
        for case in 0..20u64 {
            let n = 2 + (case as usize % 7);
            let k = 1 + (case as usize % 8);
            let m = random_cmat(n, k, 100 + case);
            let diag: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 3.0).collect();
            let via_gram = logdet2_i_plus_scaled(&gram(&m), &diag).unwrap();
            // Direct N x N evaluation of M A M^H.
            let mut ma = m.clone();
            for j in 0..k {
                ma.scale_col(j, diag[j]);
            }
            let big = mul(&ma, &CMat::from_fn(k, n, |i, j| m[(j, i)].conj()));
            let direct = logdet2_i_plus(&big).unwrap();
            assert!(
                (via_gram - direct).abs() < 1e-8,
                "case {case}: {via_gram} vs {direct}"
            );
        }
    }

    #[test]
    fn logdet_zero_diag_is_zero() {
        let m = random_cmat(5, 3, 50);
        let v = logdet2_i_plus_scaled(&gram(&m), &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(v, 0.0);
    }
}
