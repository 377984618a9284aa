//! Dense complex matrices, row-major, with blocked products.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> C64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self · other`.
    pub fn matmul(&self, other: &CMat) -> CMat {
        self.gemm(false, other, false)
    }

    /// `self* · other`.
    pub fn adj_matmul(&self, other: &CMat) -> CMat {
        self.gemm(true, other, false)
    }

    /// `self · other*`.
    pub fn matmul_adj(&self, other: &CMat) -> CMat {
        self.gemm(false, other, true)
    }

    fn gemm(&self, adj_a: bool, other: &CMat, adj_b: bool) -> CMat {
        let a = if adj_a { self.adjoint() } else { self.clone() };
        let b = if adj_b { other.adjoint() } else { other.clone() };
        assert_eq!(a.cols, b.rows, "inner dimensions differ");
        let (m, k, n) = (a.rows, a.cols, b.cols);
        let mut c = CMat::zeros(m, n);
        if m == 0 || n == 0 || k == 0 {
            return c;
        }
        // SAFETY: Complex<f64> is repr(C) {re, im}, identical to [f64; 2]; the
        // strides describe exactly the row-major buffers allocated above.
        unsafe {
            matrixmultiply::zgemm(
                matrixmultiply::CGemmOption::Standard,
                matrixmultiply::CGemmOption::Standard,
                m,
                k,
                n,
                [1.0, 0.0],
                a.data.as_ptr() as *const [f64; 2],
                k as isize,
                1,
                b.data.as_ptr() as *const [f64; 2],
                n as isize,
                1,
                [0.0, 0.0],
                c.data.as_mut_ptr() as *mut [f64; 2],
                n as isize,
                1,
            );
        }
        c
    }

    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn conj(&self) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn adj_mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        out
    }

    /// Multiplies column `j` by `d[j]`.
    pub fn scale_cols(&mut self, d: &[C64]) {
        assert_eq!(d.len(), self.cols);
        for row in self.data.chunks_mut(self.cols) {
            for (z, s) in row.iter_mut().zip(d) {
                *z *= s;
            }
        }
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: C64, other: &CMat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        assert_eq!(self.rows, self.cols);
        if self.rows == 0 {
            return Vec::new();
        }
        let m = self.to_nalgebra();
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// Singular values, descending, from the eigenvalues of `A*A` or `AA*`.
    pub fn singular_values(&self) -> Vec<f64> {
        let g = if self.rows >= self.cols { self.adj_matmul(self) } else { self.matmul_adj(self) };
        let mut sv: Vec<f64> = g.hermitian_eigenvalues().into_iter().map(|e| e.max(0.0).sqrt()).collect();
        sv.reverse();
        sv
    }

    /// Solves `self · x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[C64]) -> Option<Vec<C64>> {
        let lu = self.to_nalgebra().lu();
        let rhs = nalgebra::DVector::from_column_slice(b);
        lu.solve(&rhs).map(|x| x.iter().copied().collect())
    }
}

/// `‖a‖₂` of a complex vector.
pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a, b⟩ = Σ conj(aᵢ) bᵢ`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
