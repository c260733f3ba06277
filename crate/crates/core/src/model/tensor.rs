//! Dense row-major tensors and the handful of matrix kernels the encoder
//! needs.

use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "shape/data mismatch");
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row `i` of a tensor viewed as `[shape[0], rest]`.
    pub fn row(&self, i: usize) -> &[T] {
        let width = self.data.len() / self.shape[0];
        &self.data[i * width..(i + 1) * width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let width = self.data.len() / self.shape[0];
        &mut self.data[i * width..(i + 1) * width]
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// `out[n, m] = a[n, k] · b[k, m]`
pub fn matmul<T: Scalar>(a: &[T], b: &[T], n: usize, k: usize, m: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    out[..n * m].fill(T::zero());
    for i in 0..n {
        let out_row = &mut out[i * m..(i + 1) * m];
        for (p, &a_ip) in a[i * k..(i + 1) * k].iter().enumerate() {
            if a_ip == T::zero() {
                continue;
            }
            let b_row = &b[p * m..(p + 1) * m];
            for (o, &b_pj) in out_row.iter_mut().zip(b_row) {
                *o += a_ip * b_pj;
            }
        }
    }
}

/// `out[k, m] += a[n, k]ᵀ · b[n, m]`
pub fn matmul_at_b_acc<T: Scalar>(a: &[T], b: &[T], n: usize, k: usize, m: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), n * m);
    for i in 0..n {
        let b_row = &b[i * m..(i + 1) * m];
        for (p, &a_ip) in a[i * k..(i + 1) * k].iter().enumerate() {
            if a_ip == T::zero() {
                continue;
            }
            let out_row = &mut out[p * m..(p + 1) * m];
            for (o, &b_ij) in out_row.iter_mut().zip(b_row) {
                *o += a_ip * b_ij;
            }
        }
    }
}

/// `out[n, k] = a[n, m] · b[k, m]ᵀ`
pub fn matmul_a_bt<T: Scalar>(a: &[T], b: &[T], n: usize, m: usize, k: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), n * m);
    debug_assert_eq!(b.len(), k * m);
    for i in 0..n {
        let a_row = &a[i * m..(i + 1) * m];
        for p in 0..k {
            out[i * k + p] = dot(a_row, &b[p * m..(p + 1) * m]);
        }
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Adds `bias` to every row of `x[n, m]`.
pub fn add_bias<T: Scalar>(x: &mut [T], bias: &[T]) {
    for row in x.chunks_exact_mut(bias.len()) {
        for (v, &b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

/// `out[m] += Σ_rows x[n, m]`
pub fn sum_rows_acc<T: Scalar>(x: &[T], out: &mut [T]) {
    for row in x.chunks_exact(out.len()) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                for p in 0..k {
                    out[i * m + j] += a[i * k + p] * b[p * m + j];
                }
            }
        }
        out
    }

    fn transpose(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        let mut t = vec![0.0; x.len()];
        for r in 0..rows {
            for c in 0..cols {
                t[c * rows + r] = x[r * cols + c];
            }
        }
        t
    }

    #[test]
    fn kernels_agree_with_naive_product() {
        let (n, k, m) = (3, 4, 5);
        let a: Vec<f64> = (0..n * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..k * m).map(|i| (i as f64 * 0.11).cos()).collect();
        let expected = naive(&a, &b, n, k, m);

        let mut out = vec![0.0; n * m];
        matmul(&a, &b, n, k, m, &mut out);
        assert_eq!(out, expected);

        let at = transpose(&a, n, k);
        let mut acc = vec![0.0; n * m];
        matmul_at_b_acc(&at, &b, k, n, m, &mut acc);
        for (x, y) in acc.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }

        let bt = transpose(&b, k, m);
        let mut abt = vec![0.0; n * m];
        matmul_a_bt(&a, &bt, n, k, m, &mut abt);
        for (x, y) in abt.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
