//! Global average pooling over the three spatial axes.

use crate::scalar::Scalar;
use crate::tensor::{Matrix, Tensor5};

pub fn global_avg_pool<T: Scalar>(x: &Tensor5<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(x.batch(), x.channels());
    let inv = 1.0 / x.voxels() as f64;
    for n in 0..x.batch() {
        for c in 0..x.channels() {
            let sum: f64 = x.plane(n, c).iter().map(|v| v.f64()).sum();
            out.row_mut(n)[c] = T::of(sum * inv);
        }
    }
    out
}

pub fn global_avg_pool_backward<T: Scalar>(dy: &Matrix<T>, shape: [usize; 5]) -> Tensor5<T> {
    let mut dx = Tensor5::zeros(shape);
    let inv = T::of(1.0 / (shape[2] * shape[3] * shape[4]) as f64);
    for n in 0..shape[0] {
        for c in 0..shape[1] {
            let g = dy.row(n)[c] * inv;
            dx.plane_mut(n, c).fill(g);
        }
    }
    dx
}
