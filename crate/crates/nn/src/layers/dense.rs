use crate::error::{NnError, Result};
use crate::scalar::{gemm, MatRef, Scalar};
use crate::tensor::Matrix;

/// Fully connected layer, `y = x W^T + b` with `W` stored `[out][in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weight: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols != self.inputs {
            return Err(NnError::Shape(format!("dense expects {} inputs, got {}", self.inputs, x.cols)));
        }
        let mut y = Matrix::zeros(x.rows, self.outputs);
        gemm(
            T::one(),
            MatRef::row_major(&x.data, x.rows, x.cols),
            MatRef::row_major(&self.weight, self.outputs, self.inputs).t(),
            T::zero(),
            &mut y.data,
        );
        for r in 0..y.rows {
            for (v, &b) in y.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(y)
    }

    /// Returns `(dx, dweight, dbias)`.
    pub fn backward(&self, x: &Matrix<T>, dy: &Matrix<T>) -> Result<(Matrix<T>, Vec<T>, Vec<T>)> {
        if dy.cols != self.outputs || dy.rows != x.rows || x.cols != self.inputs {
            return Err(NnError::Shape("dense upstream gradient".into()));
        }
        let mut dx = Matrix::zeros(x.rows, self.inputs);
        gemm(
            T::one(),
            MatRef::row_major(&dy.data, dy.rows, dy.cols),
            MatRef::row_major(&self.weight, self.outputs, self.inputs),
            T::zero(),
            &mut dx.data,
        );
        let mut dw = vec![T::zero(); self.weight.len()];
        gemm(
            T::one(),
            MatRef::row_major(&dy.data, dy.rows, dy.cols).t(),
            MatRef::row_major(&x.data, x.rows, x.cols),
            T::zero(),
            &mut dw,
        );
        let mut db = vec![T::zero(); self.outputs];
        for r in 0..dy.rows {
            for (acc, &g) in db.iter_mut().zip(dy.row(r)) {
                *acc += g;
            }
        }
        Ok((dx, dw, db))
    }
}
