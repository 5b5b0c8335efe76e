use crate::scalar::Scalar;

pub fn relu_inplace<T: Scalar>(x: &mut [T]) {
    for v in x {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Zeroes `dy` wherever the ReLU output `y` was not positive.
pub fn relu_backward_inplace<T: Scalar>(y: &[T], dy: &mut [T]) {
    assert_eq!(y.len(), dy.len(), "relu gradient length");
    for (g, &v) in dy.iter_mut().zip(y) {
        if v <= T::zero() {
            *g = T::zero();
        }
    }
}
