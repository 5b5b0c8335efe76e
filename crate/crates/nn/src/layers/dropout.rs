//! Inverted dropout: kept activations are scaled by `1 / (1 - p)` at train
//! time so that evaluation is the identity.

use rand::Rng;

use crate::scalar::Scalar;

/// Per-element multipliers, each either `0` or `1 / (1 - p)`.
pub fn sample_mask<T: Scalar, R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Vec<T> {
    if p == 0.0 {
        return vec![T::one(); len];
    }
    let keep = T::of(1.0 / (1.0 - p));
    (0..len)
        .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
        .collect()
}

/// Forward and backward are the same elementwise product.
pub fn apply_mask<T: Scalar>(x: &mut [T], mask: &[T]) {
    assert_eq!(x.len(), mask.len(), "dropout mask length");
    for (v, &m) in x.iter_mut().zip(mask) {
        *v *= m;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mask_values_and_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m: Vec<f64> = sample_mask(100_000, 0.25, &mut rng);
        let dropped = m.iter().filter(|&&v| v == 0.0).count() as f64 / m.len() as f64;
        assert!((dropped - 0.25).abs() < 0.01);
        assert!(m.iter().all(|&v| v == 0.0 || (v - 4.0 / 3.0).abs() < 1e-15));
        let none: Vec<f32> = sample_mask(10, 0.0, &mut rng);
        assert!(none.iter().all(|&v| v == 1.0));
    }
}
