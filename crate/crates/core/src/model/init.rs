use ndarray::{ArrayD, IxDyn};

/// Glorot/Xavier uniform draws on `[-a, a]` with `a = sqrt(6 / (fan_in + fan_out))`,
/// giving zero mean and variance `2 / (fan_in + fan_out)`.
pub fn xavier_uniform(fan_in: usize, fan_out: usize, len: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.random_range(-a..a)).collect()
}

/// Xavier-initialized tensor. Shapes are `(out, in)` for dense weights and
/// `(out, kernel, in)` for convolution weights.
pub fn xavier_init(shape: &[usize], rng: &mut impl rand::Rng) -> ArrayD<f64> {
    let (fan_in, fan_out) = match *shape {
        [n] => (n, n),
        [out, inp] => (inp, out),
        [out, k, inp] => (inp * k, out * k),
        _ => {
            let receptive: usize = shape[2..].iter().product();
            (shape[1] * receptive, shape[0] * receptive)
        }
    };
    let len = shape.iter().product();
    ArrayD::from_shape_vec(IxDyn(shape), xavier_uniform(fan_in, fan_out, len, rng))
        .expect("length matches shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn variance_matches_glorot() {
        let w = xavier_init(&[100, 100], &mut seed::rng(1));
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n / w.len())
            .flat_map(|i| xavier_init(&[100, 100], &mut seed::rng(i as u64)).into_raw_vec_and_offset().0)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() < 1e-3);
        assert!((var / 0.01 - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn deterministic_per_seed() {
        let a = xavier_init(&[8, 3, 5], &mut seed::rng(9));
        let b = xavier_init(&[8, 3, 5], &mut seed::rng(9));
        assert_eq!(a, b);
    }
}
