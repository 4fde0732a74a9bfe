use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Array2, NeuroError, NodeId, Tape};

/// Denominator floor for the relative error; keeps near-zero gradient
/// entries from being judged on round-off alone.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// Relative error `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Compares tape gradients of a scalar function against central finite
/// differences and returns the worst relative error seen.
///
/// `f` receives a fresh tape and one leaf per entry of `params` (registered
/// in order) and must return a `1 x 1` node. Arrays with more than
/// `samples_per_array` entries are checked on a seeded random subset.
pub fn grad_check<F>(
    params: &[Array2],
    epsilon: f64,
    samples_per_array: usize,
    seed: u64,
    f: F,
) -> Result<f64, NeuroError>
where
    F: for<'t> Fn(&mut Tape<'t>, &[NodeId]) -> Result<NodeId, NeuroError>,
{
    let eval = |ps: &[Array2]| -> Result<f64, NeuroError> {
        let mut tape = Tape::new();
        let leaves: Vec<NodeId> = ps.iter().map(|p| tape.param(p)).collect();
        let out = f(&mut tape, &leaves)?;
        let (r, c) = tape.value(out).shape();
        tape.scalar_value(out).ok_or(NeuroError::NonScalarLoss(r, c))
    };

    let analytic = {
        let mut tape = Tape::new();
        let leaves: Vec<NodeId> = params.iter().map(|p| tape.param(p)).collect();
        let out = f(&mut tape, &leaves)?;
        tape.backward(out)?
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = params.to_vec();
    let mut worst: f64 = 0.0;
    for (pi, param) in params.iter().enumerate() {
        let n = param.len();
        let coords: Vec<usize> = if n <= samples_per_array {
            (0..n).collect()
        } else {
            sample(&mut rng, n, samples_per_array).into_vec()
        };
        let grad = analytic.get(pi).expect("one gradient per parameter");
        for k in coords {
            let orig = param.data()[k];
            work[pi].data_mut()[k] = orig + epsilon;
            let plus = eval(&work)?;
            work[pi].data_mut()[k] = orig - epsilon;
            let minus = eval(&work)?;
            work[pi].data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * epsilon);
            worst = worst.max(relative_error(grad.data()[k], numeric));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let a = Array2::from_vec(2, 3, vec![0.5, -1.5, 2.0, 3.0, -0.25, 1.0]).unwrap();
        let err = grad_check(&[a], 1e-4, 200, 1, |tape, p| {
            let sq = tape.elementwise_mul(p[0], p[0])?;
            let scaled = tape.scale(sq, 3.0);
            Ok(tape.sum(scaled))
        })
        .unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn softmax_cross_entropy_composite() {
        let logits = Array2::column(&[0.3, -1.2, 2.0, 0.1, 0.0]);
        let w = Array2::from_vec(5, 5, (0..25).map(|i| ((i * 7 % 11) as f64 - 5.0) / 10.0).collect())
            .unwrap();
        let err = grad_check(&[logits, w], 1e-6, 200, 2, |tape, p| {
            let z = tape.matmul(p[1], p[0])?;
            let probs = tape.softmax(z, Some(&[true, true, false, true, true]))?;
            tape.cross_entropy(probs, 3)
        })
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn relative_error_floor_applies() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1e-9, 0.0) - 1e-3).abs() < 1e-12);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
    }
}
