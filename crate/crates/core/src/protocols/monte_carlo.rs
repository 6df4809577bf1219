//! Finite-shot estimates of the qubit readout.
//!
//! Each shot draws an electron count `n ~ p(n)` and then a single `±1`
//! qubit outcome with the Born probabilities for that count:
//! `P(z̃ = +1 | n) = cos²(φn)`, `P(ỹ = +1 | n) = (1 + sin 2φn)/2`.
//! The two axes use separate shot batches, as in an experiment that
//! rotates before readout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::recovery::PhiGrid;
use crate::distributions::NumberDistribution;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReadout<T> {
    pub z: T,
    pub y: T,
    pub z_stderr: T,
    pub y_stderr: T,
    pub shots: u64,
}

fn sample_count<R: Rng>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().expect("non-empty cdf");
    let u = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn mean_and_stderr<T: Real>(plus: u64, shots: u64) -> (T, T) {
    let m = (2.0 * plus as f64 - shots as f64) / shots as f64;
    let se = ((1.0 - m * m).max(0.0) / shots as f64).sqrt();
    (T::of(m), T::of(se))
}

/// Seeded shot-noise estimate of `(z̃, ỹ)`; bit-identical for a given seed.
pub fn monte_carlo_readout<T: Real>(p: &NumberDistribution<T>, phi: T, shots: u64, seed: u64) -> Result<McReadout<T>> {
    if shots == 0 {
        return Err(Error::Range("shots must be at least 1".into()));
    }
    let mut acc = 0.0;
    let cdf: Vec<f64> = p
        .weights()
        .iter()
        .map(|w| {
            acc += w.to_f64_lossy();
            acc
        })
        .collect();
    let phi = phi.to_f64_lossy();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut z_plus = 0u64;
    for _ in 0..shots {
        let n = sample_count(&cdf, &mut rng);
        let c = (phi * n as f64).cos();
        if rng.random::<f64>() < c * c {
            z_plus += 1;
        }
    }
    let mut y_plus = 0u64;
    for _ in 0..shots {
        let n = sample_count(&cdf, &mut rng);
        let prob = 0.5 * (1.0 + (2.0 * phi * n as f64).sin());
        if rng.random::<f64>() < prob {
            y_plus += 1;
        }
    }
    let (z, z_stderr) = mean_and_stderr(z_plus, shots);
    let (y, y_stderr) = mean_and_stderr(y_plus, shots);
    Ok(McReadout { z, y, z_stderr, y_stderr, shots })
}

/// Noisy characteristic-function samples `z̃ − iỹ` on a grid. Grid point
/// `k` uses seed `seed + k`.
pub fn sample_characteristic_mc<T: Real>(
    p: &NumberDistribution<T>,
    grid: &PhiGrid<T>,
    shots: u64,
    seed: u64,
) -> Result<Vec<C<T>>> {
    grid.values()
        .iter()
        .enumerate()
        .map(|(k, &phi)| {
            let r = monte_carlo_readout(p, phi, shots, seed.wrapping_add(k as u64))?;
            Ok(C::new(r.z, -r.y))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::discrimination_readout;

    type D = NumberDistribution<f64>;

    #[test]
    fn converges_to_closed_form() {
        let p = D::poisson(8.0, 60).unwrap();
        let phi = 0.09;
        let exact = discrimination_readout(&p, phi);
        let est = monte_carlo_readout(&p, phi, 1_000_000, 2024).unwrap();
        assert!((est.z - exact.z).abs() < 5.0 * est.z_stderr, "{est:?} vs {exact:?}");
        assert!((est.y - exact.y).abs() < 5.0 * est.y_stderr, "{est:?} vs {exact:?}");
    }

    #[test]
    fn deterministic_fock_shots() {
        let p = D::fock(4, 10).unwrap();
        let est = monte_carlo_readout(&p, std::f64::consts::PI / 4.0, 500, 3).unwrap();
        // cos²(π) = 1: every z shot reads +1
        assert_eq!(est.z, 1.0);
        assert_eq!(est.z_stderr, 0.0);
    }

    #[test]
    fn seed_reproducibility() {
        let p = D::thermal_bsv_proxy(3.0, 120).unwrap();
        let a = monte_carlo_readout(&p, 0.2, 10_000, 99).unwrap();
        let b = monte_carlo_readout(&p, 0.2, 10_000, 99).unwrap();
        assert_eq!(a.z.to_bits(), b.z.to_bits());
        assert_eq!(a.y.to_bits(), b.y.to_bits());
        let c = monte_carlo_readout(&p, 0.2, 10_000, 100).unwrap();
        assert!(a != c);
        assert!(monte_carlo_readout(&p, 0.2, 0, 1).is_err());
    }
}
