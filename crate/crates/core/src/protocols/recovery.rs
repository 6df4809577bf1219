//! Recovering `p(n)` from samples of its characteristic function
//! `N(φ) = Σ p(n) e^{−2iφn}`.

use rustfft::FftPlanner;

use super::characteristic_function;
use super::nnls::{nnls, NnlsConfig};
use crate::distributions::{kl_divergence, NumberDistribution};
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Additive floor applied to a recovered distribution before scoring it
/// with KL divergence, so that sparse estimates give a finite score.
pub const RECOVERY_KL_FLOOR: f64 = 1e-12;

/// Strictly increasing interaction strengths in `[0, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiGrid<T> {
    values: Vec<T>,
}

impl<T: Real> PhiGrid<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::GridMismatch("phi grid is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= T::zero() && **v <= T::PI())) {
            return Err(Error::GridMismatch(format!("phi = {v} outside [0, pi]")));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridMismatch("phi grid must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    /// `φ_k = πk/(n_max+1)`, `k = 0..=n_max`: one full period, the grid on
    /// which the inverse transform is exact.
    pub fn exact(n_max: usize) -> Self {
        let l = T::of_usize(n_max + 1);
        Self { values: (0..=n_max).map(|k| T::PI() * T::of_usize(k) / l).collect() }
    }

    /// `count` equally spaced points on `(0, φ_max]`.
    pub fn limited(phi_max: T, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::GridMismatch("sample count must be positive".into()));
        }
        if !(phi_max > T::zero() && phi_max <= T::PI()) {
            return Err(Error::GridMismatch(format!("phi_max = {phi_max} outside (0, pi]")));
        }
        let c = T::of_usize(count);
        Self::new((1..=count).map(|k| phi_max * T::of_usize(k) / c).collect())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> T {
        *self.values.last().expect("non-empty grid")
    }

    /// Noiseless samples `N(φ_k)` of a distribution.
    pub fn sample(&self, p: &NumberDistribution<T>) -> Vec<C<T>> {
        self.values.iter().map(|&phi| characteristic_function(p, phi)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactRecovery<T> {
    pub distribution: NumberDistribution<T>,
    /// Largest `|Im p̂(n)|` before taking the real part.
    pub max_imag_residue: T,
    /// Total negative mass removed by clipping.
    pub clipped_mass: T,
}

/// Inverse discrete Fourier transform on the full-period grid.
pub fn recover_exact<T: Real>(grid: &PhiGrid<T>, samples: &[C<T>]) -> Result<ExactRecovery<T>> {
    if samples.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} samples for {} grid points", samples.len(), grid.len())));
    }
    let len = grid.len();
    let expected = PhiGrid::<T>::exact(len - 1);
    let tol = T::of(1e-12) * T::PI();
    if grid.values.iter().zip(&expected.values).any(|(a, b)| (*a - *b).abs() > tol) {
        return Err(Error::GridMismatch("samples are not on the uniform full-period grid".into()));
    }

    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    let scale = T::of_usize(len);
    let mut max_imag = T::zero();
    let mut clipped = T::zero();
    let weights: Vec<T> = buf
        .iter()
        .map(|z| {
            let z = z.unscale(scale);
            max_imag = max_imag.max(z.im.abs());
            if z.re < T::zero() {
                clipped = clipped - z.re;
                T::zero()
            } else {
                z.re
            }
        })
        .collect();
    Ok(ExactRecovery { distribution: NumberDistribution::from_weights(weights)?, max_imag_residue: max_imag, clipped_mass: clipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitedRecovery<T> {
    pub distribution: NumberDistribution<T>,
    /// `‖N̂(φ_k) − N_k‖₂` of the returned estimate over the grid.
    pub residual: T,
    pub converged: bool,
    pub iterations: usize,
}

/// Non-negative least-squares fit of `p̂` to characteristic-function samples
/// on an arbitrary grid, with a weighted unit-sum row, followed by
/// renormalization onto the simplex.
pub fn recover_limited<T: Real>(grid: &PhiGrid<T>, samples: &[C<T>], n_max: usize) -> Result<LimitedRecovery<T>> {
    if samples.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} samples for {} grid points", samples.len(), grid.len())));
    }
    let levels = n_max + 1;
    let mut rows = Vec::with_capacity(2 * grid.len() + 1);
    let mut rhs = Vec::with_capacity(2 * grid.len() + 1);
    for (&phi, s) in grid.values.iter().zip(samples) {
        let two_phi = phi + phi;
        let (sin, cos): (Vec<T>, Vec<T>) = (0..levels).map(|n| (two_phi * T::of_usize(n)).sin_cos()).unzip();
        rows.push(cos);
        rhs.push(s.re);
        rows.push(sin.into_iter().map(|v| -v).collect());
        rhs.push(s.im);
    }
    let sum_weight = T::of_usize(rows.len()).sqrt();
    rows.push(vec![sum_weight; levels]);
    rhs.push(sum_weight);

    let sol = nnls(&rows, &rhs, &NnlsConfig::for_columns(levels));
    let distribution = NumberDistribution::from_weights(sol.x)?;
    let residual = grid
        .values
        .iter()
        .zip(samples)
        .map(|(&phi, s)| (characteristic_function(&distribution, phi) - s).norm_sqr())
        .fold(T::zero(), |a, b| a + b)
        .sqrt();
    Ok(LimitedRecovery { distribution, residual, converged: sol.converged, iterations: sol.iterations })
}

/// `KL(p ‖ p̂_ε)` where `p̂_ε = (p̂ + ε)/(1 + (n_max+1)ε)` and `ε` is
/// [`RECOVERY_KL_FLOOR`].
pub fn recovery_kl<T: Real>(p: &NumberDistribution<T>, p_hat: &NumberDistribution<T>) -> Result<T> {
    if p.n_max() != p_hat.n_max() {
        return Err(Error::DimensionMismatch { expected: p.n_max() + 1, found: p_hat.n_max() + 1 });
    }
    let eps = T::of(RECOVERY_KL_FLOOR);
    let floored = NumberDistribution::from_weights(p_hat.weights().iter().map(|&w| w + eps).collect())?;
    kl_divergence(p, &floored)
}
