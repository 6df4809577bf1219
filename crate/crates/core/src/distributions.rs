//! Electron-number probability distributions `p(n)`, `n = 0..=n_max`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default cap on the mass an analytic law may place above `n_max`.
pub const DEFAULT_TRUNCATION_CAP: f64 = 1e-9;

/// Normalized, non-negative weights over electron counts `0..=n_max`.
///
/// Analytic constructors renormalize after truncating at `n_max` and keep
/// the discarded mass in [`truncation_mass`](Self::truncation_mass).
#[derive(Debug, Clone, PartialEq)]
pub struct NumberDistribution<T> {
    weights: Vec<T>,
    truncation_mass: T,
}

impl<T: Real> NumberDistribution<T> {
    /// All weight on `n_star`.
    pub fn fock(n_star: usize, n_max: usize) -> Result<Self> {
        if n_star > n_max {
            return Err(Error::Range(format!("n_star = {n_star} exceeds n_max = {n_max}")));
        }
        let mut weights = vec![T::zero(); n_max + 1];
        weights[n_star] = T::one();
        Ok(Self { weights, truncation_mass: T::zero() })
    }

    /// Poisson law with mean `mu`, truncated at `n_max`.
    pub fn poisson(mu: T, n_max: usize) -> Result<Self> {
        Self::poisson_with_cap(mu, n_max, T::of(DEFAULT_TRUNCATION_CAP))
    }

    pub fn poisson_with_cap(mu: T, n_max: usize, cap: T) -> Result<Self> {
        if !(mu.is_finite() && mu > T::zero()) {
            return Err(Error::Domain(format!("poisson mean must be positive, got {mu}")));
        }
        let ln_mu = mu.ln();
        let mut ln_fact = T::zero();
        let mut head = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            if n > 0 {
                ln_fact = ln_fact + T::of_usize(n).ln();
            }
            head.push((T::of_usize(n) * ln_mu - mu - ln_fact).exp());
        }

        // Sum the tail directly; terms decrease monotonically once n > mu.
        let eps = T::epsilon();
        let mut tail = T::zero();
        let mut n = n_max + 1;
        loop {
            ln_fact = ln_fact + T::of_usize(n).ln();
            let term = (T::of_usize(n) * ln_mu - mu - ln_fact).exp();
            tail = tail + term;
            let past_mode = T::of_usize(n) > mu;
            if past_mode && (term <= eps * tail || term == T::zero()) {
                break;
            }
            n += 1;
        }
        Self::from_truncated(head, tail, n_max, cap)
    }

    /// Geometric (thermal) law `p(n) = (1 − s) sⁿ`, `s = mean / (1 + mean)`,
    /// used as a stand-in for super-Poissonian squeezed-light-seeded beams.
    pub fn thermal_bsv_proxy(mean: T, n_max: usize) -> Result<Self> {
        Self::thermal_with_cap(mean, n_max, T::of(DEFAULT_TRUNCATION_CAP))
    }

    pub fn thermal_with_cap(mean: T, n_max: usize, cap: T) -> Result<Self> {
        if !(mean.is_finite() && mean > T::zero()) {
            return Err(Error::Domain(format!("thermal mean must be positive, got {mean}")));
        }
        let s = mean / (T::one() + mean);
        let one_minus_s = (T::one() + mean).recip();
        let mut head = Vec::with_capacity(n_max + 1);
        let mut pow = T::one();
        for _ in 0..=n_max {
            head.push(one_minus_s * pow);
            pow = pow * s;
        }
        // pow == s^(n_max+1) == exact tail mass of the geometric law
        Self::from_truncated(head, pow, n_max, cap)
    }

    fn from_truncated(head: Vec<T>, tail: T, n_max: usize, cap: T) -> Result<Self> {
        let total: T = head.iter().copied().sum();
        let mass = tail / (total + tail);
        if mass > cap || !(total > T::zero()) {
            return Err(Error::Truncation { mass: mass.to_f64_lossy(), cap: cap.to_f64_lossy(), n_max });
        }
        let weights = head.into_iter().map(|w| w / total).collect();
        Ok(Self { weights, truncation_mass: mass })
    }

    /// Normalizes user-supplied weights.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("weights must be non-empty".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < T::zero()) {
            return Err(Error::Domain(format!("weight {i} is negative or non-finite: {w}")));
        }
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::Domain("weights must have a positive finite sum".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { weights, truncation_mass: T::zero() })
    }

    pub fn n_max(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `p(n)`, zero above `n_max`.
    pub fn weight(&self, n: usize) -> T {
        self.weights.get(n).copied().unwrap_or_else(T::zero)
    }

    /// Mass the originating law placed above `n_max` before renormalization.
    pub fn truncation_mass(&self) -> T {
        self.truncation_mass
    }

    /// `(n, p(n))` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.weights.iter().copied().enumerate()
    }

    /// Non-negativity and unit sum within `T::STATE_TOL`.
    pub fn is_normalized(&self) -> bool {
        let total: T = self.weights.iter().copied().sum();
        self.weights.iter().all(|&w| w >= T::zero()) && (total - T::one()).abs() <= T::STATE_TOL
    }

    pub fn mean(&self) -> T {
        self.iter().map(|(n, p)| T::of_usize(n) * p).sum()
    }

    pub fn variance(&self) -> T {
        let mu = self.mean();
        self.iter()
            .map(|(n, p)| {
                let d = T::of_usize(n) - mu;
                p * d * d
            })
            .sum()
    }

    /// Fano number `σ²/μ`.
    pub fn fano(&self) -> Result<T> {
        let mu = self.mean();
        if mu <= T::zero() {
            return Err(Error::Domain("fano number undefined at zero mean".into()));
        }
        Ok(self.variance() / mu)
    }
}

/// `Σ p ln(p/q)` in nats with `0·ln 0 = 0`. Returns `+∞` when `q` vanishes
/// somewhere `p` does not.
pub fn kl_divergence<T: Real>(p: &NumberDistribution<T>, q: &NumberDistribution<T>) -> Result<T> {
    if p.n_max() != q.n_max() {
        return Err(Error::DimensionMismatch { expected: p.n_max() + 1, found: q.n_max() + 1 });
    }
    let mut kl = T::zero();
    for (&pn, &qn) in p.weights.iter().zip(&q.weights) {
        if pn == T::zero() {
            continue;
        }
        if qn == T::zero() {
            return Ok(T::infinity());
        }
        kl = kl + pn * (pn / qn).ln();
    }
    // Rounding can leave a tiny negative sum when p ≈ q.
    Ok(kl.max(T::zero()))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    type D = NumberDistribution<f64>;

    #[test]
    fn fock_cases() {
        assert_eq!(D::fock(0, 4).unwrap().weights(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(D::fock(2, 4).unwrap().weights(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
        let d = D::fock(50, 127).unwrap();
        assert_eq!(d.weight(50), 1.0);
        assert_eq!(d.n_max(), 127);
        assert!(matches!(D::fock(5, 4), Err(Error::Range(_))));
    }

    #[test]
    fn poisson_cases() {
        let d = D::poisson(1e-9, 4).unwrap();
        assert!((d.weight(0) - 1.0).abs() < 1e-8);
        let d = D::poisson(2.0, 20).unwrap();
        assert!((d.weight(0) - (-2.0f64).exp()).abs() < 1e-12);
        assert!((d.weight(0) - 0.135335).abs() < 1e-6);
        let d = D::poisson(50.0, 127).unwrap();
        assert!((d.mean() - 50.0).abs() < 1e-6);
        assert!((d.variance() - 50.0).abs() < 1e-5);
        assert!((d.fano().unwrap() - 1.0).abs() < 1e-6);
        assert!(d.is_normalized());
        assert!(d.truncation_mass() < 1e-15);
    }

    #[test]
    fn poisson_fano_converges_with_support() {
        for &mu in &[0.5, 3.0, 20.0, 50.0, 200.0] {
            let n_max = (mu + 10.0 * f64::sqrt(mu) + 50.0).ceil() as usize;
            let d = D::poisson(mu, n_max).unwrap();
            assert!((d.fano().unwrap() - 1.0).abs() <= 1e-6, "mu = {mu}");
        }
    }

    #[test]
    fn poisson_truncation_is_surfaced() {
        let err = D::poisson(50.0, 60).unwrap_err();
        assert!(matches!(err, Error::Truncation { n_max: 60, .. }));
        let d = D::poisson_with_cap(50.0, 60, 1.0).unwrap();
        assert!(d.truncation_mass() > 0.05 && d.truncation_mass() < 0.2);
        assert!(d.is_normalized());
        assert!(D::poisson(0.0, 5).is_err());
        assert!(D::poisson(-1.0, 5).is_err());
    }

    #[test]
    fn thermal_cases() {
        let d = D::thermal_bsv_proxy(1e-12, 4).unwrap();
        assert!((d.weight(0) - 1.0).abs() < 1e-11);
        let d = D::thermal_bsv_proxy(1.0, 60).unwrap();
        for n in 0..=60 {
            let want = 0.5f64.powi(n as i32 + 1);
            assert!((d.weight(n) - want).abs() < 1e-15, "n = {n}");
        }
        let d = D::thermal_bsv_proxy(10.0, 400).unwrap();
        assert!((d.mean() - 10.0).abs() < 1e-6);
        assert!((d.fano().unwrap() - 11.0).abs() < 1e-5);
        assert!(D::thermal_bsv_proxy(10.0, 50).is_err());
    }

    #[test]
    fn from_weights_cases() {
        assert_eq!(D::from_weights(vec![2.0, 2.0]).unwrap().weights(), &[0.5, 0.5]);
        assert_eq!(D::from_weights(vec![0.0, 1.0, 0.0]).unwrap().weights(), &[0.0, 1.0, 0.0]);
        assert_eq!(D::from_weights(vec![1.0, 2.0, 1.0]).unwrap().weights(), &[0.25, 0.5, 0.25]);
        assert!(D::from_weights(vec![1.0, -0.1]).is_err());
        assert!(D::from_weights(vec![0.0, 0.0]).is_err());
        assert!(D::from_weights(vec![]).is_err());
        assert!(D::from_weights(vec![f64::NAN]).is_err());
    }

    #[test]
    fn moments() {
        let d = D::fock(3, 10).unwrap();
        assert_eq!(d.mean(), 3.0);
        assert_eq!(d.variance(), 0.0);
        assert_eq!(d.fano().unwrap(), 0.0);
        let d = D::from_weights(vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(d.mean(), 1.0);
        assert_eq!(d.variance(), 1.0);
        assert!(D::fock(0, 3).unwrap().fano().is_err());
    }

    #[test]
    fn kl_cases() {
        let p = D::from_weights(vec![1.0, 0.0]).unwrap();
        let q = D::from_weights(vec![0.5, 0.5]).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert!((kl_divergence(&p, &q).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(kl_divergence(&q, &p).unwrap(), f64::INFINITY);
        let r = D::fock(0, 2).unwrap();
        assert!(matches!(kl_divergence(&p, &r), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn single_precision_constructors() {
        let d = NumberDistribution::<f32>::poisson(5.0, 60).unwrap();
        assert!(d.is_normalized());
        assert!((d.mean() - 5.0).abs() < 1e-4);
    }

    fn weights_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 1..40).prop_filter("positive sum", |w| w.iter().sum::<f64>() > 1e-3)
    }

    proptest! {
        #[test]
        fn constructors_are_normalized(w in weights_strategy(), mu in 0.01f64..80.0) {
            prop_assert!(D::from_weights(w).unwrap().is_normalized());
            let n_max = (mu + 10.0 * mu.sqrt() + 50.0) as usize;
            prop_assert!(D::poisson(mu, n_max).unwrap().is_normalized());
            let t_max = ((1e-10f64).ln() / (mu / (1.0 + mu)).ln()).ceil() as usize + 1;
            prop_assert!(D::thermal_bsv_proxy(mu, t_max).unwrap().is_normalized());
        }

        #[test]
        fn kl_is_nonnegative_and_zero_on_diagonal(
            pair in (1usize..30).prop_flat_map(|n| (
                prop::collection::vec(0.01f64..1.0, n),
                prop::collection::vec(0.01f64..1.0, n),
            ))
        ) {
            let p = D::from_weights(pair.0).unwrap();
            let q = D::from_weights(pair.1).unwrap();
            let kl = kl_divergence(&p, &q).unwrap();
            prop_assert!(kl >= 0.0);
            prop_assert!(kl_divergence(&p, &p).unwrap() <= 1e-12);
            let max_diff = p.weights().iter().zip(q.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if max_diff > 1e-6 {
                prop_assert!(kl > 0.0);
            }
        }
    }
}
