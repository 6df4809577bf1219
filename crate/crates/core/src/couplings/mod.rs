//! Interaction strengths for free-space and cavity-mediated coupling,
//! cavity-induced decay rates, and dispersive-regime validity margins.

mod bessel;

use std::collections::BTreeMap;

pub use bessel::{bessel_k1, x_bessel_k1};

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Physical constants entering the free-space coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants<T> {
    /// Bohr magneton, J/T.
    pub mu_b: T,
    /// Vacuum permeability, T·m/A.
    pub mu_0: T,
    /// Elementary charge, C.
    pub e_charge: T,
    /// Reduced Planck constant, J·s.
    pub hbar: T,
}

/// Label recorded in run manifests for the default constant set.
pub const CONSTANTS_VERSION: &str = "CODATA 2018 (10 significant digits)";

impl<T: Real> Default for PhysicalConstants<T> {
    /// CODATA 2018, rounded to 10 significant digits.
    fn default() -> Self {
        Self {
            mu_b: T::of(9.274_010_078e-24),
            mu_0: T::of(1.256_637_062e-6),
            e_charge: T::of(1.602_176_634e-19),
            hbar: T::of(1.054_571_817e-34),
        }
    }
}

impl<T: Real> PhysicalConstants<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.mu_b, self.mu_0, self.e_charge, self.hbar].iter().all(|v| v.is_finite() && *v > T::zero());
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("physical constants must be finite and positive".into()))
        }
    }
}

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Electron trajectory relative to a free-space qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSpaceGeometry<T> {
    /// Impact parameter, m.
    pub r_perp: T,
    /// Electron speed, m/s.
    pub v: T,
    /// Qubit angular resonance frequency, rad/s.
    pub omega_0: T,
    /// Coupling phase, rad.
    pub alpha: T,
}

impl<T: Real> FreeSpaceGeometry<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_perp.is_finite() && self.r_perp > T::zero()) {
            return Err(Error::Domain(format!("r_perp must be positive, got {}", self.r_perp)));
        }
        if !(self.v.is_finite() && self.v > T::zero() && self.v < T::of(SPEED_OF_LIGHT)) {
            return Err(Error::Domain(format!("v must lie in (0, c), got {}", self.v)));
        }
        if !(self.omega_0.is_finite() && self.omega_0 >= T::zero()) {
            return Err(Error::Domain(format!("omega_0 must be non-negative, got {}", self.omega_0)));
        }
        if !self.alpha.is_finite() {
            return Err(Error::Domain("alpha must be finite".into()));
        }
        Ok(())
    }
}

/// Dispersive cavity parameters. All rates are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams<T> {
    /// Qubit–cavity coupling magnitude `|g|`.
    pub g_mag: T,
    pub g_phase: T,
    /// Electron–cavity coupling magnitude `|g_el|`.
    pub g_el_mag: T,
    pub g_el_phase: T,
    /// Detuning `Δ = ω_m − ω₀`.
    pub delta: T,
    /// Cavity linewidth.
    pub gamma: T,
    /// Interaction time `T = L / v`, s.
    pub t_int: T,
    /// Free-space qubit decay rate.
    pub gamma_sp: T,
}

impl<T: Real> CavityParams<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.g_mag,
            self.g_phase,
            self.g_el_mag,
            self.g_el_phase,
            self.delta,
            self.gamma,
            self.t_int,
            self.gamma_sp,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("cavity parameters must be finite".into()));
        }
        if self.delta <= T::zero() {
            return Err(Error::Domain(format!("delta must be positive, got {}", self.delta)));
        }
        if self.gamma <= T::zero() {
            return Err(Error::Domain(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.t_int <= T::zero() {
            return Err(Error::Domain(format!("t_int must be positive, got {}", self.t_int)));
        }
        if self.g_mag < T::zero() || self.g_el_mag < T::zero() || self.gamma_sp < T::zero() {
            return Err(Error::Domain("coupling magnitudes and rates must be non-negative".into()));
        }
        Ok(())
    }
}

/// Free-space coupling `φ₀ = (μ_B μ₀ e)/(2π r_⊥ ħ) · x K₁(x)`, `x = ω₀ r_⊥ / v`.
pub fn phi_free_space<T: Real>(geom: &FreeSpaceGeometry<T>, consts: &PhysicalConstants<T>) -> Result<T> {
    geom.validate()?;
    consts.validate()?;
    let x = geom.omega_0 * geom.r_perp / geom.v;
    let prefactor = consts.mu_b * consts.mu_0 * consts.e_charge / (T::TAU() * geom.r_perp * consts.hbar);
    Ok(prefactor * x_bessel_k1(x)?)
}

/// `g_Q = g_el · T`, carrying the phase of `g_el`.
pub fn g_quantum<T: Real>(cav: &CavityParams<T>) -> C<T> {
    C::from_polar(cav.g_el_mag * cav.t_int, cav.g_el_phase)
}

/// `φ_cav = |g_Q| · |g| / Δ`.
pub fn phi_cavity<T: Real>(cav: &CavityParams<T>) -> Result<T> {
    if cav.delta == T::zero() {
        return Err(Error::Domain("delta must be non-zero".into()));
    }
    cav.validate()?;
    Ok(cav.g_el_mag * cav.t_int * cav.g_mag / cav.delta)
}

/// Phase `arg(g) − arg(g_Q)` wrapped to `(−π, π]`, or `None` when either
/// coupling vanishes and the phase is undefined.
pub fn coupling_phase<T: Real>(cav: &CavityParams<T>) -> Option<T> {
    if cav.g_mag == T::zero() || cav.g_el_mag == T::zero() || cav.t_int == T::zero() {
        return None;
    }
    Some(wrap_phase(cav.g_phase - cav.g_el_phase))
}

fn wrap_phase<T: Real>(a: T) -> T {
    let pi = T::PI();
    if a > -pi && a <= pi {
        return a;
    }
    let tau = T::TAU();
    let r = a - tau * ((a + pi) / tau).floor();
    if r <= -pi {
        r + tau
    } else {
        r
    }
}

/// Cavity-induced decay rates of the qubit and the electron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates<T> {
    /// `Γ_qu = (γ/2)(|g|/Δ)²`
    pub gamma_qu: T,
    /// `Γ_el = 4|g_el|²/(Δ² T)`
    pub gamma_el: T,
}

pub fn decay_rates<T: Real>(cav: &CavityParams<T>) -> Result<DecayRates<T>> {
    if cav.t_int == T::zero() {
        return Err(Error::Domain("t_int must be non-zero".into()));
    }
    cav.validate()?;
    let ratio = cav.g_mag / cav.delta;
    let gamma_qu = cav.gamma * T::of(0.5) * ratio * ratio;
    let gamma_el = T::of(4.0) * cav.g_el_mag * cav.g_el_mag / (cav.delta * cav.delta * cav.t_int);
    Ok(DecayRates { gamma_qu, gamma_el })
}

/// Default margin required for each "much greater than" condition.
pub const DEFAULT_REGIME_THRESHOLD: f64 = 10.0;

/// Names of the dispersive-regime margins.
pub mod margin {
    pub const DELTA_OVER_GAMMA: &str = "delta_over_gamma";
    pub const DELTA_T_OVER_2PI: &str = "delta_t_over_2pi";
    pub const INV_GAMMA_T: &str = "inv_gamma_t";
    pub const DELTA_OVER_G: &str = "delta_over_g";
    pub const DELTA_OVER_G_EL: &str = "delta_over_g_el";
    pub const GAMMA_OVER_GAMMA_QU: &str = "gamma_over_gamma_qu";
    pub const INV_GAMMA_EL_T: &str = "inv_gamma_el_t";
}

/// Derived couplings and the achieved ratio for each regime inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport<T> {
    pub phi_cav: T,
    pub g_q_mag: T,
    pub gamma_qu: T,
    pub gamma_el: T,
    pub threshold: T,
    /// Ratio achieved for each named inequality; `+∞` when the small side vanishes.
    pub margins: BTreeMap<&'static str, T>,
    /// `true` iff every margin is at least `threshold`.
    pub valid: bool,
}

impl<T: Real> RegimeReport<T> {
    /// Margins that fall below the threshold.
    pub fn violations(&self) -> Vec<(&'static str, T)> {
        self.margins.iter().filter(|(_, &r)| !meets(r, self.threshold)).map(|(&k, &v)| (k, v)).collect()
    }
}

// Ratios are formed from products of the same 2π-scaled inputs, so a margin
// that is exactly the threshold in real arithmetic can land an ulp below it.
fn meets<T: Real>(ratio: T, threshold: T) -> bool {
    ratio >= threshold * (T::one() - T::of(4.0) * T::epsilon())
}

fn safe_ratio<T: Real>(num: T, den: T) -> T {
    if den == T::zero() {
        T::infinity()
    } else {
        num / den
    }
}

/// Checks `Δ ≫ γ`, `ΔT ≫ 2π`, `γT ≪ 1`, `g, g_el ≪ Δ`, `Γ_qu ≪ γ` and
/// `Γ_el T ≪ 1` at the given margin.
pub fn validate_dispersive_regime<T: Real>(cav: &CavityParams<T>, threshold: T) -> Result<RegimeReport<T>> {
    if !(threshold >= T::one()) {
        return Err(Error::Domain(format!("threshold must be >= 1, got {threshold}")));
    }
    let rates = decay_rates(cav)?;
    let phi_cav = phi_cavity(cav)?;
    let (d, g, t) = (cav.delta, cav.gamma, cav.t_int);
    let mut margins = BTreeMap::new();
    margins.insert(margin::DELTA_OVER_GAMMA, d / g);
    margins.insert(margin::DELTA_T_OVER_2PI, d * t / T::TAU());
    margins.insert(margin::INV_GAMMA_T, (g * t).recip());
    margins.insert(margin::DELTA_OVER_G, safe_ratio(d, cav.g_mag));
    margins.insert(margin::DELTA_OVER_G_EL, safe_ratio(d, cav.g_el_mag));
    margins.insert(margin::GAMMA_OVER_GAMMA_QU, safe_ratio(g, rates.gamma_qu));
    margins.insert(margin::INV_GAMMA_EL_T, safe_ratio(T::one(), rates.gamma_el * t));
    let valid = margins.values().all(|&r| meets(r, threshold));
    Ok(RegimeReport {
        phi_cav,
        g_q_mag: cav.g_el_mag * cav.t_int,
        gamma_qu: rates.gamma_qu,
        gamma_el: rates.gamma_el,
        threshold,
        margins,
        valid,
    })
}

/// Coherent accumulation over repeated passes without intermediate readout.
pub fn effective_phi_multipass<T: Real>(phi: T, passes: u32) -> Result<T> {
    if passes == 0 {
        return Err(Error::Range("passes must be at least 1".into()));
    }
    Ok(phi * T::of(f64::from(passes)))
}
