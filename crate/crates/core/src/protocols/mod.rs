//! Closed-form protocols on the electron-number statistics: discrimination
//! readout, distribution recovery from the characteristic function, and
//! projective shaping toward a number state.

mod monte_carlo;
mod nnls;
mod projection;
mod recovery;

pub use monte_carlo::{monte_carlo_readout, sample_characteristic_mc, McReadout};
pub use nnls::{nnls, NnlsConfig, NnlsSolution};
pub use projection::{
    binary_schedule, projection_step, run_projection, uniform_schedule, BranchMode, ProjectionOptions,
    ProjectionTrajectory, ProtocolSchedule, ScheduleStep, StepRecord, TrajectoryOutcome, BINARY_SCHEDULE_NOTE,
};
pub use recovery::{
    recover_exact, recover_limited, recovery_kl, ExactRecovery, LimitedRecovery, PhiGrid, RECOVERY_KL_FLOOR,
};

use crate::distributions::NumberDistribution;
use crate::scalar::{Real, C};

/// Closed-form qubit readout after one scatter with `α = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Readout<T> {
    /// `Σ p(n) cos 2φn`
    pub z: T,
    /// `Σ p(n) sin 2φn`
    pub y: T,
}

pub fn discrimination_readout<T: Real>(p: &NumberDistribution<T>, phi: T) -> Readout<T> {
    let two_phi = phi + phi;
    let (mut z, mut y) = (T::zero(), T::zero());
    for (n, w) in p.iter() {
        if w == T::zero() {
            continue;
        }
        let (s, c) = (two_phi * T::of_usize(n)).sin_cos();
        z = z + w * c;
        y = y + w * s;
    }
    Readout { z, y }
}

/// `N(φ) = z̃ − iỹ = Σ p(n) e^{−2iφn}`.
pub fn characteristic_function<T: Real>(p: &NumberDistribution<T>, phi: T) -> C<T> {
    let r = discrimination_readout(p, phi);
    C::new(r.z, -r.y)
}
