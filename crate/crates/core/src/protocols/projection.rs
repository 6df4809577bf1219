//! Projective shaping of the beam's number statistics by repeated
//! prepare–scatter–measure rounds on the qubit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::quantum::{ElectronDensityMatrix, QubitMeasurement};
use crate::scalar::{cplx, Real};

/// Describes the indexing used by [`binary_schedule`]; written into run
/// metadata.
pub const BINARY_SCHEDULE_NOTE: &str =
    "phi_i = pi / 2^(i+1), theta_i = +phi_i * n_star for i = 0..ceil(log2(n_max+1))-1; \
     indices start one below pi/2^i so the first round already removes odd offsets n - n_star";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleStep<T> {
    pub phi: T,
    pub theta: T,
}

/// Ordered `(φ_i, θ_i)` rounds aimed at the number state `|target⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSchedule<T> {
    target: usize,
    steps: Vec<ScheduleStep<T>>,
}

impl<T: Real> ProtocolSchedule<T> {
    pub fn new(target: usize, steps: Vec<ScheduleStep<T>>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Domain("schedule must have at least one step".into()));
        }
        if steps.iter().any(|s| !(s.phi.is_finite() && s.theta.is_finite())) {
            return Err(Error::Domain("schedule entries must be finite".into()));
        }
        Ok(Self { target, steps })
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn steps(&self) -> &[ScheduleStep<T>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// `steps` identical rounds `(φ, φ·n_star)`.
pub fn uniform_schedule<T: Real>(phi: T, n_star: usize, steps: usize) -> Result<ProtocolSchedule<T>> {
    if steps == 0 {
        return Err(Error::Range("uniform schedule needs at least one step".into()));
    }
    let step = ScheduleStep { phi, theta: phi * T::of_usize(n_star) };
    ProtocolSchedule::new(n_star, vec![step; steps])
}

/// Halving schedule `φ_i = π/2^{i+1}`, `θ_i = φ_i n*`. Round `i` keeps only
/// offsets `n − n*` divisible by `2^{i+1}`, so `⌈log₂(n_max+1)⌉` rounds
/// isolate `n*` on `0..=n_max`.
pub fn binary_schedule<T: Real>(n_star: usize, n_max: usize) -> Result<ProtocolSchedule<T>> {
    if n_star > n_max {
        return Err(Error::Range(format!("n_star = {n_star} exceeds n_max = {n_max}")));
    }
    let levels = n_max + 1;
    let rounds = (usize::BITS - (levels - 1).leading_zeros()).max(1) as usize;
    let steps = (0..rounds)
        .map(|i| {
            let phi = T::PI() / T::of(2f64.powi(i as i32 + 1));
            ScheduleStep { phi, theta: phi * T::of_usize(n_star) }
        })
        .collect();
    ProtocolSchedule::new(n_star, steps)
}

/// One round in closed form: prepare with `exp(iθΣ)`, scatter with
/// strength `φ`, measure `Z̃`. The `|↓⟩` branch rescales `ρ_{n,n'}` by
/// `cos(φn−θ)cos(φn'−θ)`, the `|↑⟩` branch by the matching sines.
pub fn projection_step<T: Real>(rho: &ElectronDensityMatrix<T>, phi: T, theta: T) -> QubitMeasurement<T> {
    let dim = rho.dim();
    let (sin, cos): (Vec<T>, Vec<T>) = (0..dim).map(|n| (phi * T::of_usize(n) - theta).sin_cos()).unzip();
    let populations = rho.populations();
    let p_down: T = populations.iter().zip(&cos).map(|(&p, &c)| p * c * c).sum();
    let p_up: T = populations.iter().zip(&sin).map(|(&p, &s)| p * s * s).sum();

    let branch = |factors: &[T], prob: T| -> Option<ElectronDensityMatrix<T>> {
        if prob < T::BRANCH_TOL {
            return None;
        }
        if let Some(amps) = rho.amplitudes() {
            let norm = prob.sqrt();
            let v: Vec<_> = amps.iter().zip(factors).map(|(a, &f)| a.scale(f / norm)).collect();
            return Some(ElectronDensityMatrix::from_parts_unchecked(CMatrix::outer(&v), Some(v)));
        }
        let m = rho.matrix();
        let out = CMatrix::from_fn(dim, dim, |n, np| {
            let f = factors[n] * factors[np];
            if f == T::zero() {
                cplx(T::zero(), T::zero())
            } else {
                m[(n, np)].scale(f / prob)
            }
        });
        Some(ElectronDensityMatrix::from_parts_unchecked(out, None))
    };

    QubitMeasurement { p_down, p_up, down: branch(&cos, p_down), up: branch(&sin, p_up) }
}

/// How measurement outcomes are chosen at each round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchMode {
    /// Condition on `|↓⟩` every round; success probability is tracked.
    PostSelect,
    /// Draw outcomes by the Born rule. An `|↑⟩` outcome ends the attempt;
    /// with `retry` a fresh beam is sent, up to `max_attempts` in total.
    Sampled { seed: u64, retry: bool, max_attempts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions<T> {
    pub mode: BranchMode,
    /// Stop early once `⟨n*|ρ|n*⟩` reaches this value.
    pub stop_at_fidelity: Option<T>,
    /// Keep the conditioned electron state after each round.
    pub keep_snapshots: bool,
}

impl<T: Real> Default for ProjectionOptions<T> {
    fn default() -> Self {
        Self { mode: BranchMode::PostSelect, stop_at_fidelity: None, keep_snapshots: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    /// 1-based round index.
    pub step: usize,
    pub phi: T,
    pub theta: T,
    pub p_down: T,
    /// `⟨n*|ρ|n*⟩` after conditioning.
    pub fidelity: T,
    /// Product of `p_down` over rounds `1..=step`.
    pub cumulative_success: T,
    pub state: Option<ElectronDensityMatrix<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryOutcome {
    /// Every scheduled round was applied (or the fidelity target was met).
    Completed,
    /// The `|↓⟩` branch had vanishing probability at this 1-based round.
    DegenerateBranch { step: usize },
    /// A sampled `|↑⟩` outcome ended the last attempt at this round.
    Failed { step: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionTrajectory<T> {
    pub target: usize,
    pub initial_fidelity: T,
    pub records: Vec<StepRecord<T>>,
    pub cumulative_success: T,
    /// Beams used; always 1 unless sampling with retries.
    pub attempts: usize,
    pub outcome: TrajectoryOutcome,
    pub final_state: ElectronDensityMatrix<T>,
}

impl<T: Real> ProjectionTrajectory<T> {
    pub fn final_fidelity(&self) -> T {
        self.records.last().map_or(self.initial_fidelity, |r| r.fidelity)
    }

    /// First 1-based round at which the fidelity reaches `level`.
    pub fn steps_to_fidelity(&self, level: T) -> Option<usize> {
        self.records.iter().find(|r| r.fidelity >= level).map(|r| r.step)
    }
}

/// Iterates [`projection_step`] along `schedule`.
pub fn run_projection<T: Real>(
    rho: &ElectronDensityMatrix<T>,
    schedule: &ProtocolSchedule<T>,
    options: &ProjectionOptions<T>,
) -> Result<ProjectionTrajectory<T>> {
    let target = schedule.target();
    if target > rho.n_max() {
        return Err(Error::Range(format!("target {target} exceeds n_max = {}", rho.n_max())));
    }
    let (mut rng, retry, max_attempts) = match options.mode {
        BranchMode::PostSelect => (None, false, 1),
        BranchMode::Sampled { seed, retry, max_attempts } => {
            (Some(ChaCha8Rng::seed_from_u64(seed)), retry, max_attempts.max(1))
        }
    };

    let mut attempts = 0;
    loop {
        attempts += 1;
        let mut state = rho.clone();
        let mut records = Vec::new();
        let mut cumulative = T::one();
        let mut outcome = TrajectoryOutcome::Completed;

        for (i, step) in schedule.steps().iter().enumerate() {
            let m = projection_step(&state, step.phi, step.theta);
            let take_down = match rng.as_mut() {
                None => true,
                Some(r) => T::of(r.random::<f64>()) < m.p_down,
            };
            if !take_down {
                outcome = TrajectoryOutcome::Failed { step: i + 1 };
                break;
            }
            let Some(next) = m.down else {
                outcome = TrajectoryOutcome::DegenerateBranch { step: i + 1 };
                break;
            };
            state = next;
            cumulative = cumulative * m.p_down;
            let fidelity = state.fidelity_to_fock(target);
            records.push(StepRecord {
                step: i + 1,
                phi: step.phi,
                theta: step.theta,
                p_down: m.p_down,
                fidelity,
                cumulative_success: cumulative,
                state: options.keep_snapshots.then(|| state.clone()),
            });
            if options.stop_at_fidelity.is_some_and(|f| fidelity >= f) {
                break;
            }
        }

        let failed = matches!(outcome, TrajectoryOutcome::Failed { .. });
        if failed && retry && attempts < max_attempts {
            continue;
        }
        return Ok(ProjectionTrajectory {
            target,
            initial_fidelity: rho.fidelity_to_fock(target),
            records,
            cumulative_success: cumulative,
            attempts,
            outcome,
            final_state: state,
        });
    }
}
