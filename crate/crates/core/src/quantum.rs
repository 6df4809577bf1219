//! Exact state simulation of one qubit coupled to the electron-number sector.
//!
//! Joint basis ordering is qubit ⊗ number: index `q·(n_max+1) + n` with
//! `q = 0` for `|↓⟩` and `q = 1` for `|↑⟩`.
//!
//! Readout convention: `Z̃ = |↓⟩⟨↓| − |↑⟩⟨↑|`, `X̃ = 2 Re ρ_↓↑`,
//! `Ỹ = 2 Im ρ_↓↑`. With `α = 0` and the qubit starting in `|↓⟩`, scattering
//! a number state `|n⟩` gives `z̃ = cos 2φn`, `ỹ = sin 2φn`.

use num_traits::{One, Zero};

use crate::distributions::NumberDistribution;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cplx, Real, C};

/// Largest `n_max` accepted by the dense simulator by default.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

fn check_density<T: Real>(m: &CMatrix<T>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidState(format!("{what}: matrix is not square")));
    }
    if !m.is_finite() {
        return Err(Error::InvalidState(format!("{what}: non-finite entries")));
    }
    let herm = m.hermiticity_defect();
    if herm > T::STATE_TOL {
        return Err(Error::InvalidState(format!("{what}: Hermiticity defect {herm}")));
    }
    let tr = m.trace();
    if (tr.re - T::one()).abs() > T::STATE_TOL || tr.im.abs() > T::STATE_TOL {
        return Err(Error::InvalidState(format!("{what}: trace {tr} differs from 1")));
    }
    if !m.is_positive_semidefinite(T::STATE_TOL) {
        return Err(Error::InvalidState(format!("{what}: not positive semidefinite")));
    }
    Ok(())
}

fn normalized<T: Real>(amps: &[C<T>], what: &str) -> Result<Vec<C<T>>> {
    let norm: T = amps.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::InvalidState(format!("{what}: amplitudes have zero or non-finite norm")));
    }
    Ok(amps.iter().map(|a| a.unscale(norm)).collect())
}

/// Qubit density matrix in the `(|↓⟩, |↑⟩)` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState<T> {
    rho: CMatrix<T>,
    pure: Option<[C<T>; 2]>,
}

impl<T: Real> QubitState<T> {
    pub fn down() -> Self {
        Self::pure([C::one(), C::zero()]).expect("unit vector")
    }

    pub fn up() -> Self {
        Self::pure([C::zero(), C::one()]).expect("unit vector")
    }

    pub fn maximally_mixed() -> Self {
        let half = cplx(T::of(0.5), T::zero());
        let rho = CMatrix::from_fn(2, 2, |r, c| if r == c { half } else { C::zero() });
        Self { rho, pure: None }
    }

    /// Pure state from (unnormalized) amplitudes `(a_↓, a_↑)`.
    pub fn pure(amps: [C<T>; 2]) -> Result<Self> {
        let v = normalized(&amps, "qubit")?;
        Ok(Self { rho: CMatrix::outer(&v), pure: Some([v[0], v[1]]) })
    }

    pub fn from_matrix(rho: CMatrix<T>) -> Result<Self> {
        if rho.rows() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: rho.rows() });
        }
        check_density(&rho, "qubit")?;
        Ok(Self { rho, pure: None })
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.rho
    }

    pub fn amplitudes(&self) -> Option<[C<T>; 2]> {
        self.pure
    }
}

/// Density matrix `ρ_{n,n'}` on the electron-number sector.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectronDensityMatrix<T> {
    rho: CMatrix<T>,
    pure: Option<Vec<C<T>>>,
}

impl<T: Real> ElectronDensityMatrix<T> {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(rho: CMatrix<T>) -> Result<Self> {
        check_density(&rho, "electron state")?;
        Ok(Self { rho, pure: None })
    }

    /// Pure state from (unnormalized) number-basis amplitudes.
    pub fn pure(amps: &[C<T>]) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidState("electron state needs at least one level".into()));
        }
        let v = normalized(amps, "electron state")?;
        Ok(Self { rho: CMatrix::outer(&v), pure: Some(v) })
    }

    pub fn fock(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::Range(format!("n = {n} exceeds n_max = {n_max}")));
        }
        let mut amps = vec![C::zero(); n_max + 1];
        amps[n] = C::one();
        Self::pure(&amps)
    }

    /// Incoherent mixture `Σ p(n) |n⟩⟨n|`.
    pub fn diagonal(dist: &NumberDistribution<T>) -> Self {
        let w = dist.weights();
        let rho = CMatrix::from_fn(w.len(), w.len(), |r, c| if r == c { cplx(w[r], T::zero()) } else { C::zero() });
        Self { rho, pure: None }
    }

    /// Coherent superposition `Σ √p(n) |n⟩` with real amplitudes.
    pub fn coherent(dist: &NumberDistribution<T>) -> Self {
        let amps: Vec<C<T>> = dist.weights().iter().map(|&p| cplx(p.sqrt(), T::zero())).collect();
        Self::pure(&amps).expect("distribution is normalized")
    }

    pub(crate) fn from_parts_unchecked(rho: CMatrix<T>, pure: Option<Vec<C<T>>>) -> Self {
        Self { rho, pure }
    }

    pub fn n_max(&self) -> usize {
        self.rho.rows() - 1
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.rho
    }

    pub fn amplitudes(&self) -> Option<&[C<T>]> {
        self.pure.as_deref()
    }

    /// Diagonal `p(n) = ρ_{n,n}`.
    pub fn populations(&self) -> Vec<T> {
        (0..self.dim()).map(|n| self.rho[(n, n)].re).collect()
    }

    /// Number statistics of this state, renormalized against rounding.
    pub fn to_distribution(&self) -> Result<NumberDistribution<T>> {
        NumberDistribution::from_weights(self.populations().into_iter().map(|p| p.max(T::zero())).collect())
    }

    /// `⟨n|ρ|n⟩`
    pub fn fidelity_to_fock(&self, n: usize) -> T {
        if n < self.dim() {
            self.rho[(n, n)].re
        } else {
            T::zero()
        }
    }

    /// Re-checks the density-matrix invariants.
    pub fn validate(&self) -> Result<()> {
        check_density(&self.rho, "electron state")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr<T> {
    Pure(Vec<C<T>>),
    Mixed(CMatrix<T>),
}

/// State of the qubit ⊗ number sector.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState<T> {
    levels: usize,
    repr: Repr<T>,
}

impl<T: Real> JointState<T> {
    /// Number of electron levels, `n_max + 1`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        2 * self.levels
    }

    pub fn is_pure_repr(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    /// Dense density matrix of the joint state.
    pub fn density_matrix(&self) -> CMatrix<T> {
        match &self.repr {
            Repr::Pure(psi) => CMatrix::outer(psi),
            Repr::Mixed(rho) => rho.clone(),
        }
    }

    /// Drops the pure-state representation.
    pub fn into_mixed(self) -> Self {
        let rho = self.density_matrix();
        Self { levels: self.levels, repr: Repr::Mixed(rho) }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.repr {
            Repr::Pure(psi) => {
                let norm: T = psi.iter().map(|a| a.norm_sqr()).sum();
                if (norm - T::one()).abs() > T::STATE_TOL {
                    return Err(Error::InvalidState(format!("joint state norm² {norm}")));
                }
                Ok(())
            }
            Repr::Mixed(rho) => check_density(rho, "joint state"),
        }
    }

    /// Reduced qubit matrix `Tr_el ρ`.
    pub fn reduced_qubit(&self) -> CMatrix<T> {
        let l = self.levels;
        let mut out = CMatrix::zeros(2, 2);
        for q in 0..2 {
            for qp in 0..2 {
                let mut acc = C::zero();
                for n in 0..l {
                    acc = acc + self.element(q * l + n, qp * l + n);
                }
                out[(q, qp)] = acc;
            }
        }
        out
    }

    /// Reduced electron matrix `Tr_qubit ρ`.
    pub fn reduced_electron(&self) -> CMatrix<T> {
        let l = self.levels;
        CMatrix::from_fn(l, l, |n, np| self.element(n, np) + self.element(l + n, l + np))
    }

    fn element(&self, r: usize, c: usize) -> C<T> {
        match &self.repr {
            Repr::Pure(psi) => psi[r] * psi[c].conj(),
            Repr::Mixed(rho) => rho[(r, c)],
        }
    }
}

/// Coupling strength `φ` and phase `α` of the number-entangling scatter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterParams<T> {
    pub phi: T,
    pub alpha: T,
}

impl<T: Real> ScatterParams<T> {
    pub fn new(phi: T, alpha: T) -> Self {
        Self { phi, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phi.is_finite() && self.alpha.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain("scatter parameters must be finite".into()))
        }
    }
}

/// `Σ_α = e^{iα}σ + e^{−iα}σ†`, a Hermitian involution.
pub fn sigma_alpha<T: Real>(alpha: T) -> CMatrix<T> {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = C::from_polar(T::one(), alpha);
    m[(1, 0)] = C::from_polar(T::one(), -alpha);
    m
}

/// `cos θ · I + i sin θ · Σ_α`, i.e. `exp(iθΣ_α)`.
fn involution_exp<T: Real>(theta: T, alpha: T) -> CMatrix<T> {
    let (s, c) = theta.sin_cos();
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = cplx(c, T::zero());
    m[(1, 1)] = cplx(c, T::zero());
    m[(0, 1)] = C::from_polar(T::one(), alpha) * cplx(T::zero(), s);
    m[(1, 0)] = C::from_polar(T::one(), -alpha) * cplx(T::zero(), s);
    m
}

/// Block of the scattering matrix acting on number sector `n`:
/// `exp(−iφnΣ_α) = cos(φn) I − i sin(φn) Σ_α`.
pub fn qubit_block_rotation<T: Real>(n: usize, params: &ScatterParams<T>) -> CMatrix<T> {
    involution_exp(-params.phi * T::of_usize(n), params.alpha)
}

/// Preparation unitary `exp(+iθΣ_α)`, applied before the scatter so that the
/// `|↓⟩ → |↓⟩` amplitude on sector `n` is `cos(φn − θ)`.
pub fn preparation_rotation<T: Real>(theta: T, alpha: T) -> CMatrix<T> {
    involution_exp(theta, alpha)
}

pub fn scattering_unitary<T: Real>(params: &ScatterParams<T>, n_max: usize) -> Result<CMatrix<T>> {
    scattering_unitary_with_cap(params, n_max, DEFAULT_DIMENSION_CAP)
}

/// Dense `2(n_max+1)`-dimensional scattering matrix, block diagonal in `n`.
pub fn scattering_unitary_with_cap<T: Real>(params: &ScatterParams<T>, n_max: usize, cap: usize) -> Result<CMatrix<T>> {
    if n_max > cap {
        return Err(Error::Resource { requested: n_max, cap });
    }
    params.validate()?;
    let l = n_max + 1;
    let mut s = CMatrix::zeros(2 * l, 2 * l);
    for n in 0..l {
        let b = qubit_block_rotation(n, params);
        for q in 0..2 {
            for qp in 0..2 {
                s[(q * l + n, qp * l + n)] = b[(q, qp)];
            }
        }
    }
    Ok(s)
}

/// Product state `qubit ⊗ ρ_el`. Pure inputs give a pure joint state.
pub fn prepare_joint<T: Real>(rho_el: &ElectronDensityMatrix<T>, qubit: &QubitState<T>) -> JointState<T> {
    let levels = rho_el.dim();
    let repr = match (qubit.amplitudes(), rho_el.amplitudes()) {
        (Some(a), Some(b)) => Repr::Pure(a.iter().flat_map(|&aq| b.iter().map(move |&bn| aq * bn)).collect()),
        _ => Repr::Mixed(qubit.matrix().kron(rho_el.matrix())),
    };
    JointState { levels, repr }
}

/// Applies an arbitrary dense joint unitary: `ψ → Uψ` or `ρ → UρU†`.
pub fn apply_unitary<T: Real>(state: &JointState<T>, u: &CMatrix<T>) -> Result<JointState<T>> {
    if u.rows() != state.dim() || u.cols() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: u.rows() });
    }
    let repr = match &state.repr {
        Repr::Pure(psi) => Repr::Pure(u.matvec(psi)),
        Repr::Mixed(rho) => Repr::Mixed(u.matmul(rho).matmul(&u.adjoint())),
    };
    Ok(JointState { levels: state.levels, repr })
}

/// Applies a block-diagonal joint unitary given as one 2×2 block per sector.
fn apply_blocks<T: Real>(state: &JointState<T>, blocks: &[CMatrix<T>]) -> JointState<T> {
    let l = state.levels;
    let repr = match &state.repr {
        Repr::Pure(psi) => {
            let mut out = vec![C::zero(); 2 * l];
            for (n, b) in blocks.iter().enumerate() {
                let (d, u) = (psi[n], psi[l + n]);
                out[n] = b[(0, 0)] * d + b[(0, 1)] * u;
                out[l + n] = b[(1, 0)] * d + b[(1, 1)] * u;
            }
            Repr::Pure(out)
        }
        Repr::Mixed(rho) => {
            let mut out = CMatrix::zeros(2 * l, 2 * l);
            for n in 0..l {
                let b = &blocks[n];
                for np in 0..l {
                    let bp = &blocks[np];
                    // (B_n X B_{n'}†) for the 2×2 sub-block X at sectors (n, n')
                    let x = [
                        [rho[(n, np)], rho[(n, l + np)]],
                        [rho[(l + n, np)], rho[(l + n, l + np)]],
                    ];
                    for q in 0..2 {
                        for qp in 0..2 {
                            let mut acc = C::zero();
                            for a in 0..2 {
                                for c in 0..2 {
                                    acc = acc + b[(q, a)] * x[a][c] * bp[(qp, c)].conj();
                                }
                            }
                            out[(q * l + n, qp * l + np)] = acc;
                        }
                    }
                }
            }
            Repr::Mixed(out)
        }
    };
    JointState { levels: l, repr }
}

/// `S ρ S†` with `S = exp(−iφ Σ_α N̂)`, exploiting the block structure.
pub fn apply_scatter<T: Real>(state: &JointState<T>, params: &ScatterParams<T>) -> Result<JointState<T>> {
    params.validate()?;
    let blocks: Vec<_> = (0..state.levels).map(|n| qubit_block_rotation(n, params)).collect();
    Ok(apply_blocks(state, &blocks))
}

/// Applies a 2×2 unitary to the qubit factor only.
pub fn apply_qubit_unitary<T: Real>(state: &JointState<T>, u: &CMatrix<T>) -> Result<JointState<T>> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: u.rows() });
    }
    let blocks = vec![u.clone(); state.levels];
    Ok(apply_blocks(state, &blocks))
}

/// Qubit readout expectations `(x̃, ỹ, z̃)` after tracing out the beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

pub fn qubit_expectations<T: Real>(state: &JointState<T>) -> BlochVector<T> {
    let q = state.reduced_qubit();
    let two = T::of(2.0);
    BlochVector { x: two * q[(0, 1)].re, y: two * q[(0, 1)].im, z: q[(0, 0)].re - q[(1, 1)].re }
}

/// Outcome of a projective `Z̃` measurement on the qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitMeasurement<T> {
    pub p_down: T,
    pub p_up: T,
    /// Electron state conditioned on `|↓⟩`; `None` when that branch is degenerate.
    pub down: Option<ElectronDensityMatrix<T>>,
    /// Electron state conditioned on `|↑⟩`; `None` when that branch is degenerate.
    pub up: Option<ElectronDensityMatrix<T>>,
}

pub fn measure_qubit_z<T: Real>(state: &JointState<T>) -> QubitMeasurement<T> {
    let l = state.levels;
    let branch = |q: usize| -> (T, Option<ElectronDensityMatrix<T>>) {
        match &state.repr {
            Repr::Pure(psi) => {
                let amps = &psi[q * l..(q + 1) * l];
                let p: T = amps.iter().map(|a| a.norm_sqr()).sum();
                if p < T::BRANCH_TOL {
                    return (p.max(T::zero()), None);
                }
                let norm = p.sqrt();
                let v: Vec<C<T>> = amps.iter().map(|a| a.unscale(norm)).collect();
                (p, Some(ElectronDensityMatrix::from_parts_unchecked(CMatrix::outer(&v), Some(v))))
            }
            Repr::Mixed(rho) => {
                let p: T = (0..l).map(|n| rho[(q * l + n, q * l + n)].re).sum();
                if p < T::BRANCH_TOL {
                    return (p.max(T::zero()), None);
                }
                let m = CMatrix::from_fn(l, l, |n, np| rho[(q * l + n, q * l + np)].unscale(p));
                (p, Some(ElectronDensityMatrix::from_parts_unchecked(m, None)))
            }
        }
    };
    let (p_down, down) = branch(0);
    let (p_up, up) = branch(1);
    QubitMeasurement { p_down, p_up, down, up }
}
