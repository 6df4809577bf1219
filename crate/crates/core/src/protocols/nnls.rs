//! Lawson–Hanson active-set non-negative least squares.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnlsConfig<T> {
    /// Cap on outer (variable-entering) iterations.
    pub max_iter: usize,
    /// Stop once every inactive gradient component is at most this.
    pub grad_tol: T,
}

impl<T: Real> NnlsConfig<T> {
    /// `10·n` outer iterations, gradient tolerance `1e-12`.
    pub fn for_columns(n: usize) -> Self {
        Self { max_iter: 10 * n.max(1), grad_tol: T::of(1e-12) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution<T> {
    pub x: Vec<T>,
    /// `‖Ax − b‖₂`
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
}

struct Problem<'a, T> {
    rows: &'a [Vec<T>],
    b: &'a [T],
    n: usize,
}

impl<T: Real> Problem<'_, T> {
    fn residual_vec(&self, x: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .zip(self.b)
            .map(|(row, &bi)| bi - row.iter().zip(x).map(|(&a, &xj)| a * xj).sum::<T>())
            .collect()
    }

    /// `Aᵀ(b − Ax)`
    fn gradient(&self, x: &[T]) -> Vec<T> {
        let r = self.residual_vec(x);
        (0..self.n).map(|j| self.rows.iter().zip(&r).map(|(row, &ri)| row[j] * ri).sum()).collect()
    }

    fn residual(&self, x: &[T]) -> T {
        self.residual_vec(x).iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Unconstrained least squares restricted to the columns in `set`,
    /// by Householder QR. Numerically dependent columns get coefficient 0.
    fn solve_subset(&self, set: &[usize]) -> Vec<T> {
        let m = self.rows.len();
        let k = set.len();
        // column-major copy of A restricted to `set`
        let mut a: Vec<Vec<T>> = set.iter().map(|&j| self.rows.iter().map(|row| row[j]).collect()).collect();
        let mut rhs: Vec<T> = self.b.to_vec();
        let scale = a.iter().flat_map(|c| c.iter()).fold(T::zero(), |acc, v| acc.max(v.abs()));
        let tiny = scale * T::of_usize(m.max(k)) * T::epsilon();
        let mut diag = vec![T::zero(); k];

        for col in 0..k.min(m) {
            let norm = a[col][col..].iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm <= tiny {
                diag[col] = T::zero();
                continue;
            }
            let alpha = if a[col][col] > T::zero() { -norm } else { norm };
            let mut v: Vec<T> = a[col][col..].to_vec();
            v[0] = v[0] - alpha;
            let vnorm2: T = v.iter().map(|&x| x * x).sum();
            if vnorm2 == T::zero() {
                diag[col] = alpha;
                continue;
            }
            let apply = |target: &mut [T]| {
                let dot: T = v.iter().zip(target.iter()).map(|(&vi, &ti)| vi * ti).sum();
                let f = (dot + dot) / vnorm2;
                for (t, &vi) in target.iter_mut().zip(&v) {
                    *t = *t - f * vi;
                }
            };
            for c in (col + 1)..k {
                apply(&mut a[c][col..]);
            }
            apply(&mut rhs[col..]);
            diag[col] = alpha;
        }

        let mut z = vec![T::zero(); k];
        for i in (0..k.min(m)).rev() {
            if diag[i].abs() <= tiny {
                continue;
            }
            let mut s = rhs[i];
            for c in (i + 1)..k {
                s = s - a[c][i] * z[c];
            }
            z[i] = s / diag[i];
        }
        z
    }
}

/// Minimizes `‖Ax − b‖₂` subject to `x ≥ 0`.
///
/// `rows` holds `A` row by row. The current iterate is returned even when
/// the iteration cap is hit; `converged` tells the two cases apart.
pub fn nnls<T: Real>(rows: &[Vec<T>], b: &[T], config: &NnlsConfig<T>) -> NnlsSolution<T> {
    let n = rows.first().map_or(0, Vec::len);
    assert_eq!(rows.len(), b.len(), "nnls: row count mismatch");
    assert!(rows.iter().all(|r| r.len() == n), "nnls: ragged matrix");
    let prob = Problem { rows, b, n };

    let mut x = vec![T::zero(); n];
    let mut passive = vec![false; n];
    let mut blocked = vec![false; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        let w = prob.gradient(&x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && !blocked[j])
            .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap_or(std::cmp::Ordering::Equal));
        let t = match candidate {
            Some(t) if w[t] > config.grad_tol => t,
            _ => {
                // blocked columns that still carry gradient mean the solver stalled
                converged = (0..n).all(|j| passive[j] || w[j] <= config.grad_tol);
                break;
            }
        };
        iterations += 1;
        passive[t] = true;

        let mut moved = false;
        for _ in 0..=n {
            let set: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z_sub = prob.solve_subset(&set);
            let mut z = vec![T::zero(); n];
            for (&j, &v) in set.iter().zip(&z_sub) {
                z[j] = v;
            }
            if set.iter().all(|&j| z[j] > T::zero()) {
                x = z;
                moved = true;
                break;
            }
            if !z[t].is_finite() || (set.len() == 1 && z[t] <= T::zero()) {
                break;
            }
            // step toward z until the first passive variable hits zero
            let mut alpha = T::one();
            let mut hit = None;
            for &j in &set {
                if z[j] <= T::zero() {
                    let denom = x[j] - z[j];
                    let a = if denom > T::zero() { x[j] / denom } else { T::zero() };
                    if hit.is_none() || a < alpha {
                        alpha = a;
                        hit = Some(j);
                    }
                }
            }
            for j in 0..n {
                x[j] = x[j] + alpha * (z[j] - x[j]);
            }
            if let Some(h) = hit {
                x[h] = T::zero();
                passive[h] = false;
            }
            for &j in &set {
                if passive[j] && x[j] <= T::epsilon() * T::of(16.0) {
                    x[j] = T::zero();
                    passive[j] = false;
                }
            }
            moved = true;
            if !passive[t] {
                break;
            }
        }

        if moved && x[t] > T::zero() {
            blocked.iter_mut().for_each(|b| *b = false);
        } else {
            // The entering column could not take a positive value.
            passive[t] = false;
            x[t] = T::zero();
            blocked[t] = true;
        }
    }

    let residual = prob.residual(&x);
    NnlsSolution { x, residual, iterations, converged }
}
