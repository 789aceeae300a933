//! Dirichlet eigenbasis of intervals and rectangles, the spectral fractional
//! Laplacian `A_s`, and the Green/Robin functions of `A_s`.

mod green;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::domain::DomainSpec;
use crate::domain::{DomainKind, GridField};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub use green::{
    critical_points, green, green_heat, regular_part, robin, robin_critical_points, robin_on_grid, GreenValue,
    RobinOptions, RobinValue,
};

/// Dirichlet Laplacian eigenpairs of a domain in closed form: mode indices,
/// eigenvalues, and point evaluation of the L²-normalized sine products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModeSet<T> {
    pub kind: DomainKind<T>,
    /// `[k]` for intervals, `[kx, ky]` for rectangles (second entry 0 on intervals).
    pub indices: Vec<[usize; 2]>,
    pub lambdas: Vec<T>,
}

fn sine_mode<T: Real>(k: usize, a: T, len: T, x: T) -> T {
    (T::of(2.0) / len).sqrt() * (T::of_usize(k) * T::PI() * (x - a) / len).sin()
}

fn axis_lambda<T: Real>(k: usize, len: T) -> T {
    let w = T::of_usize(k) * T::PI() / len;
    w * w
}

impl<T: Real> ModeSet<T> {
    /// The `k` lowest modes, ordered by eigenvalue, ties by `(kx, ky)`.
    pub fn lowest(kind: DomainKind<T>, k: usize) -> Self {
        match kind {
            DomainKind::Interval { a, b } => {
                let indices: Vec<[usize; 2]> = (1..=k).map(|j| [j, 0]).collect();
                let lambdas = indices.iter().map(|ix| axis_lambda(ix[0], b - a)).collect();
                ModeSet { kind, indices, lambdas }
            }
            DomainKind::Rectangle { ax, bx, ay, by } => {
                let (lx, ly) = (bx - ax, by - ay);
                let lam = |i: usize, j: usize| axis_lambda(i, lx) + axis_lambda(j, ly);
                let count = |cap: T| -> usize {
                    let mut c = 0;
                    let mut i = 1;
                    while axis_lambda(i, lx) + axis_lambda(1, ly) <= cap {
                        let rest = cap - axis_lambda(i, lx);
                        c += (rest.sqrt() * ly / T::PI()).floor().to_usize().unwrap_or(0);
                        i += 1;
                    }
                    c
                };
                // smallest cap holding at least k modes, by bisection on the eigenvalue
                let mut hi = lam(1, 1);
                while count(hi) < k {
                    hi = hi * T::of(2.0);
                }
                let mut lo = T::zero();
                for _ in 0..200 {
                    let mid = T::of(0.5) * (lo + hi);
                    if count(mid) >= k {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo <= hi * T::eps() * T::of(4.0) {
                        break;
                    }
                }
                let cap = hi * (T::one() + T::eps() * T::of(64.0));
                let mut pairs = Vec::new();
                let mut i = 1;
                while axis_lambda(i, lx) + axis_lambda(1, ly) <= cap {
                    let mut j = 1;
                    while lam(i, j) <= cap {
                        pairs.push(([i, j], lam(i, j)));
                        j += 1;
                    }
                    i += 1;
                }
                pairs.sort_by(|p, q| p.1.partial_cmp(&q.1).unwrap().then(p.0.cmp(&q.0)));
                pairs.truncate(k);
                let (indices, lambdas) = pairs.into_iter().unzip();
                ModeSet { kind, indices, lambdas }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Rectangle { .. } => 2,
        }
    }

    /// Largest index used along `axis`.
    pub fn max_index(&self, axis: usize) -> usize {
        self.indices.iter().map(|ix| ix[axis]).max().unwrap_or(0)
    }

    pub fn eval(&self, mode: usize, x: &[T]) -> T {
        let ix = self.indices[mode];
        match self.kind {
            DomainKind::Interval { a, b } => sine_mode(ix[0], a, b - a, x[0]),
            DomainKind::Rectangle { ax, bx, ay, by } => {
                sine_mode(ix[0], ax, bx - ax, x[0]) * sine_mode(ix[1], ay, by - ay, x[1])
            }
        }
    }
}

/// Eigenpairs together with their samples on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EigenBasis<T> {
    pub domain: DomainSpec<T>,
    pub modes: ModeSet<T>,
    /// `phis[k * nodes + i] = φ_k(x_i)`.
    pub phis: Vec<T>,
}

pub fn build_basis<T: Real>(domain: &DomainSpec<T>, k: usize) -> Result<EigenBasis<T>> {
    if k == 0 {
        return Err(Error::OutOfRange("need at least one mode".into()));
    }
    let modes = ModeSet::lowest(domain.kind, k);
    let limit = domain.cells / 2;
    for axis in 0..domain.dim() {
        if modes.max_index(axis) > limit {
            return Err(Error::UnderResolved(format!(
                "mode index {} on axis {axis} exceeds N/2 = {limit}",
                modes.max_index(axis)
            )));
        }
    }
    let nodes = domain.node_count();
    let dim = domain.dim();
    let phis: Vec<T> = (0..modes.len())
        .into_par_iter()
        .flat_map_iter(|m| {
            let modes = &modes;
            (0..nodes).map(move |i| {
                let x = domain.node(i);
                if domain.is_boundary_node(i) {
                    T::zero()
                } else {
                    modes.eval(m, &x[..dim])
                }
            })
        })
        .collect();
    Ok(EigenBasis { domain: *domain, modes, phis })
}

impl<T: Real> EigenBasis<T> {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn lambdas(&self) -> &[T] {
        &self.modes.lambdas
    }

    pub fn phi(&self, k: usize) -> &[T] {
        let nodes = self.domain.node_count();
        &self.phis[k * nodes..(k + 1) * nodes]
    }

    /// Grid values `Σ a_k φ_k(x_i)`.
    pub fn synthesize(&self, coeffs: &[T]) -> Vec<T> {
        let nodes = self.domain.node_count();
        (0..nodes)
            .into_par_iter()
            .map(|i| {
                let mut acc = T::zero();
                for (k, a) in coeffs.iter().enumerate() {
                    acc = acc + *a * self.phis[k * nodes + i];
                }
                acc
            })
            .collect()
    }

    /// Trapezoid projections `⟨f, φ_k⟩`; exact for sine modes below N.
    pub fn analyze(&self, values: &[T]) -> Vec<T> {
        let nodes = self.domain.node_count();
        let vol = self.domain.cell_volume();
        (0..self.len())
            .into_par_iter()
            .map(|k| {
                let row = &self.phis[k * nodes..(k + 1) * nodes];
                row.iter().zip(values).map(|(p, v)| *p * *v).sum::<T>() * vol
            })
            .collect()
    }

    /// Trapezoid Gram matrix of the sampled modes (row-major K×K).
    pub fn gram(&self) -> Vec<T> {
        let k = self.len();
        let mut g = vec![T::zero(); k * k];
        for i in 0..k {
            let c = self.analyze(self.phi(i));
            g[i * k..(i + 1) * k].copy_from_slice(&c);
        }
        g
    }
}

/// Coefficients `a_k` of `Σ a_k φ_k` in a shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    pub basis: Arc<EigenBasis<T>>,
    pub coeffs: Vec<T>,
}

impl<T: Real> SpectralField<T> {
    pub fn new(basis: Arc<EigenBasis<T>>, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::GridMismatch);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Precondition("non-finite coefficient".into()));
        }
        Ok(SpectralField { basis, coeffs })
    }

    pub fn zeros(basis: Arc<EigenBasis<T>>) -> Self {
        let k = basis.len();
        SpectralField { basis, coeffs: vec![T::zero(); k] }
    }

    pub fn from_grid(basis: Arc<EigenBasis<T>>, f: &GridField<T>) -> Result<Self> {
        if f.domain != basis.domain {
            return Err(Error::GridMismatch);
        }
        let coeffs = basis.analyze(&f.values);
        Ok(SpectralField { basis, coeffs })
    }

    pub fn synthesize(&self) -> GridField<T> {
        GridField { domain: self.basis.domain, values: self.basis.synthesize(&self.coeffs) }
    }

    pub fn norm(&self) -> T {
        self.coeffs.iter().map(|a| *a * *a).sum::<T>().sqrt()
    }

    fn scaled_by(&self, f: impl Fn(T) -> T) -> Self {
        let coeffs = self.coeffs.iter().zip(self.basis.lambdas()).map(|(a, l)| *a * f(*l)).collect();
        SpectralField { basis: self.basis.clone(), coeffs }
    }
}

/// `A_s u = Σ a_k λ_k^s φ_k`.
pub fn apply_as<T: Real>(field: &SpectralField<T>, s: T) -> SpectralField<T> {
    field.scaled_by(|l| l.powf(s))
}

/// `A_s^{-1} f = Σ b_k λ_k^{-s} φ_k`.
pub fn solve_as<T: Real>(rhs: &SpectralField<T>, s: T) -> SpectralField<T> {
    rhs.scaled_by(|l| l.powf(-s))
}
