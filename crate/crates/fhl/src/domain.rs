//! Uniform grids on intervals and rectangles, and fields sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub enum DomainKind<T> {
    Interval { a: T, b: T },
    Rectangle { ax: T, bx: T, ay: T, by: T },
}

/// A supported domain together with its grid: `cells` uniform cells per axis,
/// hence `cells + 1` nodes per axis including both boundary nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DomainSpec<T> {
    pub kind: DomainKind<T>,
    pub cells: usize,
}

pub const MIN_CELLS: usize = 16;

impl<T: Real> DomainSpec<T> {
    pub fn interval(a: T, b: T, cells: usize) -> Result<Self> {
        Self::new(DomainKind::Interval { a, b }, cells)
    }

    pub fn rectangle(ax: T, bx: T, ay: T, by: T, cells: usize) -> Result<Self> {
        Self::new(DomainKind::Rectangle { ax, bx, ay, by }, cells)
    }

    pub fn new(kind: DomainKind<T>, cells: usize) -> Result<Self> {
        let d = DomainSpec { kind, cells };
        for axis in 0..d.dim() {
            let (a, b) = d.bounds(axis);
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::OutOfRange(format!("domain needs b > a on axis {axis} (got {a}, {b})")));
            }
        }
        if cells < MIN_CELLS {
            return Err(Error::OutOfRange(format!("grid needs N >= {MIN_CELLS} cells per axis (got {cells})")));
        }
        Ok(d)
    }

    /// Same geometry at another resolution.
    pub fn with_cells(&self, cells: usize) -> Result<Self> {
        Self::new(self.kind, cells)
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Rectangle { .. } => 2,
        }
    }

    pub fn bounds(&self, axis: usize) -> (T, T) {
        match (self.kind, axis) {
            (DomainKind::Interval { a, b }, _) => (a, b),
            (DomainKind::Rectangle { ax, bx, .. }, 0) => (ax, bx),
            (DomainKind::Rectangle { ay, by, .. }, _) => (ay, by),
        }
    }

    pub fn length(&self, axis: usize) -> T {
        let (a, b) = self.bounds(axis);
        b - a
    }

    pub fn h(&self, axis: usize) -> T {
        self.length(axis) / T::of_usize(self.cells)
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.cells + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis().pow(self.dim() as u32)
    }

    /// Product of the spacings (trapezoid weight of an interior node).
    pub fn cell_volume(&self) -> T {
        (0..self.dim()).map(|k| self.h(k)).fold(T::one(), |a, b| a * b)
    }

    pub fn axis_node(&self, axis: usize, i: usize) -> T {
        let (a, b) = self.bounds(axis);
        if i == self.cells {
            b
        } else {
            a + self.h(axis) * T::of_usize(i)
        }
    }

    /// Split a flat node index into per-axis indices (x index major).
    pub fn split(&self, idx: usize) -> [usize; 2] {
        match self.dim() {
            1 => [idx, 0],
            _ => [idx / self.nodes_per_axis(), idx % self.nodes_per_axis()],
        }
    }

    pub fn flat(&self, ij: [usize; 2]) -> usize {
        match self.dim() {
            1 => ij[0],
            _ => ij[0] * self.nodes_per_axis() + ij[1],
        }
    }

    /// Coordinates of node `idx`; the second entry is zero for intervals.
    pub fn node(&self, idx: usize) -> [T; 2] {
        let ij = self.split(idx);
        let mut x = [T::zero(); 2];
        for axis in 0..self.dim() {
            x[axis] = self.axis_node(axis, ij[axis]);
        }
        x
    }

    pub fn is_boundary_node(&self, idx: usize) -> bool {
        let ij = self.split(idx);
        (0..self.dim()).any(|k| ij[k] == 0 || ij[k] == self.cells)
    }

    /// Euclidean distance to the boundary (negative outside).
    pub fn dist_to_boundary(&self, x: &[T]) -> T {
        let mut d = T::infinity();
        for axis in 0..self.dim() {
            let (a, b) = self.bounds(axis);
            d = d.min(x[axis] - a).min(b - x[axis]);
        }
        d
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.dist_to_boundary(x) >= T::zero()
    }

    pub fn is_interior(&self, x: &[T]) -> bool {
        self.dist_to_boundary(x) > T::zero()
    }

    pub fn inradius(&self) -> T {
        (0..self.dim()).map(|k| self.length(k) * T::of(0.5)).fold(T::infinity(), |a, b| a.min(b))
    }

    pub fn center(&self) -> [T; 2] {
        let mut c = [T::zero(); 2];
        for axis in 0..self.dim() {
            let (a, b) = self.bounds(axis);
            c[axis] = T::of(0.5) * (a + b);
        }
        c
    }

    /// Same-grid test that tolerates nothing: grids must be identical.
    pub fn same_grid(&self, other: &Self) -> bool {
        self == other
    }
}

/// Values at every node of a [`DomainSpec`] grid, boundary nodes included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GridField<T> {
    pub domain: DomainSpec<T>,
    pub values: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn new(domain: DomainSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("grid field has non-finite values".into()));
        }
        Ok(GridField { domain, values })
    }

    pub fn zeros(domain: DomainSpec<T>) -> Self {
        GridField { values: vec![T::zero(); domain.node_count()], domain }
    }

    pub fn from_fn<F: Fn(&[T]) -> T>(domain: DomainSpec<T>, f: F) -> Self {
        let dim = domain.dim();
        let values = (0..domain.node_count()).map(|i| f(&domain.node(i)[..dim])).collect();
        GridField { domain, values }
    }

    pub fn h(&self, axis: usize) -> T {
        self.domain.h(axis)
    }

    /// Node index and value of the maximum (first occurrence on ties).
    pub fn argmax(&self) -> (usize, T) {
        let mut best = (0, T::neg_infinity());
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }

    pub fn sup_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Trapezoid weight of node `idx`.
    pub fn trapezoid_weight(&self, idx: usize) -> T {
        let ij = self.domain.split(idx);
        let mut w = T::one();
        for axis in 0..self.domain.dim() {
            let edge = ij[axis] == 0 || ij[axis] == self.domain.cells;
            w = w * self.domain.h(axis) * if edge { T::of(0.5) } else { T::one() };
        }
        w
    }

    pub fn integral(&self) -> T {
        self.values.iter().enumerate().map(|(i, &v)| self.trapezoid_weight(i) * v).sum()
    }

    pub fn l2_norm(&self) -> T {
        self.values.iter().enumerate().map(|(i, &v)| self.trapezoid_weight(i) * v * v).sum::<T>().sqrt()
    }

    /// Piecewise (bi)linear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: &[T]) -> T {
        let d = &self.domain;
        let mut base = [0usize; 2];
        let mut frac = [T::zero(); 2];
        for axis in 0..d.dim() {
            let (a, b) = d.bounds(axis);
            if x[axis] < a || x[axis] > b {
                return T::zero();
            }
            let t = (x[axis] - a) / d.h(axis);
            let i = t.floor().to_usize().unwrap_or(0).min(d.cells - 1);
            base[axis] = i;
            frac[axis] = (t - T::of_usize(i)).max(T::zero()).min(T::one());
        }
        match d.dim() {
            1 => {
                let (v0, v1) = (self.values[base[0]], self.values[base[0] + 1]);
                v0 + (v1 - v0) * frac[0]
            }
            _ => {
                let at = |i: usize, j: usize| self.values[d.flat([base[0] + i, base[1] + j])];
                let (fx, fy) = (frac[0], frac[1]);
                let lo = at(0, 0) + (at(1, 0) - at(0, 0)) * fx;
                let hi = at(0, 1) + (at(1, 1) - at(0, 1)) * fx;
                lo + (hi - lo) * fy
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_layout() {
        let d = DomainSpec::<f64>::rectangle(0.0, 2.0, 0.0, 1.0, 16).unwrap();
        assert_eq!(d.node_count(), 17 * 17);
        let x = d.node(d.flat([16, 8]));
        assert_eq!(x, [2.0, 0.5]);
        assert!(d.is_boundary_node(d.flat([0, 3])));
        assert!(!d.is_boundary_node(d.flat([1, 3])));
        assert_eq!(d.inradius(), 0.5);
    }

    #[test]
    fn invariants_enforced() {
        assert!(DomainSpec::<f64>::interval(1.0, 1.0, 32).is_err());
        assert!(DomainSpec::<f64>::interval(0.0, 1.0, 8).is_err());
        let d = DomainSpec::<f64>::interval(0.0, 1.0, 16).unwrap();
        assert!(matches!(GridField::new(d, vec![0.0; 3]), Err(Error::GridMismatch)));
    }

    #[test]
    fn interpolation_reproduces_linear_data() {
        let d = DomainSpec::<f64>::rectangle(0.0, 1.0, -1.0, 1.0, 20).unwrap();
        let f = GridField::from_fn(d, |x| 2.0 * x[0] - x[1] + 0.5);
        let v = f.interpolate(&[0.313, 0.271]);
        assert!((v - (2.0 * 0.313 - 0.271 + 0.5)).abs() < 1e-13);
        assert_eq!(f.interpolate(&[1.5, 0.0]), 0.0);
    }

    #[test]
    fn trapezoid_integral() {
        let d = DomainSpec::<f64>::interval(0.0, 2.0, 64).unwrap();
        let f = GridField::from_fn(d, |x| x[0]);
        assert!((f.integral() - 2.0).abs() < 1e-13);
    }
}
