//! Riesz-potential convolution `(|·|^{-μ} * f)` on bounded grids and for
//! radial profiles in free space.
//!
//! Intervals use product integration against hat functions, so the result is
//! exact for piecewise-linear `f`. Rectangles use piecewise-constant dual
//! cells whose kernel integrals come from the exact corner function
//! `I(X, Y) = ∫_{[0,X]×[0,Y]} |t|^{-μ} dt`; the singular cell is therefore
//! integrated exactly in polar form.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use crate::domain::GridField;
use crate::domain::{DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::model::Params;
use crate::quadrature::{gauss_legendre8, integrate, ray, Tolerance};
use crate::scalar::{pow_diff, Real};

pub const MAX_CELLS_1D: usize = 4096;
pub const MAX_CELLS_2D: usize = 128;

const CACHE_MAGIC: &[u8; 4] = b"FHLW";
const CACHE_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
enum Store<T> {
    /// `interior[d]`: weight of an interior hat at index distance d;
    /// `rise[k]`/`fall[k]`: half-hat moments over `[kh, (k+1)h]`.
    Line { interior: Vec<T>, rise: Vec<T>, fall: Vec<T> },
    /// `kernel[|dx|·(N+1) + |dy|]`: full dual-cell weights; `corner`: the
    /// corner function on the half-cell lattice, for clipped boundary cells.
    Plane { kernel: Vec<T>, corner: Vec<T> },
}

/// Product-integration weights of `|x − t|^{-μ}` on a domain grid, stored in
/// factored (Toeplitz plus boundary) form.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszWeights<T> {
    pub mu: T,
    pub domain: DomainSpec<T>,
    store: Store<T>,
}

/// `∫_{y0}^{y0+h} y^{-μ} ℓ(y) dy` for the two linear shape functions on the
/// cell: rising (0 → 1) and falling (1 → 0).
fn half_moments<T: Real>(y0: T, h: T, mu: T) -> (T, T) {
    let y1 = y0 + h;
    if y0 >= T::of(4.0) * h {
        // far from the singularity the integrand is analytic on a disc of
        // radius ≥ 4h around the cell, and 8 Gauss points are at rounding level
        let rise = gauss_legendre8(|y: T| y.powf(-mu) * (y - y0), y0, y1) / h;
        let fall = gauss_legendre8(|y: T| y.powf(-mu) * (y1 - y), y0, y1) / h;
        return (rise, fall);
    }
    let m = T::one() - mu;
    let p1 = pow_diff(y1, y0, m) / m;
    let p2 = pow_diff(y1, y0, m + T::one()) / (m + T::one());
    let rise = (p2 - y0 * p1) / h;
    (rise, p1 - rise)
}

/// `J(U) = ∫₀^U (1+u²)^{-μ/2} du`.
fn j_integral<T: Real>(u: T, mu: T) -> T {
    if u <= T::zero() {
        return T::zero();
    }
    let tol = Tolerance::rel(1e-14_f64.max(T::eps().f64() * 8.0));
    let g = |x: T| (T::one() + x * x).powf(-mu * T::of(0.5));
    let q = if u > T::one() {
        let a = integrate(g, T::zero(), T::one(), &tol).map(|q| q.value);
        let b = integrate(g, T::one(), u, &tol).map(|q| q.value);
        a.and_then(|a| b.map(|b| a + b))
    } else {
        integrate(g, T::zero(), u, &tol).map(|q| q.value)
    };
    q.expect("smooth bounded integrand")
}

/// `I(X, Y) = ∫₀^X ∫₀^Y (t₁² + t₂²)^{-μ/2} dt₂ dt₁` for X, Y ≥ 0, by splitting
/// the rectangle along its diagonal into two triangles integrated in polar form.
pub fn corner_integral<T: Real>(x: T, y: T, mu: T) -> T {
    if x <= T::zero() || y <= T::zero() {
        return T::zero();
    }
    let e = T::of(2.0) - mu;
    (x.powf(e) * j_integral(y / x, mu) + y.powf(e) * j_integral(x / y, mu)) / e
}

fn check_mu<T: Real>(domain: &DomainSpec<T>, mu: T) -> Result<()> {
    let n = domain.dim();
    if !(mu > T::zero() && mu < T::of_usize(n)) {
        return Err(Error::KernelNotIntegrable { mu: mu.f64(), n });
    }
    Ok(())
}

pub fn build_weights<T: Real>(domain: &DomainSpec<T>, mu: T) -> Result<RieszWeights<T>> {
    check_mu(domain, mu)?;
    let n = domain.cells;
    let store = match domain.kind {
        DomainKind::Interval { .. } => {
            if n > MAX_CELLS_1D {
                return Err(Error::TooLarge(format!(
                    "{n} cells exceed the dense limit {MAX_CELLS_1D}; reduce the grid resolution"
                )));
            }
            let h = domain.h(0);
            let (rise, fall): (Vec<T>, Vec<T>) =
                (0..=n).into_par_iter().map(|k| half_moments(h * T::of_usize(k), h, mu)).unzip();
            let interior = (0..=n).map(|d| if d == 0 { fall[0] + fall[0] } else { fall[d] + rise[d - 1] }).collect();
            Store::Line { interior, rise, fall }
        }
        DomainKind::Rectangle { .. } => {
            if n > MAX_CELLS_2D {
                return Err(Error::TooLarge(format!(
                    "{n} cells per axis exceed the dense limit {MAX_CELLS_2D}; reduce the grid resolution"
                )));
            }
            let (hx, hy) = (domain.h(0), domain.h(1));
            let side = 2 * n + 2;
            let half = T::of(0.5);
            let corner: Vec<T> = (0..side * side)
                .into_par_iter()
                .map(|k| {
                    let (m, l) = (k / side, k % side);
                    corner_integral(T::of_usize(m) * hx * half, T::of_usize(l) * hy * half, mu)
                })
                .collect();
            let mut w = RieszWeights { mu, domain: *domain, store: Store::Plane { kernel: Vec::new(), corner } };
            let kernel: Vec<T> = (0..(n + 1) * (n + 1))
                .map(|k| {
                    let (dx, dy) = ((k / (n + 1)) as i64, (k % (n + 1)) as i64);
                    w.rect_weight([2 * dx - 1, 2 * dx + 1], [2 * dy - 1, 2 * dy + 1])
                })
                .collect();
            if let Store::Plane { kernel: slot, .. } = &mut w.store {
                *slot = kernel;
            }
            return Ok(w);
        }
    };
    Ok(RieszWeights { mu, domain: *domain, store })
}

impl<T: Real> RieszWeights<T> {
    fn corner_at(&self, x: i64, y: i64) -> T {
        match &self.store {
            Store::Plane { corner, .. } => {
                let side = 2 * self.domain.cells + 2;
                let v = corner[x.unsigned_abs() as usize * side + y.unsigned_abs() as usize];
                if (x < 0) != (y < 0) {
                    -v
                } else {
                    v
                }
            }
            Store::Line { .. } => unreachable!("corner function exists only on rectangles"),
        }
    }

    /// Kernel integral over a rectangle given in half-cell units relative to the target node.
    fn rect_weight(&self, xr: [i64; 2], yr: [i64; 2]) -> T {
        self.corner_at(xr[1], yr[1]) - self.corner_at(xr[0], yr[1]) - self.corner_at(xr[1], yr[0])
            + self.corner_at(xr[0], yr[0])
    }

    /// Weight of source node `j` in the row of target node `i`.
    pub fn weight(&self, i: usize, j: usize) -> T {
        let n = self.domain.cells;
        match &self.store {
            Store::Line { interior, rise, fall } => {
                if j > 0 && j < n {
                    return interior[i.abs_diff(j)];
                }
                let d = i.abs_diff(j);
                if d == 0 {
                    fall[0]
                } else {
                    rise[d - 1]
                }
            }
            Store::Plane { kernel, .. } => {
                let (a, b) = (self.domain.split(i), self.domain.split(j));
                let interior = b[0] > 0 && b[0] < n && b[1] > 0 && b[1] < n;
                if interior {
                    return kernel[a[0].abs_diff(b[0]) * (n + 1) + a[1].abs_diff(b[1])];
                }
                let clip = |jc: usize, ic: usize| {
                    let lo = (2 * jc as i64 - 1).max(0) - 2 * ic as i64;
                    let hi = (2 * jc as i64 + 1).min(2 * n as i64) - 2 * ic as i64;
                    [lo, hi]
                };
                self.rect_weight(clip(b[0], a[0]), clip(b[1], a[1]))
            }
        }
    }

    /// `(W f)_i = Σ_j w_ij f_j` at every node; rows are independent and each
    /// row is summed in a fixed order.
    pub fn apply(&self, f: &[T]) -> Vec<T> {
        let n = self.domain.cells;
        match &self.store {
            Store::Line { interior, .. } => (0..=n)
                .into_par_iter()
                .map(|i| {
                    let mut acc = self.weight(i, 0) * f[0] + self.weight(i, n) * f[n];
                    for j in 1..n {
                        acc = acc + interior[i.abs_diff(j)] * f[j];
                    }
                    acc
                })
                .collect(),
            Store::Plane { kernel, .. } => {
                let side = n + 1;
                let boundary: Vec<usize> =
                    (0..f.len()).filter(|&j| self.domain.is_boundary_node(j) && f[j] != T::zero()).collect();
                (0..f.len())
                    .into_par_iter()
                    .map(|i| {
                        let (ix, iy) = (i / side, i % side);
                        let mut acc = T::zero();
                        for jx in 1..n {
                            let krow = &kernel[ix.abs_diff(jx) * side..(ix.abs_diff(jx) + 1) * side];
                            let frow = &f[jx * side..(jx + 1) * side];
                            for jy in 1..n {
                                acc = acc + krow[iy.abs_diff(jy)] * frow[jy];
                            }
                        }
                        for &j in &boundary {
                            acc = acc + self.weight(i, j) * f[j];
                        }
                        acc
                    })
                    .collect()
            }
        }
    }

    pub fn convolve(&self, f: &GridField<T>) -> Result<GridField<T>> {
        if !f.domain.same_grid(&self.domain) {
            return Err(Error::GridMismatch);
        }
        Ok(GridField { domain: self.domain, values: self.apply(&f.values) })
    }

    /// Cache file name; the bit patterns make distinct grids distinct files.
    pub fn cache_key(domain: &DomainSpec<T>, mu: T) -> String {
        let mut key = format!("riesz-d{}-n{}-mu{:016x}", domain.dim(), domain.cells, mu.f64().to_bits());
        for axis in 0..domain.dim() {
            let (a, b) = domain.bounds(axis);
            key.push_str(&format!("-{:016x}-{:016x}", a.f64().to_bits(), b.f64().to_bits()));
        }
        key.push_str(if std::mem::size_of::<T>() == 4 { ".f32.bin" } else { ".bin" });
        key
    }

    fn arrays(&self) -> Vec<&Vec<T>> {
        match &self.store {
            Store::Line { interior, rise, fall } => vec![interior, rise, fall],
            Store::Plane { kernel, corner } => vec![kernel, corner],
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
        let mut buf = Vec::new();
        buf.extend_from_slice(CACHE_MAGIC);
        buf.push(CACHE_VERSION);
        buf.push(self.domain.dim() as u8);
        buf.extend_from_slice(&(self.domain.cells as u64).to_le_bytes());
        buf.extend_from_slice(&self.mu.f64().to_le_bytes());
        for axis in 0..self.domain.dim() {
            let (a, b) = self.domain.bounds(axis);
            buf.extend_from_slice(&a.f64().to_le_bytes());
            buf.extend_from_slice(&b.f64().to_le_bytes());
        }
        for arr in self.arrays() {
            buf.extend_from_slice(&(arr.len() as u64).to_le_bytes());
            for v in arr {
                buf.extend_from_slice(&v.f64().to_le_bytes());
            }
        }
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = path.with_extension("tmp");
        fs::File::create(&tmp).and_then(|mut f| f.write_all(&buf)).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    /// Load cached weights; `Ok(None)` when the file is absent, stale or for
    /// another grid.
    pub fn load(path: &Path, domain: &DomainSpec<T>, mu: T) -> Result<Option<Self>> {
        let mut bytes = Vec::new();
        match fs::File::open(path) {
            Ok(mut f) => {
                f.read_to_end(&mut bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            Err(_) => return Ok(None),
        }
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        let header = (|| {
            if cur.take(4)? != CACHE_MAGIC || cur.take(1)?[0] != CACHE_VERSION {
                return None;
            }
            let dim = cur.take(1)?[0] as usize;
            let cells = cur.u64()? as usize;
            let m = cur.f64()?;
            let mut ok = dim == domain.dim() && cells == domain.cells && m.to_bits() == mu.f64().to_bits();
            for axis in 0..dim {
                let (a, b) = domain.bounds(axis);
                ok &= cur.f64()?.to_bits() == a.f64().to_bits() && cur.f64()?.to_bits() == b.f64().to_bits();
            }
            Some(ok)
        })();
        if header != Some(true) {
            return Ok(None);
        }
        let mut arrays = Vec::new();
        while cur.pos < bytes.len() {
            let Some(len) = cur.u64() else { return Ok(None) };
            let mut arr = Vec::with_capacity(len as usize);
            for _ in 0..len {
                let Some(v) = cur.f64() else { return Ok(None) };
                arr.push(T::of(v));
            }
            arrays.push(arr);
        }
        let store = match (domain.kind, arrays.len()) {
            (DomainKind::Interval { .. }, 3) => {
                let fall = arrays.pop().unwrap();
                let rise = arrays.pop().unwrap();
                let interior = arrays.pop().unwrap();
                Store::Line { interior, rise, fall }
            }
            (DomainKind::Rectangle { .. }, 2) => {
                let corner = arrays.pop().unwrap();
                let kernel = arrays.pop().unwrap();
                Store::Plane { kernel, corner }
            }
            _ => return Ok(None),
        };
        Ok(Some(RieszWeights { mu, domain: *domain, store }))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, k: usize) -> Option<&[u8]> {
        let s = self.bytes.get(self.pos..self.pos + k)?;
        self.pos += k;
        Some(s)
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }

    fn f64(&mut self) -> Option<f64> {
        Some(f64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}

/// Build weights, reusing a cache file under `dir` when one matches.
pub fn build_weights_cached<T: Real>(domain: &DomainSpec<T>, mu: T, dir: Option<&Path>) -> Result<RieszWeights<T>> {
    let Some(dir) = dir else { return build_weights(domain, mu) };
    let path: PathBuf = dir.join(RieszWeights::cache_key(domain, mu));
    if let Some(w) = RieszWeights::load(&path, domain, mu)? {
        return Ok(w);
    }
    let w = build_weights(domain, mu)?;
    w.save(&path)?;
    Ok(w)
}

/// `σ_n ∫₀^∞ r^{n−1−μ} f(r) dr`, the Riesz potential at the center of a radial profile.
pub fn riesz_at_center<T: Real, F: Fn(T) -> T>(f_radial: F, params: &Params<T>) -> Result<T> {
    let n = params.dim();
    let mu = params.mu;
    // r^{n−μ} f(r) must vanish at infinity for the integral to converge
    let g = |r: T| r.powf(n - mu) * f_radial(r);
    let (g1, g2) = (g(T::of(1e3)).abs(), g(T::of(1e4)).abs());
    if !(g2.is_finite() && g1.is_finite()) || (g2 > T::of(0.5) * g1 && g2 > T::zero()) {
        return Err(Error::DivergentTail(format!(
            "r^(n-mu) f(r) does not decay: {:.3e} at r=1e3, {:.3e} at r=1e4",
            g1.f64(),
            g2.f64()
        )));
    }
    let tol = Tolerance::rel(1e-12_f64.max(T::eps().f64() * 16.0));
    let q = ray(&f_radial, n - T::one() - mu, n + T::one(), T::one(), &tol)?;
    Ok(crate::constants::sigma_n::<T>(params.n)? * q.value)
}
