//! Green function `G` of `A_s` with zero outside data, its regular part
//! `H(x, y) = γ_{n,s}|x − y|^{-(n−2s)} − G(x, y)`, and the Robin function
//! `φ(x) = H(x, x)`.
//!
//! Off the diagonal `G` is the truncated eigen-series. Near the diagonal the
//! series converges far too slowly, so `H` is computed from the
//! subordination formula `H = Γ(s)^{-1} ∫₀^∞ t^{s−1} (K_t − p_t)(x, y) dt`,
//! with `K_t` the free heat kernel and `p_t` the Dirichlet heat kernel; the
//! difference `K_t − p_t` is smooth and built from method-of-images sums for
//! small `t` and eigen-sums for large `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ModeSet;
use crate::constants::{gamma, gamma_ns};
use crate::domain::{DomainKind, DomainSpec, GridField};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_breaks, Tolerance};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GreenValue<T> {
    pub value: T,
    /// `|S_K − S_{K/2}|` for the truncated series.
    pub tail_estimate: T,
}

fn interior<T: Real>(kind: &DomainKind<T>, x: &[T]) -> bool {
    let axes = match kind {
        DomainKind::Interval { a, b } => vec![(*a, *b)],
        DomainKind::Rectangle { ax, bx, ay, by } => vec![(*ax, *bx), (*ay, *by)],
    };
    axes.iter().enumerate().all(|(k, (a, b))| x[k] > *a && x[k] < *b)
}

/// `Σ_k φ_k(x) φ_k(y) / λ_k^s` over the modes of `modes`.
pub fn green<T: Real>(modes: &ModeSet<T>, s: T, x: &[T], y: &[T]) -> Result<GreenValue<T>> {
    let dim = modes.dim();
    if x[..dim] == y[..dim] {
        return Err(Error::DiagonalEvaluation);
    }
    if !interior(&modes.kind, x) || !interior(&modes.kind, y) {
        return Err(Error::Precondition("Green function needs interior points".into()));
    }
    let half = modes.len() / 2;
    let mut acc = T::zero();
    let mut at_half = T::zero();
    for k in 0..modes.len() {
        acc = acc + modes.eval(k, x) * modes.eval(k, y) / modes.lambdas[k].powf(s);
        if k + 1 == half {
            at_half = acc;
        }
    }
    Ok(GreenValue { value: acc, tail_estimate: (acc - at_half).abs() })
}

#[derive(Clone, Copy)]
struct Axis<T> {
    a: T,
    len: T,
}

impl<T: Real> Axis<T> {
    fn switch(&self) -> T {
        T::of(0.1) * self.len * self.len
    }

    /// Free Gaussian `g = (4πt)^{-1/2} e^{-(x−y)²/4t}` and the correction
    /// `c = p_t − g` of the Dirichlet heat kernel on this axis.
    fn parts(&self, t: T, x: T, y: T) -> (T, T) {
        let four_t = T::of(4.0) * t;
        let norm = (T::PI() * four_t).sqrt().recip();
        let gauss = |z: T| norm * (-(z * z) / four_t).exp();
        let (xr, yr) = (x - self.a, y - self.a);
        let g = gauss(xr - yr);
        if t <= self.switch() {
            let two_l = T::of(2.0) * self.len;
            let mut c = T::zero();
            for m in -4i32..=4 {
                let shift = two_l * T::of(m as f64);
                if m != 0 {
                    c = c + gauss(xr - yr + shift);
                }
                c = c - gauss(xr + yr + shift);
            }
            (g, c)
        } else {
            let mut p = T::zero();
            let mut k = 1usize;
            loop {
                let w = T::of_usize(k) * T::PI() / self.len;
                let decay = w * w * t;
                if decay > T::of(46.0) {
                    break;
                }
                p = p + (-decay).exp() * (w * xr).sin() * (w * yr).sin();
                k += 1;
            }
            (g, p * T::of(2.0) / self.len - g)
        }
    }
}

fn axes<T: Real>(kind: &DomainKind<T>) -> Vec<Axis<T>> {
    match *kind {
        DomainKind::Interval { a, b } => vec![Axis { a, len: b - a }],
        DomainKind::Rectangle { ax, bx, ay, by } => vec![Axis { a: ax, len: bx - ax }, Axis { a: ay, len: by - ay }],
    }
}

/// Regular part `H(x, y)`, valid on the diagonal as well.
pub fn regular_part<T: Real>(kind: &DomainKind<T>, s: T, x: &[T], y: &[T]) -> Result<T> {
    if !interior(kind, x) || !interior(kind, y) {
        return Err(Error::Precondition("regular part needs interior points".into()));
    }
    let ax = axes(kind);
    let n = ax.len();
    let nf = T::of_usize(n);
    let a = nf * T::of(0.5) - s;
    if !(a > T::zero()) {
        return Err(Error::OutOfRange("regular part needs 2s < n".into()));
    }
    let mut r2 = T::zero();
    let mut d_img = T::infinity();
    let mut lambda1 = T::zero();
    for (k, axis) in ax.iter().enumerate() {
        let (xr, yr) = (x[k] - axis.a, y[k] - axis.a);
        r2 = r2 + (x[k] - y[k]) * (x[k] - y[k]);
        d_img = d_img.min(xr + yr).min(T::of(2.0) * axis.len - xr - yr);
        let w = T::PI() / axis.len;
        lambda1 = lambda1 + w * w;
    }
    // below t_lo every image term is under e^{-45}; above t_hi the Dirichlet
    // kernel is under e^{-46} and only the free kernel survives
    let t_lo = d_img * d_img / T::of(180.0);
    let t_hi = T::of(46.0) / lambda1;
    let mut breaks = vec![t_lo.ln()];
    for axis in &ax {
        let sw = axis.switch();
        if sw > t_lo && sw < t_hi {
            breaks.push(sw.ln());
        }
    }
    breaks.push(t_hi.ln());
    breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let integrand = |tau: T| {
        let t = tau.exp();
        let d = match ax.len() {
            1 => {
                let (_, c) = ax[0].parts(t, x[0], y[0]);
                -c
            }
            _ => {
                let (gx, cx) = ax[0].parts(t, x[0], y[0]);
                let (gy, cy) = ax[1].parts(t, x[1], y[1]);
                -(gx * cy + cx * gy + cx * cy)
            }
        };
        t.powf(s) * d
    };
    let tol = Tolerance::rel(1e-12_f64.max(T::eps().f64() * 64.0)).with_abs(T::eps().f64() * 1e-3);
    let body = integrate_breaks(integrand, &breaks, &tol)?;
    // ∫_{t_hi}^∞ t^{s−1}(4πt)^{-n/2} e^{-r²/4t} dt as a series in z = r²/(4 t_hi)
    let z = r2 / (T::of(4.0) * t_hi);
    let mut term = T::one();
    let mut series = T::zero();
    for j in 0..60 {
        let add = term / (a + T::of_usize(j));
        series = series + add;
        if add.abs() < T::eps() * series.abs() {
            break;
        }
        term = -term * z / T::of_usize(j + 1);
    }
    let tail = (T::of(4.0) * T::PI()).powf(-nf * T::of(0.5)) * t_hi.powf(-a) * series;
    Ok((body.value + tail) / gamma(s)?)
}

/// `G(x, y)` from the regular part, accurate arbitrarily close to the diagonal.
pub fn green_heat<T: Real>(kind: &DomainKind<T>, s: T, x: &[T], y: &[T]) -> Result<T> {
    let n = match kind {
        DomainKind::Interval { .. } => 1,
        DomainKind::Rectangle { .. } => 2,
    };
    let r = x.iter().zip(y).take(n).map(|(p, q)| (*p - *q) * (*p - *q)).sum::<T>().sqrt();
    if r == T::zero() {
        return Err(Error::DiagonalEvaluation);
    }
    let free = gamma_ns::<T>(n, s)? * r.powf(-(T::of_usize(n) - T::of(2.0) * s));
    Ok(free - regular_part(kind, s, x, y)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinOptions<T> {
    /// Largest offset; defaults to a quarter of the distance to the boundary.
    pub delta0: Option<T>,
    /// Relative Cauchy tolerance between the two first-level extrapolants.
    pub tolerance: T,
}

impl<T: Real> Default for RobinOptions<T> {
    fn default() -> Self {
        RobinOptions { delta0: None, tolerance: T::of(1e-3) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RobinValue<T> {
    pub value: T,
    /// Difference of the two first-level Richardson extrapolants.
    pub spread: T,
    pub delta0: T,
}

/// `φ(x) = lim_{y→x} [γ_{n,s}|x − y|^{-(n−2s)} − G(x, y)]`, extrapolated from
/// symmetric offsets `x ± δe` with `δ = δ₀, δ₀/2, δ₀/4`.
pub fn robin<T: Real>(kind: &DomainKind<T>, s: T, x: &[T], opts: &RobinOptions<T>) -> Result<RobinValue<T>> {
    if !interior(kind, x) {
        return Err(Error::Precondition("Robin function needs an interior point".into()));
    }
    let ax = axes(kind);
    let dist =
        ax.iter().enumerate().fold(T::infinity(), |d, (k, axis)| d.min(x[k] - axis.a).min(axis.a + axis.len - x[k]));
    let delta0 = opts.delta0.unwrap_or(T::of(0.25) * dist);
    if !(delta0 > T::zero() && delta0 < dist) {
        return Err(Error::Precondition(format!("offset {delta0} must lie in (0, {dist})")));
    }
    // γδ^{-(n−2s)} − G(x, x ± δe) equals H(x, x ± δe); the singular parts
    // cancel exactly, so the average is evaluated through H directly
    let level = |delta: T| -> Result<T> {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[0] = plus[0] + delta;
        minus[0] = minus[0] - delta;
        Ok(T::of(0.5) * (regular_part(kind, s, x, &plus)? + regular_part(kind, s, x, &minus)?))
    };
    let v0 = level(delta0)?;
    let v1 = level(delta0 * T::of(0.5))?;
    let v2 = level(delta0 * T::of(0.25))?;
    let r01 = (T::of(4.0) * v1 - v0) / T::of(3.0);
    let r12 = (T::of(4.0) * v2 - v1) / T::of(3.0);
    let value = (T::of(16.0) * r12 - r01) / T::of(15.0);
    let spread = (r12 - r01).abs();
    if !value.is_finite() || spread > opts.tolerance * value.abs().max(T::min_positive_value()) {
        return Err(Error::ExtrapolationDiverged { spread: spread.f64() });
    }
    Ok(RobinValue { value, spread, delta0 })
}

/// Robin function at the interior nodes of `grid` (boundary nodes hold 0).
pub fn robin_on_grid<T: Real>(kind: &DomainKind<T>, s: T, grid: &DomainSpec<T>) -> Result<GridField<T>> {
    let dim = grid.dim();
    let values: Result<Vec<T>> = (0..grid.node_count())
        .into_par_iter()
        .map(|i| {
            if grid.is_boundary_node(i) {
                Ok(T::zero())
            } else {
                robin(kind, s, &grid.node(i)[..dim], &RobinOptions::default()).map(|r| r.value)
            }
        })
        .collect();
    Ok(GridField { domain: *grid, values: values? })
}

/// Interior nodes where the centered difference gradient changes sign along
/// every axis; clusters of adjacent candidates keep the node with the
/// smallest gradient. Nodes within two cells of the boundary are not examined.
pub fn critical_points<T: Real>(phi: &GridField<T>) -> Result<Vec<[T; 2]>> {
    let d = &phi.domain;
    let dim = d.dim();
    let n = d.cells;
    if n < 6 {
        return Err(Error::NoCriticalPoint);
    }
    let grad = |ij: [usize; 2], axis: usize| -> T {
        let mut up = ij;
        let mut dn = ij;
        up[axis] += 1;
        dn[axis] -= 1;
        (phi.values[d.flat(up)] - phi.values[d.flat(dn)]) / (T::of(2.0) * d.h(axis))
    };
    let range: Vec<usize> = (2..=n - 2).collect();
    let mut candidates: Vec<([usize; 2], T)> = Vec::new();
    let jr: Vec<usize> = if dim == 1 { vec![0] } else { range.clone() };
    for &i in &range {
        for &j in &jr {
            let ij = [i, j];
            let mut ok = true;
            let mut norm = T::zero();
            for axis in 0..dim {
                let g = grad(ij, axis);
                norm = norm + g * g;
                let mut change = false;
                if ij[axis] < n - 2 {
                    let mut up = ij;
                    up[axis] += 1;
                    change |= g * grad(up, axis) <= T::zero();
                }
                if ij[axis] >= 3 {
                    let mut dn = ij;
                    dn[axis] -= 1;
                    change |= g * grad(dn, axis) <= T::zero();
                }
                ok &= change;
            }
            if ok {
                candidates.push((ij, norm.sqrt()));
            }
        }
    }
    candidates.sort_by(|p, q| p.1.partial_cmp(&q.1).unwrap().then(p.0.cmp(&q.0)));
    let mut kept: Vec<[usize; 2]> = Vec::new();
    for (ij, _) in candidates {
        if kept.iter().all(|k| (0..dim).any(|a| k[a].abs_diff(ij[a]) > 1)) {
            kept.push(ij);
        }
    }
    if kept.is_empty() {
        return Err(Error::NoCriticalPoint);
    }
    Ok(kept.into_iter().map(|ij| d.node(d.flat(ij))).collect())
}

/// Critical points of the Robin function sampled on `grid`.
pub fn robin_critical_points<T: Real>(kind: &DomainKind<T>, s: T, grid: &DomainSpec<T>) -> Result<Vec<[T; 2]>> {
    critical_points(&robin_on_grid(kind, s, grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ModeSet;

    const UNIT: DomainKind<f64> = DomainKind::Interval { a: 0.0, b: 1.0 };

    #[test]
    fn series_symmetry_and_diagonal() {
        let m = ModeSet::lowest(UNIT, 500);
        let a = green(&m, 0.3, &[0.2], &[0.6]).unwrap();
        let b = green(&m, 0.3, &[0.6], &[0.2]).unwrap();
        assert_eq!(a.value, b.value);
        assert!(matches!(green(&m, 0.3, &[0.4], &[0.4]), Err(Error::DiagonalEvaluation)));
    }

    #[test]
    fn heat_route_matches_series_off_diagonal() {
        // well separated points: the series converges and both routes agree
        let m = ModeSet::lowest(UNIT, 200_000);
        for (x, y) in [(0.25, 0.75), (0.1, 0.3), (0.5, 0.9)] {
            let series = green(&m, 0.3, &[x], &[y]).unwrap();
            let heat = green_heat(&UNIT, 0.3, &[x], &[y]).unwrap();
            assert!((series.value - heat).abs() < 2e-4 * heat, "({x},{y}) {} vs {heat}", series.value);
        }
    }

    #[test]
    fn regular_part_symmetric_and_smooth() {
        let h1 = regular_part(&UNIT, 0.3, &[0.3], &[0.45]).unwrap();
        let h2 = regular_part(&UNIT, 0.3, &[0.45], &[0.3]).unwrap();
        assert!((h1 - h2).abs() < 1e-12);
        let sq = DomainKind::Rectangle { ax: 0.0, bx: 1.0, ay: 0.0, by: 1.0 };
        let h: f64 = regular_part(&sq, 0.45, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        let hx = regular_part(&sq, 0.45, &[0.5, 0.5], &[0.5, 0.5 + 1e-3]).unwrap();
        assert!((h - hx).abs() < 1e-4 * h.abs());
    }

    #[test]
    fn robin_matches_diagonal_regular_part() {
        for x in [0.5, 0.3, 0.9] {
            let r = robin(&UNIT, 0.3, &[x], &RobinOptions::default()).unwrap();
            let direct = regular_part(&UNIT, 0.3, &[x], &[x]).unwrap();
            assert!((r.value - direct).abs() < 1e-7 * direct.abs(), "{x}: {} vs {direct}", r.value);
        }
    }

    #[test]
    fn robin_grows_towards_boundary() {
        let o = RobinOptions::default();
        let mid = robin(&UNIT, 0.3, &[0.5], &o).unwrap().value;
        let near = robin(&UNIT, 0.3, &[0.9], &o).unwrap().value;
        assert!(near > mid);
        assert!(robin(&UNIT, 0.3, &[1.0], &o).is_err());
    }

    #[test]
    fn robin_offset_robust() {
        let a = robin(&UNIT, 0.3, &[0.4], &RobinOptions { delta0: Some(0.05), tolerance: 1e-3 }).unwrap();
        let b = robin(&UNIT, 0.3, &[0.4], &RobinOptions { delta0: Some(0.05 / 2f64.sqrt()), tolerance: 1e-3 }).unwrap();
        assert!((a.value - b.value).abs() < 5e-3 * a.value.abs());
    }

    #[test]
    fn parabola_critical_point() {
        let g = DomainSpec::interval(0.0, 1.0, 50).unwrap();
        let f = GridField::from_fn(g, |x: &[f64]| (x[0] - 0.3) * (x[0] - 0.3));
        let c: Vec<[f64; 2]> = critical_points(&f).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0][0] - 0.3).abs() <= 0.02 + 1e-12);
        let mono = GridField::from_fn(g, |x| x[0]);
        assert!(matches!(critical_points(&mono), Err(Error::NoCriticalPoint)));
    }

    #[test]
    fn saddle_in_two_dimensions() {
        let g = DomainSpec::rectangle(0.0, 1.0, 0.0, 1.0, 20).unwrap();
        let f = GridField::from_fn(g, |x: &[f64]| (x[0] - 0.4).powi(2) - (x[1] - 0.65).powi(2));
        let c: Vec<[f64; 2]> = critical_points(&f).unwrap();
        assert!((c[0][0] - 0.4).abs() <= 0.05 + 1e-12 && (c[0][1] - 0.65).abs() <= 0.05 + 1e-12, "{c:?}");
    }

    #[test]
    fn series_positive_and_converging() {
        let long = ModeSet::lowest(UNIT, 200_000);
        let short = ModeSet::lowest(UNIT, 20_000);
        let g = green(&short, 0.3, &[0.25], &[0.75]).unwrap().value;
        let oracle = green(&long, 0.3, &[0.25], &[0.75]).unwrap().value;
        assert!((g - oracle).abs() < 1e-4 * oracle);
        for i in 0..12 {
            let x = 0.05 + 0.07 * i as f64;
            let y = 0.97 - 0.05 * i as f64;
            assert!(green(&short, 0.3, &[x], &[y]).unwrap().value > 0.0, "({x},{y})");
        }
        let pts = ([0.3], [0.55]);
        let d: Vec<f64> = [500, 1000, 2000, 4000]
            .iter()
            .map(|&k| {
                let a = green(&ModeSet::lowest(UNIT, k), 0.3, &pts.0, &pts.1).unwrap().value;
                let b = green(&ModeSet::lowest(UNIT, 2 * k), 0.3, &pts.0, &pts.1).unwrap().value;
                (a - b).abs()
            })
            .collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    }

    #[test]
    fn symmetric_interval_robin_critical_point() {
        let g = DomainSpec::interval(0.0, 1.0, 32).unwrap();
        let c = robin_critical_points(&UNIT, 0.3, &g).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0][0] - 0.5).abs() <= g.h(0) + 1e-12);
    }
}
