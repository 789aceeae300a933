//! Continuation in ε and the quantitative checks run on its output: blow-up
//! trends, rate laws, the Green-function limit, the symmetrization identity,
//! the Pohozaev balance and the boundary bounds.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bubbles::{profile_distance, rescale, Bubble, Family};
use crate::constants::{closed_form, ConstantKind};
use crate::domain::{DomainSpec, GridField};
use crate::error::{Error, Result};
use crate::model::{Params, Regime};
use crate::riesz::{build_weights, RieszWeights};
use crate::scalar::Real;
use crate::solver::{solve, Seed, SolutionRecord, SolveOptions};
use crate::spectral::{green, EigenBasis, ModeSet};

/// Quantities derived from one record of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Derived<T> {
    pub eps: T,
    pub mu_eps: T,
    pub mu_eps_pow_eps: T,
    pub x_eps: [T; 2],
    /// `max |v_ε − W[0,1]|` on `|y| ≤ 3`; only for the subcritical problem.
    pub profile_distance: Option<T>,
    pub rate_lhs: T,
    pub boundary_sup: T,
    pub interior_l1: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ContinuationReport<T> {
    pub params: Params<T>,
    pub domain: DomainSpec<T>,
    pub modes: usize,
    pub strip_radius: T,
    pub records: Vec<SolutionRecord<T>>,
    pub derived: Vec<Derived<T>>,
    /// Whether `mu_eps` increased strictly along the sweep (recorded, not enforced).
    pub mu_increasing: bool,
}

/// Default strip radius: ten cells of the coarsest axis.
pub fn default_strip<T: Real>(domain: &DomainSpec<T>) -> T {
    (0..domain.dim()).map(|a| domain.h(a)).fold(T::zero(), |m, h| m.max(h)) * T::of(10.0)
}

/// Sequential warm-started solves over a strictly decreasing `eps_list`,
/// sharing one basis and one set of Riesz weights.
pub fn continuation<T: Real>(
    params: &Params<T>,
    basis: &Arc<EigenBasis<T>>,
    weights: &RieszWeights<T>,
    eps_list: &[T],
    opts: &SolveOptions<T>,
    strip_radius: Option<T>,
) -> Result<ContinuationReport<T>> {
    if eps_list.iter().any(|e| !(*e > T::zero())) || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Precondition("eps list must be positive and strictly decreasing".into()));
    }
    let r = strip_radius.unwrap_or_else(|| default_strip(&basis.domain));
    let mut records: Vec<SolutionRecord<T>> = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let p = params.with_eps(eps)?;
        let mut o = opts.clone();
        if let Some(prev) = records.last() {
            o.seed = Seed::WarmStart(prev.values.clone());
        }
        records.push(solve(&p, basis, weights, &o)?);
    }
    assemble(*params, basis.domain, basis.len(), r, records)
}

/// Builds a report (with derived quantities) from already computed records.
pub fn assemble<T: Real>(
    params: Params<T>,
    domain: DomainSpec<T>,
    modes: usize,
    strip_radius: T,
    records: Vec<SolutionRecord<T>>,
) -> Result<ContinuationReport<T>> {
    if !records.is_empty() {
        check_strip(&domain, strip_radius)?;
    }
    let derived = records.iter().map(|rec| derive(&domain, strip_radius, rec)).collect::<Result<Vec<_>>>()?;
    let mu_increasing = records.windows(2).all(|w| w[1].mu_eps > w[0].mu_eps);
    Ok(ContinuationReport { params, domain, modes, strip_radius, records, derived, mu_increasing })
}

fn derive<T: Real>(domain: &DomainSpec<T>, r: T, rec: &SolutionRecord<T>) -> Result<Derived<T>> {
    let p = &rec.params;
    let field = GridField { domain: *domain, values: rec.values.clone() };
    let profile = match p.regime {
        Regime::SubcriticalHartree => {
            let v = rescale(&field, rec.sup_norm, &rec.argmax[..p.n], p, T::of(3.0), 60)?;
            Some(profile_distance(&v, p, T::of(3.0))?)
        }
        _ => None,
    };
    let (boundary_sup, interior_l1) = strip_values(&field, r)?;
    Ok(Derived {
        eps: rec.eps,
        mu_eps: rec.mu_eps,
        mu_eps_pow_eps: rec.mu_eps.powf(rec.eps),
        x_eps: rec.argmax,
        profile_distance: profile,
        rate_lhs: rate_lhs(p, rec.sup_norm),
        boundary_sup,
        interior_l1,
    })
}

fn rate_lhs<T: Real>(p: &Params<T>, sup: T) -> T {
    let n = p.dim();
    let two = T::of(2.0);
    let k = p.n_minus_2s();
    match p.regime {
        Regime::BrezisNirenberg => p.eps * sup.powf((two * n - T::of(8.0) * p.s) / k),
        _ => k * k / (two * (n + two * p.s - p.eps * k)) * p.eps * sup * sup,
    }
}

fn check_strip<T: Real>(domain: &DomainSpec<T>, r: T) -> Result<()> {
    let hmin = (0..domain.dim()).map(|a| domain.h(a)).fold(T::infinity(), |m, h| m.min(h));
    if !(r > hmin) || !(r < domain.inradius()) {
        return Err(Error::DegenerateStrip(r.f64()));
    }
    Ok(())
}

/// Sup of `u` over the strip `Q(Ω, r) = {dist < r}` and the trapezoid
/// integral of `u` over `M(Ω, r) = {dist ≥ r}`.
fn strip_values<T: Real>(u: &GridField<T>, r: T) -> Result<(T, T)> {
    check_strip(&u.domain, r)?;
    let d = &u.domain;
    let dim = d.dim();
    let mut sup = T::neg_infinity();
    let mut l1 = T::zero();
    for i in 0..u.values.len() {
        let x = d.node(i);
        if d.dist_to_boundary(&x[..dim]) < r {
            sup = sup.max(u.values[i]);
        } else {
            l1 = l1 + u.trapezoid_weight(i) * u.values[i].abs();
        }
    }
    Ok((sup, l1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SequenceCheck<T> {
    pub values: Vec<(T, T)>,
    pub flag: bool,
}

/// `(ε, μ_ε^ε)` with the flag "`|μ_ε^ε − 1|` strictly decreases over the last three records".
pub fn mu_power_check<T: Real>(report: &ContinuationReport<T>) -> Result<SequenceCheck<T>> {
    let mus: Vec<(T, T)> = report.records.iter().map(|r| (r.eps, r.mu_eps)).collect();
    mu_power_from(&mus)
}

/// [`mu_power_check`] on bare `(ε, μ_ε)` pairs.
pub fn mu_power_from<T: Real>(mus: &[(T, T)]) -> Result<SequenceCheck<T>> {
    if mus.is_empty() {
        return Err(Error::Precondition("empty report".into()));
    }
    let values: Vec<(T, T)> = mus.iter().map(|(e, m)| (*e, m.powf(*e))).collect();
    let tail = &values[values.len().saturating_sub(3)..];
    let flag = tail.windows(2).all(|w| (w[1].1 - T::one()).abs() < (w[0].1 - T::one()).abs());
    Ok(SequenceCheck { values, flag })
}

/// `(ε, ε μ_ε^{2 + (4s − (n−2s)ε)ε/s})` with the flag "max/min below 100".
pub fn eps_bound_check<T: Real>(report: &ContinuationReport<T>) -> Result<SequenceCheck<T>> {
    let mus: Vec<(T, T)> = report.records.iter().map(|r| (r.eps, r.mu_eps)).collect();
    eps_bound_from(&report.params, &mus)
}

pub fn eps_bound_from<T: Real>(params: &Params<T>, mus: &[(T, T)]) -> Result<SequenceCheck<T>> {
    if mus.is_empty() {
        return Err(Error::Precondition("empty report".into()));
    }
    let s = params.s;
    let k = params.n_minus_2s();
    let values: Vec<(T, T)> = mus
        .iter()
        .map(|(e, m)| {
            let power = T::of(2.0) + (T::of(4.0) * s - k * *e) * *e / s;
            (*e, *e * m.powf(power))
        })
        .collect();
    let (lo, hi) = values.iter().fold((T::infinity(), T::zero()), |(lo, hi), (_, v)| (lo.min(*v), hi.max(*v)));
    Ok(SequenceCheck { values, flag: hi / lo < T::of(100.0) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RateLaw<T> {
    pub lhs: Vec<(T, T)>,
    pub rhs: T,
    /// `(max − min) / mean` of the last three lhs values.
    pub spread: T,
    /// Last lhs over rhs.
    pub ratio: Option<T>,
}

fn spread_of<T: Real>(v: &[T]) -> T {
    let tail = &v[v.len().saturating_sub(3)..];
    let (lo, hi) = tail.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
    let mean = tail.iter().copied().sum::<T>() / T::of_usize(tail.len());
    (hi - lo) / mean
}

fn rate_law<T: Real>(params: &Params<T>, sups: &[(T, T)], rhs: T) -> RateLaw<T> {
    let lhs: Vec<(T, T)> = sups
        .iter()
        .map(|(e, sup)| (*e, rate_lhs(&params.with_eps(*e).unwrap_or(Params { eps: *e, ..*params }), *sup)))
        .collect();
    let vals: Vec<T> = lhs.iter().map(|(_, v)| *v).collect();
    let spread = if vals.is_empty() { T::zero() } else { spread_of(&vals) };
    let ratio = vals.last().map(|v| *v / rhs);
    RateLaw { lhs, rhs, spread, ratio }
}

/// Right-hand constant of the subcritical blow-up rate law,
/// `(n−2s)² γ b² M |φ(x₀)| / (2 κ α² β̃ B)`.
pub fn rate_rhs_subcritical<T: Real>(params: &Params<T>, robin_at_x0: T) -> Result<T> {
    let p = params.paired();
    let c = |k| closed_form(k, &p);
    let k = params.n_minus_2s();
    let b = c(ConstantKind::b_ns)?;
    let alpha = c(ConstantKind::Alpha_nmus)?;
    let num = k * k * c(ConstantKind::Gamma_ns)? * b * b * c(ConstantKind::M_ns)? * robin_at_x0.abs();
    let den = T::of(2.0)
        * c(ConstantKind::Kappa_s)?
        * alpha
        * alpha
        * c(ConstantKind::BetaTilde_nmus)?
        * c(ConstantKind::B_ns)?;
    Ok(num / den)
}

/// Right-hand constant of the Brezis–Nirenberg rate law,
/// `(n−2s)² γ d² M |φ(x₀)| / (2s κ F)`.
pub fn rate_rhs_bn<T: Real>(params: &Params<T>, robin_at_x0: T) -> Result<T> {
    let c = |k| closed_form(k, params);
    let k = params.n_minus_2s();
    let d = c(ConstantKind::d_ns)?;
    let num = k * k * c(ConstantKind::Gamma_ns)? * d * d * c(ConstantKind::M_ns)? * robin_at_x0.abs();
    let den = T::of(2.0) * params.s * c(ConstantKind::Kappa_s)? * c(ConstantKind::F_ns)?;
    Ok(num / den)
}

pub fn rate_law_subcritical<T: Real>(report: &ContinuationReport<T>, robin_at_x0: Option<T>) -> Result<RateLaw<T>> {
    if report.params.regime != Regime::SubcriticalHartree {
        return Err(Error::Precondition("subcritical rate law needs the subcritical regime".into()));
    }
    let phi = robin_at_x0.ok_or(Error::MissingRobin)?;
    let sups: Vec<(T, T)> = report.records.iter().map(|r| (r.eps, r.sup_norm)).collect();
    Ok(rate_law(&report.params, &sups, rate_rhs_subcritical(&report.params, phi)?))
}

/// [`rate_law_subcritical`] on bare `(ε, ‖u_ε‖_∞)` pairs.
pub fn rate_law_subcritical_from<T: Real>(
    params: &Params<T>,
    sups: &[(T, T)],
    robin_at_x0: Option<T>,
) -> Result<RateLaw<T>> {
    let phi = robin_at_x0.ok_or(Error::MissingRobin)?;
    Ok(rate_law(params, sups, rate_rhs_subcritical(params, phi)?))
}

pub fn rate_law_bn<T: Real>(report: &ContinuationReport<T>, robin_at_x0: Option<T>) -> Result<RateLaw<T>> {
    if report.params.regime != Regime::BrezisNirenberg {
        return Err(Error::Precondition("Brezis-Nirenberg rate law needs that regime".into()));
    }
    let phi = robin_at_x0.ok_or(Error::MissingRobin)?;
    let sups: Vec<(T, T)> = report.records.iter().map(|r| (r.eps, r.sup_norm)).collect();
    Ok(rate_law(&report.params, &sups, rate_rhs_bn(&report.params, phi)?))
}

pub fn rate_law_bn_from<T: Real>(params: &Params<T>, sups: &[(T, T)], robin_at_x0: Option<T>) -> Result<RateLaw<T>> {
    let phi = robin_at_x0.ok_or(Error::MissingRobin)?;
    Ok(rate_law(params, sups, rate_rhs_bn(params, phi)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GreenLimitRow<T> {
    pub x: Vec<T>,
    pub scaled_u: T,
    pub scaled_green: T,
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GreenLimit<T> {
    pub rows: Vec<GreenLimitRow<T>>,
    pub median_ratio: Option<T>,
}

/// Compares `‖u‖_∞ u(x)` with `b_{n,s} G(x, x₀)` at sample points at least
/// four grid cells away from `x₀`.
pub fn green_limit_check<T: Real>(
    u: &GridField<T>,
    sup_norm: T,
    modes: &ModeSet<T>,
    params: &Params<T>,
    x0: &[T],
    samples: &[Vec<T>],
) -> Result<GreenLimit<T>> {
    let d = &u.domain;
    let dim = d.dim();
    let cell = (0..dim).map(|a| d.h(a)).fold(T::zero(), |m, h| m.max(h));
    let b = closed_form(ConstantKind::b_ns, &params.paired())?;
    let mut rows = Vec::with_capacity(samples.len());
    for x in samples {
        let dist = x.iter().zip(x0).map(|(a, c)| (*a - *c) * (*a - *c)).sum::<T>().sqrt();
        if dist < T::of(4.0) * cell {
            return Err(Error::SampleTooClose(x.iter().map(|v| v.f64()).collect()));
        }
        let scaled_u = sup_norm * u.interpolate(&x[..dim]);
        let scaled_green = b * green(modes, params.s, &x[..dim], &x0[..dim])?.value;
        rows.push(GreenLimitRow { x: x.clone(), scaled_u, scaled_green, ratio: scaled_u / scaled_green });
    }
    let mut ratios: Vec<T> = rows.iter().map(|r| r.ratio).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let median_ratio = match ratios.len() {
        0 => None,
        m if m % 2 == 1 => Some(ratios[m / 2]),
        m => Some((ratios[m / 2 - 1] + ratios[m / 2]) * T::of(0.5)),
    };
    Ok(GreenLimit { rows, median_ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Symmetrization<T> {
    pub lhs_a: T,
    pub lhs_b: T,
    pub residual: T,
}

/// `M(x) = ∫_Ω x·(x−t)|x−t|^{-(μ+2)} f(t) dt` at every node.
///
/// With `∇_t |x−t|^{-μ} = μ (x−t)|x−t|^{-(μ+2)}` the principal value becomes
/// `μ^{-1}[∮ f |x−t|^{-μ} x·ν − Σ_a x_a ∫ |x−t|^{-μ} ∂_a f]`. On intervals the
/// derivative of the piecewise-linear interpolant is integrated exactly and
/// the boundary term is returned separately (it is singular at the
/// endpoints); on rectangles `f` must vanish on the boundary and the
/// derivative is taken by differences.
fn moment_parts<T: Real>(f: &GridField<T>, weights: &RieszWeights<T>) -> Result<(Vec<T>, [T; 2])> {
    let d = &f.domain;
    let mu = weights.mu;
    let n = d.cells;
    match d.dim() {
        1 => {
            let h = d.h(0);
            let m = T::one() - mu;
            let slope: Vec<T> = (0..n).map(|j| (f.values[j + 1] - f.values[j]) / h).collect();
            // F(u) = sign(u)|u|^{1−μ}/(1−μ), antiderivative of |u|^{-μ}
            let prim = |k: i64| -> T {
                let v = (h * T::of(k.unsigned_abs() as f64)).powf(m) / m;
                if k < 0 {
                    -v
                } else {
                    v
                }
            };
            let volume: Vec<T> = (0..=n)
                .map(|i| {
                    let x = d.axis_node(0, i);
                    let mut acc = T::zero();
                    for (j, s) in slope.iter().enumerate() {
                        let lo = j as i64 - i as i64;
                        acc = acc + *s * (prim(lo + 1) - prim(lo));
                    }
                    -x * acc / mu
                })
                .collect();
            Ok((volume, [f.values[0], f.values[n]]))
        }
        _ => {
            if (0..f.values.len()).any(|i| d.is_boundary_node(i) && f.values[i] != T::zero()) {
                return Err(Error::Precondition("on rectangles the moment term needs f = 0 on the boundary".into()));
            }
            let mut volume = vec![T::zero(); f.values.len()];
            for axis in 0..2 {
                let h = d.h(axis);
                let grad: Vec<T> = (0..f.values.len())
                    .map(|i| {
                        let ij = d.split(i);
                        let mut up = ij;
                        let mut dn = ij;
                        let mut span = T::of(2.0);
                        if ij[axis] == n {
                            span = T::one();
                        } else {
                            up[axis] += 1;
                        }
                        if ij[axis] == 0 {
                            span = T::one();
                        } else {
                            dn[axis] -= 1;
                        }
                        (f.values[d.flat(up)] - f.values[d.flat(dn)]) / (span * h)
                    })
                    .collect();
                let conv = weights.apply(&grad);
                for (i, c) in conv.into_iter().enumerate() {
                    volume[i] = volume[i] - d.node(i)[axis] * c / mu;
                }
            }
            Ok((volume, [T::zero(); 2]))
        }
    }
}

/// `∫_{mask} g(x) M(x) dx` with `g` the outer factor and `M` the moment integral of `f`.
fn moment_term<T: Real>(g: &GridField<T>, f: &GridField<T>, mask: &[bool], weights: &RieszWeights<T>) -> Result<T> {
    let (volume, ends) = moment_parts(f, weights)?;
    let mut total = T::zero();
    for i in 0..g.values.len() {
        if mask[i] {
            total = total + g.trapezoid_weight(i) * g.values[i] * volume[i];
        }
    }
    if ends != [T::zero(); 2] {
        // interval endpoint terms x f(e)|x−e|^{-μ}: integrate x g(x) against the
        // kernel exactly through the weight rows of the two endpoints
        let d = &g.domain;
        let n = d.cells;
        let xg: Vec<T> = (0..=n).map(|i| if mask[i] { d.axis_node(0, i) * g.values[i] } else { T::zero() }).collect();
        let row = |e: usize| (0..=n).map(|j| weights.weight(e, j) * xg[j]).sum::<T>();
        total = total + (ends[1] * row(n) - ends[0] * row(0)) / weights.mu;
    }
    Ok(total)
}

fn pair_term<T: Real>(g: &GridField<T>, f: &GridField<T>, mask: &[bool], weights: &RieszWeights<T>) -> T {
    let conv = weights.apply(&f.values);
    (0..g.values.len()).filter(|&i| mask[i]).map(|i| g.trapezoid_weight(i) * g.values[i] * conv[i]).sum()
}

/// Both sides of `∬ x·(x−t)|x−t|^{-(μ+2)} f(t) f(x) = ½ ∬ |x−t|^{-μ} f(t) f(x)`.
pub fn symmetrization_check<T: Real>(f: &GridField<T>, weights: &RieszWeights<T>) -> Result<Symmetrization<T>> {
    if !f.domain.same_grid(&weights.domain) {
        return Err(Error::GridMismatch);
    }
    if f.values.iter().any(|v| *v < T::zero()) {
        return Err(Error::Precondition("symmetrization check needs f >= 0".into()));
    }
    let all = vec![true; f.values.len()];
    let lhs_a = moment_term(f, f, &all, weights)?;
    let lhs_b = T::of(0.5) * pair_term(f, f, &all, weights);
    let residual = if lhs_b == T::zero() && lhs_a == T::zero() { T::zero() } else { (lhs_a / lhs_b - T::one()).abs() };
    Ok(Symmetrization { lhs_a, lhs_b, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PohozaevBalance<T> {
    /// `(n/p − (n−2s)/2) ∬_{M(r/2)×Ω} |x−t|^{-μ} u^p(t) u^p(x)`.
    pub interior: T,
    /// `(∫_{Q(2r)} |N|^q)^{2/q}`, `N = (|x|^{-μ} * u^p) u^{p−1}`, `q = 2n/s`.
    pub t1: T,
    /// `(∫_{M(r/2)} |N|)²`.
    pub t2: T,
    /// `∫_{Q(2r)} (|x|^{-μ} * u^p) u^p`.
    pub t3: T,
    /// `∫_{M(r/2)} (∫_Ω x·(x−t)|x−t|^{-(μ+2)} u^p(t) dt) u^p(x) dx`.
    pub t4: T,
    /// `|interior| / max(t1 + t2 + t3 + |t4|, floor)`.
    pub relative_gap: T,
    /// `|interior − (μ/p) t4| / |interior|`: zero when `M` is the whole domain
    /// and `p` is the critical exponent.
    pub moment_balance_gap: T,
}

/// Pohozaev balance of a grid solution with strip radius `r`; `r = 0` takes
/// the whole grid as `M` and leaves `Q` empty.
pub fn pohozaev_balance<T: Real>(
    u: &GridField<T>,
    params: &Params<T>,
    p: T,
    weights: &RieszWeights<T>,
    r: T,
) -> Result<PohozaevBalance<T>> {
    let d = &u.domain;
    if !d.same_grid(&weights.domain) {
        return Err(Error::GridMismatch);
    }
    let dim = d.dim();
    let dist: Vec<T> = (0..u.values.len()).map(|i| d.dist_to_boundary(&d.node(i)[..dim])).collect();
    let inner: Vec<bool> = dist.iter().map(|x| r == T::zero() || *x >= r * T::of(0.5)).collect();
    let strip: Vec<bool> = dist.iter().map(|x| r > T::zero() && *x < r * T::of(2.0)).collect();
    if !inner.iter().any(|m| *m) {
        return Err(Error::EmptyInterior);
    }
    let plus: Vec<T> = u.values.iter().map(|v| v.max(T::zero())).collect();
    let up = GridField { domain: *d, values: plus.iter().map(|v| v.powf(p)).collect() };
    let conv = weights.apply(&up.values);
    let nl: Vec<T> = plus.iter().zip(&conv).map(|(v, c)| *c * v.powf(p - T::one())).collect();
    let coef = params.dim() / p - params.n_minus_2s() * T::of(0.5);
    let masked = |mask: &[bool], f: &dyn Fn(usize) -> T| -> T {
        (0..u.values.len()).filter(|&i| mask[i]).map(|i| up.trapezoid_weight(i) * f(i)).sum()
    };
    let pair = masked(&inner, &|i| up.values[i] * conv[i]);
    let interior = coef * pair;
    let q = T::of(2.0) * params.dim() / params.s;
    let t1 = masked(&strip, &|i| nl[i].abs().powf(q)).powf(T::of(2.0) / q);
    let l1 = masked(&inner, &|i| nl[i].abs());
    let t2 = l1 * l1;
    let t3 = masked(&strip, &|i| (conv[i] * up.values[i]).abs());
    let t4 = moment_term(&up, &up, &inner, weights)?;
    let floor = T::min_positive_value().sqrt();
    let relative_gap = interior.abs() / (t1 + t2 + t3 + t4.abs()).max(floor);
    let moment_balance_gap =
        if interior == T::zero() { T::zero() } else { (interior - weights.mu / p * t4).abs() / interior.abs() };
    Ok(PohozaevBalance { interior, t1, t2, t3, t4, relative_gap, moment_balance_gap })
}

/// Pohozaev balance of the free-space bubble `W[0,1]` at the critical power
/// `2* = (2n−μ)/(n−2s)`, sampled on `[-R, R]` with `M` the whole grid.
pub fn pohozaev_free_bubble<T: Real>(params: &Params<T>, half_width: T, cells: usize) -> Result<PohozaevBalance<T>> {
    if params.n != 1 {
        return Err(Error::Precondition("the free-space bubble balance is sampled on an interval".into()));
    }
    let d = DomainSpec::interval(-half_width, half_width, cells)?;
    let w = Bubble::standard(Family::HartreeW, *params)?;
    let u = GridField::from_fn(d, |x| w.eval(x));
    let weights = build_weights(&d, params.mu)?;
    pohozaev_balance(&u, params, params.exponents().two_star, &weights, T::zero())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BoundaryBounds<T> {
    /// `(ε, sup over Q(Ω, r), ∫ over M(Ω, r))`.
    pub rows: Vec<(T, T, T)>,
    /// Both bounded within 2× of their largest-ε values while `‖u‖_∞` grows ≥ 10×.
    pub flag: bool,
    pub sup_growth: T,
}

pub fn boundary_bounds<T: Real>(report: &ContinuationReport<T>, r: T) -> Result<BoundaryBounds<T>> {
    check_strip(&report.domain, r)?;
    let mut rows = Vec::with_capacity(report.records.len());
    for rec in &report.records {
        let (sup, l1) = strip_values(&GridField { domain: report.domain, values: rec.values.clone() }, r)?;
        rows.push((rec.eps, sup, l1));
    }
    let sups: Vec<T> = report.records.iter().map(|r| r.sup_norm).collect();
    Ok(bounds_flag(rows, &sups))
}

fn bounds_flag<T: Real>(rows: Vec<(T, T, T)>, sups: &[T]) -> BoundaryBounds<T> {
    if rows.len() <= 1 {
        return BoundaryBounds { rows, flag: true, sup_growth: T::one() };
    }
    let within = |v: T, base: T| v <= T::of(2.0) * base && v >= base * T::of(0.5);
    let (_, s0, l0) = rows[0];
    let bounded = rows.iter().all(|(_, s, l)| within(*s, s0) && within(*l, l0));
    let sup_growth = sups[sups.len() - 1] / sups[0];
    BoundaryBounds { rows, flag: bounded && sup_growth >= T::of(10.0), sup_growth }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, Tolerance};
    use crate::spectral::build_basis;

    fn sub(eps: f64) -> Params<f64> {
        Params::<f64>::new(1, 0.3, 0.4, eps, Regime::SubcriticalHartree).unwrap()
    }

    #[test]
    fn mu_power_synthetic() {
        let mus: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05].iter().map(|&e: &f64| (e, (1.0 / e.sqrt()).exp())).collect();
        let c = mu_power_from(&mus).unwrap();
        for (e, v) in &c.values {
            assert!((v - e.sqrt().exp()).abs() < 1e-12);
        }
        assert!(c.flag);
        let ones = mu_power_from(&[(0.4, 1.0), (0.2, 1.0)]).unwrap();
        assert!(ones.values.iter().all(|(_, v)| *v == 1.0));
        assert!(mu_power_from::<f64>(&[]).is_err());
    }

    #[test]
    fn eps_bound_synthetic() {
        let mus: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05].iter().map(|&e: &f64| (e, e.powf(-0.5))).collect();
        assert!(eps_bound_from(&sub(0.1), &mus).unwrap().flag);
        assert!(eps_bound_from(&sub(0.1), &mus[..1]).unwrap().flag);
    }

    #[test]
    fn rate_law_synthetic_and_rhs() {
        let c = 2.0;
        let eps = [4e-4, 2e-4, 1e-4];
        let sups: Vec<(f64, f64)> = eps.iter().map(|e: &f64| (*e, c / e.sqrt())).collect();
        let law = rate_law_subcritical_from(&sub(0.1), &sups, Some(1.0)).unwrap();
        let limit = 0.16 * c * c / (2.0 * 1.6);
        for (_, v) in &law.lhs {
            assert!((v - limit).abs() < 1e-3 * limit);
        }
        assert!(law.spread < 1e-3);
        // constants composition oracle, built term by term from the closed forms
        let p = sub(0.1).paired();
        let k = |kind| closed_form(kind, &p).unwrap();
        let rhs = 0.16 * k(ConstantKind::Gamma_ns) * k(ConstantKind::b_ns).powi(2) * k(ConstantKind::M_ns)
            / (2.0
                * k(ConstantKind::Kappa_s)
                * k(ConstantKind::Alpha_nmus).powi(2)
                * k(ConstantKind::BetaTilde_nmus)
                * k(ConstantKind::B_ns));
        assert!(rhs.is_finite() && rhs > 0.0);
        assert!((law.rhs - rhs).abs() < 1e-14 * rhs);
        assert!(matches!(rate_law_subcritical_from(&sub(0.1), &sups, None), Err(Error::MissingRobin)));
    }

    #[test]
    fn rate_law_bn_synthetic() {
        let p = Params::<f64>::new(2, 0.45, 1.2, 0.1, Regime::BrezisNirenberg).unwrap();
        let e = (4.0 - 3.6) / 1.1;
        let sups: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|x: &f64| (*x, 3.0 * x.powf(-1.0 / e))).collect();
        let law = rate_law_bn_from(&p, &sups, Some(2.0)).unwrap();
        assert!(law.spread < 1e-12);
        assert!(law.rhs.is_finite() && law.rhs > 0.0);
    }

    #[test]
    fn symmetrization_hat_against_oracle() {
        let mu = 0.4;
        let d = DomainSpec::interval(0.0, 1.0, 1024).unwrap();
        let hat = |x: f64| 1.0 - (2.0 * x - 1.0).abs();
        let f = GridField::from_fn(d, |x| hat(x[0]));
        let w = build_weights(&d, mu).unwrap();
        let c = symmetrization_check(&f, &w).unwrap();
        assert!(c.residual <= 1e-4, "{c:?}");
        // oracle for ½∬|x−t|^{-μ} f f: inner integral on both sides of x with
        // |x−t| = v^{1/(1−μ)}, breaks at the kink
        let e = 1.0 / (1.0 - mu);
        let tol = Tolerance::rel(1e-12);
        let inner = |x: f64| {
            let side = |len: f64, sign: f64| {
                integrate(|v: f64| hat(x + sign * v.powf(e)) * e, 0.0, len.powf(1.0 - mu), &tol).unwrap().value
            };
            side(x, -1.0) + side(1.0 - x, 1.0)
        };
        let oracle = 0.5
            * (integrate(|x: f64| hat(x) * inner(x), 0.0, 0.5, &tol).unwrap().value
                + integrate(|x: f64| hat(x) * inner(x), 0.5, 1.0, &tol).unwrap().value);
        assert!((c.lhs_b - oracle).abs() < 1e-4 * oracle, "{} vs {oracle}", c.lhs_b);
        assert!((c.lhs_a - oracle).abs() < 1e-4 * oracle, "{} vs {oracle}", c.lhs_a);
    }

    #[test]
    fn symmetrization_bubble_restriction_and_refinement() {
        let p = Params::<f64>::new(1, 0.3, 0.4, 0.0, Regime::FreeSpace).unwrap();
        let w = Bubble::standard(Family::HartreeW, p).unwrap();
        let mut res = Vec::new();
        for cells in [128, 256, 512, 1024] {
            let d = DomainSpec::interval(-2.0, 3.0, cells).unwrap();
            let f = GridField::from_fn(d, |x| w.eval(x));
            let c = symmetrization_check(&f, &build_weights(&d, 0.4).unwrap()).unwrap();
            res.push(c.residual);
        }
        assert!(res[3] <= 1e-3, "{res:?}");
        for pair in res.windows(2) {
            assert!(pair[1] <= pair[0] * 0.5, "{res:?}");
        }
    }

    #[test]
    fn symmetrization_zero_and_negative() {
        let d = DomainSpec::interval(0.0, 1.0, 64).unwrap();
        let w = build_weights(&d, 0.4).unwrap();
        let c = symmetrization_check(&GridField::zeros(d), &w).unwrap();
        assert_eq!((c.lhs_a, c.lhs_b, c.residual), (0.0, 0.0, 0.0));
        let neg = GridField::from_fn(d, |x| x[0] - 0.5);
        assert!(symmetrization_check(&neg, &w).is_err());
    }

    #[test]
    fn symmetrization_rectangle() {
        let d = DomainSpec::rectangle(0.0, 1.0, 0.0, 1.0, 48).unwrap();
        let f = GridField::from_fn(d, |x: &[f64]| (x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])).sqrt());
        let c = symmetrization_check(&f, &build_weights(&d, 0.8).unwrap()).unwrap();
        assert!(c.residual < 2e-2, "{c:?}");
    }

    #[test]
    fn pohozaev_free_bubble_balances() {
        let p = Params::<f64>::new(1, 0.3, 0.4, 0.0, Regime::FreeSpace).unwrap();
        let b = pohozaev_free_bubble(&p, 4.0, 2048).unwrap();
        assert!(b.moment_balance_gap <= 1e-4, "{b:?}");
        let d = DomainSpec::interval(0.0, 1.0, 64).unwrap();
        let z = pohozaev_balance(&GridField::zeros(d), &p, 2.0, &build_weights(&d, 0.4).unwrap(), 0.2).unwrap();
        assert_eq!((z.interior, z.t1, z.t2, z.t3, z.t4), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn green_limit_synthetic() {
        let p = sub(0.1);
        let d = DomainSpec::interval(0.0, 1.0, 256).unwrap();
        let modes = ModeSet::lowest(d.kind, 4000);
        let b = closed_form(ConstantKind::b_ns, &p).unwrap();
        let x0 = [0.5];
        let g = |x: f64| {
            if x <= 0.0 || x >= 1.0 || x == 0.5 {
                0.0
            } else {
                b * green(&modes, 0.3, &[x], &x0).unwrap().value
            }
        };
        let raw = GridField::from_fn(d, |x| g(x[0]));
        let m = raw.values.iter().fold(0.0f64, |a, v| a.max(*v));
        let u = GridField { domain: d, values: raw.values.iter().map(|v| v / m).collect() };
        let samples: Vec<Vec<f64>> = [0.125, 0.25, 0.375, 0.75, 0.875].iter().map(|x| vec![*x]).collect();
        let check = green_limit_check(&u, m, &modes, &p, &x0, &samples).unwrap();
        for r in &check.rows {
            assert!((r.ratio - 1.0).abs() < 1e-9, "{r:?}");
        }
        assert!(matches!(green_limit_check(&u, m, &modes, &p, &x0, &[vec![0.5]]), Err(Error::SampleTooClose(_))));
    }

    #[test]
    fn continuation_rules() {
        let p = sub(0.2);
        let d = DomainSpec::interval(0.0, 1.0, 128).unwrap();
        let b = Arc::new(build_basis(&d, 32).unwrap());
        let w = build_weights(&d, 0.4).unwrap();
        let o = SolveOptions::default();
        let empty = continuation(&p, &b, &w, &[], &o, None).unwrap();
        assert!(empty.records.is_empty());
        assert!(continuation(&p, &b, &w, &[0.1, 0.2], &o, None).is_err());
        let rep = continuation(&p, &b, &w, &[0.4, 0.2], &o, None).unwrap();
        assert_eq!(rep.records.len(), 2);
        assert!(rep.derived.iter().all(|x| x.rate_lhs > 0.0 && x.profile_distance.is_some()));
        let one = assemble(rep.params, rep.domain, rep.modes, rep.strip_radius, rep.records[..1].to_vec()).unwrap();
        assert!(boundary_bounds(&one, rep.strip_radius).unwrap().flag);
        assert!(matches!(boundary_bounds(&rep, 0.6), Err(Error::DegenerateStrip(_))));
    }
}
