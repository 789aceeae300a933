//! The extremal profiles U (Sobolev) and W (Hartree), their identities,
//! rescaling of computed solutions and free-space energy quotients.

use serde::{Deserialize, Serialize};

use crate::constants::{alpha, beta_tilde, c_ns, sigma_n};
use crate::domain::{DomainSpec, GridField};
use crate::error::{Error, Result};
use crate::model::Params;
use crate::quadrature::{integrate_fallible, ray, ray_fallible, Tolerance};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    SobolevU,
    HartreeW,
}

/// `amplitude · (λ / (1 + λ²|x − ξ|²))^{(n−2s)/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bubble<T> {
    pub family: Family,
    pub center: Vec<T>,
    pub lambda: T,
    pub params: Params<T>,
    amplitude: T,
}

impl<T: Real> Bubble<T> {
    pub fn new(family: Family, center: &[T], lambda: T, params: Params<T>) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::DegenerateScale(format!("bubble scale must be positive (got {lambda})")));
        }
        if center.len() != params.n || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::OutOfRange(format!("bubble center needs {} finite coordinates", params.n)));
        }
        let amplitude = match family {
            Family::SobolevU => c_ns(params.n, params.s)?,
            Family::HartreeW => alpha(params.n, params.s, params.mu)?,
        };
        Ok(Bubble { family, center: center.to_vec(), lambda, params, amplitude })
    }

    /// `W[0, 1]` (or `U[0, 1]`).
    pub fn standard(family: Family, params: Params<T>) -> Result<Self> {
        Self::new(family, &vec![T::zero(); params.n], T::one(), params)
    }

    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    fn half_power(&self) -> T {
        self.params.n_minus_2s() * T::of(0.5)
    }

    pub fn eval_radial(&self, r: T) -> T {
        let l = self.lambda;
        self.amplitude * (l / (T::one() + l * l * r * r)).powf(self.half_power())
    }

    pub fn distance(&self, x: &[T]) -> T {
        self.center.iter().zip(x).map(|(c, v)| (*v - *c) * (*v - *c)).sum::<T>().sqrt()
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.eval_radial(self.distance(x))
    }

    /// `W^q` as a function of the distance to the center, computed without
    /// forming the amplitude power twice.
    fn power_radial(&self, q: T) -> impl Fn(T) -> T + '_ {
        let l = self.lambda;
        let amp = self.amplitude.powf(q);
        let e = self.half_power() * q;
        move |r: T| amp * (l / (T::one() + l * l * r * r)).powf(e)
    }
}

pub fn eval<T: Real>(bubble: &Bubble<T>, x: &[T]) -> T {
    bubble.eval(x)
}

/// Kelvin transform `x ↦ |x|^{-(n−2s)} f(x/|x|²)`.
pub fn kelvin<T: Real, F>(f: F, params: &Params<T>) -> impl Fn(&[T]) -> Result<T>
where
    F: Fn(&[T]) -> T,
{
    let e = params.n_minus_2s();
    move |x: &[T]| {
        let r2: T = x.iter().map(|v| *v * *v).sum();
        if r2 == T::zero() {
            return Err(Error::EvaluationAtOrigin);
        }
        let y: Vec<T> = x.iter().map(|v| *v / r2).collect();
        Ok(r2.powf(-e * T::of(0.5)) * f(&y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConvolutionCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub residual: T,
    /// Quadrature error estimate of `lhs`.
    pub error: T,
}

fn conv_tol<T: Real>(rel: f64) -> Tolerance<T> {
    let mut t = Tolerance::rel(rel.max(T::eps().f64() * 64.0));
    t.max_intervals = 2000;
    t
}

/// `(|·|^{-μ} * W^{2*})(x)` by quadrature in polar coordinates about `x`,
/// with the polar axis along `x − ξ` so that only the angle to that axis matters.
pub fn riesz_of_bubble_power<T: Real>(bubble: &Bubble<T>, x: &[T]) -> Result<(T, T)> {
    let p = &bubble.params;
    let nf = p.dim();
    let q = p.exponents().two_star;
    let wq = bubble.power_radial(q);
    let a = nf - T::one() - p.mu;
    let decay = nf + T::one();
    let width = T::one() / bubble.lambda;
    let d = bubble.distance(x);
    let inner_tol = conv_tol::<T>(1e-13);
    let sigma = sigma_n::<T>(p.n)?;
    if d <= T::eps() * width {
        let v = ray(&wq, a, decay, width, &inner_tol)?;
        return Ok((sigma * v.value, sigma * v.error));
    }
    // ray from x in a direction at angle θ to x − ξ: |y − ξ|² = d² + ρ² + 2dρ cos θ
    let along = |cos_t: T| -> Result<(T, T)> {
        let nearest = (-d * cos_t).max(T::zero());
        let split = T::of(2.0) * d + width;
        let mut breaks = vec![nearest];
        for k in [-2.0, -1.0, 1.0, 2.0] {
            breaks.push(nearest + T::of(k) * width);
        }
        let v = ray_fallible(
            |rho: T| Ok(wq((d * d + rho * rho + T::of(2.0) * d * rho * cos_t).max(T::zero()).sqrt())),
            a,
            decay,
            split,
            &breaks,
            &inner_tol,
        )?;
        Ok((v.value, v.error))
    };
    let pi = T::PI();
    let outer_tol = conv_tol::<T>(1e-12);
    let mut inner_err = T::zero();
    let total = match p.n {
        1 => {
            let (v1, e1) = along(T::one())?;
            let (v2, e2) = along(-T::one())?;
            return Ok((v1 + v2, e1 + e2));
        }
        2 => {
            let knee = (width / d).min(T::one());
            let breaks = [T::zero(), pi - T::of(4.0) * knee, pi - knee, pi];
            let breaks: Vec<T> = breaks.iter().copied().map(|b| b.max(T::zero())).collect();
            let q = integrate_fallible(
                |t: T| {
                    let (v, e) = along(t.cos())?;
                    inner_err = inner_err + e;
                    Ok(T::of(2.0) * v)
                },
                &breaks,
                &outer_tol,
            )?;
            (q.value, q.error)
        }
        _ => {
            // θ ↦ c = cos θ turns sin θ dθ into dc on [−1, 1]
            let knee = (width / d).min(T::one());
            let breaks = [-T::one(), -T::one() + knee * knee, -T::one() + T::of(16.0) * knee * knee, T::one()];
            let mut breaks: Vec<T> = breaks.iter().copied().map(|b| b.min(T::one())).collect();
            breaks.dedup();
            let q = integrate_fallible(
                |c: T| {
                    let (v, e) = along(c)?;
                    inner_err = inner_err + e;
                    Ok(T::of(2.0) * pi * v)
                },
                &breaks,
                &outer_tol,
            )?;
            (q.value, q.error)
        }
    };
    Ok(total)
}

/// `|LHS/RHS − 1|` for the identity `|·|^{-μ} * W^{2*} = β̃ W^{2♯−2*}` at `x`.
pub fn convolution_identity_residual<T: Real>(bubble: &Bubble<T>, x: &[T]) -> Result<ConvolutionCheck<T>> {
    if bubble.family != Family::HartreeW {
        return Err(Error::Precondition("convolution identity is stated for the Hartree bubble W".into()));
    }
    let p = &bubble.params;
    let e = p.exponents();
    let (lhs, error) = riesz_of_bubble_power(bubble, x)?;
    let rhs = beta_tilde(p.n, p.s, p.mu)? * bubble.eval(x).powf(e.two_sharp - e.two_star);
    Ok(ConvolutionCheck { lhs, rhs, residual: (lhs / rhs - T::one()).abs(), error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HlsQuotient<T> {
    pub value: T,
    /// `∫ W^{2♯}` over ℝⁿ.
    pub integral: T,
    /// Share of the integral carried by `|x − ξ| > 10/λ`, bounded by its
    /// leading algebraic term.
    pub tail_bound: T,
}

/// Minimization quotient `‖A^{1/2}W‖² / (∬ W^{2*} W^{2*} |x−t|^{-μ})^{1/2*}`
/// of a Hartree bubble. The Euler–Lagrange equation of W turns both the
/// gradient norm and the double integral into `D = β̃ ∫ W^{2♯}`, so the
/// quotient is `D^{1−1/2*}`.
pub fn hls_quotient<T: Real>(bubble: &Bubble<T>) -> Result<HlsQuotient<T>> {
    if bubble.family != Family::HartreeW {
        return Err(Error::Precondition("quotient is defined for the Hartree bubble W".into()));
    }
    let p = &bubble.params;
    if p.eps != T::zero() {
        return Err(Error::Precondition("quotient is evaluated at eps = 0".into()));
    }
    let e = p.exponents();
    let nf = p.dim();
    let f = bubble.power_radial(e.two_sharp);
    let split = T::of(10.0) / bubble.lambda;
    let q = ray(&f, nf - T::one(), nf + T::one(), split, &conv_tol::<T>(1e-14))?;
    let sigma = sigma_n::<T>(p.n)?;
    let integral = sigma * q.value;
    let amp = bubble.amplitude.powf(e.two_sharp);
    let tail_bound = sigma * amp * bubble.lambda.powf(-nf) * split.powf(-nf) / nf;
    let d = beta_tilde(p.n, p.s, p.mu)? * integral;
    Ok(HlsQuotient { value: d.powf(T::one() - T::one() / e.two_star), integral, tail_bound })
}

/// Scaling exponent of the blow-up rescaling, `(2♯ − 2 − ε)/(2s)`.
pub fn rescale_exponent<T: Real>(params: &Params<T>) -> T {
    (params.exponents().two_sharp - T::of(2.0) - params.eps) / (T::of(2.0) * params.s)
}

/// `v(y) = μ^{-1} u(μ^{-(2♯−2−ε)/(2s)} y + argmax)`, `μ = sup_norm/α_{n,s}`,
/// sampled on the centered grid `[-half_width, half_width]^n` with `cells` cells per axis.
pub fn rescale<T: Real>(
    u: &GridField<T>,
    sup_norm: T,
    argmax: &[T],
    params: &Params<T>,
    half_width: T,
    cells: usize,
) -> Result<GridField<T>> {
    if !(sup_norm > T::zero()) {
        return Err(Error::DegenerateScale(format!("sup norm must be positive (got {sup_norm})")));
    }
    if u.domain.dim() != params.n {
        return Err(Error::GridMismatch);
    }
    let a_ns = alpha(params.n, params.s, params.n_minus_2s())?;
    let mu_eps = sup_norm / a_ns;
    let stretch = mu_eps.powf(-rescale_exponent(params));
    let grid = match params.n {
        1 => DomainSpec::interval(-half_width, half_width, cells)?,
        _ => DomainSpec::rectangle(-half_width, half_width, -half_width, half_width, cells)?,
    };
    let dim = params.n;
    Ok(GridField::from_fn(grid, |y| {
        let mut x = [T::zero(); 2];
        for k in 0..dim {
            x[k] = stretch * y[k] + argmax[k];
        }
        u.interpolate(&x[..dim]) / mu_eps
    }))
}

/// `max |v − W[0,1]|` over grid nodes with `|x| ≤ window` (W with `μ = n − 2s`).
pub fn profile_distance<T: Real>(v: &GridField<T>, params: &Params<T>, window: T) -> Result<T> {
    let w = Bubble::standard(Family::HartreeW, params.paired())?;
    let dim = v.domain.dim();
    let mut best: Option<T> = None;
    for i in 0..v.values.len() {
        let x = v.domain.node(i);
        let r = x[..dim].iter().map(|c| *c * *c).sum::<T>().sqrt();
        if r <= window {
            let diff = (v.values[i] - w.eval(&x[..dim])).abs();
            best = Some(best.map_or(diff, |b| b.max(diff)));
        }
    }
    best.ok_or(Error::EmptyWindow(window.f64()))
}
