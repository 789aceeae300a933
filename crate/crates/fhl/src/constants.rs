//! Closed-form constants built from the Gamma function.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Params;
use crate::quadrature::{integrate, ray, Tolerance};
use crate::scalar::Real;

/// Lanczos approximation with g = 7 and nine coefficients (the set published
/// with Numerical Recipes / GSL); relative error below 2e-15 on (0.5, 172).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for x > 0.
pub fn gamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::NonPositiveArgument(x.f64()));
    }
    if x > T::of(171.6) {
        return Ok(T::infinity());
    }
    // integers are exact products
    if x == x.round() && x <= T::of(30.0) {
        let mut acc = T::one();
        let mut k = T::of(2.0);
        while k < x {
            acc = acc * k;
            k = k + T::one();
        }
        return Ok(acc);
    }
    if x < T::of(0.5) {
        // Γ(x) = Γ(x+1)/x keeps the argument positive (no reflection needed)
        return Ok(gamma(x + T::one())? / x);
    }
    let z = x - T::one();
    let mut sum = T::of(LANCZOS[0]);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum = sum + T::of(*c) / (z + T::of_usize(i));
    }
    let t = z + T::of(LANCZOS_G + 0.5);
    // t^{z+1/2} split in two halves so that large arguments do not overflow
    let half = t.powf((z + T::of(0.5)) * T::of(0.5));
    Ok((T::of(2.0) * T::PI()).sqrt() * half * ((-t).exp() * half) * sum)
}

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstantKind {
    C_ns,
    C_HLS_sharp,
    Alpha_nmus,
    BetaTilde_nmus,
    Gamma_ns,
    Kappa_s,
    B_ns,
    M_ns,
    F_ns,
    SigmaN,
    b_ns,
    d_ns,
}

impl ConstantKind {
    pub const ALL: [ConstantKind; 12] = [
        ConstantKind::C_ns,
        ConstantKind::C_HLS_sharp,
        ConstantKind::Alpha_nmus,
        ConstantKind::BetaTilde_nmus,
        ConstantKind::Gamma_ns,
        ConstantKind::Kappa_s,
        ConstantKind::B_ns,
        ConstantKind::M_ns,
        ConstantKind::F_ns,
        ConstantKind::SigmaN,
        ConstantKind::b_ns,
        ConstantKind::d_ns,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ConstantKind::C_ns => "C_ns",
            ConstantKind::C_HLS_sharp => "C_HLS_sharp",
            ConstantKind::Alpha_nmus => "Alpha_nmus",
            ConstantKind::BetaTilde_nmus => "BetaTilde_nmus",
            ConstantKind::Gamma_ns => "Gamma_ns",
            ConstantKind::Kappa_s => "Kappa_s",
            ConstantKind::B_ns => "B_ns",
            ConstantKind::M_ns => "M_ns",
            ConstantKind::F_ns => "F_ns",
            ConstantKind::SigmaN => "SigmaN",
            ConstantKind::b_ns => "b_ns",
            ConstantKind::d_ns => "d_ns",
        }
    }
}

impl fmt::Display for ConstantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ConstantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConstantKind::ALL.iter().copied().find(|k| k.tag() == s).ok_or_else(|| Error::UnsupportedKind(s.to_string()))
    }
}

/// Surface area of the unit sphere in ℝⁿ (σ₁ = 2 counts the two points ±1).
pub fn sigma_n<T: Real>(n: usize) -> Result<T> {
    let half_n = T::of_usize(n) * T::of(0.5);
    Ok(T::of(2.0) * T::PI().powf(half_n) / gamma(half_n)?)
}

/// Bracket shared by α and β̃:
/// 2^{2s} Γ((n+2s)/2) Γ((2n−μ)/2) / (π^{n/2} Γ((n−2s)/2) Γ((n−μ)/2)).
fn hls_bracket<T: Real>(n: T, s: T, mu: T) -> Result<T> {
    let two = T::of(2.0);
    let num = two.powf(two * s) * gamma((n + two * s) / two)? * gamma((two * n - mu) / two)?;
    let den = T::PI().powf(n / two) * gamma((n - two * s) / two)? * gamma((n - mu) / two)?;
    Ok(num / den)
}

/// Amplitude α_{n,μ,s} of the Hartree bubble W.
pub fn alpha<T: Real>(n: usize, s: T, mu: T) -> Result<T> {
    let nf = T::of_usize(n);
    let two = T::of(2.0);
    let e = (nf - two * s) / (two * (nf + two * s - mu));
    Ok(hls_bracket(nf, s, mu)?.powf(e))
}

/// β̃_{n,μ,s} of the convolution identity |x|^{-μ} * W^{2*} = β̃ W^{2♯-2*}.
pub fn beta_tilde<T: Real>(n: usize, s: T, mu: T) -> Result<T> {
    let nf = T::of_usize(n);
    let two = T::of(2.0);
    let pre = T::PI().powf(nf / two) * gamma((nf - mu) / two)? / gamma((two * nf - mu) / two)?;
    Ok(pre * hls_bracket(nf, s, mu)?.powf((nf - mu) / (nf + two * s - mu)))
}

/// Amplitude c_{n,s} of the Sobolev bubble U.
pub fn c_ns<T: Real>(n: usize, s: T) -> Result<T> {
    let nf = T::of_usize(n);
    let two = T::of(2.0);
    let ratio = gamma((nf + two * s) / two)? / gamma((nf - two * s) / two)?;
    Ok(two.powf(two * s) * ratio.powf((nf - two * s) / (T::of(4.0) * s)))
}

pub fn c_hls<T: Real>(n: usize, mu: T) -> Result<T> {
    let nf = T::of_usize(n);
    let two = T::of(2.0);
    let pre = T::PI().powf(mu / two) * gamma((nf - mu) / two)? / gamma(nf - mu / two)?;
    let ratio = gamma(nf)? / gamma(nf / two)?;
    Ok(pre * ratio.powf(T::one() - mu / nf))
}

/// γ_{n,s}: the free-space Green function of (−Δ)^s is γ_{n,s}|x|^{-(n-2s)}.
pub fn gamma_ns<T: Real>(n: usize, s: T) -> Result<T> {
    let nf = T::of_usize(n);
    let two = T::of(2.0);
    let v = two.powf(T::one() - two * s) * gamma((nf - two * s) / two)? / (gamma(nf / two)? * gamma(s)?);
    Ok(v / sigma_n::<T>(n)?)
}

pub fn kappa_s<T: Real>(s: T) -> Result<T> {
    let two = T::of(2.0);
    Ok(gamma(T::one() - s)? / (two.powf(two * s - T::one()) * gamma(s)?))
}

fn radial_tol<T: Real>() -> Tolerance<T> {
    Tolerance::rel(1e-12_f64.max(T::eps().f64() * 16.0))
}

/// B_{n,s} = σ_n ∫₀^∞ r^{n−1}/(1+r²)^n dr.
pub fn b_upper<T: Real>(n: usize) -> Result<T> {
    let nf = T::of_usize(n);
    let q = ray(|r: T| (T::one() + r * r).powf(-nf), nf - T::one(), nf + T::one(), T::one(), &radial_tol())?;
    Ok(sigma_n::<T>(n)? * q.value)
}

/// M_{n,s} = σ_n ∫₀¹ r^{n−1}(1−r²)^{−s} dr.
pub fn m_upper<T: Real>(n: usize, s: T) -> Result<T> {
    if !(s < T::one()) {
        return Err(Error::DivergentIntegral(format!("M_ns needs s < 1 (s = {s})")));
    }
    let nf = T::of_usize(n);
    let half = T::of(0.5);
    let tol = radial_tol::<T>();
    let head = integrate(|r: T| r.powf(nf - T::one()) * (T::one() - r * r).powf(-s), T::zero(), half, &tol)?;
    // r = 1 − u^{1/(1−s)} removes the endpoint singularity (1−r)^{−s} on [1/2, 1)
    let m = T::one() / (T::one() - s);
    let umax = half.powf(T::one() - s);
    let tail = integrate(
        |u: T| {
            let um = u.powf(m);
            let r = T::one() - um;
            m * r.powf(nf - T::one()) * (T::of(2.0) - um).powf(-s)
        },
        T::zero(),
        umax,
        &tol,
    )?;
    Ok(sigma_n::<T>(n)? * (head.value + tail.value))
}

/// F_{n,s} = σ_n ∫₀^∞ r^{n−1}/(1+r²)^{n−2s} dr, finite only for n > 4s.
pub fn f_upper<T: Real>(n: usize, s: T) -> Result<T> {
    let nf = T::of_usize(n);
    let decay = nf - T::of(4.0) * s + T::one();
    if !(decay > T::one()) {
        return Err(Error::DivergentIntegral(format!("F_ns needs n > 4s (n = {n}, 4s = {})", T::of(4.0) * s)));
    }
    let p = nf - T::of(2.0) * s;
    let q = ray(|r: T| (T::one() + r * r).powf(-p), nf - T::one(), decay, T::one(), &radial_tol())?;
    Ok(sigma_n::<T>(n)? * q.value)
}

fn b_like<T: Real>(n: usize, s: T, mu: T) -> Result<T> {
    let nf = T::of_usize(n);
    let two = T::of(2.0);
    let two_sharp = two * nf / (nf - two * s);
    let pre = sigma_n::<T>(n)? / two * gamma(s)? * gamma(nf / two)? / gamma((nf + two * s) / two)?;
    Ok(pre * alpha(n, s, mu)?.powf(two_sharp) * beta_tilde(n, s, mu)?)
}

/// Evaluate a named constant for the given parameters.
///
/// Kinds indexed by `(n, s)` only use those fields; `Alpha_nmus`,
/// `BetaTilde_nmus`, `C_HLS_sharp` and `d_ns` use `params.mu`; `b_ns` always
/// uses the paired exponent `mu = n − 2s`.
pub fn closed_form<T: Real>(kind: ConstantKind, params: &Params<T>) -> Result<T> {
    let (n, s, mu) = (params.n, params.s, params.mu);
    match kind {
        ConstantKind::C_ns => c_ns(n, s),
        ConstantKind::C_HLS_sharp => c_hls(n, mu),
        ConstantKind::Alpha_nmus => alpha(n, s, mu),
        ConstantKind::BetaTilde_nmus => beta_tilde(n, s, mu),
        ConstantKind::Gamma_ns => gamma_ns(n, s),
        ConstantKind::Kappa_s => kappa_s(s),
        ConstantKind::B_ns => b_upper(n),
        ConstantKind::M_ns => m_upper(n, s),
        ConstantKind::F_ns => f_upper(n, s),
        ConstantKind::SigmaN => sigma_n(n),
        ConstantKind::b_ns => b_like(n, s, params.n_minus_2s()),
        ConstantKind::d_ns => b_like(n, s, mu),
    }
}

/// Every constant that is finite for `params`, in tag order.
pub fn applicable<T: Real>(params: &Params<T>) -> Result<Vec<(ConstantKind, T)>> {
    let mut out = Vec::new();
    for kind in ConstantKind::ALL {
        match closed_form(kind, params) {
            Ok(v) => out.push((kind, v)),
            Err(Error::DivergentIntegral(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
