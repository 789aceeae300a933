//! Adaptive Gauss–Kronrod quadrature and half-line helpers.

use crate::error::{Error, Result};
use crate::scalar::Real;

// 7-point Gauss / 15-point Kronrod pair on [-1, 1] (abscissae in decreasing order).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// 8-point Gauss–Legendre rule on [-1, 1].
pub const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
pub const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_intervals: usize,
}

impl<T: Real> Tolerance<T> {
    pub fn rel(rel: f64) -> Self {
        Tolerance { abs: T::of(1e-300).max(T::min_positive_value()), rel: T::of(rel), max_intervals: 4000 }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = T::of(abs);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad<T> {
    pub value: T,
    pub error: T,
}

fn gk15<T: Real, F>(f: &mut F, a: T, b: T) -> Result<(T, T)>
where
    F: FnMut(T) -> Result<T>,
{
    let half = T::of(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c)?;
    let mut kron = fc * T::of(WGK[7]);
    let mut gauss = fc * T::of(WG[3]);
    for j in 0..7 {
        let dx = h * T::of(XGK[j]);
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        kron = kron + T::of(WGK[j]) * (f1 + f2);
        if j % 2 == 1 {
            gauss = gauss + T::of(WG[j / 2]) * (f1 + f2);
        }
    }
    let value = kron * h;
    let err = ((kron - gauss) * h).abs();
    Ok((value, err))
}

/// Adaptive integration over the pieces delimited by `breaks` (sorted), with a
/// single global error budget. The integrand may fail; its error is propagated.
pub fn integrate_fallible<T: Real, F>(mut f: F, breaks: &[T], tol: &Tolerance<T>) -> Result<Quad<T>>
where
    F: FnMut(T) -> Result<T>,
{
    assert!(breaks.len() >= 2, "need at least one interval");
    let mut pool: Vec<(T, T, T, T)> = Vec::with_capacity(64);
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&mut f, w[0], w[1])?;
            pool.push((w[0], w[1], v, e));
        }
    }
    loop {
        let value: T = pool.iter().map(|p| p.2).sum();
        let error: T = pool.iter().map(|p| p.3).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::QuadratureFailure { value: value.f64(), estimate: error.f64() });
        }
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            return Ok(Quad { value, error });
        }
        if pool.len() >= tol.max_intervals {
            return Err(Error::QuadratureFailure { value: value.f64(), estimate: error.f64() });
        }
        let (worst, _) = pool
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (a, b, _, _) = pool[worst];
        let m = T::of(0.5) * (a + b);
        if !(m > a && m < b) {
            // interval cannot be split further in this precision
            let value: T = pool.iter().map(|p| p.2).sum();
            return Err(Error::QuadratureFailure { value: value.f64(), estimate: error.f64() });
        }
        let (v1, e1) = gk15(&mut f, a, m)?;
        let (v2, e2) = gk15(&mut f, m, b)?;
        pool[worst] = (a, m, v1, e1);
        pool.push((m, b, v2, e2));
    }
}

pub fn integrate<T: Real, F>(f: F, a: T, b: T, tol: &Tolerance<T>) -> Result<Quad<T>>
where
    F: Fn(T) -> T,
{
    integrate_fallible(|x| Ok(f(x)), &[a, b], tol)
}

pub fn integrate_breaks<T: Real, F>(f: F, breaks: &[T], tol: &Tolerance<T>) -> Result<Quad<T>>
where
    F: Fn(T) -> T,
{
    integrate_fallible(|x| Ok(f(x)), breaks, tol)
}

/// Half-line integral `∫₀^∞ ρ^a f(ρ) dρ` for `a > -1`, where the full integrand
/// decays like `ρ^{-decay}` with `decay > 1`.
///
/// `[0, split]` is mapped by `ρ = split·u^{1/(a+1)}`, which absorbs the power
/// `ρ^a` exactly; `[split, ∞)` by `ρ = split·v^{-1/(decay-1)}`, which turns the
/// algebraic tail into a bounded integrand. `breaks` are extra nodes in `ρ`.
pub fn ray_fallible<T: Real, F>(mut f: F, a: T, decay: T, split: T, breaks: &[T], tol: &Tolerance<T>) -> Result<Quad<T>>
where
    F: FnMut(T) -> Result<T>,
{
    let one = T::one();
    if a <= -one {
        return Err(Error::DivergentIntegral(format!("power rho^{} not integrable at 0", a)));
    }
    if decay <= one {
        return Err(Error::DivergentIntegral(format!("decay rate {} does not exceed 1", decay)));
    }
    let m = one / (a + one);
    let scale = split.powf(a + one) * m;
    let mut head_breaks = vec![T::zero()];
    let mut tail_breaks = vec![T::zero()];
    let mut sorted: Vec<T> = breaks.iter().copied().filter(|b| *b > T::zero()).collect();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let k = one / (decay - one);
    for b in sorted {
        if b < split {
            head_breaks.push((b / split).powf(a + one));
        } else if b > split {
            tail_breaks.push((b / split).powf(-one / k));
        }
    }
    head_breaks.push(one);
    tail_breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    tail_breaks.push(one);
    let mut tol_part = *tol;
    tol_part.abs = tol.abs * T::of(0.5);
    let head = integrate_fallible(|u| Ok(scale * f(split * u.powf(m))?), &head_breaks, &tol_part)?;
    let tail = integrate_fallible(
        |v| {
            let rho = split * v.powf(-k);
            if !rho.is_finite() {
                return Ok(T::zero());
            }
            let g = rho.powf(a) * f(rho)? * split * k * v.powf(-k - one);
            Ok(if g.is_finite() { g } else { T::zero() })
        },
        &tail_breaks,
        &tol_part,
    )?;
    Ok(Quad { value: head.value + tail.value, error: head.error + tail.error })
}

pub fn ray<T: Real, F>(f: F, a: T, decay: T, split: T, tol: &Tolerance<T>) -> Result<Quad<T>>
where
    F: Fn(T) -> T,
{
    ray_fallible(|r| Ok(f(r)), a, decay, split, &[], tol)
}

/// Fixed 8-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre8<T: Real, F>(f: F, a: T, b: T) -> T
where
    F: Fn(T) -> T,
{
    let c = T::of(0.5) * (a + b);
    let h = T::of(0.5) * (b - a);
    let mut acc = T::zero();
    for i in 0..8 {
        acc = acc + T::of(GL8_W[i]) * f(c + h * T::of(GL8_X[i]));
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x: f64| x.powi(5) - 3.0 * x * x, -1.0, 2.0, &Tolerance::rel(1e-14)).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((q.value - exact).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫₀¹ x^{-1/2} = 2
        let q = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &Tolerance::rel(1e-10)).unwrap();
        assert!((q.value - 2.0).abs() < 1e-8, "{}", q.value);
    }

    #[test]
    fn ray_handles_power_tails() {
        // ∫₀^∞ ρ^{-1/2} / (1+ρ)  = π
        let q = ray(|r: f64| 1.0 / (1.0 + r), -0.5, 1.5, 1.0, &Tolerance::rel(1e-12)).unwrap();
        assert!((q.value - std::f64::consts::PI).abs() < 1e-10, "{}", q.value);
        // ∫₀^∞ ρ/(1+ρ²)² = 1/2
        let q = ray(|r: f64| (1.0 + r * r).powi(-2), 1.0, 3.0, 1.0, &Tolerance::rel(1e-12)).unwrap();
        assert!((q.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_degree_fifteen() {
        let v = gauss_legendre8(|x: f64| x.powi(14) + x.powi(15), 0.0, 1.0);
        assert!((v - (1.0 / 15.0 + 1.0 / 16.0)).abs() < 1e-14);
    }

    #[test]
    fn reports_failure_with_estimate() {
        let tol = Tolerance { abs: 0.0, rel: 1e-15, max_intervals: 3 };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &tol);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let q = integrate(|x: f32| x.exp(), 0.0f32, 1.0, &Tolerance::rel(1e-6)).unwrap();
        assert!((q.value - (1f32.exp() - 1.0)).abs() < 1e-5);
    }
}
