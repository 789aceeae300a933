//! Parameter validation and critical-exponent arithmetic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    SubcriticalHartree,
    BrezisNirenberg,
    FreeSpace,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::SubcriticalHartree => "subcritical",
            Regime::BrezisNirenberg => "bn",
            Regime::FreeSpace => "free",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "subcritical" | "subcritical_hartree" | "subcriticalhartree" => Ok(Regime::SubcriticalHartree),
            "bn" | "brezis-nirenberg" | "brezis_nirenberg" | "brezisnirenberg" => Ok(Regime::BrezisNirenberg),
            "free" | "free_space" | "freespace" => Ok(Regime::FreeSpace),
            other => Err(Error::OutOfRange(format!("unknown regime '{other}'"))),
        }
    }
}

/// Validated problem parameters.
///
/// Fields are public for reading; construct through [`Params::new`] so that the
/// regime inequalities hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Params<T> {
    pub n: usize,
    pub s: T,
    pub mu: T,
    pub eps: T,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Exponents<T> {
    pub two_sharp: T,
    pub two_star: T,
    pub p_sub: T,
}

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::OutOfRange(msg.into()))
}

impl<T: Real> Params<T> {
    pub fn new(n: usize, s: T, mu: T, eps: T, regime: Regime) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return fail(format!("n must be 1, 2 or 3 (got {n})"));
        }
        for (name, v) in [("s", s), ("mu", mu), ("eps", eps)] {
            if !v.is_finite() {
                return fail(format!("{name} must be finite"));
            }
        }
        let nf = T::of_usize(n);
        let two = T::of(2.0);
        if !(s > T::zero() && s < T::one()) {
            return fail(format!("0 < s < 1 fails (s = {s})"));
        }
        if !(mu > T::zero() && mu < nf) {
            return fail(format!("0 < mu < n fails (mu = {mu}, n = {n})"));
        }
        if eps < T::zero() {
            return fail(format!("eps >= 0 fails (eps = {eps})"));
        }
        if !(two * s < nf) {
            return fail(format!("2s < n fails (2s = {}, n = {n})", two * s));
        }
        let mut mu = mu;
        match regime {
            Regime::SubcriticalHartree => {
                let target = nf - two * s;
                // mu is usually typed as a decimal; accept it when it agrees with
                // n - 2s to rounding and then store the exact value
                let slack = T::of(1e-12).max(T::eps() * T::of(8.0)) * nf;
                if (mu - target).abs() > slack {
                    return fail(format!("mu = n - 2s fails (mu = {mu}, n - 2s = {target})"));
                }
                mu = target;
                if !(nf < T::of(6.0) * s) {
                    return fail(format!("n < 6s fails (n = {n}, 6s = {})", T::of(6.0) * s));
                }
            }
            Regime::BrezisNirenberg => {
                let four_s = T::of(4.0) * s;
                if !(nf > four_s) {
                    return fail(format!("n > 4s fails (n = {n}, 4s = {four_s})"));
                }
                let bound = nf.min(four_s).min((nf + two * s) / two);
                if !(mu < bound) {
                    return fail(format!("mu < min(n, 4s, (n+2s)/2) fails (mu = {mu}, bound = {bound})"));
                }
            }
            Regime::FreeSpace => {}
        }
        Ok(Params { n, s, mu, eps, regime })
    }

    pub fn exponents(&self) -> Exponents<T> {
        exponents(self)
    }

    pub fn dim(&self) -> T {
        T::of_usize(self.n)
    }

    /// `n - 2s`, the homogeneity of the Riesz kernel paired with `A_s`.
    pub fn n_minus_2s(&self) -> T {
        self.dim() - T::of(2.0) * self.s
    }

    pub fn with_eps(&self, eps: T) -> Result<Self> {
        Params::new(self.n, self.s, self.mu, eps, self.regime)
    }

    /// Same `(n, s)` with the kernel exponent `mu = n - 2s` (the objects
    /// `α_{n,s}`, `β̃_{n,s}` are evaluated there).
    pub fn paired(&self) -> Self {
        Params { mu: self.n_minus_2s(), ..*self }
    }

    /// The power in the Hartree nonlinearity `(|x|^{-μ} * u^p) u^{p-1}`.
    pub fn nonlinear_power(&self) -> T {
        let e = self.exponents();
        match self.regime {
            Regime::SubcriticalHartree => e.p_sub,
            _ => e.two_star,
        }
    }
}

pub fn make_params<T: Real>(n: usize, s: T, mu: T, eps: T, regime: Regime) -> Result<Params<T>> {
    Params::new(n, s, mu, eps, regime)
}

pub fn exponents<T: Real>(p: &Params<T>) -> Exponents<T> {
    let n = p.dim();
    let d = p.n_minus_2s();
    let two_sharp = T::of(2.0) * n / d;
    let two_star = (T::of(2.0) * n - p.mu) / d;
    Exponents { two_sharp, two_star, p_sub: two_sharp - T::one() - p.eps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accepts_interval_reference() {
        let p = Params::<f64>::new(1, 0.3, 0.4, 0.1, Regime::SubcriticalHartree).unwrap();
        assert_eq!(p.mu, 1.0 - 0.6);
    }

    #[test]
    fn rejects_n_at_least_six_s() {
        let e = Params::<f64>::new(2, 0.3, 1.0, 0.0, Regime::SubcriticalHartree).unwrap_err();
        assert!(e.to_string().contains("mu = n - 2s") || e.to_string().contains("n < 6s"));
        // with the paired mu only the dimension bound remains
        let e = Params::<f64>::new(2, 0.3, 1.4, 0.0, Regime::SubcriticalHartree).unwrap_err();
        assert!(e.to_string().contains("n < 6s"), "{e}");
    }

    #[test]
    fn accepts_bn_three_dimensional() {
        assert!(Params::<f64>::new(3, 0.5, 1.5, 0.05, Regime::BrezisNirenberg).is_ok());
        assert!(Params::<f64>::new(3, 0.5, 2.0, 0.05, Regime::BrezisNirenberg).is_err());
        assert!(Params::<f64>::new(2, 0.5, 0.5, 0.05, Regime::BrezisNirenberg).is_err());
    }

    #[test]
    fn rejects_mismatched_mu() {
        assert!(Params::<f64>::new(1, 0.3, 0.41, 0.1, Regime::SubcriticalHartree).is_err());
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(Params::<f64>::new(4, 0.3, 0.4, 0.1, Regime::FreeSpace).is_err());
        assert!(Params::<f64>::new(1, 1.0, 0.4, 0.1, Regime::FreeSpace).is_err());
        assert!(Params::<f64>::new(1, 0.3, 1.0, 0.1, Regime::FreeSpace).is_err());
        assert!(Params::<f64>::new(1, 0.3, 0.4, -0.1, Regime::FreeSpace).is_err());
        assert!(Params::<f64>::new(1, 0.6, 0.4, 0.0, Regime::FreeSpace).is_err());
        assert!(Params::<f64>::new(1, f64::NAN, 0.4, 0.0, Regime::FreeSpace).is_err());
    }

    #[test]
    fn exponent_examples() {
        let e = Params::<f64>::new(2, 0.5, 1.0, 0.0, Regime::FreeSpace).unwrap().exponents();
        assert_eq!((e.two_sharp, e.two_star, e.p_sub), (4.0, 3.0, 3.0));
        let e = Params::<f64>::new(1, 0.3, 0.4, 0.1, Regime::SubcriticalHartree).unwrap().exponents();
        assert!((e.two_sharp - 5.0).abs() < 1e-14);
        assert!((e.two_star - 4.0).abs() < 1e-14);
        assert!((e.p_sub - 3.9).abs() < 1e-14);
        let e = Params::<f64>::new(3, 0.6, 1.8, 0.0, Regime::FreeSpace).unwrap().exponents();
        assert!((e.two_sharp - 10.0 / 3.0).abs() < 1e-14);
        assert!((e.two_star - 7.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn regime_parsing() {
        assert_eq!("bn".parse::<Regime>().unwrap(), Regime::BrezisNirenberg);
        assert_eq!("Subcritical".parse::<Regime>().unwrap(), Regime::SubcriticalHartree);
        assert!("other".parse::<Regime>().is_err());
    }

    #[test]
    fn single_precision_params() {
        let p = Params::<f32>::new(1, 0.3, 0.4, 0.1, Regime::SubcriticalHartree).unwrap();
        assert!((p.exponents().p_sub - 3.9).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn paired_exponents_differ_by_one(n in 1usize..=3, s in 0.01f64..0.99, eps in 0.0f64..1.0) {
            prop_assume!(2.0 * s < n as f64);
            let mu = n as f64 - 2.0 * s;
            let p = Params::<f64>::new(n, s, mu, eps, Regime::FreeSpace).unwrap();
            let e = exponents(&p);
            prop_assert!((e.two_star - (e.two_sharp - 1.0)).abs() <= 1e-12 * e.two_sharp);
            prop_assert!(e.two_sharp > 2.0);
            prop_assert!(e.two_star > 1.0);
            if eps > 0.0 { prop_assert!(e.p_sub < e.two_sharp - 1.0); }
            prop_assert_eq!(e, exponents(&p));
        }

        #[test]
        fn subcritical_acceptance_matches_inequalities(n in 1usize..=3, s in 0.01f64..0.99) {
            let ok = Params::<f64>::new(n, s, n as f64 - 2.0 * s, 0.1, Regime::SubcriticalHartree).is_ok();
            let nf = n as f64;
            prop_assert_eq!(ok, 2.0 * s < nf && nf < 6.0 * s);
        }
    }
}
