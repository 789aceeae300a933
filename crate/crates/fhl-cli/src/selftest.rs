//! Quick structural checks runnable from the installed binary.

use std::sync::Arc;

use fhl::bubbles::{kelvin, Family};
use fhl::constants::gamma;
use fhl::domain::DomainKind;
use fhl::spectral::{apply_as, build_basis, green, solve_as};
use fhl::{Bubble, DomainSpec, ModeSet, Params, Regime, SpectralField};

use crate::config::parse_config;
use crate::CliError;

type Check = fn() -> Result<(), String>;

fn ensure(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn config_round_trip() -> Result<(), String> {
    let text = "schema_version=1\nregime=subcritical\nn=1\ns=0.3\neps=0.1\ndomain.kind=interval\n\
                domain.a=0\ndomain.b=1\nmodes=32\ngrid=128\n";
    let cfg = parse_config(text).map_err(|e| e.to_string())?.config;
    let again = parse_config(&cfg.to_text()).map_err(|e| e.to_string())?.config;
    ensure(again == cfg, "parse(serialize(cfg)) differs")
}

fn config_type_error() -> Result<(), String> {
    let text = "schema_version=1\nregime=subcritical\nn=1\ns=two\n";
    ensure(parse_config(text) == Err(CliError::TypeError("s".into())), "s=two was accepted")
}

fn config_duplicate_warns() -> Result<(), String> {
    let text = "schema_version=1\nregime=subcritical\nn=1\ns=0.2\ns=0.3\ndomain.kind=interval\n\
                domain.a=0\ndomain.b=1\nmodes=32\ngrid=128\n";
    let p = parse_config(text).map_err(|e| e.to_string())?;
    ensure(p.config.s == 0.3 && p.warnings.len() == 1, "duplicate key not last-wins")
}

fn params_reject_dimension() -> Result<(), String> {
    ensure(Params::new(4, 0.3, 0.4, 0.1, Regime::FreeSpace).is_err(), "n = 4 accepted")
}

fn exponents_half_laplacian() -> Result<(), String> {
    let e = Params::new(2, 0.5, 1.0, 0.0, Regime::FreeSpace).map_err(|e| e.to_string())?.exponents();
    ensure((e.two_sharp, e.two_star, e.p_sub) == (4.0, 3.0, 3.0), "exponents of (2, 0.5, 1)")
}

fn gamma_half() -> Result<(), String> {
    let g = gamma(0.5).map_err(|e| e.to_string())?;
    ensure((g - std::f64::consts::PI.sqrt()).abs() < 1e-13, "gamma(1/2)")
}

fn kelvin_fixes_bubble() -> Result<(), String> {
    let p = Params::new(2, 0.5, 1.0, 0.0, Regime::FreeSpace).map_err(|e| e.to_string())?;
    let w = Bubble::standard(Family::HartreeW, p).map_err(|e| e.to_string())?;
    let k = kelvin(|x: &[f64]| w.eval(x), &p);
    for x in [[0.3, -0.2], [1.7, 0.4], [-2.0, 5.0]] {
        let v = k(&x).map_err(|e| e.to_string())?;
        ensure(((v - w.eval(&x)) / w.eval(&x)).abs() < 1e-12, "Kelvin transform moved W")?;
    }
    Ok(())
}

fn spectral_round_trip() -> Result<(), String> {
    let d = DomainSpec::interval(0.0, 1.0, 64).map_err(|e| e.to_string())?;
    let basis = Arc::new(build_basis(&d, 16).map_err(|e| e.to_string())?);
    let coeffs: Vec<f64> = (0..16).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    let f = SpectralField::new(basis, coeffs.clone()).map_err(|e| e.to_string())?;
    let back = apply_as(&solve_as(&f, 0.3), 0.3);
    ensure(back.coeffs.iter().zip(&coeffs).all(|(a, b)| (a - b).abs() < 1e-12), "A_s(A_s^-1 f) != f")
}

fn green_diagonal_rejected() -> Result<(), String> {
    let modes = ModeSet::lowest(DomainKind::Interval { a: 0.0, b: 1.0 }, 8);
    ensure(green(&modes, 0.3, &[0.5], &[0.5]) == Err(fhl::Error::DiagonalEvaluation), "diagonal Green value")
}

pub const CHECKS: [(&str, Check); 9] = [
    ("config_round_trip", config_round_trip),
    ("config_type_error", config_type_error),
    ("config_duplicate_warns", config_duplicate_warns),
    ("params_reject_dimension", params_reject_dimension),
    ("exponents_half_laplacian", exponents_half_laplacian),
    ("gamma_half", gamma_half),
    ("kelvin_fixes_bubble", kelvin_fixes_bubble),
    ("spectral_round_trip", spectral_round_trip),
    ("green_diagonal_rejected", green_diagonal_rejected),
];

pub fn run_all() -> Result<(), CliError> {
    let mut failed = Vec::new();
    for (name, check) in CHECKS {
        match check() {
            Ok(()) => println!("ok   {name}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Io(format!("selftest failures: {}", failed.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_check_passes() {
        for (name, check) in super::CHECKS {
            assert_eq!(check(), Ok(()), "{name}");
        }
    }
}
