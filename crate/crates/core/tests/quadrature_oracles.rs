//! Closed-form and adaptive-quadrature references for the trapezoid-based
//! functionals.

use std::f64::consts::PI;

use statrs::function::erf::erfc;
use tadpole_nls::graph::{norms, GraphDomain, GraphFunction, NormWeights};
use tadpole_nls::profile::{functionals, StandingWave};
use tadpole_nls::quadrature::{integrate, Tolerance};

const TIGHT: Tolerance = Tolerance {
    abs: 1e-13,
    rel: 1e-13,
    max_intervals: 2000,
};

#[test]
fn gausson_tail_mass_matches_erfc() {
    for l in [PI / 2.0, PI, 2.0] {
        let (w, d) = StandingWave::build(0.0, l, 1e-3).unwrap();
        let (_, tail) = w.mass_parts(&d).unwrap();
        let exact = PI.sqrt() / 2.0 * erfc(w.a());
        // trapezoid error is h²/12 times the end-point slope jump
        let slope = 2.0 * w.a() * (-w.a() * w.a()).exp();
        assert!((tail - exact).abs() < 1e-6 * slope + 1e-12, "L = {l}: {tail} vs {exact}");
    }
}

#[test]
fn tail_only_mass_and_moment_match_quadrature() {
    let (w, d) = StandingWave::build(1.0, PI, 1e-3).unwrap();
    let (c, a, l) = (w.c, w.a(), PI);
    let amp = (c + 1.0).exp();
    let tail_only = GraphFunction::from_fns(&d, |_| 0.0, |x| w.tail_value(x));
    let n = norms(&tail_only, &d).unwrap();
    let r = d.tail_length();
    let mass = integrate(|t| amp * (-(t + a) * (t + a)).exp(), 0.0, r, TIGHT).unwrap().value;
    assert!((n.l2 * n.l2 - mass).abs() < 1e-5 * mass, "{} vs {mass}", n.l2 * n.l2);
    assert!((mass - amp * PI.sqrt() / 2.0 * erfc(a)).abs() < 1e-10 * mass);
    let moment = integrate(|t| amp * (t + l).powi(2) * (-(t + a) * (t + a)).exp(), 0.0, r, TIGHT)
        .unwrap()
        .value;
    assert!((n.weighted_x * n.weighted_x - moment).abs() < 1e-5 * moment);
}

#[test]
fn functionals_match_quadrature_of_the_profile() {
    // Nehari: E(Θ_c) = -c μ(c); the mass is checked against the trapezoid parts
    for c in [-1.0, 0.5, 2.0] {
        let (w, d) = StandingWave::build(c, PI, 1e-3).unwrap();
        let f = functionals(&w.samples(&d).unwrap(), c, &d).unwrap();
        assert!((f.mass - w.mass(&d).unwrap()).abs() < 1e-10 * f.mass);
        assert!((f.energy + c * f.mass).abs() < 1e-5 * f.mass, "c = {c}: {} vs {}", f.energy, -c * f.mass);
    }
}

#[test]
fn weighted_norm_of_constant() {
    let d = GraphDomain::new(1.0, 2.0, 400, 400).unwrap();
    let one = GraphFunction::from_fns(&d, |_| 1.0, |_| 1.0);
    let w = NormWeights { l2: 1.0, h1: 1.0, x: 0.0 };
    assert!((w.norm(&one, &d).unwrap() - 4.0f64.sqrt()).abs() < 1e-12);
}
