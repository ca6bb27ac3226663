//! Truncation bounds on a wide tube, where the gap between the Neumann and
//! Dirichlet cuts is far above rounding and its decay in `L` is measurable.

use std::f64::consts::PI;

use nodal_core::experiments::{bracket, threshold, Numerics};
use nodal_core::{DomainSpec, Parity, Profile, Sector};

const EPS: f64 = 0.4;

fn numerics() -> Numerics {
    Numerics {
        target_h: 0.05,
        refinements: 1,
        ..Numerics::default()
    }
}

fn spec(trunc: f64) -> DomainSpec {
    DomainSpec::new(2.0, 1.0, EPS, Profile::constant(), trunc)
}

#[test]
fn gap_decays_at_the_transverse_rate() {
    let sector = Sector::new(Parity::Anti, Parity::Sym);
    let lengths = [1.5, 2.0];
    let certs: Vec<_> = lengths
        .iter()
        .map(|&l| bracket(&spec(l), sector, 1, &numerics()).unwrap())
        .collect();
    let gaps: Vec<f64> = certs.iter().map(|c| c.intervals[0].gap).collect();
    for c in &certs {
        let i = &c.intervals[0];
        assert!(i.lambda_n <= i.lambda_d && i.valid, "{i:?}");
    }
    assert!(gaps[1] > 1e-10, "gap {gaps:?} not resolved");
    assert!(gaps[0] / gaps[1] >= 10.0, "gaps {gaps:?}");

    // antisymmetric transverse mode of the strip: (pi/eps)^2
    let lambda = certs[1].intervals[0].lambda_d;
    let expected = 2.0 * ((PI / EPS).powi(2) - lambda).sqrt();
    let observed = (gaps[0] / gaps[1]).ln() / (lengths[1] - lengths[0]);
    assert!(
        (observed - expected).abs() <= 0.05 * expected,
        "rate {observed} vs {expected}"
    );
}

#[test]
fn intervals_shrink_and_nest_as_the_cut_moves_out() {
    let sector = Sector::new(Parity::Sym, Parity::Sym);
    let short = bracket(&spec(1.5), sector, 3, &numerics()).unwrap();
    let long = bracket(&spec(2.0), sector, 3, &numerics()).unwrap();
    for (s, l) in short.intervals.iter().zip(&long.intervals) {
        assert!(l.gap <= s.gap + 1e-12, "{s:?} {l:?}");
        // Dirichlet values decrease and Neumann values increase with L
        assert!(l.lambda_d <= s.lambda_d + 1e-10);
        assert!(l.lambda_n >= s.lambda_n - 1e-10);
    }
    let thr = threshold(&spec(2.0)).unwrap();
    assert!((thr - PI * PI / (4.0 * EPS * EPS)).abs() < 1e-12);
}
