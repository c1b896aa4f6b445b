use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::estimators::{estimate, Filter, FilterClass, Side};
use crate::signal::{Domain, Signal, C64};
use crate::testutil::{cgauss, cvec};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn random_modes(rng: &mut ChaCha8Rng, s: usize) -> SubspaceSpec {
    let omegas: Vec<f64> = (0..s)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    SubspaceSpec::from_frequencies(&omegas)
}

fn random_element(rng: &mut ChaCha8Rng, spec: &SubspaceSpec, domain: Domain) -> Signal {
    let coeffs: Vec<Vec<C64>> = spec
        .roots()
        .unwrap()
        .iter()
        .map(|r| (0..r.mult).map(|_| cgauss(rng)).collect())
        .collect();
    subspace_element(spec, &coeffs, domain).unwrap()
}

fn max_error(filter: &Filter, x: &Signal, domain: Domain) -> f64 {
    let est = estimate(filter, x, domain).unwrap();
    domain
        .indices()
        .map(|t| (est.at(t) - x.at(t)).norm())
        .fold(0.0, f64::max)
}

#[test]
fn basis_constant_and_polynomial() {
    let d = Domain::symmetric(4);
    let b = basis_from_spec(&SubspaceSpec::from_frequencies(&[0.0]), d).unwrap();
    assert_eq!(b.len(), 1);
    assert!(b[0].values().iter().all(|z| (z - c(1.0)).norm() < 1e-14));

    let spec = SubspaceSpec::Modes(vec![SpectralMode {
        omega: 0.0,
        mult: 3,
    }]);
    let b = basis_from_spec(&spec, d).unwrap();
    for t in d.indices() {
        let tf = t as f64;
        assert!((b[0].at(t) - c(1.0)).norm() < 1e-12);
        assert!((b[1].at(t) - c(tf)).norm() < 1e-12);
        assert!((b[2].at(t) - c(tf * tf)).norm() < 1e-12);
    }
}

#[test]
fn basis_satisfies_difference_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for s in 1..=5 {
        let spec = random_modes(&mut rng, s);
        let d = Domain::interval(-20, 20).unwrap();
        for b in basis_from_spec(&spec, d).unwrap() {
            let inner = Domain::interval(-20 + s as i64, 20).unwrap();
            assert!(check_difference_equation(&spec, &b, inner).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn basis_too_short_domain() {
    let spec = SubspaceSpec::from_frequencies(&[0.1, 0.2, 0.3]);
    assert!(basis_from_spec(&spec, Domain::one_sided(1)).is_err());
}

#[test]
fn difference_equation_examples() {
    let spec = SubspaceSpec::Poly(vec![c(1.0), c(-1.0)]);
    let x = Signal::from_fn(Domain::symmetric(5), |_| C64::new(2.0, -1.0));
    assert!(check_difference_equation(&spec, &x, Domain::symmetric(4)).unwrap() < 1e-15);

    let w = 0.7;
    let spec = SubspaceSpec::Poly(vec![c(1.0), -C64::from_polar(1.0, w)]);
    let x = Signal::from_fn(Domain::symmetric(30), |t| {
        C64::from_polar(1.0, w * t as f64)
    });
    assert!(check_difference_equation(&spec, &x, Domain::symmetric(29)).unwrap() <= 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Signal::new(-10, cvec(&mut rng, 21));
    assert!(check_difference_equation(&spec, &x, Domain::symmetric(9)).unwrap() > 0.0);
    assert!(matches!(
        check_difference_equation(&spec, &x, Domain::symmetric(10)),
        Err(Error::Coverage { .. })
    ));
}

#[test]
fn modes_poly_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in 1..=4 {
        let spec = random_modes(&mut rng, s);
        let p = spec.poly().unwrap();
        let back = SubspaceSpec::Poly(p.clone());
        let mut f1: Vec<f64> = spec
            .unit_frequencies()
            .unwrap()
            .iter()
            .map(|f| f.0)
            .collect();
        let mut f2: Vec<f64> = back
            .unit_frequencies()
            .unwrap()
            .iter()
            .map(|f| f.0)
            .collect();
        f1.sort_by(f64::total_cmp);
        f2.sort_by(f64::total_cmp);
        for (a, b) in f1.iter().zip(&f2) {
            let d = (a - b).rem_euclid(std::f64::consts::TAU);
            assert!(d.min(std::f64::consts::TAU - d) < 1e-8, "{f1:?} vs {f2:?}");
        }
        assert_eq!(back.poly().unwrap(), p);
    }
    // Double root at 1 from (1 − z)².
    let spec = SubspaceSpec::Poly(vec![c(1.0), c(-2.0), c(1.0)]);
    let roots = spec.roots().unwrap();
    assert_eq!(roots.len(), 1);
    assert_eq!(roots[0].mult, 2);
}

#[test]
fn spec_validation_and_json() {
    assert!(SubspaceSpec::Poly(vec![c(2.0), c(1.0)]).validate().is_err());
    assert!(SubspaceSpec::Poly(vec![c(1.0)]).validate().is_err());
    assert!(SubspaceSpec::Modes(vec![]).validate().is_err());
    assert!(SubspaceSpec::Modes(vec![SpectralMode {
        omega: 0.0,
        mult: 0
    }])
    .validate()
    .is_err());
    let spec = SubspaceSpec::Modes(vec![SpectralMode {
        omega: 0.5,
        mult: 2,
    }]);
    let text = spec.to_json().unwrap();
    assert_eq!(SubspaceSpec::from_json(&text).unwrap(), spec);
    assert!(matches!(
        SubspaceSpec::from_json(r#"{"modes":[{"omega":0.1,"mult":1,"x":2}]}"#),
        Err(Error::InvalidSpec(_))
    ));
    assert!(SubspaceSpec::from_json(r#"{"poly":[[1.0,0.0],[-1.0,0.0]]}"#).is_ok());
}

#[test]
fn interpolating_constant_closed_form() {
    for m in [0usize, 1, 4, 9] {
        let f = interpolating_filter(&SubspaceSpec::from_frequencies(&[0.0]), m).unwrap();
        // Projector onto the all-ones vector has entries 1/(m+1); any row
        // reproduces constants with m+1 equal taps.
        let nz: Vec<C64> = f
            .coeffs()
            .iter()
            .copied()
            .filter(|z| z.norm() > 1e-12)
            .collect();
        assert_eq!(nz.len(), m + 1);
        for z in nz {
            assert!((z - c(1.0 / (m + 1) as f64)).norm() < 1e-12);
        }
        assert!((f.l2_norm() - 1.0 / ((m + 1) as f64).sqrt()).abs() < 1e-12);
        assert!(f.l2_norm() <= (2.0 / (2 * m + 1) as f64).sqrt() + 1e-12);
    }
}

#[test]
fn interpolating_single_frequency() {
    let w = 1.3;
    let m = 10;
    let f = interpolating_filter(&SubspaceSpec::from_frequencies(&[w]), m).unwrap();
    // Rank-one projector: Π_{j,u} = e^{iω(j−u)}/(m+1), so φ_τ = e^{iωτ}/(m+1).
    for (k, tau) in f.support().indices().enumerate() {
        let z = f.coeffs()[k];
        if z.norm() > 1e-12 {
            let want = C64::from_polar(1.0 / (m + 1) as f64, w * tau as f64);
            assert!((z - want).norm() < 1e-12);
        }
    }
    let x = Signal::from_fn(Domain::symmetric(40), |t| {
        C64::from_polar(1.0, w * t as f64)
    });
    assert!(max_error(&f, &x, Domain::symmetric(20)) <= 1e-10);
}

#[test]
fn interpolating_random_specs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = 16;
    for s in 1..=4 {
        for _ in 0..5 {
            let spec = random_modes(&mut rng, s);
            let f = interpolating_filter(&spec, m).unwrap();
            let x = random_element(&mut rng, &spec, Domain::symmetric(40));
            let scale = x.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(max_error(&f, &x, Domain::symmetric(20)) <= 1e-8 * scale.max(1.0));
            let bound = (2.0 * s as f64 / (2 * m + 1) as f64).sqrt();
            assert!(
                f.l2_norm() <= bound + 1e-12,
                "s={s}: {} > {bound}",
                f.l2_norm()
            );
        }
    }
    // Polynomial subspaces as well.
    let spec = SubspaceSpec::Modes(vec![SpectralMode {
        omega: 0.0,
        mult: 3,
    }]);
    let f = interpolating_filter(&spec, m).unwrap();
    let x = Signal::from_fn(Domain::symmetric(40), |t| {
        let t = t as f64 / 10.0;
        c(1.0 - t + 0.5 * t * t)
    });
    assert!(max_error(&f, &x, Domain::symmetric(20)) <= 1e-8);
}

#[test]
fn interpolating_too_large_subspace() {
    let spec = SubspaceSpec::from_frequencies(&[0.1, 0.2, 0.3]);
    assert!(interpolating_filter(&spec, 1).is_err());
    assert!(interpolating_filter(&spec, 2).is_ok());
}

#[test]
fn separated_single_frequency() {
    let w = 2.1;
    let m = 12;
    let out = predictive_filter_separated(&[w], m).unwrap();
    assert_eq!(out.filter.class(), FilterClass::Shifted { m, h: 0 });
    for tau in 0..=m {
        let want = C64::from_polar(1.0 / (m + 1) as f64, w * tau as f64);
        assert!((out.filter.coeffs()[tau] - want).norm() < 1e-12);
    }
    assert!((out.filter.l2_norm() - 1.0 / ((m + 1) as f64).sqrt()).abs() < 1e-12);
}

#[test]
fn separated_two_frequencies() {
    let m = 31;
    let w0 = 0.4;
    let out = predictive_filter_separated(&[w0, w0 + std::f64::consts::PI], m).unwrap();
    assert!(out.nu >= 2.0);
    let x = Signal::from_fn(Domain::interval(-40, 40).unwrap(), |t| {
        C64::from_polar(1.0, w0 * t as f64)
            + C64::new(0.5, -1.0) * C64::from_polar(1.0, (w0 + std::f64::consts::PI) * t as f64)
    });
    assert!(max_error(&out.filter, &x, Domain::interval(-8, 40).unwrap()) <= 1e-9);
    assert!(out.filter.l2_norm() <= (3.0 * 2.0 / (m + 1) as f64).sqrt());
    assert!(out.filter.l2_norm() <= out.norm_bound.unwrap() + 1e-12);
}

#[test]
fn separated_near_critical_and_warnings() {
    let m = 40;
    let delta = 2.0 * std::f64::consts::PI * 1.05 / (m + 1) as f64;
    let omegas = [0.3, 0.3 + delta, 0.3 + 2.0 * delta];
    let out = predictive_filter_separated(&omegas, m).unwrap();
    let q = (out.nu + 1.0) / (out.nu - 1.0);
    assert!((out.q_factor.unwrap() - q).abs() < 1e-12);
    assert!(out.filter.l2_norm() <= (q * 3.0 / (m + 1) as f64).sqrt());

    let close = predictive_filter_separated(&[0.3, 0.31], m).unwrap();
    assert!(close.warning.is_some() && close.norm_bound.is_none());
    assert!(matches!(
        predictive_filter_separated(&[0.3, 0.3], m),
        Err(Error::InvalidSpec(_))
    ));
    assert!(predictive_filter_separated(&[0.3, 0.3 + std::f64::consts::TAU], m).is_err());
}

#[test]
fn unit_roots_threshold_and_errors() {
    assert!((unit_roots_threshold(1) - (8.0 * 2f64.ln() + 1.0)).abs() < 1e-12);
    let spec = SubspaceSpec::from_frequencies(&[0.0, 1.0]);
    let err = predictive_filter_unit_roots(&spec, 20).unwrap_err();
    assert!(matches!(err, Error::BelowThreshold(_)));
    assert!(err.to_string().contains("threshold"));
    let damped = SubspaceSpec::Poly(vec![c(1.0), c(-0.5)]);
    assert!(predictive_filter_unit_roots(&damped, 64).is_err());
}

fn check_unit_roots(spec: &SubspaceSpec, m: usize, x: &Signal, tol: f64) -> UnitRootsFilter {
    let out = predictive_filter_unit_roots(spec, m).unwrap();
    assert_eq!(out.filter.coeffs()[0], C64::new(0.0, 0.0));
    let d = Domain::interval(x.start() + m as i64, x.end()).unwrap();
    let err = max_error(&out.filter, x, d);
    assert!(err <= tol, "reproduction error {err}");
    let n2 = out.filter.l2_norm().powi(2);
    assert!(
        n2 <= out.params.norm_sq_bound,
        "{n2} > {}",
        out.params.norm_sq_bound
    );
    assert!(out.params.epsilon <= UNIT_ROOTS_EPS_MAX);
    out
}

#[test]
fn unit_roots_constant() {
    let spec = SubspaceSpec::Poly(vec![c(1.0), c(-1.0)]);
    let x = Signal::from_fn(Domain::interval(0, 200).unwrap(), |_| C64::new(0.7, 0.2));
    check_unit_roots(&spec, 64, &x, 1e-8);
}

#[test]
fn unit_roots_two_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = SubspaceSpec::from_frequencies(&[0.9, 2.5]);
    let x = random_element(&mut rng, &spec, Domain::interval(-300, 300).unwrap());
    check_unit_roots(&spec, 256, &x, 1e-6);
}

#[test]
fn unit_roots_double_root() {
    let spec = SubspaceSpec::Modes(vec![SpectralMode {
        omega: 0.0,
        mult: 2,
    }]);
    let x = Signal::from_fn(Domain::interval(0, 600).unwrap(), |t| {
        c(0.3 + 0.01 * t as f64)
    });
    check_unit_roots(&spec, 256, &x, 1e-6);
}

#[test]
fn unit_roots_annihilation_polynomial() {
    // 1 − φ(z) must vanish at every root of p.
    let spec = SubspaceSpec::from_frequencies(&[0.2, 1.7, 4.0]);
    let m = 260;
    let out = predictive_filter_unit_roots(&spec, m).unwrap();
    for theta in spec.poly_roots().unwrap() {
        let val: C64 = c(1.0)
            - out
                .filter
                .coeffs()
                .iter()
                .enumerate()
                .map(|(k, q)| q * theta.powu(k as u32))
                .sum::<C64>();
        assert!(val.norm() < 1e-9, "{val}");
    }
}

#[test]
fn square_oracle_examples() {
    let d = square_oracle(&Filter::identity(3)).unwrap();
    assert_eq!(d, Filter::identity(6));

    for m in [2usize, 5, 12] {
        let len = (2 * m + 1) as f64;
        let avg = Filter::new(FilterClass::Bilateral { m }, vec![c(1.0 / len); 2 * m + 1]).unwrap();
        let sq = square_oracle(&avg).unwrap();
        for (k, tau) in sq.support().indices().enumerate() {
            let want = (len - tau.abs() as f64) / (len * len);
            assert!((sq.coeffs()[k] - c(want)).norm() < 1e-14);
        }
        let rho: f64 = 1.0;
        assert!(sq.fourier_l1() <= 2.0 * rho * rho / ((4 * m + 1) as f64).sqrt() + 1e-12);
    }
}

#[test]
fn square_oracle_fourier_identity_and_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for m in [1usize, 3, 8, 20] {
        let raw = cvec(&mut rng, 2 * m + 1);
        let phi = Filter::new(FilterClass::Bilateral { m }, raw).unwrap();
        let sq = square_oracle(&phi).unwrap();
        // The squared filter's spectrum is √(4m+1) times the square of φ's
        // spectrum on the same grid, so its ℓ1 norm is √(4m+1)·‖φ‖².
        let lhs = sq.fourier_l1();
        let rhs = ((4 * m + 1) as f64).sqrt() * phi.l2_norm().powi(2);
        assert!((lhs - rhs).abs() <= 1e-9 * rhs, "m={m}: {lhs} vs {rhs}");

        let rho: f64 = rng.random_range(0.5..3.0);
        let target = rho / ((2 * m + 1) as f64).sqrt();
        let scaled = Filter::new(
            FilterClass::Bilateral { m },
            phi.coeffs()
                .iter()
                .map(|z| z * (target / phi.l2_norm()))
                .collect(),
        )
        .unwrap();
        let sq = square_oracle(&scaled).unwrap();
        assert!(sq.fourier_l1() <= 2.0 * rho * rho / ((4 * m + 1) as f64).sqrt() + 1e-12);
    }
    let shifted = Filter::new(FilterClass::Shifted { m: 2, h: 0 }, vec![c(1.0); 3]).unwrap();
    assert!(square_oracle(&shifted).is_err());
}

#[test]
fn certificate_exact_and_averaging() {
    let spec = SubspaceSpec::from_frequencies(&[0.8]);
    let f = interpolating_filter(&spec, 6).unwrap();
    let x = Signal::from_fn(Domain::symmetric(30), |t| {
        C64::from_polar(2.0, 0.8 * t as f64)
    });
    let cert = simplicity_certificate(&f, &x, 0.5, 8).unwrap();
    assert!(cert.theta < 1e-10);

    let m = 4;
    let len = (2 * m + 1) as f64;
    let avg = Filter::new(FilterClass::Bilateral { m }, vec![c(1.0 / len); 2 * m + 1]).unwrap();
    let ones = Signal::from_fn(Domain::symmetric(30), |_| c(3.0));
    let cert = simplicity_certificate(&avg, &ones, 1.0, 5).unwrap();
    assert!((cert.rho - 1.0).abs() < 1e-12);
    assert!(cert.theta < 1e-12);
}

#[test]
fn certificate_ramp_bias() {
    // A symmetric mean reproduces a ramp; a one-sided mean of {t−m..t} lags
    // it by m/2.
    let m = 4;
    let ramp = Signal::from_fn(Domain::interval(-60, 60).unwrap(), |t| c(0.5 * t as f64));
    let avg = Filter::new(FilterClass::Bilateral { m }, vec![c(1.0 / 9.0); 9]).unwrap();
    assert!(simplicity_certificate(&avg, &ramp, 1.0, 3).unwrap().theta < 1e-12);

    let causal = Filter::new(FilterClass::Shifted { m, h: 0 }, vec![c(0.2); 5]).unwrap();
    let sigma = 0.25;
    let cert = simplicity_certificate(&causal, &ramp, sigma, 3).unwrap();
    let bias = 0.5 * m as f64 / 2.0;
    let rho = 0.2 * 5f64.sqrt() * 5f64.sqrt();
    assert!((cert.rho - rho).abs() < 1e-12);
    let want = bias * 5f64.sqrt() / (sigma * rho);
    assert!((cert.theta - want).abs() < 1e-9, "{} vs {want}", cert.theta);
    assert_eq!(cert.h, Some(0));

    // Reads x on [−2m−n−2h, h] only.
    let short = ramp.restrict(Domain::interval(-2 * m as i64 - 3, 0).unwrap());
    assert!(simplicity_certificate(&causal, &short, sigma, 3).is_ok());
    let shorter = ramp.restrict(Domain::interval(-2 * m as i64 - 2, 0).unwrap());
    assert!(matches!(
        simplicity_certificate(&causal, &shorter, sigma, 3),
        Err(Error::Coverage { .. })
    ));
    assert!(simplicity_certificate(&causal, &ramp, 0.0, 3).is_err());
}

#[test]
fn certificate_zero_filter_with_bias() {
    let zero = Filter::new(FilterClass::Bilateral { m: 1 }, vec![c(0.0); 3]).unwrap();
    let x = Signal::from_fn(Domain::symmetric(10), |_| c(1.0));
    assert!(simplicity_certificate(&zero, &x, 1.0, 2)
        .unwrap()
        .theta
        .is_infinite());
}

#[test]
fn residual_in_subspace_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = random_modes(&mut rng, 3);
    let x = random_element(&mut rng, &spec, Domain::symmetric(40));
    let r = shift_invariance_residual(&x, &spec, 6, 8, 1.0, Geometry::Bilateral).unwrap();
    assert!(r < 1e-9);
    let r = shift_invariance_residual(&x, &spec, 6, 8, 1.0, Geometry::Predictive { h: 2 }).unwrap();
    assert!(r < 1e-9);
}

#[test]
fn residual_single_spike() {
    // Constant subspace: a spike of height η inside a window of length L
    // leaves residual η·√(1 − 1/L) after projection onto the constants.
    let spec = SubspaceSpec::from_frequencies(&[0.0]);
    let (m, n) = (3usize, 5usize);
    let eta = 2.5;
    let sigma = 0.5;
    let mut x = Signal::from_fn(Domain::symmetric(20), |_| c(1.0));
    x = x.add(&Signal::new(0, vec![c(eta)]));
    let r = shift_invariance_residual(&x, &spec, m, n, sigma, Geometry::Bilateral).unwrap();
    let l = (2 * n + 1) as f64;
    let want = eta * (1.0 - 1.0 / l).sqrt() / sigma;
    assert!((r - want).abs() < 1e-10, "{r} vs {want}");

    let r2 = {
        let y = Signal::from_fn(Domain::symmetric(20), |_| c(1.0))
            .add(&Signal::new(0, vec![c(2.0 * eta)]));
        shift_invariance_residual(&y, &spec, m, n, sigma, Geometry::Bilateral).unwrap()
    };
    assert!((r2 - 2.0 * r).abs() < 1e-10);

    let short = x.restrict(Domain::symmetric(7));
    assert!(matches!(
        shift_invariance_residual(&short, &spec, m, n, sigma, Geometry::Bilateral),
        Err(Error::Coverage { .. })
    ));
}

#[test]
fn theta_inflation_formula() {
    let (m, n) = (5, 9);
    assert_eq!(theta_inflation(0.7, 0.0, m, n, Side::Bilateral), 0.7);
    let k = crate::estimators::kappa(m, n, Side::Bilateral);
    assert!((theta_inflation(0.0, k / 2.0, m, n, Side::Bilateral) - 1.0).abs() < 1e-14);
    let ku = crate::estimators::kappa(m, n, Side::Unilateral);
    let v = theta_inflation(0.0, ku / 2.0, m, n, Side::Unilateral);
    assert!((v - std::f64::consts::SQRT_2).abs() < 1e-14);
}

#[test]
fn predictive_oracle_matches_separated_and_extrapolates() {
    let omegas = [0.4, 2.0, 4.4];
    let m = 20;
    let sep = predictive_filter_separated(&omegas, m).unwrap();
    let spec = SubspaceSpec::from_frequencies(&omegas);
    let po = predictive_oracle(&spec, m, 0).unwrap();
    for (a, b) in po.coeffs().iter().zip(sep.filter.coeffs()) {
        assert!((a - b).norm() < 1e-9);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for h in [1usize, 3, 7] {
        let f = predictive_oracle(&spec, m, h).unwrap();
        let x = random_element(&mut rng, &spec, Domain::interval(-60, 30).unwrap());
        assert!(max_error(&f, &x, Domain::interval(-20, 30).unwrap()) < 1e-8);
    }
    let poly = SubspaceSpec::Modes(vec![SpectralMode {
        omega: 0.0,
        mult: 2,
    }]);
    let f = predictive_oracle(&poly, 6, 2).unwrap();
    let ramp = Signal::from_fn(Domain::interval(-30, 10).unwrap(), |t| {
        c(1.0 + 0.5 * t as f64)
    });
    assert!(max_error(&f, &ramp, Domain::interval(-20, 10).unwrap()) < 1e-9);
    assert!(predictive_oracle(&spec, 1, 0).is_err());
}
