mod common;

use common::{conservation, lifts, maximum_principle, random_polygon};
use engel_core::region::Face;
use engel_core::{
    classify, control_from_theta_at, pendulum_rhs_sq, theta_profile, time_of_theta, trace, ControlRegion, Covector,
    FamilySchedule, GroupElement, PolarCurve, SelectorPolicy, Tag, TraceOptions,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

fn element() -> impl Strategy<Value = GroupElement> {
    [-10.0..10.0f64, -10.0..10.0, -10.0..10.0, -10.0..10.0].prop_map(|[x, y, z, v]| GroupElement::new(x, y, z, v))
}

fn polygon_from_seed(seed: u64) -> ControlRegion {
    ControlRegion::polygon(random_polygon(&mut ChaCha8Rng::seed_from_u64(seed))).unwrap()
}

fn region() -> impl Strategy<Value = ControlRegion> {
    prop_oneof![
        (0.3..3.0f64).prop_map(|r| ControlRegion::disc(r).unwrap()),
        (0.0..FRAC_PI_2).prop_map(|a| ControlRegion::square(a).unwrap()),
        any::<u64>().prop_map(polygon_from_seed),
    ]
}

/// Signed component `φ` away from zero.
fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(m, neg)| if neg { -m } else { m })
}

fn normal(polar: &PolarCurve, theta: f64, phi3: f64, phi4: f64) -> Covector {
    let [p1, p2] = polar.point(theta);
    Covector::new(p1, p2, phi3, phi4)
}

/// `φ3²/2` at the separatrix level through `θ0` for the given `φ4`.
fn separatrix_gap(polar: &PolarCurve, theta0: f64, phi4: f64) -> f64 {
    let low = if phi4 > 0.0 { phi4 * polar.h2_min() } else { phi4 * polar.h2_max() };
    phi4 * polar.h2(theta0) - low
}

fn max_abs_diff(a: [f64; 4], b: [f64; 4]) -> f64 {
    (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn group_associativity(a in element(), b in element(), c in element()) {
        let left = (a * b) * c;
        let right = a * (b * c);
        let scale = 1.0 + left.to_array().iter().chain(right.to_array().iter()).fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(left.max_abs_diff(right) <= 1e-9 * scale, "{left:?} vs {right:?}");
    }

    #[test]
    fn inverse_and_identity_are_exact(g in element()) {
        let e = GroupElement::identity();
        prop_assert_eq!(g.inverse().inverse(), g);
        prop_assert_eq!(g * e, g);
        prop_assert_eq!(e * g, g);
        prop_assert_eq!((g * g.inverse()).to_array().map(f64::abs), [0.0; 4]);
    }

    #[test]
    fn bipolar_recovers_polygon(seed in any::<u64>()) {
        let region = polygon_from_seed(seed);
        let back = region.polar_body().unwrap().polar_body().unwrap();
        let (v, w) = (region.vertices().unwrap(), back.vertices().unwrap());
        prop_assert_eq!(v.len(), w.len());
        for p in v {
            let nearest = w.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= 1e-9, "vertex {p:?} off by {nearest:e}");
        }
    }

    #[test]
    fn gauge_support_duality(seed in any::<u64>(), a in 0.0..TAU, len in 0.1..5.0f64) {
        let region = polygon_from_seed(seed);
        let h = [len * a.cos(), len * a.sin()];
        let brute = region.vertices().unwrap().iter().map(|v| h[0] * v[0] + h[1] * v[1]).fold(f64::NEG_INFINITY, f64::max);
        let support = region.support(h);
        prop_assert!((support - brute).abs() <= 1e-9 * (1.0 + brute.abs()));
        let dual = region.polar_body().unwrap();
        prop_assert!((dual.gauge(h) - support).abs() <= 1e-9 * (1.0 + support.abs()));
    }

    #[test]
    fn controls_pair_with_polar_points(region in region(), theta in -10.0..10.0f64, w in 0.0..=1.0f64) {
        let polar = region.polar().unwrap();
        for selector in [SelectorPolicy::Midpoint, SelectorPolicy::Min, SelectorPolicy::Max, SelectorPolicy::Fraction(w)] {
            let u = control_from_theta_at(&polar, theta, &selector, 0.0);
            let h = polar.point(theta);
            prop_assert!((h[0] * u[0] + h[1] * u[1] - 1.0).abs() <= 1e-12, "pairing at {theta}");
            prop_assert!((region.gauge(u) - 1.0).abs() <= 1e-9, "gauge at {theta}");
        }
    }

    #[test]
    fn polar_radius_is_bounded_and_continuous(region in region(), theta in 0.0..TAU) {
        let polar = region.polar().unwrap();
        let p = polar.eval(theta);
        let (left, right) = (polar.eval(theta - 1e-9), polar.eval(theta + 1e-9));
        prop_assert!(p.r > 0.0 && p.r.is_finite() && p.dr_minus.is_finite() && p.dr_plus.is_finite());
        prop_assert!((left.r - p.r).abs() <= 1e-8 * (1.0 + p.r.abs().max(p.dr_minus.abs()).max(p.dr_plus.abs())));
        prop_assert!((right.r - p.r).abs() <= 1e-8 * (1.0 + p.r.abs().max(p.dr_minus.abs()).max(p.dr_plus.abs())));
    }

    #[test]
    fn no_pendulum_without_phi4(region in region(), theta in -PI..PI, phi3 in prop_oneof![Just(0.0), nonzero(0.01, 3.0)]) {
        let polar = region.polar().unwrap();
        let class = classify(normal(&polar, theta, phi3, 0.0), &polar, false).unwrap();
        let pendulum = matches!(
            class.tag,
            Tag::PendMonotone | Tag::PendOscillate | Tag::PendSeparatrixPhi3 | Tag::PendSeparatrixPhi3Zero | Tag::PendStraightLine
        );
        prop_assert!(!pendulum, "{:?}", class.tag);
        if phi3 == 0.0 {
            prop_assert_ne!(class.tag, Tag::Isoperimetrix);
        }
    }

    #[test]
    fn classification_is_scale_consistent(
        region in region(), theta in -PI..PI, phi3 in -2.0..2.0f64, phi4 in -2.0..2.0f64, k in 0.05..20.0f64,
    ) {
        let polar = region.polar().unwrap();
        let phi = normal(&polar, theta, phi3, phi4);
        let base = classify(phi, &polar, false).unwrap();
        let scaled = classify(phi.scaled(k), &polar, true).unwrap();
        prop_assert_eq!(base.tag, scaled.tag);
        prop_assert_eq!(base.subcase, scaled.subcase);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn turning_points_bound_the_oscillation(
        region in region(), theta in -PI..PI, phi4 in nonzero(0.2, 2.0), frac in 0.0..0.9f64, sign in any::<bool>(),
    ) {
        let polar = region.polar().unwrap();
        let gap = separatrix_gap(&polar, theta, phi4);
        prop_assume!(gap > 1e-3);
        let phi3 = (2.0 * gap * frac).sqrt() * if sign { 1.0 } else { -1.0 };
        let phi = normal(&polar, theta, phi3, phi4);
        let class = classify(phi, &polar, false).unwrap();
        prop_assert_eq!(class.tag, Tag::PendOscillate);
        let (a, b) = (class.theta1.unwrap(), class.theta2.unwrap());
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(pendulum_rhs_sq(&polar, class.phi, lo) <= 1e-10);
        prop_assert!(pendulum_rhs_sq(&polar, class.phi, hi) <= 1e-10);
        for k in 1..1000 {
            let t = lo + (hi - lo) * k as f64 / 1000.0;
            prop_assert!(pendulum_rhs_sq(&polar, class.phi, t) > 0.0, "rhs vanishes at {t} inside [{lo}, {hi}]");
        }
    }

    #[test]
    fn oscillation_is_symmetric_about_turning_times(
        region in region(), theta in -PI..PI, phi4 in nonzero(0.2, 2.0), frac in 0.0..0.9f64, sign in any::<bool>(),
    ) {
        let polar = region.polar().unwrap();
        let gap = separatrix_gap(&polar, theta, phi4);
        prop_assume!(gap > 1e-3);
        let phi3 = (2.0 * gap * frac).sqrt() * if sign { 1.0 } else { -1.0 };
        let class = classify(normal(&polar, theta, phi3, phi4), &polar, false).unwrap();
        let probe = theta_profile(&class, &polar, 1.0, &FamilySchedule::default()).unwrap();
        let period = probe.period.unwrap();
        // one turning instant in the future; for φ3 = 0 the start is itself a turning point
        let first = if phi3 == 0.0 {
            0.0
        } else {
            [class.theta1.unwrap(), class.theta2.unwrap()]
                .iter()
                .map(|&e| time_of_theta(&class, &polar, e).unwrap())
                .find(|&t| t > 0.0)
                .unwrap()
        };
        let centre = first + 0.5 * period;
        let profile = theta_profile(&class, &polar, 3.0 * period, &FamilySchedule::default()).unwrap();
        for k in 0..=200 {
            let s = 0.5 * period * k as f64 / 200.0;
            let (after, before) = (profile.theta_at(centre + s), profile.theta_at(centre - s));
            prop_assert!((after - before).abs() <= 1e-8, "θ({centre} ± {s}) = {after}, {before}");
        }
    }

    #[test]
    fn isoperimetrix_is_periodic(region in region(), theta in -PI..PI, phi3 in nonzero(0.3, 3.0)) {
        let polar = region.polar().unwrap();
        let phi = normal(&polar, theta, phi3, 0.0);
        let period = 2.0 * polar.area() / phi3.abs();
        let tr = trace(phi, &region, &TraceOptions::new(2.0 * period, 2001)).unwrap();
        prop_assert_eq!(tr.class.tag, Tag::Isoperimetrix);
        for k in 0..=1000 {
            let (a, b) = (&tr.samples[k], &tr.samples[k + 1000]);
            prop_assert!((a.g.x - b.g.x).abs() <= 1e-6 && (a.g.y - b.g.y).abs() <= 1e-6, "x, y at t = {}", a.t);
            let turn = (b.theta - a.theta) / TAU;
            prop_assert!((turn - turn.round()).abs() * TAU <= 1e-6, "θ at t = {}", a.t);
            prop_assert!(max_abs_diff(a.h.to_array(), b.h.to_array()) <= 1e-6, "h at t = {}", a.t);
        }
        let z = tr.samples[1000].g.z;
        prop_assert!((z - period / (2.0 * phi3)).abs() <= 1e-6, "z(L) = {z}");
    }
}

/// Covector of a chosen kind through `θ0`: 0 rotation, 1 oscillation,
/// 2 separatrix with φ3 ≠ 0, 3 φ3 = 0, 4 isoperimetrix.
fn covector_of_kind(polar: &PolarCurve, kind: u8, theta: f64, phi4: f64, frac: f64, sign: f64) -> Option<Covector> {
    let gap = separatrix_gap(polar, theta, phi4);
    let phi3 = match kind {
        0 => sign * (2.0 * gap + 0.2 + 2.0 * frac).sqrt(),
        1 if gap > 1e-3 => sign * (2.0 * gap * (0.1 + 0.8 * frac)).sqrt(),
        2 if gap > 1e-3 => sign * (2.0 * gap).sqrt(),
        3 => 0.0,
        4 => return Some(normal(polar, theta, sign * (0.3 + frac), 0.0)),
        _ => return None,
    };
    Some(normal(polar, theta, phi3, phi4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn traces_conserve_first_integrals(
        region in region(), kind in 0u8..5, theta in -PI..PI, phi4 in nonzero(0.2, 2.0), frac in 0.0..1.0f64,
        sign in prop_oneof![Just(1.0), Just(-1.0)], backwards in any::<bool>(),
    ) {
        let polar = region.polar().unwrap();
        let phi = covector_of_kind(&polar, kind, theta, phi4, frac, sign);
        prop_assume!(phi.is_some());
        let phi = phi.unwrap();
        let horizon = if backwards { -10.0 } else { 10.0 };
        let tr = trace(phi, &region, &TraceOptions::new(horizon, 10_000)).unwrap();
        let (drift, linear) = conservation(&tr);
        prop_assert!(drift <= 1e-6, "Casimir drift {drift:e} for {:?}", tr.class.tag);
        prop_assert!(linear <= 1e-6, "linear integral {linear:e} for {:?}", tr.class.tag);
        let (gauge, shortfall) = maximum_principle(&tr, &region);
        prop_assert!(gauge <= 1e-9, "gauge error {gauge:e}");
        prop_assert!(shortfall <= 1e-8, "maximum condition short by {shortfall:e}");
        for s in &tr.samples {
            // stored lifts agree with the state and h3 is affine in x
            prop_assert!(max_abs_diff(s.h.to_array(), lifts(tr.phi, s.g)) <= 1e-12 * (1.0 + s.g.to_array().iter().fold(0.0f64, |m, c| m.max(c.abs())).powi(2)));
            prop_assert!((s.h.h3 - tr.phi.phi3 - tr.phi.phi4 * s.g.x).abs() <= 1e-12 * (1.0 + s.g.x.abs()));
        }
    }

    #[test]
    fn traces_are_scale_invariant(
        region in region(), kind in 0u8..5, theta in -PI..PI, phi4 in nonzero(0.2, 2.0), frac in 0.0..1.0f64,
        sign in prop_oneof![Just(1.0), Just(-1.0)],
    ) {
        let polar = region.polar().unwrap();
        let phi = covector_of_kind(&polar, kind, theta, phi4, frac, sign);
        prop_assume!(phi.is_some());
        let phi = phi.unwrap();
        let opts = TraceOptions::new(5.0, 501);
        let base = trace(phi, &region, &opts).unwrap();
        for k in [0.5, 2.0, 10.0] {
            let scaled = trace(phi.scaled(k), &region, &opts.clone().normalized(true)).unwrap();
            for (a, b) in base.samples.iter().zip(&scaled.samples) {
                let scale = 1.0 + a.g.to_array().iter().fold(0.0f64, |m, c| m.max(c.abs()));
                prop_assert!(a.g.max_abs_diff(b.g) <= 1e-9 * scale, "k = {k}, t = {}: {:?} vs {:?}", a.t, a.g, b.g);
            }
        }
    }

    #[test]
    fn straight_lines_through_the_vertical_match_the_abnormal_formula(
        choice in 0usize..3, radius in 0.3..3.0f64, phi4 in nonzero(0.1, 3.0), horizon in nonzero(0.5, 5.0),
    ) {
        let region = match choice {
            0 => ControlRegion::disc(radius).unwrap(),
            1 => ControlRegion::square(0.0).unwrap(),
            _ => ControlRegion::square(std::f64::consts::FRAC_PI_4).unwrap(),
        };
        let polar = region.polar().unwrap();
        let phi = normal(&polar, FRAC_PI_2, 0.0, phi4);
        prop_assert!(phi.phi1.abs() < 1e-12);
        let tr = trace(phi, &region, &TraceOptions::new(horizon, 101)).unwrap();
        prop_assume!(matches!(tr.class.tag, Tag::ConstantTheta | Tag::PendStraightLine));
        let speed = 1.0 / region.gauge([0.0, 1.0]);
        for s in &tr.samples {
            prop_assert!(s.g.x.abs() <= 1e-12 && s.g.z.abs() <= 1e-12 && s.g.v.abs() <= 1e-12, "{:?}", s.g);
            prop_assert!((s.g.y - speed * s.t).abs() <= 1e-12 * (1.0 + s.t.abs()));
        }
    }
}

#[test]
fn faces_expose_extreme_heights() {
    for seed in 0..20 {
        let polar = polygon_from_seed(seed).polar().unwrap();
        let check = |f: Face, target: f64| {
            for w in [0.0, 0.5, 1.0] {
                let h2 = polar.h2(f.lo + w * (f.hi - f.lo));
                assert!((h2 - target).abs() < 1e-9, "seed {seed}: {h2} vs {target}");
            }
        };
        check(polar.top_face(), polar.h2_max());
        check(polar.bottom_face(), polar.h2_min());
    }
}
