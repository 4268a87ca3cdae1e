use std::f64::consts::PI;

use cosfire_scene::cosfire::{
    apply_filter, apply_filter_to_image, combine_subunits, configure_filter, rotation_tolerant_apply,
    BankContext, ConfigSpec, CosfireFilter, CosfireTuple, ShiftedSubunit, SubunitCache, TupleWeighting,
};
use cosfire_scene::gabor::{gabor_energy, EnergyStack, Envelope, GaborBank};
use cosfire_scene::imaging::Image;
use cosfire_scene::synth::{blank, Pattern, Stroke};
use cosfire_scene::Error;
use proptest::prelude::*;

fn l_corner_image(w: usize, h: usize, at: (f64, f64), rotation: f64) -> Image<f64> {
    let mut img = blank(w, h);
    Pattern::l_corner(24.0).render(&mut img, at, rotation, 1.0);
    img
}

fn window_max(img: &Image<f64>, (cx, cy): (usize, usize), r: usize) -> f64 {
    let mut best = 0.0f64;
    for y in cy - r..=cy + r {
        for x in cx - r..=cx + r {
            best = best.max(img.get(x, y));
        }
    }
    best
}

fn near(a: (usize, usize), b: (usize, usize), tol: usize) -> bool {
    a.0.abs_diff(b.0) <= tol && a.1.abs_diff(b.1) <= tol
}

fn l_corner_filter() -> (Image<f64>, CosfireFilter<f64>, ConfigSpec<f64>) {
    let img = l_corner_image(80, 80, (34.0, 34.0), 0.0);
    let spec = ConfigSpec::default();
    let f = configure_filter(&img, (34, 34), &spec, "corner", "A").unwrap();
    (img, f, spec)
}

#[test]
fn vertical_bar_selects_the_oracle_argmax_orientation() {
    let mut img = blank(64, 64);
    Pattern {
        name: "bar".into(),
        strokes: vec![Stroke::Segment { from: (0.0, -25.0), to: (0.0, 25.0), half_width: 1.0 }],
        keypoints: vec![(0.0, 0.0)],
    }
    .render(&mut img, (32.0, 32.0), 0.0, 1.0);
    let mut spec = ConfigSpec::default();
    spec.radii = vec![0.0];
    spec.context = BankContext {
        gabor: GaborBank { lambdas: vec![4.0, 8.0], thetas: vec![0.0, PI / 2.0], gamma: 0.5, sigma_over_lambda: 0.56, t1: 0.1 },
        inhibition: None,
    };
    let f = configure_filter(&img, (32, 32), &spec, "bar", "A").unwrap();

    let env = Envelope { gamma: 0.5, sigma_over_lambda: 0.56 };
    let mut best = (0.0, f64::NAN);
    for l in [4.0, 8.0] {
        for t in [0.0, PI / 2.0] {
            let e = gabor_energy(&img, l, t, env).unwrap().get(32, 32);
            if e > best.0 {
                best = (e, t);
            }
        }
    }
    assert!(!f.tuples.is_empty());
    for t in &f.tuples {
        assert_eq!(t.theta, best.1);
        assert_eq!(t.rho, 0.0);
    }
}

#[test]
fn l_corner_keeps_one_position_per_arm_at_radius_ten() {
    let img = l_corner_image(72, 72, (30.0, 30.0), 0.0);
    let mut spec = ConfigSpec::default();
    spec.radii = vec![0.0, 10.0];
    let f = configure_filter(&img, (30, 30), &spec, "l", "A").unwrap();

    let mut phis: Vec<f64> = f.tuples.iter().filter(|t| t.rho == 10.0).map(|t| t.phi).collect();
    phis.dedup();
    assert_eq!(phis.len(), 2, "{phis:?}");
    let stack = spec.context.responses(&img).unwrap();
    for (phi, arm) in [(0.0, "horizontal"), (PI / 2.0, "vertical")] {
        let found = phis.iter().copied().find(|p| (p - phi).abs() < 0.1);
        let found = found.unwrap_or_else(|| panic!("no position on the {arm} arm: {phis:?}"));

        // Strongest channel read straight off the stack at that point.
        let (x, y) = (30.0 + 10.0 * found.cos(), 30.0 + 10.0 * found.sin());
        let values: Vec<f64> = stack.maps().iter().map(|m| m.sample_bilinear(x, y)).collect();
        let argmax = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
        let oracle_theta = stack.channel_params(argmax).1;
        let tagged: Vec<f64> = f.tuples.iter().filter(|t| t.rho == 10.0 && t.phi == found).map(|t| t.theta).collect();
        assert!(tagged.contains(&oracle_theta));
        // The arm's orientation, under the bank's convention that θ = 0 responds to vertical lines.
        let expected = if arm == "horizontal" { PI / 2.0 } else { 0.0 };
        assert!(tagged.iter().all(|&t| t == expected), "{arm}: {tagged:?}");
    }
}

#[test]
fn full_t2_keeps_only_argmax_channels() {
    let img = l_corner_image(72, 72, (30.0, 30.0), 0.0);
    let mut spec = ConfigSpec::default();
    spec.radii = vec![0.0, 10.0];
    spec.t2 = 1.0;
    let stack = spec.context.responses(&img).unwrap();
    let f = configure_filter(&img, (30, 30), &spec, "l", "A").unwrap();
    let mut positions: Vec<(f64, f64)> = f.tuples.iter().map(|t| (t.rho, t.phi)).collect();
    positions.dedup();
    for (rho, phi) in positions {
        let (x, y) = (30.0 + rho * phi.cos(), 30.0 + rho * phi.sin());
        let values: Vec<f64> = stack.maps().iter().map(|m| m.sample_bilinear(x, y)).collect();
        let top = values.iter().copied().fold(0.0, f64::max);
        let want: Vec<(f64, f64)> = (0..values.len()).filter(|&i| values[i] == top).map(|i| stack.channel_params(i)).collect();
        let got: Vec<(f64, f64)> = f.tuples.iter().filter(|t| t.rho == rho && t.phi == phi).map(|t| (t.lambda, t.theta)).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn evidence_is_shifted_onto_the_keypoint() {
    let mut map = Image::<f64>::zeros(40, 40);
    map.set(25, 20, 1.0);
    let stack = EnergyStack::from_maps(vec![4.0], vec![0.0], vec![map]).unwrap();
    let f = CosfireFilter {
        name: "shift".into(),
        scene: "A".into(),
        tuples: vec![CosfireTuple { lambda: 4.0, theta: 0.0, rho: 10.0, phi: 0.0 }],
        sigma0: 0.5,
        alpha_blur: 0.0,
        t2: 0.75,
        t3: 0.0,
        weighting: TupleWeighting::Uniform,
        prototype_response: 1.0,
    };
    let r = apply_filter(&SubunitCache::new(&stack), &f).unwrap();
    assert_eq!(r.argmax(), (15, 20, 1.0));
}

#[test]
fn filter_finds_its_own_keypoint() {
    let (img, f, spec) = l_corner_filter();
    let r = apply_filter_to_image(&img, &f, &spec.context).unwrap();
    let (x, y, v) = r.argmax();
    assert!(near((x, y), (34, 34), 2), "argmax at ({x},{y})");
    assert_eq!(v, f.prototype_response);
    let cut = f.t3 * v;
    assert!(r.data().iter().all(|&p| p == 0.0 || p >= cut));
}

#[test]
fn translated_pattern_is_found_at_the_new_place() {
    let (_, f, spec) = l_corner_filter();
    for (cx, cy) in [(70usize, 55usize), (40, 90), (95, 41)] {
        let img = l_corner_image(128, 128, (cx as f64, cy as f64), 0.0);
        let r = apply_filter_to_image(&img, &f, &spec.context).unwrap();
        let (x, y, v) = r.argmax();
        assert!(near((x, y), (cx, cy), 2), "pasted at ({cx},{cy}), argmax ({x},{y})");
        assert!(v >= 0.9 * f.prototype_response, "{v} vs {}", f.prototype_response);
    }
}

#[test]
fn rotation_tolerance_recovers_rotated_corner() {
    let (_, f, spec) = l_corner_filter();
    let img = l_corner_image(96, 96, (48.0, 48.0), PI / 8.0);
    let stack = spec.context.responses(&img).unwrap();
    let cache = SubunitCache::new(&stack);
    let tolerant = rotation_tolerant_apply(&cache, &f, &[-PI / 8.0, 0.0, PI / 8.0]).unwrap();
    let plain = apply_filter(&cache, &f).unwrap();
    let t = window_max(&tolerant, (48, 48), 2);
    let p = window_max(&plain, (48, 48), 2);
    assert!(t >= 0.8 * f.prototype_response, "tolerant {t} vs prototype {}", f.prototype_response);
    assert!(p < t, "plain {p} vs tolerant {t}");
}

#[test]
fn tolerant_apply_is_pointwise_max_of_single_rotations() {
    let (_, f, spec) = l_corner_filter();
    let img = l_corner_image(96, 96, (45.0, 50.0), -PI / 8.0);
    let stack = spec.context.responses(&img).unwrap();
    let cache = SubunitCache::new(&stack);
    let psis = [-PI / 4.0, -PI / 8.0, 0.0, PI / 8.0];
    let combined = rotation_tolerant_apply(&cache, &f, &psis).unwrap();
    let singles: Vec<Image<f64>> = psis.iter().map(|&p| rotation_tolerant_apply(&cache, &f, &[p]).unwrap()).collect();
    let plain = apply_filter(&cache, &f).unwrap();
    assert_eq!(rotation_tolerant_apply(&cache, &f, &[0.0]).unwrap(), plain);
    for i in 0..combined.data().len() {
        let m = singles.iter().map(|s| s.data()[i]).fold(0.0, f64::max);
        assert_eq!(combined.data()[i], m);
        assert!(combined.data()[i] >= plain.data()[i]);
    }
    assert!(rotation_tolerant_apply(&cache, &f, &[]).is_err());
}

#[test]
fn uniform_image_gives_no_response() {
    let (_, f, spec) = l_corner_filter();
    let r = apply_filter_to_image(&Image::filled(80, 80, 0.55), &f, &spec.context).unwrap();
    assert!(r.data().iter().all(|&v| v == 0.0));
}

#[test]
fn configuration_errors() {
    let img = l_corner_image(80, 80, (34.0, 34.0), 0.0);
    let spec = ConfigSpec::default();
    assert!(matches!(
        configure_filter(&img, (5, 40), &spec, "edge", "A"),
        Err(Error::InvalidKeypoint { .. })
    ));
    assert!(matches!(
        configure_filter(&blank(80, 80), (40, 40), &spec, "flat", "A"),
        Err(Error::ConfigurationFailed { .. })
    ));
}

fn subunit_maps(values: &[Vec<f64>]) -> Vec<Image<f64>> {
    values.iter().map(|v| Image::new(6, 5, v.clone()).unwrap()).collect()
}

fn subunit_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<(isize, isize, f64)>)> {
    (1usize..5).prop_flat_map(|n| {
        (
            prop::collection::vec(
                prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 1e-3f64..2.0], 30),
                n,
            ),
            prop::collection::vec((-2isize..=2, -2isize..=2, 0.1f64..3.0), n),
        )
    })
}

fn combine(maps: &[Image<f64>], shifts: &[(isize, isize, f64)]) -> Image<f64> {
    let subunits: Vec<ShiftedSubunit<'_, f64>> = maps
        .iter()
        .zip(shifts)
        .map(|(map, &(dx, dy, weight))| ShiftedSubunit { map, dx, dy, weight })
        .collect();
    combine_subunits(6, 5, &subunits)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn geometric_mean_annihilates_and_is_bounded((values, shifts) in subunit_strategy()) {
        let maps = subunit_maps(&values);
        let r = combine(&maps, &shifts);
        for y in 0..5 {
            for x in 0..6 {
                let s: Vec<f64> = maps
                    .iter()
                    .zip(&shifts)
                    .map(|(m, &(dx, dy, _))| m.get_or_zero(x as isize + dx, y as isize + dy))
                    .collect();
                let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = s.iter().copied().fold(0.0, f64::max);
                let v = r.get(x, y);
                if lo == 0.0 {
                    prop_assert_eq!(v, 0.0);
                } else {
                    prop_assert!(lo <= v && v <= hi);
                    let w: f64 = shifts.iter().map(|t| t.2).sum();
                    let direct = s.iter().zip(&shifts).map(|(v, t)| v.powf(t.2 / w)).product::<f64>();
                    prop_assert!((v - direct).abs() <= 1e-12 * direct.max(1.0));
                }
            }
        }
    }

    #[test]
    fn geometric_mean_is_monotone(
        (values, shifts) in subunit_strategy(),
        pick in any::<prop::sample::Index>(),
        gain in 0.0f64..1.5,
    ) {
        let maps = subunit_maps(&values);
        let i = pick.index(maps.len());
        let mut raised = maps.clone();
        raised[i] = raised[i].map(|v| v + gain * v + 0.5 * gain);
        let (before, after) = (combine(&maps, &shifts), combine(&raised, &shifts));
        for (a, b) in before.data().iter().zip(after.data()) {
            prop_assert!(b >= a);
        }
    }
}
