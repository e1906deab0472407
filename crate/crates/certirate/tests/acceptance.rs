//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use certirate::geometry::{project, sunnyhaus_threshold, ConvexSet, HStarOptions};
use certirate::mappings::{
    make_approx_family, make_dweak, make_strong, make_total_async,
};
use certirate::moduli::{
    divergence_from_partial_sums, ConvergenceRate, GaugeFunction, SeqFn, StepSequence,
};
use certirate::quadrature::upper_integral;
use certirate::rates::{
    dweakly_rate, mann_rate, perturbed_concrete_rate, perturbed_rate, simple_rate,
    PerturbedParams,
};
use certirate::recineq::{
    adversarial_sequence, rate_first, rate_second, traditional_bound, BetaSequence,
    RecIneqInstance, TraditionalBoundOptions,
};
use certirate::harness::verify_rate;
use certirate::scalar::Index;
use certirate::schemes::{SchemeInstance, SchemeVariant};
use certirate::spaces::{
    omega_from_tau, pairing, tau_for_lp, DualityContinuityModulus, LpSpace, Vector,
};

fn pass(number: u32, name: &str) {
    println!("acceptance {number:02} ({name}): PASS");
}

fn plane() -> LpSpace<f64> {
    LpSpace::new(2, 2.0).unwrap()
}

#[test]
fn acceptance_01_picard_banach_closed_form() {
    let space = plane();
    let q = Vector::zeros(2);
    let family = make_strong(0.5, q.clone()).unwrap();
    let start = Vector::new(vec![1.0, 0.0]);
    let cert = simple_rate(&family.psi, 1.0).unwrap();
    assert_eq!(cert.eval(0.1).unwrap(), 13);

    let scheme = SchemeInstance::new(
        SchemeVariant::Picard,
        family.clone(),
        StepSequence::ones(),
        start,
        q.clone(),
    )
    .unwrap();
    let traj = scheme.run(&space, 64).unwrap();
    let report = verify_rate(&space, &traj, &q, &cert, &[0.1], 64).unwrap();
    let row = &report.rows[0];
    assert!(row.holds);
    assert_eq!(row.certified_index, Some(13));
    assert_eq!(row.first_actual_index, Some(4));
    assert!(row.tightness.unwrap() <= 1.0);
    assert!(report.all_hold());

    // traditional bound at n = 5 equals 2 Psi^{-1}(Psi(1) - (5-1)/2) = 2/e
    let inst = RecIneqInstance::new(
        family.psi.clone(),
        StepSequence::ones(),
        None,
        ConvergenceRate::zero(),
        1.0,
    )
    .unwrap();
    let opts = TraditionalBoundOptions {
        anchor: 1.0,
        n_tilde: Some(Arc::new(|_| 0.0)),
    };
    let bound = traditional_bound(&inst, 5, &opts).unwrap();
    let exact = 2.0 * (-1.0f64).exp();
    assert!(
        (bound - exact).abs() <= exact * 1e-6,
        "bound {bound} vs exact {exact}"
    );
    let residual5 = space.distance(&traj[5], &q);
    assert!((residual5 - 2.0f64.powi(-5)).abs() < 1e-15);
    assert!(bound >= residual5);

    pass(1, "picard/banach closed form");
}

#[test]
fn acceptance_02_recursive_inequality_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_2026);
    let mut checked_pairs = 0usize;
    let mut first_checked = 0usize;
    for trial in 0..200 {
        let psi = match rng.gen_range(0..3) {
            0 => GaugeFunction::<f64>::linear(1.0),
            1 => GaugeFunction::linear(0.5),
            _ => GaugeFunction::rational_quad(),
        };
        let steps_pick = rng.gen_range(0..3);
        let steps = match steps_pick {
            0 => StepSequence::ones(),
            1 => StepSequence::constant(0.5).unwrap(),
            _ => StepSequence::harmonic(10_000_000),
        };
        let n_max: Index = if steps_pick == 2 { 200_000 } else { 20_000 };
        let (threshold, schedule): (ConvergenceRate<f64>, SeqFn<f64>) = match rng.gen_range(0..3) {
            0 => (ConvergenceRate::zero(), Arc::new(|_| 0.0)),
            1 => (
                ConvergenceRate::ceil_inv(1.0),
                Arc::new(|n| 1.0 / (n as f64 + 1.0)),
            ),
            _ => (
                ConvergenceRate::ceil_inv_sqrt(),
                Arc::new(|n| 1.0 / ((n as f64 + 1.0) * (n as f64 + 1.0))),
            ),
        };
        let with_beta = rng.gen_bool(0.5);
        let beta = if with_beta {
            Some(BetaSequence::new(Arc::new(|n: u64| 2.0f64.powi(-(n as i32) - 2)), 1.65).unwrap())
        } else {
            None
        };
        let mu0: f64 = rng.gen_range(0.0..1.0);

        // provisional instance to materialise the trajectory and extract a
        // legitimate uniform bound c
        let proto = RecIneqInstance::new(
            psi.clone(),
            steps.clone(),
            beta.clone(),
            threshold.clone(),
            1.0,
        )
        .unwrap();
        let traj = adversarial_sequence(&proto, &schedule, mu0, n_max);
        let c_bound = traj.iter().cloned().fold(0.0f64, f64::max).max(1e-6);
        let inst = RecIneqInstance::new(psi, steps, beta.clone(), threshold, c_bound).unwrap();

        let second = rate_second(&inst).unwrap();
        let first = if beta.is_none() {
            Some(rate_first(&inst).unwrap())
        } else {
            None
        };

        for k in 0..=5 {
            let eps = c_bound * 2.0f64.powi(-k);
            for (which, rate) in [(0, first.as_ref()), (1, Some(&second))] {
                let Some(rate) = rate else { continue };
                let phi = match rate.eval(eps) {
                    Ok(idx) => idx,
                    Err(_) => continue, // divergence scan capped: beyond test horizon
                };
                if phi > n_max {
                    continue;
                }
                for n in phi..=n_max {
                    assert!(
                        traj[n as usize] <= eps + 1e-12,
                        "trial {trial} rate {which}: mu_{n} = {} > eps = {eps}",
                        traj[n as usize]
                    );
                }
                checked_pairs += 1;
                if which == 0 {
                    first_checked += 1;
                }
            }
        }
    }
    assert!(
        checked_pairs >= 400,
        "too few certificate windows checked: {checked_pairs}"
    );
    assert!(first_checked >= 100);
    pass(2, "recursive-inequality soundness suite");
}

#[test]
fn acceptance_03_degeneracy_coherence() {
    // rate_second at d = 1 equals rate_first
    let inst = RecIneqInstance::new(
        GaugeFunction::<f64>::linear(0.5),
        StepSequence::ones(),
        None,
        ConvergenceRate::ceil_inv(1.0),
        1.0,
    )
    .unwrap();
    let first = rate_first(&inst).unwrap();
    let second = rate_second(&inst).unwrap();
    for k in 0..12 {
        let eps = 1.7 * 2.0f64.powi(-k);
        assert_eq!(first.eval(eps).unwrap(), second.eval(eps).unwrap());
    }

    // mann_rate with sigma = 0, alpha = 1, d = 1 equals simple_rate
    let family = make_strong(0.5, Vector::zeros(2)).unwrap();
    let mann = mann_rate(&family, &StepSequence::ones(), 1.0, 1.0).unwrap();
    let simple = simple_rate(&family.psi, 1.0).unwrap();
    for k in 0..12 {
        let eps = 1.3 * 2.0f64.powi(-k);
        assert_eq!(mann.eval(eps).unwrap(), simple.eval(eps).unwrap());
    }

    // perturbed_rate with fixed sets, h = f = 0, sigma = 0, c4 = 2 c3
    // equals perturbed_concrete_rate
    let space = plane();
    let set = ConvexSet::new_box(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
    let set2 = set.clone();
    let params = PerturbedParams {
        retraction_sets: Arc::new(move |_| set2.clone()),
        limit_set: set,
        a_seq: Arc::new(|_| 1e-9),
        h: ConvergenceRate::zero(),
        d: 1.0,
        f: ConvergenceRate::zero(),
        c1: 2.0,
        c2: 1.0,
        c3: 1.0,
        c4: 2.0,
        omega: DualityContinuityModulus::identity(),
        setup_horizon: 32,
        space,
        hstar: HStarOptions::default(),
    };
    let general = perturbed_rate(&family, &StepSequence::ones(), &params).unwrap();
    let concrete = perturbed_concrete_rate(&family, &StepSequence::ones(), &params).unwrap();
    for k in 0..12 {
        let eps = 2.9 * 2.0f64.powi(-k);
        assert_eq!(general.eval(eps).unwrap(), concrete.eval(eps).unwrap());
    }
    pass(3, "degeneracy coherence");
}

#[test]
fn acceptance_04_duality_map_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(4_2026);
    for _ in 0..1000 {
        let p = [1.5, 2.0, 3.0, 4.0][rng.gen_range(0..4)];
        let dim = rng.gen_range(1..=6);
        let space = LpSpace::new(dim, p).unwrap();
        let x: Vector<f64> = Vector::new((0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect());
        let j = space.duality_map(&x);
        let nx = space.norm(&x);
        let tol = 1e-9 * (1.0 + nx * nx);
        assert!((pairing(&x, &j).unwrap() - nx * nx).abs() <= tol);
        assert!((space.dual_norm(&j) - nx).abs() <= tol);
        if p == 2.0 {
            assert_eq!(j, x, "p = 2 duality map must be the identity, exactly");
        }
    }
    pass(4, "duality-map identities");
}

#[test]
fn acceptance_05_omega_tau_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(5_2026);
    let mut checked = 0usize;
    while checked < 500 {
        let p = [1.5, 2.0, 3.0, 4.0][rng.gen_range(0..4)];
        let dim = rng.gen_range(1..=5);
        let space = LpSpace::new(dim, p).unwrap();
        let tau = tau_for_lp(p).unwrap();
        let omega = omega_from_tau(&tau);
        let d: f64 = rng.gen_range(1.0..4.0);
        let eps: f64 = rng.gen_range(0.02..2.0);
        let budget = omega.eval(d, eps);
        let mut x = Vector::new((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let nx = space.norm(&x);
        if nx == 0.0 {
            continue;
        }
        x = x.scale(rng.gen_range(0.05..1.0) * d / nx);
        let mut step = Vector::new((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let ns = space.norm(&step);
        if ns == 0.0 {
            continue;
        }
        step = step.scale(rng.gen_range(0.0..1.0) * budget / ns);
        let y = x.add(&step);
        if space.norm(&y) > d {
            continue;
        }
        let gap = space.dual_norm(&space.duality_map(&x).sub(&space.duality_map(&y)));
        assert!(
            gap <= eps,
            "p={p} d={d} eps={eps}: ||Jx - Jy|| = {gap} exceeds eps"
        );
        checked += 1;
    }
    pass(5, "omega_tau soundness");
}

#[test]
fn acceptance_06_sunny_and_hausdorff_geometry() {
    let space = plane();
    let mut rng = ChaCha8Rng::seed_from_u64(6_2026);
    // sunny inequality for projections onto random boxes and balls
    for _ in 0..1000 {
        let set = if rng.gen_bool(0.5) {
            let lo: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..0.5)).collect();
            let hi: Vec<f64> = lo.iter().map(|&a| a + rng.gen_range(0.05..2.5)).collect();
            ConvexSet::new_box(lo, hi).unwrap()
        } else {
            let center = Vector::new((0..2).map(|_| rng.gen_range(-1.5..1.5)).collect());
            ConvexSet::new_ball(center, rng.gen_range(0.05..2.0)).unwrap()
        };
        let x = Vector::new((0..2).map(|_| rng.gen_range(-5.0..5.0)).collect());
        let qx = project(&space, &set, &x).unwrap();
        let inside = project(
            &space,
            &set,
            &Vector::new((0..2).map(|_| rng.gen_range(-5.0..5.0)).collect()),
        )
        .unwrap();
        let inner = pairing(&x.sub(&qx), &inside.sub(&qx)).unwrap();
        assert!(
            inner <= 1e-12 * (1.0 + space.norm(&x).powi(2)),
            "sunny inequality violated: {inner}"
        );
    }

    // quantitative two-retraction lemma with the identity modulus
    let omega = DualityContinuityModulus::identity();
    for _ in 0..300 {
        let eps: f64 = rng.gen_range(0.02..2.0);
        let (_, a) = sunnyhaus_threshold(&omega, 1.0, 1.0, eps);
        let lo: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.2..-0.3)).collect();
        let hi: Vec<f64> = (0..2).map(|_| rng.gen_range(0.3..1.2)).collect();
        let e1 = ConvexSet::new_box(lo.clone(), hi.clone()).unwrap();
        let shift = a / 2.0f64.sqrt();
        let e2 = match ConvexSet::new_box(
            lo.iter().map(|&v| v + rng.gen_range(-shift..shift)).collect(),
            hi.iter().map(|&v| v + rng.gen_range(-shift..shift)).collect(),
        ) {
            Ok(s) => s,
            Err(_) => continue,
        };
        assert!(certirate::geometry::hausdorff_distance(&e1, &e2).unwrap() <= a);
        for _ in 0..25 {
            let mut x = Vector::new((0..2).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let n = space.norm(&x);
            if n > 1.0 {
                x = x.scale(rng.gen_range(0.0..1.0) / n);
            }
            let q1 = project(&space, &e1, &x).unwrap();
            let q2 = project(&space, &e2, &x).unwrap();
            assert!(
                space.distance(&q1, &q2).powi(2) <= eps + 1e-12,
                "two-retraction bound violated at eps = {eps}"
            );
        }
    }
    pass(6, "sunny/hausdorff geometry");
}

#[test]
fn acceptance_07_dweak_theorem_end_to_end() {
    let space = plane();
    let q = Vector::zeros(2);
    let family = make_dweak(0.5, q.clone()).unwrap();
    let steps = StepSequence::harmonic(10_000_000);
    let f_step = ConvergenceRate::ceil_inv(1.0);
    let omega = DualityContinuityModulus::identity();
    let cert = dweakly_rate(&family, &steps, &f_step, &omega, 1.0, 0.5).unwrap();

    let scheme = SchemeInstance::new(
        SchemeVariant::Mann,
        family,
        steps,
        Vector::new(vec![1.0, 0.0]),
        q.clone(),
    )
    .unwrap();
    let n_max: Index = 100_000;
    let traj = scheme.run(&space, n_max).unwrap();
    let grid: Vec<f64> = (0..=6).map(|k| 2.0f64.powi(-k)).collect();
    let report = verify_rate(&space, &traj, &q, &cert, &grid, n_max).unwrap();
    assert!(report.all_hold(), "{}", report.human_table());
    // the large-epsilon certificates land within the horizon and verify
    // non-vacuously
    assert!(report.rows.iter().filter(|r| r.within_horizon).count() >= 3);
    for row in report.rows.iter().filter(|r| r.within_horizon) {
        assert!(row.first_actual_index.is_some());
    }
    pass(7, "d-weak theorem end-to-end");
}

#[test]
fn acceptance_08_perturbed_theorem_end_to_end() {
    let space = plane();
    let q = Vector::zeros(2);
    let family = make_strong(0.5, q.clone()).unwrap();
    let steps = StepSequence::constant(0.5).unwrap();
    let base = ConvexSet::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let omega = DualityContinuityModulus::identity();

    // a_n = a0 2^-n, boxes inflated by a_n / 2 keep the Euclidean
    // Hausdorff distance at a_n / sqrt(2) <= a_n
    let a0 = 0.25f64;
    let a_seq: SeqFn<f64> = Arc::new(move |n| a0 * 2.0f64.powi(-(n.min(1000) as i32)));
    let base2 = base.clone();
    let a_seq2 = a_seq.clone();
    let retraction_sets = Arc::new(move |n: Index| {
        base2
            .inflate_box(a_seq2(n) / 2.0)
            .expect("box inflation stays a box")
    });

    // constants: ||z_n|| <= sqrt(2) (1 + a0/2), ||A z_n|| <= half that
    let c1 = 1.7f64;
    let c2 = 0.9f64;
    let c3 = 1.5f64; // >= ||z0 - q|| = sqrt(2)
    let d = 0.5f64;
    let alpha_cap = 0.5f64;
    let r_const = 2.0 * (2.0 * (c1 + alpha_cap * c2) + d) + 1.0;
    // h certifies a_n <= (alpha_n delta)^2 / 4R: solve a0 2^-n <= that
    let h = ConvergenceRate::from_float_fn("geometric closeness", move |delta: f64| {
        (a0 * 4.0 * r_const / (alpha_cap * delta).powi(2)).log2().ceil().max(0.0)
    });

    let n_max: Index = 600;
    let params = PerturbedParams {
        retraction_sets,
        limit_set: base.clone(),
        a_seq: a_seq.clone(),
        h,
        d,
        f: ConvergenceRate::zero(),
        c1,
        c2,
        c3,
        c4: 2.0 * c3,
        omega,
        setup_horizon: n_max,
        space,
        hstar: HStarOptions::default(),
    };
    // constructor checks H*[E_n, E, a_n] for every n <= n_max; re-check
    // explicitly here as the criterion demands
    for n in 0..=n_max {
        let en = (params.retraction_sets)(n);
        assert!(
            certirate::geometry::hstar_check(&space, &en, &base, a_seq(n), &params.hstar)
                .unwrap(),
            "H* fails at n = {n}"
        );
    }
    let cert = perturbed_concrete_rate(&family, &steps, &params).unwrap();

    let scheme = SchemeInstance::new(
        SchemeVariant::Perturbed {
            retractions: {
                let sets = params.retraction_sets.clone();
                let space2 = space;
                Arc::new(move |n| {
                    certirate::geometry::Retraction::new(&space2, sets(n)).unwrap()
                })
            },
        },
        family,
        steps,
        Vector::new(vec![1.0, 1.0]),
        q.clone(),
    )
    .unwrap();
    let traj = scheme.run(&space, n_max).unwrap();
    let grid: Vec<f64> = (0..=6).map(|k| 2.0f64.powi(-k)).collect();
    let report = verify_rate(&space, &traj, &q, &cert, &grid, n_max).unwrap();
    assert!(report.all_hold(), "{}", report.human_table());
    assert!(
        report.rows.iter().all(|r| r.within_horizon),
        "every certificate index should land inside the horizon:\n{}",
        report.human_table()
    );
    pass(8, "perturbed theorem end-to-end");
}

#[test]
fn acceptance_09_quadrature_certification() {
    let gauges: Vec<GaugeFunction<f64>> = vec![
        GaugeFunction::linear(0.25),
        GaugeFunction::linear(0.5),
        GaugeFunction::linear(1.0),
        GaugeFunction::linear(2.0),
        GaugeFunction::linear(4.0),
        GaugeFunction::power(1.0, 0.5),
        GaugeFunction::power(1.0, 0.75),
        GaugeFunction::power(1.0, 1.25),
        GaugeFunction::power(1.0, 1.5),
        GaugeFunction::power(1.0, 2.0),
        GaugeFunction::power(2.0, 0.5),
        GaugeFunction::power(2.0, 1.5),
        GaugeFunction::power(0.5, 1.25),
        GaugeFunction::power(4.0, 0.75),
        GaugeFunction::power(0.25, 2.0),
        GaugeFunction::quadratic(0.5),
        GaugeFunction::quadratic(1.0),
        GaugeFunction::quadratic(2.0),
        GaugeFunction::rational_quad(),
        GaugeFunction::power(3.0, 1.0),
    ];
    assert_eq!(gauges.len(), 20);
    let mut rng = ChaCha8Rng::seed_from_u64(9_2026);
    for (i, gauge) in gauges.iter().enumerate() {
        let psi_big = gauge.antideriv().expect("catalog gauge has closed form").clone();
        for _ in 0..2 {
            // log-uniform draws over [1e-4, 1e3]
            let u1: f64 = rng.gen_range(-4.0..3.0);
            let u2: f64 = rng.gen_range(-4.0..3.0);
            let (lo, hi) = if u1 < u2 {
                (10f64.powf(u1), 10f64.powf(u2))
            } else if u2 < u1 {
                (10f64.powf(u2), 10f64.powf(u1))
            } else {
                continue;
            };
            let exact = psi_big(hi) - psi_big(lo);
            // quadrature path
            let upper = upper_integral(&gauge.without_antideriv(), lo, hi).unwrap();
            assert!(
                upper >= exact,
                "gauge {i}: upper {upper} below exact {exact} on [{lo}, {hi}]"
            );
            assert!(
                upper - exact <= 1e-4 * exact,
                "gauge {i}: slack {} too large on [{lo}, {hi}]",
                (upper - exact) / exact
            );
            // closed-form path stays bracketed too
            let closed = upper_integral(gauge, lo, hi).unwrap();
            assert!(closed >= exact && closed - exact <= 1e-4 * exact);
        }
    }
    pass(9, "quadrature certification");
}

#[test]
fn acceptance_10_corollary_moduli_assembly() {
    // totally-asymptotic corollary: sigma(0.5, 1) = 2 for
    // f1 = f2 = ceil(delta^{-1/2}), phi = id
    let base = make_strong(0.5, Vector::zeros(2)).unwrap();
    let seq: SeqFn<f64> = Arc::new(|n| 1.0 / ((n as f64 + 1.0) * (n as f64 + 1.0)));
    let total = make_total_async(
        GaugeFunction::linear(1.0),
        seq.clone(),
        seq,
        &base,
        ConvergenceRate::ceil_inv_sqrt(),
        ConvergenceRate::ceil_inv_sqrt(),
    )
    .unwrap();
    assert_eq!(total.sigma.eval(0.5, 1.0).unwrap(), 2);

    // approximate-family corollary: sigma(0.4) = 10 for f_i = ceil(1/delta),
    // c1 = 1
    let zero: SeqFn<f64> = Arc::new(|_| 0.0);
    let approx = make_approx_family(
        &base,
        zero.clone(),
        zero.clone(),
        zero,
        GaugeFunction::linear(1.0),
        [
            ConvergenceRate::ceil_inv(1.0),
            ConvergenceRate::ceil_inv(1.0),
            ConvergenceRate::ceil_inv(1.0),
            ConvergenceRate::ceil_inv(1.0),
        ],
        1.0,
    )
    .unwrap();
    assert_eq!(approx.sigma.eval(0.4, 7.0).unwrap(), 10);
    assert!(approx.sigma.b_independent());
    pass(10, "corollary moduli assembly");
}

#[test]
fn acceptance_summary_banner() {
    // keep a stable equality between the two divergence representations
    // used across criteria: the constant-one closed form never undershoots
    // the brute-force witness
    let brute = divergence_from_partial_sums::<f64>(Arc::new(|_| 1.0), 1_000_000);
    let closed = certirate::moduli::divergence_constant_one::<f64>();
    for start in [0u64, 2, 9] {
        for x in [0.1, 1.0, 4.6] {
            assert!(closed.eval(start, x).unwrap() >= brute.eval(start, x).unwrap());
        }
    }
    println!("acceptance suite: all criteria evaluated");
}
