use nalgebra::{DMatrix, DVector};
use ogl_core::datagen::{gen_ogl, Lambda, OglSpec};
use ogl_core::inner::{
    adal_step, aplms, fista, fistap, istap, InnerInput, InnerIterate, InnerOptions, SkipRule, SplitContext,
};
use ogl_core::{GroupStructure, LinsolveMode, Penalty, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ogl_problem(seed: u64, penalty: Penalty) -> Problem {
    let mut spec = OglSpec::new(60, 6, seed);
    spec.penalty = penalty;
    spec.lambda = Lambda::Relative(0.2);
    gen_ogl(&spec).unwrap().problem
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-scale..scale))
}

struct Start {
    x0: DVector<f64>,
    y0: DVector<f64>,
    v: DVector<f64>,
}

fn start(p: &Problem, seed: u64) -> Start {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let big_m = p.groups().replicated_len();
    Start {
        x0: random_vec(&mut rng, p.num_features(), 0.5),
        y0: random_vec(&mut rng, big_m, 0.5),
        v: random_vec(&mut rng, big_m, 0.5),
    }
}

fn input<'a>(s: &'a Start, mu: f64, eps_in: f64, max_inner: usize) -> InnerInput<'a> {
    InnerInput {
        x0: &s.x0,
        y0: &s.y0,
        v: &s.v,
        mu,
        eps_in,
        max_inner,
    }
}

#[derive(Default)]
struct Trajectory {
    x: Vec<DVector<f64>>,
    ybar: Vec<DVector<f64>>,
}

impl Trajectory {
    fn push(&mut self, it: &InnerIterate<'_>) {
        self.x.push(it.x.clone());
        self.ybar.push(it.ybar.clone());
    }
}

fn run_istap(p: &Problem, s: &Start, mu: f64, iters: usize) -> Trajectory {
    let ctx = SplitContext::new(p).unwrap();
    let mut cache = ctx.cache(LinsolveMode::Auto);
    let mut traj = Trajectory::default();
    istap(&ctx, &input(s, mu, 1e-300, iters), &InnerOptions::default(), &mut cache, &mut |it| {
        traj.push(it)
    })
    .unwrap();
    traj
}

#[test]
fn adal_with_frozen_multiplier_tracks_istap() {
    for penalty in [Penalty::L1L2, Penalty::L1Inf] {
        let p = ogl_problem(1, penalty);
        let s = start(&p, 2);
        let mu = 0.05;
        let reference = run_istap(&p, &s, mu, 25);

        let ctx = SplitContext::new(&p).unwrap();
        let mut cache = ctx.cache(LinsolveMode::Auto);
        let (mut x, mut y) = (s.x0.clone(), s.y0.clone());
        for k in 0..25 {
            let step = InnerInput {
                x0: &x,
                y0: &y,
                v: &s.v,
                mu,
                eps_in: 1e-3,
                max_inner: 1,
            };
            let out = adal_step(&ctx, &step, &mut cache).unwrap();
            assert_eq!(out.x, reference.x[k], "x differs at step {k}");
            assert_eq!(out.y, reference.ybar[k], "y differs at step {k}");
            x = out.x;
            y = out.y;
        }
    }
}

#[test]
fn always_skipping_aplms_is_istap() {
    for penalty in [Penalty::L1L2, Penalty::L1Inf] {
        let p = ogl_problem(3, penalty);
        let s = start(&p, 4);
        let mu = 0.02;
        let reference = run_istap(&p, &s, mu, 30);

        let ctx = SplitContext::new(&p).unwrap();
        let mut primary = ctx.cache(LinsolveMode::Auto);
        let mut joint = ctx.cache(LinsolveMode::Auto);
        let opts = InnerOptions {
            skip_rule: SkipRule::Always,
            ..InnerOptions::default()
        };
        let mut traj = Trajectory::default();
        let out = aplms(&ctx, &input(&s, mu, 1e-300, 30), &opts, &mut primary, &mut joint, &mut |it| {
            assert!(it.skipped);
            traj.push(it);
        })
        .unwrap();
        assert_eq!(out.skips, 30);
        assert_eq!(traj.x, reference.x);
        assert_eq!(traj.ybar, reference.ybar);
    }
}

#[test]
fn fistap_without_momentum_is_istap() {
    let p = ogl_problem(5, Penalty::L1L2);
    let s = start(&p, 6);
    let mu = 0.01;
    let reference = run_istap(&p, &s, mu, 30);

    let ctx = SplitContext::new(&p).unwrap();
    let mut cache = ctx.cache(LinsolveMode::Auto);
    let opts = InnerOptions {
        momentum: false,
        ..InnerOptions::default()
    };
    let mut traj = Trajectory::default();
    fistap(&ctx, &input(&s, mu, 1e-300, 30), &opts, &mut cache, &mut |it| traj.push(it)).unwrap();
    assert_eq!(traj.x, reference.x);
    assert_eq!(traj.ybar, reference.ybar);
}

#[test]
fn aplms_never_skipping_still_decreases() {
    let p = ogl_problem(7, Penalty::L1L2);
    let s = start(&p, 8);
    let ctx = SplitContext::new(&p).unwrap();
    let mut primary = ctx.cache(LinsolveMode::Auto);
    let mut joint = ctx.cache(LinsolveMode::Auto);
    let opts = InnerOptions {
        skip_rule: SkipRule::Never,
        record_history: true,
        ..InnerOptions::default()
    };
    let out = aplms(&ctx, &input(&s, 0.02, 1e-300, 40), &opts, &mut primary, &mut joint, &mut |_| {}).unwrap();
    assert_eq!(out.skips, 0);
    assert_eq!(primary.plan_count(), 0);
    assert!(out.f_history.last().unwrap() < &out.f_history[0]);
}

fn assert_non_increasing(history: &[f64]) {
    for (k, w) in history.windows(2).enumerate() {
        let slack = 1e-12 * w[0].abs().max(1.0);
        assert!(w[1] <= w[0] + slack, "F increased at {k}: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn istap_and_aplms_objectives_are_monotone() {
    for (seed, penalty) in [(9, Penalty::L1L2), (10, Penalty::L1Inf), (11, Penalty::L1L2)] {
        let p = ogl_problem(seed, penalty);
        let s = start(&p, seed + 100);
        let ctx = SplitContext::new(&p).unwrap();
        let opts = InnerOptions {
            record_history: true,
            ..InnerOptions::default()
        };
        let mut primary = ctx.cache(LinsolveMode::Auto);
        let mut joint = ctx.cache(LinsolveMode::Auto);
        let out = istap(&ctx, &input(&s, 0.01, 1e-300, 60), &opts, &mut primary, &mut |_| {}).unwrap();
        assert_non_increasing(&out.f_history);
        let out = aplms(&ctx, &input(&s, 0.01, 1e-300, 60), &opts, &mut primary, &mut joint, &mut |_| {}).unwrap();
        assert_non_increasing(&out.f_history);
    }
}

#[test]
fn aplms_gamma_stays_a_negative_subgradient() {
    for penalty in [Penalty::L1L2, Penalty::L1Inf] {
        let p = ogl_problem(12, penalty);
        let s = start(&p, 13);
        let ctx = SplitContext::new(&p).unwrap();
        let mut primary = ctx.cache(LinsolveMode::Auto);
        let mut joint = ctx.cache(LinsolveMode::Auto);
        let map = p.map();
        let lambda = p.lambda();
        let mut checked = 0;
        let mut check = |it: &InnerIterate<'_>| {
            let gamma = it.gamma.unwrap();
            for s in 0..map.num_groups() {
                let r = map.group_range(s);
                let g: Vec<f64> = gamma.as_slice()[r.clone()].iter().map(|v| -v).collect();
                let y = &it.ybar.as_slice()[r];
                let bound = lambda * p.groups().weights()[s];
                // -gamma_s in bound * (subdifferential of the block norm at y_s)
                let dual = penalty.dual_block_norm(&g);
                assert!(dual <= bound * (1.0 + 1e-8) + 1e-12, "dual norm {dual} > {bound}");
                let inner: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                let expected = bound * penalty.block_norm(y);
                assert!((inner - expected).abs() <= 1e-8 * expected.max(1.0));
            }
            checked += 1;
        };
        aplms(&ctx, &input(&s, 0.02, 1e-300, 30), &InnerOptions::default(), &mut primary, &mut joint, &mut check)
            .unwrap();
        assert_eq!(checked, 30);
    }
}

#[test]
fn fista_line_search_inequality_holds() {
    for penalty in [Penalty::L1L2, Penalty::L1Inf] {
        let p = ogl_problem(14, penalty);
        let s = start(&p, 15);
        let mu = 0.01;
        let ctx = SplitContext::new(&p).unwrap();
        let mut count = 0;
        fista(&ctx, &input(&s, mu, 1e-300, 80), &InnerOptions::default(), &mut |it| {
            let zx = it.zx.unwrap();
            let zy = it.y;
            let fz = p.smooth_part(zx, zy, &s.v, mu).unwrap();
            let (gx, gy) = p.smooth_grad(zx, zy, &s.v, mu).unwrap();
            let sx = it.x - zx;
            let sy = it.ybar - zy;
            let model = fz + gx.dot(&sx) + gy.dot(&sy) + (sx.norm_squared() + sy.norm_squared()) / (2.0 * it.rho);
            let f_new = p.smooth_part(it.x, it.ybar, &s.v, mu).unwrap();
            assert!(f_new <= model + 1e-10 * fz.abs().max(1.0), "{f_new} > {model}");
            assert!(it.rho <= mu);
            count += 1;
        })
        .unwrap();
        assert_eq!(count, 80);
    }
}

fn singleton_problem(seed: u64, lambda: f64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(12, 5, |_, _| rng.random_range(-1.0..1.0));
    let b = random_vec(&mut rng, 12, 1.0);
    Problem::new(a, b, lambda, Penalty::L1L2, GroupStructure::singletons(5).unwrap()).unwrap()
}

#[test]
fn fista_first_step_is_a_soft_threshold_step() {
    let p = singleton_problem(16, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = Start {
        x0: random_vec(&mut rng, 5, 1.0),
        y0: random_vec(&mut rng, 5, 1.0),
        v: DVector::zeros(5),
    };
    let mu = 0.5;
    let ctx = SplitContext::new(&p).unwrap();
    let mut first = None;
    fista(&ctx, &input(&s, mu, 1e-300, 1), &InnerOptions::default(), &mut |it| {
        first = Some((it.x.clone(), it.ybar.clone(), it.rho));
    })
    .unwrap();
    let (x, y, rho) = first.unwrap();
    let (gx, gy) = p.smooth_grad(&s.x0, &s.y0, &s.v, mu).unwrap();
    let dx = &s.x0 - &gx * rho;
    let dy = &s.y0 - &gy * rho;
    let t = p.lambda() * rho;
    let expected_y = dy.map(|d| d.signum() * (d.abs() - t).max(0.0));
    assert!((x - dx).norm() < 1e-14);
    assert!((y - expected_y).norm() < 1e-14);
}

#[test]
fn fista_with_vanishing_penalty_solves_least_squares() {
    let p = singleton_problem(18, 1e-12);
    let s = Start {
        x0: DVector::zeros(5),
        y0: DVector::zeros(5),
        v: DVector::zeros(5),
    };
    let ctx = SplitContext::new(&p).unwrap();
    let out = fista(&ctx, &input(&s, 1.0, 1e-12, 20000), &InnerOptions::default(), &mut |_| {}).unwrap();
    assert!(!out.hit_cap);
    let ata = p.a().tr_mul(p.a());
    let ls = ata.cholesky().unwrap().solve(&p.a().tr_mul(p.b()));
    assert!((&out.x - &ls).norm() <= 1e-6 * ls.norm(), "{} vs {}", out.x, ls);
}

#[test]
fn fistap_reports_its_last_gradient_numerator() {
    let p = ogl_problem(19, Penalty::L1L2);
    let s = start(&p, 20);
    let ctx = SplitContext::new(&p).unwrap();
    let mut cache = ctx.cache(LinsolveMode::Auto);
    let mut last = None;
    let out = fistap(&ctx, &input(&s, 0.01, 1e-4, 2000), &InnerOptions::default(), &mut cache, &mut |it| {
        last = Some((it.y.clone(), it.ybar.clone()));
    })
    .unwrap();
    let (z, ybar) = last.unwrap();
    assert_eq!(ybar, out.y);
    let num = p.map().apply_ct(&(&ybar - &z)).unwrap().norm();
    let den = p.map().apply_ct(&z).unwrap().norm();
    assert_eq!(out.dual_numerator, Some(num));
    assert!((out.dual_residual.unwrap() - num / den).abs() <= 1e-15);
    assert!(out.primal_residual.max(out.dual_residual.unwrap()) <= 1e-4);
}

#[test]
fn exits_meet_tolerance_or_flag_the_cap() {
    let p = ogl_problem(21, Penalty::L1Inf);
    let s = start(&p, 22);
    let ctx = SplitContext::new(&p).unwrap();
    let opts = InnerOptions::default();
    for (eps, cap) in [(1e-3, 2000), (1e-14, 3)] {
        let mut primary = ctx.cache(LinsolveMode::Auto);
        let mut joint = ctx.cache(LinsolveMode::Auto);
        let inp = input(&s, 0.01, eps, cap);
        let outs = [
            aplms(&ctx, &inp, &opts, &mut primary, &mut joint, &mut |_| {}).unwrap(),
            istap(&ctx, &inp, &opts, &mut primary, &mut |_| {}).unwrap(),
            fistap(&ctx, &inp, &opts, &mut primary, &mut |_| {}).unwrap(),
            fista(&ctx, &inp, &opts, &mut |_| {}).unwrap(),
        ];
        for out in outs {
            assert!(out.iterations <= cap);
            assert!(out.x.iter().chain(out.y.iter()).all(|v| v.is_finite()));
            let worst = out.primal_residual.max(out.dual_residual.unwrap());
            assert!(worst <= eps || out.hit_cap);
            assert_eq!(out.hit_cap, worst > eps);
        }
    }
}

#[test]
fn pcg_backend_matches_direct_trajectory() {
    let p = ogl_problem(23, Penalty::L1L2);
    let s = start(&p, 24);
    let ctx = SplitContext::new(&p).unwrap();
    let mut direct = ctx.cache(LinsolveMode::Direct);
    let mut pcg = ctx.cache(LinsolveMode::Pcg);
    let opts = InnerOptions::default();
    let inp = input(&s, 0.01, 1e-6, 2000);
    let a = fistap(&ctx, &inp, &opts, &mut direct, &mut |_| {}).unwrap();
    let b = fistap(&ctx, &inp, &opts, &mut pcg, &mut |_| {}).unwrap();
    assert!((&a.x - &b.x).norm() <= 1e-5 * a.x.norm().max(1.0));
}
