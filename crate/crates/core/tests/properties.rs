mod common;

use std::f64::consts::E;

use common::{random_instance, RandomSpec};
use flb_core::benchmarks::{
    construct_dual, enumerate_configurations, opt_branch_and_bound, opt_exact, opt_flow, verify_certificate, CertMode,
};
use flb_core::engine::{
    check_availability_floor, check_feasibility_condition_integer, check_feasibility_condition_real,
    check_invariant_integer, invariant_grid, run, Verdict,
};
use flb_core::generators::{gen_worstcase_geometric, gen_lowerbound_distribution, gen_random_poisson};
use flb_core::params::special::{lambert_w, rho_product, Branch};
use flb_core::params::{solve_fixed_reward_int, solve_flbopt_int, solve_flbopt_real, with_saturation_guard};
use flb_core::policies::{decide, reduced_reward, reduced_reward_continuous, reduced_reward_discrete};
use flb_core::{AvailabilityTimeline, CMin, CommitMode, DurationMode, FlbParams, Gamma, Instance, JobArrival, Policy};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn timeline() -> impl Strategy<Value = AvailabilityTimeline> {
    (1u32..6, prop::collection::vec(0.0f64..20.0, 0..12))
        .prop_map(|(c, busy)| AvailabilityTimeline::with_busy(c, busy))
}

fn params() -> impl Strategy<Value = FlbParams> {
    (1u32..4, 0.05f64..3.0, 1.0f64..50.0).prop_map(|(g, eta, beta)| FlbParams::new(Gamma::Finite(g), eta, beta).unwrap())
}

fn spec_strategy() -> impl Strategy<Value = (u64, usize, u32, f64, f64)> {
    (any::<u64>(), 1usize..4, 1u32..6, 1.0f64..4.0, 1u32..5).prop_map(|(seed, n, c, r, d)| (seed, n, c, r, d as f64))
}

fn build(seed: u64, n: usize, c: u32, r: f64, d: f64, mode: DurationMode, jobs: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomSpec {
        servers: vec![c; n],
        jobs,
        r_max: r,
        d_max: d,
        mode,
        gap: 0.4,
        uniform: false,
        full_compat: false,
    };
    random_instance(&mut rng, &spec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn availability_monotone_in_horizon(tl in timeline(), mut taus in prop::collection::vec(0.0f64..25.0, 2..20)) {
        taus.sort_by(f64::total_cmp);
        for w in taus.windows(2) {
            prop_assert!(tl.projected_availability(w[0]) <= tl.projected_availability(w[1]));
        }
    }

    #[test]
    fn commit_lowers_availability_only_before_its_end(tl in timeline(), start in 0.0f64..10.0, len in 0.1f64..10.0, taus in prop::collection::vec(0.0f64..25.0, 1..20)) {
        let end = start + len;
        let mut after = tl.clone();
        after.commit(start, end, CommitMode::Hypothetical).unwrap();
        for tau in taus {
            let (a, b) = (tl.projected_availability(tau), after.projected_availability(tau));
            if tau < end { prop_assert!(b <= a) } else { prop_assert_eq!(a, b) }
        }
    }

    #[test]
    fn enforcing_commits_never_go_negative(c in 1u32..5, spans in prop::collection::vec((0.0f64..10.0, 0.5f64..5.0), 1..30)) {
        let mut spans = spans;
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut tl = AvailabilityTimeline::new(c);
        for (s, len) in spans {
            let _ = tl.commit(s, s + len, CommitMode::Enforcing);
            for k in 0..40 {
                prop_assert!(tl.projected_availability(s + k as f64 * 0.25) >= 0.0);
            }
        }
    }

    #[test]
    fn penalty_convex_and_decreasing(p in params(), x in -2.0f64..1.0, y in -2.0f64..1.0) {
        let mid = p.penalty((x + y) / 2.0);
        prop_assert!(mid <= (p.penalty(x) + p.penalty(y)) / 2.0 + 1e-9 * (1.0 + mid.abs()));
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        prop_assert!(p.penalty(lo) >= p.penalty(hi));
        prop_assert_eq!(p.penalty(1.0), 0.0);
    }

    #[test]
    fn reduced_reward_drops_with_extra_busy(p in params(), tl in timeline(), extra in 0.0f64..20.0, r in 1.0f64..5.0, d in 1.0f64..5.0, t in 0.0f64..10.0) {
        let mut more = tl.clone();
        more.commit(0.0, extra, CommitMode::Hypothetical).unwrap();
        prop_assert!(reduced_reward_discrete(&p, r, d, &more, t) <= reduced_reward_discrete(&p, r, d, &tl, t) + 1e-12);
        let pc = FlbParams { gamma: Gamma::Infinite, ..p };
        prop_assert!(reduced_reward_continuous(&pc, r, d, &more, t) <= reduced_reward_continuous(&pc, r, d, &tl, t) + 1e-12);
    }

    #[test]
    fn continuous_is_limit_of_discrete(tl in timeline(), r in 1.0f64..5.0, d in 1.0f64..5.0, t in 0.0f64..10.0, eta in 0.1f64..2.0, beta in 1.5f64..10.0) {
        let cont = FlbParams::new(Gamma::Infinite, eta, beta).unwrap();
        let exact = reduced_reward_continuous(&cont, r, d, &tl, t);
        let mut prev = f64::INFINITY;
        for g in [1u32, 10, 100] {
            let disc = FlbParams::new(Gamma::Finite(g), eta, beta).unwrap();
            // Dividing by γ turns the discrete sum into a Riemann sum of the integral.
            let pen = (r * d - reduced_reward_discrete(&disc, r, d, &tl, t)) / g as f64;
            let err = (r * d - exact - pen).abs();
            prop_assert!(err <= 10.0 / g as f64 * cont.penalty(0.0).max(cont.penalty(1.0 - tl.busy_until().len() as f64 / tl.capacity() as f64)) + 1e-9);
            prop_assert!(err <= prev + 1e-9 || g == 1);
            prev = err;
        }
    }

    #[test]
    fn scaling_rewards_and_penalty_keeps_decisions(seed in any::<u64>(), s in 1.0f64..10.0, p in params()) {
        let inst = build(seed, 2, 3, 3.0, 3.0, DurationMode::Integer, 12);
        let mut state = inst.empty_timelines();
        let scaled = FlbParams { eta: p.eta * s, ..p };
        for job in inst.jobs() {
            let big = JobArrival::new(job.arrival_time, job.offers.iter().map(|o| flb_core::Offer { reward: o.reward * s, ..*o }).collect());
            let a = decide(&Policy::Flb(p), job, &state);
            let b = decide(&Policy::Flb(scaled), &big, &state);
            prop_assert_eq!(a.chosen, b.chosen);
            if let Some(i) = a.chosen {
                let o = job.offer(i).unwrap();
                state[i].commit(job.arrival_time, job.arrival_time + o.duration, CommitMode::Hypothetical).unwrap();
            }
        }
    }

    #[test]
    fn unit_durations_flb_matches_balance(seed in any::<u64>(), n in 1usize..4, c in 1u32..5, r in 1.0f64..4.0) {
        let inst = build(seed, n, c, r, 1.0, DurationMode::Integer, 40);
        let flb = FlbParams::new(Gamma::Finite(1), r / (E - 1.0), E).unwrap();
        let a = run(&inst, &Policy::Flb(flb), CommitMode::Enforcing).unwrap();
        let b = run(&inst, &Policy::Balance { r_max: r, d_max: 1.0 }, CommitMode::Enforcing).unwrap();
        let ca: Vec<_> = a.decisions.iter().map(|d| d.chosen).collect();
        let cb: Vec<_> = b.decisions.iter().map(|d| d.chosen).collect();
        prop_assert_eq!(ca, cb);
    }

    #[test]
    fn runs_are_deterministic_and_account_rewards(seed in any::<u64>(), p in params()) {
        let inst = build(seed, 2, 2, 3.0, 3.0, DurationMode::Real, 25);
        let a = run(&inst, &Policy::Flb(p), CommitMode::Hypothetical).unwrap();
        let b = run(&inst, &Policy::Flb(p), CommitMode::Hypothetical).unwrap();
        prop_assert_eq!(&a, &b);
        let recomputed: f64 = a.assigned().map(|(j, i)| inst.jobs()[j].offer(i).unwrap().value()).sum();
        prop_assert!((recomputed - a.total_reward).abs() < 1e-9);
        prop_assert!(a.decisions.windows(2).all(|w| w[0].job < w[1].job));
        for d in &a.decisions {
            if let Some(i) = d.chosen {
                let best = d.scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(d.chosen_score().unwrap() == best && best > 0.0);
                prop_assert!(d.scores.iter().take_while(|s| s.0 != i).all(|s| s.1 < best));
            } else {
                prop_assert!(d.scores.iter().all(|s| s.1 <= 0.0));
            }
        }
    }

    #[test]
    fn weak_duality_and_certificates(seed in any::<u64>(), (_, n, c, r, d) in spec_strategy()) {
        let inst = build(seed, n.min(2), c.min(3), r, d.min(3.0), DurationMode::Integer, 8);
        let fb = solve_flbopt_int(r, d.min(3.0) as u64, CMin::Infinite).unwrap();
        let p = with_saturation_guard(fb.flb(), r, d.min(3.0));
        let tr = run(&inst, &Policy::Flb(p), CommitMode::Enforcing).unwrap();
        let dual = construct_dual(&tr, &p, &inst).unwrap();
        prop_assert!(dual.lambda.iter().all(|&l| l >= 0.0) && dual.theta.iter().all(|&t| t >= 0.0));
        for dec in &tr.decisions {
            prop_assert_eq!(dual.lambda[dec.job] > 0.0, dec.chosen.is_some());
        }
        let rep = verify_certificate(&dual, &tr, &inst, &p, CertMode::Int).unwrap();
        prop_assert_eq!(rep.violations(), 0);
        prop_assert!(dual.objective + 1e-9 >= opt_exact(&inst).unwrap());
    }

    #[test]
    fn flow_matches_branch_and_bound(seed in any::<u64>(), n in 1usize..4, c in 1u32..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = RandomSpec { servers: vec![c; n], jobs: 10, r_max: 3.0, d_max: 3.0, mode: DurationMode::Real, gap: 0.5, uniform: true, full_compat: true };
        let inst = random_instance(&mut rng, &spec);
        let (a, b) = (opt_flow(&inst).unwrap(), opt_branch_and_bound(&inst).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn product_sum_identity(d in 1u64..=50, z in 0.0f64..0.99) {
        let lhs: f64 = (0..d).map(|l| rho_product(z, l)).sum();
        let rhs = d as f64 / (1.0 - z) * rho_product(z, d);
        prop_assert!(((lhs - rhs) / rhs).abs() < 1e-10);
    }

    #[test]
    fn feasible_parameters_keep_invariant_and_floor(seed in any::<u64>(), r in 1.0f64..3.0, d in 1u32..4, n in 1usize..3) {
        let s = solve_flbopt_int(r, d as u64, CMin::Finite(400)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = RandomSpec { servers: vec![400; n], jobs: 120, r_max: r, d_max: d as f64, mode: DurationMode::Integer, gap: 1.0 / 1000.0, uniform: false, full_compat: false };
        let inst = random_instance(&mut rng, &spec);
        let p = s.flb();
        let tr = run(&inst, &Policy::Flb(p), CommitMode::Hypothetical).unwrap();
        let v = check_invariant_integer(&inst, &tr, &p, r, CMin::Finite(400), &invariant_grid(&inst)).unwrap();
        prop_assert!(v.is_empty());
        prop_assert!(check_availability_floor(&inst, &tr, &p, r, d as u64, CMin::Finite(400)).unwrap().is_empty());
    }
}

#[test]
fn broken_parameters_are_caught() {
    let p = FlbParams::new(Gamma::Finite(1), 0.1, 1.1).unwrap();
    assert_eq!(check_feasibility_condition_integer(10.0, 10, CMin::Infinite, p.eta, p.beta), Verdict::Infeasible);
    assert_ne!(check_feasibility_condition_integer(10.0, 10, CMin::Finite(5), p.eta, p.beta), Verdict::Feasible);
    let inst = gen_worstcase_geometric(1000, 10.0, 10.0, 5, 1000).unwrap();
    let tr = run(&inst, &Policy::Flb(p), CommitMode::Hypothetical).unwrap();
    // The invariant constrains availability slopes for any (η, β); with β this
    // small it permits negative levels, which the hypothetical run reaches.
    let v = check_invariant_integer(&inst, &tr, &p, 10.0, CMin::Infinite, &invariant_grid(&inst)).unwrap();
    assert!(v.is_empty());
    let bound = flb_core::engine::availability_floor(10.0, 10, p.eta, p.beta, CMin::Infinite).unwrap();
    assert!(bound < 0.0);
    assert!(tr.decisions.iter().any(|d| d.min_availability_after < 0.0));
    let below = check_availability_floor(&inst, &tr, &p, 10.0, 10, CMin::Infinite).unwrap();
    assert!(below.is_empty());
    assert!(matches!(run(&inst, &Policy::Flb(p), CommitMode::Enforcing), Err(flb_core::Error::CapacityViolation { .. })));
}

#[test]
fn lambert_round_trip_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    use rand::Rng;
    let lo = -(-1.0f64).exp();
    for _ in 0..10_000 {
        let x = rng.random_range(lo..20.0);
        let w = lambert_w(Branch::Principal, x).unwrap();
        assert!(w >= -1.0 && (w * w.exp() - x).abs() < 1e-12, "W0({x}) = {w}");
        let x = rng.random_range(lo..0.0);
        let w = lambert_w(Branch::MinusOne, x).unwrap();
        assert!(w <= -1.0 && (w * w.exp() - x).abs() < 1e-12, "W-1({x}) = {w}");
    }
}

fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
}

#[test]
fn solved_parameters_pass_their_checkers() {
    for &r in &log_grid(1.0, 1000.0, 12) {
        for &d in &log_grid(1.0, 1000.0, 12) {
            let di = d.round() as u64;
            for c in [CMin::Infinite, CMin::Finite(1 << 30)] {
                let s = solve_flbopt_int(r, di, c).unwrap();
                assert_eq!(check_feasibility_condition_integer(r, di, c, s.eta, s.beta), Verdict::Feasible);
                assert!(s.beta >= E);
                let s = solve_flbopt_real(r, d, c).unwrap();
                let Gamma::Finite(g) = s.gamma else { panic!() };
                if d > 1.0 {
                    assert_eq!(check_feasibility_condition_real(r, d, c, g, s.eta, s.beta), Verdict::Feasible, "R={r} D={d}");
                }
                assert!(s.beta >= E);
            }
        }
    }
}

#[test]
fn lambert_solution_matches_bisection_oracle() {
    for (r, d, c) in [(2.0, 3u64, 60u64), (3.0, 3, 200), (10.0, 10, 5000), (1.5, 2, 40)] {
        let s = solve_flbopt_int(r, d, CMin::Finite(c)).unwrap();
        let feas = |b: f64| check_feasibility_condition_integer(r, d, CMin::Finite(c), s.eta, b) == Verdict::Feasible;
        // scan upward from e for the first feasible β, then bisect
        let mut hi = E;
        while !feas(hi) {
            hi *= 1.01;
        }
        let oracle = flb_core::params::special::bisect(hi / 1.01, hi, 1e-12, feas).max(E);
        assert!((s.beta - oracle).abs() <= 1e-8 * oracle, "R={r} D={d} c={c}: {} vs {oracle}", s.beta);
    }
}

#[test]
fn fixed_reward_eta_increases_and_meets_harmonic_bound() {
    let etas: Vec<f64> = (1..=100).map(|d| solve_fixed_reward_int(d).unwrap().eta).collect();
    assert!(etas.windows(2).all(|w| w[0] < w[1]));
    for (k, eta) in etas.iter().enumerate() {
        let d = k as u64 + 1;
        assert!(1.0 + eta <= flb_core::params::special::harmonic(d) + 2.0);
        assert!((rho_product(1.0 / (1.0 + eta), d) - (-1.0f64).exp()).abs() < 1e-10);
    }
}

#[test]
fn fixed_reward_real_condition_scan() {
    use flb_core::params::fixed_reward_real_lhs;
    for d in log_grid(1.0, 1e9, 30) {
        let eta = d.ln() + 3.0;
        assert!(fixed_reward_real_lhs(d, eta).unwrap() <= 1.0);
        assert!(fixed_reward_real_lhs(d, eta - 1.5).unwrap() > 1.0, "D={d}");
    }
}

#[test]
fn config_counts_for_cliques_and_disjoint_sets() {
    for k in 1..=8 {
        let clique: Vec<JobArrival> = (0..k).map(|j| JobArrival::uniform(j as f64 * 0.01, [0], 1.0, 1.0)).collect();
        let inst = Instance::infer(vec![1], clique).unwrap();
        assert_eq!(enumerate_configurations(&inst, 0).unwrap().len(), k + 1);
        let apart: Vec<JobArrival> = (0..k).map(|j| JobArrival::uniform(j as f64, [0], 1.0, 1.0)).collect();
        let inst = Instance::infer(vec![1], apart).unwrap();
        assert_eq!(enumerate_configurations(&inst, 0).unwrap().len(), 1 << k);
    }
}

#[test]
fn configurations_have_disjoint_inspection_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let spec = RandomSpec { servers: vec![1], jobs: 10, r_max: 2.0, d_max: 3.0, mode: DurationMode::Integer, gap: 1.5, uniform: true, full_compat: true };
        let inst = random_instance(&mut rng, &spec);
        for cfg in enumerate_configurations(&inst, 0).unwrap() {
            let mut pts: Vec<f64> = cfg
                .jobs
                .iter()
                .flat_map(|&j| {
                    let job = &inst.jobs()[j];
                    flb_core::policies::inspection_times(job.arrival_time, job.offers[0].duration, 1)
                })
                .collect();
            let len = pts.len();
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            assert_eq!(pts.len(), len);
        }
    }
}

#[test]
fn worstcase_truncations_have_closed_form_optimum() {
    let (c, m) = (200usize, 1000);
    let inst = gen_worstcase_geometric(m, 10.0, 10.0, c as u32, m).unwrap();
    let vals: Vec<f64> = inst.jobs().iter().map(|j| j.offers[0].value()).collect();
    for k in [1, 50, 199, 200, 201, 500, 1000] {
        let t = inst.truncated(k);
        let mut v = vals[..k].to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        let closed: f64 = v.iter().take(c).sum();
        assert!((opt_flow(&t).unwrap() - closed).abs() < 1e-9 * closed);
        assert!((opt_exact(&t).unwrap() - closed).abs() < 1e-9 * closed);
    }
}

#[test]
fn generators_produce_ordered_valid_instances() {
    let inst = gen_worstcase_geometric(1000, 10.0, 10.0, 200, 1000).unwrap();
    for w in inst.jobs().windows(2) {
        assert!(w[0].offers[0].reward < w[1].offers[0].reward);
        assert!(w[0].offers[0].duration <= w[1].offers[0].duration);
    }
    let dist = gen_lowerbound_distribution(200, 5.0, 7.0).unwrap();
    assert!(dist.iter().all(|(_, p)| *p > 0.0));
    for seed in 0..20 {
        let inst = gen_random_poisson(3, 10, 300, 20.0, 2.0, 3.0, seed).unwrap();
        assert!(flb_core::Instance::new(inst.servers().to_vec(), inst.jobs().to_vec(), 10.0, 10.0, DurationMode::Integer).is_ok());
    }
}

#[test]
fn text_format_round_trips_random_instances() {
    for seed in 0..30 {
        let inst = build(seed, 3, 4, 3.7, 2.5, DurationMode::Real, 30);
        assert_eq!(flb_core::format::parse(&flb_core::format::render(&inst)).unwrap(), inst);
    }
}

#[test]
fn reduced_reward_dispatch() {
    let tl = AvailabilityTimeline::with_busy(2, [1.5, 3.0]);
    let d = FlbParams::new(Gamma::Finite(2), 0.5, 3.0).unwrap();
    assert_eq!(reduced_reward(&d, 2.0, 2.0, &tl, 1.0), reduced_reward_discrete(&d, 2.0, 2.0, &tl, 1.0));
    let c = FlbParams { gamma: Gamma::Infinite, ..d };
    assert_eq!(reduced_reward(&c, 2.0, 2.0, &tl, 1.0), reduced_reward_continuous(&c, 2.0, 2.0, &tl, 1.0));
}
