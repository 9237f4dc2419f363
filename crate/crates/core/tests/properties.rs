use proptest::prelude::*;

use peerinfo::classifier::classify_triple;
use peerinfo::clustering::{kmeans, silhouette, EmbeddingMatrix};
use peerinfo::elicitation::{to_signed_cents, WtpEntry, WtpSchedule};
use peerinfo::io::{read_embeddings, read_records, read_schedules, write_embeddings, write_records, write_schedules};
use peerinfo::model::{
    effort_no_info, learning_posterior, learning_wtp, social_effort, social_exante_effort, social_wtp, stress_effort,
    stress_wtp, LearningParams, SocialPrefs, SocialScenario, StressParams,
};
use peerinfo::welfare::{evaluate_policy, realized_payoff, Policy};
use peerinfo::{
    bdm_resolve, classify, realized_bin, run_experiment, simulate_population, AgentSpec, BeliefPmf, ClassifierConfig,
    EffortCost, PerformanceBin, PopulationConfig, Scenario, TreatmentArm, WorkerModel, WorkerRecord, WorkerType,
};

fn cost() -> impl Strategy<Value = EffortCost> {
    (0.5f64..2.0, 0.02f64..0.2).prop_map(|(w, c)| EffortCost::new(w, c).unwrap())
}

fn beliefs() -> impl Strategy<Value = BeliefPmf> {
    prop::collection::btree_set(0u32..800, 1..6).prop_flat_map(|pts| {
        let n = pts.len();
        (Just(pts), prop::collection::vec(0.05f64..1.0, n)).prop_map(|(pts, w)| {
            let total: f64 = w.iter().sum();
            let support = pts.into_iter().map(|p| f64::from(p) / 10.0).collect();
            BeliefPmf::new(support, w.iter().map(|x| x / total).collect()).unwrap()
        })
    })
}

fn competitive() -> impl Strategy<Value = SocialPrefs> {
    (0.05f64..1.0, 0.05f64..1.0, 0.0f64..1.0).prop_map(|(l1, r, d)| SocialPrefs::competitive(l1, l1 * r, d).unwrap())
}

fn inequality_averse() -> impl Strategy<Value = SocialPrefs> {
    (0.05f64..1.0, 0.05f64..0.95, 0.0f64..1.0)
        .prop_map(|(l1, r, d)| SocialPrefs::inequality_averse(l1, -(l1.min(0.99) * r), d).unwrap())
}

fn learning() -> impl Strategy<Value = LearningParams> {
    (0.9f64..1.1, 0.0f64..3.0, 0.05f64..0.2, 0.5f64..1.0, 0.005f64..0.02).prop_map(|(s, k, sig, a, b)| LearningParams {
        alpha_s: s,
        alpha_lo: 0.5,
        alpha_hi: 1.5,
        search_cost: k,
        grid_m: 21,
        kernel_sigma: sig,
        loc_a: a,
        loc_b: b,
    })
}

fn signed_schedule() -> impl Strategy<Value = [[i32; 9]; 2]> {
    prop::array::uniform2(prop::array::uniform9(-50i32..=50))
}

fn record(id: usize, t: WorkerType, bin: PerformanceBin, signed: [[i32; 9]; 2]) -> WorkerRecord {
    WorkerRecord {
        worker_id: format!("w{id}"),
        model: None,
        agent: None,
        e1: 20,
        e2: None,
        arm: None,
        schedule: WtpSchedule::from_signed(signed).unwrap(),
        bin,
        worker_type: t,
        cluster: None,
        bdm: None,
    }
}

fn records() -> impl Strategy<Value = Vec<WorkerRecord>> {
    prop::collection::vec((0usize..4, 0usize..9, signed_schedule()), 1..40).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (t, b, s))| record(i, WorkerType::ALL[t], PerformanceBin::ALL[b], s))
            .collect()
    })
}

fn matrix() -> impl Strategy<Value = EmbeddingMatrix> {
    (4usize..24, 1usize..4).prop_flat_map(|(n, d)| {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n)
            .prop_map(|rows| EmbeddingMatrix::from_rows(&rows).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standard_agent_ignores_information(p in cost(), b in beliefs()) {
        let a = AgentSpec::new("w", WorkerModel::Standard { cost: p });
        prop_assert_eq!(a.baseline_effort(), p.wage / p.cost);
        for s in Scenario::ALL {
            prop_assert_eq!(a.wtp(&b, s).unwrap(), 0.0);
        }
    }

    #[test]
    fn social_exante_effort_is_clamped_peer_average(p in cost(), s in competitive(), e_bar in 0.0f64..100.0) {
        let lo = p.wage * (1.0 + s.lambda2) / p.cost;
        let hi = p.wage * (1.0 + s.lambda1) / p.cost;
        prop_assert_eq!(social_exante_effort(&p, &s, e_bar), e_bar.clamp(lo, hi));
    }

    #[test]
    fn competitive_exante_effort_and_wtp_move_with_peers(p in cost(), s in competitive(), a in 0.0f64..80.0, gap in 0.0f64..20.0) {
        let (lo, hi) = (BeliefPmf::point_mass(a).unwrap(), BeliefPmf::point_mass(a + gap).unwrap());
        prop_assert!(social_exante_effort(&p, &s, a + gap) >= social_exante_effort(&p, &s, a));
        let (wl, wh) = (
            social_wtp(&p, &s, &lo, Scenario::ExAnte).unwrap(),
            social_wtp(&p, &s, &hi, Scenario::ExAnte).unwrap(),
        );
        prop_assert!(wh <= wl + 1e-9 * wl.abs().max(1.0));
    }

    #[test]
    fn inequality_aversion_never_values_information(p in cost(), s in inequality_averse(), b in beliefs()) {
        for sc in Scenario::ALL {
            prop_assert!(social_wtp(&p, &s, &b, sc).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn expost_effort_lies_between_marginal_bounds(p in cost(), s in competitive(), b in beliefs()) {
        let e = social_effort(&p, &s, SocialScenario::ExPost(&b)).unwrap();
        let base = p.wage * (1.0 + s.delta * s.lambda2) / p.cost;
        let top = p.wage * (1.0 + s.delta * s.lambda1) / p.cost;
        prop_assert!(e >= base - 1e-9 && e <= top + 1e-9, "{} outside [{}, {}]", e, base, top);
    }

    #[test]
    fn full_weight_expost_is_no_better_than_exante(p in cost(), s in competitive(), b in beliefs()) {
        let s = SocialPrefs { delta: 1.0, ..s };
        let ante = social_wtp(&p, &s, &b, Scenario::ExAnte).unwrap();
        let post = social_wtp(&p, &s, &b, Scenario::ExPost).unwrap();
        prop_assert!(post <= ante + 1e-9 * ante.abs().max(1.0));
    }

    #[test]
    fn stress_wtp_is_expected_stress(p in cost(), theta in 0.0f64..1.0, delta in 0.0f64..=1.0, b in beliefs()) {
        let st = StressParams::new(theta, delta).unwrap();
        let m = b.mean();
        let tol = 1e-9 * (1.0 + theta * m);
        prop_assert!((stress_wtp(&p, &st, &b, Scenario::ExAnte) + theta * m).abs() <= tol);
        prop_assert!((stress_wtp(&p, &st, &b, Scenario::ExPost) + delta * theta * m).abs() <= tol);
        prop_assert_eq!(stress_effort(&p, &st), effort_no_info(&p));
    }

    #[test]
    fn learning_values_only_exante_information(p in cost(), l in learning(), b in beliefs()) {
        prop_assert_eq!(learning_wtp(&p, &l, &b, Scenario::ExPost), 0.0);
        prop_assert!(learning_wtp(&p, &l, &b, Scenario::ExAnte) >= 0.0);
    }

    #[test]
    fn learning_posterior_rises_with_peer_output(l in learning(), y in 0.0f64..60.0, gap in 0.0f64..30.0) {
        let (lo, hi) = (learning_posterior(&l, y), learning_posterior(&l, y + gap));
        for &a in lo.support() {
            prop_assert!(hi.cdf(a) <= lo.cdf(a) + 1e-12);
        }
    }

    #[test]
    fn bins_mirror_around_peer_average(e1 in 0u32..200, e_bar in 0.0f64..100.0) {
        let centre = e_bar.round() as i64;
        let reflected = 2 * centre - i64::from(e1);
        if reflected >= 0 {
            prop_assert_eq!(realized_bin(reflected as u32, e_bar), realized_bin(e1, e_bar).mirror());
        }
        let d = (i64::from(e1) - centre).abs();
        prop_assert_eq!(realized_bin(e1, e_bar) == PerformanceBin::Within1, d <= 1);
    }

    #[test]
    fn signed_amounts_round_trip(v in -50i32..=50, x in -1e3f64..1e3) {
        prop_assert_eq!(WtpEntry::from_signed(v).unwrap().signed(), v);
        let s = to_signed_cents(x);
        prop_assert!((-50..=50).contains(&s));
        prop_assert!(WtpEntry::from_signed(51).is_err() && WtpEntry::from_signed(-51).is_err());
    }

    #[test]
    fn classification_uses_only_exante_probes(signed in signed_schedule(), other in signed_schedule()) {
        let cfg = ClassifierConfig::default();
        let base = classify(&WtpSchedule::from_signed(signed).unwrap(), &cfg);
        let mut mixed = other;
        for bin in cfg.probes {
            mixed[0][bin.index()] = signed[0][bin.index()];
        }
        prop_assert_eq!(classify(&WtpSchedule::from_signed(mixed).unwrap(), &cfg), base);
    }

    #[test]
    fn classification_survives_positive_rescaling(t in prop::array::uniform3(-10i32..=10), k in 1i32..=5) {
        prop_assert_eq!(classify_triple(t.map(|x| x * k), 0), classify_triple(t, 0));
    }

    #[test]
    fn classification_partitions_profiles(t in prop::array::uniform3(-50i32..=50), eps in 0u8..5) {
        let ty = classify_triple(t, eps);
        let z = t.map(|x| if x.abs() <= i32::from(eps) { 0 } else { x });
        let rules = [
            z == [0, 0, 0],
            z != [0, 0, 0] && z.iter().all(|&x| x <= 0),
            z.iter().any(|&x| x > 0) && z[0] <= z[1] && z[1] <= z[2] && z[0] < z[2],
        ];
        let expected = rules.iter().position(|&r| r).map_or(WorkerType::LearningResidual, |i| WorkerType::ALL[i]);
        prop_assert_eq!(ty, expected);
    }

    #[test]
    fn kmeans_is_well_formed(x in matrix(), k in 2usize..5, seed in 0u64..1000) {
        let r = kmeans(&x, k, seed, 100, 0.0).unwrap();
        prop_assert!(r.labels.iter().all(|&l| l < k));
        prop_assert!(r.inertia_trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(r.inertia <= r.inertia_trace[0]);
        let s = silhouette(&x, &r.labels).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn per_type_optimum_dominates_uniform(recs in records()) {
        let opt = evaluate_policy(&recs, &Policy::per_type_optimal(&recs)).unwrap();
        for p in [Policy::UniformExAnte, Policy::UniformExPost] {
            prop_assert!(opt.mean >= evaluate_policy(&recs, &p).unwrap().mean - 1e-12);
        }
        let t = evaluate_policy(&recs, &Policy::targeted_default()).unwrap();
        let weighted: f64 = (0..4).filter_map(|i| t.per_type[i].map(|m| m * t.n_per_type[i] as f64)).sum();
        prop_assert!((weighted / recs.len() as f64 - t.mean).abs() < 1e-9);
    }

    #[test]
    fn payoff_ignores_arm_and_period_two(recs in records(), e2 in 0u32..100) {
        for r in &recs {
            let mut m = r.clone();
            m.arm = Some(TreatmentArm::ChooseYourInfo);
            m.e2 = Some(e2);
            for s in [Some(Scenario::ExAnte), Some(Scenario::ExPost), None] {
                prop_assert_eq!(realized_payoff(&m, s), realized_payoff(r, s));
            }
        }
    }

    #[test]
    fn schedules_round_trip(rows in prop::collection::vec(signed_schedule(), 1..20)) {
        let scheds: Vec<(String, WtpSchedule)> = rows
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("id{i}"), WtpSchedule::from_signed(*s).unwrap()))
            .collect();
        let mut buf = Vec::new();
        write_schedules(&mut buf, scheds.iter().map(|(i, s)| (i.as_str(), s))).unwrap();
        prop_assert_eq!(read_schedules(buf.as_slice(), "mem").unwrap(), scheds);
    }

    #[test]
    fn embeddings_rewrite_identically(x in matrix()) {
        let mut first = Vec::new();
        write_embeddings(&mut first, &x).unwrap();
        let back = read_embeddings(first.as_slice(), "mem").unwrap();
        prop_assert_eq!(back.ids(), x.ids());
        let mut second = Vec::new();
        write_embeddings(&mut second, &back).unwrap();
        prop_assert_eq!(first, second);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulation_is_seed_determined(seed in 0u64..1_000_000, noise in 0.0f64..3.0) {
        let cfg = PopulationConfig { n: 60, seed, effort_noise: noise, ..PopulationConfig::default() };
        let mut a = simulate_population(&cfg).unwrap();
        let mut b = simulate_population(&cfg).unwrap();
        run_experiment(&mut a, &cfg).unwrap();
        run_experiment(&mut b, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        let mut first = Vec::new();
        write_records(&mut first, &a).unwrap();
        let back = read_records(first.as_slice(), "mem").unwrap();
        let mut second = Vec::new();
        write_records(&mut second, &back).unwrap();
        prop_assert_eq!(first, second);
    }
}

#[test]
fn arm_frequencies_match_design() {
    let cfg = PopulationConfig {
        n: 20_000,
        seed: 3,
        mixture: peerinfo::simulator::Mixture {
            standard: 1.0,
            stress: 0.0,
            competitive: 0.0,
            inequality_averse: 0.0,
            learning: 0.0,
        },
        ..PopulationConfig::default()
    };
    let mut recs = simulate_population(&cfg).unwrap();
    run_experiment(&mut recs, &cfg).unwrap();
    let n = recs.len() as f64;
    for (arm, p) in TreatmentArm::ALL.into_iter().zip([0.3, 0.3, 0.3, 0.1]) {
        let count = recs.iter().filter(|r| r.arm == Some(arm)).count() as f64;
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!((count - n * p).abs() <= 4.0 * sd, "{arm:?}: {count} vs {}", n * p);
    }
}

/// Truthful reporting beats every misreport at some draw, except when the
/// misreport keeps the direction and shades the amount down by one cent:
/// the only draw where the two differ then costs exactly the value saved.
#[test]
fn bdm_truth_strictly_better_somewhere() {
    let payoff = |v: i32, r: i32, coin: bool, draw: i32| {
        let o = bdm_resolve(r >= 0, r.abs(), coin, draw).unwrap();
        (if o.receives_info { v } else { 0 }) - i32::from(o.payment_cents)
    };
    let mut ties = Vec::new();
    for v in -50..=50 {
        for r in (-50..=50).filter(|&r| r != v) {
            let strict =
                [true, false].into_iter().any(|coin| (0..=50).any(|d| payoff(v, v, coin, d) > payoff(v, r, coin, d)));
            if !strict {
                ties.push((v, r));
            }
        }
    }
    assert_eq!(ties.len(), 99);
    assert!(ties.iter().all(|&(v, r)| (v >= 0) == (r >= 0) && r.abs() == v.abs() - 1));
}
