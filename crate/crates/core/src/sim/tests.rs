use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

fn params(n: usize, beta: f64) -> ModelParams<f64> {
    ModelParams::new(n, beta).unwrap()
}

#[test]
fn table_matches_update_probabilities() {
    let p = params(9, 1.1);
    let t = UpdateTable::new(&p);
    for j in 0..9 {
        let s = (2 * j as i64 - 8) as f64 / 9.0;
        assert_eq!(t.p_plus(j), update_probabilities(s, 1.1).0);
    }
}

#[test]
fn infinite_temperature_update_is_a_fair_coin() {
    let mut s = SimState::new(SpinConfiguration::all_plus(10), params(10, 0.0), 0).unwrap();
    s.update(3, 0.5);
    assert_eq!(s.spin(3), 1);
    s.update(3, 0.500_000_001);
    assert_eq!(s.spin(3), -1);
}

#[test]
fn one_step_moves_by_at_most_one_spin() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut s = SimState::new(SpinConfiguration::all_plus(25), params(25, 0.9), 0).unwrap();
    for _ in 0..10_000 {
        let before = s.plus_count();
        s.step(&mut rng);
        assert!(s.plus_count().abs_diff(before) <= 1);
        assert_eq!(s.raw_config().plus_count(), s.raw_config().spins().iter().filter(|&&x| x == 1).count());
    }
    assert_eq!(s.steps(), 10_000);
}

#[test]
fn censoring_flips_odd_boundary() {
    // n = 5 at S = 1/5 (three plus spins); turning a plus spin negative
    // reaches -1/5, which is observed as +1/5.
    let config = SpinConfiguration::with_plus_count(5, 3).unwrap();
    let mut s = SimState::censored(config, params(5, 1.2), 0).unwrap();
    s.update(0, 1.0);
    assert!(s.is_flipped());
    assert_eq!(s.plus_count(), 3);
    assert!((s.magnetization() - 0.2).abs() < 1e-15);
}

#[test]
fn censored_magnetization_stays_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [20, 21] {
        let mut s = SimState::censored(SpinConfiguration::all_minus(n), params(n, 0.7), 0).unwrap();
        assert!(s.magnetization() > 0.0);
        for _ in 0..50_000 {
            s.censored_step(&mut rng);
            assert!(2 * s.plus_count() >= n);
        }
    }
}

#[test]
fn grand_coupling_preserves_order() {
    let p = params(40, 1.1);
    let members = vec![
        SimState::new(SpinConfiguration::all_plus(40), p, 0).unwrap(),
        SimState::new(SpinConfiguration::with_plus_count(40, 25).unwrap(), p, 0).unwrap(),
        SimState::new(SpinConfiguration::all_minus(40), p, 0).unwrap(),
    ];
    let mut ens = CouplingEnsemble::new(members).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100_000 {
        ens.coupled_step(&mut rng);
        assert!(ens.order_preserved());
        let m = ens.members();
        assert!(m[0].raw_config().dominates(m[1].raw_config()));
        assert!(m[1].raw_config().dominates(m[2].raw_config()));
        for k in 0..2 {
            let slow = (0..40).filter(|&i| m[k].spin(i) != m[k + 1].spin(i)).count();
            assert_eq!(ens.disagreements(k), slow);
        }
    }
}

#[test]
fn identical_members_stay_identical() {
    let p = params(30, 0.9);
    let c = SpinConfiguration::with_plus_count(30, 11).unwrap();
    let mut ens =
        CouplingEnsemble::new(vec![SimState::new(c.clone(), p, 0).unwrap(), SimState::new(c, p, 1).unwrap()]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        ens.coupled_step(&mut rng);
        assert!(ens.all_coalesced());
    }
    assert_eq!(ens.members()[0].raw_config(), ens.members()[1].raw_config());
}

#[test]
fn censored_members_are_rejected() {
    let p = params(6, 0.9);
    let a = SimState::censored(SpinConfiguration::all_plus(6), p, 0).unwrap();
    assert!(CouplingEnsemble::new(vec![a]).is_err());
}

#[test]
fn hitting_start_inside_target_is_zero() {
    let spec = HittingSpec {
        start_plus: 10,
        target: TargetSet::near_zero(20),
        reps: 5,
        master_seed: 9,
        cap_steps: 100,
        censored: false,
    };
    let s = estimate_hitting(&params(20, 0.5), &spec, None).unwrap();
    assert_eq!(s.mean, 0.0);
    assert_eq!(s.std_error, 0.0);
    assert!(s.valid);
}

#[test]
fn replicates_are_required() {
    let spec = HittingSpec {
        start_plus: 20,
        target: TargetSet::near_zero(20),
        reps: 1,
        master_seed: 9,
        cap_steps: 100,
        censored: false,
    };
    assert!(estimate_hitting(&params(20, 0.5), &spec, None).is_err());
}

#[test]
fn all_capped_is_invalid() {
    let spec = HittingSpec {
        start_plus: 60,
        target: TargetSet::at_most(0),
        reps: 4,
        master_seed: 1,
        cap_steps: 50,
        censored: false,
    };
    let s = estimate_hitting(&params(60, 1.5), &spec, None).unwrap();
    assert!(!s.valid);
    assert_eq!(s.capped, 4);
    assert!(s.samples.iter().all(|&x| x == 50));
}

#[test]
fn reproducible_across_worker_counts() {
    let spec = HittingSpec {
        start_plus: 50,
        target: TargetSet::near_zero(50),
        reps: 32,
        master_seed: 42,
        cap_steps: DEFAULT_CAP_STEPS,
        censored: false,
    };
    let p = params(50, 0.8);
    let a = estimate_hitting(&p, &spec, Some(1)).unwrap();
    let b = estimate_hitting(&p, &spec, Some(4)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.seeds[3], replicate_seed(42, 3));
    let json = serde_json::to_value(&a).unwrap();
    assert_eq!(json["seeds"].as_array().unwrap().len(), 32);
}

#[test]
fn replicate_seeds_are_distinct() {
    let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| replicate_seed(7, i)).collect();
    assert_eq!(seeds.len(), 10_000);
    assert_ne!(replicate_seed(7, 0), replicate_seed(8, 0));
}

#[test]
fn identical_starts_coalesce_at_zero() {
    let c = SpinConfiguration::with_plus_count(12, 5).unwrap();
    let e = estimate_coalescence(&params(12, 0.8), Some((c.clone(), c)), 3, 0, 1000, None).unwrap();
    assert_eq!(e.summary.mean, 0.0);
    assert_eq!(e.tv_bound_at(0), 0.0);
}

#[test]
fn coalescence_bound_is_non_increasing() {
    let e = estimate_coalescence(&params(60, 0.8), None, 64, 5, DEFAULT_CAP_STEPS, None).unwrap();
    assert_eq!(e.tv_bound[0], (0, 1.0));
    for w in e.tv_bound.windows(2) {
        assert!(w[1].0 > w[0].0);
        assert!(w[1].1 <= w[0].1);
    }
    assert_eq!(e.tv_bound.last().unwrap().1, 0.0);
    assert!(e.summary.quantiles.windows(2).all(|w| w[0].1 <= w[1].1));
}

#[test]
fn summary_csv_has_one_row_per_replicate() {
    let e = estimate_coalescence(&params(10, 0.5), None, 6, 5, DEFAULT_CAP_STEPS, None).unwrap();
    let csv = e.summary.samples_csv();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("replicate,seed,value,capped"));
}

#[test]
fn near_zero_target() {
    assert_eq!(TargetSet::near_zero(10), TargetSet { lo: 5, hi: 5 });
    assert_eq!(TargetSet::near_zero(11), TargetSet { lo: 5, hi: 6 });
}
