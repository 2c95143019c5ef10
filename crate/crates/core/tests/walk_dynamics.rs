mod common;

use common::*;
use cylwalk::dynamics::{
    beta, constant_force_closed_form, evolve_forced, evolve_free, newton2_residual, ForceVector,
};
use cylwalk::rational::{rational_from_int, rational_from_ints};
use cylwalk::walk::{
    mean_path, mean_position, recurrence_residual, step_mean, step_trace, step_vector, velocity,
    walk_trace, Vec3,
};
use cylwalk::{EventArena, ForceSchedule, LatticeConfig, Rational, StepProbabilityTable, Symbol};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn cfg_strategy() -> impl Strategy<Value = LatticeConfig> {
    (1i64..20, 1i64..50, 1i64..20, 1i64..10).prop_map(|(tn, td, cn, cd)| {
        LatticeConfig::new(rational_from_ints(tn, td), rational_from_ints(cn, cd), 10).unwrap()
    })
}

fn force_strategy() -> impl Strategy<Value = ForceVector> {
    prop::array::uniform6(-3i64..=3).prop_map(|f| std::array::from_fn(|j| rational_from_int(f[j])))
}

/// Rows with every entry at least 5/140, so small forces keep them valid.
fn interior_row_strategy() -> impl Strategy<Value = cylwalk::Row> {
    prop::array::uniform7(5u64..20).prop_map(|w| cylwalk::table::row_from_weights(w).unwrap())
}

/// E(R_n) and Tr(R_n) by enumerating all 7^n words with their probabilities.
fn enumerate_moments(n: usize, table: &StepProbabilityTable, cfg: &LatticeConfig) -> (Vec3, Rational) {
    let mut mean = Vec3::zero();
    let mut second = Rational::zero();
    for word in all_words(n) {
        let mut p = Rational::one();
        let mut pos = Vec3::zero();
        for (k, s) in word.iter().enumerate() {
            p *= &table.rows()[k][s.index()];
            pos += step_vector(*s, cfg).vector();
        }
        second += pos.dot(&pos) * &p;
        mean += &pos.scale(&p);
    }
    let trace = second - mean.dot(&mean);
    (mean, trace)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn closed_forms_match_path_enumeration(table in table_strategy(3), cfg in cfg_strategy()) {
        for n in 0..=3 {
            let (mean, trace) = enumerate_moments(n, &table, &cfg);
            prop_assert_eq!(mean_position(n, &table, &cfg).unwrap(), mean);
            prop_assert_eq!(walk_trace(n, &table, &cfg).unwrap(), trace);
        }
    }

    #[test]
    fn step_trace_within_pitch_squared(row in row_strategy(), cfg in cfg_strategy()) {
        let table = StepProbabilityTable::new(vec![row]).unwrap();
        let t = step_trace(0, &table, &cfg).unwrap();
        prop_assert!(!t.is_negative());
        prop_assert!(t <= cfg.eps() * cfg.eps());
    }

    #[test]
    fn free_evolution_gives_uniform_motion(row in row_strategy(), cfg in cfg_strategy(), horizon in 1usize..30) {
        let start = StepProbabilityTable::new(vec![row; 1]).unwrap();
        let mut rows = start.rows().to_vec();
        rows.resize(horizon + 1, cylwalk::table::uniform_row());
        let table = evolve_free(&StepProbabilityTable::new(rows).unwrap(), 0, horizon).unwrap();
        let v = velocity(0, &table, &cfg).unwrap();
        for n in 0..=horizon {
            prop_assert_eq!(&velocity(n, &table, &cfg).unwrap(), &v);
            let expected = v.scale(&(cfg.tau() * rational_from_int(n as i64)));
            prop_assert_eq!(mean_position(n, &table, &cfg).unwrap(), expected);
        }
    }

    #[test]
    fn trace_bound_shrinks_with_fixed_total_time(
        row in row_strategy(),
        c in 1i64..5,
        total in 1i64..5,
        n in 1usize..60,
    ) {
        let c = rational_from_int(c);
        let total = rational_from_int(total);
        let bound = |n: usize| {
            let cc = &c * &total;
            &cc * &cc / rational_from_int(n as i64)
        };
        let cfg = LatticeConfig::new(&total / rational_from_int(n as i64), c.clone(), n).unwrap();
        let table = StepProbabilityTable::constant(row, n).unwrap();
        prop_assert!(walk_trace(n, &table, &cfg).unwrap() <= bound(n));
        prop_assert!(bound(n + 1) < bound(n));
    }

    #[test]
    fn recurrence_identity_holds(table in table_strategy(12), cfg in cfg_strategy()) {
        for n in 0..=10 {
            prop_assert!(recurrence_residual(n, &table, &cfg).unwrap().is_zero());
        }
    }

    #[test]
    fn steps_are_independent(
        picks in prop::collection::btree_map(0usize..8, 0u64..7, 2..=4),
        table in table_strategy(8),
    ) {
        let mut arena = EventArena::new();
        let mut joint = arena.universe();
        let mut product = Rational::one();
        for (&n, &j) in &picks {
            let h = arena.hyperplane(n, sym(j));
            joint = arena.intersect(joint, h).unwrap();
            product *= table.prob(n, sym(j)).unwrap();
        }
        prop_assert_eq!(arena.measure(joint, &table).unwrap(), product);
    }

    #[test]
    fn forced_rows_stay_normalised_or_fail(
        row in row_strategy(),
        forces in prop::collection::vec(force_strategy(), 1..20),
        gamma_den in 10i64..500,
    ) {
        let start = StepProbabilityTable::new(vec![row]).unwrap();
        let schedule = ForceSchedule::new(rational_from_ints(1, gamma_den), forces).unwrap();
        match evolve_forced(&start, &schedule) {
            Ok(table) => {
                prop_assert_eq!(table.len(), schedule.len() + 1);
                for r in table.rows() {
                    prop_assert!(r.iter().sum::<Rational>().is_one());
                    prop_assert!(r.iter().all(|p| !p.is_negative() && *p <= Rational::one()));
                }
            }
            Err(cylwalk::Error::ProbabilityOverflow { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn force_is_mass_times_acceleration(
        row in interior_row_strategy(),
        forces in prop::collection::vec(force_strategy(), 1..25),
        cfg in cfg_strategy(),
        gamma_den in 1000i64..5000,
    ) {
        let start = StepProbabilityTable::new(vec![row]).unwrap();
        let schedule = ForceSchedule::new(rational_from_ints(1, gamma_den), forces).unwrap();
        let table = evolve_forced(&start, &schedule);
        prop_assume!(table.is_ok());
        let table = table.unwrap();
        prop_assert!(beta(&cfg, schedule.gamma()).is_positive());
        for n in 0..schedule.len() {
            prop_assert!(newton2_residual(&table, &schedule, &cfg, n).unwrap().is_zero());
        }
    }

    #[test]
    fn constant_force_path_is_parabolic(
        row in interior_row_strategy(),
        force in force_strategy(),
        cfg in cfg_strategy(),
        steps in 0usize..40,
    ) {
        let gamma = rational_from_ints(1, 2000);
        let schedule = ForceSchedule::constant(gamma.clone(), force.clone(), steps).unwrap();
        let start = StepProbabilityTable::new(vec![row.clone()]).unwrap();
        let table = evolve_forced(&start, &schedule);
        prop_assume!(table.is_ok());
        let table = table.unwrap();
        let path = mean_path(steps, &table, &cfg).unwrap();
        for (n, mean) in path.iter().enumerate() {
            prop_assert_eq!(&constant_force_closed_form(&row, &force, &gamma, &cfg, n).unwrap(), mean);
        }
    }
}

#[test]
fn step_mean_matches_outcome_enumeration() {
    let cfg = LatticeConfig::new(rational_from_ints(1, 3), rational_from_ints(3, 2), 1).unwrap();
    let row = cylwalk::table::row_from_weights([2, 3, 1, 4, 0, 5, 1]).unwrap();
    let table = StepProbabilityTable::new(vec![row.clone()]).unwrap();
    let mut mean = Vec3::zero();
    for s in Symbol::all() {
        mean += &step_vector(s, &cfg).vector().scale(&row[s.index()]);
    }
    assert_eq!(step_mean(0, &table, &cfg).unwrap(), mean);
}

#[test]
fn beta_on_three_configurations() {
    for (tau, c, gamma) in [((1, 10), (1, 1), (1, 100)), ((1, 3), (2, 5), (1, 7)), ((5, 2), (7, 3), (2, 9))] {
        let tau = rational_from_ints(tau.0, tau.1);
        let c = rational_from_ints(c.0, c.1);
        let gamma = rational_from_ints(gamma.0, gamma.1);
        let cfg = LatticeConfig::new(tau.clone(), c.clone(), 1).unwrap();
        // τ²/(cτ·γ) simplifies to τ/(cγ)
        assert_eq!(beta(&cfg, &gamma), &tau / (&c * &gamma));
    }
}
