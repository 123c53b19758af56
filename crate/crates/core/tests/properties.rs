use std::sync::Arc;

use mjds::history::norm;
use mjds::{
    build_sat_system, simulate_ensemble, DelayModel, DelayVector, History, InitialMode,
    SatSystemSpec, Tpm,
};
use proptest::prelude::*;

fn linear_model(delta: usize) -> DelayModel {
    let f = |args: &[&[f64]], out: &mut [f64]| {
        out[0] = 0.5 * args[0][0] - 0.25 * args[1][1];
        out[1] = args[1][0].sin() + 0.1 * args[0][1];
    };
    let alphabet = (0..=delta).map(DelayVector::scalar).collect();
    DelayModel::new("linear", 2, 1, delta, Arc::new(f), alphabet).unwrap()
}

fn history_strategy() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (1usize..6).prop_flat_map(|delta| {
        (
            Just(delta),
            proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 2), delta + 1),
        )
    })
}

proptest! {
    #[test]
    fn theta_indexing_round_trips((delta, slots) in history_strategy()) {
        let h = History::from_slots(&slots).unwrap();
        for theta in -(delta as isize)..=0 {
            let row = h.row_of(theta);
            prop_assert_eq!(row as isize, delta as isize + theta);
            prop_assert_eq!(h.at(theta), slots[row].as_slice());
            prop_assert_eq!(h.lagged((-theta) as usize), h.at(theta));
        }
    }

    #[test]
    fn lift_shifts_and_appends((delta, slots) in history_strategy(), pick in 0usize..6) {
        let model = linear_model(delta);
        let h = History::from_slots(&slots).unwrap();
        let before = h.clone();
        let d = DelayVector::scalar(pick % (delta + 1));
        let next = model.lift_step(&h, &d).unwrap();
        prop_assert_eq!(&h, &before);
        prop_assert_eq!(&next, &model.lift_step(&h, &d).unwrap());
        for lag in 0..delta {
            prop_assert_eq!(next.lagged(lag + 1), h.lagged(lag));
        }
        let raw = model.raw_step(&h, &d).unwrap();
        prop_assert_eq!(next.current(), raw.as_slice());

        let mut reused = History::zeros(delta, 2);
        model.lift_step_into(&h, &d, &mut reused).unwrap();
        prop_assert_eq!(&reused, &next);
    }

    #[test]
    fn sup_norm_is_attained_maximum((_, slots) in history_strategy()) {
        let h = History::from_slots(&slots).unwrap();
        let sup = h.sup_norm();
        prop_assert!(slots.iter().all(|s| norm(s) <= sup));
        prop_assert!(slots.iter().any(|s| norm(s) == sup));
    }

    #[test]
    fn tpm_row_sums(a in 0.0f64..1.0, eps in 1e-10f64..1e-3) {
        prop_assert!(Tpm::new(vec![vec![a, 1.0 - a], vec![0.5, 0.5]]).is_ok());
        prop_assert!(Tpm::new(vec![vec![a, 1.0 - a + eps], vec![0.5, 0.5]]).is_err());
    }
}

#[test]
fn ensemble_is_independent_of_thread_count() {
    let sys = build_sat_system(&SatSystemSpec::new(1.1, 0.9, 0.2)).unwrap();
    let xi0 = History::scalar(&[0.3, -1.5, 2.0]).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_ensemble(&sys, &xi0, InitialMode::Uniform, 50, 777, 11).unwrap())
    };
    let one = run(1);
    for t in [2, 3, 8] {
        assert_eq!(one, run(t));
    }
}

#[test]
fn ensemble_changes_with_seed() {
    let sys = build_sat_system(&SatSystemSpec::new(1.1, 0.9, 0.2)).unwrap();
    let xi0 = History::constant(2, &[1.0]);
    let a = simulate_ensemble(&sys, &xi0, InitialMode::Uniform, 20, 100, 1).unwrap();
    let b = simulate_ensemble(&sys, &xi0, InitialMode::Uniform, 20, 100, 2).unwrap();
    assert_ne!(a.mean_sq, b.mean_sq);
}
