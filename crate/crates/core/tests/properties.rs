use dispersive_lab::envelope::DyadicSequence;
use dispersive_lab::evolution::propagator;
use dispersive_lab::nonlinearity::EntireSeries;
use dispersive_lab::par::trial_rng;
use dispersive_lab::resonance::{omega, FrequencyTuple};
use dispersive_lab::spectral::{phi_n, random_field, read_spectral_csv, write_spectral_csv, Field, TorusGrid};
use dispersive_lab::symbols::{regularity_params, DispersionSymbol};
use proptest::prelude::*;

fn zero_sum_tuple() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-5000i64..=5000, 2..8).prop_map(|mut v| {
        v.push(-v.iter().sum::<i64>());
        v
    })
}

fn symbol() -> impl Strategy<Value = DispersionSymbol> {
    prop_oneof![
        (1.0f64..=2.0).prop_map(|a| DispersionSymbol::pure(a).unwrap()),
        Just(DispersionSymbol::ilw()),
        Just(DispersionSymbol::smith()),
    ]
}

proptest! {
    #[test]
    fn littlewood_paley_sums_to_one(xi in -1.0e6f64..1.0e6) {
        let total: f64 = std::iter::once(0).chain((0..=21).map(|k| 1u64 << k)).map(|n| phi_n(n, xi)).sum();
        prop_assert!((total - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn omega_is_odd_and_symmetric(v in zero_sum_tuple(), sym in symbol(), shift in 0usize..8) {
        let t = FrequencyTuple::new(v.clone()).unwrap();
        let w = omega(&sym, &t);
        prop_assert_eq!(omega(&sym, &t.negated()), -w);
        let mut p = v.clone();
        let len = p.len();
        p.rotate_left(shift % len);
        p.reverse();
        prop_assert_eq!(omega(&sym, &FrequencyTuple::new(p).unwrap()), w);
    }

    #[test]
    fn propagator_preserves_mass_and_composes(seed in any::<u64>(), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0, sym in symbol()) {
        let g = TorusGrid::new(64).unwrap();
        let u = random_field(g, 31, 0.5, &mut trial_rng(seed, 0));
        let a = propagator(&sym, t1, &u);
        prop_assert!((a.l2_norm() - u.l2_norm()).abs() <= 1e-12 * u.l2_norm().max(1.0));
        let b = propagator(&sym, t2, &a);
        let c = propagator(&sym, t1 + t2, &u);
        prop_assert!(b.max_coeff_diff(&c) <= 1e-10);
    }

    #[test]
    fn spectral_csv_round_trips(seed in any::<u64>(), kmax in 1i64..31) {
        let g = TorusGrid::new(64).unwrap();
        let u = random_field(g, kmax, 1.0, &mut trial_rng(seed, 1));
        let back = read_spectral_csv(&write_spectral_csv(&u)).unwrap();
        prop_assert_eq!(back.coeffs(), u.coeffs());
    }

    #[test]
    fn values_round_trip_through_coefficients(vals in prop::collection::vec(-10.0f64..10.0, 32)) {
        let g = TorusGrid::new(32).unwrap();
        let f = Field::from_values(g, &vals).unwrap();
        for (a, b) in f.values().iter().zip(&vals) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn tame_is_dominated_and_ratio_bounded(
        head in 0.1f64..10.0,
        ratios in prop::collection::vec(1.0f64..6.0, 1..16),
        delta_prime in 1.01f64..4.0,
    ) {
        let mut v = vec![head, head];
        for r in &ratios {
            let last = *v.last().unwrap();
            v.push(last * r);
        }
        let seq = DyadicSequence::new(v).unwrap();
        let t = seq.tame(delta_prime).unwrap();
        let (w, wt) = (seq.values(), t.values());
        for i in 0..w.len() {
            prop_assert!(wt[i] <= w[i]);
        }
        for i in 1..wt.len() - 1 {
            prop_assert!(wt[i] <= wt[i + 1] && wt[i + 1] <= delta_prime * wt[i]);
        }
    }

    #[test]
    fn threshold_lies_between_half_and_three_quarters(alpha in 1.0f64..=2.0) {
        let p = regularity_params(alpha).unwrap();
        prop_assert!(p.s_alpha > 0.5 && p.s_alpha <= 0.75);
        prop_assert!((p.b_alpha - p.beta_alpha - 0.25).abs() < 1e-15);
    }

    #[test]
    fn polynomial_evaluation_matches_horner(c in prop::collection::vec(-3.0f64..3.0, 1..6), x in -2.0f64..2.0) {
        let f = EntireSeries::polynomial(&c).unwrap();
        let direct: f64 = c.iter().rev().fold(0.0, |acc, a| acc * x + a);
        prop_assert!((f.eval_scalar(x).unwrap() - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
    }
}
