mod common;

use common::{joint, problem, rel_err};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qsusc::cli::config::{AxisName, AxisScale, AxisSpec};
use qsusc::cli::table::{Row, Table};
use qsusc::states::{coherent_cutoff, coherent_state_with_tolerance, thermal_state_with_tolerance, QdState};
use qsusc::susceptibility::{chi0, chi1_coherent, chi1_general, chi1_semiclassical};

fn any_float() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>(),
        Just(f64::NAN),
        Just(f64::INFINITY),
        Just(-0.0),
        (-1e3f64..1e3),
        (1e-320f64..1e-300),
    ]
}

fn same_bits(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

fn table(n_axes: usize, n_chan: usize) -> impl Strategy<Value = Table> {
    let row = (
        "[ -~]{0,12}",
        prop::collection::vec(any_float(), n_axes),
        prop::collection::vec(prop::option::of((any_float(), any_float())), n_chan),
        "[A-Za-z+]{1,20}",
        prop_oneof![Just(String::new()), "[A-Za-z]{1,16}"],
    )
        .prop_map(|(series, axes, values, formula, error)| Row { series, axes, values, formula, error });
    prop::collection::vec(row, 0..12).prop_map(move |rows| Table {
        axes: ["detuning", "asymmetry"][..n_axes].iter().map(|s| s.to_string()).collect(),
        channels: (0..n_chan).map(|i| format!("chi1_{}", ["xx", "xy", "zz"][i])).collect(),
        rows,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trips_bit_for_bit(t in (0usize..=2, 1usize..=3).prop_flat_map(|(a, c)| table(a, c))) {
        let text = t.to_csv().unwrap();
        let back = Table::from_csv(&text).unwrap();
        prop_assert_eq!(&back.axes, &t.axes);
        prop_assert_eq!(&back.channels, &t.channels);
        prop_assert_eq!(back.rows.len(), t.rows.len());
        for (r, s) in back.rows.iter().zip(&t.rows) {
            prop_assert_eq!(&r.series, &s.series);
            prop_assert_eq!(&r.formula, &s.formula);
            prop_assert_eq!(&r.error, &s.error);
            prop_assert!(r.axes.iter().zip(&s.axes).all(|(a, b)| same_bits(*a, *b)));
            for (x, y) in r.values.iter().zip(&s.values) {
                match (x, y) {
                    (None, None) => {}
                    (Some((a, b)), Some((c, d))) => prop_assert!(same_bits(*a, *c) && same_bits(*b, *d)),
                    _ => prop_assert!(false, "presence changed"),
                }
            }
        }
        prop_assert_eq!(back.to_csv().unwrap(), text);
    }

    #[test]
    fn axis_grids_hit_both_ends(start in -10.0f64..10.0, span in 1e-3f64..10.0, count in 2usize..50) {
        let a = AxisSpec { name: AxisName::Detuning, start, stop: start + span, count, scale: AxisScale::Linear };
        let v = a.values();
        prop_assert_eq!(v.len(), count);
        prop_assert_eq!(v[0], start);
        prop_assert_eq!(v[count - 1], start + span);
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn truncated_field_states_are_density_matrices(nbar in 0.01f64..6.0, thermal in any::<bool>()) {
        let tol = 1e-8;
        let cutoff = coherent_cutoff(nbar, tol) + 8;
        let fs = if thermal {
            thermal_state_with_tolerance(nbar.min(1.0), cutoff + 30, tol).unwrap()
        } else {
            coherent_state_with_tolerance(nbar, cutoff, tol).unwrap()
        };
        let m = &fs.matrix;
        let trace: C64 = m.diag().sum();
        prop_assert!((trace - 1.0).norm() < 1e-12);
        for i in 0..m.nrows() {
            prop_assert!(m[[i, i]].re >= -1e-15 && m[[i, i]].im.abs() < 1e-15);
            for j in 0..m.ncols() {
                prop_assert!((m[[i, j]] - m[[j, i]].conj()).norm() < 1e-15);
                // Positivity of every 2x2 principal minor.
                prop_assert!(m[[i, j]].norm_sqr() <= m[[i, i]].re * m[[j, j]].re + 1e-14);
            }
        }
    }

    #[test]
    fn emitter_states_respect_positivity(alpha in 0.0f64..=1.0, r in 0.0f64..1.5, phase in 0.0f64..6.3) {
        let bound = (alpha * (1.0 - alpha)).sqrt();
        let beta = C64::from_polar(r * bound, phase);
        let made = QdState::custom(alpha, beta);
        if r <= 1.0 - 1e-9 {
            let m = made.unwrap().matrix();
            prop_assert!((m[[0, 0]] + m[[1, 1]] - 1.0).norm() < 1e-15);
            prop_assert_eq!(m[[0, 1]], m[[1, 0]].conj());
        } else if r > 1.0 + 1e-6 {
            prop_assert!(made.is_err());
        }
    }

    #[test]
    fn diagonal_states_reduce_to_the_semiclassical_response(alpha in 0.0f64..=1.0, det in -0.02f64..0.02, nbar in 0.1f64..4.0) {
        let cutoff = coherent_cutoff(nbar, 1e-10);
        let p = problem(0.0, det, "a", cutoff);
        let fs = coherent_state_with_tolerance(nbar, cutoff, 1e-10).unwrap();
        let m = QdState::custom(alpha, C64::new(0.0, 0.0)).unwrap().matrix();
        let eq = qsusc::states::JointEquilibrium::from_factors(
            qsusc::states::StateRole::Equilibrium, &m, &fs, &p.rates, &p.matter, p.omega()).unwrap();
        let c0 = chi0(&eq, &p);
        let general = chi1_general(&eq, &p, &c0).unwrap();
        let semi = chi1_semiclassical(&m, &p).unwrap();
        if semi.iter().any(|z| z.norm() > 0.0) {
            prop_assert!(rel_err(general.iter(), semi.iter()) < 1e-9);
        } else {
            prop_assert!(general.iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn coherent_closed_form_matches_the_general_one(det in -0.01f64..0.01, nbar in 0.2f64..3.0, a in 0.0f64..1.0) {
        let cutoff = coherent_cutoff(nbar, 1e-12);
        let p = problem(a, det, "c", cutoff);
        let fs = coherent_state_with_tolerance(nbar, cutoff, 1e-12).unwrap();
        let eq = joint("MS", &fs, &p);
        let c0 = chi0(&eq, &p);
        let general = chi1_general(&eq, &p, &c0).unwrap();
        let closed = chi1_coherent(&common::matter("MS"), nbar, &p, &c0).unwrap();
        prop_assert!(rel_err(closed.iter(), general.iter()) < 1e-6);
    }
}
