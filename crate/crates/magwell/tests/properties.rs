use num_complex::Complex64;
use proptest::prelude::*;

use magwell::asymptotics::PhaseData;
use magwell::config::parse_list;
use magwell::grid2d::{self, Lattice, LatticeParams};
use magwell::profile::{MagneticProfile, WellGeometry};
use magwell::report::fmt_float;

fn phase(b1: f64, m_abs_frac: f64, l: f64) -> PhaseData {
    // |M| as a fraction of b1L²/8, so that N = 8|M|/(b1L²) = m_abs_frac < 1.
    let e = b1 * l * l / 8.0;
    PhaseData { b0: 0.5 * b1, b1, l, m_abs: m_abs_frac * e, n: m_abs_frac, delta0: 0.25 }
}

fn data() -> impl Strategy<Value = PhaseData> {
    (0.5..4.0f64, 0.0..0.9f64, 2.0..8.0f64).prop_map(|(b1, n, l)| phase(b1, n, l))
}

fn s() -> impl Strategy<Value = [f64; 2]> {
    (0.0..5.0f64, 0.0..5.0f64).prop_map(|(a, b)| [a, b])
}

proptest! {
    #[test]
    fn floats_round_trip_through_csv_format(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn lists_round_trip(xs in prop::collection::vec(1e-6..10.0f64, 1..8)) {
        let text = xs.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(", ");
        prop_assert_eq!(parse_list(&text).unwrap(), xs);
    }

    #[test]
    fn critical_point_is_stationary(d in data(), s in s()) {
        let z = d.z_minus(s);
        prop_assert!(-1.0 < z && z <= 0.0);
        let g = d.d_psi(s, Complex64::new(0.0, z));
        prop_assert!(g.norm() <= 1e-12 * d.scale() * d.c(s), "{}", g);
    }

    #[test]
    fn second_derivative_is_bounded_below_on_the_real_line(d in data(), s in s(), y in -50.0..50.0f64) {
        let bound = 2.0 * d.scale() * (1.0 - d.n);
        prop_assert!(d.d2_psi(s, Complex64::new(y, 0.0)).re >= bound * (1.0 - 1e-14));
    }

    #[test]
    fn shifted_phase_has_nonnegative_real_part(d in data(), s in s(), y in -50.0..50.0f64) {
        let v = d.psi_shifted(s, y);
        prop_assert!(v.re >= -1e-14 * d.scale());
        let direct = d.psi(s, Complex64::new(y, d.z_minus(s))).unwrap() - d.psi_at_critical(s);
        prop_assert!((v - direct).norm() <= 1e-9 * d.scale() * (1.0 + y * y) * d.c(s));
    }

    #[test]
    fn critical_point_moves_up_with_s(d in data(), s in s()) {
        let dz = d.dz_minus(s);
        prop_assert!(dz > 0.0);
        let eps = 1e-6;
        let fd = (d.z_minus([s[0] + eps, s[1]]) - d.z_minus([s[0] - eps.min(s[0]), s[1]])) / (eps + eps.min(s[0]));
        prop_assert!((fd - dz).abs() <= 1e-5 * dz.abs().max(1e-3), "{fd} vs {dz}");
    }

    #[test]
    fn reduced_phase_forms_agree_and_are_convex(d in data(), s in s()) {
        let f = d.f(s).unwrap();
        let fc = d.f_closed(s);
        prop_assert!((f - fc).abs() <= 1e-12 * d.scale() * d.c(s));
        let [[a, b], [_, c]] = d.hess_f(s);
        prop_assert!(a > 0.0 && a * c - b * b > 0.0);
    }
}

fn small_lattice(h: f64) -> Lattice {
    let p = MagneticProfile::builtin(1.0, 2.0, 1.0, 1.0).unwrap();
    let g = WellGeometry::new(5.0, &p).unwrap();
    Lattice::assemble(h, &p, &g, LatticeParams { half_width: 4.0, dx: 0.25 }).unwrap()
}

fn vector(seed: &[(f64, f64)]) -> Vec<Complex64> {
    seed.iter().map(|&(a, b)| Complex64::new(a, b)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lattice_operator_is_hermitian_in_any_gauge(
        gauge_seed in any::<u64>(),
        xs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 31 * 31),
        ys in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 31 * 31),
    ) {
        let op = small_lattice(1.0);
        let op = op.gauge_transformed(&grid2d::random_gauge(&op, gauge_seed)).unwrap();
        let (x, y) = (vector(&xs), vector(&ys));
        let mut hx = vec![Complex64::default(); x.len()];
        let mut hy = vec![Complex64::default(); y.len()];
        op.apply(&x, &mut hx);
        op.apply(&y, &mut hy);
        let lhs: Complex64 = y.iter().zip(&hx).map(|(a, b)| a.conj() * b).sum();
        let rhs: Complex64 = hy.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn gauge_change_is_a_unitary_conjugation(
        gauge_seed in any::<u64>(),
        xs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 31 * 31),
    ) {
        let op = small_lattice(0.7);
        let chi = grid2d::random_gauge(&op, gauge_seed);
        let moved = op.gauge_transformed(&chi).unwrap();
        let x = vector(&xs);
        let u: Vec<Complex64> = chi.iter().map(|c| Complex64::from_polar(1.0, c / op.h)).collect();
        let ux: Vec<Complex64> = x.iter().zip(&u).map(|(a, b)| a * b).collect();
        let mut hx = vec![Complex64::default(); x.len()];
        let mut h_ux = vec![Complex64::default(); x.len()];
        op.apply(&x, &mut hx);
        moved.apply(&ux, &mut h_ux);
        for k in 0..x.len() {
            prop_assert!((h_ux[k] - u[k] * hx[k]).norm() <= 1e-12 * (1.0 + hx[k].norm()));
        }
    }
}
