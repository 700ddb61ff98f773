use num_complex::Complex64;
use proptest::prelude::*;

use polygin::kernels::{relative_discrepancy, Convention, KernelPath, KernelSpec, PreparedKernel};
use polygin::polyalg::{apply_t, falling, gaussian_inner, pow_u, Coeff, Exact, ExactPoly, Wirtinger};
use polygin::sampler::Sampler;
use polygin::statistics::{build_gk, k_statistics};
use polygin::theory::{h1_seminorm, h_half_seminorm, parse, DiskGrid, TestFunction};

fn analytic(coeffs: &[i64]) -> ExactPoly {
    let mut f = ExactPoly::zero(1);
    for (d, &c) in coeffs.iter().enumerate() {
        f = f.add(&ExactPoly::term(1, &[(d as u16, 0)], Exact::from_ratio(c, 1)).unwrap());
    }
    f
}

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("re".to_string()),
        Just("im".to_string()),
        Just("abs2".to_string()),
        (0u32..5).prop_map(|k| format!("harm({k})")),
        (1u32..8, 1u32..4).prop_map(|(a, b)| format!("bump({}, {})", a as f64 / 10.0, b as f64 / 10.0)),
        prop::collection::vec(-3i32..4, 1..4)
            .prop_map(|p| format!("rad({})", p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))),
        (-20i32..20).prop_map(|v| format!("{}", v as f64 / 4.0)),
    ]
}

fn expression() -> impl Strategy<Value = String> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} + {b}")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("({a})*({b})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lowering_identity(coeffs in prop::collection::vec(-9i64..10, 1..8), n in 1u32..6, r in 0u32..5) {
        let f = analytic(&coeffs);
        let mut lowered = apply_t(&f, n, r).unwrap();
        for j in 0..=r {
            if j > 0 {
                lowered = lowered.wirtinger(0, Wirtinger::Dbar);
            }
            let want = apply_t(&f, n, r - j).unwrap().scale(&(falling::<Exact>(r, j) * pow_u::<Exact>(n, j)));
            prop_assert_eq!(&lowered, &want);
        }
    }

    #[test]
    fn raising_is_isometric_up_to_constant(coeffs in prop::collection::vec(-9i64..10, 1..7), n in 1u32..5, r in 0u32..4) {
        let f = analytic(&coeffs);
        let tf = apply_t(&f, n, r).unwrap();
        let lhs = gaussian_inner(&tf, &tf, n).unwrap();
        let rhs = gaussian_inner(&f, &f, n).unwrap() * pow_u::<Exact>(n, r) * falling::<Exact>(r, r);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn product_rule_for_wirtinger(a in prop::collection::vec(-5i64..6, 1..4), b in prop::collection::vec(-5i64..6, 1..4), n in 1u32..4) {
        let p = apply_t(&analytic(&a), n, 1).unwrap();
        let q = analytic(&b).conj().add(&analytic(&a));
        for which in [Wirtinger::D, Wirtinger::Dbar] {
            let lhs = p.mul(&q).unwrap().wirtinger(0, which);
            let rhs = p.wirtinger(0, which).mul(&q).unwrap().add(&p.mul(&q.wirtinger(0, which)).unwrap());
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn kernel_is_hermitian_and_paths_agree(
        n in 1u32..30, q in 1u32..4, pure in any::<bool>(),
        zr in 0.0f64..1.4, zt in 0.0f64..6.3, wr in 0.0f64..1.4, wt in 0.0f64..6.3,
    ) {
        let spec = if pure { KernelSpec::pure(n, q).unwrap() } else { KernelSpec::full(n, q).unwrap() };
        let pk = PreparedKernel::new(spec, true).unwrap();
        let z = Complex64::from_polar(zr, zt);
        let w = Complex64::from_polar(wr, wt);
        let a = pk.eval(z, w, KernelPath::Basis, Convention::Weighted).unwrap();
        let b = pk.eval(w, z, KernelPath::Basis, Convention::Weighted).unwrap();
        let (dz, dw) = (pk.intensity(zr), pk.intensity(wr));
        prop_assert!((a - b.conj()).norm() <= 1e-12 * (dz * dw).sqrt().max(1.0));
        prop_assert!(a.norm() <= (dz * dw).sqrt() * (1.0 + 1e-9) + 1e-300);
        for path in [KernelPath::Explicit, KernelPath::Raising] {
            let c = pk.eval(z, w, path, Convention::Weighted).unwrap();
            prop_assert!(relative_discrepancy(a, c, dz, dw) < 1e-9);
        }
    }

    #[test]
    fn parser_round_trips(src in expression()) {
        let e = parse(&src).unwrap();
        let printed = e.to_string();
        prop_assert_eq!(parse(&printed).unwrap(), e);
    }

    #[test]
    fn seminorms_scale_quadratically(src in expression(), c in -3.0f64..3.0) {
        let g = TestFunction::parse(&src).unwrap();
        let s = g.scaled(c);
        let grid = DiskGrid::for_function(&g);
        let (h, hs) = (h1_seminorm(&g, &grid), h1_seminorm(&s, &grid));
        prop_assert!((hs - c * c * h).abs() <= 1e-9 * (c * c * h).abs().max(1e-12));
        let modes = (4 * g.max_mode().max(1) as usize).next_power_of_two().max(512);
        if let (Ok(b), Ok(bs)) = (h_half_seminorm(&g, modes), h_half_seminorm(&s, modes)) {
            prop_assert!((bs - c * c * b).abs() <= 1e-9 * (c * c * b).abs().max(1e-12));
        }
    }

    #[test]
    fn gk_vanishes_on_the_diagonal(k in 2usize..5, v in -5.0f64..5.0) {
        for gk in [build_gk(k).unwrap(), build_gk(k).unwrap().symmetrized()] {
            let val = gk.eval(&vec![v; k]);
            prop_assert!(val.abs() <= 1e-10 * v.abs().powi(k as i32).max(1.0));
        }
    }

    #[test]
    fn kstatistics_shift_and_scale(x in prop::collection::vec(-10.0f64..10.0, 6..60), shift in -50.0f64..50.0, scale in 0.2f64..5.0) {
        let a = k_statistics(&x).unwrap();
        let y: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let b = k_statistics(&y).unwrap();
        prop_assert!((b.get(1) - (scale * a.get(1) + shift)).abs() <= 1e-9 * (1.0 + b.get(1).abs()));
        for j in 2..=4 {
            let want = scale.powi(j as i32) * a.get(j);
            let tol = 1e-7 * (1.0 + scale.powi(j as i32) * (0..x.len()).map(|i| x[i].abs()).fold(0.0, f64::max).powi(j as i32));
            prop_assert!((b.get(j) - want).abs() <= tol, "j={} {} {}", j, b.get(j), want);
        }
        prop_assert!(a.get(2) >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sampler_is_deterministic_with_exact_cardinality(seed in any::<u64>(), n in 1u32..12, q in 1u32..4, pure in any::<bool>()) {
        let spec = if pure { KernelSpec::pure(n, q).unwrap() } else { KernelSpec::full(n, q).unwrap() };
        let s = Sampler::new(spec).unwrap();
        let a = s.sample(seed).unwrap();
        prop_assert_eq!(a.points.len(), spec.dimension());
        prop_assert_eq!(&a, &s.sample(seed).unwrap());
        prop_assert!(a.points.iter().all(|z| z.norm() <= spec.r_max()));
    }
}
