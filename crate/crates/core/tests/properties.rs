use gradlocus::exterior::{gamma, pfaffian};
use gradlocus::fields::{left_gradient_field, ScalarField, VectorField};
use gradlocus::geometry::{companion_map, make_form, pseudo_euclidean, standard_symplectic};
use gradlocus::integrability::Side;
use gradlocus::locus::{build_phi, sample_locus, SampleOptions};
use gradlocus::sampling::BoxDomain;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-3.0..3.0f64, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
}

fn point(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-2.0..2.0f64, n).prop_map(DVector::from_vec)
}

const POTENTIALS: [&str; 4] = [
    "x1^3*x2 - 2*x3*x4 + sin(x1*x4)",
    "exp(x1/3)*cos(x2) + x3^2*x4",
    "(x1 + x2 + x3 + x4)^4/24 - x2*x3",
    "log(1 + x1^2 + x2^2)*x3 + x4/(2 + x1^2)",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_coefficients_are_basis_independent(m in matrix(4), b in matrix(4)) {
        let q = (b + DMatrix::identity(4, 4) * 7.0).qr().q();
        let direct = gamma(&m, None).unwrap();
        let rotated = gamma(&m, Some(&q)).unwrap();
        for mask in [0b0011u64, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100] {
            prop_assert!((direct.coeff(mask) - rotated.coeff(mask)).abs() <= 1e-12 * (1.0 + m.norm()));
        }
    }

    #[test]
    fn pfaffian_squares_to_determinant(a in matrix(6)) {
        let anti = &a - a.transpose();
        let pf = pfaffian(&anti).unwrap();
        let det = anti.clone().determinant();
        prop_assert!((pf * pf - det).abs() <= 1e-8 * (det.abs() + 1e-6 * anti.norm().powi(6)));
    }

    #[test]
    fn dual_gradient_matches_finite_differences(k in 0..POTENTIALS.len(), x in point(4)) {
        let f = ScalarField::parse(POTENTIALS[k], 4).unwrap();
        let g = f.gradient(&x).unwrap();
        let h = 1e-6;
        for i in 0..4 {
            let mut up = x.clone();
            let mut down = x.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (f.eval(&up).unwrap() - f.eval(&down).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "{} vs {}", fd, g[i]);
        }
    }

    #[test]
    fn jet_hessian_is_symmetric(k in 0..POTENTIALS.len(), x in point(4)) {
        let f = ScalarField::parse(POTENTIALS[k], 4).unwrap();
        let raw = f.hessian_unsymmetrized(&x).unwrap();
        prop_assert!((&raw - raw.transpose()).amax() <= 1e-12 * (1.0 + raw.amax()));
        let symbolic = f.gradient_field().jacobian(&x).unwrap();
        prop_assert!((&raw - symbolic).amax() <= 1e-10 * (1.0 + raw.amax()));
    }

    #[test]
    fn symmetric_forms_give_one_phi_for_both_sides(k in 0..POTENTIALS.len(), x in point(4)) {
        let pair = companion_map(&pseudo_euclidean(3, 1).unwrap()).unwrap();
        let f = ScalarField::parse(POTENTIALS[k], 4).unwrap();
        let field = VectorField::parse(&["x2", "x1*x3", "sin(x4)", "x1"], 4).unwrap();
        let left = build_phi(&pair, &f, &field, Side::Left).unwrap();
        let right = build_phi(&pair, &f, &field, Side::Right).unwrap();
        prop_assert_eq!(left.phi(&x).unwrap(), right.phi(&x).unwrap());
    }

    #[test]
    fn skew_forms_swap_sides_under_negation(k in 0..POTENTIALS.len(), x in point(4)) {
        let pair = companion_map(&standard_symplectic(2).unwrap()).unwrap();
        let f = ScalarField::parse(POTENTIALS[k], 4).unwrap();
        let field = VectorField::parse(&["x2", "x1*x3", "sin(x4)", "x1"], 4).unwrap();
        let negated = field.linear_map(&(-DMatrix::identity(4, 4))).unwrap();
        let left = build_phi(&pair, &f, &field, Side::Left).unwrap();
        let right = build_phi(&pair, &f, &negated, Side::Right).unwrap();
        prop_assert!((left.phi(&x).unwrap() - right.phi(&x).unwrap()).amax() <= 1e-14);
    }

    #[test]
    fn general_forms_keep_left_gradients_integrable(k in 0..POTENTIALS.len(), x in point(4)) {
        let q = DMatrix::from_row_slice(4, 4, &[
            2.0, 1.0, 0.0, 0.5,
            0.0, 1.0, -1.0, 0.0,
            0.3, 0.0, 1.5, 0.0,
            0.0, 0.2, 0.0, -1.0,
        ]);
        let pair = companion_map(&make_form(q).unwrap()).unwrap();
        let f = ScalarField::parse(POTENTIALS[k], 4).unwrap();
        let field = left_gradient_field(&pair, &f).unwrap();
        let phi = build_phi(&pair, &f, &field, Side::Left).unwrap();
        let r = phi.phi(&x).unwrap().amax();
        prop_assert!(r <= 1e-12 * (1.0 + f.gradient(&x).unwrap().amax()));
        prop_assert!(phi.antisymmetry_transfer(&x).unwrap() <= 1e-10);
    }
}

#[test]
fn sampling_is_reproducible_and_seed_sensitive() {
    let pair = companion_map(&standard_symplectic(2).unwrap()).unwrap();
    let f = ScalarField::parse("x1*x4", 4).unwrap();
    let field = VectorField::parse(&["0", "x1", "x3 - x4", "x4"], 4).unwrap();
    let phi = build_phi(&pair, &f, &field, Side::Left).unwrap();
    let domain = BoxDomain::cube(4, 2.0).unwrap();
    let run = |seed, threads| {
        let opts = SampleOptions { rng_seed: seed, threads, ..Default::default() };
        sample_locus(&phi, &domain, 150, &opts).unwrap()
    };
    let a = run(11, None);
    assert_eq!(a, run(11, Some(1)));
    assert_eq!(a, run(11, Some(3)));
    assert_ne!(a, run(12, None));
    assert!(a.windows(2).all(|w| w[0].x.iter().zip(w[1].x.iter()).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne())
        != Some(std::cmp::Ordering::Greater)));
}
