use lethargy::functionals::{
    kernel_distance_identity_check, limit_expression, limit_value, norm_attainment_check, norming_functional,
    Functional,
};
use lethargy::{rho, NormSpec, Subspace, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(x: &[f64]) -> Vector {
    Vector::new(x.to_vec()).unwrap()
}

#[test]
fn limit_formula_examples() {
    let q = Subspace::zero(2);
    let (e1, e2) = (v(&[1.0, 0.0]), v(&[0.0, 1.0]));
    let g = limit_expression(&e2, &e1, &q, NormSpec::L2, 10.0).unwrap();
    assert!((g - (10.0 - 101f64.sqrt())).abs() < 1e-14);
    for a in [2.0, 3.5, 100.0] {
        assert!((limit_expression(&v(&[2.0, 0.0]), &e1, &q, NormSpec::L2, a).unwrap() - 2.0).abs() < 1e-13);
    }
    assert!(limit_value(&e2, &e1, &q, NormSpec::L2, 1e-10).unwrap().abs() < 1e-6);
    assert!((limit_value(&v(&[3.0, 1.0]), &e1, &q, NormSpec::L2, 1e-10).unwrap() - 3.0).abs() < 1e-6);
    let q3 = Subspace::span(3, &[v(&[0.0, 0.0, 1.0])]).unwrap();
    let lv = limit_value(&v(&[0.0, 1.0, 0.0]), &v(&[1.0, 0.0, 0.0]), &q3, NormSpec::L2, 1e-10).unwrap();
    assert!(lv.abs() < 1e-6);
}

#[test]
fn limit_lies_between_the_two_sided_bounds() {
    // for q ∈ Q, α real: −‖q+αx1+x2‖/ρ(x1,Q) − α ≤ lim g ≤ ‖q+αx1+x2‖/ρ(x1,Q) − α
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for norm in [NormSpec::L1, NormSpec::L2, NormSpec::new(3.0).unwrap(), NormSpec::LINF] {
        for _ in 0..10 {
            let m = rng.gen_range(3..=5);
            let mut rv = || v(&(0..m).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
            let q = Subspace::span(m, &[rv()]).unwrap();
            let (x1, x2) = (rv(), rv());
            let r1 = rho(&x1, &q, norm, 1e-12).unwrap().value;
            let lim = limit_value(&x2, &x1, &q, norm, 1e-10).unwrap();
            for _ in 0..5 {
                let alpha = rng.gen_range(-3.0..3.0);
                let shift = q.combine(&[rng.gen_range(-3.0..3.0)]);
                let n = shift.add_scaled(alpha, &x1).add_scaled(1.0, &x2).norm(norm);
                assert!(lim <= n / r1 - alpha + 1e-6, "{norm}");
                assert!(lim >= -n / r1 - alpha - 1e-6, "{norm}");
            }
        }
    }
}

#[test]
fn norming_functional_examples() {
    let e1 = v(&[1.0, 0.0]);
    let f = norming_functional(&e1, &Subspace::zero(2), NormSpec::L2, None).unwrap();
    assert!(f.dual_vector().sub(&e1).norm(NormSpec::L2) < 1e-12);
    let f = norming_functional(&e1, &Subspace::zero(2), NormSpec::L2, Some(&v(&[0.0, 1.0]))).unwrap();
    assert!(f.apply(&v(&[0.0, 1.0])).abs() < 1e-8);
    let q = Subspace::span(3, &[v(&[1.0, 1.0, 0.0])]).unwrap();
    let f = norming_functional(&v(&[1.0, 0.0, 0.0]), &q, NormSpec::L2, None).unwrap();
    assert!(f.apply(&v(&[1.0, 1.0, 0.0])).abs() < 1e-12);
    assert!((f.apply(&v(&[1.0, 0.0, 0.0])) - 1.0).abs() < 1e-12);
    assert!((f.dual_norm_value() - 2f64.sqrt()).abs() < 1e-8);
}

#[test]
fn norming_functional_in_polyhedral_norms() {
    let q = Subspace::span(3, &[v(&[1.0, 2.0, 0.0])]).unwrap();
    let x1 = v(&[0.0, 1.0, 1.0]);
    for norm in [NormSpec::L1, NormSpec::LINF] {
        let f = norming_functional(&x1, &q, norm, None).unwrap();
        let r1 = rho(&x1, &q, norm, 1e-12).unwrap().value;
        assert!(f.apply(&v(&[1.0, 2.0, 0.0])).abs() < 1e-8);
        assert!((f.apply(&x1) - 1.0).abs() < 1e-8);
        assert!((f.dual_norm_value() * r1 - 1.0).abs() < 1e-7, "{norm}");
    }
}

#[test]
fn attainment_and_kernel_identity() {
    let f = Functional::new(v(&[1.0, 0.0]), NormSpec::L2);
    assert!(norm_attainment_check(&f, &v(&[1.0, 0.0]), NormSpec::L2, 1e-12));
    assert!(!norm_attainment_check(&f, &v(&[0.0, 1.0]), NormSpec::L2, 1e-12));
    let g = Functional::new(v(&[1.0, 1.0]), NormSpec::L2);
    let s = 0.5f64.sqrt();
    assert!(norm_attainment_check(&g, &v(&[s, s]), NormSpec::L2, 1e-12));

    assert!(kernel_distance_identity_check(&f, &v(&[2.0, 5.0]), NormSpec::L2, 1e-9).unwrap());
    assert!(kernel_distance_identity_check(&f, &v(&[0.0, 7.0]), NormSpec::L2, 1e-9).unwrap());
    let g1 = Functional::new(v(&[1.0, 1.0]), NormSpec::L1);
    assert!((g1.dual_norm_value() - 1.0).abs() < 1e-15);
    assert!(kernel_distance_identity_check(&g1, &v(&[1.0, 0.0]), NormSpec::L1, 1e-9).unwrap());
}
