use lethargy::lethargy::{normalize_step, StepKind};
use lethargy::{
    build_schedule, check_borodin_condition, construct_prefix, construct_sequence, finite_construct, rho, Chain,
    ConstructOptions, NormSpec, Subspace, TargetSequence, Vector,
};

fn v(x: &[f64]) -> Vector {
    Vector::new(x.to_vec()).unwrap()
}

/// `x* = Σ √(d_k² − d_{k+1}²)·e_{k+1}` on a coordinate chain.
fn hilbert_witness(d: &[f64], m: usize) -> Vec<f64> {
    let mut x = vec![0.0; m];
    for k in 0..d.len() {
        let next = d.get(k + 1).copied().unwrap_or(0.0);
        x[k + 1] = (d[k] * d[k] - next * next).sqrt();
    }
    x
}

fn tail_norm(x: &[f64], k: usize) -> f64 {
    x[k..].iter().map(|t| t * t).sum::<f64>().sqrt()
}

#[test]
fn hilbert_chain_matches_closed_form() {
    let chain = Chain::coordinate(3, 2, NormSpec::L2).unwrap();
    let d = [0.5, 0.2];
    let t = finite_construct(&chain, &TargetSequence::finite(d.to_vec()).unwrap(), &ConstructOptions::default())
        .unwrap();
    let star = hilbert_witness(&d, 3);
    assert!((star[1] - 0.21f64.sqrt()).abs() < 1e-15);
    for k in 1..=2 {
        assert!((tail_norm(&star, k) - d[k - 1]).abs() < 1e-15);
        assert!((tail_norm(t.x.as_slice(), k) - d[k - 1]).abs() <= 1e-6);
    }
    assert!(t.x.as_slice()[0].abs() < 1e-12);
}

#[test]
fn equal_targets_use_the_top_step_only() {
    let chain = Chain::coordinate(5, 4, NormSpec::L2).unwrap();
    let d = TargetSequence::finite(vec![0.7; 4]).unwrap();
    let t = finite_construct(&chain, &d, &ConstructOptions::default()).unwrap();
    assert_eq!(t.x, Vector::unit(5, 4).scaled(0.7));
    assert!(t.step_kinds[..3].iter().all(|k| *k == StepKind::Tie));
}

#[test]
fn residuals_are_within_tolerance_for_every_norm() {
    let cols = [v(&[1.0, 2.0, 0.0, 1.0]), v(&[0.0, 1.0, -1.0, 0.5]), v(&[2.0, 0.0, 1.0, 1.0])];
    let levels: Vec<Subspace> = (1..=3).map(|k| Subspace::span(4, &cols[..k]).unwrap()).collect();
    let d = TargetSequence::finite(vec![0.9, 0.5, 0.2]).unwrap();
    for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
        let norm = NormSpec::new(p).unwrap();
        let chain = Chain::new(norm, levels.clone()).unwrap();
        let t = finite_construct(&chain, &d, &ConstructOptions::default()).unwrap();
        for (k, &dk) in d.values().iter().enumerate() {
            let r = rho(&t.x, chain.level(k + 1).unwrap(), norm, 1e-10).unwrap().value;
            assert!((r - dk).abs() <= 1e-6, "{norm} level {}: {r} vs {dk}", k + 1);
        }
        assert!(t.x.norm(norm) <= 0.9 + 1.0 + 1e-6);
    }
}

#[test]
fn earlier_levels_are_not_disturbed() {
    // adding λ·q_k ∈ Y_{k+1} leaves ρ(·, Y_m) for m > k unchanged
    let chain = Chain::coordinate(5, 4, NormSpec::L1).unwrap();
    let d = TargetSequence::finite(vec![1.0, 0.6, 0.3, 0.1]).unwrap();
    let t = finite_construct(&chain, &d, &ConstructOptions::default()).unwrap();
    let mut x = Vector::zeros(5);
    for k in (1..=4).rev() {
        x = x.add_scaled(t.coefficients[k - 1], &t.step_vectors[k - 1]);
        for m in k + 1..=4 {
            let r = rho(&x, chain.level(m).unwrap(), NormSpec::L1, 1e-9).unwrap().value;
            assert!((r - d.get(m)).abs() <= 2e-7 + 1e-6, "level {m} after step {k}");
        }
    }
}

#[test]
fn rank_zero_first_level_is_accepted() {
    let levels = vec![Subspace::zero(3), Subspace::coordinate(3, 1).unwrap(), Subspace::coordinate(3, 2).unwrap()];
    let chain = Chain::new(NormSpec::LINF, levels).unwrap();
    let d = TargetSequence::finite(vec![0.8, 0.5, 0.25]).unwrap();
    let t = finite_construct(&chain, &d, &ConstructOptions::default()).unwrap();
    assert!((t.x.norm(NormSpec::LINF) - 0.8).abs() <= 1e-6);
    assert!(t.max_residual() <= 1e-6);
}

#[test]
fn polynomial_grid_under_the_max_norm() {
    let m = 32;
    let nodes: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let mono = |j: i32| Vector::new(nodes.iter().map(|t| t.powi(j)).collect()).unwrap();
    let levels: Vec<Subspace> = (0..4)
        .map(|deg| Subspace::span(m, &(0..=deg).map(mono).collect::<Vec<_>>()).unwrap())
        .collect();
    let chain = Chain::new(NormSpec::LINF, levels).unwrap();
    let d = TargetSequence::finite(vec![0.5, 0.3, 0.2]).unwrap();
    let t = finite_construct(&chain, &d, &ConstructOptions::with_tol(1e-5)).unwrap();
    for k in 1..=3 {
        let r = rho(&t.x, chain.level(k).unwrap(), NormSpec::LINF, 1e-9).unwrap().value;
        assert!((r - d.get(k)).abs() <= 1e-5);
    }
}

#[test]
fn step_has_distance_equal_to_its_norm() {
    let levels = vec![Subspace::span(2, &[v(&[1.0, 0.0])]).unwrap()];
    for norm in [NormSpec::L2, NormSpec::L1] {
        let chain = Chain::new(norm, levels.clone()).unwrap();
        let y = normalize_step(&chain, 1).unwrap();
        assert!((y.as_slice()[0]).abs() < 1e-9 && (y.as_slice()[1].abs() - 1.0).abs() < 1e-9, "{y:?}");
    }
}

#[test]
fn tail_sum_condition_examples() {
    let half = check_borodin_condition(&TargetSequence::geometric(vec![0.5], 0.5).unwrap());
    assert!(!half.passes);
    assert!(half.margins.iter().all(|m| *m == 0.0));
    let r = 1.0 / 2.5;
    let g = check_borodin_condition(&TargetSequence::geometric(vec![0.4], r).unwrap());
    assert!(g.passes);
    assert!((g.tail_margin_factor.unwrap() - (1.0 - r / (1.0 - r))).abs() < 1e-15);
    let z = check_borodin_condition(&TargetSequence::finite(vec![1.0, 0.3, 0.1]).unwrap());
    assert!(z.passes && z.n0 == Some(1));
    assert!((z.margins[0] - 0.6).abs() < 1e-15);
}

#[test]
fn schedule_for_one_third() {
    let d = TargetSequence::geometric(vec![1.0], 1.0 / 3.0).unwrap();
    let s = build_schedule(&d, 5).unwrap();
    // d_j = 3^{1−j}: gaps 2·3^{−j} shrink, so τ_j = d_{j−1} − d_j for j ≥ 2
    let expected_tau = [1.0, 2.0 / 3.0, 2.0 / 9.0, 2.0 / 27.0, 2.0 / 81.0];
    for (t, e) in s.tau.iter().zip(expected_tau) {
        assert!((t - e).abs() < 1e-15);
    }
    for n in 1..=5 {
        for j in 1..=n {
            let e = 1.0 + expected_tau[n - 1] * 3f64.powi(j as i32 - 1) / 2f64.powi(j as i32);
            assert!((s.u(n, j) - e).abs() < 1e-14);
        }
    }
    assert!(s.is_sane());
    let ties = build_schedule(&TargetSequence::finite(vec![1.0, 0.5, 0.5, 0.2]).unwrap(), 4).unwrap();
    assert_eq!(&ties.tau[2..], &[0.0, 0.0]);
    assert!(ties.u[3].iter().all(|u| *u == 1.0));
}

#[test]
fn prefix_reproduces_hilbert_distances() {
    let chain = Chain::coordinate(6, 5, NormSpec::L2).unwrap();
    let d = TargetSequence::geometric(vec![1.0], 1.0 / 3.0).unwrap();
    for n in 1..=4 {
        let t = construct_prefix(&chain, &d, n, &ConstructOptions::default()).unwrap();
        for k in 1..=n {
            assert!((tail_norm(t.x.as_slice(), k) - d.get(k)).abs() <= 1e-6, "N = {n}, k = {k}");
        }
        assert!(t.bounds.iter().all(|b| b.loose_ok));
    }
}

#[test]
fn prefix_with_zero_tail_restricts_to_nonzero_levels() {
    let chain = Chain::coordinate(5, 4, NormSpec::L2).unwrap();
    let d = TargetSequence::finite(vec![0.6, 0.2]).unwrap();
    let t = construct_prefix(&chain, &d, 4, &ConstructOptions::default()).unwrap();
    assert_eq!(t.coefficients.len(), 2);
    assert_eq!(t.residuals.len(), 4);
    assert!(t.max_residual() <= 1e-6);
}

#[test]
fn sequence_differences_follow_the_closed_form_tail() {
    let chain = Chain::coordinate(8, 7, NormSpec::L2).unwrap();
    let d = TargetSequence::geometric(vec![1.0], 1.0 / 3.0).unwrap();
    let s = construct_sequence(&chain, &d, 6, &ConstructOptions::default()).unwrap();
    for n in 1..6 {
        let (dn, dn1) = (d.get(n), d.get(n + 1));
        let sn = (dn * dn - dn1 * dn1).sqrt();
        let closed = ((dn - sn).powi(2) + dn1 * dn1).sqrt();
        let sup = s.sup_tail[n - 1].unwrap();
        assert!((sup - closed).abs() <= 1e-6, "N = {n}: {sup} vs {closed}");
    }
    assert_eq!(s.non_increasing, Some(true));
}

#[test]
fn sequence_reports_failed_prefixes_individually() {
    // only two levels below the ambient space: prefixes past N = 3 cannot be built
    let chain = Chain::coordinate(3, 2, NormSpec::L2).unwrap();
    let d = TargetSequence::geometric(vec![1.0], 0.3).unwrap();
    assert!(construct_sequence(&chain, &d, 5, &ConstructOptions::default())
        .map(|s| s.prefixes.iter().any(|p| p.result.is_err()))
        .unwrap_or(true));
}
