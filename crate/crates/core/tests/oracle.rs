//! Estimator values checked against dense eigensolves of finite compressions
//! and against the closed form for free families.

mod common;

use common::*;
use cstar_core::dynamics::{averaging_decay_report, verify_panalytic, DEFAULT_SLACK};
use cstar_core::{ActionSpace, CayleySpace, FormalOperator, GroupElement, NormBudget, Presentation, Verdict};
use num_complex::Complex64;

// Frozen compression norms: (J, depth, value).
const FREE_COMPRESSIONS: [(usize, usize, f64); 3] =
    [(2, 5, 0.9659258262890684), (3, 4, 0.8538509376029432), (4, 3, 0.7333804979112134)];

#[test]
fn compression_oracle_is_reproducible() {
    let p = Presentation::f2();
    let (a, b) = (p.parse("a").unwrap(), p.parse("b").unwrap());
    for (j, depth, frozen) in FREE_COMPRESSIONS {
        let value = compression_oracle(&p, &uniform_average(&p, &a, &b, j), depth);
        assert!((value - frozen).abs() < 1e-9, "J={j}: {value}");
        assert!(value <= free_family_norm(j) + 1e-12);
    }
    // J=1 is a single unitary: every compression containing e sees norm 1.
    assert!((compression_oracle(&p, &uniform_average(&p, &a, &b, 1), 2) - 1.0).abs() < 1e-12);
}

#[test]
fn free_family_estimates_between_oracles() {
    let p = Presentation::f2();
    let space = CayleySpace::new(p.clone());
    let (a, b) = (p.parse("a").unwrap(), p.parse("b").unwrap());
    let report = verify_panalytic(&space, &a, &b, 4, 2.0, DEFAULT_SLACK, &NormBudget::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Pass);
    for (j, _, compression) in FREE_COMPRESSIONS {
        let estimate = report.rows[j - 1].estimate.lower_bound;
        let exact = free_family_norm(j);
        assert!(estimate <= exact + 1e-9, "J={j}: {estimate} above {exact}");
        assert!(estimate >= compression, "J={j}: {estimate} below compression {compression}");
        assert!(estimate >= 0.85 * exact);
    }
    assert_eq!(report.rows[0].estimate.lower_bound, 1.0);
}

#[test]
fn averaging_residual_matches_free_family() {
    // M_4(2e + a) − 2e = (1/4)Σ b⁻ʲabʲ, the J = 4 free family.
    let p = Presentation::f2();
    let space = CayleySpace::new(p.clone());
    let t = FormalOperator::parse(&p, "2@e; 1@a").unwrap();
    let b = p.parse("b").unwrap();
    let r = averaging_decay_report(&space, &t, &b, &[4], 2.0, DEFAULT_SLACK, &NormBudget::default()).unwrap();
    let estimate = r.rows[0].estimate.lower_bound;
    assert!(estimate >= FREE_COMPRESSIONS[2].2 && estimate <= free_family_norm(4) + 1e-9);
    assert_eq!(r.rows[0].bound, 1.0);
}

#[test]
fn finite_order_compression_stays_large() {
    let m = Presentation::modular();
    let space = CayleySpace::new(m.clone());
    let (s, t) = (m.parse("s").unwrap(), m.parse("t").unwrap());
    let ball = space.enumerate_ball(&GroupElement::identity(), 8).unwrap();
    for j in [5, 16, 26, 32] {
        let terms = uniform_average(&m, &t, &s, j);
        assert_eq!(terms.len(), 2);
        let value = compression_norm(&m, &terms, &ball);
        assert!(value > 0.95, "J={j}: {value}");
        assert!(value > 2.0 / (j as f64).sqrt() || j < 5);
    }
    let report = verify_panalytic(&space, &t, &s, 32, 2.0, DEFAULT_SLACK, &NormBudget::default()).unwrap();
    for row in &report.rows {
        let terms: Vec<(GroupElement, Complex64)> = row.operator.iter().map(|(g, c)| (g.clone(), *c)).collect();
        let oracle = compression_norm(&m, &terms, &ball);
        assert!(row.estimate.lower_bound >= oracle - 1e-9, "J={}", row.j);
    }
}
