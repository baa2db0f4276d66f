mod common;

use hopfkirby::grpalg::{group_algebra, FiniteGroup};
use hopfkirby::hopf::{axiom_report, Samples};
use hopfkirby::uqsl2::{build_uqsl2, idx};
use hopfkirby::{AlgElem, CycNum, TensorElem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AXIOMS: &[&str] = &[
    "unit",
    "counit",
    "coassociativity",
    "antipode",
    "antipode-bijective",
    "lambda-normalization",
    "integral-two-sided",
    "right-integral",
    "left-integral-lambda-s",
    "special-grouplike",
    "unimodularity",
    "associativity",
    "qt-a-transposed-coproduct",
    "qt-b",
    "qt-c",
    "qt-d-yang-baxter",
    "qt-g",
    "ribbon-a",
    "ribbon-b",
    "ribbon-c",
];

#[test]
fn sl2_p5_all_axioms_on_all_basis_elements() {
    let h = &common::sl2(5).h;
    let r = axiom_report(h, &Samples::All);
    assert!(r.all_passed(), "{r}");
    for name in AXIOMS {
        assert!(r.get(name).is_some(), "axiom {name} not checked");
    }
    assert!(r.get("unit").unwrap().checked >= 125);
}

#[test]
fn sl2_p7_sampled_axioms() {
    let h = &common::sl2(7).h;
    let r = axiom_report(h, &Samples::default());
    assert!(r.all_passed(), "{r}");
}

#[test]
fn group_algebras_pass() {
    for g in [FiniteGroup::cyclic(2), FiniteGroup::cyclic(3), FiniteGroup::symmetric3()] {
        let h = group_algebra(&g, 5).unwrap();
        let r = axiom_report(&h, &Samples::All);
        assert!(r.all_passed(), "{r}");
        assert_eq!(h.lambda(&h.integral), CycNum::one(5));
    }
}

#[test]
fn corrupted_comultiplication_is_caught() {
    let mut h = build_uqsl2(5).unwrap();
    let i = idx(5, 0, 1, 0);
    h.comul_table[i] = h.comul_table[i].scale(&CycNum::from_int(5, -1));
    let r = axiom_report(&h, &Samples::default());
    assert!(!r.all_passed());
    let failed: Vec<&str> = r.failed().iter().map(|o| o.name).collect();
    assert!(failed.contains(&"counit"), "{failed:?}");
}

#[test]
fn structure_map_examples() {
    let h = &common::sl2(5).h;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let unit2 = TensorElem::pure(&[&h.unit, &h.unit]);
    assert_eq!(h.comul_n(&h.unit, 2).unwrap(), unit2);
    assert!(h.comul_n(&h.unit, 0).is_err());
    for _ in 0..20 {
        let a = h.basis(rng.gen_range(0..h.dim));
        assert_eq!(h.mul(&h.unit, &a), a);
        assert_eq!(h.comul_n(&a, 1).unwrap().to_alg(), a);
        let d = h.comul_n(&a, 2).unwrap();
        assert_eq!(h.counit_leg(&d, 0).to_alg(), a);
        // (Δ⊗1)Δ = (1⊗Δ)Δ = Δ²
        let d3 = h.comul_n(&a, 3).unwrap();
        assert_eq!(h.comul_leg(&d, 0), d3);
        assert_eq!(h.comul_leg(&d, 1), d3);
    }
}

#[test]
fn ribbon_element_examples() {
    for p in [5, 7] {
        let h = &common::sl2(p).h;
        let rib = h.ribbon_elements().unwrap();
        assert_eq!(h.counit(&rib.theta), CycNum::one(p));
        assert_eq!(h.antipode(&rib.theta), rib.theta);
        assert_eq!(h.mul(&rib.theta, &rib.theta_inv), h.unit);
        // θ⁻¹ = Σ α_i S(β_i) g
        let mut alt = AlgElem::zero();
        for (a, b) in &h.r_terms {
            alt = alt.add(&h.mul3(a, &h.antipode(b), &h.g));
        }
        assert_eq!(alt, rib.theta_inv);
        // u = Σ S(β_i) α_i and θ = g u⁻¹
        let mut u = AlgElem::zero();
        for (a, b) in &h.r_terms {
            u = u.add(&h.mul(&h.antipode(b), a));
        }
        assert_eq!(u, rib.u);
        assert_eq!(h.mul(&h.g, &rib.u_inv), rib.theta);
        assert!(h.is_central(&rib.theta));
    }
}

#[test]
fn phi_solve_examples() {
    let h = &common::sl2(5).h;
    assert_eq!(h.phi_solve(&h.lambda_row).unwrap(), h.unit);
    assert_eq!(h.phi_solve(&vec![CycNum::zero(5); h.dim]).unwrap(), AlgElem::zero());
    // a random functional is hit exactly
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f: Vec<CycNum> = (0..h.dim).map(|_| CycNum::from_int(5, rng.gen_range(-3..4))).collect();
    let a = h.phi_solve(&f).unwrap();
    for (b, fb) in f.iter().enumerate() {
        assert_eq!(h.lambda_mul(&a, &h.basis(b)), *fb);
    }
}

#[test]
fn lambda_is_s_invariant_on_center() {
    for p in [5, 7] {
        let s = common::sl2(p);
        for z in &s.cb.elements {
            assert_eq!(s.h.lambda(z), s.h.lambda(&s.h.antipode(z)));
        }
    }
}
