mod common;

use std::fs;

use hopfkirby::center::{
    classify_trace_element, delta_pairing, delta_witness, enumerate_tz, fusion_closed_subsets,
    fusion_coefficients, fusion_rule, in_tz, j_map, omega, omega_inv_closed, sigma, star, vmv,
};
use hopfkirby::cyclo::{qint, CycNum};
use hopfkirby::AlgElem;

#[test]
fn center_dimensions() {
    for (p, dz, dk) in [(5, 7, 3), (7, 10, 4)] {
        let s = common::sl2(p);
        let (h, kb, cb) = (&s.h, &s.kb, &s.cb);
        assert_eq!(cb.dim_z(), dz);
        assert_eq!(cb.dim_k(), dk);
        assert_eq!(cb.dim_zhat(), dz - dk);
        // K(A) = span{P_q, N_j}
        assert!(cb.in_k(h, &kb.p_elems[kb.q as usize]));
        for nj in &kb.n {
            assert!(cb.in_k(h, nj));
        }
        for z in &cb.elements {
            assert!(h.is_central(z));
            assert_eq!(h.antipode(z), *z);
        }
        for (a, row) in cb.gram.iter().enumerate() {
            for (b, x) in row.iter().enumerate() {
                assert_eq!(*x, cb.gram[b][a]);
            }
        }
    }
}

#[test]
fn kerler_basis_table_and_values() {
    for p in [5, 7] {
        let s = common::sl2(p);
        let (h, kb) = (&s.h, &s.kb);
        kb.verify_products(h).unwrap();
        let d = vmv(p);
        for i in 0..kb.q as usize {
            let r = qint(p, 2 * i as i64 + 1);
            assert_eq!(h.lambda(&kb.n_minus[i]), &d * &(&r * &(&r * &r)));
            assert_eq!(kb.n_minus[i], kb.ndot_minus[i].scale(&(&d * &(&r * &r))));
            assert_eq!(h.mul(&kb.p_elems[i], &kb.n_minus[i]), kb.n_minus[i]);
        }
        assert_eq!(kb.n_minus[0], h.integral.scale(&d));
        assert_eq!(kb.ndot_minus[0], h.integral);
        let sum = kb.p_elems.iter().fold(AlgElem::zero(), |acc, x| acc.add(x));
        assert_eq!(sum, h.unit);
        assert_eq!(kb.theta_expansion(), h.ribbon_elements().unwrap().theta);
    }
}

#[test]
fn star_product_laws() {
    let s = common::sl2(5);
    let (h, cb) = (&s.h, &s.cb);
    let e = &cb.elements;
    let lam = &h.integral;
    for a in e {
        assert_eq!(star(h, lam, a).unwrap(), *a);
        assert_eq!(star(h, a, lam).unwrap(), *a);
    }
    let ab: Vec<Vec<AlgElem>> = e.iter().map(|a| e.iter().map(|b| star(h, a, b).unwrap()).collect()).collect();
    for (i, a) in e.iter().enumerate() {
        for (j, b) in e.iter().enumerate() {
            assert!(h.is_central(&ab[i][j]));
            assert!(cb.same_class(h, &ab[i][j], &ab[j][i]));
            let lhs = h.antipode(&ab[i][j]);
            assert_eq!(lhs, star(h, &h.antipode(b), &h.antipode(a)).unwrap());
            for (k, c) in e.iter().enumerate() {
                let l = star(h, &ab[i][j], c).unwrap();
                let r = star(h, a, &ab[j][k]).unwrap();
                assert_eq!(l, r, "associativity at ({i},{j},{k})");
            }
        }
    }
    let not_central = h.basis(1);
    assert!(star(h, &not_central, lam).is_err());
}

#[test]
fn star_on_kerler_classes() {
    for p in [5, 7] {
        let s = common::sl2(p);
        let (h, kb, cb) = (&s.h, &s.kb, &s.cb);
        let q = kb.q as usize;
        assert_eq!(star(h, lam(h), &kb.p_elems[1]).unwrap(), kb.p_elems[1]);
        for i in 0..q {
            for j in 0..q {
                let got = star(h, &kb.ndot_minus[i], &kb.ndot_minus[j]).unwrap();
                let mut expect = AlgElem::zero();
                for k in 0..q {
                    let mut c = CycNum::zero(p);
                    for t in 0..q as i64 {
                        let (ii, jj, kk) = (i as i64, j as i64, k as i64);
                        c += &(&(&omega(p, ii, t) * &omega(p, jj, t)) * &omega_inv_closed(p, t, kk));
                    }
                    expect.add_scaled(&kb.ndot_minus[k], &c);
                }
                assert!(cb.same_class(h, &got, &expect), "p={p} i={i} j={j}");
                let pp = star(h, &kb.p_elems[i], &kb.p_elems[j]).unwrap();
                assert!(cb.in_k(h, &pp));
            }
        }
    }
}

fn lam(h: &hopfkirby::HopfData) -> &AlgElem {
    &h.integral
}

#[test]
fn omega_inverse_closed_form() {
    for p in [5, 7] {
        let q = (p as i64 - 1) / 2;
        for i in 0..q {
            for k in 0..q {
                let mut c = CycNum::zero(p);
                for s in 0..q {
                    c += &(&omega(p, i, s) * &omega_inv_closed(p, s, k));
                }
                assert_eq!(c, CycNum::from_int(p, i64::from(i == k)));
            }
        }
    }
}

#[test]
fn j_operator() {
    for p in [5, 7] {
        let s = common::sl2(p);
        let (h, kb, cb) = (&s.h, &s.kb, &s.cb);
        let gamma = CycNum::from_int(p, (p * p * p) as i64);
        let j1 = j_map(h, &h.unit).unwrap();
        assert!(cb.same_class(h, &j1, &h.integral.scale(&gamma)));
        assert!(cb.same_class(h, &j_map(h, &h.integral).unwrap(), &h.unit));
        // Ĵ([N_i⁻]) = (v−v⁻¹)[2i+1]² Σ_k ([(2i+1)(2k+1)]/[2k+1]) [P_k]
        let d = vmv(p);
        for i in 0..kb.q as i64 {
            let r = qint(p, 2 * i + 1);
            let pre = &d * &(&r * &r);
            let mut expect = AlgElem::zero();
            for k in 0..kb.q as i64 {
                let c = qint(p, (2 * i + 1) * (2 * k + 1)).div(&qint(p, 2 * k + 1)).unwrap();
                expect.add_scaled(&kb.p_elems[k as usize], &(&pre * &c));
            }
            let got = j_map(h, &kb.n_minus[i as usize]).unwrap();
            assert!(cb.same_class(h, &got, &expect), "p={p} i={i}");
        }
        let e = &cb.elements;
        let je: Vec<AlgElem> = e.iter().map(|a| j_map(h, a).unwrap()).collect();
        let gamma_inv = gamma.inverse().unwrap();
        for (a, ja) in e.iter().zip(&je) {
            // J²(a) = S(a) ⋆ J(1)
            let jja = j_map(h, ja).unwrap();
            assert_eq!(jja, star(h, &h.antipode(a), &j1).unwrap());
            for (b, jb) in e.iter().zip(&je) {
                let jab = j_map(h, &star(h, a, b).unwrap()).unwrap();
                assert_eq!(jab, h.mul(ja, jb));
                let j_prod = j_map(h, &h.mul(a, b)).unwrap();
                assert_eq!(j_prod, star(h, ja, jb).unwrap().scale(&gamma_inv));
            }
        }
    }
}

#[test]
fn sigma_values_and_symmetries() {
    let p = 5;
    let s = common::sl2(p);
    let (h, kb, cb) = (&s.h, &s.kb, &s.cb);
    let nd = &kb.ndot_minus;
    let ratio = |i: usize, j: usize, k: usize| {
        sigma(h, &nd[i], &nd[j], &kb.p_elems[k]).unwrap().div(&h.lambda(&nd[k])).unwrap()
    };
    assert!(ratio(1, 1, 0).is_one());
    assert!(ratio(1, 1, 1).is_one());
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                assert!(sigma(h, &kb.p_elems[i], &kb.p_elems[j], &kb.p_elems[k]).unwrap().is_zero());
            }
        }
    }
    for p in [5, 7] {
        let s = common::sl2(p);
        let (h, cb) = (&s.h, &s.cb);
        let e = &cb.elements;
        let se: Vec<AlgElem> = e.iter().map(|x| h.antipode(x)).collect();
        for a in 0..e.len() {
            for b in 0..e.len() {
                for c in 0..e.len() {
                    let base = sigma(h, &e[a], &e[b], &e[c]).unwrap();
                    for (x, y, z) in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                        assert_eq!(sigma(h, &e[x], &e[y], &e[z]).unwrap(), base);
                    }
                    assert_eq!(sigma(h, &se[a], &se[b], &se[c]).unwrap(), base);
                }
            }
        }
    }
    let _ = cb;
}

#[test]
fn fusion_rule_from_sigma() {
    for p in [5u32, 7] {
        let s = common::sl2(p);
        let eps = fusion_coefficients(&s.h, &s.kb).unwrap();
        let q = s.kb.q as usize;
        for i in 0..q {
            for j in 0..q {
                for k in 0..q {
                    assert_eq!(eps[i][j][k], fusion_rule(p, i as u32, j as u32, k as u32));
                    // the four inequalities, written out again
                    let (a, b, c) = (i as i64, j as i64, k as i64);
                    let rule = a + b + c <= p as i64 - 2 && a + b >= c && c + a >= b && c + b >= a;
                    assert_eq!(eps[i][j][k] == 1, rule);
                    // σ_ij^k / λ(Ṅ_k⁻) = Σ_s ω_is ω_js ω⁻¹_sk
                    let mut c = CycNum::zero(p);
                    for t in 0..q as i64 {
                        c += &(&(&omega(p, a, t) * &omega(p, b, t)) * &omega_inv_closed(p, t, k as i64));
                    }
                    assert_eq!(c, CycNum::from_int(p, eps[i][j][k] as i64));
                }
            }
            assert_eq!(eps[0][i], (0..q).map(|s| u8::from(s == i)).collect::<Vec<_>>());
        }
        if p == 7 {
            assert_eq!(eps[1][1][2], 1);
        }
        if p == 5 {
            assert_eq!((eps[1][1][0], eps[1][1][1]), (1, 1));
            assert_eq!(fusion_closed_subsets(&eps), vec![vec![0], vec![0, 1]]);
        }
    }
}

/// `Some(c)` with `[a] = c[b]`.
fn ratio_of_classes(s: &common::Sl2, a: &AlgElem, b: &AlgElem) -> Option<CycNum> {
    let ca = s.cb.class_coords(&s.h, a).unwrap();
    let cb = s.cb.class_coords(&s.h, b).unwrap();
    let k = cb.iter().position(|x| !x.is_zero())?;
    let c = ca[k].div(&cb[k]).unwrap();
    ca.iter().zip(&cb).all(|(x, y)| *x == &c * y).then_some(c)
}

#[test]
fn tz_rays() {
    for p in [5, 7] {
        let s = common::sl2(p);
        let (h, kb, cb) = (&s.h, &s.kb, &s.cb);
        let rays = enumerate_tz(h, kb, cb).unwrap();
        assert_eq!(rays.len(), 4);
        let expected = [
            ("1", h.unit.clone()),
            ("Lambda", h.integral.clone()),
            ("P_0", kb.p_elems[0].clone()),
            ("z_RT", kb.z_rt()),
        ];
        for (name, z) in &expected {
            let (_, got) = rays.iter().find(|(n, _)| n == name).expect(name);
            let c = ratio_of_classes(s, got, z).unwrap_or_else(|| panic!("{name} is not on its ray"));
            assert!(!c.is_zero());
            assert!(in_tz(h, cb, z));
        }
        // a generic combination is not in 𝒯_Z
        assert!(!in_tz(h, cb, &h.unit.add(&h.integral)));
    }
}

#[test]
fn classification_of_trace_elements() {
    for p in [5, 7] {
        let s = common::sl2(p);
        let (h, kb, cb) = (&s.h, &s.kb, &s.cb);
        let rib = h.ribbon_elements().unwrap();
        for (name, z) in s.trace_elements() {
            let r = classify_trace_element(h, cb, &z, None).unwrap();
            assert!(r.in_tz && r.in_t4 && r.in_t3, "{name}");
            let (w, _) = r.t4_witness.clone().unwrap();
            assert!(cb.same_class(h, &h.mul(&z, &w), &h.integral), "{name}");
            let x = r.x_z.clone().unwrap();
            assert_eq!(r.c_plus, h.lambda_mul(&z, &rib.theta));
            assert_eq!(r.c_minus, h.lambda_mul(&z, &rib.theta_inv));
            assert_eq!(x, &r.c_plus * &r.c_minus, "{name}");
            match name {
                "1" => {
                    assert_eq!(x, CycNum::from_int(p, (p * p * p) as i64));
                    assert!(cb.same_class(h, &w, &h.integral));
                }
                "Lambda" => assert!(x.is_one()),
                _ => {}
            }
        }
        // K(A) elements and sums of rays fail
        let r = classify_trace_element(h, cb, &kb.n[0], None).unwrap();
        assert!(!r.in_t4);
        assert!(classify_trace_element(h, cb, &h.basis(1), None).is_err());
    }
}

#[test]
fn delta_pairing_examples() {
    let p = 5;
    let s = common::sl2(p);
    let (h, kb, cb) = (&s.h, &s.kb, &s.cb);
    let e = &cb.elements;
    // δ(w, 1) = 1⊗w − (1⊗w)Δ(1) = 0
    for w in [&kb.p_elems[0], &kb.z_rt(), &h.integral] {
        assert!(delta_witness(h, cb, w, &h.unit).is_none());
        for a in e.iter().step_by(2) {
            assert!(delta_pairing(h, w, &h.unit, a, &e[1], &e[3]).is_zero());
        }
    }
    // the first slot set to 1 does not vanish in general
    assert!(delta_witness(h, cb, &h.unit, &kb.p_elems[0]).is_some());
    let zrt = kb.z_rt();
    assert!(delta_witness(h, cb, &zrt, &zrt).is_none());
    let (a, b, c) = delta_witness(h, cb, &kb.p_elems[1], &kb.p_elems[0]).expect("nonzero pairing");
    let val = delta_pairing(h, &kb.p_elems[1], &kb.p_elems[0], &e[a], &e[b], &e[c]);
    assert!(!val.is_zero());
    // the recorded witness value
    let golden = fs::read_to_string(common::testdata().join("center_p5.txt")).unwrap();
    let line = golden.lines().find(|l| l.starts_with("delta(w=P_1, z=P_0)")).unwrap();
    assert!(line.ends_with(&format!("= {val}")), "{line}");
}

#[test]
fn open_questions_computed() {
    for p in [5, 7] {
        let s = common::sl2(p);
        let (h, kb, cb) = (&s.h, &s.kb, &s.cb);
        let p0z = h.mul(&kb.p_elems[0], &kb.z_rt());
        let c = ratio_of_classes(s, &p0z, &h.integral).unwrap();
        // recorded in the golden file, not assumed
        let golden = fs::read_to_string(common::testdata().join(format!("center_p{p}.txt"))).unwrap();
        let line = golden.lines().find(|l| l.starts_with("[P_0 z_RT] coords")).unwrap();
        let coords: Vec<String> = cb.class_coords(h, &p0z).unwrap().iter().map(|x| format!("[{x}]")).collect();
        assert_eq!(line, format!("[P_0 z_RT] coords {}", coords.join(" ")));
        assert!(c.is_one(), "p={p}: [P_0 z_RT] = {c}[Λ]");
        // λ(z_RT) = Σ_{j<q} [2j+1]²
        let sum = (0..kb.q as i64).fold(CycNum::zero(p), |acc, j| {
            let r = qint(p, 2 * j + 1);
            &acc + &(&r * &r)
        });
        assert_eq!(h.lambda(&kb.z_rt()), sum);
        let line = golden.lines().find(|l| l.starts_with("lambda(z_RT) =")).unwrap();
        assert_eq!(line, format!("lambda(z_RT) = {sum}"));
    }
}
