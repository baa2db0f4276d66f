//! Executable checks of the Hopf, quasitriangular and ribbon axioms.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{AlgElem, HopfData, TensorElem};

/// Which basis tuples the binary and ternary axioms are evaluated on.
#[derive(Clone, Debug)]
pub enum Samples {
    /// Every basis pair and triple.
    All,
    /// `count` pseudo-random basis tuples (fixed seed) plus all generator tuples.
    Sampled { count: usize, seed: u64 },
}

impl Default for Samples {
    fn default() -> Self {
        Samples::Sampled {
            count: 200,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AxiomOutcome {
    pub name: &'static str,
    pub checked: usize,
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct AxiomReport {
    pub outcomes: Vec<AxiomOutcome>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.failure.is_none())
    }

    pub fn failed(&self) -> Vec<&AxiomOutcome> {
        self.outcomes.iter().filter(|o| o.failure.is_some()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&AxiomOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            match &o.failure {
                None => writeln!(f, "{:<28} pass  ({} cases)", o.name, o.checked)?,
                Some(c) => writeln!(f, "{:<28} FAIL  {}", o.name, c)?,
            }
        }
        Ok(())
    }
}

type Check<'a, T> = dyn Fn(&T) -> bool + Sync + 'a;

fn run<T: Sync>(
    name: &'static str,
    cases: &[(String, T)],
    check: &Check<'_, T>,
) -> AxiomOutcome {
    let failure = cases
        .par_iter()
        .find_map_first(|(label, x)| if check(x) { None } else { Some(label.clone()) });
    AxiomOutcome {
        name,
        checked: cases.len(),
        failure,
    }
}

fn single(name: &'static str, ok: bool, what: &str) -> AxiomOutcome {
    AxiomOutcome {
        name,
        checked: 1,
        failure: if ok { None } else { Some(what.to_string()) },
    }
}

fn r13_r23(h: &HopfData) -> TensorElem {
    let mut t = TensorElem::zero(3);
    for (a1, b1) in &h.r_terms {
        for (a2, b2) in &h.r_terms {
            let bb = h.mul(b1, b2);
            t.add_pure(&[a1, a2, &bb], None);
        }
    }
    t
}

fn r13_r12(h: &HopfData) -> TensorElem {
    let mut t = TensorElem::zero(3);
    for (a1, b1) in &h.r_terms {
        for (a2, b2) in &h.r_terms {
            let aa = h.mul(a1, a2);
            t.add_pure(&[&aa, b2, b1], None);
        }
    }
    t
}

/// `R^{21} R = Σ β_i α_j ⊗ α_i β_j`.
pub(crate) fn r21_r(h: &HopfData) -> TensorElem {
    let mut t = TensorElem::zero(2);
    for (ai, bi) in &h.r_terms {
        for (aj, bj) in &h.r_terms {
            let x = h.mul(bi, aj);
            if x.is_zero() {
                continue;
            }
            let y = h.mul(ai, bj);
            t.add_pure(&[&x, &y], None);
        }
    }
    t
}

fn yang_baxter(h: &HopfData) -> bool {
    // R12 R13 R23 = Σ α_iα_j ⊗ β_iα_k ⊗ β_jβ_k
    // R23 R13 R12 = Σ α_jα_i ⊗ α_kβ_i ⊗ β_kβ_j
    let n = h.r_terms.len();
    let side = |left: bool| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut t = TensorElem::zero(3);
                let (ai, bi) = &h.r_terms[i];
                for (aj, bj) in &h.r_terms {
                    let x = if left { h.mul(ai, aj) } else { h.mul(aj, ai) };
                    if x.is_zero() {
                        continue;
                    }
                    for (ak, bk) in &h.r_terms {
                        let y = if left { h.mul(bi, ak) } else { h.mul(ak, bi) };
                        if y.is_zero() {
                            continue;
                        }
                        let z = if left { h.mul(bj, bk) } else { h.mul(bk, bj) };
                        t.add_pure(&[&x, &y, &z], None);
                    }
                }
                t
            })
            .reduce(|| TensorElem::zero(3), |a, b| a.add(&b))
    };
    side(true) == side(false)
}

/// Basis tuples of a fixed length, produced on demand.
struct Tuples<'a> {
    h: &'a HopfData,
    k: usize,
    /// `None` enumerates every basis tuple.
    sampled: Option<Vec<Vec<usize>>>,
    basis_count: usize,
    gen_count: usize,
}

impl<'a> Tuples<'a> {
    fn new(h: &'a HopfData, k: usize, samples: &Samples) -> Self {
        let (sampled, basis_count) = match samples {
            Samples::All => (None, h.dim.pow(k as u32)),
            Samples::Sampled { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let v: Vec<Vec<usize>> = (0..*count)
                    .map(|_| (0..k).map(|_| rng.gen_range(0..h.dim)).collect())
                    .collect();
                (Some(v), *count)
            }
        };
        Tuples {
            h,
            k,
            sampled,
            basis_count,
            gen_count: h.generators.len().pow(k as u32),
        }
    }

    fn len(&self) -> usize {
        self.basis_count + self.gen_count
    }

    fn digits(&self, mut code: usize, base: usize) -> Vec<usize> {
        let mut idx = vec![0; self.k];
        for slot in idx.iter_mut().rev() {
            *slot = code % base;
            code /= base;
        }
        idx
    }

    /// `(is_basis, indices)` of case `i`.
    fn indices(&self, i: usize) -> (bool, Vec<usize>) {
        if i < self.basis_count {
            let idx = match &self.sampled {
                Some(v) => v[i].clone(),
                None => self.digits(i, self.h.dim),
            };
            (true, idx)
        } else {
            (false, self.digits(i - self.basis_count, self.h.generators.len()))
        }
    }

    fn get(&self, i: usize) -> Vec<AlgElem> {
        let (basis, idx) = self.indices(i);
        idx.iter()
            .map(|&j| {
                if basis {
                    self.h.basis(j)
                } else {
                    self.h.generators[j].clone()
                }
            })
            .collect()
    }

    fn label(&self, i: usize) -> String {
        let (basis, idx) = self.indices(i);
        if basis {
            idx.iter()
                .map(|&j| self.h.labels[j].clone())
                .collect::<Vec<_>>()
                .join(", ")
        } else {
            let parts: Vec<String> = idx.iter().map(|j| format!("#{j}")).collect();
            format!("generators {}", parts.join(","))
        }
    }
}

fn run_tuples(
    name: &'static str,
    cases: &Tuples<'_>,
    check: &Check<'_, Vec<AlgElem>>,
) -> AxiomOutcome {
    let failure = (0..cases.len())
        .into_par_iter()
        .find_map_first(|i| if check(&cases.get(i)) { None } else { Some(cases.label(i)) });
    AxiomOutcome {
        name,
        checked: cases.len(),
        failure,
    }
}

/// Evaluate every axiom; failures are reported as data, never as errors.
pub fn axiom_report(h: &HopfData, samples: &Samples) -> AxiomReport {
    let mut outcomes = Vec::new();
    let one = h.one();
    let unit2 = TensorElem::pure(&[&h.unit, &h.unit]);

    let mut unary: Vec<(String, AlgElem)> = (0..h.dim)
        .map(|i| (h.labels[i].clone(), h.basis(i)))
        .collect();
    for (i, g) in h.generators.iter().enumerate() {
        unary.push((format!("generator #{i}"), g.clone()));
    }

    outcomes.push(run("unit", &unary, &|a: &AlgElem| {
        h.mul(&h.unit, a) == *a && h.mul(a, &h.unit) == *a
    }));
    outcomes.push(single(
        "unit-coproduct",
        h.comul(&h.unit) == unit2 && h.counit(&h.unit) == one,
        "Δ(1) ≠ 1⊗1 or ε(1) ≠ 1",
    ));
    outcomes.push(run("counit", &unary, &|a: &AlgElem| {
        let d = h.comul(a);
        h.counit_leg(&d, 0).to_alg() == *a && h.counit_leg(&d, 1).to_alg() == *a
    }));
    outcomes.push(run("coassociativity", &unary, &|a: &AlgElem| {
        let d = h.comul(a);
        h.comul_leg(&d, 0) == h.comul_leg(&d, 1)
    }));
    outcomes.push(run("antipode", &unary, &|a: &AlgElem| {
        let d = h.comul(a);
        let e = h.scalar(&h.counit(a));
        let mut l = AlgElem::zero();
        let mut r = AlgElem::zero();
        for (k, c) in d.iter() {
            let x = h.basis(k[0]);
            let y = h.basis(k[1]);
            l.add_scaled(&h.mul(&h.antipode(&x), &y), c);
            r.add_scaled(&h.mul(&x, &h.antipode(&y)), c);
        }
        l == e && r == e
    }));
    outcomes.push(run("antipode-bijective", &unary, &|a: &AlgElem| {
        h.antipode(&h.antipode_inv(a)) == *a && h.antipode_inv(&h.antipode(a)) == *a
    }));
    outcomes.push(run("antipode-coproduct", &unary, &|a: &AlgElem| {
        let d = h.comul(a);
        let ss = h.map_leg(&h.map_leg(&d, 0, |i| h.antipode(&h.basis(i))), 1, |i| {
            h.antipode(&h.basis(i))
        });
        ss.permute(&[1, 0]) == h.comul(&h.antipode(a))
    }));
    outcomes.push(single(
        "lambda-normalization",
        h.lambda(&h.integral) == one && h.lambda(&h.antipode(&h.integral)) == one,
        "λ(Λ) ≠ 1 or λ(S(Λ)) ≠ 1",
    ));
    outcomes.push(run("integral-two-sided", &unary, &|a: &AlgElem| {
        let e = h.integral.scale(&h.counit(a));
        h.mul(a, &h.integral) == e && h.mul(&h.integral, a) == e
    }));
    outcomes.push(run("right-integral", &unary, &|a: &AlgElem| {
        let d = h.comul(a);
        let mut acc = AlgElem::zero();
        for (k, c) in d.iter() {
            let l = &h.lambda_row[k[0]];
            if !l.is_zero() {
                acc.add_term(k[1], &(c * l));
            }
        }
        acc == h.scalar(&h.lambda(a))
    }));
    outcomes.push(run("left-integral-lambda-s", &unary, &|a: &AlgElem| {
        let d = h.comul(a);
        let mut acc = AlgElem::zero();
        for (k, c) in d.iter() {
            let l = h.lambda(&h.antipode(&h.basis(k[1])));
            if !l.is_zero() {
                acc.add_term(k[0], &(c * &l));
            }
        }
        acc == h.scalar(&h.lambda(&h.antipode(a)))
    }));
    outcomes.push(single(
        "grouplike",
        h.comul(&h.g) == TensorElem::pure(&[&h.g, &h.g])
            && h.mul(&h.g, &h.g_inv) == h.unit
            && h.counit(&h.g) == one,
        "g is not grouplike or g·g⁻¹ ≠ 1",
    ));
    outcomes.push(run("special-grouplike", &unary, &|a: &AlgElem| {
        h.antipode(&h.antipode(a)) == h.mul3(&h.g, a, &h.g_inv)
    }));

    let pairs = Tuples::new(h, 2, samples);
    outcomes.push(run_tuples("comul-multiplicative", &pairs, &|x: &Vec<AlgElem>| {
        h.comul(&h.mul(&x[0], &x[1])) == h.tensor_mul(&h.comul(&x[0]), &h.comul(&x[1]))
    }));
    outcomes.push(run_tuples("counit-multiplicative", &pairs, &|x: &Vec<AlgElem>| {
        h.counit(&h.mul(&x[0], &x[1])) == h.counit(&x[0]) * h.counit(&x[1])
    }));
    outcomes.push(run_tuples("unimodularity", &pairs, &|x: &Vec<AlgElem>| {
        let s2b = h.antipode(&h.antipode(&x[1]));
        h.lambda_mul(&x[0], &x[1]) == h.lambda_mul(&s2b, &x[0])
    }));
    let triples = Tuples::new(h, 3, samples);
    outcomes.push(run_tuples("associativity", &triples, &|x: &Vec<AlgElem>| {
        h.mul(&h.mul(&x[0], &x[1]), &x[2]) == h.mul(&x[0], &h.mul(&x[1], &x[2]))
    }));

    // Quasitriangular structure.
    let r = h.r_tensor();
    outcomes.push(run("qt-a-transposed-coproduct", &unary, &|a: &AlgElem| {
        let d = h.comul(a);
        h.tensor_mul(&d.permute(&[1, 0]), &r) == h.tensor_mul(&r, &d)
    }));
    let mut dr = TensorElem::zero(3);
    let mut rd = TensorElem::zero(3);
    for (a, b) in &h.r_terms {
        dr.add_assign(&h.comul(a).tensor(&TensorElem::from_alg(b)));
        rd.add_assign(&TensorElem::from_alg(a).tensor(&h.comul(b)));
    }
    outcomes.push(single("qt-b", dr == r13_r23(h), "(Δ⊗1)R ≠ R13 R23"));
    outcomes.push(single("qt-c", rd == r13_r12(h), "(1⊗Δ)R ≠ R13 R12"));
    outcomes.push(single("qt-d-yang-baxter", yang_baxter(h), "R12R13R23 ≠ R23R13R12"));
    let r_s1 = {
        let mut t = TensorElem::zero(2);
        for (a, b) in h.r_inv_terms() {
            t.add_pure(&[&a, &b], None);
        }
        t
    };
    let r_1sinv = {
        let mut t = TensorElem::zero(2);
        for (a, b) in &h.r_terms {
            t.add_pure(&[a, &h.antipode_inv(b)], None);
        }
        t
    };
    let r_ss = {
        let mut t = TensorElem::zero(2);
        for (a, b) in &h.r_terms {
            t.add_pure(&[&h.antipode(a), &h.antipode(b)], None);
        }
        t
    };
    outcomes.push(single(
        "qt-e",
        h.tensor_mul(&r, &r_s1) == unit2
            && h.tensor_mul(&r_s1, &r) == unit2
            && h.tensor_mul(&r, &r_1sinv) == unit2
            && r_ss == r,
        "(S⊗1)R, (1⊗S⁻¹)R are not R⁻¹ or (S⊗S)R ≠ R",
    ));
    outcomes.push(single(
        "qt-f",
        h.counit_leg(&r, 0).to_alg() == h.unit && h.counit_leg(&r, 1).to_alg() == h.unit,
        "(ε⊗1)R or (1⊗ε)R ≠ 1",
    ));

    let r21r = r21_r(h);
    match h.ribbon_elements() {
        Err(e) => outcomes.push(single("qt-g", false, &e.to_string())),
        Ok(rib) => {
            let ribc = rib.clone();
            outcomes.push(run("qt-g", &unary, &|a: &AlgElem| {
                h.mul(&ribc.u, a) == h.mul(&h.antipode(&h.antipode(a)), &ribc.u)
            }));
            outcomes.push(single(
                "qt-g-coproduct",
                h.tensor_mul(&h.comul(&rib.u), &r21r) == TensorElem::pure(&[&rib.u, &rib.u]),
                "Δ(u)(R21 R) ≠ u⊗u",
            ));
            let mut bga = AlgElem::zero();
            let mut agb = AlgElem::zero();
            let mut sbag = AlgElem::zero();
            for (a, b) in &h.r_terms {
                bga = bga.add(&h.mul3(b, &h.g, a));
                agb = agb.add(&h.mul3(a, &h.g_inv, b));
                sbag = sbag.add(&h.mul3(&h.antipode(b), a, &h.g_inv));
            }
            outcomes.push(single(
                "ribbon-theta",
                h.is_central(&rib.theta)
                    && rib.theta == bga
                    && rib.theta == agb
                    && rib.theta == h.mul(&rib.u_inv, &h.g),
                "θ is not central or the expressions for θ disagree",
            ));
            outcomes.push(single(
                "ribbon-a",
                h.antipode(&rib.theta) == rib.theta && h.counit(&rib.theta) == one,
                "S(θ) ≠ θ or ε(θ) ≠ 1",
            ));
            outcomes.push(single(
                "ribbon-b",
                h.mul(&rib.theta, &rib.theta_inv) == h.unit && rib.theta_inv == sbag,
                "θ⁻¹ formulas disagree",
            ));
            outcomes.push(single(
                "ribbon-c",
                h.tensor_mul(&h.comul(&rib.theta_inv), &r21r)
                    == TensorElem::pure(&[&rib.theta_inv, &rib.theta_inv]),
                "Δ(θ⁻¹)(R21 R) ≠ θ⁻¹⊗θ⁻¹",
            ));
        }
    }
    AxiomReport { outcomes }
}
