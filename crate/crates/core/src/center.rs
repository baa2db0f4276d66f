//! The center `Z(A)`, the null space `K(A)` of the λ-pairing and the quotient
//! `Ẑ(A)`; the star product, `J`, the triple form `σ`; the Kerler basis of the
//! sl(2) center, fusion coefficients and the classification of trace elements.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::cyclo::{qfact, qint, CycNum};
use crate::hopf::{AlgElem, HopfData, HopfError, TensorElem};
use crate::linalg::{self, Rref, SparseRow};
use crate::uqsl2::{idx, q_of};

#[derive(Debug, Error)]
pub enum CenterError {
    #[error("element is not central: {0}")]
    NotCentral(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
    #[error("operation needs the quantum sl(2) algebra")]
    NotSl2,
    #[error(transparent)]
    Hopf(#[from] HopfError),
}

fn require_central(h: &HopfData, a: &AlgElem, what: &str) -> Result<(), CenterError> {
    if h.is_central(a) {
        Ok(())
    } else {
        Err(CenterError::NotCentral(what.to_string()))
    }
}

/// A basis of `Z(A)` with the λ-pairing and a chosen basis of `Ẑ(A)`.
#[derive(Clone, Debug)]
pub struct CenterBasis {
    pub elements: Vec<AlgElem>,
    /// `gram[a][b] = λ(z_a z_b)`.
    pub gram: Vec<Vec<CycNum>>,
    pub k_basis: Vec<AlgElem>,
    /// Representatives whose classes form the chosen basis of `Ẑ(A)`.
    pub class_basis: Vec<AlgElem>,
    pub class_labels: Vec<String>,
    /// `class_rows[k][y] = λ(B_k · elements[y])`.
    class_rows: Vec<Vec<CycNum>>,
}

/// Null space of `x ↦ (x g − g x)_g` over the given generators.
pub fn compute_center(h: &HopfData, generators: &[AlgElem]) -> CenterBasis {
    let mut rref = Rref::new(h.dim);
    for g in generators {
        let cols: Vec<AlgElem> = (0..h.dim)
            .into_par_iter()
            .map(|j| h.commutator(&h.basis(j), g))
            .collect();
        let mut rows = vec![SparseRow::new(); h.dim];
        for (j, c) in cols.iter().enumerate() {
            for (i, x) in c.iter() {
                rows[i].insert(j, x.clone());
            }
        }
        for r in rows.into_iter().filter(|r| !r.is_empty()) {
            rref.push(r);
        }
    }
    let elements: Vec<AlgElem> = rref.nullspace(h.p).iter().map(AlgElem::from_row).collect();
    CenterBasis::from_elements(h, elements)
}

impl CenterBasis {
    pub fn from_elements(h: &HopfData, elements: Vec<AlgElem>) -> Self {
        let n = elements.len();
        let gram: Vec<Vec<CycNum>> = (0..n)
            .into_par_iter()
            .map(|a| (0..n).map(|b| h.lambda_mul(&elements[a], &elements[b])).collect())
            .collect();
        let gram_rows: Vec<SparseRow> = gram
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(i, x)| (i, x.clone()))
                    .collect()
            })
            .collect();
        let k_basis = Rref::from_rows(n, gram_rows.clone())
            .nullspace(h.p)
            .iter()
            .map(|v| {
                let mut acc = AlgElem::zero();
                for (i, c) in v {
                    acc.add_scaled(&elements[*i], c);
                }
                acc
            })
            .collect();
        let mut sel = Rref::new(n);
        let mut class_basis = Vec::new();
        let mut class_labels = Vec::new();
        for (i, row) in gram_rows.into_iter().enumerate() {
            if sel.push(row) {
                class_basis.push(elements[i].clone());
                class_labels.push(format!("z{i}"));
            }
        }
        let mut cb = CenterBasis {
            elements,
            gram,
            k_basis,
            class_basis: Vec::new(),
            class_labels: Vec::new(),
            class_rows: Vec::new(),
        };
        cb.set_class_basis(h, class_basis, class_labels)
            .expect("greedy class basis is independent");
        cb
    }

    pub fn dim_z(&self) -> usize {
        self.elements.len()
    }

    pub fn dim_k(&self) -> usize {
        self.k_basis.len()
    }

    pub fn dim_zhat(&self) -> usize {
        self.dim_z() - self.dim_k()
    }

    /// λ(z · y) for every center basis element `y`.
    pub fn functional(&self, h: &HopfData, z: &AlgElem) -> Vec<CycNum> {
        self.elements.iter().map(|y| h.lambda_mul(z, y)).collect()
    }

    /// Replace the class basis; the classes must form a basis of `Ẑ(A)`.
    pub fn set_class_basis(
        &mut self,
        h: &HopfData,
        basis: Vec<AlgElem>,
        labels: Vec<String>,
    ) -> Result<(), CenterError> {
        let rows: Vec<Vec<CycNum>> = basis.par_iter().map(|b| self.functional(h, b)).collect();
        let sparse: Vec<SparseRow> = rows.iter().map(|r| dense_to_sparse(r)).collect();
        let rank = Rref::from_rows(self.dim_z(), sparse).rank();
        if basis.len() != self.dim_zhat() || rank != basis.len() {
            return Err(CenterError::Consistency(format!(
                "{} classes of rank {rank} do not form a basis of a {}-dimensional quotient",
                basis.len(),
                self.dim_zhat()
            )));
        }
        self.class_basis = basis;
        self.class_labels = labels;
        self.class_rows = rows;
        Ok(())
    }

    /// Coordinates of `[z]` in the class basis.
    pub fn class_coords(&self, h: &HopfData, z: &AlgElem) -> Result<Vec<CycNum>, CenterError> {
        self.coords_of_functional(h.p, &self.functional(h, z))
    }

    fn coords_of_functional(&self, p: u32, f: &[CycNum]) -> Result<Vec<CycNum>, CenterError> {
        let nc = self.class_basis.len();
        let rows: Vec<SparseRow> = (0..self.dim_z())
            .map(|y| {
                (0..nc)
                    .filter(|&k| !self.class_rows[k][y].is_zero())
                    .map(|k| (k, self.class_rows[k][y].clone()))
                    .collect()
            })
            .collect();
        match linalg::solve(p, &rows, f, nc) {
            Some((x, _)) => Ok((0..nc)
                .map(|k| x.get(&k).cloned().unwrap_or_else(|| CycNum::zero(p)))
                .collect()),
            None => Err(CenterError::Consistency(
                "functional is not in the span of the class basis".into(),
            )),
        }
    }

    pub fn from_coords(&self, coords: &[CycNum]) -> AlgElem {
        let mut acc = AlgElem::zero();
        for (c, b) in coords.iter().zip(&self.class_basis) {
            acc.add_scaled(b, c);
        }
        acc
    }

    /// `[a] = [b]` in `Ẑ(A)`.
    pub fn same_class(&self, h: &HopfData, a: &AlgElem, b: &AlgElem) -> bool {
        self.in_k(h, &a.sub(b))
    }

    pub fn in_k(&self, h: &HopfData, a: &AlgElem) -> bool {
        self.elements.iter().all(|y| h.lambda_mul(a, y).is_zero())
    }
}

fn dense_to_sparse(r: &[CycNum]) -> SparseRow {
    r.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

/// `a ⋆ b = Σ λ(S(a) b₍₁₎) b₍₂₎`.
pub fn star(h: &HopfData, a: &AlgElem, b: &AlgElem) -> Result<AlgElem, CenterError> {
    require_central(h, a, "left star factor")?;
    require_central(h, b, "right star factor")?;
    Ok(star_unchecked(h, a, b))
}

pub(crate) fn star_unchecked(h: &HopfData, a: &AlgElem, b: &AlgElem) -> AlgElem {
    let sa = h.antipode(a);
    let db = h.comul(b);
    let mut cache: HashMap<usize, CycNum> = HashMap::new();
    let mut out = AlgElem::zero();
    for (key, c) in db.iter() {
        let f = cache
            .entry(key[0])
            .or_insert_with(|| h.lambda_mul(&sa, &h.basis(key[0])));
        if f.is_zero() {
            continue;
        }
        out.add_term(key[1], &(c * &*f));
    }
    out
}

/// `J(z) = Σ_{i,j} λ(z β_i α_j) α_i β_j`.
pub fn j_map(h: &HopfData, z: &AlgElem) -> Result<AlgElem, CenterError> {
    require_central(h, z, "argument of J")?;
    Ok(j_unchecked(h, z))
}

pub(crate) fn j_unchecked(h: &HopfData, z: &AlgElem) -> AlgElem {
    h.r_terms
        .par_iter()
        .map(|(ai, bi)| {
            let zb = h.mul(z, bi);
            let mut acc = AlgElem::zero();
            if zb.is_zero() {
                return acc;
            }
            for (aj, bj) in &h.r_terms {
                let l = h.lambda_mul(&zb, aj);
                if l.is_zero() {
                    continue;
                }
                acc.add_scaled(&h.mul(ai, bj), &l);
            }
            acc
        })
        .reduce(AlgElem::zero, |a, b| a.add(&b))
}

/// `σ(a, b, c) = λ(S(a)(b ⋆ c))`.
pub fn sigma(h: &HopfData, a: &AlgElem, b: &AlgElem, c: &AlgElem) -> Result<CycNum, CenterError> {
    require_central(h, a, "first argument of σ")?;
    Ok(h.lambda_mul(&h.antipode(a), &star(h, b, c)?))
}

/// `δ(w, z) = z ⊗ w − (1 ⊗ w) Δ(z)`.
pub fn delta(h: &HopfData, w: &AlgElem, z: &AlgElem) -> TensorElem {
    let dz = h.comul(z);
    let wdz = h.mul_leg(&dz, 1, w, true);
    TensorElem::pure(&[z, w]).sub(&wdz)
}

/// `μ(δ(w, z), (a ⊗ b) Δc)`.
pub fn delta_pairing(
    h: &HopfData,
    w: &AlgElem,
    z: &AlgElem,
    a: &AlgElem,
    b: &AlgElem,
    c: &AlgElem,
) -> CycNum {
    let y = h.tensor_mul_pure(&h.comul(c), &[a, b]);
    h.mu(&delta(h, w, z), &y)
}

/// First center-basis triple `(a, b, c)` with nonzero `δ`-pairing, if any.
pub fn delta_witness(
    h: &HopfData,
    cb: &CenterBasis,
    w: &AlgElem,
    z: &AlgElem,
) -> Option<(usize, usize, usize)> {
    let d = delta(h, w, z);
    let n = cb.dim_z();
    let dc: Vec<TensorElem> = cb.elements.par_iter().map(|c| h.comul(c)).collect();
    (0..n * n).into_par_iter().find_map_first(|ab| {
        let (a, b) = (ab / n, ab % n);
        let dab = h.tensor_mul_pure(&d, &[&cb.elements[a], &cb.elements[b]]);
        (0..n).find(|&c| !h.mu(&dab, &dc[c]).is_zero()).map(|c| (a, b, c))
    })
}

/// The predicate `λ(zc(bz⋆a)) = λ(zc(b⋆(za)))` for all center-basis `a, b, c`.
pub fn in_tz(h: &HopfData, cb: &CenterBasis, z: &AlgElem) -> bool {
    tz_witness(h, cb, z).is_none()
}

/// A failing pair `(a, b)` of the `𝒯_Z` predicate.
pub fn tz_witness(h: &HopfData, cb: &CenterBasis, z: &AlgElem) -> Option<(usize, usize)> {
    let n = cb.dim_z();
    let e = &cb.elements;
    let ze: Vec<AlgElem> = e.iter().map(|x| h.mul(z, x)).collect();
    (0..n * n).into_par_iter().find_map_first(|ab| {
        let (a, b) = (ab / n, ab % n);
        let bz = &ze[b];
        let d = star_unchecked(h, bz, &e[a]).sub(&star_unchecked(h, &e[b], &ze[a]));
        let zd = h.mul(z, &d);
        if cb.in_k(h, &zd) {
            None
        } else {
            Some((a, b))
        }
    })
}

/// Witness search outcome for `𝒯²`.
#[derive(Clone, Debug)]
pub enum T2Verdict {
    /// `[z] = [z₁ J(z₂)]` with `δ̂([z₁],[z₂])` vanishing on all center triples.
    Witness { z1: AlgElem, z2_label: String },
    NoWitnessInCatalog,
    NotSearched,
}

#[derive(Clone, Debug)]
pub struct TraceReport {
    pub coords: Vec<CycNum>,
    pub in_tz: bool,
    /// `[w]` with `[zw] = [Λ]`, plus a basis of alternative shifts.
    pub t4_witness: Option<(AlgElem, Vec<AlgElem>)>,
    pub in_t4: bool,
    /// `X_z` with `[zJ(z)] = X_z[Λ]`.
    pub x_z: Option<CycNum>,
    pub in_t3: bool,
    pub t2: T2Verdict,
    /// `C_± = λ(zθ^{±1})`.
    pub c_plus: CycNum,
    pub c_minus: CycNum,
}

/// Solve `[x · m] = [target]` for `x` in the span of the class basis.
fn solve_class_product(
    h: &HopfData,
    cb: &CenterBasis,
    m: &AlgElem,
    target: &AlgElem,
) -> Result<Option<(AlgElem, Vec<AlgElem>)>, CenterError> {
    let nc = cb.class_basis.len();
    let cols: Vec<Vec<CycNum>> = cb
        .class_basis
        .par_iter()
        .map(|bk| cb.class_coords(h, &h.mul(bk, m)))
        .collect::<Result<_, _>>()?;
    let rhs = cb.class_coords(h, target)?;
    let rows: Vec<SparseRow> = (0..nc)
        .map(|r| {
            (0..nc)
                .filter(|&k| !cols[k][r].is_zero())
                .map(|k| (k, cols[k][r].clone()))
                .collect()
        })
        .collect();
    Ok(linalg::solve(h.p, &rows, &rhs, nc).map(|(x, ker)| {
        let to_elem = |v: &SparseRow| {
            let mut acc = AlgElem::zero();
            for (k, c) in v {
                acc.add_scaled(&cb.class_basis[*k], c);
            }
            acc
        };
        (to_elem(&x), ker.iter().map(to_elem).collect())
    }))
}

/// Classify a central element against `𝒯_Z`, `𝒯⁴`, `𝒯³` and (by catalog search) `𝒯²`.
/// Membership in `𝒯` is not computable here; `𝒯_Z` stands in for it.
pub fn classify_trace_element(
    h: &HopfData,
    cb: &CenterBasis,
    z: &AlgElem,
    t2_catalog: Option<&[(String, AlgElem)]>,
) -> Result<TraceReport, CenterError> {
    require_central(h, z, "trace element")?;
    let coords = cb.class_coords(h, z)?;
    let tz = in_tz(h, cb, z);
    let lam = &h.integral;
    let mut t4_witness = solve_class_product(h, cb, z, lam)?;
    if let Some((w, _)) = &t4_witness {
        if !cb.same_class(h, &h.antipode(w), w) {
            t4_witness = None;
        }
    }
    let in_t4 = tz && t4_witness.is_some();
    let zj = h.mul(z, &j_unchecked(h, z));
    let x_z = proportional_class(h, cb, &zj, lam)?;
    let in_t3 = in_t4 && x_z.as_ref().is_some_and(|x| !x.is_zero());
    let rib = h.ribbon_elements()?;
    let c_plus = h.lambda_mul(z, &rib.theta);
    let c_minus = h.lambda_mul(z, &rib.theta_inv);
    let t2 = match t2_catalog {
        None => T2Verdict::NotSearched,
        Some(cat) if in_t4 => t2_search(h, cb, z, cat)?,
        Some(_) => T2Verdict::NoWitnessInCatalog,
    };
    Ok(TraceReport {
        coords,
        in_tz: tz,
        t4_witness,
        in_t4,
        x_z,
        in_t3,
        t2,
        c_plus,
        c_minus,
    })
}

/// `Some(x)` when `[a] = x[b]`.
fn proportional_class(
    h: &HopfData,
    cb: &CenterBasis,
    a: &AlgElem,
    b: &AlgElem,
) -> Result<Option<CycNum>, CenterError> {
    let ca = cb.class_coords(h, a)?;
    let cbv = cb.class_coords(h, b)?;
    let Some(k) = cbv.iter().position(|x| !x.is_zero()) else {
        return Ok(None);
    };
    let x = ca[k].div(&cbv[k]).expect("nonzero");
    let ok = ca.iter().zip(&cbv).all(|(u, w)| *u == &x * w);
    Ok(ok.then_some(x))
}

fn t2_search(
    h: &HopfData,
    cb: &CenterBasis,
    z: &AlgElem,
    catalog: &[(String, AlgElem)],
) -> Result<T2Verdict, CenterError> {
    for (label, z2) in catalog {
        let jz2 = j_unchecked(h, z2);
        let Some((z1, _)) = solve_class_product(h, cb, &jz2, z)? else {
            continue;
        };
        if delta_witness(h, cb, &z1, z2).is_none() {
            return Ok(T2Verdict::Witness {
                z1,
                z2_label: label.clone(),
            });
        }
    }
    Ok(T2Verdict::NoWitnessInCatalog)
}

/// `v − v⁻¹`.
pub fn vmv(p: u32) -> CycNum {
    CycNum::v_pow(p, 1) - CycNum::v_pow(p, -1)
}

/// `b(s) = (v^{2s+1} + v^{−2s−1})/(v − v⁻¹)`.
pub fn b_value(p: u32, s: i64) -> CycNum {
    let num = CycNum::v_pow(p, 2 * s + 1) + CycNum::v_pow(p, -2 * s - 1);
    num.div(&vmv(p)).expect("v - v^-1 is nonzero")
}

/// `ω_{ij} = [(2j+1)(2i+1)]/[2j+1]`.
pub fn omega(p: u32, i: i64, j: i64) -> CycNum {
    qint(p, (2 * j + 1) * (2 * i + 1))
        .div(&qint(p, 2 * j + 1))
        .expect("[2j+1] nonzero for j < q")
}

/// `(ω⁻¹)_{ij} = −((v−v⁻¹)²/p)[2i+1][(2i+1)(2j+1)]`.
pub fn omega_inv_closed(p: u32, i: i64, j: i64) -> CycNum {
    let d = vmv(p);
    let c = (&d * &d).mul_int(-1).div(&CycNum::from_int(p, p as i64)).unwrap();
    &(&c * &qint(p, 2 * i + 1)) * &qint(p, (2 * i + 1) * (2 * j + 1))
}

/// `ε_{ij}^s` by the four-inequality rule.
pub fn fusion_rule(p: u32, i: u32, j: u32, s: u32) -> u8 {
    let (i, j, s, p) = (i as i64, j as i64, s as i64, p as i64);
    u8::from(i + j + s <= p - 2 && i + j - s >= 0 && s + i - j >= 0 && s + j - i >= 0)
}

/// Center data of quantum sl(2) following Kerler.
#[derive(Clone, Debug)]
pub struct KerlerBasis {
    pub p: u32,
    pub q: u32,
    pub x: AlgElem,
    /// `b(0) .. b(p−1)`.
    pub b: Vec<CycNum>,
    /// `P_0 .. P_q`.
    pub p_elems: Vec<AlgElem>,
    pub n: Vec<AlgElem>,
    pub n_plus: Vec<AlgElem>,
    pub n_minus: Vec<AlgElem>,
    pub ndot_minus: Vec<AlgElem>,
    pub t: Vec<AlgElem>,
    /// `φ_j(X)` for `j = 0..q`.
    pub phi_x: Vec<AlgElem>,
    /// `φ_j(b(j))` and `φ_j'(b(j))`.
    pub phi_at_b: Vec<CycNum>,
    pub dphi_at_b: Vec<CycNum>,
}

fn check_sl2(h: &HopfData) -> Result<(), CenterError> {
    let p = h.p as usize;
    if h.name.starts_with("uqsl2") && h.dim == p * p * p {
        Ok(())
    } else {
        Err(CenterError::NotSl2)
    }
}

/// Build `X`, `φ_j(X)`, `P_j`, `N_j`, `N_j^±`, `Ṅ_j^−` and verify the product table.
pub fn kerler_basis(h: &HopfData) -> Result<KerlerBasis, CenterError> {
    check_sl2(h)?;
    let p = h.p;
    let pi = p as i64;
    let q = q_of(p);
    let d = vmv(p);
    let one = CycNum::one(p);
    let b: Vec<CycNum> = (0..pi).map(|s| b_value(p, s)).collect();
    let mut x = AlgElem::zero();
    for s in 0..pi {
        x.add_term(idx(p, s, 1, 1), &d);
    }
    // k runs over a full residue system; without k = p the element misses 1_0.
    for k in 1..=pi {
        x.add_term(idx(p, 2 * k, 0, 0), &b[(k - 1) as usize]);
    }
    require_central(h, &x, "X")?;

    let x_minus = |c: &CycNum| x.sub(&h.scalar(c));
    let mut phi_x = Vec::new();
    let mut phi_at_b = Vec::new();
    let mut dphi_at_b = Vec::new();
    for j in 0..=q as usize {
        let roots: Vec<&CycNum> = b.iter().filter(|r| **r != b[j]).collect();
        let mut acc = h.unit.clone();
        for r in &roots {
            acc = h.mul(&acc, &x_minus(r));
        }
        phi_x.push(acc);
        let diffs: Vec<CycNum> = roots.iter().map(|r| &b[j] - *r).collect();
        phi_at_b.push(diffs.iter().fold(one.clone(), |a, x| &a * x));
        let mut dsum = CycNum::zero(p);
        for t in 0..diffs.len() {
            let prod = diffs
                .iter()
                .enumerate()
                .filter(|(s, _)| *s != t)
                .fold(one.clone(), |a, (_, x)| &a * x);
            dsum += &prod;
        }
        dphi_at_b.push(dsum);
    }

    let mut p_elems = Vec::new();
    let mut n = Vec::new();
    for j in 0..=q as usize {
        let f = &phi_at_b[j];
        let finv = f.inverse().map_err(|_| CenterError::Consistency("φ_j(b(j)) = 0".into()))?;
        let fx_xb = h.mul(&phi_x[j], &x_minus(&b[j]));
        let coef = (&dphi_at_b[j] * &finv) * &finv;
        p_elems.push(phi_x[j].scale(&finv).sub(&fx_xb.scale(&coef)));
        if j < q as usize {
            n.push(fx_xb.scale(&finv));
        }
    }
    let t: Vec<AlgElem> = (0..q as i64)
        .map(|j| {
            AlgElem::from_terms((j + 1..=pi - 1 - j).map(|s| (idx(p, -2 * s, 0, 0), one.clone())))
        })
        .collect();
    let n_plus: Vec<AlgElem> = (0..q as usize).map(|j| h.mul(&t[j], &n[j])).collect();
    let n_minus: Vec<AlgElem> = (0..q as usize).map(|j| n[j].sub(&n_plus[j])).collect();
    let ndot_minus: Vec<AlgElem> = (0..q as usize)
        .map(|j| {
            let r = qint(p, 2 * j as i64 + 1);
            let s = (&d * &r) * r;
            n_minus[j].scale(&s.inverse().unwrap())
        })
        .collect();

    let kb = KerlerBasis {
        p,
        q,
        x,
        b,
        p_elems,
        n,
        n_plus,
        n_minus,
        ndot_minus,
        t,
        phi_x,
        phi_at_b,
        dphi_at_b,
    };
    kb.verify_products(h)?;
    Ok(kb)
}

impl KerlerBasis {
    /// `[P_i][P_j] = δ P_j`, `P_i N_j^± = δ N_j^±`, `N^± N^± = N^∓ N^± = 0`.
    pub fn verify_products(&self, h: &HopfData) -> Result<(), CenterError> {
        let q = self.q as usize;
        let fail = |what: String| Err(CenterError::Consistency(what));
        for i in 0..=q {
            for j in 0..=q {
                let prod = h.mul(&self.p_elems[i], &self.p_elems[j]);
                let want = if i == j { self.p_elems[j].clone() } else { AlgElem::zero() };
                if prod != want {
                    return fail(format!("P_{i} P_{j}"));
                }
            }
            for j in 0..q {
                for (name, nj) in [("+", &self.n_plus[j]), ("-", &self.n_minus[j])] {
                    let want = if i == j { nj.clone() } else { AlgElem::zero() };
                    if h.mul(&self.p_elems[i], nj) != want {
                        return fail(format!("P_{i} N_{j}^{name}"));
                    }
                }
            }
        }
        for l in 0..q {
            for j in 0..q {
                for a in [&self.n_plus[l], &self.n_minus[l]] {
                    for b in [&self.n_plus[j], &self.n_minus[j]] {
                        if !h.mul(a, b).is_zero() {
                            return fail(format!("N_{l}^± N_{j}^±"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The ordered class basis `P_0..P_{q−1}, Ṅ_0⁻..Ṅ_{q−1}⁻`.
    pub fn class_basis(&self) -> (Vec<AlgElem>, Vec<String>) {
        let q = self.q as usize;
        let mut elems: Vec<AlgElem> = self.p_elems[..q].to_vec();
        elems.extend(self.ndot_minus.iter().cloned());
        let mut labels: Vec<String> = (0..q).map(|i| format!("P_{i}")).collect();
        labels.extend((0..q).map(|i| format!("Ndot_{i}^-")));
        (elems, labels)
    }

    /// The center basis `P_0..P_q, N_j^+, N_j^-` with the Kerler class basis.
    pub fn center_basis(&self, h: &HopfData) -> Result<CenterBasis, CenterError> {
        let mut elements = self.p_elems.clone();
        elements.extend(self.n_plus.iter().cloned());
        elements.extend(self.n_minus.iter().cloned());
        let mut cb = CenterBasis::from_elements(h, elements);
        let (b, l) = self.class_basis();
        cb.set_class_basis(h, b, l)?;
        Ok(cb)
    }

    /// `v^q P_q + Σ_j v^{2j(j+1)}(P_j + ((2j+1)/[2j+1]) N_j − (p/[2j+1]) N_j⁻)`.
    pub fn theta_expansion(&self) -> AlgElem {
        let p = self.p;
        let mut acc = self.p_elems[self.q as usize].scale(&CycNum::v_pow(p, self.q as i64));
        for j in 0..self.q as usize {
            let jj = j as i64;
            let r = qint(p, 2 * jj + 1);
            let c_n = CycNum::from_int(p, 2 * jj + 1).div(&r).unwrap();
            let c_m = CycNum::from_int(p, p as i64).div(&r).unwrap();
            let inner = self.p_elems[j]
                .add(&self.n[j].scale(&c_n))
                .sub(&self.n_minus[j].scale(&c_m));
            acc = acc.add(&inner.scale(&CycNum::v_pow(p, 2 * jj * (jj + 1))));
        }
        acc
    }

    /// `z_RT = Σ_j [2j+1] Ṅ_j⁻`.
    pub fn z_rt(&self) -> AlgElem {
        let mut acc = AlgElem::zero();
        for (j, nd) in self.ndot_minus.iter().enumerate() {
            acc.add_scaled(nd, &qint(self.p, 2 * j as i64 + 1));
        }
        acc
    }

    /// The right-hand sides of the expansions of `1_{−2s}φ_k(X)(X−b(k))`
    /// (`k < q`) and `1_{−2s}φ_k(X)` (all `k`) in the `1_{−2s}E^{(j)}F^{(j)}` basis.
    pub fn lemma18_expansion(&self, k: usize, s: i64, times_x_minus_b: bool) -> AlgElem {
        let p = self.p;
        let pi = p as i64;
        let d = vmv(p);
        let b = |i: i64| &self.b[i.rem_euclid(pi) as usize];
        let bk = &self.b[k];
        let weight = |j: u32| {
            let f = qfact(p, j);
            (&f * &f) * d.pow(j as i64).unwrap()
        };
        let mut out = AlgElem::zero();
        let full = times_x_minus_b || k == self.q as usize;
        for j in 0..p {
            let mut coef = CycNum::zero(p);
            if full {
                coef = ((j as i64 + 1)..pi).fold(CycNum::one(p), |a, i| &a * &(bk - b(i + s)));
            } else if j + 1 < p {
                for t in (j as i64 + 1)..pi {
                    coef += &((j as i64 + 1)..pi)
                        .filter(|&i| i != t)
                        .fold(CycNum::one(p), |a, i| &a * &(bk - b(i + s)));
                }
            }
            out.add_term(idx(p, -2 * s, j, j), &(&coef * &weight(j)));
        }
        out
    }

    /// Displayed closed forms of `φ_k(b(k))` and `φ_k'(b(k))`.
    pub fn lemma18_scalars(&self, k: usize) -> (CycNum, Option<CycNum>) {
        let p = self.p;
        let d = vmv(p);
        let f = qfact(p, p - 1);
        let ff = &f * &f;
        if k == self.q as usize {
            return (&ff * &d.pow(p as i64 - 1).unwrap(), None);
        }
        let r = qint(p, 2 * k as i64 + 1);
        let phi = (&ff * &d.pow(p as i64 - 2).unwrap()).div(&r.pow(2).unwrap()).unwrap();
        let dphi = (&(&ff * &d.pow(p as i64 - 3).unwrap()) * &qint(p, 2 * (2 * k as i64 + 1)))
            .div(&r.pow(5).unwrap())
            .unwrap();
        (phi, Some(dphi))
    }
}

/// `ε_{ij}^s` computed as `σ(Ṅ_i⁻, Ṅ_j⁻, P_s)/λ(Ṅ_s⁻)` and checked against the rule.
pub fn fusion_coefficients(h: &HopfData, kb: &KerlerBasis) -> Result<Vec<Vec<Vec<u8>>>, CenterError> {
    let q = kb.q as usize;
    let p = h.p;
    let lam: Vec<CycNum> = kb.ndot_minus.iter().map(|x| h.lambda(x)).collect();
    let sn: Vec<AlgElem> = kb.ndot_minus.iter().map(|x| h.antipode(x)).collect();
    let triples: Vec<(usize, usize, usize)> = (0..q)
        .flat_map(|i| (0..q).flat_map(move |j| (0..q).map(move |s| (i, j, s))))
        .collect();
    let vals: Vec<Result<u8, CenterError>> = triples
        .par_iter()
        .map(|&(i, j, s)| {
            let st = star_unchecked(h, &kb.ndot_minus[j], &kb.p_elems[s]);
            let ratio = h.lambda_mul(&sn[i], &st).div(&lam[s]).unwrap();
            let rule = fusion_rule(p, i as u32, j as u32, s as u32);
            if ratio != CycNum::from_int(p, rule as i64) {
                return Err(CenterError::Consistency(format!(
                    "σ ratio for ({i},{j},{s}) is {ratio}, rule gives {rule}"
                )));
            }
            Ok(rule)
        })
        .collect();
    let mut out = vec![vec![vec![0u8; q]; q]; q];
    for (&(i, j, s), v) in triples.iter().zip(vals) {
        out[i][j][s] = v?;
    }
    Ok(out)
}

/// Index subsets containing 0 closed under `ε`: if `ε_{jk}^i ≠ 0` and two of
/// `i, j, k` lie in the subset then so does the third.
pub fn fusion_closed_subsets(eps: &[Vec<Vec<u8>>]) -> Vec<Vec<usize>> {
    let q = eps.len();
    let mut out = Vec::new();
    for mask in 0..(1usize << q) {
        if mask & 1 == 0 {
            continue;
        }
        let has = |i: usize| mask >> i & 1 == 1;
        let closed = (0..q).all(|i| {
            (0..q).all(|j| {
                (0..q).all(|k| {
                    eps[j][k][i] == 0
                        || [has(i), has(j), has(k)].iter().filter(|x| **x).count() != 2
                })
            })
        });
        if closed {
            out.push((0..q).filter(|&i| has(i)).collect());
        }
    }
    out
}

/// The rays of `𝒯_Z` by the fusion-closed-subset reduction, each re-verified.
pub fn enumerate_tz(
    h: &HopfData,
    kb: &KerlerBasis,
    cb: &CenterBasis,
) -> Result<Vec<(String, AlgElem)>, CenterError> {
    let eps = fusion_coefficients(h, kb)?;
    let q = kb.q as usize;
    let mut rays = Vec::new();
    for sub in fusion_closed_subsets(&eps) {
        let label = sub.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        let mut zp = AlgElem::zero();
        let mut zn = AlgElem::zero();
        for &i in &sub {
            zp = zp.add(&kb.p_elems[i]);
            zn.add_scaled(&kb.ndot_minus[i], &h.lambda(&kb.ndot_minus[i]));
        }
        let name = |branch: &str| match (branch, sub.len()) {
            ("P", 1) => "P_0".to_string(),
            ("P", n) if n == q => "1".to_string(),
            ("N", 1) => "Lambda".to_string(),
            ("N", n) if n == q => "z_RT".to_string(),
            _ => format!("{branch}{{{label}}}"),
        };
        rays.push((name("P"), zp));
        rays.push((name("N"), zn));
    }
    for (name, z) in &rays {
        if !in_tz(h, cb, z) {
            return Err(CenterError::Consistency(format!("ray {name} fails the 𝒯_Z predicate")));
        }
    }
    Ok(rays)
}
