//! Quantum sl(2) at a primitive `p`-th root of unity `v` with divided powers,
//! its simple modules `V_n` and their quantum-trace elements.

use rayon::prelude::*;
use thiserror::Error;

use crate::cyclo::{self, qfact, qfact_braces, qint, CycNum, QBinomTable};
use crate::hopf::{AlgElem, HopfData, HopfError, HopfParts, TensorElem};

#[derive(Debug, Error)]
pub enum Sl2Error {
    #[error("p must be a prime larger than 3, got {0}")]
    BadPrime(u32),
    #[error("module index {n} out of range 0..{q}")]
    BadModule { n: u32, q: u32 },
    #[error(transparent)]
    Hopf(#[from] HopfError),
}

/// Basis element `1_c E^{(n)} F^{(m)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sl2Basis {
    pub c: u32,
    pub n: u32,
    pub m: u32,
}

impl Sl2Basis {
    pub fn new(p: u32, c: i64, n: u32, m: u32) -> Self {
        Sl2Basis {
            c: c.rem_euclid(p as i64) as u32,
            n,
            m,
        }
    }

    pub fn index(&self, p: u32) -> usize {
        ((self.c * p + self.n) * p + self.m) as usize
    }

    pub fn from_index(p: u32, i: usize) -> Self {
        let i = i as u32;
        Sl2Basis {
            c: i / (p * p),
            n: (i / p) % p,
            m: i % p,
        }
    }

    pub fn label(&self) -> String {
        format!("1_{}E^({})F^({})", self.c, self.n, self.m)
    }
}

/// Index of `1_c E^{(n)} F^{(m)}`.
pub fn idx(p: u32, c: i64, n: u32, m: u32) -> usize {
    Sl2Basis::new(p, c, n, m).index(p)
}

fn modp(p: u32, x: i64) -> i64 {
    x.rem_euclid(p as i64)
}

fn basis_product(p: u32, qb: &QBinomTable, a: Sl2Basis, b: Sl2Basis) -> AlgElem {
    let (c, n, m) = (a.c as i64, a.n, a.m);
    let (s, n2, m2) = (b.c as i64, b.n, b.m);
    if modp(p, c - 2 * n as i64) != modp(p, s - 2 * m as i64) {
        return AlgElem::zero();
    }
    let mut out = AlgElem::zero();
    for t in 0..=m.min(n2) {
        let ne = n + n2 - t;
        let nf = m + m2 - t;
        let coef = qb.get((n2 + m) as i64 - s, t) * qb.get(ne as i64, n);
        let coef = &coef * qb.get(nf as i64, m - t);
        if coef.is_zero() {
            continue;
        }
        assert!(ne < p && nf < p, "nonzero coefficient outside the basis");
        out.add_term(idx(p, c, ne, nf), &coef);
    }
    out
}

fn basis_coproduct(p: u32, b: Sl2Basis) -> TensorElem {
    let (c, n, m) = (b.c as i64, b.n as i64, b.m as i64);
    let d = c - 2 * n;
    let mut t = TensorElem::zero(2);
    for a in 0..=n {
        for bb in 0..=m {
            for r in 0..p as i64 {
                let r2 = r - 2 * a;
                let e = a * (a - n) + r * (n - a) + bb * (bb - m) - (d - r2) * bb;
                t.add_term(
                    vec![
                        idx(p, r, a as u32, bb as u32),
                        idx(p, c - r, (n - a) as u32, (m - bb) as u32),
                    ],
                    &CycNum::v_pow(p, e),
                );
            }
        }
    }
    t
}

fn sign(k: u32) -> i64 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Build the Hopf algebra `A` for the prime `p > 3`.
pub fn build_uqsl2(p: u32) -> Result<HopfData, Sl2Error> {
    if p <= 3 || cyclo::check_odd_prime(p).is_err() {
        return Err(Sl2Error::BadPrime(p));
    }
    let qb = QBinomTable::new(p);
    let dim = (p * p * p) as usize;
    let basis: Vec<Sl2Basis> = (0..dim).map(|i| Sl2Basis::from_index(p, i)).collect();
    let mul_table: Vec<AlgElem> = (0..dim * dim)
        .into_par_iter()
        .map(|k| basis_product(p, &qb, basis[k / dim], basis[k % dim]))
        .collect();
    let comul_table: Vec<TensorElem> = basis
        .par_iter()
        .map(|b| basis_coproduct(p, *b))
        .collect();
    let antipode_table: Vec<AlgElem> = basis
        .par_iter()
        .map(|b| {
            let (c, n, m) = (b.c as i64, b.n, b.m);
            let d = c - 2 * n as i64;
            let sf = CycNum::v_pow(p, -(m as i64) * (d - 1 + m as i64)).mul_int(sign(m));
            let se = CycNum::v_pow(p, n as i64 * (c - 1 - n as i64)).mul_int(sign(n));
            let f = idx(p, -d - 2 * m as i64, 0, m);
            let e = idx(p, -c + 2 * n as i64, n, 0);
            basis_product(p, &qb, basis[f], basis[e]).scale(&(sf * se))
        })
        .collect();
    let counit_table: Vec<CycNum> = basis
        .iter()
        .map(|b| {
            if b.c == 0 && b.n == 0 && b.m == 0 {
                CycNum::one(p)
            } else {
                CycNum::zero(p)
            }
        })
        .collect();
    let lambda_row: Vec<CycNum> = basis
        .iter()
        .map(|b| {
            if b.n == p - 1 && b.m == p - 1 {
                CycNum::v_pow(p, b.c as i64)
            } else {
                CycNum::zero(p)
            }
        })
        .collect();
    let idem = |c: i64| idx(p, c, 0, 0);
    let unit = AlgElem::from_terms((0..p as i64).map(|c| (idem(c), CycNum::one(p))));
    let g = AlgElem::from_terms((0..p as i64).map(|c| (idem(c), CycNum::v_pow(p, -c))));
    let g_inv = AlgElem::from_terms((0..p as i64).map(|c| (idem(c), CycNum::v_pow(p, c))));
    let integral = AlgElem::basis(idx(p, 0, p - 1, p - 1), p);

    // R = Σ_{n,r} 1_r F^{(n)} ⊗ (Σ_s v^{n(n-1)/2 + rs/2} {n} 1_s E^{(n)}).
    let mut r_terms = Vec::with_capacity((p * p) as usize);
    for n in 0..p {
        let braces = qfact_braces(p, n);
        let base = (n as i64) * (n as i64 - 1) / 2;
        for r in 0..p as i64 {
            let alpha = AlgElem::basis(idx(p, r, 0, n), p);
            let beta = AlgElem::from_terms((0..p as i64).map(|s| {
                let e = base + cyclo::half_exponent(p, r * s) as i64;
                (idx(p, s, n, 0), &CycNum::v_pow(p, e) * &braces)
            }));
            r_terms.push((alpha, beta));
        }
    }

    let mut generators: Vec<AlgElem> = (0..p as i64).map(|c| AlgElem::basis(idem(c), p)).collect();
    generators.push(AlgElem::from_terms(
        (0..p as i64).map(|c| (idx(p, c, 1, 0), CycNum::one(p))),
    ));
    generators.push(AlgElem::from_terms(
        (0..p as i64).map(|c| (idx(p, c, 0, 1), CycNum::one(p))),
    ));

    Ok(HopfData::new(HopfParts {
        name: format!("uqsl2(p={p})"),
        p,
        labels: basis.iter().map(|b| b.label()).collect(),
        mul_table,
        comul_table,
        antipode_table,
        counit_table,
        unit,
        integral,
        lambda_row,
        r_terms,
        g,
        g_inv,
        generators,
    })?)
}

/// `q = (p-1)/2`.
pub fn q_of(p: u32) -> u32 {
    (p - 1) / 2
}

/// The simple module `V_n` (highest weight `2n`, dimension `2n+1`), `n < q`.
#[derive(Clone, Debug)]
pub struct RepVn {
    pub p: u32,
    pub n: u32,
}

impl RepVn {
    pub fn new(p: u32, n: u32) -> Result<Self, Sl2Error> {
        if n >= q_of(p) {
            return Err(Sl2Error::BadModule { n, q: q_of(p) });
        }
        Ok(RepVn { p, n })
    }

    pub fn dim(&self) -> usize {
        (2 * self.n + 1) as usize
    }

    /// Position of `e_i`, `-n <= i <= n`.
    fn slot(&self, i: i64) -> usize {
        (i + self.n as i64) as usize
    }

    /// `Σ_c 1_c E^{(1)}` on `e_i`: `[n+i+1][n-i] e_{i+1}` (zero at the top).
    /// The factor `[n-i]` is forced by the relation between `EF` and `FE`
    /// once `F e_i = e_{i-1}`; it is 1 on `e_{n-1}`.
    fn e1(&self, i: i64) -> Option<(i64, CycNum)> {
        let n = self.n as i64;
        if i == n {
            None
        } else {
            Some((i + 1, qint(self.p, n + i + 1) * qint(self.p, n - i)))
        }
    }

    /// `Σ_c 1_c F^{(1)}` on `e_i`: `e_{i-1}` (zero at the bottom).
    fn f1(&self, i: i64) -> Option<(i64, CycNum)> {
        if i == -(self.n as i64) {
            None
        } else {
            Some((i - 1, CycNum::one(self.p)))
        }
    }

    /// Action of the basis element `b` on `e_i`.
    pub fn basis_action(&self, b: Sl2Basis, i: i64) -> Option<(i64, CycNum)> {
        let p = self.p;
        let mut j = i;
        let mut coef = CycNum::one(p);
        for _ in 0..b.m {
            let (k, c) = self.f1(j)?;
            j = k;
            coef = coef * c;
        }
        for _ in 0..b.n {
            let (k, c) = self.e1(j)?;
            j = k;
            coef = coef * c;
        }
        if (2 * j).rem_euclid(p as i64) != b.c as i64 {
            return None;
        }
        let denom = qfact(p, b.n) * qfact(p, b.m);
        Some((j, coef.div(&denom).expect("[k]! invertible for k < p")))
    }

    /// `a · vec` for a module vector given on `e_{-n} .. e_n`.
    pub fn action(&self, a: &AlgElem, vec: &[CycNum]) -> Vec<CycNum> {
        let mut out = vec![CycNum::zero(self.p); self.dim()];
        for (bi, coef) in a.iter() {
            let b = Sl2Basis::from_index(self.p, bi);
            for (k, x) in vec.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                let i = k as i64 - self.n as i64;
                if let Some((j, c)) = self.basis_action(b, i) {
                    out[self.slot(j)] += &(&(coef * x) * &c);
                }
            }
        }
        out
    }

    /// Plain trace of the action of `a`.
    pub fn trace_plain(&self, a: &AlgElem) -> CycNum {
        let mut acc = CycNum::zero(self.p);
        for k in 0..self.dim() {
            let mut e = vec![CycNum::zero(self.p); self.dim()];
            e[k] = CycNum::one(self.p);
            acc += &self.action(a, &e)[k];
        }
        acc
    }

    /// Quantum trace `tr_V(a) = Σ_i e_i^*(g a e_i)`.
    pub fn qtrace(&self, h: &HopfData, a: &AlgElem) -> CycNum {
        self.trace_plain(&h.mul(&h.g, a))
    }

    /// `r(n) = [2n+1]`.
    pub fn r(&self) -> CycNum {
        qint(self.p, 2 * self.n as i64 + 1)
    }
}

/// The central element `z_V` with `tr_V(a) = λ(g² z_V a)` for all `a`.
pub fn trace_element(h: &HopfData, v: &RepVn) -> Result<AlgElem, Sl2Error> {
    let f: Vec<CycNum> = (0..h.dim)
        .into_par_iter()
        .map(|b| v.qtrace(h, &h.basis(b)))
        .collect();
    let g2z = h.phi_solve(&f)?;
    let z = h.mul3(&h.g_inv, &h.g_inv, &g2z);
    if !h.is_central(&z) {
        return Err(HopfError::NotCentral.into());
    }
    Ok(z)
}

/// `z_RT = Σ_{n<q} [2n+1] z_n`.
pub fn z_rt_from_traces(h: &HopfData) -> Result<AlgElem, Sl2Error> {
    let mut acc = AlgElem::zero();
    for n in 0..q_of(h.p) {
        let v = RepVn::new(h.p, n)?;
        acc = acc.add(&trace_element(h, &v)?.scale(&v.r()));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let p = 5;
        for i in 0..125 {
            assert_eq!(Sl2Basis::from_index(p, i).index(p), i);
        }
    }

    #[test]
    fn rejects_small_primes() {
        assert!(build_uqsl2(3).is_err());
        assert!(build_uqsl2(9).is_err());
    }
}
