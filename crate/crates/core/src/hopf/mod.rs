//! Finite-dimensional Hopf algebras over `k` given by structure tables on a
//! fixed basis, with sparse elements of `A` and `A^{⊗n}`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;
use thiserror::Error;

use crate::cyclo::CycNum;
use crate::linalg::{self, SparseRow};

mod axioms;
pub use axioms::{axiom_report, AxiomOutcome, AxiomReport, Samples};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HopfError {
    #[error("iterated coproduct needs n >= 1")]
    ZeroArity,
    #[error("structural data error: {0}")]
    Structural(String),
    #[error("element is not central")]
    NotCentral,
}

/// Sparse element of `A`: basis index -> nonzero coefficient.
#[derive(Clone, PartialEq, Eq, Debug, Default, Hash)]
pub struct AlgElem {
    terms: BTreeMap<usize, CycNum>,
}

impl AlgElem {
    pub fn zero() -> Self {
        AlgElem::default()
    }

    pub fn basis(i: usize, p: u32) -> Self {
        Self::term(i, CycNum::one(p))
    }

    pub fn term(i: usize, c: CycNum) -> Self {
        let mut e = AlgElem::zero();
        e.add_term(i, &c);
        e
    }

    pub fn from_terms(it: impl IntoIterator<Item = (usize, CycNum)>) -> Self {
        let mut e = AlgElem::zero();
        for (i, c) in it {
            e.add_term(i, &c);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&CycNum> {
        self.terms.get(&i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &CycNum)> {
        self.terms.iter().map(|(i, c)| (*i, c))
    }

    pub fn add_term(&mut self, i: usize, c: &CycNum) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&i) {
            Some(x) => {
                *x += c;
                if x.is_zero() {
                    self.terms.remove(&i);
                }
            }
            None => {
                self.terms.insert(i, c.clone());
            }
        }
    }

    pub fn add_scaled(&mut self, other: &AlgElem, s: &CycNum) {
        for (i, c) in other.iter() {
            self.add_term(i, &(c * s));
        }
    }

    pub fn add(&self, other: &AlgElem) -> AlgElem {
        let mut r = self.clone();
        for (i, c) in other.iter() {
            r.add_term(i, c);
        }
        r
    }

    pub fn sub(&self, other: &AlgElem) -> AlgElem {
        let mut r = self.clone();
        for (i, c) in other.iter() {
            r.add_term(i, &-c);
        }
        r
    }

    pub fn scale(&self, s: &CycNum) -> AlgElem {
        if s.is_zero() {
            return AlgElem::zero();
        }
        AlgElem {
            terms: self.terms.iter().map(|(i, c)| (*i, c * s)).collect(),
        }
    }

    pub fn neg(&self) -> AlgElem {
        AlgElem {
            terms: self.terms.iter().map(|(i, c)| (*i, -c)).collect(),
        }
    }

    pub fn to_row(&self) -> SparseRow {
        self.terms.clone()
    }

    pub fn from_row(r: &SparseRow) -> Self {
        AlgElem::from_terms(r.iter().map(|(i, c)| (*i, c.clone())))
    }
}

/// Sparse element of `A^{⊗n}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TensorElem {
    arity: usize,
    terms: BTreeMap<Vec<usize>, CycNum>,
}

impl TensorElem {
    pub fn zero(arity: usize) -> Self {
        assert!(arity >= 1, "tensor arity must be positive");
        TensorElem {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], &CycNum)> {
        self.terms.iter().map(|(k, c)| (k.as_slice(), c))
    }

    pub fn get(&self, key: &[usize]) -> Option<&CycNum> {
        self.terms.get(key)
    }

    pub fn add_term(&mut self, key: Vec<usize>, c: &CycNum) {
        debug_assert_eq!(key.len(), self.arity);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(x) => {
                *x += c;
                if x.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c.clone());
            }
        }
    }

    pub fn add_assign(&mut self, other: &TensorElem) {
        for (k, c) in other.iter() {
            self.add_term(k.to_vec(), c);
        }
    }

    pub fn add(&self, other: &TensorElem) -> TensorElem {
        let mut r = self.clone();
        r.add_assign(other);
        r
    }

    pub fn sub(&self, other: &TensorElem) -> TensorElem {
        let mut r = self.clone();
        for (k, c) in other.iter() {
            r.add_term(k.to_vec(), &-c);
        }
        r
    }

    pub fn scale(&self, s: &CycNum) -> TensorElem {
        let mut r = TensorElem::zero(self.arity);
        for (k, c) in self.iter() {
            r.add_term(k.to_vec(), &(c * s));
        }
        r
    }

    /// `a_1 ⊗ ... ⊗ a_n`.
    pub fn pure(factors: &[&AlgElem]) -> TensorElem {
        let mut r = TensorElem::zero(factors.len());
        r.add_pure(factors, None);
        r
    }

    /// Add `s · a_1 ⊗ ... ⊗ a_n`.
    pub fn add_pure(&mut self, factors: &[&AlgElem], s: Option<&CycNum>) {
        if factors.iter().any(|f| f.is_zero()) {
            return;
        }
        let mut partial: Vec<(Vec<usize>, CycNum)> = match s {
            Some(s) => vec![(Vec::new(), s.clone())],
            None => {
                let p = factors[0].iter().next().unwrap().1.p();
                vec![(Vec::new(), CycNum::one(p))]
            }
        };
        for f in factors {
            let mut next = Vec::with_capacity(partial.len() * f.len());
            for (k, c) in &partial {
                for (i, x) in f.iter() {
                    let mut k2 = k.clone();
                    k2.push(i);
                    next.push((k2, c * x));
                }
            }
            partial = next;
        }
        for (k, c) in partial {
            self.add_term(k, &c);
        }
    }

    /// Interpret an arity-1 tensor as an algebra element.
    pub fn to_alg(&self) -> AlgElem {
        assert_eq!(self.arity, 1);
        AlgElem::from_terms(self.iter().map(|(k, c)| (k[0], c.clone())))
    }

    pub fn from_alg(a: &AlgElem) -> TensorElem {
        let mut r = TensorElem::zero(1);
        for (i, c) in a.iter() {
            r.add_term(vec![i], c);
        }
        r
    }

    /// Reorder legs: leg `k` of the result is leg `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> TensorElem {
        let mut r = TensorElem::zero(self.arity);
        for (k, c) in self.iter() {
            r.add_term(perm.iter().map(|&j| k[j]).collect(), c);
        }
        r
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &TensorElem) -> TensorElem {
        let mut r = TensorElem::zero(self.arity + other.arity);
        for (a, x) in self.iter() {
            for (b, y) in other.iter() {
                let mut k = a.to_vec();
                k.extend_from_slice(b);
                r.add_term(k, &(x * y));
            }
        }
        r
    }
}

/// Ribbon data derived from `R` and `g`.
#[derive(Clone, Debug)]
pub struct Ribbon {
    pub u: AlgElem,
    pub u_inv: AlgElem,
    pub theta: AlgElem,
    pub theta_inv: AlgElem,
}

/// A finite-dimensional (ribbon) Hopf algebra given by tables on a basis.
#[derive(Clone)]
pub struct HopfData {
    pub name: String,
    pub p: u32,
    pub dim: usize,
    pub labels: Vec<String>,
    /// Row-major `dim × dim` table of basis products.
    pub mul_table: Vec<AlgElem>,
    pub comul_table: Vec<TensorElem>,
    pub antipode_table: Vec<AlgElem>,
    pub counit_table: Vec<CycNum>,
    pub unit: AlgElem,
    /// Two-sided integral `Λ`.
    pub integral: AlgElem,
    /// Right integral `λ` as its values on the basis.
    pub lambda_row: Vec<CycNum>,
    /// `R = Σ α_i ⊗ β_i`.
    pub r_terms: Vec<(AlgElem, AlgElem)>,
    pub g: AlgElem,
    pub g_inv: AlgElem,
    /// Algebra generators used for centrality tests.
    pub generators: Vec<AlgElem>,
    antipode_inv_cache: OnceLock<Vec<AlgElem>>,
    ribbon_cache: OnceLock<Result<Ribbon, HopfError>>,
    lambda_pair_cache: OnceLock<Vec<Vec<(usize, CycNum)>>>,
}

impl fmt::Debug for HopfData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HopfData({}, dim {})", self.name, self.dim)
    }
}

/// Raw structure tables, validated into a [`HopfData`] by [`HopfData::new`].
pub struct HopfParts {
    pub name: String,
    pub p: u32,
    pub labels: Vec<String>,
    pub mul_table: Vec<AlgElem>,
    pub comul_table: Vec<TensorElem>,
    pub antipode_table: Vec<AlgElem>,
    pub counit_table: Vec<CycNum>,
    pub unit: AlgElem,
    pub integral: AlgElem,
    pub lambda_row: Vec<CycNum>,
    pub r_terms: Vec<(AlgElem, AlgElem)>,
    pub g: AlgElem,
    pub g_inv: AlgElem,
    pub generators: Vec<AlgElem>,
}

impl HopfData {
    pub fn new(parts: HopfParts) -> Result<Self, HopfError> {
        let dim = parts.labels.len();
        let shape_ok = parts.mul_table.len() == dim * dim
            && parts.comul_table.len() == dim
            && parts.antipode_table.len() == dim
            && parts.counit_table.len() == dim
            && parts.lambda_row.len() == dim;
        if !shape_ok {
            return Err(HopfError::Structural("table sizes do not match the basis".into()));
        }
        Ok(HopfData {
            name: parts.name,
            p: parts.p,
            dim,
            labels: parts.labels,
            mul_table: parts.mul_table,
            comul_table: parts.comul_table,
            antipode_table: parts.antipode_table,
            counit_table: parts.counit_table,
            unit: parts.unit,
            integral: parts.integral,
            lambda_row: parts.lambda_row,
            r_terms: parts.r_terms,
            g: parts.g,
            g_inv: parts.g_inv,
            generators: parts.generators,
            antipode_inv_cache: OnceLock::new(),
            ribbon_cache: OnceLock::new(),
            lambda_pair_cache: OnceLock::new(),
        })
    }

    pub fn zero(&self) -> CycNum {
        CycNum::zero(self.p)
    }

    pub fn one(&self) -> CycNum {
        CycNum::one(self.p)
    }

    pub fn basis(&self, i: usize) -> AlgElem {
        AlgElem::basis(i, self.p)
    }

    pub fn scalar(&self, c: &CycNum) -> AlgElem {
        self.unit.scale(c)
    }

    pub fn mul_basis(&self, i: usize, j: usize) -> &AlgElem {
        &self.mul_table[i * self.dim + j]
    }

    pub fn mul(&self, a: &AlgElem, b: &AlgElem) -> AlgElem {
        let mut r = AlgElem::zero();
        for (i, x) in a.iter() {
            for (j, y) in b.iter() {
                let prod = self.mul_basis(i, j);
                if prod.is_zero() {
                    continue;
                }
                let s = x * y;
                r.add_scaled(prod, &s);
            }
        }
        r
    }

    pub fn mul3(&self, a: &AlgElem, b: &AlgElem, c: &AlgElem) -> AlgElem {
        self.mul(&self.mul(a, b), c)
    }

    pub fn mul_all(&self, factors: &[&AlgElem]) -> AlgElem {
        let mut acc = self.unit.clone();
        for f in factors {
            acc = self.mul(&acc, f);
        }
        acc
    }

    pub fn pow(&self, a: &AlgElem, n: u32) -> AlgElem {
        let mut acc = self.unit.clone();
        for _ in 0..n {
            acc = self.mul(&acc, a);
        }
        acc
    }

    pub fn commutator(&self, a: &AlgElem, b: &AlgElem) -> AlgElem {
        self.mul(a, b).sub(&self.mul(b, a))
    }

    pub fn is_central(&self, a: &AlgElem) -> bool {
        self.generators
            .iter()
            .all(|g| self.commutator(a, g).is_zero())
    }

    pub fn counit(&self, a: &AlgElem) -> CycNum {
        let mut acc = self.zero();
        for (i, c) in a.iter() {
            acc += &(c * &self.counit_table[i]);
        }
        acc
    }

    pub fn lambda(&self, a: &AlgElem) -> CycNum {
        let mut acc = self.zero();
        for (i, c) in a.iter() {
            let l = &self.lambda_row[i];
            if !l.is_zero() {
                acc += &(c * l);
            }
        }
        acc
    }

    /// `λ(a·b)` without forming the full product.
    pub fn lambda_mul(&self, a: &AlgElem, b: &AlgElem) -> CycNum {
        let mut acc = self.zero();
        for (i, x) in a.iter() {
            for (j, y) in b.iter() {
                let l = self.lambda(self.mul_basis(i, j));
                if !l.is_zero() {
                    acc += &(&(x * y) * &l);
                }
            }
        }
        acc
    }

    fn apply_table(&self, table: &[AlgElem], a: &AlgElem) -> AlgElem {
        let mut r = AlgElem::zero();
        for (i, c) in a.iter() {
            r.add_scaled(&table[i], c);
        }
        r
    }

    pub fn antipode(&self, a: &AlgElem) -> AlgElem {
        self.apply_table(&self.antipode_table, a)
    }

    fn antipode_inv_table(&self) -> &Vec<AlgElem> {
        self.antipode_inv_cache.get_or_init(|| {
            (0..self.dim)
                .into_par_iter()
                .map(|i| {
                    let conj = self.mul3(&self.g_inv, &self.basis(i), &self.g);
                    self.antipode(&conj)
                })
                .collect()
        })
    }

    /// `S^{-1}(a) = S(g^{-1} a g)`, using `S^2(x) = g x g^{-1}`.
    pub fn antipode_inv(&self, a: &AlgElem) -> AlgElem {
        self.apply_table(self.antipode_inv_table(), a)
    }

    pub fn antipode_inv_basis(&self, i: usize) -> &AlgElem {
        &self.antipode_inv_table()[i]
    }

    pub fn comul(&self, a: &AlgElem) -> TensorElem {
        let mut r = TensorElem::zero(2);
        for (i, c) in a.iter() {
            for (k, x) in self.comul_table[i].iter() {
                r.add_term(k.to_vec(), &(c * x));
            }
        }
        r
    }

    /// `Δ^{(n-1)}(a)` with `n` legs; `comul_n(a, 1) = a`.
    pub fn comul_n(&self, a: &AlgElem, n: usize) -> Result<TensorElem, HopfError> {
        if n == 0 {
            return Err(HopfError::ZeroArity);
        }
        let mut t = TensorElem::from_alg(a);
        for _ in 1..n {
            t = self.comul_leg(&t, 0);
        }
        Ok(t)
    }

    /// Apply `Δ` to leg `k` (the two new legs replace it in place).
    pub fn comul_leg(&self, t: &TensorElem, k: usize) -> TensorElem {
        let mut r = TensorElem::zero(t.arity() + 1);
        for (key, c) in t.iter() {
            for (d, x) in self.comul_table[key[k]].iter() {
                let mut nk = Vec::with_capacity(key.len() + 1);
                nk.extend_from_slice(&key[..k]);
                nk.extend_from_slice(d);
                nk.extend_from_slice(&key[k + 1..]);
                r.add_term(nk, &(c * x));
            }
        }
        r
    }

    /// Apply `ε` to leg `k` (arity drops by one; needs arity >= 2).
    pub fn counit_leg(&self, t: &TensorElem, k: usize) -> TensorElem {
        let mut r = TensorElem::zero(t.arity() - 1);
        for (key, c) in t.iter() {
            let e = &self.counit_table[key[k]];
            if e.is_zero() {
                continue;
            }
            let mut nk = key.to_vec();
            nk.remove(k);
            r.add_term(nk, &(c * e));
        }
        r
    }

    /// Apply a linear map (given on basis elements) to leg `k`.
    pub fn map_leg(&self, t: &TensorElem, k: usize, f: impl Fn(usize) -> AlgElem) -> TensorElem {
        let mut r = TensorElem::zero(t.arity());
        let mut cache: BTreeMap<usize, AlgElem> = BTreeMap::new();
        for (key, c) in t.iter() {
            let img = cache.entry(key[k]).or_insert_with(|| f(key[k]));
            for (j, x) in img.iter() {
                let mut nk = key.to_vec();
                nk[k] = j;
                r.add_term(nk, &(c * x));
            }
        }
        r
    }

    /// Multiply leg `k` by `a` on the left (`left = true`) or right.
    pub fn mul_leg(&self, t: &TensorElem, k: usize, a: &AlgElem, left: bool) -> TensorElem {
        self.map_leg(t, k, |i| {
            let b = self.basis(i);
            if left {
                self.mul(a, &b)
            } else {
                self.mul(&b, a)
            }
        })
    }

    /// Componentwise product in `A^{⊗n}`.
    pub fn tensor_mul(&self, a: &TensorElem, b: &TensorElem) -> TensorElem {
        assert_eq!(a.arity(), b.arity());
        let n = a.arity();
        let mut r = TensorElem::zero(n);
        for (ka, x) in a.iter() {
            'outer: for (kb, y) in b.iter() {
                let mut legs: Vec<&AlgElem> = Vec::with_capacity(n);
                for l in 0..n {
                    let prod = self.mul_basis(ka[l], kb[l]);
                    if prod.is_zero() {
                        continue 'outer;
                    }
                    legs.push(prod);
                }
                r.add_pure(&legs, Some(&(x * y)));
            }
        }
        r
    }

    /// Multiply a tensor by a pure tensor `f_1 ⊗ ... ⊗ f_n` on the right.
    pub fn tensor_mul_pure(&self, a: &TensorElem, factors: &[&AlgElem]) -> TensorElem {
        let n = a.arity();
        let mut r = TensorElem::zero(n);
        for (ka, x) in a.iter() {
            let mut legs = Vec::with_capacity(n);
            for l in 0..n {
                let prod = self.mul(&self.basis(ka[l]), factors[l]);
                if prod.is_zero() {
                    break;
                }
                legs.push(prod);
            }
            if legs.len() == n {
                let refs: Vec<&AlgElem> = legs.iter().collect();
                r.add_pure(&refs, Some(x));
            }
        }
        r
    }

    pub fn r_tensor(&self) -> TensorElem {
        let mut r = TensorElem::zero(2);
        for (a, b) in &self.r_terms {
            r.add_pure(&[a, b], None);
        }
        r
    }

    /// `R^{-1} = (S ⊗ 1) R` as a list of pure tensors.
    pub fn r_inv_terms(&self) -> Vec<(AlgElem, AlgElem)> {
        self.r_terms
            .iter()
            .map(|(a, b)| (self.antipode(a), b.clone()))
            .collect()
    }

    /// Solve `a·x = 1`.
    pub fn inverse(&self, a: &AlgElem) -> Result<AlgElem, HopfError> {
        let cols: Vec<AlgElem> = (0..self.dim)
            .into_par_iter()
            .map(|j| self.mul(a, &self.basis(j)))
            .collect();
        let mut rows = vec![SparseRow::new(); self.dim];
        for (j, col) in cols.iter().enumerate() {
            for (i, c) in col.iter() {
                rows[i].insert(j, c.clone());
            }
        }
        let rhs: Vec<CycNum> = (0..self.dim)
            .map(|i| self.unit.get(i).cloned().unwrap_or_else(|| self.zero()))
            .collect();
        match linalg::solve(self.p, &rows, &rhs, self.dim) {
            Some((x, ker)) if ker.is_empty() => Ok(AlgElem::from_row(&x)),
            _ => Err(HopfError::Structural("element is not invertible".into())),
        }
    }

    /// `u = Σ S(β_i) α_i`, `θ = g u^{-1}` and `θ^{-1} = Σ α_i S(β_i) g`.
    pub fn ribbon_elements(&self) -> Result<&Ribbon, HopfError> {
        self.ribbon_cache
            .get_or_init(|| {
                let mut u = AlgElem::zero();
                let mut theta_inv = AlgElem::zero();
                for (a, b) in &self.r_terms {
                    let sb = self.antipode(b);
                    u = u.add(&self.mul(&sb, a));
                    theta_inv = theta_inv.add(&self.mul(a, &sb));
                }
                let theta_inv = self.mul(&theta_inv, &self.g);
                let u_inv = self.inverse(&u)?;
                let theta = self.mul(&self.g, &u_inv);
                if !self.mul(&theta, &theta_inv).sub(&self.unit).is_zero() {
                    return Err(HopfError::Structural(
                        "θ and Σ α_i S(β_i) g are not mutually inverse".into(),
                    ));
                }
                Ok(Ribbon {
                    u,
                    u_inv,
                    theta,
                    theta_inv,
                })
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Nonzero values `λ(e_i e_k)` for each `i`, as `(k, value)` lists.
    pub fn lambda_pairing(&self) -> &[Vec<(usize, CycNum)>] {
        self.lambda_pair_cache.get_or_init(|| {
            (0..self.dim)
                .into_par_iter()
                .map(|i| {
                    (0..self.dim)
                        .filter_map(|k| {
                            let l = self.lambda(self.mul_basis(i, k));
                            (!l.is_zero()).then_some((k, l))
                        })
                        .collect()
                })
                .collect()
        })
    }

    /// `μ(x, y) = Σ λ(x_1 y_1) λ(x_2 y_2)` on `A ⊗ A`.
    pub fn mu(&self, x: &TensorElem, y: &TensorElem) -> CycNum {
        assert!(x.arity() == 2 && y.arity() == 2);
        let lp = self.lambda_pairing();
        let mut acc = self.zero();
        for (key, cx) in x.iter() {
            for (k, lik) in &lp[key[0]] {
                for (l, ljl) in &lp[key[1]] {
                    if let Some(cy) = y.get(&[*k, *l]) {
                        acc += &(&(cx * lik) * &(ljl * cy));
                    }
                }
            }
        }
        acc
    }

    /// The element `a` with `λ(a·b) = f(b)` for every basis `b`.
    pub fn phi_solve(&self, f: &[CycNum]) -> Result<AlgElem, HopfError> {
        assert_eq!(f.len(), self.dim);
        let mut rows = vec![SparseRow::new(); self.dim];
        for (j, pairs) in self.lambda_pairing().iter().enumerate() {
            for (b, l) in pairs {
                rows[*b].insert(j, l.clone());
            }
        }
        match linalg::solve(self.p, &rows, f, self.dim) {
            Some((x, ker)) if ker.is_empty() => Ok(AlgElem::from_row(&x)),
            _ => Err(HopfError::Structural(
                "the pairing λ(ab) is degenerate; λ is not a valid integral".into(),
            )),
        }
    }

    pub fn format_elem(&self, a: &AlgElem) -> String {
        if a.is_zero() {
            return "0".into();
        }
        a.iter()
            .map(|(i, c)| format!("({})·{}", c, self.labels[i]))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}
