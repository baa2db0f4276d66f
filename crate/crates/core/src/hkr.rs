//! Evaluation of colored Kirby diagrams.
//!
//! Labeling convention (fixed by calibration: a positive kink on an unknot
//! evaluates to `λ(zθ)`, and R2, R3, snakes and swings are invariant):
//! - a crossing with both strands pointing down receives one term `α ⊗ β` of
//!   `R`. At `x+` the strand running from top `P+1` to bottom `P` gets `α` and
//!   the other gets `β`; at `x-` the strand from top `P` to bottom `P+1` gets
//!   `S(α)` and the other gets `β`.
//! - at a crossing, a strand pointing up gets `S` of the label it would carry
//!   pointing down (a sideways crossing is a rotated one with a `g` and a `g⁻¹`).
//! - a cup traversed right to left carries `g`, a cap traversed right to left
//!   carries `g⁻¹`.
//! - a dot around `t` strands distributes `Δ^{(t-1)}(w)` left to right, with
//!   `S` applied on strands pointing up; an empty dot contributes `ε(w)`.
//! - labels multiply on the right along the orientation starting at the base;
//!   a closed component with word `W` and color `z` contributes `λ(g z W)`.
//!
//! Two backends: a slice contraction (rows top to bottom, one tensor leg per
//! partial arc) and a plain sum over label assignments used as an oracle.

use std::collections::HashMap;
use std::sync::OnceLock;

use rustc_hash::FxHashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::center::{classify_trace_element, CenterBasis, CenterError};
use crate::cyclo::CycNum;
use crate::hopf::{AlgElem, HopfData, HopfError, TensorElem};
use crate::kirby::{linking_data, CompRef, Diagram, Event, KirbyError, Step, Tracing};

#[derive(Debug, Error)]
pub enum HkrError {
    #[error(transparent)]
    Kirby(#[from] KirbyError),
    #[error(transparent)]
    Hopf(#[from] HopfError),
    #[error(transparent)]
    Center(#[from] CenterError),
    #[error("coloring: {0}")]
    Coloring(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

/// Colors of closed undotted components (by number) and dotted circles (by increasing dot id).
#[derive(Clone, Debug)]
pub struct Coloring {
    pub undotted: Vec<AlgElem>,
    pub dotted: Vec<AlgElem>,
}

impl Coloring {
    pub fn uniform(d: &Diagram, z: &AlgElem, w: &AlgElem) -> Result<Self, HkrError> {
        let t = d.trace()?;
        Ok(Coloring {
            undotted: vec![z.clone(); t.n_closed()],
            dotted: vec![w.clone(); t.n_dotted()],
        })
    }

    fn check(&self, h: &HopfData, t: &Tracing) -> Result<(), HkrError> {
        if self.undotted.len() != t.n_closed() || self.dotted.len() != t.n_dotted() {
            return Err(HkrError::Coloring(format!(
                "need {} undotted and {} dotted colors, got {} and {}",
                t.n_closed(),
                t.n_dotted(),
                self.undotted.len(),
                self.dotted.len()
            )));
        }
        for (i, z) in self.undotted.iter().enumerate() {
            if !h.is_central(z) {
                return Err(HkrError::Coloring(format!("color of component {i} is not central")));
            }
        }
        for (i, w) in self.dotted.iter().enumerate() {
            if !h.is_central(w) {
                return Err(HkrError::Coloring(format!("color of dotted circle {} is not central", i + 1)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Scalar(CycNum),
    /// One leg per open component.
    Tensor(TensorElem),
}

impl Value {
    pub fn scalar(&self) -> Option<&CycNum> {
        match self {
            Value::Scalar(c) => Some(c),
            Value::Tensor(_) => None,
        }
    }
}

/// `C_+^{exp_plus} C_-^{exp_minus}` applied to a raw value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Normalization {
    pub c_plus: CycNum,
    pub c_minus: CycNum,
    pub exp_plus: i64,
    pub exp_minus: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalResult {
    pub value: Value,
    pub normalization: Option<Normalization>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Slice,
    Sum,
}

type Sparse = Vec<(u32, CycNum)>;

fn sparse(a: &AlgElem) -> Sparse {
    a.iter().map(|(i, c)| (i as u32, c.clone())).collect()
}

/// Per-crossing labels `(A, B)` for each term of `R`, indexed by
/// `[positive][A points down][B points down]`.
struct Labels {
    cross: [[[Vec<(Sparse, Sparse)>; 2]; 2]; 2],
    g: Sparse,
    g_inv: Sparse,
}

impl Labels {
    fn new(h: &HopfData) -> Self {
        let up = |a: &AlgElem| h.antipode(a);
        let mut cross: [[[Vec<(Sparse, Sparse)>; 2]; 2]; 2] = Default::default();
        for (pos, table) in cross.iter_mut().enumerate() {
            for (ad, row) in table.iter_mut().enumerate() {
                for (bd, slot) in row.iter_mut().enumerate() {
                    *slot = h
                        .r_terms
                        .iter()
                        .map(|(al, be)| {
                            let (mut a, mut b) = if pos == 1 {
                                (al.clone(), be.clone())
                            } else {
                                (be.clone(), h.antipode(al))
                            };
                            if ad == 0 {
                                a = up(&a);
                            }
                            if bd == 0 {
                                b = up(&b);
                            }
                            (sparse(&a), sparse(&b))
                        })
                        .collect();
                }
            }
        }
        Labels {
            cross,
            g: sparse(&h.g),
            g_inv: sparse(&h.g_inv),
        }
    }

    fn crossing(&self, positive: bool, a_down: bool, b_down: bool) -> &[(Sparse, Sparse)] {
        &self.cross[usize::from(positive)][usize::from(a_down)][usize::from(b_down)]
    }
}

/// `x ↦ λ(g z x)` as a vector over the basis, plus its value on `1`.
struct Functional {
    on_basis: Vec<CycNum>,
    on_one: CycNum,
}

impl Functional {
    fn new(h: &HopfData, z: &AlgElem) -> Self {
        let gz = h.mul(&h.g, z);
        let lp = h.lambda_pairing();
        let mut on_basis = vec![h.zero(); h.dim];
        for (i, c) in gz.iter() {
            for (k, l) in &lp[i] {
                on_basis[*k] += &(c * l);
            }
        }
        let on_one = h.lambda(&gz);
        Functional { on_basis, on_one }
    }

    fn at(&self, i: u32) -> &CycNum {
        if i == ONE {
            &self.on_one
        } else {
            &self.on_basis[i as usize]
        }
    }
}

/// Marker for the unit in a tensor leg, so fresh arcs stay one term wide.
const ONE: u32 = 0xFFF;
const LEG_BITS: usize = 12;
const MAX_LEGS: usize = 10;

/// Leg indices packed `LEG_BITS` bits each, leg 0 lowest.
type Key = u128;

fn leg(k: Key, i: usize) -> u32 {
    ((k >> (LEG_BITS * i)) & ONE as u128) as u32
}

fn set_leg(k: Key, i: usize, v: u32) -> Key {
    let s = LEG_BITS * i;
    (k & !((ONE as u128) << s)) | ((v as u128) << s)
}

fn drop_leg(k: Key, i: usize) -> Key {
    let s = LEG_BITS * i;
    let low = k & ((1u128 << s) - 1);
    low | ((k >> (s + LEG_BITS)) << s)
}

/// Sparse basis products, converted on first use.
struct Products<'a> {
    h: &'a HopfData,
    table: Vec<OnceLock<Sparse>>,
    one: CycNum,
}

impl<'a> Products<'a> {
    fn new(h: &'a HopfData) -> Self {
        Products {
            h,
            table: (0..h.dim * h.dim).map(|_| OnceLock::new()).collect(),
            one: CycNum::one(h.p),
        }
    }

    fn each(&self, left: u32, right: u32, mut f: impl FnMut(u32, &CycNum)) {
        match (left, right) {
            (ONE, x) | (x, ONE) => f(x, &self.one),
            (i, j) => {
                let (i, j) = (i as usize, j as usize);
                let prod = self.table[i * self.h.dim + j].get_or_init(|| sparse(self.h.mul_basis(i, j)));
                for (k, c) in prod {
                    f(*k, c);
                }
            }
        }
    }
}

fn expand_one(h: &HopfData, i: u32) -> Sparse {
    if i == ONE {
        sparse(&h.unit)
    } else {
        vec![(i, CycNum::one(h.p))]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum End {
    Pos(usize),
    Top,
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    tail: End,
    head: End,
    comp: CompRef,
}

/// Tensor state over the partial arcs.
struct State {
    arcs: Vec<Arc>,
    terms: FxHashMap<Key, CycNum>,
}

/// A label to multiply into leg `leg`, on the right (`append`) or left.
struct Target {
    leg: usize,
    append: bool,
}

impl State {
    fn arc_at(&self, pos: usize) -> (usize, bool) {
        for (k, a) in self.arcs.iter().enumerate() {
            if a.head == End::Pos(pos) {
                return (k, true);
            }
            if a.tail == End::Pos(pos) {
                return (k, false);
            }
        }
        panic!("no arc ends at position {pos}");
    }

    fn shift_from(&mut self, from: usize, by: isize) {
        for a in self.arcs.iter_mut() {
            for e in [&mut a.tail, &mut a.head] {
                if let End::Pos(i) = e {
                    if *i >= from {
                        *i = (*i as isize + by) as usize;
                    }
                }
            }
        }
    }

    fn push_leg(&mut self, arc: Arc, init: &Sparse) -> Result<(), HkrError> {
        if self.arcs.len() == MAX_LEGS {
            return Err(HkrError::Precondition(format!(
                "more than {MAX_LEGS} partial arcs at once; the diagram is too wide"
            )));
        }
        let n = self.arcs.len();
        self.arcs.push(arc);
        let old = std::mem::take(&mut self.terms);
        for (k, c) in old {
            for (i, x) in init {
                add_to(&mut self.terms, set_leg(k, n, *i), &(&c * x));
            }
        }
        Ok(())
    }

    /// `Σ_t Π_legs` over pure tensors `terms[t]`, one factor per target.
    fn apply(&mut self, pr: &Products, targets: &[Target], labels: &[Vec<&Sparse>], scales: Option<&[CycNum]>) {
        let old: Vec<(Key, CycNum)> = std::mem::take(&mut self.terms).into_iter().collect();
        let work = |chunk: &[(Key, CycNum)]| {
            let mut out: FxHashMap<Key, CycNum> = FxHashMap::default();
            for (key, c) in chunk {
                for (t, factors) in labels.iter().enumerate() {
                    let c0 = match scales {
                        Some(s) => c * &s[t],
                        None => c.clone(),
                    };
                    let mut partial = vec![(*key, c0)];
                    for (tg, f) in targets.iter().zip(factors) {
                        let mut next = Vec::with_capacity(partial.len() * f.len());
                        for (k, c1) in &partial {
                            let cur = leg(*k, tg.leg);
                            for (j, cj) in f.iter() {
                                let c2 = c1 * cj;
                                let (l, r) = if tg.append { (cur, *j) } else { (*j, cur) };
                                pr.each(l, r, |i, ci| next.push((set_leg(*k, tg.leg, i), &c2 * ci)));
                            }
                        }
                        partial = next;
                    }
                    for (k, c) in partial {
                        add_to(&mut out, k, &c);
                    }
                }
            }
            out
        };
        self.terms = if old.len() > 256 {
            old.par_chunks(64)
                .map(work)
                .reduce(FxHashMap::default, |mut a, b| {
                    for (k, c) in b {
                        add_to(&mut a, k, &c);
                    }
                    a
                })
        } else {
            work(&old)
        };
    }

    /// Replace legs `first, second` by their product `first · mid · second`, kept at the lower index.
    fn merge(&mut self, pr: &Products, first: usize, second: usize, mid: Option<&Sparse>) {
        let (keep, drop) = (first.min(second), first.max(second));
        let old = std::mem::take(&mut self.terms);
        for (key, c) in old {
            let mut left: Vec<(u32, CycNum)> = Vec::new();
            match mid {
                None => left.push((leg(key, first), c.clone())),
                Some(m) => {
                    for (j, cj) in m {
                        let cc = &c * cj;
                        pr.each(leg(key, first), *j, |i, ci| left.push((i, &cc * ci)));
                    }
                }
            }
            for (i, ci) in left {
                pr.each(i, leg(key, second), |r, cr| {
                    add_to(&mut self.terms, drop_leg(set_leg(key, keep, r), drop), &(&ci * cr));
                });
            }
        }
        let a = self.arcs[first];
        let b = self.arcs[second];
        self.arcs[keep] = Arc {
            tail: a.tail,
            head: b.head,
            comp: a.comp,
        };
        self.arcs.remove(drop);
    }

    fn contract(&mut self, l: usize, f: &Functional) {
        let old = std::mem::take(&mut self.terms);
        for (key, c) in old {
            let v = f.at(leg(key, l));
            if v.is_zero() {
                continue;
            }
            add_to(&mut self.terms, drop_leg(key, l), &(&c * v));
        }
        self.arcs.remove(l);
    }

    fn scale(&mut self, s: &CycNum) {
        if s.is_zero() {
            self.terms.clear();
            return;
        }
        for c in self.terms.values_mut() {
            *c = &*c * s;
        }
    }
}

fn add_to(m: &mut FxHashMap<Key, CycNum>, k: Key, c: &CycNum) {
    if c.is_zero() {
        return;
    }
    match m.get_mut(&k) {
        Some(x) => {
            *x += c;
            if x.is_zero() {
                m.remove(&k);
            }
        }
        None => {
            m.insert(k, c.clone());
        }
    }
}

/// Direction (down?) of every strand node, read off the traced steps.
fn node_dirs(t: &Tracing) -> HashMap<(usize, usize), bool> {
    let mut dirs = HashMap::new();
    for c in t.closed.iter().chain(t.open.iter()) {
        for s in &c.steps {
            match *s {
                Step::Vert { row, top, bot, down } => {
                    dirs.insert((row, top), down);
                    dirs.insert((row + 1, bot), down);
                }
                Step::Cup { row, pos, leftward } => {
                    dirs.insert((row + 1, pos), leftward);
                    dirs.insert((row + 1, pos + 1), !leftward);
                }
                Step::Cap { row, pos, leftward } => {
                    dirs.insert((row, pos), !leftward);
                    dirs.insert((row, pos + 1), leftward);
                }
            }
        }
    }
    dirs
}

fn dot_colors(t: &Tracing, col: &Coloring) -> HashMap<usize, AlgElem> {
    t.dot_ids.iter().copied().zip(col.dotted.iter().cloned()).collect()
}

fn slice_eval(h: &HopfData, d: &Diagram, col: &Coloring) -> Result<Value, HkrError> {
    // λ(g z ·) is cyclic for central z, so closed arcs are contracted as soon
    // as a cap joins their ends and base points play no role here.
    let t = d.trace()?;
    col.check(h, &t)?;
    let labels = Labels::new(h);
    let dirs = node_dirs(&t);
    let funcs: Vec<Functional> = col.undotted.iter().map(|z| Functional::new(h, z)).collect();
    let dcol = dot_colors(&t, col);
    let p = h.p;
    if h.dim >= ONE as usize {
        return Err(HkrError::Precondition(format!("algebra dimension {} too large for the slice engine", h.dim)));
    }
    let pr = Products::new(h);
    let mut st = State {
        arcs: Vec::new(),
        terms: FxHashMap::from_iter([(0, CycNum::one(p))]),
    };
    let one = vec![(ONE, CycNum::one(p))];
    let owner_at = |b: usize, i: usize| d.strand_owner(&t, b, i).expect("every strand is owned");
    for i in 0..t.widths[0] {
        let down = dirs[&(0, i)];
        let arc = Arc {
            tail: if down { End::Top } else { End::Pos(i) },
            head: if down { End::Pos(i) } else { End::Top },
            comp: owner_at(0, i),
        };
        st.push_leg(arc, &one)?;
    }
    for (r, e) in d.events.iter().enumerate() {
        match *e {
            Event::Cup(pos) => {
                st.shift_from(pos, 2);
                let left_down = dirs[&(r + 1, pos)];
                let comp = t.arc_owner[&r];
                if left_down {
                    st.push_leg(
                        Arc {
                            tail: End::Pos(pos + 1),
                            head: End::Pos(pos),
                            comp,
                        },
                        &labels.g,
                    )?;
                } else {
                    st.push_leg(
                        Arc {
                            tail: End::Pos(pos),
                            head: End::Pos(pos + 1),
                            comp,
                        },
                        &one,
                    )?;
                }
            }
            Event::Cap(pos) => {
                let (a, a_head) = st.arc_at(pos);
                let (b, _) = st.arc_at(pos + 1);
                // Rightward traversal when the left strand flows down into the cap.
                let bead = if a_head { None } else { Some(&labels.g_inv) };
                if a == b {
                    let CompRef::Closed(c) = st.arcs[a].comp else {
                        unreachable!("open arcs never close")
                    };
                    if let Some(bd) = bead {
                        st.apply(&pr, &[Target { leg: a, append: true }], &[vec![bd]], None);
                    }
                    st.contract(a, &funcs[c]);
                } else if a_head {
                    st.merge(&pr, a, b, None);
                } else {
                    st.merge(&pr, b, a, bead);
                }
                st.shift_from(pos + 2, -2);
            }
            Event::Cross { pos, positive } => {
                let (ka, a_head) = st.arc_at(pos + 1);
                let (kb, b_head) = st.arc_at(pos);
                let a_down = dirs[&(r, pos + 1)];
                let b_down = dirs[&(r, pos)];
                debug_assert_eq!(a_head, a_down);
                debug_assert_eq!(b_head, b_down);
                let terms = labels.crossing(positive, a_down, b_down);
                let factors: Vec<Vec<&Sparse>> = terms.iter().map(|(x, y)| vec![x, y]).collect();
                st.apply(
                    &pr,
                    &[
                        Target {
                            leg: ka,
                            append: a_head,
                        },
                        Target {
                            leg: kb,
                            append: b_head,
                        },
                    ],
                    &factors,
                    None,
                );
                // Swap the two ends.
                for x in st.arcs.iter_mut() {
                    for e in [&mut x.tail, &mut x.head] {
                        if *e == End::Pos(pos) {
                            *e = End::Pos(usize::MAX);
                        }
                    }
                }
                for x in st.arcs.iter_mut() {
                    for e in [&mut x.tail, &mut x.head] {
                        if *e == End::Pos(pos + 1) {
                            *e = End::Pos(pos);
                        } else if *e == End::Pos(usize::MAX) {
                            *e = End::Pos(pos + 1);
                        }
                    }
                }
            }
            Event::Dot { lo, len, id } => {
                let w = &dcol[&id];
                if len == 0 {
                    st.scale(&h.counit(w));
                    continue;
                }
                let tw = h.comul_n(w, len)?;
                let mut targets = Vec::new();
                let mut ups = Vec::new();
                for k in 0..len {
                    let (leg, head) = st.arc_at(lo + k);
                    targets.push(Target { leg, append: head });
                    ups.push(!dirs[&(r, lo + k)]);
                }
                let mut lab: Vec<Vec<Sparse>> = Vec::new();
                let mut scales = Vec::new();
                for (key, c) in tw.iter() {
                    lab.push(
                        key.iter()
                            .zip(&ups)
                            .map(|(&i, &up)| {
                                if up {
                                    sparse(&h.antipode_table[i])
                                } else {
                                    vec![(i as u32, CycNum::one(p))]
                                }
                            })
                            .collect(),
                    );
                    scales.push(c.clone());
                }
                let refs: Vec<Vec<&Sparse>> = lab.iter().map(|v| v.iter().collect()).collect();
                st.apply(&pr, &targets, &refs, Some(&scales));
            }
            Event::Base { .. } => {}
        }
    }
    if st.arcs.is_empty() {
        let v = st.terms.remove(&0).unwrap_or_else(|| CycNum::zero(p));
        return Ok(Value::Scalar(v));
    }
    // Open components: order legs by component number.
    let mut order: Vec<(usize, usize)> = st
        .arcs
        .iter()
        .enumerate()
        .map(|(k, a)| match a.comp {
            CompRef::Open(n) => (n, k),
            CompRef::Closed(_) => unreachable!("closed arcs are contracted"),
        })
        .collect();
    order.sort_unstable();
    if order.len() != t.open.len() {
        return Err(HkrError::Precondition("open component split into pieces".into()));
    }
    let mut out = TensorElem::zero(order.len());
    for (key, c) in &st.terms {
        let mut partial: Vec<(Vec<usize>, CycNum)> = vec![(Vec::new(), c.clone())];
        for &(_, k) in &order {
            let mut next = Vec::new();
            for (pk, pc) in &partial {
                for (i, ci) in expand_one(h, leg(*key, k)) {
                    let mut k2 = pk.clone();
                    k2.push(i as usize);
                    next.push((k2, pc * &ci));
                }
            }
            partial = next;
        }
        for (k2, c2) in partial {
            out.add_term(k2, &c2);
        }
    }
    Ok(Value::Tensor(out))
}

/// Plain sum over one `R` term per crossing and one `Δ^{(t-1)}(w)` term per dot.
fn sum_eval(h: &HopfData, d: &Diagram, col: &Coloring) -> Result<Value, HkrError> {
    let d = d.with_explicit_bases()?;
    let t = d.trace()?;
    col.check(h, &t)?;
    let dcol = dot_colors(&t, col);
    let p = h.p;
    // Choices: crossings and non-empty dots, in row order.
    let mut choice_rows = Vec::new();
    let mut dot_terms: HashMap<usize, Vec<(Vec<usize>, CycNum)>> = HashMap::new();
    let mut scalar = CycNum::one(p);
    for (r, e) in d.events.iter().enumerate() {
        match *e {
            Event::Cross { .. } => choice_rows.push((r, h.r_terms.len())),
            Event::Dot { len: 0, id, .. } => scalar = &scalar * &h.counit(&dcol[&id]),
            Event::Dot { len, id, .. } => {
                let tw = h.comul_n(&dcol[&id], len)?;
                let terms: Vec<_> = tw.iter().map(|(k, c)| (k.to_vec(), c.clone())).collect();
                choice_rows.push((r, terms.len()));
                dot_terms.insert(r, terms);
            }
            _ => {}
        }
    }
    let funcs: Vec<AlgElem> = col.undotted.iter().map(|z| h.mul(&h.g, z)).collect();
    let total: usize = choice_rows.iter().map(|(_, n)| *n).product();
    let row_slot: HashMap<usize, usize> = choice_rows.iter().enumerate().map(|(k, (r, _))| (*r, k)).collect();

    let word = |steps: &[Step], choice: &[usize]| -> (AlgElem, CycNum) {
        let mut w = h.unit.clone();
        let mut coeff = CycNum::one(p);
        for s in steps {
            let bead: Option<AlgElem> = match *s {
                Step::Vert { row, top, down, .. } => match d.events[row] {
                    Event::Cross { pos, positive } if top == pos || top == pos + 1 => {
                        let (al, be) = &h.r_terms[choice[row_slot[&row]]];
                        let is_a = top == pos + 1;
                        let x = match (positive, is_a) {
                            (true, true) => al.clone(),
                            (true, false) => be.clone(),
                            (false, true) => be.clone(),
                            (false, false) => h.antipode(al),
                        };
                        Some(if down { x } else { h.antipode(&x) })
                    }
                    Event::Dot { lo, len, .. } if len > 0 && top >= lo && top < lo + len => {
                        let (key, c) = &dot_terms[&row][choice[row_slot[&row]]];
                        if top == lo {
                            coeff = &coeff * c;
                        }
                        let i = key[top - lo];
                        Some(if down { h.basis(i) } else { h.antipode_table[i].clone() })
                    }
                    _ => None,
                },
                Step::Cup { leftward: true, .. } => Some(h.g.clone()),
                Step::Cap { leftward: true, .. } => Some(h.g_inv.clone()),
                _ => None,
            };
            if let Some(b) = bead {
                w = h.mul(&w, &b);
            }
        }
        (w, coeff)
    };

    let n_open = t.open.len();
    let eval_one = |idx: usize| -> Value {
        let mut choice = vec![0; choice_rows.len()];
        let mut rem = idx;
        for (k, (_, n)) in choice_rows.iter().enumerate() {
            choice[k] = rem % n;
            rem /= n;
        }
        let mut val = scalar.clone();
        for (c, comp) in t.closed.iter().enumerate() {
            let (w, coeff) = word(&comp.steps, &choice);
            val = &(&val * &coeff) * &h.lambda(&h.mul(&funcs[c], &w));
            if val.is_zero() {
                break;
            }
        }
        if n_open == 0 {
            return Value::Scalar(val);
        }
        let mut words = Vec::new();
        for comp in &t.open {
            let (w, coeff) = word(&comp.steps, &choice);
            val = &val * &coeff;
            words.push(w);
        }
        let refs: Vec<&AlgElem> = words.iter().collect();
        Value::Tensor(TensorElem::pure(&refs).scale(&val))
    };
    let zero = if n_open == 0 {
        Value::Scalar(CycNum::zero(p))
    } else {
        Value::Tensor(TensorElem::zero(n_open))
    };
    let add = |a: Value, b: Value| match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(&x + &y),
        (Value::Tensor(x), Value::Tensor(y)) => Value::Tensor(x.add(&y)),
        _ => unreachable!(),
    };
    Ok((0..total)
        .into_par_iter()
        .map(eval_one)
        .reduce(|| zero.clone(), add))
}

/// Evaluate with a chosen backend.
pub fn evaluate_with(h: &HopfData, d: &Diagram, col: &Coloring, engine: Engine) -> Result<Value, HkrError> {
    match engine {
        Engine::Slice => slice_eval(h, d, col),
        Engine::Sum => sum_eval(h, d, col),
    }
}

pub fn evaluate(h: &HopfData, d: &Diagram, col: &Coloring) -> Result<EvalResult, HkrError> {
    Ok(EvalResult {
        value: slice_eval(h, d, col)?,
        normalization: None,
    })
}

fn closed_scalar(v: Value) -> Result<CycNum, HkrError> {
    match v {
        Value::Scalar(c) => Ok(c),
        Value::Tensor(_) => Err(HkrError::Precondition("diagram is an open tangle".into())),
    }
}

/// A trace element checked once for use on many diagrams: `z`, a dotted
/// color `w` with `[zw] = [Λ]`, and `C_± = λ(zθ^{±1})` when `z ∈ 𝒯³`.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub z: AlgElem,
    pub w: AlgElem,
    pub c_pm: Option<(CycNum, CycNum)>,
}

/// Check `z ∈ 𝒯⁴` and fix `w`. A missing `w` is solved from `[zw] = [Λ]`.
pub fn prepare(h: &HopfData, cb: &CenterBasis, z: &AlgElem, w: Option<&AlgElem>) -> Result<Prepared, HkrError> {
    let report = classify_trace_element(h, cb, z, None)?;
    if !report.in_t4 {
        return Err(HkrError::Precondition("z is not in 𝒯⁴ (no class [w] with [zw] = [Λ])".into()));
    }
    let w = match w {
        Some(w) => {
            if !cb.same_class(h, &h.mul(z, w), &h.integral) {
                return Err(HkrError::Precondition("[zw] ≠ [Λ] for the given witness".into()));
            }
            w.clone()
        }
        None => report.t4_witness.expect("in 𝒯⁴").0,
    };
    Ok(Prepared {
        z: z.clone(),
        w,
        c_pm: report.in_t3.then_some((report.c_plus, report.c_minus)),
    })
}

/// `Z_[z]` with `z` on every undotted and `w` on every dotted component.
pub fn invariant_prepared(h: &HopfData, d: &Diagram, t: &Prepared) -> Result<CycNum, HkrError> {
    let col = Coloring::uniform(d, &t.z, &t.w)?;
    closed_scalar(slice_eval(h, d, &col)?)
}

/// `C_+^{n-σ_+} C_-^{n-σ_-} Z_[z](M)` with `n` the number of dotted circles
/// and `σ_±` taken from the linking matrix including dotted circles as 0-framed.
pub fn boundary_prepared(h: &HopfData, d: &Diagram, t: &Prepared) -> Result<EvalResult, HkrError> {
    let Some((c_plus, c_minus)) = &t.c_pm else {
        return Err(HkrError::Precondition(
            "z is not in 𝒯³ (C_+ or C_- vanishes, or z ∉ 𝒯_Z)".into(),
        ));
    };
    let ld = linking_data(d)?;
    let n = ld.n_dotted as i64;
    let norm = Normalization {
        c_plus: c_plus.clone(),
        c_minus: c_minus.clone(),
        exp_plus: n - ld.full_sigma.0 as i64,
        exp_minus: n - ld.full_sigma.1 as i64,
    };
    let raw = invariant_prepared(h, d, t)?;
    let v = &(&raw * &pow_i(&norm.c_plus, norm.exp_plus)?) * &pow_i(&norm.c_minus, norm.exp_minus)?;
    Ok(EvalResult {
        value: Value::Scalar(v),
        normalization: Some(norm),
    })
}

/// [`invariant_prepared`] after [`prepare`]; `z` must lie in 𝒯⁴.
pub fn invariant(
    h: &HopfData,
    cb: &CenterBasis,
    d: &Diagram,
    z: &AlgElem,
    w: Option<&AlgElem>,
) -> Result<CycNum, HkrError> {
    invariant_prepared(h, d, &prepare(h, cb, z, w)?)
}

/// [`boundary_prepared`] after [`prepare`]; `z` must lie in 𝒯³.
pub fn boundary_invariant(
    h: &HopfData,
    cb: &CenterBasis,
    d: &Diagram,
    z: &AlgElem,
) -> Result<EvalResult, HkrError> {
    boundary_prepared(h, d, &prepare(h, cb, z, None)?)
}

fn pow_i(c: &CycNum, e: i64) -> Result<CycNum, HkrError> {
    c.pow(e)
        .map_err(|_| HkrError::Precondition("normalizing constant is zero".into()))
}
