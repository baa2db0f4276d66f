//! Group algebras `k[G]`, finite presentations, Andrews–Curtis moves and the
//! homomorphism count `Σ_a ∏_i λ(R_i(a))`.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::cyclo::CycNum;
use crate::hopf::{AlgElem, HopfData, HopfError, HopfParts, TensorElem};

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid Cayley table: {0}")]
    InvalidTable(String),
    #[error("search space |G|^n = {size} exceeds the limit {limit}")]
    TooLarge { size: f64, limit: f64 },
    #[error("move not applicable: {0}")]
    Precondition(String),
    #[error(transparent)]
    Hopf(#[from] HopfError),
}

/// Largest `|G|^n` that `hom_count` will enumerate.
pub const HOM_COUNT_LIMIT: f64 = 1e8;

/// A finite group given by its Cayley table; element 0 is the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    inv: Vec<usize>,
}

impl FiniteGroup {
    /// Validate a Cayley table (`table[i][j] = i·j`, identity 0).
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self, GroupError> {
        let n = table.len();
        if n == 0 {
            return Err(GroupError::InvalidTable("empty table".into()));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(GroupError::InvalidTable(format!("row {i} has {} entries", row.len())));
            }
            if let Some(x) = row.iter().find(|&&x| x >= n) {
                return Err(GroupError::InvalidTable(format!("entry {x} out of range in row {i}")));
            }
        }
        for i in 0..n {
            if table[0][i] != i || table[i][0] != i {
                return Err(GroupError::InvalidTable(format!("0 is not an identity for {i}")));
            }
        }
        let mut inv = vec![usize::MAX; n];
        for i in 0..n {
            match (0..n).find(|&j| table[i][j] == 0) {
                Some(j) if table[j][i] == 0 => inv[i] = j,
                _ => return Err(GroupError::InvalidTable(format!("{i} has no inverse"))),
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(GroupError::InvalidTable(format!(
                            "associativity fails at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }
        Ok(FiniteGroup { table, inv })
    }

    /// Parse a CSV Cayley table.
    pub fn parse_csv(text: &str) -> Result<Self, GroupError> {
        let mut table = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<usize>, _> = line.split(',').map(|x| x.trim().parse()).collect();
            table.push(row.map_err(|e| GroupError::Parse {
                line: ln + 1,
                msg: format!("{e}"),
            })?);
        }
        Self::from_table(table)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in &self.table {
            let r: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn cyclic(n: usize) -> Self {
        let table = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        Self::from_table(table).expect("cyclic group table")
    }

    /// The group generated by a list of permutations (closure under composition).
    /// Elements are ordered by discovery; the identity comes first.
    pub fn from_permutations(gens: &[Vec<usize>]) -> Self {
        let deg = gens.first().map_or(0, |g| g.len());
        let id: Vec<usize> = (0..deg).collect();
        let mut elems = vec![id];
        let mut k = 0;
        while k < elems.len() {
            for g in gens {
                let h: Vec<usize> = elems[k].iter().map(|&i| g[i]).collect();
                if !elems.contains(&h) {
                    elems.push(h);
                }
            }
            k += 1;
        }
        // (a·b)(i) = a(b(i))
        let table = elems
            .iter()
            .map(|a| {
                elems
                    .iter()
                    .map(|b| {
                        let c: Vec<usize> = b.iter().map(|&i| a[i]).collect();
                        elems.iter().position(|e| *e == c).expect("closed")
                    })
                    .collect()
            })
            .collect();
        Self::from_table(table).expect("permutation group table")
    }

    pub fn symmetric3() -> Self {
        Self::from_permutations(&[vec![1, 0, 2], vec![1, 2, 0]])
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    /// Value of a signed word under the assignment `x_i ↦ a[i]`.
    pub fn eval_word(&self, word: &[i32], a: &[usize]) -> usize {
        word.iter().fold(0, |acc, &l| {
            let x = a[l.unsigned_abs() as usize - 1];
            self.mul(acc, if l > 0 { x } else { self.inv[x] })
        })
    }
}

/// `⟨x_1..x_n | R_1..R_m⟩`; letters are signed 1-based generator indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    pub n_generators: usize,
    pub relators: Vec<Vec<i32>>,
}

impl Presentation {
    pub fn new(n_generators: usize, relators: Vec<Vec<i32>>) -> Result<Self, GroupError> {
        for (i, r) in relators.iter().enumerate() {
            for &l in r {
                if l == 0 || l.unsigned_abs() as usize > n_generators {
                    return Err(GroupError::Precondition(format!(
                        "relator {} uses letter {l} outside 1..{n_generators}",
                        i + 1
                    )));
                }
            }
        }
        Ok(Presentation {
            n_generators,
            relators,
        })
    }

    pub fn parse(text: &str) -> Result<Self, GroupError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, head) = lines.next().ok_or(GroupError::Parse {
            line: 1,
            msg: "missing `generators n` line".into(),
        })?;
        let n = match head.split_whitespace().collect::<Vec<_>>()[..] {
            ["generators", n] => n.parse::<usize>().map_err(|e| GroupError::Parse {
                line: ln,
                msg: format!("{e}"),
            })?,
            _ => {
                return Err(GroupError::Parse {
                    line: ln,
                    msg: "expected `generators n`".into(),
                })
            }
        };
        let mut relators = Vec::new();
        for (ln, line) in lines {
            if line == "1" {
                relators.push(Vec::new());
                continue;
            }
            let mut word = Vec::new();
            for tok in line.split_whitespace() {
                let l: i32 = tok.parse().map_err(|e| GroupError::Parse {
                    line: ln,
                    msg: format!("bad letter `{tok}`: {e}"),
                })?;
                if l == 0 || l.unsigned_abs() as usize > n {
                    return Err(GroupError::Parse {
                        line: ln,
                        msg: format!("letter {l} outside ±1..±{n}"),
                    });
                }
                word.push(l);
            }
            relators.push(word);
        }
        Ok(Presentation {
            n_generators: n,
            relators,
        })
    }

    /// One-point union: generators of `other` are renumbered after ours.
    pub fn wedge(&self, other: &Presentation) -> Presentation {
        let shift = self.n_generators as i32;
        let mut relators = self.relators.clone();
        relators.extend(other.relators.iter().map(|r| {
            r.iter()
                .map(|&l| if l > 0 { l + shift } else { l - shift })
                .collect()
        }));
        Presentation {
            n_generators: self.n_generators + other.n_generators,
            relators,
        }
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "generators {}", self.n_generators)?;
        for r in &self.relators {
            if r.is_empty() {
                writeln!(f, "1")?;
            } else {
                let w: Vec<String> = r.iter().map(|l| format!("{l:+}")).collect();
                writeln!(f, "{}", w.join(" "))?;
            }
        }
        Ok(())
    }
}

pub fn invert_word(w: &[i32]) -> Vec<i32> {
    w.iter().rev().map(|l| -l).collect()
}

/// Andrews–Curtis moves. Relator indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AcMove {
    Swap(usize, usize),
    /// `R_i ↦ w R_i w⁻¹`.
    Conjugate(usize, Vec<i32>),
    /// `R_i ↦ R_i⁻¹`.
    Invert(usize),
    /// `R_i ↦ R_i R_j`.
    Multiply(usize, usize),
    /// New generator `y` and relator `y R`.
    AddGenerator(Vec<i32>),
    /// Inverse of `AddGenerator`: drop a generator `y` and a relator `y^{±1} R`
    /// when `y` occurs nowhere else.
    RemoveGenerator,
}

fn check_rel(p: &Presentation, i: usize) -> Result<(), GroupError> {
    if i >= p.relators.len() {
        return Err(GroupError::Precondition(format!(
            "relator index {i} out of range (have {})",
            p.relators.len()
        )));
    }
    Ok(())
}

pub fn ac_move(p: &Presentation, mv: &AcMove) -> Result<Presentation, GroupError> {
    let mut out = p.clone();
    match mv {
        AcMove::Swap(i, j) => {
            check_rel(p, *i)?;
            check_rel(p, *j)?;
            out.relators.swap(*i, *j);
        }
        AcMove::Conjugate(i, w) => {
            check_rel(p, *i)?;
            Presentation::new(p.n_generators, vec![w.clone()])?;
            let mut r = w.clone();
            r.extend_from_slice(&p.relators[*i]);
            r.extend(invert_word(w));
            out.relators[*i] = r;
        }
        AcMove::Invert(i) => {
            check_rel(p, *i)?;
            out.relators[*i] = invert_word(&p.relators[*i]);
        }
        AcMove::Multiply(i, j) => {
            check_rel(p, *i)?;
            check_rel(p, *j)?;
            if i == j {
                return Err(GroupError::Precondition("multiply needs two distinct relators".into()));
            }
            let rj = p.relators[*j].clone();
            out.relators[*i].extend(rj);
        }
        AcMove::AddGenerator(w) => {
            Presentation::new(p.n_generators, vec![w.clone()])?;
            out.n_generators += 1;
            let mut r = vec![out.n_generators as i32];
            r.extend_from_slice(w);
            out.relators.push(r);
        }
        AcMove::RemoveGenerator => {
            let found = (1..=p.n_generators as i32).rev().find_map(|y| {
                let occurrences: usize = p
                    .relators
                    .iter()
                    .map(|r| r.iter().filter(|l| l.abs() == y).count())
                    .sum();
                if occurrences != 1 {
                    return None;
                }
                let ri = p.relators.iter().position(|r| r.first().map(|l| l.abs()) == Some(y))?;
                Some((y, ri))
            });
            let Some((y, ri)) = found else {
                return Err(GroupError::Precondition(
                    "no relator of the form y·R with y occurring nowhere else".into(),
                ));
            };
            out.relators.remove(ri);
            out.n_generators -= 1;
            for r in out.relators.iter_mut() {
                for l in r.iter_mut() {
                    if l.abs() > y {
                        *l -= l.signum();
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Number of assignments `x_i ↦ a_i ∈ G` killing every relator.
pub fn hom_count(p: &Presentation, g: &FiniteGroup) -> Result<u64, GroupError> {
    let size = (g.order() as f64).powi(p.n_generators as i32);
    if size > HOM_COUNT_LIMIT {
        return Err(GroupError::TooLarge {
            size,
            limit: HOM_COUNT_LIMIT,
        });
    }
    let n = p.n_generators;
    if n == 0 {
        return Ok(u64::from(p.relators.iter().all(|r| r.is_empty())));
    }
    let ord = g.order();
    let count = (0..ord)
        .into_par_iter()
        .map(|first| {
            let mut a = vec![0usize; n];
            a[0] = first;
            let mut c = 0u64;
            loop {
                if p.relators.iter().all(|r| g.eval_word(r, &a) == 0) {
                    c += 1;
                }
                // odometer over a[1..]
                let mut k = 1;
                while k < n {
                    a[k] += 1;
                    if a[k] < ord {
                        break;
                    }
                    a[k] = 0;
                    k += 1;
                }
                if k == n {
                    break;
                }
            }
            c
        })
        .sum();
    Ok(count)
}

/// `k[G]` with `Δa = a⊗a`, `S(a) = a⁻¹`, `R = 1⊗1`, `g = 1`, `Λ = Σ a`, `λ(a) = δ_{a,1}`.
pub fn group_algebra(g: &FiniteGroup, p: u32) -> Result<HopfData, GroupError> {
    let n = g.order();
    let one = CycNum::one(p);
    let mul_table = (0..n * n)
        .map(|k| AlgElem::basis(g.mul(k / n, k % n), p))
        .collect();
    let comul_table = (0..n)
        .map(|a| {
            let mut t = TensorElem::zero(2);
            t.add_term(vec![a, a], &one);
            t
        })
        .collect();
    let unit = AlgElem::basis(0, p);
    Ok(HopfData::new(HopfParts {
        name: format!("k[G], |G|={n}"),
        p,
        labels: (0..n).map(|a| format!("g{a}")).collect(),
        mul_table,
        comul_table,
        antipode_table: (0..n).map(|a| AlgElem::basis(g.inv(a), p)).collect(),
        counit_table: vec![one.clone(); n],
        unit: unit.clone(),
        integral: AlgElem::from_terms((0..n).map(|a| (a, one.clone()))),
        lambda_row: (0..n)
            .map(|a| if a == 0 { one.clone() } else { CycNum::zero(p) })
            .collect(),
        r_terms: vec![(unit.clone(), unit.clone())],
        g: unit.clone(),
        g_inv: unit,
        generators: (0..n).map(|a| AlgElem::basis(a, p)).collect(),
    })?)
}
