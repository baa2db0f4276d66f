//! Sparse exact linear algebra over `k`: reduced row echelon form, null
//! spaces and linear solves.

use std::collections::BTreeMap;

use crate::cyclo::CycNum;

pub type SparseRow = BTreeMap<usize, CycNum>;

/// Fully reduced row echelon form built row by row.
#[derive(Clone, Debug)]
pub struct Rref {
    ncols: usize,
    /// Pivot column -> row with a 1 in that column and zeros in every other pivot column.
    rows: BTreeMap<usize, SparseRow>,
}

fn axpy(target: &mut SparseRow, factor: &CycNum, src: &SparseRow) {
    for (c, x) in src {
        let delta = factor * x;
        match target.get_mut(c) {
            Some(t) => {
                *t -= &delta;
                if t.is_zero() {
                    target.remove(c);
                }
            }
            None => {
                target.insert(*c, -delta);
            }
        }
    }
}

impl Rref {
    pub fn new(ncols: usize) -> Self {
        Rref {
            ncols,
            rows: BTreeMap::new(),
        }
    }

    pub fn from_rows(ncols: usize, rows: impl IntoIterator<Item = SparseRow>) -> Self {
        let mut r = Self::new(ncols);
        for row in rows {
            r.push(row);
        }
        r
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Reduce `row` against the current pivots.
    pub fn reduce(&self, mut row: SparseRow) -> SparseRow {
        row.retain(|_, x| !x.is_zero());
        let cols: Vec<usize> = row
            .keys()
            .copied()
            .filter(|c| self.rows.contains_key(c))
            .collect();
        for c in cols {
            if let Some(f) = row.get(&c).cloned() {
                axpy(&mut row, &f, &self.rows[&c]);
            }
        }
        row
    }

    /// Insert a row; returns false when it was already in the span.
    pub fn push(&mut self, row: SparseRow) -> bool {
        let row = self.reduce(row);
        let Some((&pc, lead)) = row.iter().next() else {
            return false;
        };
        let inv = lead.inverse().expect("nonzero pivot");
        let row: SparseRow = row.iter().map(|(c, x)| (*c, x * &inv)).collect();
        for other in self.rows.values_mut() {
            if let Some(f) = other.get(&pc).cloned() {
                axpy(other, &f, &row);
            }
        }
        self.rows.insert(pc, row);
        true
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows.keys().copied().collect()
    }

    pub fn pivot_rows(&self) -> impl Iterator<Item = (&usize, &SparseRow)> {
        self.rows.iter()
    }

    /// Basis of `{x : M x = 0}` for the matrix whose rows were pushed.
    pub fn nullspace(&self, p: u32) -> Vec<SparseRow> {
        let mut out = Vec::new();
        for free in 0..self.ncols {
            if self.rows.contains_key(&free) {
                continue;
            }
            let mut v = SparseRow::new();
            v.insert(free, CycNum::one(p));
            for (pc, row) in &self.rows {
                if let Some(x) = row.get(&free) {
                    v.insert(*pc, -x);
                }
            }
            out.push(v);
        }
        out
    }
}

/// Solve `M x = b` where `M` is given by sparse rows over `ncols` unknowns.
/// Returns a particular solution and a kernel basis, or `None` if inconsistent.
pub fn solve(
    p: u32,
    rows: &[SparseRow],
    rhs: &[CycNum],
    ncols: usize,
) -> Option<(SparseRow, Vec<SparseRow>)> {
    let mut r = Rref::new(ncols + 1);
    for (row, b) in rows.iter().zip(rhs) {
        let mut aug = row.clone();
        if !b.is_zero() {
            aug.insert(ncols, b.clone());
        }
        r.push(aug);
    }
    if r.rows.contains_key(&ncols) {
        return None;
    }
    let mut x = SparseRow::new();
    for (pc, row) in &r.rows {
        if let Some(b) = row.get(&ncols) {
            x.insert(*pc, b.clone());
        }
    }
    let kernel = r
        .nullspace(p)
        .into_iter()
        .filter(|v| !v.contains_key(&ncols))
        .collect();
    Some((x, kernel))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(p: u32, v: &[i64]) -> SparseRow {
        v.iter()
            .enumerate()
            .filter(|(_, x)| **x != 0)
            .map(|(i, x)| (i, CycNum::from_int(p, *x)))
            .collect()
    }

    #[test]
    fn nullspace_small() {
        let p = 5;
        let r = Rref::from_rows(3, vec![row(p, &[1, 2, 3]), row(p, &[2, 4, 6])]);
        assert_eq!(r.rank(), 1);
        let ns = r.nullspace(p);
        assert_eq!(ns.len(), 2);
        for v in ns {
            let dot = v.iter().fold(CycNum::zero(p), |acc, (c, x)| {
                acc + x * &CycNum::from_int(p, [1, 2, 3][*c])
            });
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn solve_consistent_and_not() {
        let p = 7;
        let rows = vec![row(p, &[1, 1]), row(p, &[1, -1])];
        let (x, k) = solve(p, &rows, &[CycNum::from_int(p, 3), CycNum::from_int(p, 1)], 2).unwrap();
        assert!(k.is_empty());
        assert_eq!(x[&0], CycNum::from_int(p, 2));
        assert_eq!(x[&1], CycNum::from_int(p, 1));
        let rows = vec![row(p, &[1, 1]), row(p, &[2, 2])];
        assert!(solve(p, &rows, &[CycNum::from_int(p, 1), CycNum::from_int(p, 1)], 2).is_none());
    }
}
