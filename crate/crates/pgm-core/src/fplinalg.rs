//! Dense exact linear algebra over F_p: reduced row echelon form, kernels,
//! solving, and an incremental subspace (echelon basis with membership
//! reduction). Everything is deterministic: pivots are always the first
//! nonzero entry scanning left to right.

use crate::fp;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpMat {
    pub p: u64,
    pub rows: usize,
    pub cols: usize,
    data: Vec<u64>,
}

impl FpMat {
    pub fn zeros(p: u64, rows: usize, cols: usize) -> Self {
        FpMat {
            p,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(p: u64, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(p: u64, rows: Vec<Vec<u64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            debug_assert_eq!(row.len(), c);
            data.extend(row.into_iter().map(|x| x % p));
        }
        FpMat {
            p,
            rows: r,
            cols: c,
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.p;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[u64]) -> Vec<u64> {
        debug_assert_eq!(v.len(), self.cols);
        let mut out = vec![0u64; self.rows];
        for i in 0..self.rows {
            let mut acc = 0u64;
            let row = self.row(i);
            for (a, &x) in row.iter().zip(v) {
                acc = (acc + fp::mul_mod(*a, x, self.p)) % self.p;
            }
            out[i] = acc;
        }
        out
    }

    pub fn mul(&self, other: &FpMat) -> FpMat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = FpMat::zeros(self.p, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let t = (out.get(i, j) + fp::mul_mod(a, other.get(k, j), self.p)) % self.p;
                    out.set(i, j, t);
                }
            }
        }
        out
    }

    /// In-place reduced row echelon form; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let p = self.p;
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| self.get(i, col) != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..self.cols {
                    let a = self.get(r, j);
                    let b = self.get(pr, j);
                    self.set(r, j, b);
                    self.set(pr, j, a);
                }
            }
            let inv = fp::inv_mod_p(self.get(r, col), p);
            for j in 0..self.cols {
                let v = fp::mul_mod(self.get(r, j), inv, p);
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i != r && self.get(i, col) != 0 {
                    let f = self.get(i, col);
                    for j in 0..self.cols {
                        let t = fp::sub_mod(self.get(i, j), fp::mul_mod(f, self.get(r, j), p), p);
                        self.set(i, j, t);
                    }
                }
            }
            pivots.push(col);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the null space {x : Ax = 0}.
    pub fn kernel_basis(&self) -> Vec<Vec<u64>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut v = vec![0u64; self.cols];
            v[free] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = fp::sub_mod(0, m.get(r, free), self.p);
            }
            basis.push(v);
        }
        basis
    }

    /// One solution of Ax = b, if any.
    pub fn solve(&self, b: &[u64]) -> Option<Vec<u64>> {
        debug_assert_eq!(b.len(), self.rows);
        let mut aug = FpMat::zeros(self.p, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, b[i]);
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![0u64; self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug.get(r, self.cols);
        }
        Some(x)
    }
}

/// An F_p-subspace kept as a fully reduced echelon basis, supporting
/// incremental insertion and membership reduction.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub p: u64,
    pub dim_ambient: usize,
    /// Echelon rows, sorted by lead index, each normalized to lead 1 and
    /// reduced against one another.
    rows: Vec<Vec<u64>>,
    leads: Vec<usize>,
}

impl Subspace {
    pub fn new(p: u64, dim_ambient: usize) -> Self {
        Subspace {
            p,
            dim_ambient,
            rows: Vec::new(),
            leads: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn basis(&self) -> &[Vec<u64>] {
        &self.rows
    }

    /// Reduces v against the subspace; the result is zero iff v is a member.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        let mut v = v.to_vec();
        for (row, &lead) in self.rows.iter().zip(&self.leads) {
            if v[lead] != 0 {
                let f = v[lead];
                for (x, &r) in v.iter_mut().zip(row.iter()) {
                    *x = fp::sub_mod(*x, fp::mul_mod(f, r, self.p), self.p);
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v).iter().all(|&c| c == 0)
    }

    /// Inserts v; returns true if it enlarged the subspace.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        let mut v = self.reduce(v);
        let Some(lead) = v.iter().position(|&c| c != 0) else {
            return false;
        };
        let inv = fp::inv_mod_p(v[lead], self.p);
        for x in v.iter_mut() {
            *x = fp::mul_mod(*x, inv, self.p);
        }
        // keep existing rows reduced against the new one
        for row in self.rows.iter_mut() {
            if row[lead] != 0 {
                let f = row[lead];
                for (x, &r) in row.iter_mut().zip(v.iter()) {
                    *x = fp::sub_mod(*x, fp::mul_mod(f, r, self.p), self.p);
                }
            }
        }
        let pos = self.leads.partition_point(|&l| l < lead);
        self.rows.insert(pos, v);
        self.leads.insert(pos, lead);
        true
    }

    pub fn insert_all<'a, I: IntoIterator<Item = &'a Vec<u64>>>(&mut self, vs: I) {
        for v in vs {
            self.insert(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_and_solve() {
        // over F_5: x + 2y + 3z = 0, 2x + 4y + 2z = 0 (independent rows)
        let m = FpMat::from_rows(5, vec![vec![1, 2, 3], vec![2, 4, 2]]);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 1);
        for v in &k {
            assert!(m.apply(v).iter().all(|&c| c == 0));
        }
        let b = vec![1, 2];
        let x = m.solve(&b).unwrap();
        assert_eq!(m.apply(&x), b);
    }

    #[test]
    fn subspace_membership() {
        let mut s = Subspace::new(3, 4);
        assert!(s.insert(&[1, 2, 0, 1]));
        assert!(s.insert(&[0, 1, 1, 0]));
        assert!(!s.insert(&[1, 0, 1, 1])); // = row1 - 2*row2 over F_3
        assert_eq!(s.dim(), 2);
        assert!(s.contains(&[2, 0, 2, 2])); // 2*row1 + 2*row2
        assert!(!s.contains(&[0, 0, 1, 0]));
    }

    #[test]
    fn rank_of_identity() {
        let m = FpMat::identity(7, 5);
        assert_eq!(m.rank(), 5);
        assert!(m.kernel_basis().is_empty());
    }
}
