//! Finite local commutative F_p-algebras used as coefficient rings.
//!
//! An algebra is given by structure constants over F_p together with a list
//! of basis indices spanning the maximal ideal. Validation checks
//! commutativity, associativity, unitality, nilpotence of the maximal ideal
//! and that the quotient is a field. Locality is what makes "leading
//! coefficient is a unit" a residue test, which the series layer relies on
//! for inversion.
//!
//! Convention: basis index 0 is the unit element.

use crate::error::{Error, Result};
use crate::fp;
use std::sync::Arc;

/// Element of a coefficient algebra: coordinates in the fixed basis.
pub type AElem = Vec<u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientAlgebra {
    pub p: u64,
    /// Dimension r over F_p.
    pub basis_dim: usize,
    /// mult_table[i][j] = coordinates of e_i * e_j.
    pub mult_table: Vec<Vec<AElem>>,
    /// Basis indices spanning the maximal ideal (sorted, no duplicates).
    pub max_ideal_basis: Vec<usize>,
    /// Degree of the residue field over F_p.
    pub residue_degree: usize,
}

impl CoefficientAlgebra {
    /// The prime field F_p.
    pub fn prime_field(p: u64) -> Result<Arc<Self>> {
        Self::finite_field(p, 1)
    }

    /// The field F_{p^f}, presented on the power basis of the
    /// lexicographically smallest monic irreducible of degree f.
    pub fn finite_field(p: u64, f: usize) -> Result<Arc<Self>> {
        fp::check_odd_prime(p)?;
        if f == 0 || f > 4 {
            return Err(Error::Unsupported(format!("residue degree {f}")));
        }
        if f == 1 {
            let table = vec![vec![vec![1u64]]];
            return Self::new(p, 1, table, vec![]);
        }
        let poly = smallest_irreducible(p, f);
        // reduction of x^f: x^f = -(poly[0] + poly[1] x + ... + poly[f-1] x^{f-1})
        let mut table = vec![vec![vec![0u64; f]; f]; f];
        for i in 0..f {
            for j in 0..f {
                // x^{i+j} reduced mod poly
                let mut acc = vec![0u64; 2 * f];
                acc[i + j] = 1;
                reduce_by_poly(&mut acc, &poly, p, f);
                table[i][j] = acc[..f].to_vec();
            }
        }
        Self::new(p, f, table, vec![])
    }

    /// Builds and validates an algebra from explicit data.
    pub fn new(
        p: u64,
        basis_dim: usize,
        mult_table: Vec<Vec<AElem>>,
        mut max_ideal_basis: Vec<usize>,
    ) -> Result<Arc<Self>> {
        fp::check_odd_prime(p)?;
        if basis_dim == 0 || basis_dim > 16 {
            return Err(Error::Unsupported(format!("algebra dimension {basis_dim}")));
        }
        if mult_table.len() != basis_dim
            || mult_table.iter().any(|row| {
                row.len() != basis_dim || row.iter().any(|e| e.len() != basis_dim)
            })
        {
            return Err(Error::MalformedInput(
                "mult_table must be r x r x r".to_string(),
            ));
        }
        let mult_table: Vec<Vec<AElem>> = mult_table
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|e| e.into_iter().map(|c| c % p).collect())
                    .collect()
            })
            .collect();
        max_ideal_basis.sort_unstable();
        max_ideal_basis.dedup();
        if max_ideal_basis.iter().any(|&i| i == 0 || i >= basis_dim) {
            return Err(Error::MalformedInput(
                "max ideal indices must be nonzero basis indices".to_string(),
            ));
        }
        let residue_degree = basis_dim - max_ideal_basis.len();
        let alg = CoefficientAlgebra {
            p,
            basis_dim,
            mult_table,
            max_ideal_basis,
            residue_degree,
        };
        alg.validate()?;
        Ok(Arc::new(alg))
    }

    fn validate(&self) -> Result<()> {
        let r = self.basis_dim;
        // e_0 is the unit
        for i in 0..r {
            let ei = self.basis_elem(i);
            if self.mult_table[0][i] != ei || self.mult_table[i][0] != ei {
                return Err(Error::MalformedInput(
                    "basis element 0 must be the multiplicative unit".to_string(),
                ));
            }
        }
        for i in 0..r {
            for j in i + 1..r {
                if self.mult_table[i][j] != self.mult_table[j][i] {
                    return Err(Error::NotCommutative { i, j });
                }
            }
        }
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    let ij_k = self.mul(&self.mult_table[i][j], &self.basis_elem(k));
                    let i_jk = self.mul(&self.basis_elem(i), &self.mult_table[j][k]);
                    if ij_k != i_jk {
                        return Err(Error::NotAssociative { i, j, k });
                    }
                }
            }
        }
        // the claimed maximal ideal is an ideal
        for &i in &self.max_ideal_basis {
            for j in 0..r {
                if !self.in_max_ideal(&self.mult_table[i][j]) {
                    return Err(Error::NotLocal {
                        reason: format!("e_{i} * e_{j} leaves the span of the maximal ideal"),
                    });
                }
            }
        }
        // nilpotent: m^k shrinks to zero within r steps
        let mut gens: Vec<AElem> = self
            .max_ideal_basis
            .iter()
            .map(|&i| self.basis_elem(i))
            .collect();
        for _ in 0..r + 1 {
            if gens.is_empty() {
                break;
            }
            let mut next = Vec::new();
            for g in &gens {
                for &i in &self.max_ideal_basis {
                    let prod = self.mul(g, &self.basis_elem(i));
                    if prod.iter().any(|&c| c != 0) {
                        next.push(prod);
                    }
                }
            }
            gens = reduce_span(next, self.p);
        }
        if !gens.is_empty() {
            return Err(Error::NotLocal {
                reason: "maximal ideal is not nilpotent".to_string(),
            });
        }
        // quotient is a field: every element outside m must be invertible.
        // Exhaustive over the quotient (desk scale keeps this tiny).
        let e = self.residue_degree as u32;
        let q = self.p.pow(e);
        if q > 1 << 16 {
            return Err(Error::Unsupported(format!(
                "residue field of size {q} too large for the exhaustive field check"
            )));
        }
        let complement: Vec<usize> =
            (0..r).filter(|i| !self.max_ideal_basis.contains(i)).collect();
        debug_assert_eq!(complement.len(), e as usize);
        for code in 1..q {
            let mut x = vec![0u64; r];
            let mut c = code;
            for &idx in &complement {
                x[idx] = c % self.p;
                c /= self.p;
            }
            if self.inverse(&x).is_none() {
                return Err(Error::NotLocal {
                    reason: "an element outside the maximal ideal is not invertible".to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn is_field(&self) -> bool {
        self.max_ideal_basis.is_empty()
    }

    /// Smallest e with m^e = 0 (1 for fields).
    pub fn nilpotency_class(&self) -> usize {
        if self.is_field() {
            return 1;
        }
        let mut gens: Vec<AElem> = self
            .max_ideal_basis
            .iter()
            .map(|&i| self.basis_elem(i))
            .collect();
        let mut e = 1;
        while !gens.is_empty() {
            let mut next = Vec::new();
            for g in &gens {
                for &i in &self.max_ideal_basis {
                    let prod = self.mul(g, &self.basis_elem(i));
                    if prod.iter().any(|&c| c != 0) {
                        next.push(prod);
                    }
                }
            }
            gens = reduce_span(next, self.p);
            e += 1;
        }
        e
    }

    pub fn zero(&self) -> AElem {
        vec![0; self.basis_dim]
    }

    pub fn one(&self) -> AElem {
        self.basis_elem(0)
    }

    pub fn basis_elem(&self, i: usize) -> AElem {
        let mut e = vec![0; self.basis_dim];
        e[i] = 1;
        e
    }

    /// Embeds a residue of F_p.
    pub fn from_scalar(&self, c: u64) -> AElem {
        let mut e = vec![0; self.basis_dim];
        e[0] = c % self.p;
        e
    }

    pub fn is_zero(&self, a: &AElem) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &AElem, b: &AElem) -> AElem {
        a.iter().zip(b).map(|(&x, &y)| (x + y) % self.p).collect()
    }

    pub fn sub(&self, a: &AElem, b: &AElem) -> AElem {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| fp::sub_mod(x, y, self.p))
            .collect()
    }

    pub fn neg(&self, a: &AElem) -> AElem {
        a.iter().map(|&x| fp::sub_mod(0, x, self.p)).collect()
    }

    pub fn scalar_mul(&self, c: u64, a: &AElem) -> AElem {
        a.iter().map(|&x| fp::mul_mod(c, x, self.p)).collect()
    }

    pub fn mul(&self, a: &AElem, b: &AElem) -> AElem {
        let mut out = vec![0u64; self.basis_dim];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                if bj == 0 {
                    continue;
                }
                let c = fp::mul_mod(ai, bj, self.p);
                for (k, &t) in self.mult_table[i][j].iter().enumerate() {
                    out[k] = (out[k] + fp::mul_mod(c, t, self.p)) % self.p;
                }
            }
        }
        out
    }

    /// An element lies in the maximal ideal iff its coordinates outside the
    /// ideal's basis indices vanish.
    pub fn in_max_ideal(&self, a: &AElem) -> bool {
        a.iter()
            .enumerate()
            .all(|(i, &c)| c == 0 || self.max_ideal_basis.contains(&i))
    }

    /// Local ring test: unit iff residue is nonzero.
    pub fn is_unit(&self, a: &AElem) -> bool {
        !self.in_max_ideal(a)
    }

    /// Exact inverse via the regular representation, or None for non-units.
    pub fn inverse(&self, a: &AElem) -> Option<AElem> {
        let r = self.basis_dim;
        // solve (mult-by-a) x = e_0 over F_p
        let mut mat = vec![vec![0u64; r + 1]; r];
        for j in 0..r {
            let col = self.mul(a, &self.basis_elem(j));
            for i in 0..r {
                mat[i][j] = col[i];
            }
        }
        mat[0][r] = 1;
        solve_square(mat, self.p)
    }

    /// Multiplicative inverse, erroring on non-units.
    pub fn inv(&self, a: &AElem) -> Result<AElem> {
        self.inverse(a).ok_or(Error::NonUnit)
    }

    pub fn pow(&self, a: &AElem, mut n: u64) -> AElem {
        let mut acc = self.one();
        let mut base = a.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            n >>= 1;
        }
        acc
    }

    /// All q^r elements, in a fixed base-p order.
    pub fn elements(&self) -> Vec<AElem> {
        let total = self.p.pow(self.basis_dim as u32);
        (0..total)
            .map(|code| {
                let mut x = vec![0u64; self.basis_dim];
                let mut c = code;
                for coord in x.iter_mut() {
                    *coord = c % self.p;
                    c /= self.p;
                }
                x
            })
            .collect()
    }

    pub fn units(&self) -> Vec<AElem> {
        self.elements()
            .into_iter()
            .filter(|x| self.is_unit(x))
            .collect()
    }
}

/// The prime-field embedding F_p -> A followed by nothing else: maps a
/// dim-1 element into `target`. More generally embeds coordinates of a
/// subfield presented on the prime field.
pub fn embed_prime_subfield(a: &AElem, target: &CoefficientAlgebra) -> AElem {
    debug_assert_eq!(a.len(), 1);
    target.from_scalar(a[0])
}

fn reduce_by_poly(acc: &mut [u64], poly: &[u64], p: u64, f: usize) {
    for d in (f..acc.len()).rev() {
        let c = acc[d];
        if c == 0 {
            continue;
        }
        acc[d] = 0;
        // x^d = x^{d-f} * x^f = -x^{d-f} * (poly[0] + ... + poly[f-1] x^{f-1})
        for (i, &pi) in poly.iter().enumerate().take(f) {
            let t = fp::mul_mod(c, pi, p);
            acc[d - f + i] = fp::sub_mod(acc[d - f + i], t, p);
        }
    }
}

/// Lexicographically smallest monic irreducible of degree f over F_p,
/// returned as its low coefficients [c_0, ..., c_{f-1}] (x^f + ... + c_0).
fn smallest_irreducible(p: u64, f: usize) -> Vec<u64> {
    let total = p.pow(f as u32);
    'next: for code in 0..total {
        let mut coeffs = vec![0u64; f];
        let mut c = code;
        for coeff in coeffs.iter_mut() {
            *coeff = c % p;
            c /= p;
        }
        // monic poly x^f + sum coeffs[i] x^i; check irreducibility by trial
        // division against all monic polys of degree 1..=f/2
        for d in 1..=f / 2 {
            let divisors = p.pow(d as u32);
            for dc in 0..divisors {
                let mut div = vec![0u64; d + 1];
                let mut t = dc;
                for coeff in div.iter_mut().take(d) {
                    *coeff = t % p;
                    t /= p;
                }
                div[d] = 1;
                if poly_divides(&div, &coeffs, p, f) {
                    continue 'next;
                }
            }
        }
        return coeffs;
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// Does monic `div` divide the monic polynomial x^f + low coeffs?
fn poly_divides(div: &[u64], low: &[u64], p: u64, f: usize) -> bool {
    let mut rem = vec![0u64; f + 1];
    rem[..f].copy_from_slice(low);
    rem[f] = 1;
    let d = div.len() - 1;
    for lead in (d..=f).rev() {
        let c = rem[lead];
        if c == 0 {
            continue;
        }
        for (i, &di) in div.iter().enumerate() {
            rem[lead - d + i] = fp::sub_mod(rem[lead - d + i], fp::mul_mod(c, di, p), p);
        }
    }
    rem.iter().all(|&c| c == 0)
}

/// Gaussian elimination for a square system [A | b] over F_p.
fn solve_square(mut mat: Vec<Vec<u64>>, p: u64) -> Option<Vec<u64>> {
    let n = mat.len();
    let mut pivot_row = 0;
    let mut pivots = Vec::new();
    for col in 0..n {
        let row = (pivot_row..n).find(|&r| mat[r][col] != 0)?;
        mat.swap(pivot_row, row);
        let inv = fp::inv_mod_p(mat[pivot_row][col], p);
        for x in mat[pivot_row].iter_mut() {
            *x = fp::mul_mod(*x, inv, p);
        }
        for r in 0..n {
            if r != pivot_row && mat[r][col] != 0 {
                let factor = mat[r][col];
                for c in 0..=n {
                    let t = fp::mul_mod(factor, mat[pivot_row][c], p);
                    mat[r][c] = fp::sub_mod(mat[r][c], t, p);
                }
            }
        }
        pivots.push(col);
        pivot_row += 1;
    }
    let mut x = vec![0u64; n];
    for (r, &col) in pivots.iter().enumerate() {
        x[col] = mat[r][n];
    }
    Some(x)
}

/// Returns a row-reduced spanning set (discarding dependent vectors).
fn reduce_span(vecs: Vec<AElem>, p: u64) -> Vec<AElem> {
    let mut rows: Vec<AElem> = Vec::new();
    for mut v in vecs {
        for row in &rows {
            let lead = row.iter().position(|&c| c != 0).unwrap();
            if v[lead] != 0 {
                let factor = v[lead];
                for (x, &r) in v.iter_mut().zip(row.iter()) {
                    *x = fp::sub_mod(*x, fp::mul_mod(factor, r, p), p);
                }
            }
        }
        if let Some(lead) = v.iter().position(|&c| c != 0) {
            let inv = fp::inv_mod_p(v[lead], p);
            for x in v.iter_mut() {
                *x = fp::mul_mod(*x, inv, p);
            }
            rows.push(v);
            rows.sort_by_key(|r| r.iter().position(|&c| c != 0).unwrap());
        }
    }
    rows
}

/// The dual numbers A = F_p[eps]/(eps^2): basis {1, eps}.
pub fn dual_numbers(p: u64) -> Result<Arc<CoefficientAlgebra>> {
    let z = || vec![0u64, 0];
    let one = || vec![1u64, 0];
    let eps = || vec![0u64, 1];
    let table = vec![vec![one(), eps()], vec![eps(), z()]];
    CoefficientAlgebra::new(p, 2, table, vec![1])
}
