//! Brute-force reference implementations used by the test suites.
//!
//! These deliberately avoid the closed formulas and fast paths of the main
//! code: psi is recovered by solving the defining linear system for the
//! decomposition along the basis 1, (1+T'), ..., (1+T')^(p-1) of the ring
//! over its Frobenius image, one monomial at a time.

use crate::coeffs::CoefficientAlgebra;
use crate::error::Result;
use crate::fplinalg::FpMat;
use crate::laurent::{div_floor, Coeff, LaurentSeries};
use std::sync::Arc;

/// psi(T'^m) computed from the defining property: write
/// T'^m = sum_{i=0}^{p-1} (1+T')^i phi(x_i) and return x_0.
///
/// The x_i are found by Gaussian elimination over F_p on an exponent window
/// around m/p; the decomposition is triangular enough that a window of
/// width `width` suffices for any |m| with p*width margin.
pub fn psi_of_monomial(
    algebra: &Arc<CoefficientAlgebra>,
    m: i64,
    width: i64,
) -> Result<LaurentSeries> {
    let p = algebra.p;
    let pi = p as i64;
    // unknowns: coefficients of x_i at exponents [j0, j1), i = 0..p
    let j0 = div_floor(m, pi) - width;
    let j1 = div_floor(m, pi) + width;
    let per = (j1 - j0) as usize;
    let ncols = per * p as usize;
    // equations: coefficients of sum_i (1+T)^i T^{pj} at exponents
    // [p*j0, p*(j1-1) + p - 1]
    let e0 = pi * j0;
    let e1 = pi * (j1 - 1) + pi;
    let nrows = (e1 - e0) as usize;
    let mut mat = FpMat::zeros(p, nrows, ncols);
    // binomials binom(i, r) mod p for i, r < p
    for i in 0..p as usize {
        for (jidx, j) in (j0..j1).enumerate() {
            let col = i * per + jidx;
            // (1+T)^i T^{pj} = sum_r binom(i, r) T^{pj + r}
            let mut b = 1u64;
            for r in 0..=i as u64 {
                let e = pi * j + r as i64;
                if e >= e0 && e < e1 {
                    let row = (e - e0) as usize;
                    mat.set(row, col, (mat.get(row, col) + b) % p);
                }
                b = b * (i as u64 - r) / (r + 1);
            }
        }
    }
    let mut rhs = vec![0u64; nrows];
    if m >= e0 && m < e1 {
        rhs[(m - e0) as usize] = 1;
    }
    let sol = mat
        .solve(&rhs)
        .expect("psi decomposition system must be solvable");
    // x_0 coefficients are the first block
    let coeffs = (0..per)
        .map(|jidx| algebra.from_scalar(sol[jidx]))
        .collect();
    LaurentSeries::from_coeffs(algebra, j0, coeffs, true)
}

/// psi of a whole (exact) series by A-linear extension of the monomial
/// oracle.
pub fn psi_series(f: &LaurentSeries, width: i64) -> Result<LaurentSeries> {
    let alg = f.algebra().clone();
    let mut acc = LaurentSeries::zero(&alg);
    let lo = f.window_start();
    let hi = f.window_end();
    for e in lo..hi {
        if let Coeff::Known(c) = f.coeff_at(e) {
            if alg.is_zero(&c) {
                continue;
            }
            let m = psi_of_monomial(&alg, e, width)?;
            acc = acc.add(&m.scale(&c))?;
        }
    }
    Ok(acc)
}
