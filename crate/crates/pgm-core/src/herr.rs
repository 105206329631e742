//! The cohomology engine: H^0, H^1, H^2 of the Herr complex, duality
//! pairings, Euler characteristics, extension classes, cup products and
//! square-zero obstruction classes.
//!
//! The complex of a module M (on the delta-invariant part) is
//!
//! ```text
//!   0 -> N --(phi-1, gamma-1)--> N + N --((gamma-1) + (1-phi))--> N -> 0
//! ```
//!
//! Everything is computed through finite truncation models justified by two
//! contraction facts: (1 - phi) is bijective on T'^n Lambda once phi
//! strictly raises valuations there (n >= n1), so truncating above n is a
//! quasi-isomorphism; and psi contracts denominators, which bounds where
//! kernel elements and coboundary witnesses can live. Concretely:
//!
//! * H^0 is exact: ker(phi - 1) lies in T'^(-m0) Lambda with
//!   m0 = ceil(h/(p-1)) + 1, solutions congruent mod T'^n Lambda coincide,
//!   and candidates are corrected to true kernel elements by the geometric
//!   series of phi. The gamma- and delta-fixed part of the kernel is then
//!   finite linear algebra.
//! * H^2 is computed by duality as H^0 of the Cartier dual (field
//!   coefficients), and independently by a window model when a class value
//!   is needed (cup products), certified by the duality dimension.
//! * dim H^1 comes from the Euler characteristic h0 - h1 + h2 = -d.
//!   Representatives come from a window model whose coboundary space is
//!   provably complete (witness depths are bounded by the valuation
//!   estimates from psi phi = id), so the model injects into H^1; the
//!   model is enlarged until its dimension reaches the Euler-certified
//!   value, which certifies a basis.

use crate::coeffs::{AElem, CoefficientAlgebra};
use crate::error::{Error, Result};
use crate::fplinalg::{FpMat, Subspace};
use crate::laurent::{div_ceil, LaurentSeries};
use crate::pgmod::{HomContext, PhiGammaModule, SeriesMat};
use serde::Serialize;
use std::sync::Arc;

/// Exponent window and module shape for flattening coordinate vectors of
/// series into F_p vectors. Index order: exponent-major, then component,
/// then algebra coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowShape {
    pub lo: i64,
    pub hi: i64,
    pub d: usize,
    pub r: usize,
}

impl WindowShape {
    pub fn dim(&self) -> usize {
        ((self.hi - self.lo).max(0) as usize) * self.d * self.r
    }

    fn index(&self, e: i64, comp: usize, k: usize) -> usize {
        (((e - self.lo) as usize) * self.d + comp) * self.r + k
    }

    /// Flattens a coordinate vector. The vector must be known on the whole
    /// window and must vanish below it.
    pub fn to_flat(&self, v: &[LaurentSeries]) -> Result<Vec<u64>> {
        debug_assert_eq!(v.len(), self.d);
        let mut out = vec![0u64; self.dim()];
        for (comp, series) in v.iter().enumerate() {
            if let Some(val) = series.valuation() {
                if val < self.lo {
                    return Err(Error::InsufficientPrecision {
                        context: "window flattening: support below window",
                        need: self.lo,
                        have: val,
                    });
                }
            }
            for e in self.lo..self.hi {
                let c = series.known_coeff(e, "window flattening")?;
                for (k, &x) in c.iter().enumerate() {
                    out[self.index(e, comp, k)] = x;
                }
            }
        }
        Ok(out)
    }

    /// Reads a flat vector back as exact (polynomial) coordinates.
    pub fn from_flat(&self, algebra: &Arc<CoefficientAlgebra>, flat: &[u64]) -> Vec<LaurentSeries> {
        let mut out = Vec::with_capacity(self.d);
        for comp in 0..self.d {
            let mut coeffs = Vec::with_capacity((self.hi - self.lo) as usize);
            for e in self.lo..self.hi {
                let mut c = algebra.zero();
                for (k, slot) in c.iter_mut().enumerate() {
                    *slot = flat[self.index(e, comp, k)];
                }
                coeffs.push(c);
            }
            out.push(
                LaurentSeries::from_coeffs(algebra, self.lo, coeffs, true)
                    .expect("valid window data"),
            );
        }
        out
    }

}

/// Builds the matrix of an operator between window spaces by applying it to
/// every basis vector. Truncation at target.hi; support below target.lo is
/// an error (the caller must size the target window).
pub fn operator_matrix(
    algebra: &Arc<CoefficientAlgebra>,
    source: &WindowShape,
    target: &WindowShape,
    op: &dyn Fn(&[LaurentSeries]) -> Result<Vec<LaurentSeries>>,
) -> Result<FpMat> {
    let mut mat = FpMat::zeros(algebra.p, target.dim(), source.dim());
    for col in 0..source.dim() {
        let mut flat = vec![0u64; source.dim()];
        flat[col] = 1;
        let v = source.from_flat(algebra, &flat);
        let image = op(&v)?;
        let truncated: Vec<LaurentSeries> =
            image.iter().map(|x| x.reduce_upper(target.hi)).collect();
        let out = target.to_flat(&truncated)?;
        for (row, &val) in out.iter().enumerate() {
            if val != 0 {
                mat.set(row, col, val);
            }
        }
    }
    Ok(mat)
}

/// A degree-1 cochain (pair) or a single element, with window metadata.
#[derive(Debug, Clone)]
pub struct Cocycle {
    pub degree: u8,
    /// phi-part for degree 1; the element itself for degrees 0 and 2.
    pub a: Vec<LaurentSeries>,
    /// gamma-part (degree 1 only; empty otherwise).
    pub b: Vec<LaurentSeries>,
    /// Exponent window on which the components are stored.
    pub window: (i64, i64),
    /// Truncation level of the model that produced it: the pair is a
    /// cocycle mod T'^n Lambda and extends exactly.
    pub trunc: i64,
    pub certified: bool,
}

/// Certified kernel of phi - 1 with exact representatives.
pub struct PhiKernel {
    pub shape: WindowShape,
    /// Flat coordinates of a basis, in the window space.
    pub flat: Vec<Vec<u64>>,
    /// The truncation level n of the model.
    pub n: i64,
    pub m0: i64,
}

impl PhiKernel {
    pub fn dim_fp(&self) -> usize {
        self.flat.len()
    }
}

/// Computes ker(phi - 1) by the finite model on L/T'^n Lambda with
/// L = T'^(-m0) Lambda: injectivity because kernel elements congruent mod
/// T'^n Lambda coincide, surjectivity by the geometric-series correction.
pub fn kernel_phi_minus_one(m: &PhiGammaModule) -> Result<PhiKernel> {
    let alg = &m.algebra;
    let p = alg.p as i64;
    let lat = m.stabilize_lattice();
    let n = m.contraction_level() + 1;
    let m0 = lat.m0;
    let source = WindowShape {
        lo: -m0,
        hi: n,
        d: m.rank,
        r: alg.basis_dim,
    };
    // (phi - 1) maps the source window into [p*(-m0) - h_plus, n)
    let target = WindowShape {
        lo: (-m0 * p - m.height_plus).min(-m0),
        hi: n,
        d: m.rank,
        r: alg.basis_dim,
    };
    let op = |v: &[LaurentSeries]| -> Result<Vec<LaurentSeries>> {
        let image = m.act_phi(v)?;
        image
            .iter()
            .zip(v)
            .map(|(y, x)| y.sub(x))
            .collect::<Result<Vec<_>>>()
    };
    let mat = operator_matrix(alg, &source, &target, &op)?;
    let flat = mat.kernel_basis();
    // the kernel bound is strict in practice: no representative should
    // attain the m0 wall
    for rep in &flat {
        let v = source.from_flat(alg, rep);
        for x in &v {
            if let Some(val) = x.valuation() {
                debug_assert!(val >= -m0, "kernel escaped its certified bound");
            }
        }
    }
    Ok(PhiKernel {
        shape: source,
        flat,
        n,
        m0,
    })
}

/// Refines an approximate kernel element to the requested precision by the
/// correction x -> x - sum_k phi^k((1 - phi) x).
pub fn refine_kernel_element(
    m: &PhiGammaModule,
    rep: &[LaurentSeries],
    to_prec: i64,
) -> Result<Vec<LaurentSeries>> {
    let mut x = rep.to_vec();
    loop {
        let phi_x = m.act_phi(&x)?;
        let mut defect_val = i64::MAX;
        let mut defect = Vec::with_capacity(x.len());
        for (y, xi) in phi_x.iter().zip(&x) {
            let e = xi.sub(y)?; // (1 - phi) x
            if let Some(v) = e.valuation() {
                defect_val = defect_val.min(v);
            }
            defect.push(e);
        }
        if defect_val >= to_prec {
            return Ok(x);
        }
        // subtract the full geometric series of the defect up to to_prec
        let mut term = defect;
        loop {
            let mut term_val = i64::MAX;
            for t in &term {
                if let Some(v) = t.valuation() {
                    term_val = term_val.min(v);
                }
            }
            if term_val >= to_prec {
                break;
            }
            for (xi, t) in x.iter_mut().zip(&term) {
                *xi = xi.sub(t)?;
            }
            term = m.act_phi(&term)?;
        }
    }
}

/// H^0 data: the simultaneous fixed space of gamma and delta on the phi
/// kernel.
pub struct H0 {
    pub kernel: PhiKernel,
    /// Flat coordinates (in kernel.shape) of an F_p-basis of H^0.
    pub flat: Vec<Vec<u64>>,
}

impl H0 {
    pub fn dim_fp(&self) -> usize {
        self.flat.len()
    }
}

/// The matrix of a semilinear operator restricted to the phi kernel,
/// expressed in the kernel basis. Exactness: the operator maps the kernel
/// to itself and is determined by its truncation mod T'^n Lambda because
/// kernel elements congruent there coincide.
fn operator_on_kernel(
    m: &PhiGammaModule,
    kernel: &PhiKernel,
    op: &dyn Fn(&[LaurentSeries]) -> Result<Vec<LaurentSeries>>,
) -> Result<FpMat> {
    let alg = &m.algebra;
    let k = kernel.flat.len();
    // solve op(rep) = sum c_i rep_i in the window space
    let dim = kernel.shape.dim();
    let mut basis_mat = FpMat::zeros(alg.p, dim, k);
    for (j, f) in kernel.flat.iter().enumerate() {
        for (i, &x) in f.iter().enumerate() {
            basis_mat.set(i, j, x);
        }
    }
    let mut out = FpMat::zeros(alg.p, k, k);
    for (j, f) in kernel.flat.iter().enumerate() {
        let v = kernel.shape.from_flat(alg, f);
        let image = op(&v)?;
        let truncated: Vec<LaurentSeries> = image
            .iter()
            .map(|x| x.reduce_upper(kernel.shape.hi))
            .collect();
        let flat = kernel.shape.to_flat(&truncated)?;
        let coords = basis_mat.solve(&flat).ok_or(Error::CertificateFailure {
            context: "operator does not preserve the phi kernel",
            want: k,
            got: 0,
        })?;
        for (i, &c) in coords.iter().enumerate() {
            out.set(i, j, c);
        }
    }
    Ok(out)
}

/// H^0(M): gamma- and delta-fixed vectors of ker(phi - 1).
pub fn h0(m: &PhiGammaModule) -> Result<H0> {
    let kernel = kernel_phi_minus_one(m)?;
    let n = kernel.n;
    let gamma_op = |v: &[LaurentSeries]| m.act_gamma(v, n);
    let delta_op = |v: &[LaurentSeries]| m.act_delta(v, n);
    let g = operator_on_kernel(m, &kernel, &gamma_op)?;
    let d = operator_on_kernel(m, &kernel, &delta_op)?;
    let k = kernel.flat.len();
    let p = m.algebra.p;
    // stack (g - 1) and (d - 1)
    let mut stacked = FpMat::zeros(p, 2 * k, k);
    for i in 0..k {
        for j in 0..k {
            let gij = g.get(i, j);
            let dij = d.get(i, j);
            let sub = |x: u64| {
                if i == j {
                    crate::fp::sub_mod(x, 1, p)
                } else {
                    x
                }
            };
            stacked.set(i, j, sub(gij));
            stacked.set(k + i, j, sub(dij));
        }
    }
    let fixed = stacked.kernel_basis();
    // back to window coordinates
    let flat = fixed
        .iter()
        .map(|c| {
            let mut v = vec![0u64; kernel.shape.dim()];
            for (j, &cj) in c.iter().enumerate() {
                if cj == 0 {
                    continue;
                }
                for (i, &x) in kernel.flat[j].iter().enumerate() {
                    v[i] = (v[i] + crate::fp::mul_mod(cj, x, p)) % p;
                }
            }
            v
        })
        .collect();
    Ok(H0 { kernel, flat })
}

/// H^0 dimension over the coefficient algebra. For a field this is the
/// F_p dimension divided by [A : F_p]; the division is exact.
pub fn h0_dim(m: &PhiGammaModule) -> Result<usize> {
    let space = h0(m)?;
    let r = m.algebra.basis_dim;
    if m.algebra.is_field() {
        let fp = space.dim_fp();
        debug_assert_eq!(fp % r, 0, "H^0 of a field-coefficient module is a vector space over it");
        Ok(fp / r)
    } else {
        Ok(space.dim_fp())
    }
}

/// H^2 dimension via Tate duality: h2(M) = h0(Cartier dual of M) for field
/// coefficients.
pub fn h2_dim(m: &PhiGammaModule) -> Result<usize> {
    if !m.algebra.is_field() {
        return Err(Error::FieldRequired {
            context: "h2 via duality",
        });
    }
    h0_dim(&m.cartier_dual()?)
}

/// H^1 dimension from the Euler characteristic h0 - h1 + h2 = -rank.
pub fn h1_dim(m: &PhiGammaModule) -> Result<usize> {
    if !m.algebra.is_field() {
        return Err(Error::FieldRequired {
            context: "h1 via Euler characteristic",
        });
    }
    Ok(h0_dim(m)? + h2_dim(m)? + m.rank)
}

/// The H^1 window model at a given depth.
///
/// Candidates are pairs (a, b) supported on [lo, n), delta-invariant mod
/// T'^n and satisfying the cocycle identity mod T'^n Lambda. The
/// coboundary space is generated from x supported on [wit_lo, n):
/// `wit_lo` is below every possible witness depth (valuation estimates
/// from psi phi = id), so candidate classes inject into H^1(M). Model
/// dimension equal to the Euler-certified h1 therefore certifies a basis.
pub struct H1Model {
    pub shape: WindowShape,
    pub n: i64,
    pub lo: i64,
    /// Basis of the candidate space C (flat, length 2 * shape.dim()).
    cocycles: Vec<Vec<u64>>,
    /// Span of the admissible coboundaries inside C.
    coboundaries: Subspace,
    pub dim_fp: usize,
}

impl H1Model {
    /// Flat coordinates are pairs (a | b), each in `shape`.
    pub fn pair_dim(&self) -> usize {
        2 * self.shape.dim()
    }
}

/// Depth below which no coboundary witness can live, for candidates
/// supported at or above `lo` (margin included).
fn witness_depth(m: &PhiGammaModule, lo: i64) -> i64 {
    let p = m.algebra.p as i64;
    let h = m.height;
    // val(y) >= min(nu0, ceil((lo - h - p + 1)/p)) for any witness y
    let nu0 = -div_ceil(h + p - 1, p - 1);
    let from_lo = div_ceil(lo - h - p + 1, p);
    nu0.min(from_lo).min(lo) - 2
}

fn build_h1_model(m: &PhiGammaModule, lo: i64, n: i64) -> Result<H1Model> {
    let alg = &m.algebra;
    let p = alg.p;
    let pi = p as i64;
    let d = m.rank;
    let r = alg.basis_dim;
    let shape = WindowShape { lo, hi: n, d, r };
    let wit_lo = witness_depth(m, lo);
    let xshape = WindowShape {
        lo: wit_lo,
        hi: n,
        d,
        r,
    };
    // targets big enough for phi images
    let deep = (pi * wit_lo - m.height_plus).min(wit_lo);
    let wshape = WindowShape {
        lo: deep,
        hi: n,
        d,
        r,
    };

    let phi_minus_1 = |v: &[LaurentSeries]| -> Result<Vec<LaurentSeries>> {
        let image = m.act_phi(v)?;
        image.iter().zip(v).map(|(y, x)| y.sub(x)).collect()
    };
    let gamma_minus_1 = |v: &[LaurentSeries]| -> Result<Vec<LaurentSeries>> {
        let image = m.act_gamma(v, n)?;
        image.iter().zip(v).map(|(y, x)| y.sub(x)).collect()
    };
    let delta_minus_1 = |v: &[LaurentSeries]| -> Result<Vec<LaurentSeries>> {
        let image = m.act_delta(v, n)?;
        image.iter().zip(v).map(|(y, x)| y.sub(x)).collect()
    };

    let dim_v = shape.dim();
    let phi_v = operator_matrix(alg, &shape, &wshape, &phi_minus_1)?;
    let gamma_v = operator_matrix(alg, &shape, &wshape, &gamma_minus_1)?;
    let delta_v = operator_matrix(alg, &shape, &shape, &delta_minus_1)?;

    // cocycle conditions on (a | b): delta-invariance of both components
    // and (gamma - 1) a + (1 - phi) b = 0 mod T'^n
    let dim_w = wshape.dim();
    let rows = 2 * dim_v + dim_w;
    let mut cond = FpMat::zeros(p, rows, 2 * dim_v);
    for i in 0..dim_v {
        for j in 0..dim_v {
            let da = delta_v.get(i, j);
            if da != 0 {
                cond.set(i, j, da);
                cond.set(dim_v + i, dim_v + j, da);
            }
        }
    }
    for i in 0..dim_w {
        for j in 0..dim_v {
            let g = gamma_v.get(i, j);
            if g != 0 {
                cond.set(2 * dim_v + i, j, g);
            }
            let f = phi_v.get(i, j);
            if f != 0 {
                // (1 - phi) b = -(phi - 1) b
                cond.set(2 * dim_v + i, dim_v + j, crate::fp::sub_mod(0, f, p));
            }
        }
    }
    let cocycles = cond.kernel_basis();

    // coboundary generators: x in the witness window, delta-invariant mod
    // T'^n, with d0(x) supported at or above lo
    let delta_x = operator_matrix(alg, &xshape, &xshape, &delta_minus_1)?;
    let phi_x = operator_matrix(alg, &xshape, &wshape, &phi_minus_1)?;
    let gamma_x = operator_matrix(alg, &xshape, &wshape, &gamma_minus_1)?;
    let dim_x = xshape.dim();
    // rows: delta-invariance, plus vanishing of both components below lo
    let below = ((lo - deep) as usize) * d * r;
    let mut xcond = FpMat::zeros(p, dim_x + 2 * below, dim_x);
    for i in 0..dim_x {
        for j in 0..dim_x {
            let v = delta_x.get(i, j);
            if v != 0 {
                xcond.set(i, j, v);
            }
        }
    }
    for i in 0..below {
        for j in 0..dim_x {
            let f = phi_x.get(i, j);
            if f != 0 {
                xcond.set(dim_x + i, j, f);
            }
            let g = gamma_x.get(i, j);
            if g != 0 {
                xcond.set(dim_x + below + i, j, g);
            }
        }
    }
    let admissible = xcond.kernel_basis();
    let mut coboundaries = Subspace::new(p, 2 * dim_v);
    for x in &admissible {
        // d0(x) restricted to the [lo, n) window
        let fa = phi_x.apply(x);
        let fb = gamma_x.apply(x);
        let mut pair = vec![0u64; 2 * dim_v];
        for e in lo..n {
            for comp in 0..d {
                for k in 0..r {
                    let wi = (((e - deep) as usize) * d + comp) * r + k;
                    let vi = (((e - lo) as usize) * d + comp) * r + k;
                    pair[vi] = fa[wi];
                    pair[dim_v + vi] = fb[wi];
                }
            }
        }
        coboundaries.insert(&pair);
    }

    // quotient dimension: count cocycles independent of the coboundaries
    let mut span = coboundaries.clone();
    let mut dim_fp = 0;
    for c in &cocycles {
        if span.insert(c) {
            dim_fp += 1;
        }
    }
    Ok(H1Model {
        shape,
        n,
        lo,
        cocycles,
        coboundaries,
        dim_fp,
    })
}

/// Basis of H^1 with stabilization certified by the Euler characteristic.
pub struct H1Basis {
    pub model: H1Model,
    /// Certified dimension over the coefficient field.
    pub dim: usize,
    /// Flat pair coordinates of an A-basis of H^1.
    pub basis_flat: Vec<Vec<u64>>,
}

impl H1Basis {
    pub fn cocycles(&self, m: &PhiGammaModule) -> Vec<Cocycle> {
        self.basis_flat
            .iter()
            .map(|f| self.flat_to_cocycle(m, f))
            .collect()
    }

    pub fn flat_to_cocycle(&self, m: &PhiGammaModule, flat: &[u64]) -> Cocycle {
        let dim_v = self.model.shape.dim();
        let a = self.model.shape.from_flat(&m.algebra, &flat[..dim_v]);
        let b = self.model.shape.from_flat(&m.algebra, &flat[dim_v..]);
        Cocycle {
            degree: 1,
            a,
            b,
            window: (self.model.shape.lo, self.model.shape.hi),
            trunc: self.model.n,
            certified: true,
        }
    }

    /// Is the pair a coboundary in the model?
    pub fn is_coboundary(&self, m: &PhiGammaModule, alpha: &Cocycle) -> Result<bool> {
        let flat = self.cocycle_to_flat(m, alpha)?;
        Ok(self.model.coboundaries.contains(&flat))
    }

    pub fn cocycle_to_flat(&self, _m: &PhiGammaModule, alpha: &Cocycle) -> Result<Vec<u64>> {
        let dim_v = self.model.shape.dim();
        let mut out = vec![0u64; 2 * dim_v];
        let fa = self
            .model
            .shape
            .to_flat(&alpha.a.iter().map(|x| x.reduce_upper(self.model.n)).collect::<Vec<_>>())?;
        let fb = self
            .model
            .shape
            .to_flat(&alpha.b.iter().map(|x| x.reduce_upper(self.model.n)).collect::<Vec<_>>())?;
        out[..dim_v].copy_from_slice(&fa);
        out[dim_v..].copy_from_slice(&fb);
        Ok(out)
    }
}

/// Computes an H^1 basis by deepening the window until the model dimension
/// reaches the Euler-certified dimension.
pub fn h1_basis(m: &PhiGammaModule) -> Result<H1Basis> {
    if !m.algebra.is_field() {
        return Err(Error::FieldRequired { context: "h1 basis" });
    }
    let r = m.algebra.basis_dim;
    let want = h1_dim(m)?;
    let want_fp = want * r;
    let lat = m.stabilize_lattice();
    let n = m.contraction_level() + 1;
    let mut lo = -(lat.m0 + 2);
    // additive deepening finds representatives at (close to) their minimal
    // depth, which keeps the heights of extension modules built from them
    // small; the psi-side estimate -(p (m0+2) + h) bounds the true depth
    let step = (lat.m0 + 2).max(2);
    let mut last_got = 0usize;
    for _ in 0..=m.config.max_enlargements {
        let model = build_h1_model(m, lo, n)?;
        last_got = model.dim_fp;
        if model.dim_fp == want_fp {
            let basis_flat = extract_field_basis(m, &model, want)?;
            return Ok(H1Basis {
                model,
                dim: want,
                basis_flat,
            });
        }
        if model.dim_fp > want_fp {
            // the model injects into H^1, so this cannot happen unless the
            // certified bounds were violated
            return Err(Error::CertificateFailure {
                context: "H^1 window model exceeded the Euler dimension",
                want: want_fp,
                got: model.dim_fp,
            });
        }
        lo -= step;
    }
    Err(Error::StabilizationBudgetExceeded {
        want: want_fp,
        got: last_got,
    })
}

/// Extracts an A-basis (size `want`) from the model's F_p data: greedily
/// keeps cocycles independent of the coboundaries and of the A-span of the
/// previously chosen ones.
fn extract_field_basis(
    m: &PhiGammaModule,
    model: &H1Model,
    want: usize,
) -> Result<Vec<Vec<u64>>> {
    let alg = &m.algebra;
    let p = alg.p;
    let mut span = model.coboundaries.clone();
    let mut picked = Vec::new();
    for c in &model.cocycles {
        if picked.len() == want {
            break;
        }
        if !span.contains(c) {
            picked.push(c.clone());
            // close the span under multiplication by the algebra basis
            for k in 0..alg.basis_dim {
                let scaled = scale_flat_pair(alg, model, c, k);
                span.insert(&scaled);
            }
            let _ = p;
        }
    }
    if picked.len() != want {
        return Err(Error::CertificateFailure {
            context: "A-basis extraction from the H^1 model",
            want,
            got: picked.len(),
        });
    }
    Ok(picked)
}

/// Multiplies a flat pair by the algebra basis element e_k (coefficientwise
/// scalar action).
fn scale_flat_pair(
    alg: &Arc<CoefficientAlgebra>,
    model: &H1Model,
    flat: &[u64],
    k: usize,
) -> Vec<u64> {
    let r = alg.basis_dim;
    let slots = flat.len() / r;
    let ek = alg.basis_elem(k);
    let mut out = vec![0u64; flat.len()];
    for s in 0..slots {
        let c: AElem = flat[s * r..(s + 1) * r].to_vec();
        let prod = alg.mul(&c, &ek);
        out[s * r..(s + 1) * r].copy_from_slice(&prod);
    }
    let _ = model;
    out
}

/// Extends a model cocycle to an exact one on [lo, prec): projects the
/// components onto the delta-invariants and repairs the gamma-component
/// tail with the geometric series of phi (the defect lives above the
/// truncation level, where 1 - phi is invertible).
pub fn realize_cocycle(
    m: &PhiGammaModule,
    alpha: &Cocycle,
    prec: i64,
) -> Result<(Vec<LaurentSeries>, Vec<LaurentSeries>)> {
    debug_assert_eq!(alpha.degree, 1);
    let a = m.e_delta(&alpha.a, prec)?;
    let mut b = m.e_delta(&alpha.b, prec)?;
    // defect E = (gamma-1) a + (1-phi) b, supported above the truncation
    loop {
        let ga = m.act_gamma(&a, prec)?;
        let pb = m.act_phi(&b)?;
        let mut defect = Vec::with_capacity(a.len());
        let mut dval = i64::MAX;
        for ((g, x), (p, y)) in ga.iter().zip(&a).zip(pb.iter().zip(&b)) {
            let e = g.sub(x)?.add(&y.sub(p)?)?;
            if let Some(v) = e.valuation() {
                dval = dval.min(v);
            }
            defect.push(e.reduce_upper(prec));
        }
        if dval >= prec {
            return Ok((a, b));
        }
        if dval < alpha.trunc {
            return Err(Error::CertificateFailure {
                context: "cocycle defect below the truncation level",
                want: alpha.trunc as usize,
                got: 0,
            });
        }
        // b += t with (1 - phi) t = -E: t = -sum_k phi^k(E)
        let mut term: Vec<LaurentSeries> = defect;
        loop {
            let mut tval = i64::MAX;
            for t in &term {
                if let Some(v) = t.valuation() {
                    tval = tval.min(v);
                }
            }
            if tval >= prec {
                break;
            }
            for (bi, t) in b.iter_mut().zip(&term) {
                *bi = bi.sub(t)?;
            }
            term = m.act_phi(&term)?.iter().map(|t| t.reduce_upper(prec)).collect();
        }
    }
}

/// Report of certified dimensions with the cross-checks that were run.
#[derive(Debug, Clone, Serialize)]
pub struct CohomologyReport {
    pub h0: usize,
    pub h1: usize,
    pub h2: usize,
    pub euler_ok: bool,
    pub duality_ok: bool,
    pub certificates: Vec<String>,
    pub chi_gamma_convention: String,
    pub dims_over: String,
    pub rank: usize,
}

/// Full cohomology of a module. Field coefficients get certified exact
/// dimensions over the field (H^1 through the stabilized basis, checked
/// against the Euler characteristic); local non-field coefficients are
/// reported gradedwise along the maximal-ideal filtration (dimensions over
/// F_p of the associated graded).
pub fn cohomology(m: &PhiGammaModule) -> Result<CohomologyReport> {
    let mut certificates = Vec::new();
    if m.algebra.is_field() {
        let h0 = h0_dim(m)?;
        certificates.push("h0: certified finite kernel model".to_string());
        let h2 = h2_dim(m)?;
        certificates.push("h2: duality h2(M) = h0(Cartier dual)".to_string());
        let basis = h1_basis(m)?;
        let h1 = basis.dim;
        certificates.push(format!(
            "h1: window model stabilized at depth {} against the Euler bound",
            basis.model.lo
        ));
        let euler_ok = h0 + h2 + m.rank == h1;
        // duality cross-check: dimensions of the Cartier dual in reverse
        let dual = m.cartier_dual()?;
        let duality_ok = h0_dim(&dual)? == h2 && h2_dim(&dual)? == h0 && h1_dim(&dual)? == h1;
        certificates.push("duality: h_i(M) = h_{2-i}(Cartier dual)".to_string());
        Ok(CohomologyReport {
            h0,
            h1,
            h2,
            euler_ok,
            duality_ok,
            certificates,
            chi_gamma_convention: "1+p".to_string(),
            dims_over: "A".to_string(),
            rank: m.rank,
        })
    } else {
        // gradedwise: each graded piece of the maximal-ideal filtration is
        // a direct sum of copies of the residue fibre
        let (field, fibre) = m.residue_fibre()?;
        let report = cohomology(&fibre)?;
        let copies = m.algebra.basis_dim / field.basis_dim;
        let scale = field.basis_dim * copies; // F_p dimension of A
        certificates.push(format!(
            "graded: {} copies of the residue fibre over F_{}^{}",
            copies, m.algebra.p, field.basis_dim
        ));
        certificates.extend(report.certificates);
        Ok(CohomologyReport {
            h0: report.h0 * scale,
            h1: report.h1 * scale,
            h2: report.h2 * scale,
            euler_ok: report.euler_ok,
            duality_ok: report.duality_ok,
            certificates,
            chi_gamma_convention: "1+p".to_string(),
            dims_over: "Fp_graded".to_string(),
            rank: m.rank,
        })
    }
}

// ---------------------------------------------------------------------------
// Yoneda classes of extensions
// ---------------------------------------------------------------------------

/// Hom-shaped matrices f: quot -> sub are vectorized into coordinates of
/// dual(quot) tensor sub: flat index (i, j) -> i * d_sub + j corresponds to
/// the matrix entry f[j][i].
pub fn vec_of_hom(f: &SeriesMat) -> Vec<LaurentSeries> {
    let d_sub = f.rows;
    let d_quot = f.cols;
    let mut out = Vec::with_capacity(d_sub * d_quot);
    for i in 0..d_quot {
        for j in 0..d_sub {
            out.push(f.at(j, i).clone());
        }
    }
    out
}

pub fn hom_of_vec(
    algebra: &Arc<CoefficientAlgebra>,
    v: &[LaurentSeries],
    d_sub: usize,
    d_quot: usize,
) -> SeriesMat {
    let mut out = SeriesMat::zeros(algebra, d_sub, d_quot);
    for i in 0..d_quot {
        for j in 0..d_sub {
            *out.at_mut(j, i) = v[i * d_sub + j].clone();
        }
    }
    out
}

/// The class of a block-upper-triangular extension: the sub- and quotient
/// modules, the hom module their extensions live over, and the degree-1
/// cocycle read off the blocks.
pub struct ExtensionClass {
    pub sub: PhiGammaModule,
    pub quot: PhiGammaModule,
    /// dual(quot) tensor sub; the class lives in its H^1.
    pub hom: PhiGammaModule,
    pub cocycle: Cocycle,
}

/// Reads the Yoneda class off a block-upper-triangular module: with
/// Phi = [[Phi_s, Phi_s f], [0, Phi_q]] and Gamma = [[Gamma_s, Gamma_s g],
/// [0, Gamma_q]], the pair (f, g) is a degree-1 cocycle for
/// dual(quot) tensor sub. A nonzero Delta block is first removed by a
/// splitting change (solvable because the torsion order p-1 is invertible).
pub fn class_of_extension(e: &PhiGammaModule, sub_rank: usize) -> Result<ExtensionClass> {
    let alg = &e.algebra;
    let d = e.rank;
    if sub_rank == 0 || sub_rank >= d {
        return Err(Error::NotBlockTriangular { sub_rank });
    }
    let dq = d - sub_rank;
    // bottom-left blocks must vanish on their windows
    for mat in [&e.phi, &e.gamma, &e.delta] {
        for i in sub_rank..d {
            for j in 0..sub_rank {
                let entry = mat.at(i, j);
                if entry.valuation().is_some() {
                    return Err(Error::NotBlockTriangular { sub_rank });
                }
            }
        }
    }
    let sub = PhiGammaModule::validate(
        alg,
        e.phi.block(0, 0, sub_rank, sub_rank),
        e.gamma.block(0, 0, sub_rank, sub_rank),
        e.delta.block(0, 0, sub_rank, sub_rank),
        e.config,
    )?;
    let quot = PhiGammaModule::validate(
        alg,
        e.phi.block(sub_rank, sub_rank, dq, dq),
        e.gamma.block(sub_rank, sub_rank, dq, dq),
        e.delta.block(sub_rank, sub_rank, dq, dq),
        e.config,
    )?;
    let w = e.config.width;
    let phi_q_inv = quot.phi.inverse(w)?;
    let gamma_q_inv = quot.gamma.inverse(w)?;
    let delta_q_inv = quot.delta.inverse(w)?;
    // the blocks are f Phi_quot, g Gamma_quot, h Delta_quot for the
    // standard cocycle data (f, g) and splitting defect h
    let mut f = e.phi.block(0, sub_rank, sub_rank, dq).mul(&phi_q_inv)?;
    let mut g = e.gamma.block(0, sub_rank, sub_rank, dq).mul(&gamma_q_inv)?;
    let h = e.delta.block(0, sub_rank, sub_rank, dq).mul(&delta_q_inv)?;
    let hom_ctx = HomContext::new(&quot, &sub)?;
    if h.min_valuation().is_some() {
        // change the splitting by z with (delta_P - 1) z = -h, which sends
        // (f, g, h) to (f + (phi_P - 1) z, g + (gamma_P - 1) z, 0)
        let z = solve_delta_splitting(&hom_ctx, &h)?;
        f = f.add(&hom_ctx.apply_phi(&z)?.sub(&z)?)?;
        g = g.add(&hom_ctx.apply_gamma(&z)?.sub(&z)?)?;
    }
    let f = hom_ctx.project_delta(&f)?;
    let g = hom_ctx.project_delta(&g)?;
    hom_ctx.check_cocycle(&f, &g)?;
    let hom = quot.dual()?.tensor(&sub)?;
    let n = hom.contraction_level() + 1;
    let a = vec_of_hom(&f);
    let b = vec_of_hom(&g);
    let lo = a
        .iter()
        .chain(&b)
        .map(|x| x.window_start())
        .min()
        .unwrap_or(0);
    let cocycle = Cocycle {
        degree: 1,
        a: a.iter().map(|x| x.reduce_upper(n)).collect(),
        b: b.iter().map(|x| x.reduce_upper(n)).collect(),
        window: (lo, n),
        trunc: n,
        certified: true,
    };
    Ok(ExtensionClass {
        sub,
        quot,
        hom,
        cocycle,
    })
}

/// Solves (delta_P - 1) x = -h on a window. The torsion operator delta_P
/// has order p-1 prime to p, so 1 - delta_P is invertible away from the
/// invariants and the system is solvable whenever h is a genuine
/// splitting defect.
fn solve_delta_splitting(ctx: &HomContext, h: &SeriesMat) -> Result<SeriesMat> {
    let alg = &ctx.quot.algebra;
    let d_sub = ctx.sub.rank;
    let d_quot = ctx.quot.rank;
    let lo = h.min_valuation().unwrap_or(0).min(0);
    let hi = h.common_precision().min(ctx.width());
    let shape = WindowShape {
        lo,
        hi,
        d: d_sub * d_quot,
        r: alg.basis_dim,
    };
    let op = |v: &[LaurentSeries]| -> Result<Vec<LaurentSeries>> {
        let mat = hom_of_vec(alg, v, d_sub, d_quot);
        let image = ctx.apply_delta(&mat)?.sub(&mat)?;
        Ok(vec_of_hom(&image))
    };
    let mat = operator_matrix(alg, &shape, &shape, &op)?;
    let target: Vec<LaurentSeries> = vec_of_hom(h)
        .iter()
        .map(|x| x.neg().reduce_upper(hi))
        .collect();
    let rhs = shape.to_flat(&target)?;
    let sol = mat
        .solve(&rhs)
        .ok_or(Error::NotBlockTriangular { sub_rank: d_sub })?;
    let v = shape.from_flat(alg, &sol);
    Ok(hom_of_vec(alg, &v, d_sub, d_quot))
}

// ---------------------------------------------------------------------------
// The H^2 window model and cup products
// ---------------------------------------------------------------------------

/// Certified H^2 window model: degree-2 cochains supported on [lo, n),
/// delta-invariant mod T'^n, modulo the span of (gamma - 1) x and
/// (1 - phi) y for window-supported x, y. Model dimension equal to the
/// duality-computed h2 certifies the quotient.
pub struct H2Model {
    pub shape: WindowShape,
    pub n: i64,
    relations: Subspace,
    /// A-basis of the quotient (flat representatives).
    pub class_basis: Vec<Vec<u64>>,
    pub dim_fp: usize,
}

impl H2Model {
    /// The H^2 class of an element: coordinates over A in the model basis.
    pub fn class_of(&self, m: &PhiGammaModule, z: &[LaurentSeries]) -> Result<Vec<AElem>> {
        let alg = &m.algebra;
        let truncated: Vec<LaurentSeries> =
            z.iter().map(|x| x.reduce_upper(self.shape.hi)).collect();
        for x in &truncated {
            if let Some(v) = x.valuation() {
                if v < self.shape.lo {
                    return Err(Error::InsufficientPrecision {
                        context: "H^2 class input below the model window",
                        need: self.shape.lo,
                        have: v,
                    });
                }
            }
        }
        let flat = self.shape.to_flat(&truncated)?;
        let reduced = self.relations.reduce(&flat);
        // solve reduced = sum_k a_k . basis_k with a_k in A
        let r = alg.basis_dim;
        let dim = self.shape.dim();
        let k = self.class_basis.len();
        let mut mat = FpMat::zeros(alg.p, dim, k * r);
        for (j, basis) in self.class_basis.iter().enumerate() {
            for t in 0..r {
                let scaled = scale_flat(alg, basis, t);
                let scaled = self.relations.reduce(&scaled);
                for (i, &x) in scaled.iter().enumerate() {
                    mat.set(i, j * r + t, x);
                }
            }
        }
        let coords = mat.solve(&reduced).ok_or(Error::CertificateFailure {
            context: "H^2 class readout",
            want: k,
            got: 0,
        })?;
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let mut a = alg.zero();
            for t in 0..r {
                let scaled = alg.scalar_mul(coords[j * r + t], &alg.basis_elem(t));
                a = alg.add(&a, &scaled);
            }
            out.push(a);
        }
        Ok(out)
    }
}

fn scale_flat(alg: &Arc<CoefficientAlgebra>, flat: &[u64], k: usize) -> Vec<u64> {
    let r = alg.basis_dim;
    let slots = flat.len() / r;
    let ek = alg.basis_elem(k);
    let mut out = vec![0u64; flat.len()];
    for s in 0..slots {
        let c: AElem = flat[s * r..(s + 1) * r].to_vec();
        let prod = alg.mul(&c, &ek);
        out[s * r..(s + 1) * r].copy_from_slice(&prod);
    }
    out
}

fn build_h2_model(m: &PhiGammaModule, lo: i64, wit_extra: i64) -> Result<H2Model> {
    let alg = &m.algebra;
    let p = alg.p;
    let n = m.contraction_level() + 1;
    let d = m.rank;
    let r = alg.basis_dim;
    let shape = WindowShape { lo, hi: n, d, r };
    let wit_lo = witness_depth(m, lo) - wit_extra;
    let xshape = WindowShape {
        lo: wit_lo,
        hi: n,
        d,
        r,
    };
    let deep = ((p as i64) * wit_lo - m.height_plus).min(wit_lo);
    let wshape = WindowShape {
        lo: deep,
        hi: n,
        d,
        r,
    };
    let delta_minus_1 = |v: &[LaurentSeries]| -> Result<Vec<LaurentSeries>> {
        let image = m.act_delta(v, n)?;
        image.iter().zip(v).map(|(y, x)| y.sub(x)).collect()
    };
    let phi_minus_1 = |v: &[LaurentSeries]| -> Result<Vec<LaurentSeries>> {
        let image = m.act_phi(v)?;
        image.iter().zip(v).map(|(y, x)| y.sub(x)).collect()
    };
    let gamma_minus_1 = |v: &[LaurentSeries]| -> Result<Vec<LaurentSeries>> {
        let image = m.act_gamma(v, n)?;
        image.iter().zip(v).map(|(y, x)| y.sub(x)).collect()
    };
    // delta-invariant cochains on the model window
    let delta_s = operator_matrix(alg, &shape, &shape, &delta_minus_1)?;
    let cochains = delta_s.kernel_basis();
    // relation generators: pairs (x, y), both delta-invariant in the
    // witness window, whose JOINT image (gamma-1)x + (1-phi)y is supported
    // at or above lo. Joint admissibility matters: the psi-telescope
    // witnesses cancel deep parts between the two summands, so requiring
    // each summand separately shallow loses relations.
    let delta_x = operator_matrix(alg, &xshape, &xshape, &delta_minus_1)?;
    let phi_x = operator_matrix(alg, &xshape, &wshape, &phi_minus_1)?;
    let gamma_x = operator_matrix(alg, &xshape, &wshape, &gamma_minus_1)?;
    let dim_x = xshape.dim();
    let below = ((lo - deep) as usize) * d * r;
    let mut relations = Subspace::new(p, shape.dim());
    let mut cond = FpMat::zeros(p, 2 * dim_x + below, 2 * dim_x);
    for i in 0..dim_x {
        for j in 0..dim_x {
            let v = delta_x.get(i, j);
            if v != 0 {
                cond.set(i, j, v);
                cond.set(dim_x + i, dim_x + j, v);
            }
        }
    }
    for i in 0..below {
        for j in 0..dim_x {
            let g = gamma_x.get(i, j);
            if g != 0 {
                cond.set(2 * dim_x + i, j, g);
            }
            let f = phi_x.get(i, j);
            if f != 0 {
                // (1 - phi) y contributes the negated (phi - 1) column
                cond.set(2 * dim_x + i, dim_x + j, crate::fp::sub_mod(0, f, p));
            }
        }
    }
    for pair in cond.kernel_basis() {
        let (x, y) = pair.split_at(dim_x);
        let gx = gamma_x.apply(x);
        let fy = phi_x.apply(y);
        let mut rel = vec![0u64; shape.dim()];
        for e in lo..n {
            for comp in 0..d {
                for k in 0..r {
                    let wi = (((e - deep) as usize) * d + comp) * r + k;
                    let vi = (((e - lo) as usize) * d + comp) * r + k;
                    rel[vi] = crate::fp::sub_mod(gx[wi], fy[wi], p);
                }
            }
        }
        relations.insert(&rel);
    }
    // quotient dimension
    let mut span = relations.clone();
    let mut dim_fp = 0;
    for c in &cochains {
        if span.insert(c) {
            dim_fp += 1;
        }
    }
    // A-basis of the quotient
    let mut span = relations.clone();
    let mut class_basis = Vec::new();
    for c in &cochains {
        if !span.contains(c) {
            class_basis.push(c.clone());
            for k in 0..r {
                let scaled = scale_flat(alg, c, k);
                span.insert(&scaled);
            }
        }
    }
    Ok(H2Model {
        shape,
        n,
        relations,
        class_basis,
        dim_fp,
    })
}

/// Builds an H^2 model certified against the duality dimension, deep
/// enough to read classes of elements supported at or above `input_lo`.
pub fn h2_model(m: &PhiGammaModule, input_lo: i64) -> Result<H2Model> {
    if !m.algebra.is_field() {
        return Err(Error::FieldRequired { context: "H^2 window model" });
    }
    let r = m.algebra.basis_dim;
    let want_fp = h2_dim(m)? * r;
    let lat = m.stabilize_lattice();
    // the slice is fixed at the depth the inputs need; only the relation
    // witness window deepens (each psi-telescope conversion costs about
    // h_plus + h of witness depth, so the step scales with the heights)
    let lo = (-(lat.m0 + 2)).min(input_lo - 1);
    let step = (lat.m0 + m.height + m.height_plus + 2).max(4);
    let mut wit_extra = 0i64;
    let mut last = 0usize;
    for _ in 0..=m.config.max_enlargements {
        let model = build_h2_model(m, lo, wit_extra)?;
        last = model.dim_fp;
        if model.dim_fp == want_fp {
            return Ok(model);
        }
        wit_extra += step;
    }
    Err(Error::CertificateFailure {
        context: "H^2 window model did not stabilize at the duality dimension",
        want: want_fp,
        got: last,
    })
}

// ---------------------------------------------------------------------------
// Cup products
// ---------------------------------------------------------------------------

/// Pairing context for H^1(M) x H^1(M*) -> H^2(A(1)) = A.
///
/// The cup 2-cochain of (a1, b1) and (a2, b2) is b1 (x) gamma(a2) -
/// a1 (x) phi(b2), contracted through the evaluation pairing
/// M (x) M* -> A(1). The H^2(A(1)) coordinate is read in a certified
/// window model; the identification with A is fixed only up to the choice
/// of basis vector, one global unit.
pub struct CupContext {
    /// The rank-1 presentation of A(1) in which the contraction of
    /// M (x) M* lands; the H^2 class is read in its window model.
    pub tate: PhiGammaModule,
    pub model: H2Model,
    /// Realized precision for cocycle inputs.
    prec: i64,
}

impl CupContext {
    /// Pairing into the standard presentation of A(1) (scalar matrices).
    /// This is the right target whenever `m_star` is produced by
    /// `cartier_dual`, whose matrices are literal inverse transposes.
    pub fn new(
        algebra: &Arc<CoefficientAlgebra>,
        config: crate::pgmod::Config,
        input_lo: i64,
    ) -> Result<Self> {
        let tate = PhiGammaModule::tate_module(algebra, config)?;
        Self::with_target(tate, input_lo)
    }

    /// Pairing into an explicit rank-1 presentation of A(1) (for example a
    /// hom module dual(quot) (x) sub with cyclotomic ratio, which can carry
    /// a monomial twist from the extension normalization).
    pub fn with_target(target: PhiGammaModule, input_lo: i64) -> Result<Self> {
        let model = h2_model(&target, input_lo)?;
        let prec = model.n + 1;
        Ok(CupContext {
            tate: target,
            model,
            prec,
        })
    }

    /// Evaluates the pairing of certified degree-1 cocycles alpha on M and
    /// beta on M* (the Cartier dual presentation produced by
    /// `cartier_dual`).
    pub fn pair(
        &self,
        m: &PhiGammaModule,
        m_star: &PhiGammaModule,
        alpha: &Cocycle,
        beta: &Cocycle,
    ) -> Result<AElem> {
        let alg = &m.algebra;
        // products of series at depth v only carry their factors' precision
        // minus |v|, so realize deep cocycles wide enough for the model
        let depth = alpha.window.0.min(0) + beta.window.0.min(0);
        let prec = (self.model.n - depth + 4).max(self.prec);
        let (a1, b1) = realize_cocycle(m, alpha, prec)?;
        let (a2, b2) = realize_cocycle(m_star, beta, prec)?;
        let ga2 = m_star.act_gamma(&a2, prec)?;
        let pb2 = m_star.act_phi(&b2)?;
        // contraction: sum_i u[i] * v[i] in the A(1) coordinate
        let mut z = LaurentSeries::zero(alg);
        for (u, v) in b1.iter().zip(&ga2) {
            if u.is_zero() || v.is_zero() {
                continue;
            }
            z = z.add(&u.mul(v)?)?;
        }
        for (u, v) in a1.iter().zip(&pb2) {
            if u.is_zero() || v.is_zero() {
                continue;
            }
            z = z.sub(&u.mul(v)?)?;
        }
        let coords = self.model.class_of(&self.tate, &[z])?;
        Ok(coords.into_iter().next().unwrap_or_else(|| alg.zero()))
    }
}

/// The full pairing matrix between bases of H^1(M) and H^1(M*).
pub fn pairing_matrix(
    m: &PhiGammaModule,
    m_star: &PhiGammaModule,
    basis_m: &H1Basis,
    basis_star: &H1Basis,
) -> Result<Vec<Vec<AElem>>> {
    let lo = basis_m.model.shape.lo + basis_star.model.shape.lo - 2;
    let cup = CupContext::new(&m.algebra, m.config, lo)?;
    let alphas = basis_m.cocycles(m);
    let betas = basis_star.cocycles(m_star);
    let mut rows = Vec::with_capacity(alphas.len());
    for a in &alphas {
        let mut row = Vec::with_capacity(betas.len());
        for b in &betas {
            row.push(cup.pair(m, m_star, a, b)?);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Determinant-nonzero test for a square matrix over a field coefficient
/// algebra, by Gaussian elimination on the regular representation.
pub fn field_matrix_invertible(alg: &Arc<CoefficientAlgebra>, mat: &[Vec<AElem>]) -> bool {
    let k = mat.len();
    if k == 0 {
        return true;
    }
    let r = alg.basis_dim;
    // view as an F_p matrix of the A-linear map A^k -> A^k
    let mut m = FpMat::zeros(alg.p, k * r, k * r);
    for i in 0..k {
        for j in 0..k {
            for t in 0..r {
                let col = alg.mul(&mat[i][j], &alg.basis_elem(t));
                for s in 0..r {
                    m.set(i * r + s, j * r + t, col[s]);
                }
            }
        }
    }
    m.rank() == k * r
}

// ---------------------------------------------------------------------------
// Square-zero obstruction theory
// ---------------------------------------------------------------------------

/// A split square-zero extension A' = A[F] with F = A^k: the ideal I is
/// spanned by the F-copies, I^2 = 0, and A'/I = A.
#[derive(Debug, Clone)]
pub struct SquareZeroExtension {
    pub base: Arc<CoefficientAlgebra>,
    pub big: Arc<CoefficientAlgebra>,
    /// Number of copies of A in the ideal.
    pub f_dim: usize,
}

impl SquareZeroExtension {
    /// Builds A[F] with F = A^k. Basis: (base coord t, copy u) with u = 0
    /// the unit copy and u >= 1 the ideal copies, flattened as u * r + t.
    pub fn split(base: &Arc<CoefficientAlgebra>, f_dim: usize) -> Result<Self> {
        let r = base.basis_dim;
        let n = r * (f_dim + 1);
        let idx = |t: usize, u: usize| u * r + t;
        let mut table = vec![vec![vec![0u64; n]; n]; n];
        for t1 in 0..r {
            for u1 in 0..=f_dim {
                for t2 in 0..r {
                    for u2 in 0..=f_dim {
                        if u1 > 0 && u2 > 0 {
                            continue; // I^2 = 0
                        }
                        let u = u1 + u2;
                        let prod = &base.mult_table[t1][t2];
                        for (t, &c) in prod.iter().enumerate() {
                            table[idx(t1, u1)][idx(t2, u2)][idx(t, u)] = c;
                        }
                    }
                }
            }
        }
        let mut ideal: Vec<usize> = (r..n).collect();
        // the maximal ideal of A' is m_A + I
        for &t in &base.max_ideal_basis {
            ideal.push(t);
        }
        ideal.sort_unstable();
        let big = CoefficientAlgebra::new(base.p, n, table, ideal)?;
        Ok(SquareZeroExtension {
            base: base.clone(),
            big,
            f_dim,
        })
    }

    /// Tautological inclusion A -> A'.
    pub fn include(&self, a: &AElem) -> AElem {
        let mut out = vec![0u64; self.big.basis_dim];
        out[..self.base.basis_dim].copy_from_slice(a);
        out
    }

    /// Projection A' -> A (kills the ideal).
    pub fn project(&self, a: &AElem) -> AElem {
        a[..self.base.basis_dim].to_vec()
    }

    /// The u-th ideal coordinate (u in 1..=f_dim) as an element of A.
    pub fn ideal_coord(&self, a: &AElem, u: usize) -> AElem {
        let r = self.base.basis_dim;
        a[u * r..(u + 1) * r].to_vec()
    }

    /// The tautological lift of a matrix over A to A'.
    pub fn tautological_lift(&self, mat: &SeriesMat) -> Result<SeriesMat> {
        let entries = mat
            .entries
            .iter()
            .map(|e| crate::pgmod::convert_series(e, &self.big, &|c| self.include(c)))
            .collect::<Result<Vec<_>>>()?;
        SeriesMat::from_entries(&self.big, mat.rows, mat.cols, entries)
    }
}

/// The obstruction class of a pair of lifts.
#[derive(Debug, Clone)]
pub struct ObstructionClass {
    /// One H^2(ad M) coordinate vector per ideal copy.
    pub components: Vec<Vec<AElem>>,
    pub lifts_exist: bool,
}

/// Computes the image of phi-tilde gamma-tilde phi-tilde^{-1}
/// gamma-tilde^{-1} - 1 in H^2(ad M) (x) I for lifts over a split
/// square-zero extension. Vanishing is equivalent to the existence of
/// commuting lifts.
pub fn obstruction_class(
    m: &PhiGammaModule,
    ext: &SquareZeroExtension,
    phi_lift: &SeriesMat,
    gamma_lift: &SeriesMat,
) -> Result<ObstructionClass> {
    let alg = &m.algebra;
    if !alg.is_field() {
        return Err(Error::FieldRequired {
            context: "obstruction theory over the residue field",
        });
    }
    if phi_lift.algebra != ext.big || gamma_lift.algebra != ext.big {
        return Err(Error::MalformedInput(
            "lift matrices must have coefficients in the square-zero extension".to_string(),
        ));
    }
    // the lifts must reduce to the module's matrices
    let project = |mat: &SeriesMat| -> Result<SeriesMat> {
        let entries = mat
            .entries
            .iter()
            .map(|e| crate::pgmod::convert_series(e, alg, &|c| ext.project(c)))
            .collect::<Result<Vec<_>>>()?;
        SeriesMat::from_entries(alg, mat.rows, mat.cols, entries)
    };
    let cmp_lo = m
        .phi
        .entries
        .iter()
        .chain(&m.gamma.entries)
        .map(|e| e.window_start())
        .min()
        .unwrap_or(0);
    let check_width = m.config.width / 2;
    if project(phi_lift)?
        .first_difference(&m.phi, cmp_lo, cmp_lo + check_width)?
        .is_some()
        || project(gamma_lift)?
            .first_difference(&m.gamma, cmp_lo, cmp_lo + check_width)?
            .is_some()
    {
        return Err(Error::NotALift);
    }
    // o = Phi~ phi(Gamma~) (Gamma~ gamma(Phi~))^{-1} - 1 over A'((T'))
    let big = &ext.big;
    let ctxp = crate::laurent::ActionCtx::new(big.p)?;
    let w = m.config.width;
    let lhs = phi_lift.mul(&gamma_lift.apply_ring_action(
        &ctxp,
        crate::laurent::RingAction::Phi,
        w,
    )?)?;
    let rhs = gamma_lift.mul(&phi_lift.apply_ring_action(
        &ctxp,
        crate::laurent::RingAction::Gamma,
        w,
    )?)?;
    let o = lhs.mul(&rhs.inverse(w)?)?.sub(&SeriesMat::identity(big, m.rank))?;
    // split along the ideal copies and read the class in H^2(ad M)
    let ad = m.adjoint()?;
    let mut input_lo = 0i64;
    let mut comps_series: Vec<Vec<LaurentSeries>> = Vec::new();
    for u in 1..=ext.f_dim {
        let part_entries = o
            .entries
            .iter()
            .map(|e| crate::pgmod::convert_series(e, alg, &|c| ext.ideal_coord(c, u)))
            .collect::<Result<Vec<_>>>()?;
        let part = SeriesMat::from_entries(alg, m.rank, m.rank, part_entries)?;
        let v = vec_of_hom(&part);
        let projected = ad.e_delta(&v, ad.contraction_level() + 1)?;
        for x in &projected {
            if let Some(val) = x.valuation() {
                input_lo = input_lo.min(val);
            }
        }
        comps_series.push(projected);
    }
    let model = h2_model(&ad, input_lo)?;
    let mut components = Vec::with_capacity(ext.f_dim);
    let mut lifts_exist = true;
    for z in &comps_series {
        let coords = model.class_of(&ad, z)?;
        if coords.iter().any(|c| !alg.is_zero(c)) {
            lifts_exist = false;
        }
        components.push(coords);
    }
    Ok(ObstructionClass {
        components,
        lifts_exist,
    })
}

/// dim Lift(x, A[F]) = h1(ad M) * dim_A F.
pub fn lift_space_dim(m: &PhiGammaModule, f_dim: usize) -> Result<usize> {
    if f_dim == 0 {
        return Ok(0);
    }
    Ok(h1_dim(&m.adjoint()?)? * f_dim)
}

// ---------------------------------------------------------------------------
// Hom spaces
// ---------------------------------------------------------------------------

/// H^0(dual(M1) tensor M2) realized as module morphisms.
pub struct HomSpace {
    pub dim: usize,
    pub basis: Vec<SeriesMat>,
}

pub fn hom_space(m1: &PhiGammaModule, m2: &PhiGammaModule) -> Result<HomSpace> {
    let alg = &m1.algebra;
    let p = alg.p;
    let hom = m1.dual()?.tensor(m2)?;
    let space = h0(&hom)?;
    if !alg.is_field() {
        return Ok(HomSpace {
            dim: space.dim_fp(),
            basis: space
                .flat
                .iter()
                .map(|f| {
                    let v = space.kernel.shape.from_flat(alg, f);
                    hom_of_vec(alg, &v, m2.rank, m1.rank)
                })
                .collect(),
        });
    }
    // A-basis extraction
    let r = alg.basis_dim;
    let want = space.dim_fp() / r;
    let mut span = Subspace::new(p, space.kernel.shape.dim());
    let mut basis = Vec::new();
    for f in &space.flat {
        if basis.len() == want {
            break;
        }
        if !span.contains(f) {
            let v = space.kernel.shape.from_flat(alg, f);
            basis.push(hom_of_vec(alg, &v, m2.rank, m1.rank));
            for k in 0..r {
                span.insert(&scale_flat(alg, f, k));
            }
        }
    }
    Ok(HomSpace { dim: want, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgmod::Config;

    fn f3() -> Arc<CoefficientAlgebra> {
        CoefficientAlgebra::prime_field(3).unwrap()
    }

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn phi_kernel_examples() {
        let a = f3();
        // trivial rank 1: kernel = constants
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let k = kernel_phi_minus_one(&triv).unwrap();
        assert_eq!(k.dim_fp(), 1);
        let rep = k.shape.from_flat(&a, &k.flat[0]);
        assert_eq!(rep[0].valuation(), Some(0));
        // ur_2: phi(x) = 2 x has no fixed vectors
        let ur2 = PhiGammaModule::unramified(&a, &a.from_scalar(2), cfg()).unwrap();
        assert_eq!(kernel_phi_minus_one(&ur2).unwrap().dim_fp(), 0);
        // A(1): phi part is trivial, kernel is the constants
        let t = PhiGammaModule::tate_module(&a, cfg()).unwrap();
        assert_eq!(kernel_phi_minus_one(&t).unwrap().dim_fp(), 1);
    }

    #[test]
    fn kernel_never_attains_the_valuation_wall() {
        // the bound ker(phi - 1) in T'^(-m0) Lambda has an empirical
        // margin: representatives stay strictly above the wall
        use crate::suite::{random_module, SplitMix64};
        let a = f3();
        let mut rng = SplitMix64(123);
        let mut reps = 0;
        for _ in 0..12 {
            let rank = 1 + rng.below(2) as usize;
            let Ok((m, _)) = random_module(
                &mut rng,
                &a,
                Config {
                    width: 96,
                    ..Config::default()
                },
                rank,
            ) else {
                continue;
            };
            let k = kernel_phi_minus_one(&m).unwrap();
            let m0 = m.stabilize_lattice().m0;
            for flat in &k.flat {
                reps += 1;
                let rep = k.shape.from_flat(&a, flat);
                let minval = rep.iter().filter_map(|x| x.valuation()).min().unwrap_or(0);
                assert!(minval > -m0, "kernel representative attained the m0 wall");
            }
        }
        assert!(reps > 0);
    }

    #[test]
    fn kernel_representatives_refine_to_any_precision() {
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let one = SeriesMat::identity(&a, 1);
        let zero = SeriesMat::zeros(&a, 1, 1);
        let e = PhiGammaModule::extension_from_cocycle(&triv, &triv, &one, &zero).unwrap();
        let k = kernel_phi_minus_one(&e).unwrap();
        assert!(k.dim_fp() > 0);
        for flat in &k.flat {
            let rep = k.shape.from_flat(&a, flat);
            let refined = refine_kernel_element(&e, &rep, 30).unwrap();
            let image = e.act_phi(&refined).unwrap();
            for (y, x) in image.iter().zip(&refined) {
                let defect = y.sub(x).unwrap();
                if let Some(v) = defect.valuation() {
                    assert!(v >= 30, "kernel defect at exponent {v}");
                }
            }
        }
    }

    #[test]
    fn h0_examples() {
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        assert_eq!(h0_dim(&triv).unwrap(), 1);
        // A(1): delta acts by 2 on the kernel constants
        let t = PhiGammaModule::tate_module(&a, cfg()).unwrap();
        assert_eq!(h0_dim(&t).unwrap(), 0);
        let ur2 = PhiGammaModule::unramified(&a, &a.from_scalar(2), cfg()).unwrap();
        assert_eq!(h0_dim(&ur2).unwrap(), 0);
    }

    #[test]
    fn h2_examples() {
        let a = f3();
        let t = PhiGammaModule::tate_module(&a, cfg()).unwrap();
        assert_eq!(h2_dim(&t).unwrap(), 1);
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        assert_eq!(h2_dim(&triv).unwrap(), 0);
        let ur2 = PhiGammaModule::unramified(&a, &a.from_scalar(2), cfg()).unwrap();
        let ur2_1 = ur2.tate_twist(1).unwrap();
        assert_eq!(h2_dim(&ur2_1).unwrap(), 0);
    }

    #[test]
    fn h1_dims() {
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        assert_eq!(h1_dim(&triv).unwrap(), 2);
        let t = PhiGammaModule::tate_module(&a, cfg()).unwrap();
        assert_eq!(h1_dim(&t).unwrap(), 2);
        let ur2 = PhiGammaModule::unramified(&a, &a.from_scalar(2), cfg()).unwrap();
        assert_eq!(h1_dim(&ur2).unwrap(), 1);
    }

    #[test]
    fn h1_basis_stabilizes() {
        let a = f3();
        for (m, want) in [
            (PhiGammaModule::trivial(&a, cfg()).unwrap(), 2usize),
            (PhiGammaModule::tate_module(&a, cfg()).unwrap(), 2),
            (
                PhiGammaModule::unramified(&a, &a.from_scalar(2), cfg()).unwrap(),
                1,
            ),
        ] {
            let basis = h1_basis(&m).unwrap();
            assert_eq!(basis.dim, want);
            // the unramified class (1, 0) of the trivial module lies in the span
            // (checked for the trivial module below)
            for flat in &basis.basis_flat {
                let c = basis.flat_to_cocycle(&m, flat);
                let (av, bv) = realize_cocycle(&m, &c, 12).unwrap();
                // d1 vanishes to the realized precision
                let ga = m.act_gamma(&av, 10).unwrap();
                let pb = m.act_phi(&bv);
                let pb = pb.unwrap();
                for ((g, x), (p, y)) in ga.iter().zip(&av).zip(pb.iter().zip(&bv)) {
                    let e = g.sub(x).unwrap().add(&y.sub(p).unwrap()).unwrap();
                    if let Some(v) = e.valuation() {
                        assert!(v >= 9, "cocycle defect at exponent {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn unramified_class_is_in_h1_of_trivial() {
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let basis = h1_basis(&triv).unwrap();
        // (1, 0) is a nonzero class
        let one = LaurentSeries::one(&a);
        let zero = LaurentSeries::zero(&a);
        let alpha = Cocycle {
            degree: 1,
            a: vec![one],
            b: vec![zero],
            window: (basis.model.lo, basis.model.n),
            trunc: basis.model.n,
            certified: true,
        };
        assert!(!basis.is_coboundary(&triv, &alpha).unwrap());
    }

    #[test]
    fn h0_dimension_stable_under_doubling() {
        let a = f3();
        let mut wide = cfg();
        wide.width *= 2;
        for (m1, m2) in [
            (
                PhiGammaModule::trivial(&a, cfg()).unwrap(),
                PhiGammaModule::trivial(&a, wide).unwrap(),
            ),
            (
                PhiGammaModule::tate_module(&a, cfg()).unwrap(),
                PhiGammaModule::tate_module(&a, wide).unwrap(),
            ),
        ] {
            assert_eq!(h0_dim(&m1).unwrap(), h0_dim(&m2).unwrap());
        }
    }

    #[test]
    fn differentials_compose_to_zero() {
        // d1(d0(x)) = (gamma-1)(phi-1)x + (1-phi)(gamma-1)x = 0 exactly
        let a = f3();
        let tate = PhiGammaModule::tate_module(&a, cfg()).unwrap();
        let prec = 14;
        let x = vec![LaurentSeries::from_coeffs(
            &a,
            -3,
            [2u64, 1, 0, 1, 2, 1].iter().map(|&c| a.from_scalar(c)).collect(),
            true,
        )
        .unwrap()];
        let d0a: Vec<LaurentSeries> = tate
            .act_phi(&x)
            .unwrap()
            .iter()
            .zip(&x)
            .map(|(y, v)| y.sub(v).unwrap())
            .collect();
        let d0b: Vec<LaurentSeries> = tate
            .act_gamma(&x, prec)
            .unwrap()
            .iter()
            .zip(&x)
            .map(|(y, v)| y.sub(v).unwrap())
            .collect();
        let ga = tate.act_gamma(&d0a, prec).unwrap()[0].sub(&d0a[0]).unwrap();
        let pb = d0b[0].sub(&tate.act_phi(&d0b).unwrap()[0]).unwrap();
        let total = ga.add(&pb).unwrap();
        assert_eq!(total.valuation(), None, "d1 d0 != 0: {total:?}");
    }

    #[test]
    fn chain_map_to_psi_complex() {
        // (id, (-psi, 1), -psi) intertwines the differentials
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let v = vec![LaurentSeries::from_coeffs(
            &a,
            -2,
            [1u64, 0, 2, 1, 1].iter().map(|&c| a.from_scalar(c)).collect(),
            true,
        )
        .unwrap()];
        // degree 0: -psi((phi - 1) x) = (psi - 1) x
        let px = triv.act_phi(&v).unwrap();
        let lhs = triv
            .act_psi(&[px[0].sub(&v[0]).unwrap()])
            .unwrap()[0]
            .neg();
        let rhs = triv.act_psi(&v).unwrap()[0].sub(&v[0]).unwrap();
        assert!(lhs.eq_on(&rhs, -3, 3).unwrap());
        // degree 1: -psi((gamma-1)a + (1-phi)b) = (gamma-1)(-psi a) + (1-psi) b
        let prec = 12;
        let aa = vec![LaurentSeries::from_coeffs(
            &a,
            -2,
            [1u64, 2, 0, 1].iter().map(|&c| a.from_scalar(c)).collect(),
            true,
        )
        .unwrap()];
        let bb = vec![LaurentSeries::from_coeffs(
            &a,
            -1,
            [2u64, 2, 1].iter().map(|&c| a.from_scalar(c)).collect(),
            true,
        )
        .unwrap()];
        let d1 = {
            let ga = triv.act_gamma(&aa, prec).unwrap()[0].sub(&aa[0]).unwrap();
            let pb = bb[0].sub(&triv.act_phi(&bb).unwrap()[0]).unwrap();
            ga.add(&pb).unwrap()
        };
        let lhs = triv.act_psi(&[d1]).unwrap()[0].neg();
        let rhs = {
            let ma = triv.act_psi(&aa).unwrap()[0].neg();
            let g = triv.act_gamma(&[ma.clone()], prec).unwrap()[0].sub(&ma).unwrap();
            let p = bb[0].sub(&triv.act_psi(&bb).unwrap()[0]).unwrap();
            g.add(&p).unwrap()
        };
        assert!(lhs.eq_on(&rhs, -3, 3).unwrap());
    }

    #[test]
    fn h2_model_of_tate_is_one_dimensional() {
        let a = f3();
        let t = PhiGammaModule::tate_module(&a, cfg()).unwrap();
        let model = h2_model(&t, 0).unwrap();
        assert_eq!(model.dim_fp, 1);
        assert_eq!(model.class_basis.len(), 1);
    }

    #[test]
    fn cup_pairing_perfect_between_trivial_and_tate() {
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let tate = triv.cartier_dual().unwrap();
        let basis_m = h1_basis(&triv).unwrap();
        let basis_star = h1_basis(&tate).unwrap();
        let mat = pairing_matrix(&triv, &tate, &basis_m, &basis_star).unwrap();
        assert_eq!(mat.len(), 2);
        assert!(field_matrix_invertible(&a, &mat), "pairing matrix {mat:?}");
    }

    #[test]
    fn cup_with_zero_class_vanishes() {
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let tate = triv.cartier_dual().unwrap();
        let basis = h1_basis(&triv).unwrap();
        let alpha = basis.cocycles(&triv).remove(0);
        let zero = Cocycle {
            degree: 1,
            a: vec![LaurentSeries::zero(&a)],
            b: vec![LaurentSeries::zero(&a)],
            window: (-4, 2),
            trunc: 2,
            certified: true,
        };
        let cup = CupContext::new(&a, cfg(), -8).unwrap();
        let v = cup.pair(&triv, &tate, &alpha, &zero).unwrap();
        assert!(a.is_zero(&v));
    }

    #[test]
    fn cup_kills_coboundaries() {
        // pairing any class against a coboundary gives zero
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let tate = triv.cartier_dual().unwrap();
        let basis = h1_basis(&triv).unwrap();
        let alpha = basis.cocycles(&triv).remove(0);
        // d0(x) for x = T'^{-1} + 2 T' in A(1)
        let x = vec![LaurentSeries::from_coeffs(
            &a,
            -1,
            vec![a.from_scalar(1), a.from_scalar(0), a.from_scalar(2)],
            true,
        )
        .unwrap()];
        let n = tate.contraction_level() + 1;
        let px = tate.act_phi(&x).unwrap();
        let gx = tate.act_gamma(&x, n + 6).unwrap();
        let cob = Cocycle {
            degree: 1,
            a: vec![px[0].sub(&x[0]).unwrap().reduce_upper(n)],
            b: vec![gx[0].sub(&x[0]).unwrap().reduce_upper(n)],
            window: (-3, n),
            trunc: n,
            certified: true,
        };
        let cup = CupContext::new(&a, cfg(), -10).unwrap();
        let v = cup.pair(&triv, &tate, &alpha, &cob).unwrap();
        assert!(a.is_zero(&v), "coboundary paired to {v:?}");
    }

    #[test]
    fn unramified_functional_has_one_dimensional_kernel() {
        // the pairing against the unramified class (1, 0) of H^1(trivial)
        // is a nonzero functional on H^1(A(1)) with 1-dimensional kernel
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let tate = triv.cartier_dual().unwrap();
        let basis_star = h1_basis(&tate).unwrap();
        let unram = Cocycle {
            degree: 1,
            a: vec![LaurentSeries::one(&a)],
            b: vec![LaurentSeries::zero(&a)],
            window: (-4, 2),
            trunc: 2,
            certified: true,
        };
        let cup = CupContext::new(&a, cfg(), basis_star.model.shape.lo - 6).unwrap();
        let values: Vec<AElem> = basis_star
            .cocycles(&tate)
            .iter()
            .map(|beta| cup.pair(&triv, &tate, &unram, beta).unwrap())
            .collect();
        assert!(
            values.iter().any(|v| !a.is_zero(v)),
            "functional vanished identically"
        );
        // kernel dimension over A: 2 - rank of the 1 x 2 matrix
        let mat = vec![values];
        let rank = if field_matrix_invertible(&a, &[vec![mat[0][0].clone()]]) || !a.is_zero(&mat[0][1]) {
            1
        } else {
            0
        };
        assert_eq!(rank, 1);
    }

    #[test]
    fn class_of_extension_round_trip() {
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let one = SeriesMat::identity(&a, 1);
        let zero = SeriesMat::zeros(&a, 1, 1);
        let e = PhiGammaModule::extension_from_cocycle(&triv, &triv, &one, &zero).unwrap();
        let cls = class_of_extension(&e, 1).unwrap();
        // block read-off gives back (1, 0)
        assert_eq!(cls.cocycle.a[0].coeff_at(0), crate::laurent::Coeff::Known(a.from_scalar(1)));
        assert!(cls.cocycle.b[0].valuation().is_none());
        // the hom module here is trivial rank 1; the class is nonzero
        let basis = h1_basis(&cls.hom).unwrap();
        assert!(!basis.is_coboundary(&cls.hom, &cls.cocycle).unwrap());
        // split extension: class is a coboundary
        let s = PhiGammaModule::extension_from_cocycle(&triv, &triv, &zero, &zero).unwrap();
        let scls = class_of_extension(&s, 1).unwrap();
        assert!(basis.is_coboundary(&scls.hom, &scls.cocycle).unwrap());
    }

    #[test]
    fn extension_round_trip_mod_coboundary() {
        // class_of_extension(extension_from_cocycle(...)) returns the input
        // class up to coboundary. Classes of H^1(A(1)) have genuinely deep
        // representatives, so the width budget scales with the depth.
        let a = f3();
        let wide = Config {
            width: 96,
            ..cfg()
        };
        let triv = PhiGammaModule::trivial(&a, wide).unwrap();
        let tate = PhiGammaModule::tate_module(&a, wide).unwrap();
        // a nonzero class in H^1(A(1)) (hom of trivial by tate)
        let hom = triv.dual().unwrap().tensor(&tate).unwrap();
        let basis = h1_basis(&hom).unwrap();
        let alpha = basis.cocycles(&hom).remove(0);
        // realize the model cocycle to working width before building
        let (av, bv) = realize_cocycle(&hom, &alpha, wide.width).unwrap();
        let f = hom_of_vec(&a, &av, 1, 1);
        let g = hom_of_vec(&a, &bv, 1, 1);
        let e = PhiGammaModule::extension_from_cocycle(&triv, &tate, &f, &g).unwrap();
        // h0 of a nonsplit extension of trivial by A(1) vanishes
        assert_eq!(h0_dim(&e).unwrap(), 0);
        let cls = class_of_extension(&e, 1).unwrap();
        // difference with alpha is a coboundary
        let diff = Cocycle {
            degree: 1,
            a: vec![cls.cocycle.a[0].sub(&alpha.a[0]).unwrap()],
            b: vec![cls.cocycle.b[0].sub(&alpha.b[0]).unwrap()],
            window: alpha.window,
            trunc: alpha.trunc,
            certified: true,
        };
        assert!(basis.is_coboundary(&cls.hom, &diff).unwrap());
    }

    #[test]
    fn obstruction_of_tautological_lift_vanishes() {
        let a = f3();
        let ext = SquareZeroExtension::split(&a, 1).unwrap();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let tate = PhiGammaModule::tate_module(&a, cfg()).unwrap();
        let e = {
            let one = SeriesMat::identity(&a, 1);
            let zero = SeriesMat::zeros(&a, 1, 1);
            PhiGammaModule::extension_from_cocycle(&triv, &triv, &one, &zero).unwrap()
        };
        for m in [triv, tate, e] {
            let phi_l = ext.tautological_lift(&m.phi).unwrap();
            let gamma_l = ext.tautological_lift(&m.gamma).unwrap();
            let o = obstruction_class(&m, &ext, &phi_l, &gamma_l).unwrap();
            assert!(o.lifts_exist, "tautological lift obstructed: {:?}", o.components);
        }
    }

    #[test]
    fn obstruction_invariant_under_reparameterization() {
        let a = f3();
        let ext = SquareZeroExtension::split(&a, 1).unwrap();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let one = SeriesMat::identity(&a, 1);
        let zero = SeriesMat::zeros(&a, 1, 1);
        let m = PhiGammaModule::extension_from_cocycle(&triv, &triv, &one, &zero).unwrap();
        let o0 = obstruction_class(
            &m,
            &ext,
            &ext.tautological_lift(&m.phi).unwrap(),
            &ext.tautological_lift(&m.gamma).unwrap(),
        )
        .unwrap();
        // perturb: phi' = (1 + eps X) phi, gamma' = (1 - eps Y) gamma with
        // X, Y arbitrary integral matrices over A'
        let big = &ext.big;
        let eps = big.basis_elem(a.basis_dim); // first ideal coordinate
        let lift = |mat: &SeriesMat| -> SeriesMat { ext.tautological_lift(mat).unwrap() };
        let mut x = SeriesMat::identity(big, 2);
        *x.at_mut(0, 1) = LaurentSeries::from_coeffs(
            big,
            0,
            vec![eps.clone(), big.scalar_mul(2, &eps)],
            true,
        )
        .unwrap();
        *x.at_mut(0, 0) = LaurentSeries::one(big)
            .add(&LaurentSeries::monomial(big, eps.clone(), 2))
            .unwrap();
        let mut y = SeriesMat::identity(big, 2);
        *y.at_mut(1, 0) = LaurentSeries::monomial(big, eps.clone(), 1);
        let phi_l = x.mul(&lift(&m.phi)).unwrap();
        let gamma_l = {
            let two = big.from_scalar(2);
            let minus_eps_part = y
                .sub(&SeriesMat::identity(big, 2))
                .unwrap()
                .scale_elem(&two); // (1 - Y_off) = 1 + 2 Y_off mod 3
            SeriesMat::identity(big, 2)
                .add(&minus_eps_part)
                .unwrap()
                .mul(&lift(&m.gamma))
                .unwrap()
        };
        let o1 = obstruction_class(&m, &ext, &phi_l, &gamma_l).unwrap();
        assert_eq!(o0.components, o1.components);
        assert!(o1.lifts_exist);
    }

    #[test]
    fn lift_space_dims() {
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        // ad(trivial rank 1) = trivial, h1 = 2
        assert_eq!(lift_space_dim(&triv, 1).unwrap(), 2);
        let ur2 = PhiGammaModule::unramified(&a, &a.from_scalar(2), cfg()).unwrap();
        assert_eq!(lift_space_dim(&ur2, 1).unwrap(), 2);
        assert_eq!(lift_space_dim(&ur2, 0).unwrap(), 0);
    }

    #[test]
    fn hom_space_examples() {
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let hs = hom_space(&triv, &triv).unwrap();
        assert_eq!(hs.dim, 1);
        let ur2 = PhiGammaModule::unramified(&a, &a.from_scalar(2), cfg()).unwrap();
        assert_eq!(hom_space(&ur2, &triv).unwrap().dim, 0);
        // hom(M, M) always contains the identity
        let one = SeriesMat::identity(&a, 1);
        let zero = SeriesMat::zeros(&a, 1, 1);
        let e = PhiGammaModule::extension_from_cocycle(&triv, &triv, &one, &zero).unwrap();
        let hs = hom_space(&e, &e).unwrap();
        assert!(hs.dim >= 1);
        // a basis member intertwines phi: Phi2 phi(F) = F Phi1
        let ctx = &e.ctx;
        for f in &hs.basis {
            let lhs = e
                .phi
                .mul(&f.apply_ring_action(ctx, crate::laurent::RingAction::Phi, 10).unwrap())
                .unwrap();
            let rhs = f.mul(&e.phi).unwrap();
            assert!(lhs.first_difference(&rhs, -4, 6).unwrap().is_none());
        }
    }

    #[test]
    fn euler_characteristic_rank2_extension() {
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let one = SeriesMat::identity(&a, 1);
        let zero = SeriesMat::zeros(&a, 1, 1);
        let e = PhiGammaModule::extension_from_cocycle(&triv, &triv, &one, &zero).unwrap();
        let rep = cohomology(&e).unwrap();
        assert!(rep.euler_ok, "{rep:?}");
        assert!(rep.duality_ok, "{rep:?}");
        assert_eq!(rep.h0 as i64 - rep.h1 as i64 + rep.h2 as i64, -2);
    }
}
