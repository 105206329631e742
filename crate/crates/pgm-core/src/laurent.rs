//! Exact windowed arithmetic in A((T')) and the ring actions phi, gamma,
//! delta and psi.
//!
//! A series stores coefficients for exponents `val .. val+len`. Exponents
//! below `val` are exactly zero. Exponents at or above `val+len` are exactly
//! zero when `exact` is set (the series is a Laurent polynomial) and unknown
//! otherwise. Every stored coefficient is exact; window propagation is
//! interval-based and pessimistic, so recomputing at higher input precision
//! agrees on the overlap.
//!
//! Mod p the Frobenius is the substitution T' -> T'^p, implemented as exact
//! exponent reindexing. gamma and the torsion generator delta act by
//! T' -> (1+T')^c - 1 where c is 1+p for gamma and a Teichmuller lift for
//! delta; the image series is generated on demand at any width from base-p
//! digits of c. psi is the A-linear left inverse of phi, given on monomials
//! by psi(T'^(pj+r)) = (-1)^r T'^j for 0 <= r < p.

use crate::coeffs::{AElem, CoefficientAlgebra};
use crate::error::{Error, Result};
use crate::fp;
use std::sync::Arc;

/// Floor division for i64 with positive divisor.
pub fn div_floor(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    let q = a / b;
    if a % b != 0 && a < 0 {
        q - 1
    } else {
        q
    }
}

/// Ceiling division for i64 with positive divisor.
pub fn div_ceil(a: i64, b: i64) -> i64 {
    -div_floor(-a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSeries {
    algebra: Arc<CoefficientAlgebra>,
    val: i64,
    coeffs: Vec<AElem>,
    exact: bool,
}

/// Whether a coefficient is determined by the window data.
#[derive(Debug, Clone, PartialEq)]
pub enum Coeff {
    Known(AElem),
    Unknown,
}

impl LaurentSeries {
    pub fn algebra(&self) -> &Arc<CoefficientAlgebra> {
        &self.algebra
    }

    /// The exact zero series.
    pub fn zero(algebra: &Arc<CoefficientAlgebra>) -> Self {
        LaurentSeries {
            algebra: algebra.clone(),
            val: 0,
            coeffs: Vec::new(),
            exact: true,
        }
    }

    /// Zero on the known window `(-inf, prec)`, unknown beyond.
    pub fn zero_to_precision(algebra: &Arc<CoefficientAlgebra>, prec: i64) -> Self {
        LaurentSeries {
            algebra: algebra.clone(),
            val: prec,
            coeffs: Vec::new(),
            exact: false,
        }
    }

    pub fn one(algebra: &Arc<CoefficientAlgebra>) -> Self {
        Self::monomial(algebra, algebra.one(), 0)
    }

    pub fn monomial(algebra: &Arc<CoefficientAlgebra>, c: AElem, exp: i64) -> Self {
        LaurentSeries {
            algebra: algebra.clone(),
            val: exp,
            coeffs: vec![c],
            exact: true,
        }
        .normalized()
    }

    pub fn constant(algebra: &Arc<CoefficientAlgebra>, c: AElem) -> Self {
        Self::monomial(algebra, c, 0)
    }

    /// Builds a series from explicit window data.
    pub fn from_coeffs(
        algebra: &Arc<CoefficientAlgebra>,
        val: i64,
        coeffs: Vec<AElem>,
        exact: bool,
    ) -> Result<Self> {
        for c in &coeffs {
            if c.len() != algebra.basis_dim {
                return Err(Error::MalformedInput(
                    "coefficient has wrong algebra dimension".to_string(),
                ));
            }
        }
        let coeffs = coeffs
            .into_iter()
            .map(|c| c.into_iter().map(|x| x % algebra.p).collect())
            .collect();
        Ok(LaurentSeries {
            algebra: algebra.clone(),
            val,
            coeffs,
            exact,
        }
        .normalized())
    }

    fn normalized(mut self) -> Self {
        let alg = self.algebra.clone();
        let lead_zeros = self
            .coeffs
            .iter()
            .take_while(|c| alg.is_zero(c))
            .count();
        if lead_zeros > 0 {
            self.coeffs.drain(..lead_zeros);
            self.val += lead_zeros as i64;
        }
        if self.exact {
            while self.coeffs.last().is_some_and(|c| alg.is_zero(c)) {
                self.coeffs.pop();
            }
            if self.coeffs.is_empty() {
                self.val = 0;
            }
        }
        self
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// True when the series is known to be zero everywhere it is determined
    /// and is exact (i.e. it is the zero element).
    pub fn is_zero(&self) -> bool {
        self.exact && self.coeffs.is_empty()
    }

    /// Start of the stored window (coefficients below are exactly zero).
    pub fn window_start(&self) -> i64 {
        self.val
    }

    /// End of the stored window. For exact series this is one past the
    /// support; otherwise it equals the precision.
    pub fn window_end(&self) -> i64 {
        self.val + self.coeffs.len() as i64
    }

    /// One past the last determined exponent; None when exact.
    pub fn precision(&self) -> Option<i64> {
        if self.exact {
            None
        } else {
            Some(self.val + self.coeffs.len() as i64)
        }
    }

    fn prec_or(&self, inf: i64) -> i64 {
        self.precision().unwrap_or(inf)
    }

    /// The valuation, when it is visible: the exponent of the first nonzero
    /// stored coefficient. None means "no nonzero coefficient in the
    /// window" (the zero element, or undetermined).
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !self.algebra.is_zero(c))
            .map(|i| self.val + i as i64)
    }

    pub fn coeff_at(&self, e: i64) -> Coeff {
        if e < self.val {
            return Coeff::Known(self.algebra.zero());
        }
        let idx = (e - self.val) as usize;
        if idx < self.coeffs.len() {
            Coeff::Known(self.coeffs[idx].clone())
        } else if self.exact {
            Coeff::Known(self.algebra.zero())
        } else {
            Coeff::Unknown
        }
    }

    /// Known coefficient or error (used where the contract requires it).
    pub fn known_coeff(&self, e: i64, context: &'static str) -> Result<AElem> {
        match self.coeff_at(e) {
            Coeff::Known(c) => Ok(c),
            Coeff::Unknown => Err(Error::InsufficientPrecision {
                context,
                need: e,
                have: self.prec_or(i64::MAX),
            }),
        }
    }

    fn check_same_algebra(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.algebra, &other.algebra) || self.algebra == other.algebra {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_algebra(other)?;
        let alg = &self.algebra;
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let exact = self.exact && other.exact;
        let lo = self.val.min(other.val);
        let hi = if exact {
            (self.val + self.coeffs.len() as i64).max(other.val + other.coeffs.len() as i64)
        } else {
            self.prec_or(i64::MAX).min(other.prec_or(i64::MAX))
        };
        let mut coeffs = Vec::with_capacity((hi - lo).max(0) as usize);
        for e in lo..hi {
            let a = match self.coeff_at(e) {
                Coeff::Known(c) => c,
                Coeff::Unknown => unreachable!("window bound"),
            };
            let b = match other.coeff_at(e) {
                Coeff::Known(c) => c,
                Coeff::Unknown => unreachable!("window bound"),
            };
            coeffs.push(alg.add(&a, &b));
        }
        Ok(LaurentSeries {
            algebra: alg.clone(),
            val: lo,
            coeffs,
            exact,
        }
        .normalized())
    }

    pub fn neg(&self) -> Self {
        let alg = &self.algebra;
        LaurentSeries {
            algebra: alg.clone(),
            val: self.val,
            coeffs: self.coeffs.iter().map(|c| alg.neg(c)).collect(),
            exact: self.exact,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &AElem) -> Self {
        let alg = &self.algebra;
        LaurentSeries {
            algebra: alg.clone(),
            val: self.val,
            coeffs: self.coeffs.iter().map(|x| alg.mul(c, x)).collect(),
            exact: self.exact,
        }
        .normalized()
    }

    /// Multiplication by T'^k.
    pub fn shift(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.val += k;
        out
    }

    /// Exact product on the window `[v_f+v_g, min(N_f+v_g, N_g+v_f))`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_algebra(other)?;
        let alg = &self.algebra;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(alg));
        }
        let exact = self.exact && other.exact;
        let lo = self.val + other.val;
        let hi = if exact {
            self.val + self.coeffs.len() as i64 + other.val + other.coeffs.len() as i64
        } else {
            let a = if self.exact {
                i64::MAX
            } else {
                self.val + self.coeffs.len() as i64 + other.val
            };
            let b = if other.exact {
                i64::MAX
            } else {
                other.val + other.coeffs.len() as i64 + self.val
            };
            a.min(b)
        };
        let len = (hi - lo).max(0) as usize;
        let mut coeffs = vec![alg.zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if alg.is_zero(a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let e = self.val + i as i64 + other.val + j as i64;
                if e < lo || e >= hi {
                    continue;
                }
                let idx = (e - lo) as usize;
                let prod = alg.mul(a, b);
                coeffs[idx] = alg.add(&coeffs[idx], &prod);
            }
        }
        Ok(LaurentSeries {
            algebra: alg.clone(),
            val: lo,
            coeffs,
            exact,
        }
        .normalized())
    }

    /// Forgets everything at exponent `n` and above (reduction mod T'^n on
    /// the data; the result is marked inexact with precision n).
    pub fn reduce_upper(&self, n: i64) -> Self {
        let alg = &self.algebra;
        let mut coeffs = Vec::new();
        let lo = self.val.min(n);
        for e in lo..n {
            match self.coeff_at(e) {
                Coeff::Known(c) => coeffs.push(c),
                Coeff::Unknown => break,
            }
        }
        LaurentSeries {
            algebra: alg.clone(),
            val: lo,
            coeffs,
            exact: false,
        }
        .normalized()
    }

    /// The part of the series supported at exponents >= n (exactly known
    /// piece of the window; tail exactness inherited).
    pub fn upper_part(&self, n: i64) -> Self {
        let alg = &self.algebra;
        let mut coeffs = Vec::new();
        let lo = self.val.max(n);
        let hi = self.val + self.coeffs.len() as i64;
        for e in lo..hi {
            coeffs.push(match self.coeff_at(e) {
                Coeff::Known(c) => c,
                Coeff::Unknown => unreachable!(),
            });
        }
        LaurentSeries {
            algebra: alg.clone(),
            val: lo,
            coeffs,
            exact: self.exact,
        }
        .normalized()
    }

    /// Inverse, computed to relative width `width` (or to the input's own
    /// relative precision, whichever is smaller).
    ///
    /// Requires a unit coefficient to be visible in the window. Over a
    /// local algebra the part below the first unit coefficient has
    /// nilpotent coefficients and is handled by a finite geometric series.
    pub fn invert(&self, width: i64) -> Result<Self> {
        let alg = &self.algebra;
        if self.coeffs.is_empty() {
            return Err(if self.exact {
                Error::NonUnitLeading
            } else {
                Error::EmptyWindow
            });
        }
        let unit_pos = self
            .coeffs
            .iter()
            .position(|c| alg.is_unit(c))
            .ok_or(Error::NonUnitLeading)?;
        let w_u = self.val + unit_pos as i64;
        // width actually available for the unit-led part
        let avail = if self.exact {
            width
        } else {
            width.min(self.val + self.coeffs.len() as i64 - w_u)
        };
        if avail <= 0 {
            return Err(Error::EmptyWindow);
        }
        let high = self.upper_part(w_u);
        // exact monomials invert exactly
        if high.exact && high.coeffs.len() == 1 {
            let c = alg.inv(&high.coeffs[0])?;
            let inv_high = Self::monomial(alg, c, -w_u);
            return self.finish_invert(inv_high, unit_pos);
        }
        let inv_high = high.invert_unit_leading(avail)?;
        self.finish_invert(inv_high, unit_pos)
    }

    fn finish_invert(&self, inv_high: Self, unit_pos: usize) -> Result<Self> {
        let alg = &self.algebra;
        if unit_pos == 0 {
            return Ok(inv_high);
        }
        let low = LaurentSeries {
            algebra: alg.clone(),
            val: self.val,
            coeffs: self.coeffs[..unit_pos].to_vec(),
            exact: true,
        }
        .normalized();
        // f = high (1 + high^{-1} low); the correction x = high^{-1} low has
        // coefficients in the maximal ideal, so x^e vanishes at the
        // nilpotency class and the geometric series is finite
        let x = inv_high.mul(&low)?;
        let class = alg.nilpotency_class();
        let mut geom = Self::one(alg);
        let mut pow = Self::one(alg);
        for _ in 1..class {
            pow = pow.mul(&x)?.neg();
            geom = geom.add(&pow)?;
        }
        inv_high.mul(&geom)
    }

    fn invert_unit_leading(&self, width: i64) -> Result<Self> {
        let alg = &self.algebra;
        let lead = &self.coeffs[0];
        let lead_inv = alg.inv(lead)?;
        let n = width as usize;
        let mut out = vec![alg.zero(); n];
        out[0] = lead_inv.clone();
        for k in 1..n {
            // c_k = -lead^{-1} * sum_{i=1..=k} f_{v+i} c_{k-i}
            let mut acc = alg.zero();
            for i in 1..=k {
                let fi = if i < self.coeffs.len() {
                    &self.coeffs[i]
                } else {
                    continue;
                };
                if alg.is_zero(fi) {
                    continue;
                }
                acc = alg.add(&acc, &alg.mul(fi, &out[k - i]));
            }
            out[k] = alg.neg(&alg.mul(&lead_inv, &acc));
        }
        Ok(LaurentSeries {
            algebra: alg.clone(),
            val: -self.val,
            coeffs: out,
            exact: false,
        }
        .normalized())
    }

    /// Composition f(g). Requires val(g) >= 1 with unit leading
    /// coefficient. The result is computed up to exponent `out_prec`
    /// (tighter if the inputs' windows force it).
    pub fn substitute(&self, g: &Self, out_prec: i64) -> Result<Self> {
        self.check_same_algebra(g)?;
        let alg = &self.algebra;
        if self.is_zero() {
            return Ok(Self::zero(alg));
        }
        let vg = match g.valuation() {
            Some(v) if v >= 1 => v,
            _ => return Err(Error::BadInnerValuation),
        };
        let lead = match g.coeff_at(vg) {
            Coeff::Known(c) => c,
            Coeff::Unknown => unreachable!("valuation is visible"),
        };
        if !alg.is_unit(&lead) {
            return Err(Error::BadInnerValuation);
        }
        let g_rel_width = match g.precision() {
            None => i64::MAX,
            Some(ng) => ng - vg,
        };
        let mut eff = out_prec;
        if let Some(nf) = self.precision() {
            // unknown f_m first affects exponent m*vg
            eff = eff.min(nf * vg);
        }
        if g_rel_width != i64::MAX {
            eff = eff.min(self.val * vg + g_rel_width);
        }
        let mut acc = if self.exact && self.val + (self.coeffs.len() as i64) <= eff {
            Self::zero(alg)
        } else {
            Self::zero_to_precision(alg, eff)
        };
        // powers of g (and g^{-1} for the negative exponents)
        let g_inv = if self.val < 0 {
            Some(g.invert(eff - self.val + 1)?)
        } else {
            None
        };
        let mut m = self.val;
        let mut gpow = if m >= 0 {
            let mut t = Self::one(alg);
            for _ in 0..m {
                t = t.mul(g)?.reduce_upper(eff);
            }
            t
        } else {
            // no intermediate truncation here: every multiplication by
            // g^{-1} lowers the window, so truncating early would starve
            // the final precision
            let gi = g_inv.as_ref().unwrap();
            let mut t = Self::one(alg);
            for _ in 0..(-m) {
                t = t.mul(gi)?;
            }
            t.reduce_upper(eff)
        };
        let hi = self.val + self.coeffs.len() as i64;
        while m < hi && m < eff {
            let c = &self.coeffs[(m - self.val) as usize];
            if !alg.is_zero(c) {
                acc = acc.add(&gpow.scale(c))?;
            }
            m += 1;
            if m < hi && m < eff {
                gpow = gpow.mul(g)?.reduce_upper(eff);
            }
        }
        Ok(acc.reduce_upper(eff))
    }

    /// Do two series agree on every exponent in [lo, hi)? Errors if either
    /// is undetermined somewhere in the range.
    pub fn eq_on(&self, other: &Self, lo: i64, hi: i64) -> Result<bool> {
        for e in lo..hi {
            let a = self.known_coeff(e, "window comparison")?;
            let b = other.known_coeff(e, "window comparison")?;
            if a != b {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// First exponent in [lo, hi) where the two differ, if any.
    pub fn first_difference(&self, other: &Self, lo: i64, hi: i64) -> Result<Option<i64>> {
        for e in lo..hi {
            let a = self.known_coeff(e, "window comparison")?;
            let b = other.known_coeff(e, "window comparison")?;
            if a != b {
                return Ok(Some(e));
            }
        }
        Ok(None)
    }
}

/// One of the semilinear ring endomorphisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingAction {
    Phi,
    Gamma,
    /// The inverse of gamma (exponent (1+p)^{-1}).
    GammaInv,
    /// delta^j for the fixed generator delta of the torsion subgroup.
    DeltaPow(u32),
}

/// Evaluation context for the actions: the prime, the cyclotomic convention
/// chi(gamma) = 1 + p, and the fixed generator of the torsion subgroup
/// (smallest primitive root mod p).
#[derive(Debug, Clone)]
pub struct ActionCtx {
    pub p: u64,
    pub delta_generator: u64,
}

impl ActionCtx {
    pub fn new(p: u64) -> Result<Self> {
        fp::check_odd_prime(p)?;
        Ok(ActionCtx {
            p,
            delta_generator: fp::primitive_root(p),
        })
    }

    /// Value of the mod-p cyclotomic character on delta^j: the residue of
    /// the Teichmuller exponent, i.e. delta_generator^j mod p.
    pub fn delta_char_residue(&self, j: u32) -> u64 {
        fp::pow_mod(self.delta_generator, j as u64, self.p)
    }

    /// Base-p digits (length `k`) of the exponent c for the action:
    /// chi(gamma) = 1+p for Gamma, the Teichmuller lift of the generator's
    /// j-th power for DeltaPow(j).
    fn exponent_digits(&self, action: RingAction, k: u32) -> Result<Vec<u64>> {
        match action {
            RingAction::Phi => unreachable!("phi has no exponent series"),
            RingAction::Gamma => {
                let mut d = vec![0u64; k as usize];
                if k >= 1 {
                    d[0] = 1;
                }
                if k >= 2 {
                    d[1] = 1;
                }
                Ok(d)
            }
            RingAction::GammaInv => {
                let kk = k.min(fp::max_word_precision(self.p));
                let c = fp::inv_mod_pk(1 + self.p, self.p, kk);
                Ok(fp::digits(c, self.p, kk))
            }
            RingAction::DeltaPow(j) => {
                let a = fp::pow_mod(self.delta_generator, j as u64, self.p);
                let kk = k.min(fp::max_word_precision(self.p));
                let t = fp::teichmuller(a, self.p, kk)?;
                Ok(fp::digits(t, self.p, kk))
            }
        }
    }

    /// The series sigma(T') = (1+T')^c - 1 mod p on the window [1, n),
    /// where c is the character exponent of the action.
    pub fn image_of_t(
        &self,
        algebra: &Arc<CoefficientAlgebra>,
        action: RingAction,
        n: i64,
    ) -> Result<LaurentSeries> {
        debug_assert_eq!(algebra.p, self.p);
        if n <= 1 {
            return Ok(LaurentSeries::zero_to_precision(algebra, n.max(1)));
        }
        // Lucas digits: binom(c, m) mod p needs the base-p digits of c up
        // to the digits of m only.
        let digits_needed = {
            let mut d = 1u32;
            let mut q = self.p;
            while (q as i64) <= n {
                q *= self.p;
                d += 1;
            }
            d + 1
        };
        let cd = self.exponent_digits(action, digits_needed)?;
        let mut coeffs = Vec::with_capacity((n - 1) as usize);
        for m in 1..n {
            let b = fp::binomial_mod_p_digits(&cd, m as u64, self.p);
            coeffs.push(algebra.from_scalar(b));
        }
        LaurentSeries::from_coeffs(algebra, 1, coeffs, false)
    }

    /// Applies the action to a series. Phi is the exact substitution
    /// T' -> T'^p (exponent reindexing); gamma and delta substitute their
    /// image series, generated wide enough for the requested precision.
    pub fn apply(
        &self,
        f: &LaurentSeries,
        action: RingAction,
        out_prec: i64,
    ) -> Result<LaurentSeries> {
        match action {
            RingAction::Phi => Ok(self.apply_phi(f)),
            RingAction::DeltaPow(j) if j % (self.p as u32 - 1) == 0 => {
                Ok(f.reduce_if_needed(out_prec))
            }
            _ => {
                if f.is_zero() {
                    return Ok(f.clone());
                }
                let g_width = out_prec - f.window_start() + 1;
                let g = self.image_of_t(f.algebra(), action, g_width.max(2) + 1)?;
                f.substitute(&g, out_prec)
            }
        }
    }

    /// phi as exact reindexing e -> p*e.
    pub fn apply_phi(&self, f: &LaurentSeries) -> LaurentSeries {
        let alg = f.algebra();
        if f.is_zero() {
            return f.clone();
        }
        let p = self.p as i64;
        let len = f.coeffs.len();
        let out_len = if len == 0 { 0 } else { (len - 1) * p as usize + 1 };
        let mut coeffs = vec![alg.zero(); out_len];
        for (i, c) in f.coeffs.iter().enumerate() {
            coeffs[i * p as usize] = c.clone();
        }
        LaurentSeries {
            algebra: alg.clone(),
            val: f.val * p,
            coeffs,
            exact: f.exact,
        }
        .normalized()
    }

    /// The A-linear left inverse of phi:
    /// psi(T'^(pj+r)) = (-1)^r T'^j for 0 <= r < p.
    pub fn psi(&self, f: &LaurentSeries) -> LaurentSeries {
        let alg = f.algebra().clone();
        if f.is_zero() {
            return f.clone();
        }
        let p = self.p as i64;
        let out_val = div_floor(f.val, p);
        let out_hi = match f.precision() {
            None => div_floor(f.val + f.coeffs.len() as i64 - 1, p) + 1,
            Some(nf) => div_floor(nf, p),
        };
        let len = (out_hi - out_val).max(0) as usize;
        let mut coeffs = vec![alg.zero(); len];
        for (i, c) in f.coeffs.iter().enumerate() {
            if alg.is_zero(c) {
                continue;
            }
            let m = f.val + i as i64;
            let j = div_floor(m, p);
            if j < out_val || j >= out_hi {
                continue;
            }
            let r = (m - p * j) as u64;
            let signed = if r % 2 == 0 { c.clone() } else { alg.neg(c) };
            let idx = (j - out_val) as usize;
            coeffs[idx] = alg.add(&coeffs[idx], &signed);
        }
        LaurentSeries {
            algebra: alg,
            val: out_val,
            coeffs,
            exact: f.exact,
        }
        .normalized()
    }
}

impl LaurentSeries {
    fn reduce_if_needed(&self, out_prec: i64) -> LaurentSeries {
        match self.precision() {
            None => self.clone(),
            Some(n) if n <= out_prec => self.clone(),
            _ => self.reduce_upper(out_prec),
        }
    }
}
