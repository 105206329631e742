//! Etale (phi, Gamma)-modules with explicit torsion action.
//!
//! A module of rank d is given by three d x d matrices over A((T')): Phi,
//! Gamma and Delta, the matrices of the semilinear actions on the standard
//! basis. Coordinates are columns and sigma(m) has coordinates
//! (sigma-matrix) * (entrywise sigma of the coordinates); all commutation
//! identities are stated in this convention.
//!
//! Validation checks, in order: integrality of Gamma and Delta (the
//! standard lattice must be stable under both, which is what makes the
//! truncated quotient complexes of the cohomology engine well defined),
//! invertibility of Phi over A((T')) (etale), the three commutation
//! identities, the order-(p-1) twisted cocycle condition on Delta, and
//! topological nilpotence of gamma - 1 tested on the lattice mod T'.

use crate::coeffs::{AElem, CoefficientAlgebra};
use crate::error::{Error, Result};
use crate::fplinalg::FpMat;
use crate::laurent::{div_ceil, ActionCtx, Coeff, LaurentSeries, RingAction};
use std::sync::Arc;

/// Working-precision configuration. Window widths are in T'-exponents;
/// stabilization loops double them up to `max_enlargements` times.
#[derive(Debug, Clone, Copy)]
pub struct Config {
    pub width: i64,
    pub max_enlargements: u32,
    pub continuity_bound: u32,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            width: 48,
            max_enlargements: 16,
            continuity_bound: 64,
        }
    }
}

/// A matrix of Laurent series (row major).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMat {
    pub algebra: Arc<CoefficientAlgebra>,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<LaurentSeries>,
}

impl SeriesMat {
    pub fn zeros(algebra: &Arc<CoefficientAlgebra>, rows: usize, cols: usize) -> Self {
        SeriesMat {
            algebra: algebra.clone(),
            rows,
            cols,
            entries: vec![LaurentSeries::zero(algebra); rows * cols],
        }
    }

    pub fn identity(algebra: &Arc<CoefficientAlgebra>, n: usize) -> Self {
        let mut m = Self::zeros(algebra, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = LaurentSeries::one(algebra);
        }
        m
    }

    pub fn scalar(algebra: &Arc<CoefficientAlgebra>, n: usize, c: &AElem) -> Self {
        let mut m = Self::zeros(algebra, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = LaurentSeries::constant(algebra, c.clone());
        }
        m
    }

    pub fn from_entries(
        algebra: &Arc<CoefficientAlgebra>,
        rows: usize,
        cols: usize,
        entries: Vec<LaurentSeries>,
    ) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::MalformedInput("matrix entry count".to_string()));
        }
        Ok(SeriesMat {
            algebra: algebra.clone(),
            rows,
            cols,
            entries,
        })
    }

    pub fn at(&self, i: usize, j: usize) -> &LaurentSeries {
        &self.entries[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut LaurentSeries {
        &mut self.entries[i * self.cols + j]
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(&self.algebra, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zeros(&self.algebra, self.rows, self.cols);
        for i in 0..self.rows * self.cols {
            out.entries[i] = self.entries[i].add(&other.entries[i])?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zeros(&self.algebra, self.rows, self.cols);
        for i in 0..self.rows * self.cols {
            out.entries[i] = self.entries[i].sub(&other.entries[i])?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        SeriesMat {
            algebra: self.algebra.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.neg()).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(&self.algebra, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = LaurentSeries::zero(&self.algebra);
                for k in 0..self.cols {
                    let a = self.at(i, k);
                    let b = other.at(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b)?)?;
                }
                *out.at_mut(i, j) = acc;
            }
        }
        Ok(out)
    }

    pub fn scale_elem(&self, c: &AElem) -> Self {
        SeriesMat {
            algebra: self.algebra.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }

    pub fn apply_to_vec(&self, v: &[LaurentSeries]) -> Result<Vec<LaurentSeries>> {
        debug_assert_eq!(v.len(), self.cols);
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = LaurentSeries::zero(&self.algebra);
            for (k, x) in v.iter().enumerate() {
                let a = self.at(i, k);
                if a.is_zero() || x.is_zero() {
                    continue;
                }
                acc = acc.add(&a.mul(x)?)?;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Entrywise ring action at the requested output precision.
    pub fn apply_ring_action(
        &self,
        ctx: &ActionCtx,
        action: RingAction,
        out_prec: i64,
    ) -> Result<Self> {
        let mut out = Self::zeros(&self.algebra, self.rows, self.cols);
        for (o, e) in out.entries.iter_mut().zip(&self.entries) {
            *o = ctx.apply(e, action, out_prec)?;
        }
        Ok(out)
    }

    /// Kronecker product; index (i, j) of the factors maps to i*d2 + j.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zeros(
            &self.algebra,
            self.rows * other.rows,
            self.cols * other.cols,
        );
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self.at(i1, j1);
                if a.is_zero() {
                    continue;
                }
                for i2 in 0..other.rows {
                    for j2 in 0..other.cols {
                        let b = other.at(i2, j2);
                        if b.is_zero() {
                            continue;
                        }
                        *out.at_mut(i1 * other.rows + i2, j1 * other.cols + j2) = a.mul(b)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Gauss-Jordan inverse over A((T')), with pivots chosen at the entry
    /// whose first unit coefficient sits at the smallest exponent.
    /// Fails with NotEtale when no unit pivot exists.
    pub fn inverse(&self, width: i64) -> Result<Self> {
        debug_assert_eq!(self.rows, self.cols);
        let alg = &self.algebra;
        let n = self.rows;
        let mut work = self.clone();
        let mut inv = Self::identity(alg, n);
        for col in 0..n {
            // pick the pivot row: smallest exponent of a visible unit coeff
            let mut best: Option<(usize, i64)> = None;
            for row in col..n {
                if let Some(uv) = unit_valuation(work.at(row, col)) {
                    if best.is_none() || uv < best.unwrap().1 {
                        best = Some((row, uv));
                    }
                }
            }
            let Some((prow, _)) = best else {
                // no unit visible anywhere in this column
                let all_exact = (col..n).all(|r| work.at(r, col).is_exact());
                return Err(if all_exact {
                    Error::NotEtale
                } else {
                    Error::InsufficientPrecision {
                        context: "matrix inversion pivot",
                        need: 0,
                        have: 0,
                    }
                });
            };
            if prow != col {
                for j in 0..n {
                    work.entries.swap(col * n + j, prow * n + j);
                    inv.entries.swap(col * n + j, prow * n + j);
                }
            }
            let pivot_inv = work.at(col, col).invert(width)?;
            for j in 0..n {
                *work.at_mut(col, j) = work.at(col, j).mul(&pivot_inv)?;
                *inv.at_mut(col, j) = inv.at(col, j).mul(&pivot_inv)?;
            }
            for row in 0..n {
                if row == col || work.at(row, col).is_zero() {
                    continue;
                }
                let factor = work.at(row, col).clone();
                for j in 0..n {
                    let tw = factor.mul(work.at(col, j))?;
                    *work.at_mut(row, j) = work.at(row, j).sub(&tw)?;
                    let ti = factor.mul(inv.at(col, j))?;
                    *inv.at_mut(row, j) = inv.at(row, j).sub(&ti)?;
                }
            }
        }
        Ok(inv)
    }

    /// Minimal visible valuation over all entries (None if every entry is
    /// zero on its window).
    pub fn min_valuation(&self) -> Option<i64> {
        self.entries.iter().filter_map(|e| e.valuation()).min()
    }

    /// First exponent where the two matrices differ on [lo, hi), if any.
    pub fn first_difference(&self, other: &Self, lo: i64, hi: i64) -> Result<Option<i64>> {
        for (a, b) in self.entries.iter().zip(&other.entries) {
            if let Some(e) = a.first_difference(b, lo, hi)? {
                return Ok(Some(e));
            }
        }
        Ok(None)
    }

    /// Largest lower bound and smallest upper bound over which every entry
    /// is determined: [max(window starts they need), min(precisions)).
    /// Entries that are exact impose no upper limit.
    pub fn common_precision(&self) -> i64 {
        self.entries
            .iter()
            .filter_map(|e| e.precision())
            .min()
            .unwrap_or(i64::MAX)
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut out = Self::zeros(&self.algebra, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                *out.at_mut(i, j) = self.at(r0 + i, c0 + j).clone();
            }
        }
        out
    }

    /// Assembles [[a, b], [0, d]].
    pub fn block_upper(a: &Self, b: &Self, d: &Self) -> Result<Self> {
        let alg = &a.algebra;
        let n1 = a.rows;
        let n2 = d.rows;
        if b.rows != n1 || b.cols != n2 {
            return Err(Error::MalformedInput("block shapes".to_string()));
        }
        let mut out = Self::zeros(alg, n1 + n2, n1 + n2);
        for i in 0..n1 {
            for j in 0..n1 {
                *out.at_mut(i, j) = a.at(i, j).clone();
            }
            for j in 0..n2 {
                *out.at_mut(i, n1 + j) = b.at(i, j).clone();
            }
        }
        for i in 0..n2 {
            for j in 0..n2 {
                *out.at_mut(n1 + i, n1 + j) = d.at(i, j).clone();
            }
        }
        Ok(out)
    }
}

/// Exponent of the first visible unit coefficient of a series.
fn unit_valuation(f: &LaurentSeries) -> Option<i64> {
    let lo = f.window_start();
    let hi = f.window_end();
    for e in lo..hi {
        if let Coeff::Known(c) = f.coeff_at(e) {
            if f.algebra().is_unit(&c) {
                return Some(e);
            }
        }
    }
    None
}

/// Continuity witness: (gamma^{p^s} - 1)^n maps the standard lattice into
/// T' times the lattice. The test works mod T', where it is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContinuityWitness {
    pub n: u32,
    pub s: u32,
}

/// Lattice bookkeeping produced by validation.
///
/// `shift` is the exponent m such that T'^{-m} times the standard lattice
/// is (psi, gamma, delta)-stable; `phi_shift` is the exponent k such that
/// T'^{+k} times the standard lattice is phi-stable. `height_bound` is the
/// height h (minimal t with T'^t Phi^{-1} integral), `m0` the kernel
/// valuation bound ceil(h/(p-1)) + 1, and `lemma_h` the constant in the
/// psi-contraction inclusions for the phi-stable lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    pub shift: i64,
    pub phi_stable: bool,
    pub psi_stable: bool,
    pub height_bound: i64,
    pub m0: i64,
    pub phi_shift: i64,
    pub lemma_h: i64,
}

/// Parameters of a rank-1 module: phi-, gamma- and delta-eigenvalues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterParams {
    pub a_phi: AElem,
    pub c_gamma: AElem,
    pub c_delta: AElem,
}

#[derive(Debug, Clone)]
pub struct PhiGammaModule {
    pub algebra: Arc<CoefficientAlgebra>,
    pub ctx: ActionCtx,
    pub rank: usize,
    pub phi: SeriesMat,
    pub gamma: SeriesMat,
    pub delta: SeriesMat,
    /// Cached Phi^{-1} at validation width.
    pub phi_inv: SeriesMat,
    /// Height h: minimal t >= 0 such that T'^t Phi^{-1} is integral.
    pub height: i64,
    /// Minimal t >= 0 such that T'^t Phi is integral.
    pub height_plus: i64,
    pub continuity: ContinuityWitness,
    pub config: Config,
}

impl PhiGammaModule {
    /// Validates a matrix triple and assembles the module.
    pub fn validate(
        algebra: &Arc<CoefficientAlgebra>,
        phi: SeriesMat,
        gamma: SeriesMat,
        delta: SeriesMat,
        config: Config,
    ) -> Result<Self> {
        let ctx = ActionCtx::new(algebra.p)?;
        let rank = phi.rows;
        for m in [&phi, &gamma, &delta] {
            if m.rows != rank || m.cols != rank {
                return Err(Error::MalformedInput("matrices must be square of equal rank".into()));
            }
        }
        if rank == 0 {
            return Err(Error::MalformedInput("rank must be positive".into()));
        }
        check_integral(&gamma, "gamma")?;
        check_integral(&delta, "delta")?;

        // etale + heights
        let phi_inv = phi.inverse(config.width)?;
        let height_plus = (-phi.min_valuation().unwrap_or(0)).max(0);
        let height = (-phi_inv.min_valuation().unwrap_or(0)).max(0);

        let m = PhiGammaModule {
            algebra: algebra.clone(),
            ctx,
            rank,
            phi,
            gamma,
            delta,
            phi_inv,
            height,
            height_plus,
            continuity: ContinuityWitness { n: 0, s: 0 },
            config,
        };
        m.check_commutation(config.width)?;
        m.check_delta_order(config.width)?;
        let continuity = m.check_continuity()?;
        Ok(PhiGammaModule { continuity, ..m })
    }

    fn check_commutation(&self, width: i64) -> Result<()> {
        let ctx = &self.ctx;
        let prec = width;
        // Phi phi(Gamma) = Gamma gamma(Phi)
        let lhs = self.phi.mul(&self.gamma.apply_ring_action(ctx, RingAction::Phi, prec)?)?;
        let rhs = self
            .gamma
            .mul(&self.phi.apply_ring_action(ctx, RingAction::Gamma, prec)?)?;
        compare_identity(&lhs, &rhs, "Phi*phi(Gamma) = Gamma*gamma(Phi)")?;
        // Phi phi(Delta) = Delta delta(Phi)
        let lhs = self.phi.mul(&self.delta.apply_ring_action(ctx, RingAction::Phi, prec)?)?;
        let rhs = self
            .delta
            .mul(&self.phi.apply_ring_action(ctx, RingAction::DeltaPow(1), prec)?)?;
        compare_identity(&lhs, &rhs, "Phi*phi(Delta) = Delta*delta(Phi)")?;
        // Gamma gamma(Delta) = Delta delta(Gamma)
        let lhs = self
            .gamma
            .mul(&self.delta.apply_ring_action(ctx, RingAction::Gamma, prec)?)?;
        let rhs = self
            .delta
            .mul(&self.gamma.apply_ring_action(ctx, RingAction::DeltaPow(1), prec)?)?;
        compare_identity(&lhs, &rhs, "Gamma*gamma(Delta) = Delta*delta(Gamma)")?;
        Ok(())
    }

    fn check_delta_order(&self, width: i64) -> Result<()> {
        let p = self.algebra.p;
        let mut acc = self.delta.clone();
        let mut twisted = self.delta.clone();
        for _ in 1..(p - 1) {
            twisted = twisted.apply_ring_action(&self.ctx, RingAction::DeltaPow(1), width)?;
            acc = acc.mul(&twisted)?;
        }
        let id = SeriesMat::identity(&self.algebra, self.rank);
        match compare_identity(&acc, &id, "delta order") {
            Ok(()) => Ok(()),
            Err(Error::CommutationFailure { .. }) => Err(Error::DeltaOrderFailure),
            Err(e) => Err(e),
        }
    }

    /// Topological nilpotence of gamma - 1, tested on the lattice mod T'.
    /// With mod-p coefficients (gamma^{p^s} - 1) = (gamma - 1)^{p^s} as
    /// operators, so nilpotence mod T' of the s = 0 operator decides the
    /// criterion; the witness reports the nilpotency index.
    pub fn check_continuity(&self) -> Result<ContinuityWitness> {
        let fbar = self.gamma_minus_one_mod_t();
        let dim = fbar.rows;
        let bound = self.config.continuity_bound.min(dim as u32 + 1);
        let mut power = FpMat::identity(self.algebra.p, dim);
        for n in 1..=bound {
            power = power.mul(&fbar);
            if power_is_zero(&power) {
                return Ok(ContinuityWitness { n, s: 0 });
            }
        }
        if bound as usize > dim {
            // nilpotency index of a dim-dimensional operator is <= dim
            Err(Error::NotContinuous)
        } else {
            Err(Error::BoundExceeded {
                bound: self.config.continuity_bound,
            })
        }
    }

    /// The F_p-matrix of gamma - 1 on Lambda/T'Lambda: gamma acts there by
    /// the constant term of Gamma, and the ring action is trivial.
    fn gamma_minus_one_mod_t(&self) -> FpMat {
        let alg = &self.algebra;
        let r = alg.basis_dim;
        let d = self.rank;
        let p = alg.p;
        let mut out = FpMat::zeros(p, d * r, d * r);
        for i in 0..d {
            for j in 0..d {
                let c0 = match self.gamma.at(i, j).coeff_at(0) {
                    Coeff::Known(c) => c,
                    Coeff::Unknown => alg.zero(),
                };
                // regular representation block of c0, minus identity on the diagonal
                for k in 0..r {
                    let col = alg.mul(&c0, &alg.basis_elem(k));
                    for l in 0..r {
                        let mut v = col[l];
                        if i == j && k == l {
                            v = crate::fp::sub_mod(v, 1, p);
                        }
                        out.set(i * r + l, j * r + k, v);
                    }
                }
            }
        }
        out
    }

    /// Lattice data: shifts, the height bound, the kernel valuation bound
    /// m0 = ceil(h/(p-1)) + 1 and the psi-contraction constant.
    pub fn stabilize_lattice(&self) -> LatticeSpec {
        let p = self.algebra.p as i64;
        let k_minus = div_ceil(self.height, p - 1).max(0);
        let k_plus = div_ceil(self.height_plus, p - 1).max(0);
        LatticeSpec {
            shift: k_minus,
            phi_stable: k_minus == 0 && self.height_plus == 0,
            psi_stable: true,
            height_bound: self.height,
            m0: div_ceil(self.height, p - 1) + 1,
            phi_shift: k_plus,
            lemma_h: (p - 1) * k_plus + self.height,
        }
    }

    /// Truncation level above which (1 - phi) contracts: phi strictly
    /// raises valuations on T'^n Lambda for n >= n1.
    pub fn contraction_level(&self) -> i64 {
        div_ceil(self.height_plus + 1, self.algebra.p as i64 - 1).max(1)
    }

    // --- semilinear actions on coordinate vectors ---

    pub fn act_phi(&self, v: &[LaurentSeries]) -> Result<Vec<LaurentSeries>> {
        let moved: Vec<LaurentSeries> = v.iter().map(|x| self.ctx.apply_phi(x)).collect();
        self.phi.apply_to_vec(&moved)
    }

    pub fn act_gamma(&self, v: &[LaurentSeries], out_prec: i64) -> Result<Vec<LaurentSeries>> {
        let moved: Vec<LaurentSeries> = v
            .iter()
            .map(|x| self.ctx.apply(x, RingAction::Gamma, out_prec))
            .collect::<Result<_>>()?;
        self.gamma.apply_to_vec(&moved)
    }

    pub fn act_delta(&self, v: &[LaurentSeries], out_prec: i64) -> Result<Vec<LaurentSeries>> {
        let moved: Vec<LaurentSeries> = v
            .iter()
            .map(|x| self.ctx.apply(x, RingAction::DeltaPow(1), out_prec))
            .collect::<Result<_>>()?;
        self.delta.apply_to_vec(&moved)
    }

    /// psi on the module: (psi x 1) after Phi^{-1}, so that
    /// psi(phi(a) m) = a psi(m) and psi(a phi(m)) = psi(a) m.
    pub fn act_psi(&self, v: &[LaurentSeries]) -> Result<Vec<LaurentSeries>> {
        let pulled = self.phi_inv.apply_to_vec(v)?;
        Ok(pulled.iter().map(|x| self.ctx.psi(x)).collect())
    }

    /// The projector onto the delta-invariants: -(delta^0 + ... + delta^{p-2}).
    pub fn e_delta(&self, v: &[LaurentSeries], out_prec: i64) -> Result<Vec<LaurentSeries>> {
        let alg = &self.algebra;
        let mut acc = v.to_vec();
        let mut cur = v.to_vec();
        for _ in 1..(self.algebra.p - 1) {
            cur = self.act_delta(&cur, out_prec)?;
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a = a.add(c)?;
            }
        }
        let minus_one = alg.neg(&alg.one());
        Ok(acc.iter().map(|x| x.scale(&minus_one)).collect())
    }

    // --- constructors ---

    /// Rank-1 module with scalar matrices.
    pub fn character(
        algebra: &Arc<CoefficientAlgebra>,
        params: &CharacterParams,
        config: Config,
    ) -> Result<Self> {
        for c in [&params.a_phi, &params.c_gamma, &params.c_delta] {
            if !algebra.is_unit(c) {
                return Err(Error::NonUnit);
            }
        }
        if algebra.pow(&params.c_delta, algebra.p - 1) != algebra.one() {
            return Err(Error::NonUnit);
        }
        let phi = SeriesMat::scalar(algebra, 1, &params.a_phi);
        let gamma = SeriesMat::scalar(algebra, 1, &params.c_gamma);
        let delta = SeriesMat::scalar(algebra, 1, &params.c_delta);
        Self::validate(algebra, phi, gamma, delta, config)
    }

    pub fn trivial(algebra: &Arc<CoefficientAlgebra>, config: Config) -> Result<Self> {
        let params = CharacterParams {
            a_phi: algebra.one(),
            c_gamma: algebra.one(),
            c_delta: algebra.one(),
        };
        Self::character(algebra, &params, config)
    }

    /// Unramified twist: phi(v) = a v, gamma and delta act trivially.
    pub fn unramified(
        algebra: &Arc<CoefficientAlgebra>,
        a: &AElem,
        config: Config,
    ) -> Result<Self> {
        let params = CharacterParams {
            a_phi: a.clone(),
            c_gamma: algebra.one(),
            c_delta: algebra.one(),
        };
        Self::character(algebra, &params, config)
    }

    /// The Tate twist A(1): phi fixes a generator; with chi(gamma) = 1+p
    /// the gamma-eigenvalue reduces to 1 mod p and the twist is carried by
    /// delta, which acts by the residue of the Teichmuller character.
    pub fn tate_module(algebra: &Arc<CoefficientAlgebra>, config: Config) -> Result<Self> {
        let ctx = ActionCtx::new(algebra.p)?;
        let params = CharacterParams {
            a_phi: algebra.one(),
            c_gamma: algebra.one(),
            c_delta: algebra.from_scalar(ctx.delta_char_residue(1)),
        };
        Self::character(algebra, &params, config)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let phi = self.phi.kron(&other.phi)?;
        let gamma = self.gamma.kron(&other.gamma)?;
        let delta = self.delta.kron(&other.delta)?;
        Self::validate(&self.algebra, phi, gamma, delta, self.config)
    }

    /// Dual module: all three matrices are replaced by their inverse
    /// transposes.
    pub fn dual(&self) -> Result<Self> {
        let w = self.config.width;
        let phi = self.phi.inverse(w)?.transpose();
        let gamma = self.gamma.inverse(w)?.transpose();
        let delta = self.delta.inverse(w)?.transpose();
        Self::validate(&self.algebra, phi, gamma, delta, self.config)
    }

    /// Tate twist by n: multiplies Delta by the n-th power of the residue
    /// of the Teichmuller character (the gamma-eigenvalue 1+p is 1 mod p).
    pub fn tate_twist(&self, n: i64) -> Result<Self> {
        let alg = &self.algebra;
        let p1 = (alg.p - 1) as i64;
        let e = n.rem_euclid(p1) as u32;
        let scalar = alg.from_scalar(self.ctx.delta_char_residue(e));
        let delta = self.delta.scale_elem(&scalar);
        Self::validate(alg, self.phi.clone(), self.gamma.clone(), delta, self.config)
    }

    pub fn cartier_dual(&self) -> Result<Self> {
        self.dual()?.tate_twist(1)
    }

    /// The adjoint: dual tensor self. With the Kronecker ordering used
    /// here, a matrix f acting on self corresponds to the coordinate
    /// vector vec(f) with index (i, j) -> i * rank + j (row-major), and the
    /// adjoint action is f -> Phi phi(f) Phi^{-1}.
    pub fn adjoint(&self) -> Result<Self> {
        self.dual()?.tensor(self)
    }

    /// Extension of `quot` by `sub` along a degree-1 cocycle (f, g) with
    /// values in Hom(quot, sub): block matrices
    /// [[Phi_sub, Phi_sub f], [0, Phi_quot]] and
    /// [[Gamma_sub, Gamma_sub g], [0, Gamma_quot]], with Delta block
    /// diagonal. The pair is first projected to the delta-invariants and
    /// the cocycle identity (gamma - 1) f = (phi - 1) g is checked there.
    ///
    /// Classes can have gamma-components of negative valuation; the
    /// standard-lattice stability convention is restored by rescaling the
    /// sub-block basis by T'^w for w = min(0, val(Gamma_sub g)), an
    /// isomorphic presentation whose sub-block carries a monomial twist.
    pub fn extension_from_cocycle(
        quot: &Self,
        sub: &Self,
        f: &SeriesMat,
        g: &SeriesMat,
    ) -> Result<Self> {
        let alg = &quot.algebra;
        let ctx = &quot.ctx;
        let hom = HomContext::new(quot, sub)?;
        let f = hom.project_delta(f)?;
        let g = hom.project_delta(g)?;
        hom.check_cocycle(&f, &g)?;
        // the splitting defect of phi is the semilinear map phi_sub o
        // phi_P^{-1}(f), whose matrix is f Phi_quot; likewise for gamma
        let f_block = f.mul(&quot.phi)?;
        let g_block = g.mul(&quot.gamma)?;
        let w = g_block.min_valuation().unwrap_or(0).min(0);
        let (phi_s, gamma_s, delta_s, f_block, g_block) = if w < 0 {
            // conjugate by diag(T'^w Id_sub, Id_quot)
            let prec = quot.config.width + (p_i64(alg) - 1) * (-w);
            let tw = LaurentSeries::monomial(alg, alg.one(), w);
            let phi_ratio = LaurentSeries::monomial(alg, alg.one(), (p_i64(alg) - 1) * w);
            let gamma_ratio = ctx
                .apply(&tw, RingAction::Gamma, prec)?
                .shift(-w); // gamma(T'^w) / T'^w
            let delta_ratio = ctx
                .apply(&tw, RingAction::DeltaPow(1), prec)?
                .shift(-w);
            let scale_mat = |m: &SeriesMat, ratio: &LaurentSeries| -> Result<SeriesMat> {
                let entries = m
                    .entries
                    .iter()
                    .map(|e| e.mul(ratio))
                    .collect::<Result<Vec<_>>>()?;
                SeriesMat::from_entries(alg, m.rows, m.cols, entries)
            };
            let shift_mat = |m: &SeriesMat, k: i64| -> SeriesMat {
                let entries = m.entries.iter().map(|e| e.shift(k)).collect();
                SeriesMat::from_entries(alg, m.rows, m.cols, entries).expect("shape")
            };
            (
                scale_mat(&sub.phi, &phi_ratio)?,
                scale_mat(&sub.gamma, &gamma_ratio)?,
                scale_mat(&sub.delta, &delta_ratio)?,
                shift_mat(&f_block, -w),
                shift_mat(&g_block, -w),
            )
        } else {
            (
                sub.phi.clone(),
                sub.gamma.clone(),
                sub.delta.clone(),
                f_block,
                g_block,
            )
        };
        let phi = SeriesMat::block_upper(&phi_s, &f_block, &quot.phi)?;
        let gamma = SeriesMat::block_upper(&gamma_s, &g_block, &quot.gamma)?;
        let zero = SeriesMat::zeros(alg, sub.rank, quot.rank);
        let delta = SeriesMat::block_upper(&delta_s, &zero, &quot.delta)?;
        Self::validate(alg, phi, gamma, delta, quot.config)
    }

    /// Rank-1 module with Phi = T'^((p-1)k) and the canonical commuting
    /// gamma and delta matrices.
    ///
    /// The commutation identities force the companion g of a monomial
    /// Phi = T'^m to solve phi(g) = (gamma(T'^m)/T'^m) g, whose infinite
    /// product solution converges exactly when the ratio is 1 mod T'; for
    /// delta the constant term of the ratio is the residue of the
    /// Teichmuller character to the m-th power, so (p-1) | m is required
    /// (no module with other det-valuations exists).
    pub fn monomial_module(
        algebra: &Arc<CoefficientAlgebra>,
        k: i64,
        config: Config,
    ) -> Result<Self> {
        let ctx = ActionCtx::new(algebra.p)?;
        let m = (algebra.p as i64 - 1) * k;
        let width = config.width;
        let phi_series = LaurentSeries::monomial(algebra, algebra.one(), m);
        let companion = |action: RingAction| -> Result<LaurentSeries> {
            // u = sigma(T'^m) / T'^m, a unit congruent to 1 mod T'
            let sigma_tm = ctx.apply(&phi_series, action, m + width + 1)?;
            let u = sigma_tm.shift(-m);
            let u_inv = u.invert(width)?;
            // g = prod_{j >= 0} phi^j(u)^{-1}; phi^j(u^{-1}) = 1 mod T'^(p^j),
            // so only finitely many factors touch the window
            let mut g = LaurentSeries::one(algebra);
            let mut term = u_inv;
            let mut reach = 1i64;
            while reach < width {
                g = g.mul(&term)?.reduce_upper(width);
                term = ctx.apply_phi(&term);
                reach *= algebra.p as i64;
            }
            Ok(g)
        };
        let gamma = companion(RingAction::Gamma)?;
        let delta = companion(RingAction::DeltaPow(1))?;
        let phi = SeriesMat::from_entries(algebra, 1, 1, vec![phi_series])?;
        let gamma = SeriesMat::from_entries(algebra, 1, 1, vec![gamma])?;
        let delta = SeriesMat::from_entries(algebra, 1, 1, vec![delta])?;
        Self::validate(algebra, phi, gamma, delta, config)
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        let zero_fg = SeriesMat::zeros(&self.algebra, self.rank, other.rank);
        let phi = SeriesMat::block_upper(&self.phi, &zero_fg, &other.phi)?;
        let gamma = SeriesMat::block_upper(&self.gamma, &zero_fg, &other.gamma)?;
        let delta = SeriesMat::block_upper(&self.delta, &zero_fg, &other.delta)?;
        Self::validate(&self.algebra, phi, gamma, delta, self.config)
    }

    /// Scalar extension along the prime-subfield embedding A -> B given by
    /// `embed` on coefficients.
    pub fn base_change(
        &self,
        target: &Arc<CoefficientAlgebra>,
        embed: &dyn Fn(&AElem) -> AElem,
    ) -> Result<Self> {
        let conv = |m: &SeriesMat| -> Result<SeriesMat> {
            let entries = m
                .entries
                .iter()
                .map(|e| convert_series(e, target, embed))
                .collect::<Result<Vec<_>>>()?;
            SeriesMat::from_entries(target, m.rows, m.cols, entries)
        };
        Self::validate(
            target,
            conv(&self.phi)?,
            conv(&self.gamma)?,
            conv(&self.delta)?,
            self.config,
        )
    }

    /// Reduction mod the maximal ideal: the fibre module over the residue
    /// field, used for gradedwise reports over non-field coefficients.
    pub fn residue_fibre(&self) -> Result<(Arc<CoefficientAlgebra>, Self)> {
        let (field, proj) = residue_field(&self.algebra)?;
        let embed = |a: &AElem| proj(a);
        let conv = |m: &SeriesMat| -> Result<SeriesMat> {
            let entries = m
                .entries
                .iter()
                .map(|e| convert_series(e, &field, &embed))
                .collect::<Result<Vec<_>>>()?;
            SeriesMat::from_entries(&field, m.rows, m.cols, entries)
        };
        let module = Self::validate(
            &field,
            conv(&self.phi)?,
            conv(&self.gamma)?,
            conv(&self.delta)?,
            self.config,
        )?;
        Ok((field, module))
    }
}

/// Hom-shaped bookkeeping for extensions and extension classes: matrices
/// f in Hom(quot, sub) with the induced phi, gamma, delta actions
/// sigma(f) = S_sub sigma(f) S_quot^{-1}.
pub struct HomContext<'a> {
    pub quot: &'a PhiGammaModule,
    pub sub: &'a PhiGammaModule,
    quot_gamma_inv: SeriesMat,
    quot_delta_inv: SeriesMat,
    quot_phi_inv: SeriesMat,
}

impl<'a> HomContext<'a> {
    pub fn new(quot: &'a PhiGammaModule, sub: &'a PhiGammaModule) -> Result<Self> {
        let w = quot.config.width;
        Ok(HomContext {
            quot,
            sub,
            quot_gamma_inv: quot.gamma.inverse(w)?,
            quot_delta_inv: quot.delta.inverse(w)?,
            quot_phi_inv: quot.phi.inverse(w)?,
        })
    }

    pub fn width(&self) -> i64 {
        self.quot.config.width
    }

    /// sigma_P(f) = S_sub . sigma(f) . S_quot^{-1}: the standard module
    /// structure of dual(quot) tensor sub, matching the Kronecker matrices.
    pub fn apply_phi(&self, f: &SeriesMat) -> Result<SeriesMat> {
        let moved = f.apply_ring_action(&self.quot.ctx, RingAction::Phi, self.width())?;
        self.sub.phi.mul(&moved)?.mul(&self.quot_phi_inv)
    }

    pub fn apply_gamma(&self, f: &SeriesMat) -> Result<SeriesMat> {
        let moved = f.apply_ring_action(&self.quot.ctx, RingAction::Gamma, self.width())?;
        self.sub.gamma.mul(&moved)?.mul(&self.quot_gamma_inv)
    }

    pub fn apply_delta(&self, f: &SeriesMat) -> Result<SeriesMat> {
        let moved = f.apply_ring_action(&self.quot.ctx, RingAction::DeltaPow(1), self.width())?;
        self.sub.delta.mul(&moved)?.mul(&self.quot_delta_inv)
    }

    /// e_Delta = -(1 + delta + ... + delta^{p-2}) on Hom-shaped matrices.
    pub fn project_delta(&self, f: &SeriesMat) -> Result<SeriesMat> {
        let alg = &self.quot.algebra;
        let mut acc = f.clone();
        let mut cur = f.clone();
        for _ in 1..(alg.p - 1) {
            cur = self.apply_delta(&cur)?;
            acc = acc.add(&cur)?;
        }
        Ok(acc.scale_elem(&alg.neg(&alg.one())))
    }

    /// Degree-1 cocycle identity (gamma - 1) f = (phi - 1) g.
    pub fn check_cocycle(&self, f: &SeriesMat, g: &SeriesMat) -> Result<()> {
        let lhs = self.apply_gamma(f)?.sub(f)?;
        let rhs = self.apply_phi(g)?.sub(g)?;
        match compare_identity(&lhs, &rhs, "cocycle") {
            Ok(()) => Ok(()),
            Err(Error::CommutationFailure { exponent, .. }) => {
                Err(Error::NotACocycle { exponent })
            }
            Err(e) => Err(e),
        }
    }
}

fn p_i64(alg: &Arc<CoefficientAlgebra>) -> i64 {
    alg.p as i64
}

fn check_integral(m: &SeriesMat, action: &'static str) -> Result<()> {
    for e in &m.entries {
        match e.valuation() {
            Some(v) if v < 0 => return Err(Error::NonIntegralAction { action }),
            Some(_) => {}
            None => {
                if !e.is_exact() && e.window_start() < 0 {
                    return Err(Error::InsufficientPrecision {
                        context: "integrality check",
                        need: 0,
                        have: e.window_start(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Compares two matrices on the guaranteed overlap window, requiring a
/// nonempty overlap.
fn compare_identity(lhs: &SeriesMat, rhs: &SeriesMat, identity: &'static str) -> Result<()> {
    let lo = lhs
        .entries
        .iter()
        .chain(&rhs.entries)
        .map(|e| e.window_start())
        .min()
        .unwrap_or(0);
    let hi = lhs.common_precision().min(rhs.common_precision());
    let hi = if hi == i64::MAX {
        // all entries exact: compare across the union of supports
        lhs.entries
            .iter()
            .chain(&rhs.entries)
            .map(|e| e.window_end())
            .max()
            .unwrap_or(1)
            .max(lo + 1)
    } else {
        hi
    };
    // coefficients below a window start are known zero, so the comparable
    // range always extends down to the smallest start; what matters is
    // that the common precision leaves something meaningful to compare
    if hi < 1 {
        return Err(Error::InsufficientPrecision {
            context: identity,
            need: 1,
            have: hi,
        });
    }
    let lo = lo.min(hi - 1);
    if let Some(exponent) = lhs.first_difference(rhs, lo, hi)? {
        return Err(Error::CommutationFailure { identity, exponent });
    }
    Ok(())
}

fn power_is_zero(m: &FpMat) -> bool {
    (0..m.rows).all(|i| m.row(i).iter().all(|&c| c == 0))
}

/// Converts a series to another coefficient algebra along an embedding of
/// coefficients.
pub fn convert_series(
    f: &LaurentSeries,
    target: &Arc<CoefficientAlgebra>,
    embed: &dyn Fn(&AElem) -> AElem,
) -> Result<LaurentSeries> {
    let lo = f.window_start();
    let hi = f.window_end();
    let mut coeffs = Vec::with_capacity((hi - lo).max(0) as usize);
    for e in lo..hi {
        match f.coeff_at(e) {
            Coeff::Known(c) => coeffs.push(embed(&c)),
            Coeff::Unknown => unreachable!(),
        }
    }
    LaurentSeries::from_coeffs(target, lo, coeffs, f.is_exact())
}

/// The residue field A/m as an algebra together with the projection map.
/// The complement of the maximal-ideal basis indices is used as the basis
/// of the quotient.
pub fn residue_field(
    algebra: &Arc<CoefficientAlgebra>,
) -> Result<(Arc<CoefficientAlgebra>, impl Fn(&AElem) -> AElem + '_)> {
    let complement: Vec<usize> = (0..algebra.basis_dim)
        .filter(|i| !algebra.max_ideal_basis.contains(i))
        .collect();
    let e = complement.len();
    let mut table = vec![vec![vec![0u64; e]; e]; e];
    for (i, &bi) in complement.iter().enumerate() {
        for (j, &bj) in complement.iter().enumerate() {
            let prod = &algebra.mult_table[bi][bj];
            for (k, &bk) in complement.iter().enumerate() {
                table[i][j][k] = prod[bk];
            }
        }
    }
    let field = CoefficientAlgebra::new(algebra.p, e, table, vec![])?;
    let proj = move |a: &AElem| -> AElem {
        complement.iter().map(|&bi| a[bi]).collect()
    };
    Ok((field, proj))
}
