//! Reproducible randomized property suites with brute-force cross-checks.
//!
//! Modules are built exclusively from characters and
//! `extension_from_cocycle` (never raw random matrices), so etaleness and
//! continuity hold by construction. All randomness flows from the seed
//! through a fixed SplitMix64 stream; identical parameters give
//! byte-identical reports.

use crate::coeffs::{embed_prime_subfield, CoefficientAlgebra};
use crate::error::{Error, Result};
use crate::herr::{
    h0_dim, h1_basis, h1_dim, h2_dim, hom_of_vec, pairing_matrix, realize_cocycle,
    field_matrix_invertible, vec_of_hom,
};
use crate::laurent::LaurentSeries;
use crate::pgmod::{Config, PhiGammaModule, SeriesMat};
use crate::rankone::{from_character, CharacterLabel};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// SplitMix64: tiny, stable, seedable. Pinned here so reports cannot
/// drift with external crate versions.
#[derive(Debug, Clone)]
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SuiteChecks {
    pub euler: bool,
    pub duality: bool,
    pub pairing: bool,
    pub base_change: bool,
    pub psi_bounds: bool,
}

impl Default for SuiteChecks {
    fn default() -> Self {
        SuiteChecks {
            euler: true,
            duality: true,
            pairing: false,
            base_change: false,
            psi_bounds: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SuiteParams {
    pub seed: u64,
    pub p: u64,
    /// Degree of the coefficient field over F_p (1 or 2).
    pub q_degree: usize,
    pub d_max: usize,
    pub count: usize,
    #[serde(default = "default_suite_width")]
    pub width: i64,
    #[serde(default)]
    pub checks: SuiteChecks,
}

fn default_suite_width() -> i64 {
    96
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseOutcome {
    pub index: usize,
    pub recipe: String,
    pub rank: usize,
    pub h0: usize,
    pub h1: usize,
    pub h2: usize,
    pub pass: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub p: u64,
    pub q_degree: usize,
    pub d_max: usize,
    pub count: usize,
    pub width: i64,
    pub chi_gamma_convention: String,
    pub cases: Vec<CaseOutcome>,
    pub all_pass: bool,
}

/// A random character label.
fn random_label(rng: &mut SplitMix64, alg: &Arc<CoefficientAlgebra>) -> CharacterLabel {
    let units = alg.units();
    let n = rng.below(alg.p - 1) as i64;
    let a = units[rng.below(units.len() as u64) as usize].clone();
    CharacterLabel { n, a }
}

fn label_recipe(label: &CharacterLabel) -> String {
    format!("char(n={},a={:?})", label.n, label.a)
}

/// A random exact polynomial hom-matrix with small window, used as a
/// coboundary parameter.
fn random_hom_matrix(
    rng: &mut SplitMix64,
    alg: &Arc<CoefficientAlgebra>,
    rows: usize,
    cols: usize,
) -> Result<SeriesMat> {
    let mut entries = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let val = rng.below(4) as i64 - 1;
        let len = 1 + rng.below(3) as usize;
        let coeffs = (0..len)
            .map(|_| {
                let mut c = alg.zero();
                for slot in c.iter_mut() {
                    *slot = rng.below(alg.p);
                }
                c
            })
            .collect();
        entries.push(LaurentSeries::from_coeffs(alg, val, coeffs, true)?);
    }
    SeriesMat::from_entries(alg, rows, cols, entries)
}

/// Builds a random module of the requested rank as an iterated extension
/// of characters, together with its replayable recipe string.
pub fn random_module(
    rng: &mut SplitMix64,
    alg: &Arc<CoefficientAlgebra>,
    config: Config,
    rank: usize,
) -> Result<(PhiGammaModule, String)> {
    if rank == 1 {
        let label = random_label(rng, alg);
        let m = from_character(alg, &label, config)?;
        return Ok((m, label_recipe(&label)));
    }
    let (quot, quot_recipe) = random_module(rng, alg, config, rank - 1)?;
    let sub_label = random_label(rng, alg);
    let sub = from_character(alg, &sub_label, config)?;
    let hom = quot.dual()?.tensor(&sub)?;
    let kind = rng.below(3);
    let (f, g, kind_recipe) = match kind {
        0 => (
            SeriesMat::zeros(alg, 1, rank - 1),
            SeriesMat::zeros(alg, 1, rank - 1),
            "zero".to_string(),
        ),
        1 => {
            // coboundary of a random polynomial hom element
            let x = random_hom_matrix(rng, alg, 1, rank - 1)?;
            let xv = vec_of_hom(&x);
            let prec = config.width;
            let px = hom.act_phi(&xv)?;
            let gx = hom.act_gamma(&xv, prec)?;
            let a: Vec<LaurentSeries> = px
                .iter()
                .zip(&xv)
                .map(|(y, x)| y.sub(x))
                .collect::<Result<_>>()?;
            let b: Vec<LaurentSeries> = gx
                .iter()
                .zip(&xv)
                .map(|(y, x)| y.sub(x))
                .collect::<Result<_>>()?;
            (
                hom_of_vec(alg, &a, 1, rank - 1),
                hom_of_vec(alg, &b, 1, rank - 1),
                "coboundary".to_string(),
            )
        }
        _ => {
            // a random combination of certified classes
            let basis = h1_basis(&hom)?;
            let classes = basis.cocycles(&hom);
            let mut a = vec![LaurentSeries::zero(alg); rank - 1];
            let mut b = vec![LaurentSeries::zero(alg); rank - 1];
            let mut coeffs = Vec::new();
            for c in &classes {
                let lambda = rng.below(alg.p);
                coeffs.push(lambda);
                if lambda == 0 {
                    continue;
                }
                let (av, bv) = realize_cocycle(&hom, c, config.width)?;
                let scalar = alg.from_scalar(lambda);
                for (acc, x) in a.iter_mut().zip(&av) {
                    *acc = acc.add(&x.scale(&scalar))?;
                }
                for (acc, x) in b.iter_mut().zip(&bv) {
                    *acc = acc.add(&x.scale(&scalar))?;
                }
            }
            (
                hom_of_vec(alg, &a, 1, rank - 1),
                hom_of_vec(alg, &b, 1, rank - 1),
                format!("classes{coeffs:?}"),
            )
        }
    };
    let e = PhiGammaModule::extension_from_cocycle(&quot, &sub, &f, &g)?;
    let recipe = format!(
        "ext[{}](quot={}, sub={})",
        kind_recipe,
        quot_recipe,
        label_recipe(&sub_label)
    );
    Ok((e, recipe))
}

/// Runs one case: builds the module and applies the requested checks.
fn run_case(
    index: usize,
    rng: &mut SplitMix64,
    alg: &Arc<CoefficientAlgebra>,
    params: &SuiteParams,
) -> CaseOutcome {
    let config = Config {
        width: params.width,
        ..Config::default()
    };
    let rank = 1 + rng.below(params.d_max as u64) as usize;
    let mut failures = Vec::new();
    let (m, recipe) = match random_module(rng, alg, config, rank) {
        Ok(x) => x,
        Err(e) => {
            return CaseOutcome {
                index,
                recipe: format!("<build failed at rank {rank}>"),
                rank,
                h0: 0,
                h1: 0,
                h2: 0,
                pass: false,
                failures: vec![format!("build: {e}")],
            }
        }
    };
    let mut h = (0usize, 0usize, 0usize);
    match (|| -> Result<()> {
        let h0 = h0_dim(&m)?;
        let h2 = h2_dim(&m)?;
        let basis = h1_basis(&m)?;
        let h1 = basis.dim;
        h = (h0, h1, h2);
        if params.checks.euler && h0 as i64 - h1 as i64 + h2 as i64 != -(m.rank as i64) {
            failures.push(format!(
                "euler: h0 - h1 + h2 = {} != -{}",
                h0 as i64 - h1 as i64 + h2 as i64,
                m.rank
            ));
        }
        let dual = m.cartier_dual()?;
        if params.checks.duality {
            let d0 = h0_dim(&dual)?;
            let d2 = h2_dim(&dual)?;
            let d1 = h1_dim(&dual)?;
            if (d0, d1, d2) != (h2, h1, h0) {
                failures.push(format!(
                    "duality: dual dims ({d0},{d1},{d2}) != reversed ({h2},{h1},{h0})"
                ));
            }
        }
        if params.checks.pairing {
            let basis_star = h1_basis(&dual)?;
            let mat = pairing_matrix(&m, &dual, &basis, &basis_star)?;
            if !field_matrix_invertible(alg, &mat) {
                failures.push("pairing: matrix not invertible".to_string());
            }
        }
        if params.checks.base_change && alg.basis_dim == 1 {
            let big = CoefficientAlgebra::finite_field(alg.p, 2)?;
            let embedded = m.base_change(&big, &|c| embed_prime_subfield(c, &big))?;
            let b0 = h0_dim(&embedded)?;
            let b2 = h2_dim(&embedded)?;
            let b1 = h1_dim(&embedded)?;
            if (b0, b1, b2) != (h0, h1, h2) {
                failures.push(format!(
                    "base_change: ({b0},{b1},{b2}) != ({h0},{h1},{h2})"
                ));
            }
        }
        if params.checks.psi_bounds {
            check_psi_bounds(&m, &mut failures)?;
        }
        Ok(())
    })() {
        Ok(()) => {}
        Err(e) => failures.push(format!("error: {e}")),
    }
    CaseOutcome {
        index,
        recipe,
        rank: m.rank,
        h0: h.0,
        h1: h.1,
        h2: h.2,
        pass: failures.is_empty(),
        failures,
    }
}

/// The inclusions psi(T'^(h+np) L) in T'^n L in psi(T'^(np) L) on the
/// phi-stable lattice, for n in {1, 2, 3}.
pub fn check_psi_bounds(m: &PhiGammaModule, failures: &mut Vec<String>) -> Result<()> {
    let alg = &m.algebra;
    let p = alg.p as i64;
    let lat = m.stabilize_lattice();
    let k = lat.phi_shift;
    let h = lat.lemma_h;
    for n in 1..=3i64 {
        for i in 0..m.rank {
            for extra in 0..2i64 {
                let mut v = vec![LaurentSeries::zero(alg); m.rank];
                v[i] = LaurentSeries::monomial(alg, alg.one(), h + n * p + k + extra);
                let out = m.act_psi(&v)?;
                for x in &out {
                    if let Some(val) = x.valuation() {
                        if val < n + k {
                            failures.push(format!(
                                "psi bound: psi(T^{} e_{i}) has valuation {val} < {}",
                                h + n * p + k + extra,
                                n + k
                            ));
                        }
                    }
                }
            }
            // surjectivity side: T'^(n+k) e_i = psi(phi(T'^(n+k) e_i)) with
            // the argument inside T'^(np) times the lattice
            let mut v = vec![LaurentSeries::zero(alg); m.rank];
            v[i] = LaurentSeries::monomial(alg, alg.one(), n + k);
            let image = m.act_phi(&v)?;
            for x in &image {
                if let Some(val) = x.valuation() {
                    if val < n * p + k {
                        failures.push(format!(
                            "psi bound: phi image of T^{} e_{i} at valuation {val} < {}",
                            n + k,
                            n * p + k
                        ));
                    }
                }
            }
            let back = m.act_psi(&image)?;
            for (x, y) in back.iter().zip(&v) {
                if !x.eq_on(y, 0, (n + k + 2).min(m.config.width / 2))? {
                    failures.push(format!("psi bound: psi phi != id on T^{} e_{i}", n + k));
                }
            }
        }
    }
    Ok(())
}

/// Runs the whole suite.
pub fn run_suite(params: &SuiteParams) -> Result<SuiteReport> {
    if params.p != 3 && params.p != 5 {
        return Err(Error::Unsupported("suite expects p in {3, 5}".to_string()));
    }
    if params.d_max == 0 || params.d_max > 3 {
        return Err(Error::Unsupported("suite expects 1 <= d_max <= 3".to_string()));
    }
    let alg = CoefficientAlgebra::finite_field(params.p, params.q_degree)?;
    let mut master = SplitMix64(params.seed);
    let mut cases = Vec::with_capacity(params.count);
    for index in 0..params.count {
        let mut rng = SplitMix64(master.next_u64());
        cases.push(run_case(index, &mut rng, &alg, params));
    }
    let all_pass = cases.iter().all(|c| c.pass);
    Ok(SuiteReport {
        seed: params.seed,
        p: params.p,
        q_degree: params.q_degree,
        d_max: params.d_max,
        count: params.count,
        width: params.width,
        chi_gamma_convention: "1+p".to_string(),
        cases,
        all_pass,
    })
}
