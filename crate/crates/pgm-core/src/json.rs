//! JSON schemas for coefficient algebras, series, modules, cocycles and
//! reports, with converters to and from the domain types.
//!
//! Series in module files are exact Laurent polynomials (a module is
//! defined by its matrices); computed series written back carry their
//! guaranteed window and an explicit exact flag.

use crate::coeffs::CoefficientAlgebra;
use crate::error::{Error, Result};
use crate::herr::Cocycle;
use crate::laurent::{Coeff, LaurentSeries};
use crate::pgmod::{Config, PhiGammaModule, SeriesMat};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffJson {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mult_table: Option<Vec<Vec<Vec<u64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ideal: Option<Vec<usize>>,
}

impl CoeffJson {
    pub fn to_algebra(&self, p: u64) -> Result<Arc<CoefficientAlgebra>> {
        match self.kind.as_str() {
            "finite_field" => {
                let degree = self.degree.unwrap_or(1);
                CoefficientAlgebra::finite_field(p, degree)
            }
            "local_algebra" => {
                let dim = self
                    .dim
                    .ok_or_else(|| Error::MalformedInput("local_algebra needs dim".into()))?;
                let table = self
                    .mult_table
                    .clone()
                    .ok_or_else(|| Error::MalformedInput("local_algebra needs mult_table".into()))?;
                let ideal = self.max_ideal.clone().unwrap_or_default();
                CoefficientAlgebra::new(p, dim, table, ideal)
            }
            other => Err(Error::MalformedInput(format!("unknown coeff kind {other:?}"))),
        }
    }

    pub fn of_algebra(alg: &CoefficientAlgebra) -> Self {
        if alg.max_ideal_basis.is_empty() {
            CoeffJson {
                kind: "finite_field".to_string(),
                degree: Some(alg.residue_degree),
                dim: None,
                mult_table: None,
                max_ideal: None,
            }
        } else {
            CoeffJson {
                kind: "local_algebra".to_string(),
                degree: None,
                dim: Some(alg.basis_dim),
                mult_table: Some(alg.mult_table.clone()),
                max_ideal: Some(alg.max_ideal_basis.clone()),
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesJson {
    pub valuation: i64,
    pub precision: i64,
    pub coeffs: Vec<Vec<u64>>,
    #[serde(default = "default_true")]
    pub exact: bool,
}

fn default_true() -> bool {
    true
}

impl SeriesJson {
    pub fn to_series(&self, alg: &Arc<CoefficientAlgebra>) -> Result<LaurentSeries> {
        if self.coeffs.len() as i64 != self.precision - self.valuation {
            return Err(Error::MalformedInput(
                "series coeffs length must be precision - valuation".to_string(),
            ));
        }
        LaurentSeries::from_coeffs(alg, self.valuation, self.coeffs.clone(), self.exact)
    }

    pub fn of_series(f: &LaurentSeries) -> Self {
        let lo = f.window_start();
        let hi = f.window_end();
        let coeffs = (lo..hi)
            .map(|e| match f.coeff_at(e) {
                Coeff::Known(c) => c,
                Coeff::Unknown => unreachable!("window bound"),
            })
            .collect();
        SeriesJson {
            valuation: lo,
            precision: hi,
            coeffs,
            exact: f.is_exact(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatricesJson {
    pub phi: Vec<Vec<SeriesJson>>,
    pub gamma: Vec<Vec<SeriesJson>>,
    pub delta: Vec<Vec<SeriesJson>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuleJson {
    pub p: u64,
    pub coeff: CoeffJson,
    pub rank: usize,
    pub chi_gamma: String,
    pub matrices: MatricesJson,
}

fn mat_to_json(m: &SeriesMat) -> Vec<Vec<SeriesJson>> {
    (0..m.rows)
        .map(|i| (0..m.cols).map(|j| SeriesJson::of_series(m.at(i, j))).collect())
        .collect()
}

fn mat_from_json(
    alg: &Arc<CoefficientAlgebra>,
    rows: &[Vec<SeriesJson>],
    rank: usize,
) -> Result<SeriesMat> {
    if rows.len() != rank || rows.iter().any(|r| r.len() != rank) {
        return Err(Error::MalformedInput("matrix shape must be rank x rank".into()));
    }
    let mut entries = Vec::with_capacity(rank * rank);
    for row in rows {
        for s in row {
            entries.push(s.to_series(alg)?);
        }
    }
    SeriesMat::from_entries(alg, rank, rank, entries)
}

impl ModuleJson {
    pub fn of_module(m: &PhiGammaModule) -> Self {
        ModuleJson {
            p: m.algebra.p,
            coeff: CoeffJson::of_algebra(&m.algebra),
            rank: m.rank,
            chi_gamma: "1+p".to_string(),
            matrices: MatricesJson {
                phi: mat_to_json(&m.phi),
                gamma: mat_to_json(&m.gamma),
                delta: mat_to_json(&m.delta),
            },
        }
    }

    /// Validates and assembles the module.
    pub fn to_module(&self, config: Config) -> Result<PhiGammaModule> {
        if self.chi_gamma != "1+p" {
            return Err(Error::MalformedInput(format!(
                "unsupported chi_gamma convention {:?} (this artifact fixes 1+p)",
                self.chi_gamma
            )));
        }
        let alg = self.coeff.to_algebra(self.p)?;
        let phi = mat_from_json(&alg, &self.matrices.phi, self.rank)?;
        let gamma = mat_from_json(&alg, &self.matrices.gamma, self.rank)?;
        let delta = mat_from_json(&alg, &self.matrices.delta, self.rank)?;
        PhiGammaModule::validate(&alg, phi, gamma, delta, config)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CocycleJson {
    pub degree: u8,
    pub a: Vec<SeriesJson>,
    pub b: Vec<SeriesJson>,
    pub window: [i64; 2],
    pub trunc: i64,
    pub certified: bool,
}

impl CocycleJson {
    pub fn of_cocycle(c: &Cocycle) -> Self {
        CocycleJson {
            degree: c.degree,
            a: c.a.iter().map(SeriesJson::of_series).collect(),
            b: c.b.iter().map(SeriesJson::of_series).collect(),
            window: [c.window.0, c.window.1],
            trunc: c.trunc,
            certified: c.certified,
        }
    }

    pub fn to_cocycle(&self, alg: &Arc<CoefficientAlgebra>) -> Result<Cocycle> {
        Ok(Cocycle {
            degree: self.degree,
            a: self
                .a
                .iter()
                .map(|s| s.to_series(alg))
                .collect::<Result<_>>()?,
            b: self
                .b
                .iter()
                .map(|s| s.to_series(alg))
                .collect::<Result<_>>()?,
            window: (self.window[0], self.window[1]),
            trunc: self.trunc,
            certified: self.certified,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_round_trip() {
        let a = CoefficientAlgebra::prime_field(3).unwrap();
        let m = PhiGammaModule::tate_module(&a, Config::default()).unwrap();
        let j = ModuleJson::of_module(&m);
        let text = serde_json::to_string_pretty(&j).unwrap();
        let back: ModuleJson = serde_json::from_str(&text).unwrap();
        let m2 = back.to_module(Config::default()).unwrap();
        assert!(m
            .delta
            .first_difference(&m2.delta, 0, 2)
            .unwrap()
            .is_none());
    }

    #[test]
    fn rejects_wrong_convention() {
        let a = CoefficientAlgebra::prime_field(3).unwrap();
        let m = PhiGammaModule::trivial(&a, Config::default()).unwrap();
        let mut j = ModuleJson::of_module(&m);
        j.chi_gamma = "1+p^2".to_string();
        assert!(matches!(
            j.to_module(Config::default()),
            Err(Error::MalformedInput(_))
        ));
    }

    #[test]
    fn local_algebra_round_trip() {
        let a = crate::coeffs::dual_numbers(3).unwrap();
        let j = CoeffJson::of_algebra(&a);
        let back = j.to_algebra(3).unwrap();
        assert_eq!(*back, *a);
    }
}
