//! The rank-1 character dictionary and the rank-2 weight assignment.
//!
//! Rank-1 modules are classified by pairs (n, a): the n-th power of the
//! mod-p cyclotomic character twisted by the unramified character sending
//! a geometric Frobenius to the unit a. In the explicit presentation the
//! cyclotomic power sits entirely in the delta matrix (chi(gamma) = 1+p
//! reduces to 1 mod p), so the module of (n, a) has Phi = (a), Gamma = (1)
//! and Delta = (omega-bar^n).
//!
//! Extensions of one character by another with cyclotomic ratio are
//! separated into peu and tres ramifiee by cup-pairing against the
//! unramified class of H^1(trivial): the pairing functional is nonzero and
//! its kernel is exactly the peu line.

use crate::coeffs::{AElem, CoefficientAlgebra};
use crate::error::{Error, Result};
use crate::herr::{
    class_of_extension, h0_dim, h1_basis, Cocycle, CupContext, H1Basis,
};
use crate::laurent::LaurentSeries;
use crate::pgmod::{CharacterParams, Config, PhiGammaModule};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Label of a rank-1 module: cyclotomic power n (mod p-1) and unramified
/// part a (a unit of the coefficient field).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterLabel {
    pub n: i64,
    pub a: Vec<u64>,
}

impl CharacterLabel {
    pub fn normalized(&self, p: u64) -> CharacterLabel {
        CharacterLabel {
            n: self.n.rem_euclid(p as i64 - 1),
            a: self.a.clone(),
        }
    }
}

/// The rank-1 module of a label.
pub fn from_character(
    algebra: &Arc<CoefficientAlgebra>,
    label: &CharacterLabel,
    config: Config,
) -> Result<PhiGammaModule> {
    if label.a.len() != algebra.basis_dim {
        return Err(Error::MalformedInput(
            "label unit has wrong coefficient dimension".to_string(),
        ));
    }
    let ctx = crate::laurent::ActionCtx::new(algebra.p)?;
    let e = label.n.rem_euclid(algebra.p as i64 - 1) as u32;
    let params = CharacterParams {
        a_phi: label.a.clone(),
        c_gamma: algebra.one(),
        c_delta: algebra.from_scalar(ctx.delta_char_residue(e)),
    };
    PhiGammaModule::character(algebra, &params, config)
}

/// All (p-1)(q-1) labels over a field coefficient algebra, in a fixed
/// deterministic order.
pub fn all_labels(algebra: &Arc<CoefficientAlgebra>) -> Vec<CharacterLabel> {
    let mut out = Vec::new();
    for n in 0..(algebra.p as i64 - 1) {
        for a in algebra.units() {
            out.push(CharacterLabel { n, a });
        }
    }
    out
}

/// Identifies a validated rank-1 module by exhaustive scan: the unique
/// label whose dual twist has nonzero H^0.
pub fn identify_rank1(m: &PhiGammaModule) -> Result<CharacterLabel> {
    if m.rank != 1 {
        return Err(Error::MalformedInput("identify_rank1 needs rank 1".to_string()));
    }
    if !m.algebra.is_field() {
        return Err(Error::FieldRequired {
            context: "rank-1 identification",
        });
    }
    for label in all_labels(&m.algebra) {
        let charmod = from_character(&m.algebra, &label, m.config)?;
        let twisted = m.tensor(&charmod.dual()?)?;
        if h0_dim(&twisted)? > 0 {
            return Ok(label);
        }
    }
    Err(Error::NoMatch)
}

/// Whether a certified class in H^1(A(1)) is tres ramifiee: true exactly
/// when the cup pairing against the unramified class (1, 0) of
/// H^1(trivial) is nonzero. The peu classes form the 1-dimensional kernel.
///
/// `tate` is the rank-1 presentation of A(1) the class lives on (possibly
/// monomial-twisted); the pairing model is built on that presentation.
pub fn is_tres_ramifiee(tate: &PhiGammaModule, c: &Cocycle) -> Result<bool> {
    let alg = &tate.algebra;
    let trivial = PhiGammaModule::trivial(alg, tate.config)?;
    let unram = Cocycle {
        degree: 1,
        a: vec![LaurentSeries::one(alg)],
        b: vec![LaurentSeries::zero(alg)],
        window: (0, trivial.contraction_level() + 1),
        trunc: trivial.contraction_level() + 1,
        certified: true,
    };
    let cup = CupContext::with_target(tate.clone(), c.window.0.min(0) - 2)?;
    let value = cup.pair(&trivial, tate, &unram, c)?;
    Ok(!alg.is_zero(&value))
}

/// A Serre weight for d = 2: integers with p-1 >= k1-k2 >= 0,
/// p-1 >= k2 >= 0 and (k1, k2) != (p-1, p-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerreWeight2 {
    pub k1: i64,
    pub k2: i64,
}

impl SerreWeight2 {
    pub fn check(&self, p: u64) -> Result<()> {
        let p1 = p as i64 - 1;
        let ok = (0..=p1).contains(&(self.k1 - self.k2))
            && (0..=p1).contains(&self.k2)
            && (self.k1, self.k2) != (p1, p1);
        if ok {
            Ok(())
        } else {
            Err(Error::MalformedInput(format!(
                "({}, {}) is not a Serre weight at p = {p}",
                self.k1, self.k2
            )))
        }
    }
}

/// The weight of a maximally nonsplit rank-2 module with a declared rank-1
/// sub (block upper triangular). The sub character chi_1 and quotient
/// character chi_2 determine k2 and k1 by the congruences
/// chi_1|_I = omega^{-k2} and chi_2|_I = epsilon-bar^{-1} omega^{-k1};
/// when both ends of the k1 range are allowed (cyclotomic ratio on
/// inertia), k1 - k2 = p-1 exactly when the ratio is cyclotomic on the
/// nose and the extension class is tres ramifiee.
pub fn weight_rank2(e: &PhiGammaModule) -> Result<SerreWeight2> {
    let p = e.algebra.p as i64;
    let p1 = p - 1;
    if e.rank != 2 {
        return Err(Error::MalformedInput("weight_rank2 needs rank 2".to_string()));
    }
    let cls = class_of_extension(e, 1)?;
    let sub_label = identify_rank1(&cls.sub)?;
    let quot_label = identify_rank1(&cls.quot)?;
    // reject split extensions
    let basis = h1_basis(&cls.hom)?;
    if basis.is_coboundary(&cls.hom, &cls.cocycle)? {
        return Err(Error::NotMaximallyNonsplit);
    }
    let k2 = (-sub_label.n).rem_euclid(p1);
    let k1_residue = (-1 - quot_label.n).rem_euclid(p1);
    let offset = (k1_residue - k2).rem_euclid(p1);
    let k1 = if offset != 0 {
        k2 + offset
    } else {
        // both k2 and k2 + (p-1) satisfy the congruence; the ratio of the
        // characters is cyclotomic on inertia
        let ratio_exact = (sub_label.n - quot_label.n).rem_euclid(p1) == 1
            && sub_label.a == quot_label.a;
        if ratio_exact && is_tres_ramifiee(&cls.hom, &cls.cocycle)? {
            k2 + p1
        } else {
            k2
        }
    };
    let w = SerreWeight2 { k1, k2 };
    w.check(e.algebra.p)?;
    Ok(w)
}

/// Convenience for tests and the suite: the peu/tres decomposition of
/// H^1(A(1)): returns (a tres class, a peu class) from a computed basis.
pub fn tres_peu_split(
    tate: &PhiGammaModule,
    basis: &H1Basis,
) -> Result<(Cocycle, Cocycle)> {
    let alg = &tate.algebra;
    let classes = basis.cocycles(tate);
    let trivial = PhiGammaModule::trivial(alg, tate.config)?;
    let unram = Cocycle {
        degree: 1,
        a: vec![LaurentSeries::one(alg)],
        b: vec![LaurentSeries::zero(alg)],
        window: (0, trivial.contraction_level() + 1),
        trunc: trivial.contraction_level() + 1,
        certified: true,
    };
    let cup = CupContext::with_target(tate.clone(), basis.model.shape.lo - 2)?;
    let values: Vec<AElem> = classes
        .iter()
        .map(|c| cup.pair(&trivial, tate, &unram, c))
        .collect::<Result<_>>()?;
    let tres_idx = values
        .iter()
        .position(|v| !alg.is_zero(v))
        .ok_or(Error::CertificateFailure {
            context: "pairing functional vanished on all of H^1(A(1))",
            want: 1,
            got: 0,
        })?;
    let tres = classes[tres_idx].clone();
    // a peu class: kill the pairing value of the other basis vector
    let other = 1 - tres_idx;
    let peu = if alg.is_zero(&values[other]) {
        classes[other].clone()
    } else {
        // combo: other - (v_other / v_tres) * tres
        let factor = alg.mul(&values[other], &alg.inv(&values[tres_idx])?);
        let neg = alg.neg(&factor);
        let a = classes[other].a[0]
            .add(&classes[tres_idx].a[0].scale(&neg))?;
        let b = classes[other].b[0]
            .add(&classes[tres_idx].b[0].scale(&neg))?;
        Cocycle {
            degree: 1,
            a: vec![a],
            b: vec![b],
            window: (
                classes[other].window.0.min(classes[tres_idx].window.0),
                classes[other].window.1.min(classes[tres_idx].window.1),
            ),
            trunc: classes[other].trunc,
            certified: true,
        }
    };
    Ok((tres, peu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herr::{hom_of_vec, realize_cocycle};

    fn f3() -> Arc<CoefficientAlgebra> {
        CoefficientAlgebra::prime_field(3).unwrap()
    }

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn from_character_examples() {
        let a = f3();
        // (0, 1) is the trivial module
        let triv = from_character(&a, &CharacterLabel { n: 0, a: a.one() }, cfg()).unwrap();
        assert_eq!(
            triv.delta.at(0, 0).coeff_at(0),
            crate::laurent::Coeff::Known(a.one())
        );
        // (1, 1) is A(1): Delta = (2) at p = 3
        let t = from_character(&a, &CharacterLabel { n: 1, a: a.one() }, cfg()).unwrap();
        assert_eq!(
            t.delta.at(0, 0).coeff_at(0),
            crate::laurent::Coeff::Known(a.from_scalar(2))
        );
        // (1, 2): Phi = (2), Delta = (2)
        let m = from_character(&a, &CharacterLabel { n: 1, a: a.from_scalar(2) }, cfg()).unwrap();
        assert_eq!(
            m.phi.at(0, 0).coeff_at(0),
            crate::laurent::Coeff::Known(a.from_scalar(2))
        );
    }

    #[test]
    fn identify_round_trip_exhaustive_p3() {
        let a = f3();
        for label in all_labels(&a) {
            let m = from_character(&a, &label, cfg()).unwrap();
            let found = identify_rank1(&m).unwrap();
            assert_eq!(found, label.normalized(3));
        }
    }

    #[test]
    fn from_character_multiplicative() {
        let a = f3();
        let l1 = CharacterLabel { n: 1, a: a.from_scalar(2) };
        let l2 = CharacterLabel { n: 1, a: a.from_scalar(2) };
        let m1 = from_character(&a, &l1, cfg()).unwrap();
        let m2 = from_character(&a, &l2, cfg()).unwrap();
        let prod = m1.tensor(&m2).unwrap();
        let sum = from_character(
            &a,
            &CharacterLabel { n: 2, a: a.from_scalar(4 % 3) },
            cfg(),
        )
        .unwrap();
        assert!(prod
            .phi
            .first_difference(&sum.phi, 0, 2)
            .unwrap()
            .is_none());
        assert!(prod
            .delta
            .first_difference(&sum.delta, 0, 2)
            .unwrap()
            .is_none());
    }

    #[test]
    fn identify_monomial_presentation() {
        // the monomial module with Phi = (T'^(p-1)) is some character in
        // the dictionary; identification must find it
        let a = f3();
        let m = PhiGammaModule::monomial_module(&a, 1, cfg()).unwrap();
        let label = identify_rank1(&m).unwrap();
        // twisting back by the inverse label gives nonzero h0
        let charmod = from_character(&a, &label, cfg()).unwrap();
        let back = m.tensor(&charmod.dual().unwrap()).unwrap();
        assert!(h0_dim(&back).unwrap() > 0);
    }

    #[test]
    fn weight_of_tres_and_peu_extensions() {
        let a = f3();
        let wide = Config { width: 96, ..cfg() };
        let triv = PhiGammaModule::trivial(&a, wide).unwrap();
        let tate = PhiGammaModule::tate_module(&a, wide).unwrap();
        let basis = h1_basis(&tate).unwrap();
        let (tres, peu) = tres_peu_split(&tate, &basis).unwrap();
        // tres-ramifiee extension of trivial by A(1): weight (3, 1) = (2p-3, p-2)
        let (av, bv) = realize_cocycle(&tate, &tres, wide.width).unwrap();
        let e = PhiGammaModule::extension_from_cocycle(
            &triv,
            &tate,
            &hom_of_vec(&a, &av, 1, 1),
            &hom_of_vec(&a, &bv, 1, 1),
        )
        .unwrap();
        assert_eq!(weight_rank2(&e).unwrap(), SerreWeight2 { k1: 3, k2: 1 });
        // peu-ramifiee: weight (1, 1) = (p-2, p-2)
        let (av, bv) = realize_cocycle(&tate, &peu, wide.width).unwrap();
        let e = PhiGammaModule::extension_from_cocycle(
            &triv,
            &tate,
            &hom_of_vec(&a, &av, 1, 1),
            &hom_of_vec(&a, &bv, 1, 1),
        )
        .unwrap();
        assert_eq!(weight_rank2(&e).unwrap(), SerreWeight2 { k1: 1, k2: 1 });
    }

    #[test]
    fn weight_of_generic_ratio_extension() {
        // extension of trivial by ur_2(1)-style character: the ratio is not
        // cyclotomic on the nose, so the congruences determine the weight
        // with k1 - k2 < p - 1
        let a = f3();
        let wide = Config { width: 96, ..cfg() };
        let triv = PhiGammaModule::trivial(&a, wide).unwrap();
        let sub = from_character(
            &a,
            &CharacterLabel { n: 1, a: a.from_scalar(2) },
            wide,
        )
        .unwrap();
        let hom = triv.dual().unwrap().tensor(&sub).unwrap();
        let basis = h1_basis(&hom).unwrap();
        let alpha = basis.cocycles(&hom).remove(0);
        let (av, bv) = realize_cocycle(&hom, &alpha, wide.width).unwrap();
        let e = PhiGammaModule::extension_from_cocycle(
            &triv,
            &sub,
            &hom_of_vec(&a, &av, 1, 1),
            &hom_of_vec(&a, &bv, 1, 1),
        )
        .unwrap();
        let w = weight_rank2(&e).unwrap();
        // k2 = 1, k1 = 1 (offset 0 but ratio not exact: tie resolves low)
        assert_eq!(w, SerreWeight2 { k1: 1, k2: 1 });
    }

    #[test]
    fn split_extension_rejected() {
        let a = f3();
        let triv = PhiGammaModule::trivial(&a, cfg()).unwrap();
        let tate = PhiGammaModule::tate_module(&a, cfg()).unwrap();
        let zero = crate::pgmod::SeriesMat::zeros(&a, 1, 1);
        let e = PhiGammaModule::extension_from_cocycle(&triv, &tate, &zero, &zero).unwrap();
        assert!(matches!(
            weight_rank2(&e),
            Err(Error::NotMaximallyNonsplit)
        ));
    }

    #[test]
    fn peu_kernel_is_one_dimensional() {
        let a = f3();
        let wide = Config { width: 96, ..cfg() };
        let tate = PhiGammaModule::tate_module(&a, wide).unwrap();
        let basis = h1_basis(&tate).unwrap();
        let (tres, peu) = tres_peu_split(&tate, &basis).unwrap();
        assert!(is_tres_ramifiee(&tate, &tres).unwrap());
        assert!(!is_tres_ramifiee(&tate, &peu).unwrap());
        // zero class is peu
        let zero = Cocycle {
            degree: 1,
            a: vec![LaurentSeries::zero(&a)],
            b: vec![LaurentSeries::zero(&a)],
            window: (-2, 2),
            trunc: 2,
            certified: true,
        };
        assert!(!is_tres_ramifiee(&tate, &zero).unwrap());
    }
}
