//! Shiho's lifted Cartier transform, the Dolbeault to de Rham morphism and the
//! Taylor gluing between two Frobenius lifts.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::chart::{forms, ChartError, FrobLift, LaurentPoly, PolyMat};
use crate::conn::{check_horizontal, twisted_d, ConnError, ConnModule, FormVec, Lambda, StratTable};
use crate::pdhopf::Flavor;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CartierError {
    #[error(transparent)]
    Conn(#[from] ConnError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("input must be a {0}")]
    Input(String),
    #[error("lifts live on different charts")]
    ChartMismatch,
}

/// Φ_F(M'): the module F^*(M') with B_i = Σ_j (dF/p)_{ij} F^*(A'_j).
pub fn shiho_phi(f: &FrobLift, m: &ConnModule, nilpotence_bound: u32) -> Result<ConnModule, CartierError> {
    let r = m.ring();
    let level_one = r.n() == 1;
    let ok_lambda = m.lambda == Lambda::P || (level_one && m.lambda == Lambda::Higgs);
    if !ok_lambda {
        return Err(CartierError::Input("p-connection".into()));
    }
    if f.d() != m.d() {
        return Err(CartierError::ChartMismatch);
    }
    if !m.check_integrable() {
        return Err(ConnError::NotIntegrable.into());
    }
    m.quasi_nilpotence_order(nilpotence_bound)?;
    shiho_pullback(f, m)
}

/// The connection formula of Φ_F without the integrability and nilpotence checks.
pub fn shiho_pullback(f: &FrobLift, m: &ConnModule) -> Result<ConnModule, CartierError> {
    let r = m.ring();
    if f.d() != m.d() {
        return Err(CartierError::ChartMismatch);
    }
    let dfp = f.df_over_p()?;
    let pulled: Vec<PolyMat> = m
        .a
        .iter()
        .map(|a| a.try_map(|x| f.apply(x)))
        .collect::<Result<_, _>>()?;
    let d = m.d();
    let mut b = Vec::new();
    for i in 0..d {
        let mut bi = PolyMat::zeros(r, d, m.rank, m.rank);
        for (j, pj) in pulled.iter().enumerate() {
            bi = bi.add(&pj.scale_poly(&dfp[i][j]));
        }
        b.push(bi);
    }
    Ok(ConnModule::new(f.chart.clone(), Lambda::One, b)?)
}

/// The morphism M'⊗Ω'^• → F_*(M⊗Ω^•), m⊗ω ↦ F^*(m)⊗∧(dF/p)(ω), at level 1.
#[derive(Clone, Debug)]
pub struct DolbeaultToDeRham {
    pub lift: FrobLift,
    pub higgs: ConnModule,
    pub target: ConnModule,
}

impl DolbeaultToDeRham {
    pub fn new(lift: &FrobLift, higgs: &ConnModule, bound: u32) -> Result<Self, CartierError> {
        if higgs.ring().n() != 1 || higgs.lambda != Lambda::Higgs {
            return Err(CartierError::Input("Higgs module at level 1".into()));
        }
        let target = shiho_phi(lift, higgs, bound)?;
        Ok(DolbeaultToDeRham {
            lift: lift.clone(),
            higgs: higgs.clone(),
            target,
        })
    }

    pub fn apply(&self, x: &FormVec) -> Result<FormVec, CartierError> {
        let mut out: FormVec = BTreeMap::new();
        for (&mask, v) in x {
            let fv: Vec<LaurentPoly> = v.iter().map(|c| self.lift.apply(c)).collect::<Result<_, _>>()?;
            for (nm, coef) in self.lift.wedge_df_over_p(mask)? {
                let e = out.entry(nm).or_insert_with(|| self.target.zero_vector());
                for (a, b) in e.iter_mut().zip(&fv) {
                    a.add_assign(&b.mul(&coef));
                }
            }
        }
        out.retain(|_, v| v.iter().any(|x| !x.is_zero()));
        Ok(out)
    }

    /// ∇(λ(x)) = λ(θ(x)).
    pub fn commutes_on(&self, x: &FormVec) -> Result<bool, CartierError> {
        let lhs = twisted_d(&self.target, &self.apply(x)?);
        let rhs = self.apply(&twisted_d(&self.higgs, x))?;
        Ok(lhs == rhs)
    }

    /// Checks the chain-map identity on every basis monomial e_k t^a dt_S with |a_i| ≤ deg.
    pub fn check_chain_map(&self, deg: i32) -> Result<bool, CartierError> {
        let d = self.higgs.d();
        let r = self.higgs.ring();
        let exps = crate::cohom::box_exponents(&self.higgs.chart, deg);
        for s in 0..=d {
            for mask in forms::subsets(d, s) {
                for k in 0..self.higgs.rank {
                    for e in &exps {
                        let mut v = self.higgs.zero_vector();
                        v[k] = LaurentPoly::monomial(r, e.clone(), 1);
                        let mut x = FormVec::new();
                        x.insert(mask, v);
                        if !self.commutes_on(&x)? {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }
}

/// Taylor gluing α(F1, F2) = Σ_I F1^*(θ_I) δ^I with δ_i = (F2^*(t_i) - F1^*(t_i))/p.
/// It is a horizontal map Φ_{F2}(M') → Φ_{F1}(M').
pub fn glue_alpha(f1: &FrobLift, f2: &FrobLift, strat: &StratTable) -> Result<PolyMat, CartierError> {
    if strat.flavor != Flavor::R {
        return Err(CartierError::Input("R-flavor stratification".into()));
    }
    if f1.chart != f2.chart || f1.d() != strat.d {
        return Err(CartierError::ChartMismatch);
    }
    let r = strat.ring;
    let d = strat.d;
    let delta: Vec<LaurentPoly> = (0..d)
        .map(|i| f2.images[i].sub(&f1.images[i]).p_divide(r))
        .collect::<Result<_, _>>()?;
    let mut powers: Vec<BTreeMap<u32, LaurentPoly>> = vec![BTreeMap::new(); d];
    let mut alpha = PolyMat::zeros(r, d, strat.rank, strat.rank);
    for (idx, th) in &strat.entries {
        let mut mono = LaurentPoly::one(r, d);
        for i in 0..d {
            let k = idx[i];
            let pw = powers[i].entry(k).or_insert_with(|| delta[i].pow(k)).clone();
            mono = mono.mul(&pw);
        }
        if mono.is_zero() {
            continue;
        }
        let pulled = th.try_map(|x| f1.apply(x))?;
        alpha = alpha.add(&pulled.scale_poly(&mono));
    }
    Ok(alpha)
}

/// α(F1,F2) α(F2,F3) = α(F1,F3).
pub fn verify_glue_cocycle(
    f1: &FrobLift,
    f2: &FrobLift,
    f3: &FrobLift,
    strat: &StratTable,
) -> Result<bool, CartierError> {
    let a12 = glue_alpha(f1, f2, strat)?;
    let a23 = glue_alpha(f2, f3, strat)?;
    let a13 = glue_alpha(f1, f3, strat)?;
    Ok(a12.mul(&a23) == a13)
}

/// Horizontality of α(F1, F2) from Φ_{F2}(M') to Φ_{F1}(M').
pub fn glue_is_horizontal(
    f1: &FrobLift,
    f2: &FrobLift,
    m: &ConnModule,
    strat: &StratTable,
    bound: u32,
) -> Result<bool, CartierError> {
    let alpha = glue_alpha(f1, f2, strat)?;
    let phi1 = shiho_phi(f1, m, bound)?;
    let phi2 = shiho_phi(f2, m, bound)?;
    Ok(check_horizontal(&alpha, &phi2, &phi1)?)
}

/// A glue isomorphism together with its endpoints.
#[derive(Clone, Debug)]
pub struct GlueIso {
    pub source: ConnModule,
    pub target: ConnModule,
    pub matrix: PolyMat,
    pub lifts: (FrobLift, FrobLift),
}

pub fn glue(f1: &FrobLift, f2: &FrobLift, m: &ConnModule, strat: &StratTable, bound: u32) -> Result<GlueIso, CartierError> {
    Ok(GlueIso {
        source: shiho_phi(f2, m, bound)?,
        target: shiho_phi(f1, m, bound)?,
        matrix: glue_alpha(f1, f2, strat)?,
        lifts: (f1.clone(), f2.clone()),
    })
}

impl GlueIso {
    pub fn is_horizontal(&self) -> Result<bool, CartierError> {
        Ok(check_horizontal(&self.matrix, &self.source, &self.target)?)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::conn::GammaModule;
    use crate::pdhopf::{idx_zero, unit_idx};
    use crate::ring::Ring;

    fn t(r: Ring, e: i32, c: i64) -> LaurentPoly {
        LaurentPoly::from_terms(r, 1, [(vec![e], c)])
    }

    #[test]
    fn shiho_examples() {
        let r = Ring::zp(5, 1);
        let up = r.at_level(2);
        let ch = Chart::affine(r, 1);
        let m = ConnModule::new(ch.clone(), Lambda::P, vec![PolyMat::scalar(r, 1, 1, &t(r, 0, 1))]).unwrap();
        let f = FrobLift::standard(&ch);
        assert!(shiho_phi(&f, &m, 4).is_err());
        assert_eq!(shiho_pullback(&f, &m).unwrap().a[0].get(0, 0), &t(r, 4, 1));
        let g = FrobLift::from_corrections(&ch, &[t(up, 1, 1)]).unwrap();
        assert_eq!(shiho_pullback(&g, &m).unwrap().a[0].get(0, 0), &t(r, 4, 1).add(&t(r, 0, 1)));
        let z = ConnModule::trivial(&ch, 2, Lambda::P);
        assert!(shiho_phi(&g, &z, 4).unwrap().a[0].is_zero());
    }

    fn nilpotent_gamma(r: Ring) -> GammaModule {
        // ψ_[k] = N^k / k! with N = [[0,1],[0,0]]
        let n = PolyMat::from_ints(r, 1, &[vec![0, 1], vec![0, 0]]);
        let mut psi = BTreeMap::new();
        psi.insert(idx_zero(1), PolyMat::identity(r, 1, 2));
        psi.insert(unit_idx(1, 0, 1), n);
        GammaModule::from_table(r, 1, 2, psi).unwrap()
    }

    #[test]
    fn glue_cocycle_and_horizontality() {
        let r = Ring::zp(3, 2);
        let up = r.at_level(3);
        let ch = Chart::affine(r, 1);
        let g = nilpotent_gamma(r);
        let gt = PolyMat::from_rows(vec![
            vec![t(r, 0, 1), t(r, 2, 1).add(&t(r, 1, 2))],
            vec![t(r, 0, 0), t(r, 0, 1)],
        ]);
        let g = g.gauge(&gt).unwrap();
        g.validate().unwrap();
        let strat = g.stratify();
        let m = g.p_connection(&ch);
        let f1 = FrobLift::standard(&ch);
        let f2 = FrobLift::from_corrections(&ch, &[t(up, 1, 1)]).unwrap();
        let f3 = FrobLift::from_corrections(&ch, &[t(up, 2, 2).add(&t(up, 0, 1))]).unwrap();
        assert!(verify_glue_cocycle(&f1, &f2, &f3, &strat).unwrap());
        assert!(glue_is_horizontal(&f1, &f2, &m, &strat, 10).unwrap());
        assert!(glue_is_horizontal(&f3, &f2, &m, &strat, 10).unwrap());
        assert!(glue_alpha(&f1, &f1, &strat).unwrap().is_identity());
    }

    #[test]
    fn dolbeault_chain_map() {
        let r = Ring::zp(5, 1);
        let ch = Chart::affine(r, 1);
        let n = PolyMat::from_rows(vec![vec![t(r, 0, 0), t(r, 1, 1)], vec![t(r, 0, 0), t(r, 0, 0)]]);
        let h = ConnModule::new(ch.clone(), Lambda::Higgs, vec![n]).unwrap();
        let f = FrobLift::standard(&ch);
        let dr = DolbeaultToDeRham::new(&f, &h, 4).unwrap();
        assert!(dr.check_chain_map(3).unwrap());
    }
}
