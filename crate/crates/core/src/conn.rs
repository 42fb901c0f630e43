//! Free modules with λ-connections, stratifications over the four Hopf
//! algebroids, p-curvature and cocycle checks.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::chart::{Chart, LaurentPoly, PolyMat};
use crate::pdhopf::{place, idx_total, idx_zero, indices_of_degree, unit_idx, Flavor, Idx, PDPoly};
use crate::ring::{Elem, Ring};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConnError {
    #[error("connection is not integrable")]
    NotIntegrable,
    #[error("nilpotence bound {bound} exceeded; surviving iterates {witnesses:?}")]
    NotNilpotent { bound: u32, witnesses: Vec<(Idx, usize)> },
    #[error("λ mismatch: expected {0:?}")]
    Lambda(Lambda),
    #[error("incompatible modules: {0}")]
    Mismatch(String),
    #[error("invalid divided-power action: {0}")]
    InvalidAction(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lambda {
    Higgs,
    P,
    One,
}

impl Lambda {
    pub fn value(self, r: &Ring) -> Elem {
        match self {
            Lambda::Higgs => 0,
            Lambda::P => r.p_pow(1),
            Lambda::One => 1,
        }
    }
}

/// Free module of rank r with ∇_{∂_i}(f e) = λ ∂_i(f) e + f A_i e.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnModule {
    pub chart: Chart,
    pub rank: usize,
    pub lambda: Lambda,
    pub a: Vec<PolyMat>,
}

pub type Vector = Vec<LaurentPoly>;

impl ConnModule {
    pub fn new(chart: Chart, lambda: Lambda, a: Vec<PolyMat>) -> Result<ConnModule, ConnError> {
        if a.len() != chart.d {
            return Err(ConnError::Mismatch(format!("{} matrices for d={}", a.len(), chart.d)));
        }
        let rank = a.first().map(|m| m.rows).unwrap_or(0);
        for m in &a {
            if m.rows != rank || m.cols != rank {
                return Err(ConnError::Mismatch("non-square connection matrix".into()));
            }
        }
        Ok(ConnModule {
            chart,
            rank,
            lambda,
            a,
        })
    }

    /// (O^r, λ d) with zero matrices.
    pub fn trivial(chart: &Chart, rank: usize, lambda: Lambda) -> ConnModule {
        let a = (0..chart.d)
            .map(|_| PolyMat::zeros(chart.ring, chart.d, rank, rank))
            .collect();
        ConnModule {
            chart: chart.clone(),
            rank,
            lambda,
            a,
        }
    }

    pub fn ring(&self) -> Ring {
        self.chart.ring
    }
    pub fn d(&self) -> usize {
        self.chart.d
    }

    pub fn basis_vector(&self, j: usize) -> Vector {
        (0..self.rank)
            .map(|k| {
                if k == j {
                    self.chart.one()
                } else {
                    self.chart.zero()
                }
            })
            .collect()
    }

    pub fn zero_vector(&self) -> Vector {
        vec![self.chart.zero(); self.rank]
    }

    pub fn nabla(&self, i: usize, v: &[LaurentPoly]) -> Vector {
        let lam = self.lambda.value(&self.ring());
        let mut out = self.a[i].mul_vec(v);
        if lam != 0 {
            for (o, x) in out.iter_mut().zip(v) {
                o.add_assign(&x.derive(i).scale(lam));
            }
        }
        out
    }

    /// ∇_{∂^I}: ∇_{∂_0}^{I_0} first, then ∇_{∂_1}^{I_1}, ...
    pub fn iterate_nabla(&self, multi: &[u32], v: &[LaurentPoly]) -> Vector {
        let mut w = v.to_vec();
        for (i, &k) in multi.iter().enumerate() {
            for _ in 0..k {
                w = self.nabla(i, &w);
            }
        }
        w
    }

    pub fn check_integrable(&self) -> bool {
        let lam = self.lambda.value(&self.ring());
        for i in 0..self.d() {
            for j in i + 1..self.d() {
                let curv = self.a[i]
                    .mul(&self.a[j])
                    .sub(&self.a[j].mul(&self.a[i]))
                    .add(&self.a[j].derive(i).sub(&self.a[i].derive(j)).scale(lam));
                if !curv.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// Matrix of ∇_{∂^I} on the basis (column j is ∇_{∂^I}(e_j)), for all I with
    /// |I| ≤ bound, built degree by degree.
    pub fn iterate_table(&self, bound: u32) -> BTreeMap<Idx, PolyMat> {
        let d = self.d();
        let mut table = BTreeMap::new();
        table.insert(idx_zero(d), PolyMat::identity(self.ring(), d, self.rank));
        for deg in 1..=bound {
            for idx in indices_of_degree(d, deg) {
                let j = (0..d).rev().find(|&k| idx[k] > 0).unwrap();
                let mut prev = idx.clone();
                prev[j] -= 1;
                let pm: &PolyMat = &table[&prev];
                let cols: Vec<Vector> = (0..self.rank).map(|c| self.nabla(j, &pm.col(c))).collect();
                let m = PolyMat::from_cols(self.ring(), d, self.rank, &cols);
                table.insert(idx, m);
            }
        }
        table
    }

    /// Smallest N ≤ bound with ∇_{∂^I}(e_j) = 0 for all |I| = N.
    pub fn quasi_nilpotence_order(&self, bound: u32) -> Result<u32, ConnError> {
        if self.rank == 0 {
            return Ok(0);
        }
        let d = self.d();
        let mut cur: BTreeMap<Idx, PolyMat> = BTreeMap::new();
        cur.insert(idx_zero(d), PolyMat::identity(self.ring(), d, self.rank));
        let mut witnesses = Vec::new();
        for deg in 1..=bound {
            let mut next = BTreeMap::new();
            for idx in indices_of_degree(d, deg) {
                let j = (0..d).rev().find(|&k| idx[k] > 0).unwrap();
                let mut prev = idx.clone();
                prev[j] -= 1;
                let pm = &cur[&prev];
                let cols: Vec<Vector> = (0..self.rank).map(|c| self.nabla(j, &pm.col(c))).collect();
                next.insert(idx, PolyMat::from_cols(self.ring(), d, self.rank, &cols));
            }
            if next.values().all(|m| m.is_zero()) {
                return Ok(deg);
            }
            witnesses = next
                .iter()
                .flat_map(|(i, m)| {
                    (0..self.rank)
                        .filter(|&c| m.col(c).iter().any(|x| !x.is_zero()))
                        .map(move |c| (i.clone(), c))
                })
                .take(8)
                .collect();
            cur = next;
        }
        Err(ConnError::NotNilpotent { bound, witnesses })
    }

    /// ψ_i = (∇_{∂_i})^p on the basis.
    pub fn p_curvature(&self) -> Result<Vec<PolyMat>, ConnError> {
        if self.lambda != Lambda::One {
            return Err(ConnError::Lambda(Lambda::One));
        }
        let p = self.ring().p() as u32;
        Ok((0..self.d())
            .map(|i| {
                let cols: Vec<Vector> = (0..self.rank)
                    .map(|j| self.iterate_nabla(&unit_idx(self.d(), i, p), &self.basis_vector(j)))
                    .collect();
                PolyMat::from_cols(self.ring(), self.d(), self.rank, &cols)
            })
            .collect())
    }

    pub fn tensor(&self, o: &ConnModule) -> Result<ConnModule, ConnError> {
        if self.lambda != o.lambda || self.chart.d != o.chart.d || self.ring() != o.ring() {
            return Err(ConnError::Mismatch("tensor of modules on different charts or λ".into()));
        }
        let r = self.ring();
        let d = self.d();
        let i1 = PolyMat::identity(r, d, self.rank);
        let i2 = PolyMat::identity(r, d, o.rank);
        let a = (0..d)
            .map(|i| self.a[i].kron(&i2).add(&i1.kron(&o.a[i])))
            .collect();
        ConnModule::new(self.chart.clone(), self.lambda, a)
    }

    /// Taylor table of the stratification: P flavor for λ = 1, T flavor for λ = p.
    pub fn stratify(&self, bound: u32) -> Result<StratTable, ConnError> {
        let flavor = match self.lambda {
            Lambda::One => Flavor::P,
            Lambda::P => Flavor::T,
            Lambda::Higgs => return Err(ConnError::Lambda(Lambda::One)),
        };
        let order = self.quasi_nilpotence_order(bound)?;
        let mut entries = self.iterate_table(order);
        entries.retain(|_, m| !m.is_zero());
        Ok(StratTable {
            flavor,
            ring: self.ring(),
            d: self.d(),
            rank: self.rank,
            entries,
        })
    }
}

/// Matrix f: M1 -> M2 is horizontal iff λ ∂_i(f) + A2_i f = f A1_i for every i.
pub fn check_horizontal(f: &PolyMat, m1: &ConnModule, m2: &ConnModule) -> Result<bool, ConnError> {
    if m1.lambda != m2.lambda || m1.d() != m2.d() {
        return Err(ConnError::Mismatch("horizontality between different λ or charts".into()));
    }
    if f.rows != m2.rank || f.cols != m1.rank {
        return Err(ConnError::Mismatch("matrix size".into()));
    }
    let lam = m1.lambda.value(&m1.ring());
    for i in 0..m1.d() {
        let lhs = f.derive(i).scale(lam).add(&m2.a[i].mul(f));
        let rhs = f.mul(&m1.a[i]);
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Divided-power operator action ψ_{∂^{[I]}} given as a finite table of matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaModule {
    pub ring: Ring,
    pub d: usize,
    pub rank: usize,
    pub psi: BTreeMap<Idx, PolyMat>,
}

impl GammaModule {
    pub fn from_table(ring: Ring, d: usize, rank: usize, psi: BTreeMap<Idx, PolyMat>) -> Result<Self, ConnError> {
        let g = GammaModule { ring, d, rank, psi };
        g.validate()?;
        Ok(g)
    }

    pub fn trivial(ring: Ring, d: usize, rank: usize) -> Self {
        let mut psi = BTreeMap::new();
        psi.insert(idx_zero(d), PolyMat::identity(ring, d, rank));
        GammaModule { ring, d, rank, psi }
    }

    pub fn get(&self, i: &[u32]) -> PolyMat {
        self.psi
            .get(i)
            .cloned()
            .unwrap_or_else(|| PolyMat::zeros(self.ring, self.d, self.rank, self.rank))
    }

    /// ψ_0 = id and the R-flavor cocycle identity; for constant tables this is
    /// ψ_{[I]} ψ_{[J]} = binom(I+J, I) ψ_{[I+J]}.
    pub fn validate(&self) -> Result<(), ConnError> {
        if !self.get(&idx_zero(self.d)).is_identity() {
            return Err(ConnError::InvalidAction("ψ_0 is not the identity".into()));
        }
        if !self.stratify().verify_cocycle() {
            return Err(ConnError::InvalidAction("cocycle identity fails".into()));
        }
        Ok(())
    }

    /// The p-connection with ∇_{∂_i}(e_j) = ψ_{[e_i]}(e_j).
    pub fn p_connection(&self, chart: &Chart) -> ConnModule {
        let a = (0..self.d).map(|i| self.get(&unit_idx(self.d, i, 1))).collect();
        ConnModule {
            chart: chart.clone(),
            rank: self.rank,
            lambda: Lambda::P,
            a,
        }
    }

    /// Gauge transform by an invertible matrix g: the new frame is e' = e g.
    pub fn gauge(&self, g: &PolyMat) -> Result<GammaModule, ConnError> {
        let gi = g
            .try_inverse()
            .ok_or_else(|| ConnError::InvalidAction("gauge matrix not invertible".into()))?;
        let bound = self.psi.keys().map(|k| idx_total(k)).max().unwrap_or(0) + self.ring.n() + 1;
        let tg = taylor_mat(Flavor::R, g, bound);
        let mut psi: BTreeMap<Idx, PolyMat> = BTreeMap::new();
        for (a, th) in &self.psi {
            for (k, gk) in &tg {
                let key: Idx = a.iter().zip(k.iter()).map(|(x, y)| x + y).collect();
                let term = gi.mul(th).mul(gk);
                let e = psi
                    .entry(key)
                    .or_insert_with(|| PolyMat::zeros(self.ring, self.d, self.rank, self.rank));
                *e = e.add(&term);
            }
        }
        psi.retain(|_, m| !m.is_zero());
        Ok(GammaModule {
            ring: self.ring,
            d: self.d,
            rank: self.rank,
            psi,
        })
    }

    /// R-flavor stratification ε(1⊗m) = Σ ψ_{[I]}(m) ⊗ ζ^I.
    pub fn stratify(&self) -> StratTable {
        let mut entries = self.psi.clone();
        entries.retain(|_, m| !m.is_zero());
        StratTable {
            flavor: Flavor::R,
            ring: self.ring,
            d: self.d,
            rank: self.rank,
            entries,
        }
    }
}

/// Q-flavor stratification of a connection together with a divided-power action:
/// Σ (-1)^{|J|} (1/I!) ∇_{∂^I} ψ_{[J]} ⊗ ξ^I η^J with I in [0, p-1]^d.
pub fn stratify_q(m: &ConnModule, psi: &GammaModule) -> Result<StratTable, ConnError> {
    if m.lambda != Lambda::One {
        return Err(ConnError::Lambda(Lambda::One));
    }
    let r = m.ring();
    let d = m.d();
    let p = r.p() as u32;
    if r.n() == 1 {
        let curv = m.p_curvature()?;
        for (i, c) in curv.iter().enumerate() {
            if psi.get(&unit_idx(d, i, 1)) != *c {
                return Err(ConnError::InvalidAction(format!(
                    "ψ_{{∂'{}}} differs from the p-curvature",
                    i + 1
                )));
            }
        }
    }
    let mut entries = BTreeMap::new();
    let small: Vec<Idx> = (0..=(d as u32) * (p - 1))
        .flat_map(|k| indices_of_degree(d, k))
        .filter(|i| i.iter().all(|&x| x < p))
        .collect();
    for (j, pj) in &psi.psi {
        let sign = if idx_total(j) % 2 == 1 { r.neg(1) } else { 1 };
        for i in &small {
            let parts: Vec<u64> = i.iter().map(|&x| x as u64).collect();
            let c = r.inv_multifactorial(&parts).expect("I_k < p");
            let cols: Vec<Vector> = (0..m.rank).map(|c| m.iterate_nabla(i, &pj.col(c))).collect();
            let mat = PolyMat::from_cols(r, d, m.rank, &cols).scale(r.mul(c, sign));
            if !mat.is_zero() {
                let mut key = idx_zero(2 * d);
                key[..d].copy_from_slice(i);
                key[d..].copy_from_slice(j);
                entries.insert(key, mat);
            }
        }
    }
    Ok(StratTable {
        flavor: Flavor::Q,
        ring: r,
        d,
        rank: m.rank,
        entries,
    })
}

/// Taylor coefficients ε(1⊗e_j) = Σ_k Σ_I (θ_I)_{kj} e_k ⊗ basis_I.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratTable {
    pub flavor: Flavor,
    pub ring: Ring,
    pub d: usize,
    pub rank: usize,
    pub entries: BTreeMap<Idx, PolyMat>,
}

fn weight(flavor: Flavor, idx: &[u32], p: u32) -> u32 {
    if flavor == Flavor::Q {
        let h = idx.len() / 2;
        idx[..h].iter().sum::<u32>() + p * idx[h..].iter().sum::<u32>()
    } else {
        idx_total(idx)
    }
}

/// Expansion of f(x + ξ) in the PD variables of the given flavor, up to weight `bound`.
pub fn taylor(flavor: Flavor, f: &LaurentPoly, bound: u32) -> Vec<(Idx, LaurentPoly)> {
    let r = f.ring();
    let d = f.nvars();
    let p = r.p() as u32;
    let mut out = Vec::new();
    for deg in 0..=bound {
        for k in indices_of_degree(d, deg) {
            let (idx, g) = match flavor {
                Flavor::P => (k.clone(), f.apply_diffop(&k)),
                Flavor::T => (k.clone(), f.apply_diffop(&k).scale(r.p_pow(deg))),
                Flavor::R => (k.clone(), f.apply_divided_diffop(&k).scale(r.p_pow(deg))),
                Flavor::Q => {
                    let mut idx = idx_zero(2 * d);
                    let mut pe = 0;
                    for t in 0..d {
                        idx[t] = k[t] % p;
                        idx[d + t] = k[t] / p;
                        pe += k[t] / p;
                    }
                    (idx, f.apply_divided_diffop(&k).scale(r.p_pow(pe)))
                }
            };
            if !g.is_zero() && weight(flavor, &idx, p) <= bound {
                out.push((idx, g));
            }
        }
    }
    out
}

pub fn taylor_mat(flavor: Flavor, m: &PolyMat, bound: u32) -> BTreeMap<Idx, PolyMat> {
    let mut out: BTreeMap<Idx, PolyMat> = BTreeMap::new();
    for i in 0..m.rows {
        for j in 0..m.cols {
            for (idx, g) in taylor(flavor, m.get(i, j), bound) {
                let e = out
                    .entry(idx)
                    .or_insert_with(|| PolyMat::zeros(m.ring, m.nvars, m.rows, m.cols));
                let v = e.get(i, j).add(&g);
                e.set(i, j, v);
            }
        }
    }
    out
}

/// Index of a two-factor tensor from the two single-factor indices.
fn two_factor(flavor: Flavor, a: &[u32], b: &[u32], d: usize) -> Idx {
    let pa = place(flavor, a, d, 0, 2);
    let pb = place(flavor, b, d, 1, 2);
    pa.iter().zip(pb.iter()).map(|(x, y)| x + y).collect()
}

fn mul_in_flavor(flavor: Flavor, r: &Ring, a: &[u32], b: &[u32]) -> Vec<(Idx, Elem)> {
    let x = PDPoly::basis(flavor, *r, 0, a.iter().copied().collect());
    let y = PDPoly::basis(flavor, *r, 0, b.iter().copied().collect());
    x.mul(&y)
        .expect("same flavor")
        .terms()
        .iter()
        .map(|((i, _), &c)| (i.clone(), c))
        .collect()
}

impl StratTable {
    pub fn get(&self, i: &[u32]) -> PolyMat {
        self.entries
            .get(i)
            .cloned()
            .unwrap_or_else(|| PolyMat::zeros(self.ring, self.d, self.rank, self.rank))
    }

    pub fn max_weight(&self) -> u32 {
        let p = self.ring.p() as u32;
        self.entries
            .keys()
            .map(|k| weight(self.flavor, k, p))
            .max()
            .unwrap_or(0)
    }

    pub fn counit_ok(&self) -> bool {
        let zero = idx_zero(self.d * if self.flavor == Flavor::Q { 2 } else { 1 });
        self.get(&zero).is_identity()
    }

    /// Checks the counit law and δ^*(ε) = ε(x,y) ε(y,z), where the coefficients of
    /// the second factor are moved to the left via the Taylor expansion.
    pub fn verify_cocycle(&self) -> bool {
        if !self.counit_ok() {
            return false;
        }
        let r = self.ring;
        let p = r.p() as u32;
        let bound = self.max_weight() + 2;
        let zero = || PolyMat::zeros(self.ring, self.d, self.rank, self.rank);
        let mut lhs: BTreeMap<Idx, PolyMat> = BTreeMap::new();
        for (i, th) in &self.entries {
            let b = PDPoly::basis(self.flavor, r, self.d, i.clone());
            for ((k, _), &c) in b.comult().terms() {
                let e = lhs.entry(k.clone()).or_insert_with(zero);
                *e = e.add(&th.scale(c));
            }
        }
        // second factor: θ_J(y) basis_J(ξ2), with θ_J(y) expanded in ξ1
        let mut second: Vec<(Idx, Idx, PolyMat)> = Vec::new();
        for (j, th) in &self.entries {
            for (k, tk) in taylor_mat(self.flavor, th, bound) {
                second.push((k, j.clone(), tk));
            }
        }
        let mut rhs: BTreeMap<Idx, PolyMat> = BTreeMap::new();
        for (a, tha) in &self.entries {
            for (k, j, tk) in &second {
                if weight(self.flavor, a, p) + weight(self.flavor, k, p) + weight(self.flavor, j, p) > bound {
                    continue;
                }
                let prod = tha.mul(tk);
                if prod.is_zero() {
                    continue;
                }
                for (ak, c) in mul_in_flavor(self.flavor, &r, a, k) {
                    let key = two_factor(self.flavor, &ak, j, self.d);
                    let e = rhs.entry(key).or_insert_with(zero);
                    *e = e.add(&prod.scale(c));
                }
            }
        }
        lhs.retain(|_, m| !m.is_zero());
        rhs.retain(|_, m| !m.is_zero());
        let w2 = |k: &Idx| weight(self.flavor, k, p);
        let l: BTreeMap<_, _> = lhs.into_iter().filter(|(k, _)| w2(k) <= bound).collect();
        let rr: BTreeMap<_, _> = rhs.into_iter().filter(|(k, _)| w2(k) <= bound).collect();
        l == rr
    }
}

/// Module-valued differential forms: index-subset bitmask to coefficient vector.
pub type FormVec = BTreeMap<u32, Vector>;

/// Twisted de Rham differential x ↦ Σ_i dt_i ∧ ∇_{∂_i}(x).
pub fn twisted_d(m: &ConnModule, x: &FormVec) -> FormVec {
    let mut out: FormVec = BTreeMap::new();
    for (&mask, v) in x {
        for i in 0..m.d() {
            if let Some((nm, sgn)) = crate::chart::forms::wedge_left(i, mask) {
                let w = m.nabla(i, v);
                let e = out.entry(nm).or_insert_with(|| m.zero_vector());
                for (a, b) in e.iter_mut().zip(&w) {
                    a.add_assign(&b.scale_int(sgn));
                }
            }
        }
    }
    out.retain(|_, v| v.iter().any(|x| !x.is_zero()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(r: Ring, d: usize, x: i64) -> LaurentPoly {
        LaurentPoly::constant(r, d, r.from_int(x))
    }

    #[test]
    fn integrability_examples() {
        let r = Ring::zp(3, 1);
        let ch = Chart::affine(r, 2);
        let t2 = ch.var(1);
        let a1 = PolyMat::scalar(r, 2, 1, &t2);
        let a2 = PolyMat::zeros(r, 2, 1, 1);
        let m = ConnModule::new(ch.clone(), Lambda::One, vec![a1, a2]).unwrap();
        assert!(!m.check_integrable());
        let n = PolyMat::from_ints(r, 2, &[vec![0, 1], vec![0, 0]]);
        let h = ConnModule::new(ch, Lambda::Higgs, vec![n.clone(), n.scale(2)]).unwrap();
        assert!(h.check_integrable());
    }

    #[test]
    fn iterates_and_curvature() {
        let r = Ring::zp(2, 1);
        let ch = Chart::affine(r, 1);
        let m = ConnModule::new(ch.clone(), Lambda::One, vec![PolyMat::scalar(r, 1, 1, &ch.var(0))]).unwrap();
        let e = m.basis_vector(0);
        assert_eq!(m.iterate_nabla(&[1], &e), vec![ch.var(0)]);
        let want = ch.one().add(&ch.var(0).pow(2));
        assert_eq!(m.iterate_nabla(&[2], &e), vec![want.clone()]);
        assert_eq!(m.p_curvature().unwrap()[0].get(0, 0), &want);
        assert!(m.quasi_nilpotence_order(12).is_err());

        let r = Ring::zp(5, 2);
        let ch = Chart::affine(r, 1);
        let m = ConnModule::new(ch, Lambda::One, vec![PolyMat::scalar(r, 1, 1, &c(r, 1, 5))]).unwrap();
        assert_eq!(m.quasi_nilpotence_order(5).unwrap(), 2);
        let s = m.stratify(5).unwrap();
        assert_eq!(s.entries.len(), 2);
        assert!(s.verify_cocycle());
    }

    #[test]
    fn corrupted_table() {
        let r = Ring::zp(3, 2);
        let ch = Chart::affine(r, 1);
        let t = ch.var(0);
        let a = PolyMat::from_rows(vec![vec![ch.zero(), t.clone()], vec![ch.zero(), ch.zero()]]);
        let m = ConnModule::new(ch, Lambda::One, vec![a]).unwrap();
        let mut s = m.stratify(10).unwrap();
        assert!(s.verify_cocycle());
        let k = unit_idx(1, 0, 1);
        let bad = s.entries[&k].add(&PolyMat::identity(r, 1, 2).scale(3));
        s.entries.insert(k, bad);
        assert!(!s.verify_cocycle());
    }
}
