//! Divided-power polynomial algebras over a chart and the local Hopf algebroids
//! P (divided powers of ξ), R (polynomials in ζ = ξ/p), T (divided powers of ξ/p)
//! and Q (ξ with ξ^p = p η).

use std::collections::BTreeMap;

use smallvec::SmallVec;
use thiserror::Error;

use crate::chart::{ChartError, Exps, FrobLift, LaurentPoly};
use crate::ring::{Elem, Ring, RingError};

pub type Idx = SmallVec<[u32; 4]>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PdError {
    #[error("flavor mismatch: {0:?} vs {1:?}")]
    Flavor(Flavor, Flavor),
    #[error("element is not in the divided-power ideal of order {0}")]
    OutsideIdeal(u32),
    #[error("operation is only defined at level 1")]
    Level,
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    P,
    R,
    T,
    Q,
}

impl Flavor {
    /// Number of index slots per PD variable.
    fn slots(self) -> usize {
        if self == Flavor::Q {
            2
        } else {
            1
        }
    }
}

/// Finite sum of c · (PD monomial) · (Laurent monomial).
///
/// For Q flavor the index holds ξ-exponents followed by η-exponents.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PDPoly {
    pub flavor: Flavor,
    pub ring: Ring,
    pub d: usize,
    pub m: usize,
    terms: BTreeMap<(Idx, Exps), Elem>,
}

pub fn idx_zero(len: usize) -> Idx {
    SmallVec::from_elem(0, len)
}

pub fn unit_idx(len: usize, i: usize, k: u32) -> Idx {
    let mut e = idx_zero(len);
    e[i] = k;
    e
}

/// All multi-indices of length `len` with total degree exactly `deg`.
pub fn indices_of_degree(len: usize, deg: u32) -> Vec<Idx> {
    let mut out = Vec::new();
    let mut cur = idx_zero(len);
    fn rec(pos: usize, left: u32, cur: &mut Idx, out: &mut Vec<Idx>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            cur[pos] = 0;
            return;
        }
        for k in (0..=left).rev() {
            cur[pos] = k;
            rec(pos + 1, left - k, cur, out);
        }
        cur[pos] = 0;
    }
    if len == 0 {
        if deg == 0 {
            out.push(cur);
        }
        return out;
    }
    rec(0, deg, &mut cur, &mut out);
    out
}

/// All multi-indices of total degree ≤ deg.
pub fn indices_up_to(len: usize, deg: u32) -> Vec<Idx> {
    (0..=deg).flat_map(|k| indices_of_degree(len, k)).collect()
}

pub fn idx_total(i: &[u32]) -> u32 {
    i.iter().sum()
}

/// prod binom(I_k + J_k, I_k) reduced into the ring.
pub fn idx_binom(r: &Ring, i: &[u32], j: &[u32]) -> Elem {
    let mut acc = r.one();
    for (a, b) in i.iter().zip(j) {
        acc = r.mul(acc, r.binom((a + b) as u64, *a as u64));
    }
    acc
}

fn idx_add(a: &[u32], b: &[u32]) -> Idx {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn exps_add(a: &[i32], b: &[i32]) -> Exps {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl PDPoly {
    pub fn zero(flavor: Flavor, ring: Ring, d: usize, m: usize) -> Self {
        PDPoly {
            flavor,
            ring,
            d,
            m,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(flavor: Flavor, ring: Ring, d: usize, m: usize) -> Self {
        let mut x = Self::zero(flavor, ring, d, m);
        x.add_term(idx_zero(m * flavor.slots()), SmallVec::from_elem(0, d), 1);
        x
    }

    /// The basis element of the given PD index with coefficient 1.
    pub fn basis(flavor: Flavor, ring: Ring, d: usize, idx: Idx) -> Self {
        let m = idx.len() / flavor.slots();
        let mut x = Self::zero(flavor, ring, d, m);
        x.add_term(idx, SmallVec::from_elem(0, d), 1);
        x
    }

    /// Generator number i (ξ_i, ζ_i, (ξ/p)_i or ξ_i for Q).
    pub fn gen(flavor: Flavor, ring: Ring, d: usize, m: usize, i: usize) -> Self {
        Self::basis(flavor, ring, d, unit_idx(m * flavor.slots(), i, 1))
    }

    /// η_i in the Q flavor.
    pub fn eta(ring: Ring, d: usize, m: usize, i: usize) -> Self {
        Self::basis(Flavor::Q, ring, d, unit_idx(2 * m, m + i, 1))
    }

    pub fn from_laurent(flavor: Flavor, f: &LaurentPoly, m: usize) -> Self {
        let mut x = Self::zero(flavor, f.ring(), f.nvars(), m);
        for (e, &c) in f.terms() {
            x.add_term(idx_zero(m * flavor.slots()), e.clone(), c);
        }
        x
    }

    pub fn terms(&self) -> &BTreeMap<(Idx, Exps), Elem> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, idx: Idx, e: Exps, c: Elem) {
        if c == 0 {
            return;
        }
        let r = self.ring;
        let key = (idx, e);
        let v = self.terms.get(&key).copied().unwrap_or(0);
        let s = r.add(v, c);
        if s == 0 {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, s);
        }
    }

    /// Laurent coefficient of a PD basis element.
    pub fn coefficient(&self, idx: &[u32]) -> LaurentPoly {
        let mut f = LaurentPoly::zero(self.ring, self.d);
        for ((i, e), &c) in &self.terms {
            if i.as_slice() == idx {
                f.add_term(e.clone(), c);
            }
        }
        f
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for ((i, e), &c) in &o.terms {
            out.add_term(i.clone(), e.clone(), c);
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(self.ring.neg(1)))
    }

    pub fn scale(&self, c: Elem) -> Self {
        let mut out = Self::zero(self.flavor, self.ring, self.d, self.m);
        for ((i, e), &x) in &self.terms {
            out.add_term(i.clone(), e.clone(), self.ring.mul(x, c));
        }
        out
    }

    /// Product in the flavor's rewriting system.
    pub fn mul(&self, o: &Self) -> Result<Self, PdError> {
        if self.flavor != o.flavor {
            return Err(PdError::Flavor(self.flavor, o.flavor));
        }
        let r = self.ring;
        let mut out = Self::zero(self.flavor, r, self.d, self.m);
        for ((i1, e1), &c1) in &self.terms {
            for ((i2, e2), &c2) in &o.terms {
                let c = r.mul(c1, c2);
                if c == 0 {
                    continue;
                }
                let e = exps_add(e1, e2);
                for (idx, k) in mul_basis(self.flavor, &r, self.m, i1, i2) {
                    out.add_term(idx, e.clone(), r.mul(c, k));
                }
            }
        }
        Ok(out)
    }

    /// Augmentation: sets all PD variables to 0.
    pub fn counit(&self) -> LaurentPoly {
        self.coefficient(&idx_zero(self.m * self.flavor.slots()))
    }

    pub fn antipode(&self) -> Self {
        let r = self.ring;
        let p = r.p();
        let mut out = Self::zero(self.flavor, r, self.d, self.m);
        for ((i, e), &c) in &self.terms {
            let odd = match self.flavor {
                Flavor::Q => {
                    let a: u32 = i[..self.m].iter().sum();
                    let b: u32 = i[self.m..].iter().sum();
                    // ξ -> -ξ, η -> (-ξ)^p / p = (-1)^p η
                    (a + b * (p as u32 % 2)) % 2 == 1
                }
                _ => idx_total(i) % 2 == 1,
            };
            out.add_term(i.clone(), e.clone(), if odd { r.neg(c) } else { c });
        }
        out
    }

    /// Comultiplication, landing in the tensor square represented with 2m variables
    /// (left factor first). Laurent coefficients stay on the left.
    pub fn comult(&self) -> PDPoly {
        let r = self.ring;
        let m = self.m;
        let mut out = PDPoly::zero(self.flavor, r, self.d, 2 * m);
        for ((i, e), &c) in &self.terms {
            let img = comult_basis(self.flavor, &r, self.d, m, i);
            for ((j, _), &k) in &img.terms {
                out.add_term(j.clone(), e.clone(), r.mul(c, k));
            }
        }
        out
    }

    /// Embeds into a tensor factor: slot 0 (left) or 1 (right) among `factors`.
    pub fn embed_factor(&self, factor: usize, factors: usize) -> PDPoly {
        let m = self.m;
        let mut out = PDPoly::zero(self.flavor, self.ring, self.d, m * factors);
        for ((i, e), &c) in &self.terms {
            out.add_term(place(self.flavor, i, m, factor, factors), e.clone(), c);
        }
        out
    }

    /// (δ ⊗ id) or (id ⊗ δ) applied to an element of the tensor square.
    pub fn comult_on_factor(&self, factor: usize) -> PDPoly {
        let m = self.m / 2;
        let r = self.ring;
        let slots = self.flavor.slots();
        let mut out = PDPoly::zero(self.flavor, r, self.d, 3 * m);
        for ((i, e), &c) in &self.terms {
            let (left, right) = split(self.flavor, i, m);
            let (to_split, other) = if factor == 0 { (&left, &right) } else { (&right, &left) };
            let img = comult_basis(self.flavor, &r, self.d, m, to_split);
            let other_placed = place(self.flavor, other, m, if factor == 0 { 2 } else { 0 }, 3);
            for ((j, _), &k) in &img.terms {
                let (a, b) = split(self.flavor, j, m);
                let (fa, fb) = if factor == 0 { (0, 1) } else { (1, 2) };
                let pa = place(self.flavor, &a, m, fa, 3);
                let pb = place(self.flavor, &b, m, fb, 3);
                let mut idx = idx_zero(3 * m * slots);
                for t in 0..idx.len() {
                    idx[t] = pa[t] + pb[t] + other_placed[t];
                }
                out.add_term(idx, e.clone(), r.mul(c, k));
            }
        }
        out
    }

    pub fn to_ring(&self, target: Ring) -> PDPoly {
        let mut out = PDPoly::zero(self.flavor, target, self.d, self.m);
        for ((i, e), &c) in &self.terms {
            out.add_term(i.clone(), e.clone(), self.ring.reduce_to(c, &target));
        }
        out
    }
}

/// Multiplies two basis elements of the given flavor.
fn mul_basis(flavor: Flavor, r: &Ring, m: usize, a: &[u32], b: &[u32]) -> Vec<(Idx, Elem)> {
    match flavor {
        Flavor::P | Flavor::T => vec![(idx_add(a, b), idx_binom(r, a, b))],
        Flavor::R => vec![(idx_add(a, b), r.one())],
        Flavor::Q => {
            let p = r.p() as u32;
            let mut idx = idx_add(a, b);
            let mut c = r.one();
            for k in 0..m {
                while idx[k] >= p {
                    idx[k] -= p;
                    idx[m + k] += 1;
                    c = r.mul(c, r.from_int(p as i64));
                }
            }
            if c == 0 {
                vec![]
            } else {
                vec![(idx, c)]
            }
        }
    }
}

/// Places a single-factor index into factor `f` of a `factors`-fold tensor.
pub(crate) fn place(flavor: Flavor, i: &[u32], m: usize, f: usize, factors: usize) -> Idx {
    let slots = flavor.slots();
    let mut out = idx_zero(m * factors * slots);
    for s in 0..slots {
        for k in 0..m {
            out[s * m * factors + f * m + k] = i[s * m + k];
        }
    }
    out
}

fn split(flavor: Flavor, i: &[u32], m: usize) -> (Idx, Idx) {
    let slots = flavor.slots();
    let mut a = idx_zero(m * slots);
    let mut b = idx_zero(m * slots);
    for s in 0..slots {
        for k in 0..m {
            a[s * m + k] = i[s * 2 * m + k];
            b[s * m + k] = i[s * 2 * m + m + k];
        }
    }
    (a, b)
}

fn comult_basis(flavor: Flavor, r: &Ring, d: usize, m: usize, i: &[u32]) -> PDPoly {
    match flavor {
        Flavor::P | Flavor::T => {
            let mut out = PDPoly::zero(flavor, *r, d, 2 * m);
            let mut beta = idx_zero(m);
            loop {
                let rest: Idx = i.iter().zip(beta.iter()).map(|(a, b)| a - b).collect();
                let mut idx = idx_zero(2 * m);
                for k in 0..m {
                    idx[k] = beta[k];
                    idx[m + k] = rest[k];
                }
                out.add_term(idx, SmallVec::from_elem(0, d), 1);
                // next beta <= i
                let mut k = 0;
                loop {
                    if k == m {
                        return out;
                    }
                    if beta[k] < i[k] {
                        beta[k] += 1;
                        break;
                    }
                    beta[k] = 0;
                    k += 1;
                }
            }
        }
        Flavor::R | Flavor::Q => {
            let mut acc = PDPoly::one(flavor, *r, d, 2 * m);
            for k in 0..m {
                let xi_l = PDPoly::gen(flavor, *r, d, 2 * m, k);
                let xi_r = PDPoly::gen(flavor, *r, d, 2 * m, m + k);
                let dxi = xi_l.add(&xi_r);
                for _ in 0..i[k] {
                    acc = acc.mul(&dxi).unwrap();
                }
                if flavor == Flavor::Q {
                    let p = r.p() as u32;
                    let mut deta = PDPoly::eta(*r, d, 2 * m, k).add(&PDPoly::eta(*r, d, 2 * m, m + k));
                    for j in 1..p {
                        // (p-1)!/(j!(p-j)!) = binom(p, j)/p
                        let c = r.from_i128((crate::ring::binom_exact(p as u64, j as u64) / p as u128) as i128);
                        let mut idx = idx_zero(4 * m);
                        idx[k] = j;
                        idx[m + k] = p - j;
                        deta.add_term(idx, SmallVec::from_elem(0, d), c);
                    }
                    for _ in 0..i[m + k] {
                        acc = acc.mul(&deta).unwrap();
                    }
                }
            }
            acc
        }
    }
}

/// s^i: P -> R, ξ^[I] -> (p^{|I|-i}/I!) ζ^I.
pub fn map_s(x: &PDPoly, i: u32) -> Result<PDPoly, PdError> {
    if x.flavor != Flavor::P {
        return Err(PdError::Flavor(x.flavor, Flavor::P));
    }
    let r = x.ring;
    let mut out = PDPoly::zero(Flavor::R, r, x.d, x.m);
    for ((idx, e), &c) in x.terms() {
        let tot = idx_total(idx);
        if tot < i {
            return Err(PdError::OutsideIdeal(i));
        }
        let parts: Vec<u64> = idx.iter().map(|&k| k as u64).collect();
        let k = r
            .p_pow_over_multifactorial(tot - i, &parts)
            .map_err(|_| PdError::OutsideIdeal(i))?;
        out.add_term(idx.clone(), e.clone(), r.mul(c, k));
    }
    Ok(out)
}

/// u: Q -> P at level 1, ξ -> ξ, η -> -ξ^[p].
pub fn map_u(x: &PDPoly) -> Result<PDPoly, PdError> {
    if x.flavor != Flavor::Q {
        return Err(PdError::Flavor(x.flavor, Flavor::Q));
    }
    let r = x.ring;
    if r.n() != 1 {
        return Err(PdError::Level);
    }
    let p = r.p() as u32;
    let m = x.m;
    let mut out = PDPoly::zero(Flavor::P, r, x.d, m);
    for ((idx, e), &c) in x.terms() {
        let mut img = PDPoly::one(Flavor::P, r, x.d, m);
        for k in 0..m {
            let xi = PDPoly::gen(Flavor::P, r, x.d, m, k);
            let eta = PDPoly::basis(Flavor::P, r, x.d, unit_idx(m, k, p)).scale(r.neg(1));
            for _ in 0..idx[k] {
                img = img.mul(&xi)?;
            }
            for _ in 0..idx[m + k] {
                img = img.mul(&eta)?;
            }
        }
        for ((j, _), &k) in img.terms() {
            out.add_term(j.clone(), e.clone(), r.mul(c, k));
        }
    }
    Ok(out)
}

/// v: Q -> F^*(R') at level 1, ξ -> 0, η -> ζ'.
pub fn map_v(x: &PDPoly, f: &FrobLift) -> Result<PDPoly, PdError> {
    if x.flavor != Flavor::Q {
        return Err(PdError::Flavor(x.flavor, Flavor::Q));
    }
    let r = x.ring;
    if r.n() != 1 {
        return Err(PdError::Level);
    }
    if f.d() != x.d {
        return Err(PdError::Chart(ChartError::Arity(f.d(), x.d)));
    }
    let m = x.m;
    let mut out = PDPoly::zero(Flavor::R, r, x.d, m);
    for ((idx, e), &c) in x.terms() {
        if idx[..m].iter().any(|&a| a > 0) {
            continue;
        }
        out.add_term(idx[m..].iter().copied().collect(), e.clone(), c);
    }
    Ok(out)
}

/// Finite sum of c_I ∂^I (ordinary) or c_I ∂^{[I]} (divided).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualOperator {
    pub divided: bool,
    pub terms: BTreeMap<Idx, LaurentPoly>,
}

impl DualOperator {
    pub fn basis(divided: bool, idx: Idx, coeff: LaurentPoly) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(idx, coeff);
        DualOperator { divided, terms }
    }

    /// Composition, assuming coefficients commute with the operators (constants).
    pub fn compose(&self, o: &Self) -> Self {
        let mut terms: BTreeMap<Idx, LaurentPoly> = BTreeMap::new();
        for (i, a) in &self.terms {
            for (j, b) in &o.terms {
                let k = idx_add(i, j);
                let mut c = a.mul(b);
                if self.divided {
                    c = c.scale(idx_binom(&a.ring(), i, j));
                }
                let e = terms.entry(k).or_insert_with(|| LaurentPoly::zero(a.ring(), a.nvars()));
                e.add_assign(&c);
            }
        }
        terms.retain(|_, v| !v.is_zero());
        DualOperator {
            divided: self.divided,
            terms,
        }
    }
}

/// ⟨∂^I, ξ^[J]⟩ = δ_{IJ} (P flavor) and ⟨∂^{[I]}, ζ^J⟩ = δ_{IJ} (R flavor).
pub fn pair(op: &DualOperator, x: &PDPoly) -> Result<LaurentPoly, PdError> {
    let ok = matches!(
        (op.divided, x.flavor),
        (false, Flavor::P) | (true, Flavor::R) | (true, Flavor::T)
    );
    if !ok {
        return Err(PdError::Flavor(x.flavor, if op.divided { Flavor::R } else { Flavor::P }));
    }
    let mut out = LaurentPoly::zero(x.ring, x.d);
    for (i, c) in &op.terms {
        out.add_assign(&c.mul(&x.coefficient(i)));
    }
    Ok(out)
}

/// Pairing of a product of operators with x through the comultiplication.
pub fn pair_convolution(a: &DualOperator, b: &DualOperator, x: &PDPoly) -> Result<LaurentPoly, PdError> {
    let dx = x.comult();
    let m = x.m;
    let mut out = LaurentPoly::zero(x.ring, x.d);
    for ((idx, e), &c) in dx.terms() {
        let (l, r) = split(x.flavor, idx, m);
        let (Some(ca), Some(cb)) = (a.terms.get(&l), b.terms.get(&r)) else {
            continue;
        };
        let mono = LaurentPoly::monomial(x.ring, e.clone(), c);
        out.add_assign(&mono.mul(ca).mul(cb));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products() {
        let r = Ring::zp(5, 2);
        let x = PDPoly::gen(Flavor::P, r, 1, 1, 0);
        assert_eq!(
            x.mul(&x).unwrap(),
            PDPoly::basis(Flavor::P, r, 1, unit_idx(1, 0, 2)).scale(2)
        );
        let r1 = Ring::zp(5, 1);
        let a = PDPoly::basis(Flavor::P, r1, 1, unit_idx(1, 0, 2));
        let b = PDPoly::basis(Flavor::P, r1, 1, unit_idx(1, 0, 3));
        assert!(a.mul(&b).unwrap().is_zero());
        let xi = PDPoly::gen(Flavor::Q, r, 1, 1, 0);
        let xi4 = PDPoly::basis(Flavor::Q, r, 1, SmallVec::from_vec(vec![4, 0]));
        assert_eq!(xi4.mul(&xi).unwrap(), PDPoly::eta(r, 1, 1, 0).scale(5));
    }

    #[test]
    fn comultiplication() {
        let r = Ring::zp(2, 2);
        let x2 = PDPoly::basis(Flavor::P, r, 1, unit_idx(1, 0, 2));
        let d = x2.comult();
        assert_eq!(d.terms().len(), 3);
        let eta = PDPoly::eta(r, 1, 1, 0);
        let de = eta.comult();
        let mut want = PDPoly::zero(Flavor::Q, r, 1, 2);
        for idx in [[0, 0, 1, 0], [0, 0, 0, 1], [1, 1, 0, 0]] {
            want.add_term(SmallVec::from_slice(&idx), SmallVec::from_elem(0, 1), 1);
        }
        assert_eq!(de, want);
    }

    #[test]
    fn s_maps() {
        let r = Ring::zp(2, 2);
        let x1 = PDPoly::gen(Flavor::P, r, 1, 1, 0);
        assert_eq!(map_s(&x1, 0).unwrap(), PDPoly::gen(Flavor::R, r, 1, 1, 0).scale(2));
        let x2 = PDPoly::basis(Flavor::P, r, 1, unit_idx(1, 0, 2));
        assert_eq!(
            map_s(&x2, 1).unwrap(),
            PDPoly::basis(Flavor::R, r, 1, unit_idx(1, 0, 2))
        );
        assert!(map_s(&x1, 2).is_err());
    }
}
