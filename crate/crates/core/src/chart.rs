//! Framed Laurent-polynomial charts, substitutions, Frobenius lifts and atlases.

use std::collections::BTreeMap;
use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

use crate::ring::{Elem, Ring, RingError};

pub type Exps = SmallVec<[i32; 4]>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChartError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("not a unit: {0}")]
    NotUnit(String),
    #[error("invalid Frobenius lift: {0}")]
    InvalidLift(String),
    #[error("variable count mismatch: {0} vs {1}")]
    Arity(usize, usize),
    #[error("negative exponent on non-invertible coordinate {0}")]
    NotInvertible(usize),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

/// Sparse Laurent polynomial over a coefficient ring.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    ring: Ring,
    nvars: usize,
    terms: BTreeMap<Exps, Elem>,
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&default_names(self.nvars)))
    }
}

pub fn default_names(n: usize) -> Vec<String> {
    if n == 1 {
        vec!["t".into()]
    } else {
        (1..=n).map(|i| format!("t{i}")).collect()
    }
}

impl LaurentPoly {
    pub fn zero(ring: Ring, nvars: usize) -> Self {
        LaurentPoly {
            ring,
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ring: Ring, nvars: usize, c: Elem) -> Self {
        let mut p = Self::zero(ring, nvars);
        if c != 0 {
            p.terms.insert(SmallVec::from_elem(0, nvars), c);
        }
        p
    }

    pub fn one(ring: Ring, nvars: usize) -> Self {
        Self::constant(ring, nvars, 1)
    }

    pub fn var(ring: Ring, nvars: usize, i: usize) -> Self {
        let mut e: Exps = SmallVec::from_elem(0, nvars);
        e[i] = 1;
        Self::monomial(ring, e, 1)
    }

    pub fn monomial(ring: Ring, exps: Exps, c: Elem) -> Self {
        let nvars = exps.len();
        let mut p = Self::zero(ring, nvars);
        if c != 0 {
            p.terms.insert(exps, c);
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<i32>, i64)>>(
        ring: Ring,
        nvars: usize,
        terms: I,
    ) -> Self {
        let mut p = Self::zero(ring, nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars);
            p.add_term(SmallVec::from_vec(e), ring.from_int(c));
        }
        p
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }
    pub fn nvars(&self) -> usize {
        self.nvars
    }
    pub fn terms(&self) -> &BTreeMap<Exps, Elem> {
        &self.terms
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[i32]) -> Elem {
        self.terms.get(e).copied().unwrap_or(0)
    }

    pub fn constant_term(&self) -> Elem {
        self.coeff(&vec![0; self.nvars])
    }

    pub fn add_term(&mut self, e: Exps, c: Elem) {
        if c == 0 {
            return;
        }
        let r = self.ring;
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = r.add(*o.get(), c);
                if s == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(o);
        out
    }

    pub fn add_assign(&mut self, o: &Self) {
        debug_assert_eq!(self.nvars, o.nvars);
        for (e, &c) in &o.terms {
            self.add_term(e.clone(), c);
        }
    }

    /// self += c * o
    pub fn add_scaled(&mut self, o: &Self, c: Elem) {
        if c == 0 {
            return;
        }
        let r = self.ring;
        for (e, &x) in &o.terms {
            self.add_term(e.clone(), r.mul(x, c));
        }
    }

    pub fn neg(&self) -> Self {
        let r = self.ring;
        LaurentPoly {
            ring: r,
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, &c)| (e.clone(), r.neg(c))).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(o, self.ring.neg(1));
        out
    }

    pub fn scale(&self, c: Elem) -> Self {
        let r = self.ring;
        let mut out = Self::zero(r, self.nvars);
        if c == 0 {
            return out;
        }
        for (e, &x) in &self.terms {
            let y = r.mul(x, c);
            if y != 0 {
                out.terms.insert(e.clone(), y);
            }
        }
        out
    }

    pub fn scale_int(&self, k: i64) -> Self {
        self.scale(self.ring.from_int(k))
    }

    pub fn mul(&self, o: &Self) -> Self {
        debug_assert_eq!(self.nvars, o.nvars);
        let r = self.ring;
        let mut out = Self::zero(r, self.nvars);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &o.terms {
                let c = r.mul(c1, c2);
                if c == 0 {
                    continue;
                }
                let e: Exps = e1.iter().zip(e2.iter()).map(|(a, b)| a + b).collect();
                out.add_term(e, c);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &[i32], c: Elem) -> Self {
        let r = self.ring;
        let mut out = Self::zero(r, self.nvars);
        for (e, &x) in &self.terms {
            let y = r.mul(x, c);
            if y != 0 {
                let ne: Exps = e.iter().zip(m).map(|(a, b)| a + b).collect();
                out.terms.insert(ne, y);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.ring, self.nvars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Partial derivative with respect to coordinate i.
    pub fn derive(&self, i: usize) -> Self {
        let r = self.ring;
        let mut out = Self::zero(r, self.nvars);
        for (e, &c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let y = r.mul(c, r.from_int(e[i] as i64));
            if y != 0 {
                let mut ne = e.clone();
                ne[i] -= 1;
                out.terms.insert(ne, y);
            }
        }
        out
    }

    /// Divided derivative d^k/(k! dt_i^k), with integral binomial coefficients.
    pub fn hasse(&self, i: usize, k: u32) -> Self {
        if k == 0 {
            return self.clone();
        }
        let r = self.ring;
        let mut out = Self::zero(r, self.nvars);
        for (e, &c) in &self.terms {
            let b = signed_binom(&r, e[i] as i64, k as u64);
            let y = r.mul(c, b);
            if y != 0 {
                let mut ne = e.clone();
                ne[i] -= k as i32;
                out.terms.insert(ne, y);
            }
        }
        out
    }

    /// Iterated derivative prod_j d_j^{I_j}.
    pub fn apply_diffop(&self, multi: &[u32]) -> Self {
        let mut f = self.clone();
        for (j, &k) in multi.iter().enumerate() {
            for _ in 0..k {
                f = f.derive(j);
            }
        }
        f
    }

    /// Iterated divided derivative prod_j d_j^{[I_j]}.
    pub fn apply_divided_diffop(&self, multi: &[u32]) -> Self {
        let mut f = self.clone();
        for (j, &k) in multi.iter().enumerate() {
            f = f.hasse(j, k);
        }
        f
    }

    pub fn map_coeffs<F: Fn(Elem) -> Elem>(&self, target: Ring, f: F) -> Self {
        let mut out = Self::zero(target, self.nvars);
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// Reduction (or canonical lift) of coefficients into another level.
    pub fn to_ring(&self, target: Ring) -> Self {
        let r = self.ring;
        self.map_coeffs(target, |c| r.reduce_to(c, &target))
    }

    pub fn sigma(&self) -> Self {
        let r = self.ring;
        self.map_coeffs(r, |c| r.sigma(c))
    }

    /// Minimum p-adic valuation of coefficients (n for zero).
    pub fn val(&self) -> u32 {
        self.terms
            .values()
            .map(|&c| self.ring.val(c))
            .min()
            .unwrap_or(self.ring.n())
    }

    /// Divides a polynomial given at level n+k by p^k, landing in `target` at level n.
    pub fn p_divide_k(&self, target: Ring, k: u32) -> Result<Self, ChartError> {
        let mut out = Self::zero(target, self.nvars);
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), target.p_divide_k(c, &self.ring, k)?);
        }
        Ok(out)
    }

    pub fn p_divide(&self, target: Ring) -> Result<Self, ChartError> {
        self.p_divide_k(target, 1)
    }

    pub fn max_abs_degree(&self) -> i32 {
        self.terms
            .keys()
            .flat_map(|e| e.iter().map(|x| x.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn total_degree(&self) -> i32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<i32>())
            .max()
            .unwrap_or(0)
    }

    pub fn has_negative_exponent(&self, i: usize) -> bool {
        self.terms.keys().any(|e| e[i] < 0)
    }

    /// Single term view: Some((exps, coeff)) if this is a monomial.
    pub fn as_monomial(&self) -> Option<(&Exps, Elem)> {
        if self.terms.len() == 1 {
            let (e, &c) = self.terms.iter().next().unwrap();
            Some((e, c))
        } else {
            None
        }
    }

    /// Inverse in the Laurent ring, if this is (unit * monomial) * (1 + p h).
    pub fn try_inverse(&self) -> Result<Self, ChartError> {
        let r = self.ring;
        let units: Vec<(&Exps, Elem)> = self
            .terms
            .iter()
            .filter(|(_, &c)| r.is_unit(c))
            .map(|(e, &c)| (e, c))
            .collect();
        if units.len() != 1 {
            return Err(ChartError::NotUnit(format!("{self:?}")));
        }
        let (m, c) = (units[0].0.clone(), units[0].1);
        let cinv = r.inv(c)?;
        let minv: Vec<i32> = m.iter().map(|x| -x).collect();
        let lead_inv = LaurentPoly::monomial(r, SmallVec::from_vec(minv.clone()), cinv);
        // self = c m (1 + g)
        let normalized = self.mul_monomial(&minv, cinv);
        let g = normalized.sub(&LaurentPoly::one(r, self.nvars));
        let mut series = LaurentPoly::one(r, self.nvars);
        let mut term = LaurentPoly::one(r, self.nvars);
        let neg_g = g.neg();
        for _ in 0..r.n() {
            term = term.mul(&neg_g);
            if term.is_zero() {
                break;
            }
            series.add_assign(&term);
        }
        Ok(series.mul(&lead_inv))
    }

    /// Substitutes `images[i]` for coordinate i. Negative exponents use `inverses[i]`.
    pub fn substitute(&self, images: &[LaurentPoly], inverses: &[Option<LaurentPoly>]) -> Result<Self, ChartError> {
        if images.len() != self.nvars {
            return Err(ChartError::Arity(images.len(), self.nvars));
        }
        let tr = images.first().map(|x| x.ring).unwrap_or(self.ring);
        let tn = images.first().map(|x| x.nvars).unwrap_or(0);
        let mut cache: Vec<BTreeMap<i32, LaurentPoly>> = vec![BTreeMap::new(); self.nvars];
        let mut out = LaurentPoly::zero(tr, tn);
        let src = self.ring;
        for (e, &c) in &self.terms {
            let mut t = LaurentPoly::constant(tr, tn, src.reduce_to(c, &tr));
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                if !cache[i].contains_key(&k) {
                    let base = if k > 0 {
                        images[i].clone()
                    } else {
                        inverses
                            .get(i)
                            .and_then(|x| x.clone())
                            .ok_or(ChartError::NotInvertible(i))?
                    };
                    cache[i].insert(k, base.pow(k.unsigned_abs()));
                }
                t = t.mul(&cache[i][&k]);
            }
            out.add_assign(&t);
        }
        Ok(out)
    }

    pub fn display(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (e, &c) in &self.terms {
            let mut mono = Vec::new();
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => mono.push(names[i].clone()),
                    _ => mono.push(format!("{}^{}", names[i], k)),
                }
            }
            let cs = self.ring.fmt_elem(c);
            if mono.is_empty() {
                parts.push(cs);
            } else if c == 1 {
                parts.push(mono.join("*"));
            } else {
                parts.push(format!("{}*{}", cs, mono.join("*")));
            }
        }
        parts.join(" + ")
    }
}

/// binom(e, k) for possibly negative e, reduced into the ring.
pub fn signed_binom(r: &Ring, e: i64, k: u64) -> Elem {
    if e >= 0 {
        return r.binom(e as u64, k);
    }
    // binom(-m, k) = (-1)^k binom(m + k - 1, k)
    let m = (-e) as u64;
    let b = r.binom(m + k - 1, k);
    if k % 2 == 1 {
        r.neg(b)
    } else {
        b
    }
}

/// A framed chart: coordinates t_1..t_d, some of them inverted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    pub ring: Ring,
    pub d: usize,
    pub invertible: Vec<bool>,
    pub extra_units: Vec<LaurentPoly>,
    pub names: Vec<String>,
}

impl Chart {
    pub fn affine(ring: Ring, d: usize) -> Chart {
        Chart {
            ring,
            d,
            invertible: vec![false; d],
            extra_units: Vec::new(),
            names: default_names(d),
        }
    }

    pub fn torus(ring: Ring, d: usize) -> Chart {
        Chart {
            invertible: vec![true; d],
            ..Chart::affine(ring, d)
        }
    }

    pub fn with_invertible(ring: Ring, invertible: Vec<bool>) -> Chart {
        let d = invertible.len();
        Chart {
            invertible,
            ..Chart::affine(ring, d)
        }
    }

    pub fn at_ring(&self, ring: Ring) -> Chart {
        Chart {
            ring,
            extra_units: self.extra_units.iter().map(|u| u.to_ring(ring)).collect(),
            ..self.clone()
        }
    }

    pub fn zero(&self) -> LaurentPoly {
        LaurentPoly::zero(self.ring, self.d)
    }
    pub fn one(&self) -> LaurentPoly {
        LaurentPoly::one(self.ring, self.d)
    }
    pub fn var(&self, i: usize) -> LaurentPoly {
        LaurentPoly::var(self.ring, self.d, i)
    }

    /// Checks that negative exponents only appear on invertible coordinates.
    pub fn admits(&self, f: &LaurentPoly) -> bool {
        (0..self.d).all(|i| self.invertible[i] || !f.has_negative_exponent(i))
    }

    pub fn validate(&self) -> Result<(), ChartError> {
        for u in &self.extra_units {
            let r1 = self.ring.at_level(1);
            let red = u.to_ring(r1);
            if red.is_zero() {
                return Err(ChartError::NotUnit(format!("{u:?} vanishes mod p")));
            }
        }
        Ok(())
    }

    pub fn inverse_of_var(&self, i: usize) -> Option<LaurentPoly> {
        if self.invertible[i] {
            let mut e: Exps = SmallVec::from_elem(0, self.d);
            e[i] = -1;
            Some(LaurentPoly::monomial(self.ring, e, 1))
        } else {
            None
        }
    }
}

/// Exterior algebra bookkeeping: s-subsets of {0..d-1} stored as bitmasks.
pub mod forms {
    /// All subsets of size s of {0..d-1}, increasing as bitmasks.
    pub fn subsets(d: usize, s: usize) -> Vec<u32> {
        (0u32..(1u32 << d))
            .filter(|m| m.count_ones() as usize == s)
            .collect()
    }

    /// dt_i ^ (form with index set mask): returns the new mask and the sign,
    /// or None if i already occurs.
    pub fn wedge_left(i: usize, mask: u32) -> Option<(u32, i64)> {
        if mask & (1 << i) != 0 {
            return None;
        }
        let below = (mask & ((1u32 << i) - 1)).count_ones();
        let sign = if below % 2 == 0 { 1 } else { -1 };
        Some((mask | (1 << i), sign))
    }

    pub fn indices(mask: u32) -> Vec<usize> {
        (0..32).filter(|i| mask & (1 << i) != 0).collect()
    }
}

/// Coefficients of a differential form: index-subset bitmask to value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormValued<T> {
    pub d: usize,
    pub coeffs: BTreeMap<u32, T>,
}

impl<T> FormValued<T> {
    pub fn new(d: usize) -> Self {
        FormValued {
            d,
            coeffs: BTreeMap::new(),
        }
    }
}

/// Substitution morphism: target coordinates expressed on the source chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartMap {
    pub source: Chart,
    pub target: Chart,
    pub images: Vec<LaurentPoly>,
    pub inverses: Vec<Option<LaurentPoly>>,
}

impl ChartMap {
    pub fn new(source: Chart, target: Chart, images: Vec<LaurentPoly>) -> Result<ChartMap, ChartError> {
        if images.len() != target.d {
            return Err(ChartError::Arity(images.len(), target.d));
        }
        let mut inverses = Vec::new();
        for (i, img) in images.iter().enumerate() {
            if !source.admits(img) {
                return Err(ChartError::NotInvertible(i));
            }
            if target.invertible[i] {
                let inv = img.try_inverse()?;
                if !source.admits(&inv) {
                    return Err(ChartError::NotUnit(format!("{img:?}")));
                }
                inverses.push(Some(inv));
            } else {
                inverses.push(None);
            }
        }
        Ok(ChartMap {
            source,
            target,
            images,
            inverses,
        })
    }

    pub fn identity(chart: &Chart) -> ChartMap {
        let images = (0..chart.d).map(|i| chart.var(i)).collect();
        let inverses = (0..chart.d).map(|i| chart.inverse_of_var(i)).collect();
        ChartMap {
            source: chart.clone(),
            target: chart.clone(),
            images,
            inverses,
        }
    }

    pub fn apply(&self, f: &LaurentPoly) -> Result<LaurentPoly, ChartError> {
        f.substitute(&self.images, &self.inverses)
    }

    /// self after other: first other (A -> B), then self (B -> C)... as pullbacks,
    /// (self ∘ other)^* f = other^*(self^* f).
    pub fn then(&self, next: &ChartMap) -> Result<ChartMap, ChartError> {
        let images = next
            .images
            .iter()
            .map(|g| self.apply(g))
            .collect::<Result<Vec<_>, _>>()?;
        ChartMap::new(self.source.clone(), next.target.clone(), images)
    }

    pub fn is_monomial(&self) -> bool {
        self.images
            .iter()
            .all(|g| g.as_monomial().map(|(_, c)| g.ring().is_unit(c)).unwrap_or(false))
    }
}

/// A Frobenius lift F*(t_i) = t_i^p + p a_i at level n+1, sigma-semilinear on constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrobLift {
    pub chart: Chart,
    pub up: Ring,
    pub images: Vec<LaurentPoly>,
    pub inverses: Vec<Option<LaurentPoly>>,
}

impl FrobLift {
    /// From the correction terms a_i (given at level n+1).
    pub fn from_corrections(chart: &Chart, a: &[LaurentPoly]) -> Result<FrobLift, ChartError> {
        let up = chart.ring.at_level(chart.ring.n() + 1);
        let p = up.p();
        let mut images = Vec::new();
        for i in 0..chart.d {
            let tp = LaurentPoly::var(up, chart.d, i).pow(p as u32);
            let ai = a
                .get(i)
                .map(|x| x.to_ring(up))
                .unwrap_or_else(|| LaurentPoly::zero(up, chart.d));
            images.push(tp.add(&ai.scale(p)));
        }
        FrobLift::from_images(chart, images)
    }

    pub fn standard(chart: &Chart) -> FrobLift {
        FrobLift::from_corrections(chart, &[]).expect("t -> t^p is a lift")
    }

    pub fn from_images(chart: &Chart, images: Vec<LaurentPoly>) -> Result<FrobLift, ChartError> {
        let up = chart.ring.at_level(chart.ring.n() + 1);
        if images.len() != chart.d {
            return Err(ChartError::Arity(images.len(), chart.d));
        }
        let r1 = chart.ring.at_level(1);
        let p = up.p();
        let up_chart = chart.at_ring(up);
        let mut inverses = Vec::new();
        for (i, img) in images.iter().enumerate() {
            let img = img.to_ring(up);
            let red = img.to_ring(r1);
            let want = LaurentPoly::var(r1, chart.d, i).pow(p as u32);
            if red != want {
                return Err(ChartError::InvalidLift(format!(
                    "image of coordinate {} is not t^p mod p",
                    i + 1
                )));
            }
            if !up_chart.admits(&img) {
                return Err(ChartError::NotInvertible(i));
            }
            if chart.invertible[i] {
                inverses.push(Some(img.try_inverse()?));
            } else {
                inverses.push(None);
            }
        }
        Ok(FrobLift {
            chart: chart.clone(),
            up,
            images: images.into_iter().map(|x| x.to_ring(up)).collect(),
            inverses,
        })
    }

    pub fn d(&self) -> usize {
        self.chart.d
    }

    /// F^* at level n+1 (input is taken at level n+1 as well).
    pub fn apply_up(&self, f: &LaurentPoly) -> Result<LaurentPoly, ChartError> {
        let f = f.to_ring(self.up).sigma();
        f.substitute(&self.images, &self.inverses)
    }

    /// F^* at level n.
    pub fn apply(&self, f: &LaurentPoly) -> Result<LaurentPoly, ChartError> {
        let target = f.ring();
        Ok(self.apply_up(&f.to_ring(self.up))?.to_ring(target))
    }

    /// a_i = (F^*(t_i) - t_i^p)/p at level n.
    pub fn corrections(&self) -> Vec<LaurentPoly> {
        let p = self.up.p();
        (0..self.d())
            .map(|i| {
                let tp = LaurentPoly::var(self.up, self.d(), i).pow(p as u32);
                self.images[i]
                    .sub(&tp)
                    .p_divide(self.chart.ring)
                    .expect("lift reduces to Frobenius")
            })
            .collect()
    }

    /// Entry (i, j) is d_i(F^*(t_j)) / p, so that dF/p(dt_j) = sum_i entry(i,j) dt_i.
    pub fn df_over_p(&self) -> Result<Vec<Vec<LaurentPoly>>, ChartError> {
        let d = self.d();
        let mut m = vec![vec![LaurentPoly::zero(self.chart.ring, d); d]; d];
        for j in 0..d {
            for i in 0..d {
                let der = self.images[j].derive(i);
                m[i][j] = der.p_divide(self.chart.ring).map_err(|_| {
                    ChartError::Internal(format!("d{}(F*(t{})) not divisible by p", i + 1, j + 1))
                })?;
            }
        }
        Ok(m)
    }

    /// dF/p applied to the form dt_{j1} ^ ... ^ dt_{js} (mask), as a combination of forms.
    pub fn wedge_df_over_p(&self, mask: u32) -> Result<Vec<(u32, LaurentPoly)>, ChartError> {
        let m = self.df_over_p()?;
        let d = self.d();
        let mut acc: Vec<(u32, LaurentPoly)> = vec![(0, LaurentPoly::one(self.chart.ring, d))];
        for j in forms::indices(mask).into_iter().rev() {
            let mut next: BTreeMap<u32, LaurentPoly> = BTreeMap::new();
            for (mk, coef) in &acc {
                for (i, row) in m.iter().enumerate() {
                    let e = &row[j];
                    if e.is_zero() {
                        continue;
                    }
                    if let Some((nm, sgn)) = forms::wedge_left(i, *mk) {
                        let t = coef.mul(e).scale_int(sgn);
                        next.entry(nm)
                            .or_insert_with(|| LaurentPoly::zero(self.chart.ring, d))
                            .add_assign(&t);
                    }
                }
            }
            acc = next.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        }
        Ok(acc)
    }
}

/// Report from atlas validation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AtlasReport {
    pub failures: Vec<String>,
}

impl AtlasReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A finite Zariski atlas of framed charts with monomial transitions.
///
/// `transitions[(i, j)]` expresses the coordinates of chart i on the overlap,
/// written in the coordinates of chart j. `overlap_invertible[(i, j)]` lists,
/// in chart i's coordinates, which coordinates become invertible on U_i ∩ U_j.
#[derive(Clone, Debug)]
pub struct Atlas {
    pub ring: Ring,
    pub d: usize,
    pub charts: Vec<Chart>,
    pub transitions: BTreeMap<(usize, usize), Vec<LaurentPoly>>,
    pub overlap_invertible: BTreeMap<(usize, usize), Vec<bool>>,
    pub lifts: Vec<FrobLift>,
}

impl Atlas {
    pub fn single(chart: Chart, lift: FrobLift) -> Atlas {
        Atlas {
            ring: chart.ring,
            d: chart.d,
            charts: vec![chart],
            transitions: BTreeMap::new(),
            overlap_invertible: BTreeMap::new(),
            lifts: vec![lift],
        }
    }

    pub fn empty(ring: Ring, d: usize) -> Atlas {
        Atlas {
            ring,
            d,
            charts: Vec::new(),
            transitions: BTreeMap::new(),
            overlap_invertible: BTreeMap::new(),
            lifts: Vec::new(),
        }
    }

    /// P^1 with charts t and s = 1/t and the standard lifts t -> t^p, s -> s^p.
    pub fn projective_line(ring: Ring) -> Atlas {
        let c = Chart::affine(ring, 1);
        let inv = LaurentPoly::from_terms(ring, 1, [(vec![-1], 1)]);
        let mut transitions = BTreeMap::new();
        transitions.insert((0, 1), vec![inv.clone()]);
        transitions.insert((1, 0), vec![inv]);
        let mut overlap_invertible = BTreeMap::new();
        overlap_invertible.insert((0, 1), vec![true]);
        overlap_invertible.insert((1, 0), vec![true]);
        let mut c1 = c.clone();
        c1.names = vec!["s".into()];
        Atlas {
            ring,
            d: 1,
            charts: vec![c.clone(), c1.clone()],
            transitions,
            overlap_invertible,
            lifts: vec![FrobLift::standard(&c), FrobLift::standard(&c1)],
        }
    }

    /// Product atlas: charts indexed by pairs (a, b) in lexicographic order.
    pub fn product(a: &Atlas, b: &Atlas) -> Result<Atlas, ChartError> {
        let ring = a.ring;
        let d = a.d + b.d;
        let na = a.charts.len();
        let nb = b.charts.len();
        let idx = |i: usize, j: usize| i * nb + j;
        let mut charts = Vec::new();
        let mut lifts = Vec::new();
        for i in 0..na {
            for j in 0..nb {
                let mut inv = a.charts[i].invertible.clone();
                inv.extend(b.charts[j].invertible.iter().copied());
                let mut names = a.charts[i].names.clone();
                names.extend(b.charts[j].names.iter().cloned());
                let names = if names.iter().collect::<std::collections::BTreeSet<_>>().len() == d {
                    names
                } else {
                    default_names(d)
                };
                let ch = Chart {
                    ring,
                    d,
                    invertible: inv,
                    extra_units: Vec::new(),
                    names,
                };
                let mut imgs = Vec::new();
                for f in &a.lifts[i].images {
                    imgs.push(embed(f, d, 0));
                }
                for f in &b.lifts[j].images {
                    imgs.push(embed(f, d, a.d));
                }
                lifts.push(FrobLift::from_images(&ch, imgs)?);
                charts.push(ch);
            }
        }
        let mut transitions = BTreeMap::new();
        let mut overlap_invertible = BTreeMap::new();
        for i in 0..na {
            for j in 0..nb {
                for i2 in 0..na {
                    for j2 in 0..nb {
                        if (i, j) == (i2, j2) {
                            continue;
                        }
                        let mut imgs = Vec::new();
                        let mut inv = Vec::new();
                        if i == i2 {
                            for k in 0..a.d {
                                imgs.push(LaurentPoly::var(ring, d, k));
                            }
                            inv.extend(a.charts[i].invertible.iter().copied());
                        } else {
                            for f in &a.transitions[&(i, i2)] {
                                imgs.push(embed(f, d, 0));
                            }
                            inv.extend(a.overlap_invertible[&(i, i2)].iter().copied());
                        }
                        if j == j2 {
                            for k in 0..b.d {
                                imgs.push(LaurentPoly::var(ring, d, a.d + k));
                            }
                            inv.extend(b.charts[j].invertible.iter().copied());
                        } else {
                            for f in &b.transitions[&(j, j2)] {
                                imgs.push(embed(f, d, a.d));
                            }
                            inv.extend(b.overlap_invertible[&(j, j2)].iter().copied());
                        }
                        transitions.insert((idx(i, j), idx(i2, j2)), imgs);
                        overlap_invertible.insert((idx(i, j), idx(i2, j2)), inv);
                    }
                }
            }
        }
        Ok(Atlas {
            ring,
            d,
            charts,
            transitions,
            overlap_invertible,
            lifts,
        })
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }
    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    /// Chart of the intersection U_J, in the coordinates of chart J[0].
    pub fn patch(&self, jset: &[usize]) -> Chart {
        let j0 = jset[0];
        let mut ch = self.charts[j0].clone();
        for &j in &jset[1..] {
            if let Some(inv) = self.overlap_invertible.get(&(j0, j)) {
                for (a, &b) in ch.invertible.iter_mut().zip(inv) {
                    *a |= b;
                }
            }
        }
        ch
    }

    /// Coordinates of chart i, written on U_J (in chart J[0] coordinates).
    pub fn chart_coords_on_patch(&self, i: usize, jset: &[usize]) -> Vec<LaurentPoly> {
        let j0 = jset[0];
        if i == j0 {
            (0..self.d).map(|k| LaurentPoly::var(self.ring, self.d, k)).collect()
        } else {
            self.transitions[&(i, j0)].clone()
        }
    }

    /// Restriction from U_K to U_J for K ⊆ J.
    pub fn restriction(&self, kset: &[usize], jset: &[usize]) -> Result<ChartMap, ChartError> {
        let src = self.patch(jset);
        let tgt = self.patch(kset);
        let images = self.chart_coords_on_patch(kset[0], jset);
        ChartMap::new(src, tgt, images)
    }

    /// The lift of chart j transported to U_J, in chart J[0] coordinates.
    pub fn lift_on_patch(&self, j: usize, jset: &[usize]) -> Result<FrobLift, ChartError> {
        let patch = self.patch(jset);
        let j0 = jset[0];
        if j == j0 {
            return FrobLift::from_images(&patch, self.lifts[j].images.clone());
        }
        let up = self.lifts[j].up;
        let d = self.d;
        // chart-j coordinates u on the patch (monomials in t), and their inverses
        let u_on_t: Vec<LaurentPoly> = self.transitions[&(j, j0)]
            .iter()
            .map(|f| f.to_ring(up))
            .collect();
        let u_inv: Vec<Option<LaurentPoly>> = u_on_t.iter().map(|f| f.try_inverse().ok()).collect();
        // F_j^*(u) in t-coordinates
        let fu: Vec<LaurentPoly> = self.lifts[j]
            .images
            .iter()
            .map(|g| g.substitute(&u_on_t, &u_inv))
            .collect::<Result<_, _>>()?;
        let fu_inv: Vec<Option<LaurentPoly>> = fu.iter().map(|g| g.try_inverse().ok()).collect();
        // t-coordinates as functions of u, pulled back along F_j
        let mut images = Vec::new();
        for k in 0..d {
            let t_in_u = self.transitions[&(j0, j)][k].to_ring(up).sigma();
            images.push(t_in_u.substitute(&fu, &fu_inv)?);
        }
        FrobLift::from_images(&patch, images)
    }

    pub fn validate(&self) -> AtlasReport {
        let mut rep = AtlasReport::default();
        let n = self.charts.len();
        if self.lifts.len() != n {
            rep.failures
                .push(format!("{} lifts for {} charts", self.lifts.len(), n));
        }
        for (i, ch) in self.charts.iter().enumerate() {
            if ch.d != self.d {
                rep.failures.push(format!("chart {i} has dimension {}", ch.d));
            }
            if let Err(e) = ch.validate() {
                rep.failures.push(format!("chart {i}: {e}"));
            }
        }
        if !rep.failures.is_empty() {
            return rep;
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let Some(g) = self.transitions.get(&(i, j)) else {
                    rep.failures.push(format!("missing transition {i}->{j}"));
                    continue;
                };
                if !self.overlap_invertible.contains_key(&(i, j)) {
                    rep.failures.push(format!("missing overlap data for ({i},{j})"));
                    continue;
                }
                if g.len() != self.d {
                    rep.failures.push(format!("transition {i}->{j} has wrong arity"));
                    continue;
                }
                let monomial = g
                    .iter()
                    .all(|f| f.as_monomial().map(|(_, c)| self.ring.is_unit(c)).unwrap_or(false));
                if !monomial {
                    rep.failures
                        .push(format!("transition {i}->{j} is not a unit monomial substitution"));
                }
            }
        }
        if !rep.failures.is_empty() {
            return rep;
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let jset = [i.min(j), i.max(j)];
                let patch = self.patch(&jset);
                // image coordinates make sense on the overlap and invertible ones map to units
                let inv_i = &self.overlap_invertible[&(i, j)];
                let on_j = Chart::with_invertible(self.ring, self.overlap_invertible[&(j, i)].clone());
                for (k, f) in self.transitions[&(i, j)].iter().enumerate() {
                    if !on_j.admits(f) {
                        rep.failures.push(format!(
                            "transition {i}->{j}: coordinate {} uses a non-invertible coordinate",
                            k + 1
                        ));
                    }
                    if inv_i[k] || self.charts[i].invertible[k] {
                        let ok = f
                            .try_inverse()
                            .map(|g| on_j.admits(&g))
                            .unwrap_or(false);
                        if !ok {
                            rep.failures.push(format!(
                                "transition {i}->{j}: coordinate {} must be a unit on the overlap",
                                k + 1
                            ));
                        }
                    }
                }
                // the two transitions are mutually inverse
                let back = self.compose_transitions(i, j, i);
                match back {
                    Ok(imgs) => {
                        for (k, f) in imgs.iter().enumerate() {
                            if *f != LaurentPoly::var(self.ring, self.d, k) {
                                rep.failures.push(format!(
                                    "transitions {i}->{j}->{i} do not compose to the identity"
                                ));
                                break;
                            }
                        }
                    }
                    Err(e) => rep.failures.push(format!("transition {i}->{j}->{i}: {e}")),
                }
                // separatedness: the overlap ring is generated by the two chart rings
                if i < j {
                    for k in 0..self.d {
                        let mut needs = vec![(k, 1)];
                        if patch.invertible[k] {
                            needs.push((k, -1));
                        }
                        for (k, sgn) in needs {
                            let mut e: Exps = SmallVec::from_elem(0, self.d);
                            e[k] = sgn;
                            let target = LaurentPoly::monomial(self.ring, e, 1);
                            if !self.generated_by_charts(&jset, &target) {
                                rep.failures.push(format!(
                                    "overlap ({i},{j}): {} is not a function on either chart (gluing relation fails)",
                                    target.display(&self.charts[i].names)
                                ));
                            }
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    // g_{i->k} = g_{i->j} followed by g_{j->k}
                    match self.compose_transitions(i, j, k) {
                        Ok(imgs) => {
                            if imgs != self.transitions[&(i, k)] {
                                rep.failures
                                    .push(format!("cocycle fails on triple ({i},{j},{k})"));
                            }
                        }
                        Err(e) => rep.failures.push(format!("triple ({i},{j},{k}): {e}")),
                    }
                }
            }
        }
        for (j, l) in self.lifts.iter().enumerate() {
            if l.chart.invertible != self.charts[j].invertible {
                rep.failures.push(format!("lift {j} is on a different chart"));
            }
        }
        rep
    }

    fn compose_transitions(&self, i: usize, j: usize, k: usize) -> Result<Vec<LaurentPoly>, ChartError> {
        let g_jk = &self.transitions[&(j, k)];
        let inv: Vec<Option<LaurentPoly>> = g_jk.iter().map(|f| f.try_inverse().ok()).collect();
        if i == k {
            return self.transitions[&(i, j)]
                .iter()
                .map(|f| f.substitute(g_jk, &inv))
                .collect();
        }
        self.transitions[&(i, j)]
            .iter()
            .map(|f| f.substitute(g_jk, &inv))
            .collect()
    }

    fn generated_by_charts(&self, jset: &[usize], target: &LaurentPoly) -> bool {
        for &c in jset {
            let coords = self.chart_coords_on_patch(c, jset);
            for (k, f) in coords.iter().enumerate() {
                if f == target {
                    return true;
                }
                if self.charts[c].invertible[k] {
                    if let Ok(g) = f.try_inverse() {
                        if &g == target {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Strictly increasing index tuples of length r+1.
    pub fn cech_sets(&self, r: usize) -> Vec<Vec<usize>> {
        let n = self.charts.len();
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, left - 1, cur, out);
                cur.pop();
            }
        }
        rec(0, n, r + 1, &mut cur, &mut out);
        out
    }

    pub fn max_transition_degree(&self) -> i32 {
        self.transitions
            .values()
            .flat_map(|v| v.iter().map(|f| f.max_abs_degree()))
            .max()
            .unwrap_or(1)
            .max(1)
    }
}


/// Dense matrix of Laurent polynomials.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyMat {
    pub ring: Ring,
    pub nvars: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<LaurentPoly>,
}

impl fmt::Debug for PolyMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl PolyMat {
    pub fn zeros(ring: Ring, nvars: usize, rows: usize, cols: usize) -> PolyMat {
        PolyMat {
            ring,
            nvars,
            rows,
            cols,
            data: vec![LaurentPoly::zero(ring, nvars); rows * cols],
        }
    }

    pub fn identity(ring: Ring, nvars: usize, n: usize) -> PolyMat {
        let mut m = PolyMat::zeros(ring, nvars, n, n);
        for i in 0..n {
            m.set(i, i, LaurentPoly::one(ring, nvars));
        }
        m
    }

    pub fn scalar(ring: Ring, nvars: usize, n: usize, f: &LaurentPoly) -> PolyMat {
        let mut m = PolyMat::zeros(ring, nvars, n, n);
        for i in 0..n {
            m.set(i, i, f.clone());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<LaurentPoly>>) -> PolyMat {
        let r = rows.len();
        let c = rows[0].len();
        let ring = rows[0][0].ring();
        let nvars = rows[0][0].nvars();
        PolyMat {
            ring,
            nvars,
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_ints(ring: Ring, nvars: usize, rows: &[Vec<i64>]) -> PolyMat {
        PolyMat::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| LaurentPoly::constant(ring, nvars, ring.from_int(x))).collect())
                .collect(),
        )
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: LaurentPoly) {
        self.data[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<LaurentPoly> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn from_cols(ring: Ring, nvars: usize, rows: usize, cols: &[Vec<LaurentPoly>]) -> PolyMat {
        let mut m = PolyMat::zeros(ring, nvars, rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        *self == PolyMat::identity(self.ring, self.nvars, self.rows)
    }

    pub fn add(&self, o: &PolyMat) -> PolyMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        PolyMat {
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect(),
            ..self.clone()
        }
    }

    pub fn sub(&self, o: &PolyMat) -> PolyMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        PolyMat {
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect(),
            ..self.clone()
        }
    }

    pub fn neg(&self) -> PolyMat {
        self.map(|x| x.neg())
    }

    pub fn scale(&self, c: Elem) -> PolyMat {
        self.map(|x| x.scale(c))
    }

    pub fn scale_poly(&self, f: &LaurentPoly) -> PolyMat {
        self.map(|x| x.mul(f))
    }

    pub fn map<F: Fn(&LaurentPoly) -> LaurentPoly>(&self, f: F) -> PolyMat {
        let data: Vec<LaurentPoly> = self.data.iter().map(f).collect();
        let (ring, nvars) = data
            .first()
            .map(|x| (x.ring(), x.nvars()))
            .unwrap_or((self.ring, self.nvars));
        PolyMat {
            ring,
            nvars,
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn try_map<E, F: Fn(&LaurentPoly) -> Result<LaurentPoly, E>>(&self, f: F) -> Result<PolyMat, E> {
        let data: Vec<LaurentPoly> = self.data.iter().map(f).collect::<Result<_, _>>()?;
        let (ring, nvars) = data
            .first()
            .map(|x| (x.ring(), x.nvars()))
            .unwrap_or((self.ring, self.nvars));
        Ok(PolyMat {
            ring,
            nvars,
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn to_ring(&self, r: Ring) -> PolyMat {
        let mut m = self.map(|x| x.to_ring(r));
        m.ring = r;
        m
    }

    pub fn mul(&self, o: &PolyMat) -> PolyMat {
        assert_eq!(self.cols, o.rows);
        let mut out = PolyMat::zeros(self.ring, self.nvars, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx].add_assign(&a.mul(b));
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[LaurentPoly]) -> Vec<LaurentPoly> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![LaurentPoly::zero(self.ring, self.nvars); self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            for (k, x) in v.iter().enumerate() {
                let a = self.get(i, k);
                if !a.is_zero() && !x.is_zero() {
                    o.add_assign(&a.mul(x));
                }
            }
        }
        out
    }

    pub fn derive(&self, i: usize) -> PolyMat {
        self.map(|x| x.derive(i))
    }

    pub fn transpose(&self) -> PolyMat {
        let mut t = PolyMat::zeros(self.ring, self.nvars, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    /// Kronecker product.
    pub fn kron(&self, o: &PolyMat) -> PolyMat {
        let mut out = PolyMat::zeros(self.ring, self.nvars, self.rows * o.rows, self.cols * o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for k in 0..o.rows {
                    for l in 0..o.cols {
                        out.set(i * o.rows + k, j * o.cols + l, self.get(i, j).mul(o.get(k, l)));
                    }
                }
            }
        }
        out
    }

    /// Inverse when the determinant is a unit Laurent polynomial (adjugate formula
    /// is avoided: Gauss-Jordan with unit pivots after inverting a unit entry).
    pub fn try_inverse(&self) -> Option<PolyMat> {
        let n = self.rows;
        if n != self.cols {
            return None;
        }
        let mut a = self.clone();
        let mut inv = PolyMat::identity(self.ring, self.nvars, n);
        for c in 0..n {
            let piv = (c..n).find(|&i| a.get(i, c).try_inverse().is_ok())?;
            if piv != c {
                for k in 0..n {
                    a.data.swap(piv * n + k, c * n + k);
                    inv.data.swap(piv * n + k, c * n + k);
                }
            }
            let u = a.get(c, c).try_inverse().ok()?;
            for k in 0..n {
                let x = a.get(c, k).mul(&u);
                a.set(c, k, x);
                let y = inv.get(c, k).mul(&u);
                inv.set(c, k, y);
            }
            for i in 0..n {
                if i == c || a.get(i, c).is_zero() {
                    continue;
                }
                let f = a.get(i, c).clone();
                for k in 0..n {
                    let x = a.get(i, k).sub(&f.mul(a.get(c, k)));
                    a.set(i, k, x);
                    let y = inv.get(i, k).sub(&f.mul(inv.get(c, k)));
                    inv.set(i, k, y);
                }
            }
        }
        Some(inv)
    }
}

pub fn embed(f: &LaurentPoly, d: usize, offset: usize) -> LaurentPoly {
    let mut out = LaurentPoly::zero(f.ring(), d);
    for (e, &c) in f.terms() {
        let mut ne: Exps = SmallVec::from_elem(0, d);
        for (k, &x) in e.iter().enumerate() {
            ne[offset + k] = x;
        }
        out.add_term(ne, c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(r: Ring, e: i32, c: i64) -> LaurentPoly {
        LaurentPoly::from_terms(r, 1, [(vec![e], c)])
    }

    #[test]
    fn derivatives() {
        let r = Ring::zp(5, 2);
        assert_eq!(t(r, 3, 1).derive(0), t(r, 2, 3));
        assert_eq!(t(r, -1, 1).derive(0), t(r, -2, -1));
        let r4 = Ring::zp(2, 2);
        assert_eq!(t(r4, 2, 1).apply_diffop(&[2]), t(r4, 0, 2));
    }

    #[test]
    fn df_over_p_examples() {
        let r = Ring::zp(5, 1);
        let up = r.at_level(2);
        let ch = Chart::affine(r, 1);
        let f = FrobLift::standard(&ch);
        assert_eq!(f.df_over_p().unwrap()[0][0], t(r, 4, 1));
        let f = FrobLift::from_corrections(&ch, &[t(up, 1, 1)]).unwrap();
        assert_eq!(f.df_over_p().unwrap()[0][0], t(r, 4, 1).add(&t(r, 0, 1)));
        let ch2 = Chart::affine(r, 2);
        let a2 = LaurentPoly::from_terms(up, 2, [(vec![1, 1], 1)]);
        let f = FrobLift::from_corrections(&ch2, &[LaurentPoly::zero(up, 2), a2]).unwrap();
        let m = f.df_over_p().unwrap();
        assert_eq!(m[0][1], LaurentPoly::from_terms(r, 2, [(vec![0, 1], 1)]));
        assert_eq!(
            m[1][1],
            LaurentPoly::from_terms(r, 2, [(vec![0, 4], 1), (vec![1, 0], 1)])
        );
    }

    #[test]
    fn atlases() {
        let r = Ring::zp(5, 2);
        let p1 = Atlas::projective_line(r);
        assert!(p1.validate().is_valid(), "{:?}", p1.validate());
        let mut bad = p1.clone();
        bad.transitions.insert((0, 1), vec![t(r, 1, 1)]);
        bad.transitions.insert((1, 0), vec![t(r, 1, 1)]);
        assert!(!bad.validate().is_valid());
        let pp = Atlas::product(&p1, &p1).unwrap();
        assert_eq!(pp.len(), 4);
        assert!(pp.validate().is_valid(), "{:?}", pp.validate());
    }

    #[test]
    fn transported_lift() {
        let r = Ring::zp(5, 2);
        let p1 = Atlas::projective_line(r);
        let f = p1.lift_on_patch(1, &[0, 1]).unwrap();
        // s -> s^p transported to t = 1/s is t -> t^p
        assert_eq!(f.images[0], t(f.up, 5, 1));
    }

    #[test]
    fn inverse_series() {
        let r = Ring::zp(3, 3);
        let f = t(r, 3, 1).add(&t(r, 1, 3));
        let g = f.try_inverse().unwrap();
        assert_eq!(f.mul(&g), LaurentPoly::one(r, 1));
    }
}
