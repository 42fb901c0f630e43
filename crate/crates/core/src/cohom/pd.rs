//! The Čech–de Rham bicomplex built on PD envelopes of diagonals, its
//! evaluation along the diagonal, and the divided Frobenius on it.
//!
//! On U_J with J = (j_0 < … < j_r) the envelope P_J of U_J → U_J^{r+1} has the
//! coordinates t of copy 0 (chart j_0) and PD variables ξ^{(c)}_a = t^{(c)}_a − t_a
//! for c = 1..r, numbered (c−1)·d + a. Forms are dt_a (bit a) and dξ^{(c)}_a
//! (bit d + (c−1)·d + a). The module is pulled back along copy 0 in the frame of
//! chart j_0.

use std::collections::{BTreeMap, BTreeSet, HashMap};


use crate::chart::forms::wedge_left;
use crate::chart::{Exps, FrobLift, LaurentPoly, PolyMat};
use crate::fontaine::pd_taylor;
use crate::pdhopf::{idx_total, idx_zero, indices_up_to, Flavor, Idx, PDPoly};
use crate::ring::{Elem, Ring};

use super::linalg::{sparse_add, Complex, Sparse};
use super::plain::{inverses, CechIdx, GluedModule, PlainKey};
use super::{box_exponents, CohomError};

/// t^e ξ^{[xi]} ω_mask ⊗ e_k on P_J.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PdKey {
    pub j: CechIdx,
    pub mask: u32,
    pub k: u16,
    pub xi: Idx,
    pub e: Exps,
}

impl PdKey {
    pub fn cech(&self) -> usize {
        self.j.len() - 1
    }
    pub fn degree(&self) -> usize {
        self.cech() + self.mask.count_ones() as usize
    }
    pub fn pd_degree(&self) -> u32 {
        idx_total(&self.xi)
    }
    /// Weight in the PD filtration: w_k + |ξ-index| + form degree.
    pub fn weight(&self, g: &GluedModule) -> u32 {
        g.weights[self.k as usize] + self.pd_degree() + self.mask.count_ones()
    }
    pub fn from_plain(k: &PlainKey, d: usize) -> PdKey {
        PdKey {
            j: k.j.clone(),
            mask: k.mask,
            k: k.k,
            xi: idx_zero(k.cech() * d),
            e: k.e.clone(),
        }
    }
}

/// 1-form in the PD variables of some P_J: bit → coefficient.
type OneForm = BTreeMap<u32, PDPoly>;

#[derive(Clone, Debug)]
struct Face {
    /// Images of the source 1-forms (one per source form bit).
    forms: Vec<OneForm>,
    /// Source frame vector k in the target frame: frame[l][k].
    frame: Vec<Vec<PDPoly>>,
    /// H_{c,a} = g_a(t + ξ_{c+1}) − g_a(t + ξ_1) and its divided powers.
    gammas: Vec<Vec<PDPoly>>,
    diffs: Vec<PDPoly>,
}

#[derive(Clone, Debug)]
struct PhiData {
    lift0: FrobLift,
    /// b_c − b_0 per PD variable.
    bdiff: Vec<LaurentPoly>,
    /// eval ∘ ∧(dF/p) on each source form bit.
    forms: Vec<BTreeMap<u32, LaurentPoly>>,
    phi_f: PolyMat,
}

/// Caches shared by the differential, the evaluation and the Frobenius.
pub struct PdContext<'a> {
    pub glued: &'a GluedModule,
    strat: Vec<BTreeMap<Idx, PolyMat>>,
    faces: HashMap<(CechIdx, usize), Face>,
    phis: HashMap<CechIdx, PhiData>,
}

/// (vk)! / (v! (k!)^v) = Π_{i=1}^{v} binom(ik − 1, k − 1).
fn gamma_coeff(r: &Ring, v: u32, k: u32) -> Elem {
    let mut acc = r.one();
    for i in 1..=v {
        acc = r.mul(acc, r.binom((i * k - 1) as u64, (k - 1) as u64));
    }
    acc
}

fn pd_mul(a: &PDPoly, b: &PDPoly) -> PDPoly {
    a.mul(b).expect("same flavor")
}

/// γ_0(h), …, γ_jmax(h) for h in the PD ideal.
pub fn divided_powers(h: &PDPoly, jmax: u32) -> Result<Vec<PDPoly>, CohomError> {
    let r = h.ring;
    let (d, m) = (h.d, h.m);
    let one = PDPoly::one(Flavor::P, r, d, m);
    let zero = PDPoly::zero(Flavor::P, r, d, m);
    let mut acc = vec![zero.clone(); jmax as usize + 1];
    acc[0] = one.clone();
    for ((idx, e), &c) in h.terms() {
        let Some(v0) = idx.iter().position(|&x| x > 0) else {
            return Err(CohomError::Internal("divided power of an element outside the PD ideal".into()));
        };
        let k = idx[v0];
        let mut rest = idx.clone();
        rest[v0] = 0;
        let rest = PDPoly::basis(Flavor::P, r, d, rest);
        let mut tg = vec![one.clone()];
        let mut rest_pow = one.clone();
        for v in 1..=jmax {
            rest_pow = pd_mul(&rest_pow, &rest);
            let mut head = idx_zero(m);
            head[v0] = v * k;
            let ev: Exps = e.iter().map(|x| x * v as i32).collect();
            let mut t = PDPoly::zero(Flavor::P, r, d, m);
            t.add_term(head, ev, r.mul(r.pow(c, v as u64), gamma_coeff(&r, v, k)));
            tg.push(pd_mul(&rest_pow, &t));
        }
        let mut next = vec![zero.clone(); jmax as usize + 1];
        for u in 0..=jmax as usize {
            if acc[u].is_zero() {
                continue;
            }
            for v in 0..=(jmax as usize - u) {
                if tg[v].is_zero() {
                    continue;
                }
                next[u + v] = next[u + v].add(&pd_mul(&acc[u], &tg[v]));
            }
        }
        acc = next;
    }
    Ok(acc)
}

fn wedge_one_forms(forms: &[&OneForm], base: PDPoly) -> BTreeMap<u32, PDPoly> {
    let mut acc: BTreeMap<u32, PDPoly> = BTreeMap::new();
    acc.insert(0, base);
    for f in forms.iter().rev() {
        let mut next: BTreeMap<u32, PDPoly> = BTreeMap::new();
        for (&b, coef) in f.iter() {
            for (&mk, c) in &acc {
                if let Some((nm, sg)) = wedge_left(b as usize, mk) {
                    let t = pd_mul(coef, c);
                    let t = if sg > 0 { t } else { t.scale(t.ring.neg(1)) };
                    let e = next.entry(nm).or_insert_with(|| PDPoly::zero(Flavor::P, t.ring, t.d, t.m));
                    *e = e.add(&t);
                }
            }
        }
        next.retain(|_, v| !v.is_zero());
        acc = next;
    }
    acc
}

impl<'a> PdContext<'a> {
    pub fn new(glued: &'a GluedModule) -> Result<Self, CohomError> {
        let mut strat = Vec::new();
        for c in &glued.conns {
            let n = c.quasi_nilpotence_order(glued.bound.max(c.ring().n() * c.ring().p() as u32 + 2))?;
            let t = c.iterate_table(n);
            strat.push(t.into_iter().filter(|(_, v)| !v.is_zero()).collect());
        }
        Ok(PdContext {
            glued,
            strat,
            faces: HashMap::new(),
            phis: HashMap::new(),
        })
    }

    fn ring(&self) -> Ring {
        self.glued.ring()
    }
    fn d(&self) -> usize {
        self.glued.d()
    }

    pub fn top(&self) -> usize {
        let n = self.glued.atlas.len();
        if n == 0 {
            0
        } else {
            n + self.d() * n
        }
    }

    /// Face data for J ↦ J' = (j, J…) with j < J[0].
    fn face(&mut self, jset: &CechIdx, j: usize) -> Result<&Face, CohomError> {
        let key = (jset.clone(), j);
        if !self.faces.contains_key(&key) {
            let f = self.build_face(jset, j)?;
            self.faces.insert(key.clone(), f);
        }
        Ok(&self.faces[&key])
    }

    fn build_face(&self, jset: &CechIdx, j: usize) -> Result<Face, CohomError> {
        let g = self.glued;
        let r = self.ring();
        let d = self.d();
        let rr = jset.len() - 1;
        let m2 = (rr + 1) * d;
        let j0 = jset[0] as usize;
        let gmap = &g.atlas.transitions[&(j0, j)];
        let bit_dt = |b: usize| b as u32;
        let bit_dxi = |c: usize, b: usize| (d + (c - 1) * d + b) as u32;
        // dg_a(t + ξ_c) as a 1-form for target copy c (c = 0 is the plain copy, no shift)
        let dg = |a: usize, c: usize| -> OneForm {
            let mut out = OneForm::new();
            for b in 0..d {
                let der = gmap[a].derive(b);
                if der.is_zero() {
                    continue;
                }
                let off = if c == 0 { 0 } else { (c - 1) * d };
                let tay = pd_taylor(&der, m2, off);
                let e = out.entry(bit_dt(b)).or_insert_with(|| PDPoly::zero(Flavor::P, r, d, m2));
                *e = e.add(&tay);
                if c > 0 {
                    let e = out.entry(bit_dxi(c, b)).or_insert_with(|| PDPoly::zero(Flavor::P, r, d, m2));
                    *e = e.add(&tay);
                }
            }
            out
        };
        let mut forms = Vec::new();
        for a in 0..d {
            forms.push(dg(a, 1));
        }
        for c in 1..=rr {
            for a in 0..d {
                let mut f = dg(a, c + 1);
                for (b, v) in dg(a, 1) {
                    let e = f.entry(b).or_insert_with(|| PDPoly::zero(Flavor::P, r, d, m2));
                    *e = e.sub(&v);
                }
                f.retain(|_, v| !v.is_zero());
                forms.push(f);
            }
        }
        // frame: E_1 · T(t + ξ_1)
        let t = &g.transitions[&(j0, j)];
        let rank = g.rank;
        let mut e1 = vec![vec![PDPoly::zero(Flavor::P, r, d, m2); rank]; rank];
        for (i, th) in &self.strat[j] {
            let mut idx = idx_zero(m2);
            for a in 0..d {
                idx[a] = i[a];
            }
            for x in 0..rank {
                for y in 0..rank {
                    for (e, &c) in th.get(x, y).terms() {
                        e1[x][y].add_term(idx.clone(), e.clone(), c);
                    }
                }
            }
        }
        let mut frame = vec![vec![PDPoly::zero(Flavor::P, r, d, m2); rank]; rank];
        for k in 0..rank {
            for l in 0..rank {
                let tl = t.get(l, k);
                if tl.is_zero() {
                    continue;
                }
                let tay = pd_taylor(tl, m2, 0);
                for mm in 0..rank {
                    if e1[mm][l].is_zero() {
                        continue;
                    }
                    frame[mm][k] = frame[mm][k].add(&pd_mul(&e1[mm][l], &tay));
                }
            }
        }
        let mut diffs = Vec::new();
        for c in 1..=rr {
            for a in 0..d {
                let h = pd_taylor(&gmap[a], m2, c * d).sub(&pd_taylor(&gmap[a], m2, 0));
                diffs.push(h);
            }
        }
        Ok(Face {
            forms,
            frame,
            gammas: vec![Vec::new(); rr * d],
            diffs,
        })
    }

    fn gamma(&mut self, jset: &CechIdx, j: usize, var: usize, pow: u32) -> Result<PDPoly, CohomError> {
        self.face(jset, j)?;
        let f = self.faces.get_mut(&(jset.clone(), j)).expect("built");
        if f.gammas[var].len() <= pow as usize {
            let want = (pow as usize + 1).max(2 * f.gammas[var].len());
            f.gammas[var] = divided_powers(&f.diffs[var], want as u32 - 1)?;
        }
        Ok(f.gammas[var][pow as usize].clone())
    }

    /// D = δ + (−1)^r ∇ on one PD basis element.
    pub fn differential(&mut self, key: &PdKey) -> Result<Sparse<PdKey>, CohomError> {
        let g = self.glued;
        let r = self.ring();
        let d = self.d();
        let n = g.atlas.len();
        let rr = key.cech();
        let mut out = Sparse::new();
        let signed = |c: usize, x: Elem| if c % 2 == 0 { x } else { r.neg(x) };
        for j in 0..n {
            if key.j.iter().any(|&x| x as usize == j) {
                continue;
            }
            let mut jj: CechIdx = key.j.clone();
            jj.push(j as u8);
            jj.sort();
            let c = jj.iter().position(|&x| x as usize == j).expect("inserted");
            if c != 0 {
                let newc = |cc: usize| if cc < c { cc } else { cc + 1 };
                let mut xi = idx_zero((rr + 1) * d);
                let mut mask = key.mask & ((1 << d) - 1);
                for cc in 1..=rr {
                    for a in 0..d {
                        xi[(newc(cc) - 1) * d + a] = key.xi[(cc - 1) * d + a];
                        if key.mask & (1 << (d + (cc - 1) * d + a)) != 0 {
                            mask |= 1 << (d + (newc(cc) - 1) * d + a);
                        }
                    }
                }
                let nk = PdKey {
                    j: jj,
                    mask,
                    k: key.k,
                    xi,
                    e: key.e.clone(),
                };
                sparse_add(&r, &mut out, nk, signed(c, 1));
                continue;
            }
            let img = self.face_image(key, &jj, j)?;
            for (nk, v) in img {
                sparse_add(&r, &mut out, nk, v);
            }
        }
        // ∇ on P_J
        let conn = &g.conns[key.j[0] as usize];
        let nbits = d * (rr + 1);
        for v in 0..nbits {
            let Some((nm, sg)) = wedge_left(v, key.mask) else {
                continue;
            };
            let sg = if rr % 2 == 0 { sg } else { -sg };
            let sgn = |x: Elem| if sg > 0 { x } else { r.neg(x) };
            if v < d {
                let ev = key.e[v];
                if ev != 0 {
                    let mut e = key.e.clone();
                    e[v] -= 1;
                    let nk = PdKey {
                        mask: nm,
                        e,
                        ..key.clone()
                    };
                    sparse_add(&r, &mut out, nk, sgn(r.from_int(ev as i64)));
                }
                for l in 0..g.rank {
                    for (ae, &cf) in conn.a[v].get(l, key.k as usize).terms() {
                        let e: Exps = key.e.iter().zip(ae).map(|(x, y)| x + y).collect();
                        let nk = PdKey {
                            j: key.j.clone(),
                            mask: nm,
                            k: l as u16,
                            xi: key.xi.clone(),
                            e,
                        };
                        sparse_add(&r, &mut out, nk, sgn(cf));
                    }
                }
            } else {
                let w = v - d;
                if key.xi[w] > 0 {
                    let mut xi = key.xi.clone();
                    xi[w] -= 1;
                    let nk = PdKey {
                        mask: nm,
                        xi,
                        ..key.clone()
                    };
                    sparse_add(&r, &mut out, nk, sgn(1));
                }
            }
        }
        Ok(out)
    }

    fn face_image(&mut self, key: &PdKey, jj: &CechIdx, j: usize) -> Result<Sparse<PdKey>, CohomError> {
        let g = self.glued;
        let r = self.ring();
        let d = self.d();
        let rr = key.cech();
        let m2 = (rr + 1) * d;
        let j0 = key.j[0] as usize;
        let gmap = &g.atlas.transitions[&(j0, j)];
        let mono = LaurentPoly::monomial(r, key.e.clone(), 1);
        let f = mono.substitute(gmap, &inverses(gmap))?;
        let mut base = pd_taylor(&f, m2, 0);
        for var in 0..rr * d {
            let pw = key.xi[var];
            if pw > 0 {
                let gm = self.gamma(&key.j, j, var, pw)?;
                base = pd_mul(&base, &gm);
            }
        }
        let face = self.face(&key.j, j)?;
        let bits: Vec<usize> = (0..d * (rr + 1)).filter(|b| key.mask & (1 << b) != 0).collect();
        let fl: Vec<&OneForm> = bits.iter().map(|&b| &face.forms[b]).collect();
        let form = wedge_one_forms(&fl, base);
        let mut out = Sparse::new();
        for l in 0..g.rank {
            let fr = &face.frame[l][key.k as usize];
            if fr.is_zero() {
                continue;
            }
            for (&mk, coef) in &form {
                let prod = pd_mul(coef, fr);
                for ((xi, e), &c) in prod.terms() {
                    let nk = PdKey {
                        j: jj.clone(),
                        mask: mk,
                        k: l as u16,
                        xi: xi.clone(),
                        e: e.clone(),
                    };
                    sparse_add(&r, &mut out, nk, c);
                }
            }
        }
        Ok(out)
    }

    /// Diagonal evaluation: ξ ↦ 0, dξ ↦ 0, dt ↦ dt.
    pub fn eval(&self, key: &PdKey) -> Option<PlainKey> {
        let d = self.d();
        if key.xi.iter().any(|&x| x > 0) || key.mask >> d != 0 {
            return None;
        }
        Some(PlainKey {
            j: key.j.clone(),
            mask: key.mask,
            k: key.k,
            e: key.e.clone(),
        })
    }

    pub fn eval_vec(&self, x: &Sparse<PdKey>) -> Sparse<PlainKey> {
        let r = self.ring();
        let mut out = Sparse::new();
        for (k, &c) in x {
            if let Some(pk) = self.eval(k) {
                sparse_add(&r, &mut out, pk, c);
            }
        }
        out
    }

    fn phi_data(&mut self, jset: &CechIdx) -> Result<&PhiData, CohomError> {
        if !self.phis.contains_key(jset) {
            let g = self.glued;
            let d = self.d();
            let js: Vec<usize> = jset.iter().map(|&x| x as usize).collect();
            let phis = g
                .frobenius
                .as_ref()
                .ok_or_else(|| CohomError::Invalid("no Frobenius data".into()))?;
            let lifts: Vec<FrobLift> = js
                .iter()
                .map(|&c| g.atlas.lift_on_patch(c, &js))
                .collect::<Result<_, _>>()?;
            let b0 = lifts[0].corrections();
            let m0 = lifts[0].df_over_p()?;
            let mut bdiff = Vec::new();
            let mut forms = Vec::new();
            for a in 0..d {
                let mut f = BTreeMap::new();
                for b in 0..d {
                    if !m0[b][a].is_zero() {
                        f.insert(b as u32, m0[b][a].clone());
                    }
                }
                forms.push(f);
            }
            for lc in &lifts[1..] {
                let bc = lc.corrections();
                let mc = lc.df_over_p()?;
                for a in 0..d {
                    bdiff.push(bc[a].sub(&b0[a]));
                    let mut f = BTreeMap::new();
                    for b in 0..d {
                        let v = mc[b][a].sub(&m0[b][a]);
                        if !v.is_zero() {
                            f.insert(b as u32, v);
                        }
                    }
                    forms.push(f);
                }
            }
            let data = PhiData {
                lift0: lifts[0].clone(),
                bdiff,
                forms,
                phi_f: phis[js[0]].clone(),
            };
            self.phis.insert(jset.clone(), data);
        }
        Ok(&self.phis[jset])
    }

    /// eval ∘ (φ^{i−s} ⊗ ∧^s(dF/p)) on one PD basis element of weight ≥ i.
    pub fn phi_eval(&mut self, i: i32, key: &PdKey) -> Result<Sparse<PlainKey>, CohomError> {
        let g = self.glued;
        let r = self.ring();
        let d = self.d();
        let w = key.weight(g) as i32;
        if w < i {
            return Err(CohomError::Fontaine(crate::fontaine::FontaineError::OutsideFiltration(i)));
        }
        let s = key.mask.count_ones() as i32;
        let wk = g.weights[key.k as usize] as i32;
        let tot = key.pd_degree() as i32;
        let expo = tot + wk - (i - s);
        let parts: Vec<u64> = key.xi.iter().map(|&x| x as u64).collect();
        let scal = r.p_pow_over_multifactorial(expo as u32, &parts)?;
        if scal == 0 {
            return Ok(Sparse::new());
        }
        let data = self.phi_data(&key.j)?;
        let mono = LaurentPoly::monomial(r, key.e.clone(), 1);
        let mut f = data.lift0.apply(&mono)?.scale(scal);
        for (v, &pw) in key.xi.iter().enumerate() {
            if pw > 0 {
                f = f.mul(&data.bdiff[v].pow(pw));
            }
        }
        if f.is_zero() {
            return Ok(Sparse::new());
        }
        let mut form: BTreeMap<u32, LaurentPoly> = BTreeMap::new();
        form.insert(0, f);
        let bits: Vec<usize> = (0..32).filter(|b| key.mask & (1 << b) != 0).collect();
        for &b in bits.iter().rev() {
            let mut next: BTreeMap<u32, LaurentPoly> = BTreeMap::new();
            for (&bb, coef) in &data.forms[b] {
                for (&mk, c) in &form {
                    if let Some((nm, sg)) = wedge_left(bb as usize, mk) {
                        next.entry(nm)
                            .or_insert_with(|| LaurentPoly::zero(r, d))
                            .add_assign(&coef.mul(c).scale_int(sg));
                    }
                }
            }
            next.retain(|_, v| !v.is_zero());
            form = next;
        }
        let mut out = Sparse::new();
        for l in 0..g.rank {
            let ph = data.phi_f.get(l, key.k as usize);
            if ph.is_zero() {
                continue;
            }
            for (&mk, coef) in &form {
                for (e, &c) in coef.mul(ph).terms() {
                    let pk = PlainKey {
                        j: key.j.clone(),
                        mask: mk,
                        k: l as u16,
                        e: e.clone(),
                    };
                    sparse_add(&r, &mut out, pk, c);
                }
            }
        }
        Ok(out)
    }

    /// eval ∘ φ^i_C on a chain, with σ on the coefficients.
    pub fn phi_eval_vec(&mut self, i: i32, x: &Sparse<PdKey>) -> Result<Sparse<PlainKey>, CohomError> {
        let r = self.ring();
        let mut out = Sparse::new();
        for (k, &c) in x {
            let img = self.phi_eval(i, k)?;
            let sc = r.sigma(c);
            for (pk, v) in img {
                sparse_add(&r, &mut out, pk, r.mul(v, sc));
            }
        }
        Ok(out)
    }
}

/// The capped total complex on PD envelopes.
#[derive(Clone, Debug)]
pub struct PdBicomplex {
    pub cap: i32,
    pub cap_pd: u32,
    pub complex: Complex<PdKey>,
}

impl PdBicomplex {
    pub fn seeds(ctx: &PdContext, cap: i32, cap_pd: u32) -> Vec<BTreeSet<PdKey>> {
        let g = ctx.glued;
        let d = g.d();
        let top = ctx.top();
        let mut seeds = vec![BTreeSet::new(); top];
        for rr in 0..g.atlas.len() {
            for jset in g.atlas.cech_sets(rr) {
                let patch = g.atlas.patch(&jset);
                let jj: CechIdx = jset.iter().map(|&x| x as u8).collect();
                let exps = box_exponents(&patch, cap);
                let xis = indices_up_to(rr * d, if rr == 0 { 0 } else { cap_pd });
                let nbits = d * (rr + 1);
                for mask in 0u32..(1 << nbits) {
                    let deg = rr + mask.count_ones() as usize;
                    for k in 0..g.rank {
                        for xi in &xis {
                            for e in &exps {
                                seeds[deg].insert(PdKey {
                                    j: jj.clone(),
                                    mask,
                                    k: k as u16,
                                    xi: xi.clone(),
                                    e: e.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
        seeds
    }

    pub fn build_with(ctx: &mut PdContext, seeds: Vec<BTreeSet<PdKey>>, cap: i32, cap_pd: u32) -> Result<PdBicomplex, CohomError> {
        let complex = Complex::build(ctx.ring(), seeds, |_, k| ctx.differential(k))?;
        Ok(PdBicomplex { cap, cap_pd, complex })
    }

    pub fn build(ctx: &mut PdContext, cap: i32, cap_pd: u32) -> Result<PdBicomplex, CohomError> {
        let seeds = Self::seeds(ctx, cap, cap_pd);
        Self::build_with(ctx, seeds, cap, cap_pd)
    }
}

/// Keys of a sparse vector, by degree, for seeding.
pub fn keys_by_degree<K: Ord + Clone>(top: usize, vecs: &[(usize, &Sparse<K>)]) -> Vec<BTreeSet<K>> {
    let mut out = vec![BTreeSet::new(); top];
    for (deg, v) in vecs {
        for k in v.keys() {
            out[*deg].insert(k.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Atlas;
    use smallvec::SmallVec;

    fn unit_exps(d: usize) -> Exps {
        SmallVec::from_elem(0, d)
    }

    #[test]
    fn divided_power_rules() {
        let r = Ring::zp(3, 3);
        let x = PDPoly::gen(Flavor::P, r, 1, 2, 0);
        let y = PDPoly::gen(Flavor::P, r, 1, 2, 1);
        let g = divided_powers(&x.add(&y), 4).unwrap();
        // γ_3(ξ + η) = Σ ξ^[a] η^[3-a]
        let mut want = PDPoly::zero(Flavor::P, r, 1, 2);
        for a in 0..=3u32 {
            let mut idx = idx_zero(2);
            idx[0] = a;
            idx[1] = 3 - a;
            want.add_term(idx, unit_exps(1), 1);
        }
        assert_eq!(g[3], want);
        // γ_2(ξ^[2]) = 3 ξ^[4]
        let x2 = PDPoly::basis(Flavor::P, r, 1, SmallVec::from_slice(&[2, 0]));
        let g = divided_powers(&x2, 2).unwrap();
        let mut want = PDPoly::zero(Flavor::P, r, 1, 2);
        want.add_term(SmallVec::from_slice(&[4, 0]), unit_exps(1), 3);
        assert_eq!(g[2], want);
        // j! γ_j(h) = h^j
        let h = x.add(&y.scale(5));
        let g = divided_powers(&h, 3).unwrap();
        let cube = pd_mul(&pd_mul(&h, &h), &h);
        assert_eq!(g[3].scale(6), cube);
    }

    #[test]
    fn pd_complex_is_a_complex() {
        let r = Ring::zp(5, 2);
        let g = GluedModule::structure_sheaf(&Atlas::projective_line(r));
        let mut ctx = PdContext::new(&g).unwrap();
        let b = PdBicomplex::build(&mut ctx, 2, 3).unwrap();
        assert!(b.complex.check_d_squared());
        assert_eq!(b.complex.len(), 4);
    }
}
