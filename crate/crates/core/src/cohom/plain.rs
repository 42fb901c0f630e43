//! Glued modules with connection on a finite atlas and their Čech–de Rham
//! bicomplex within a Laurent degree cap.

use std::collections::{BTreeMap, BTreeSet};

use smallvec::SmallVec;

use crate::chart::forms::wedge_left;
use crate::chart::{Atlas, Exps, LaurentPoly, PolyMat};
use crate::conn::{ConnModule, Lambda};
use crate::fontaine::FontaineModule;
use crate::ring::{Elem, Ring};

use super::linalg::{sparse_add, Complex, Sparse};
use super::{box_exponents, CohomError};

pub type CechIdx = SmallVec<[u8; 4]>;

/// A module with connection on each chart of an atlas, glued by frame changes.
///
/// `transitions[(i, j)]` writes the frame of chart i in the frame of chart j, as
/// a matrix over chart j's coordinates. Every chart uses a frame adapted to the
/// filtration: frame vector k spans weight `weights[k]`.
#[derive(Clone, Debug)]
pub struct GluedModule {
    pub atlas: Atlas,
    pub rank: usize,
    pub weights: Vec<u32>,
    pub conns: Vec<ConnModule>,
    pub transitions: BTreeMap<(usize, usize), PolyMat>,
    /// φ_F per chart, for the lift `atlas.lifts[j]`.
    pub frobenius: Option<Vec<PolyMat>>,
    pub bound: u32,
}

impl GluedModule {
    pub fn structure_sheaf(atlas: &Atlas) -> GluedModule {
        let r = atlas.ring;
        let d = atlas.d;
        let conns = atlas
            .charts
            .iter()
            .map(|c| ConnModule::trivial(c, 1, Lambda::One))
            .collect();
        let mut transitions = BTreeMap::new();
        for &(i, j) in atlas.transitions.keys() {
            transitions.insert((i, j), PolyMat::identity(r, d, 1));
        }
        GluedModule {
            atlas: atlas.clone(),
            rank: 1,
            weights: vec![0],
            conns,
            transitions,
            frobenius: Some(vec![PolyMat::identity(r, d, 1); atlas.len()]),
            bound: r.n() + 2,
        }
    }

    /// One chart, any λ (a Higgs module gives the Dolbeault complex).
    pub fn single_chart(atlas: &Atlas, conn: ConnModule, weights: Vec<u32>) -> Result<GluedModule, CohomError> {
        if atlas.len() != 1 {
            return Err(CohomError::Invalid("single_chart needs a one-chart atlas".into()));
        }
        let g = GluedModule {
            atlas: atlas.clone(),
            rank: conn.rank,
            weights,
            conns: vec![conn],
            transitions: BTreeMap::new(),
            frobenius: None,
            bound: atlas.ring.n() + 2,
        };
        g.validate()?;
        Ok(g)
    }

    /// Glues Fontaine modules given on the charts with their atlas lifts.
    pub fn from_fontaine(
        atlas: &Atlas,
        modules: &[FontaineModule],
        transitions: BTreeMap<(usize, usize), PolyMat>,
    ) -> Result<GluedModule, CohomError> {
        if modules.len() != atlas.len() || modules.is_empty() {
            return Err(CohomError::Invalid("one Fontaine module per chart is required".into()));
        }
        for (j, m) in modules.iter().enumerate() {
            if m.lift != atlas.lifts[j] {
                return Err(CohomError::Invalid(format!("module {j} is keyed to a different lift")));
            }
        }
        let weights = modules[0].weights().to_vec();
        let g = GluedModule {
            atlas: atlas.clone(),
            rank: modules[0].filtered.rank(),
            weights,
            conns: modules.iter().map(|m| m.filtered.adapted.clone()).collect(),
            transitions,
            frobenius: Some(modules.iter().map(|m| m.phi_f.clone()).collect()),
            bound: modules.iter().map(|m| m.bound).max().unwrap_or(1),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn ring(&self) -> Ring {
        self.atlas.ring
    }
    pub fn d(&self) -> usize {
        self.atlas.d
    }
    pub fn level(&self) -> u32 {
        self.weights.iter().copied().max().unwrap_or(0)
    }
    /// Number of total degrees: Čech degrees 0..N-1 plus forms up to d.
    pub fn degrees(&self) -> usize {
        if self.atlas.is_empty() {
            0
        } else {
            self.atlas.len() + self.d()
        }
    }

    pub fn validate(&self) -> Result<(), CohomError> {
        let n = self.atlas.len();
        let d = self.d();
        let r = self.ring();
        if self.conns.len() != n {
            return Err(CohomError::Invalid(format!("{} connections for {n} charts", self.conns.len())));
        }
        if self.weights.len() != self.rank {
            return Err(CohomError::Invalid("weights must list one entry per frame vector".into()));
        }
        for (j, c) in self.conns.iter().enumerate() {
            if c.rank != self.rank || c.d() != d || c.ring() != r {
                return Err(CohomError::Invalid(format!("connection on chart {j} has the wrong shape")));
            }
            if n > 1 && c.lambda != Lambda::One {
                return Err(CohomError::Invalid("multi-chart modules need λ = 1".into()));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let t = self
                    .transitions
                    .get(&(i, j))
                    .ok_or_else(|| CohomError::Invalid(format!("missing frame change ({i}, {j})")))?;
                if t.rows != self.rank || t.cols != self.rank || t.nvars != d {
                    return Err(CohomError::Invalid(format!("frame change ({i}, {j}) has the wrong shape")));
                }
                for l in 0..self.rank {
                    for k in 0..self.rank {
                        if self.weights[l] < self.weights[k] && !t.get(l, k).is_zero() {
                            return Err(CohomError::Invalid(format!(
                                "frame change ({i}, {j}) does not preserve the filtration at ({l}, {k})"
                            )));
                        }
                    }
                }
            }
        }
        if let Some(f) = &self.frobenius {
            if f.len() != n {
                return Err(CohomError::Invalid("one φ_F per chart is required".into()));
            }
        }
        let b = PlainBicomplex::build(self, 1)?;
        if !b.complex.check_d_squared() {
            return Err(CohomError::Invalid(
                "D∘D ≠ 0: frame changes are not horizontal or fail the cocycle".into(),
            ));
        }
        Ok(())
    }
}

/// Basis element t^e dt_mask ⊗ e_k on U_J, in the coordinates and frame of chart J[0].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlainKey {
    pub j: CechIdx,
    pub mask: u32,
    pub k: u16,
    pub e: Exps,
}

impl PlainKey {
    pub fn cech(&self) -> usize {
        self.j.len() - 1
    }
    pub fn degree(&self) -> usize {
        self.cech() + self.mask.count_ones() as usize
    }
    pub fn weight(&self, g: &GluedModule) -> u32 {
        g.weights[self.k as usize] + self.mask.count_ones()
    }
}

/// f(u) ∧_{a ∈ mask} du_a as a form over the target chart.
pub(crate) fn transport_form(
    f: &LaurentPoly,
    mask: u32,
    u: &[LaurentPoly],
    u_inv: &[Option<LaurentPoly>],
    d: usize,
) -> Result<BTreeMap<u32, LaurentPoly>, CohomError> {
    let base = f.substitute(u, u_inv)?;
    let mut form: BTreeMap<u32, LaurentPoly> = BTreeMap::new();
    form.insert(0, base);
    let idx: Vec<usize> = (0..d).filter(|a| mask & (1 << a) != 0).collect();
    for &a in idx.iter().rev() {
        let mut next: BTreeMap<u32, LaurentPoly> = BTreeMap::new();
        for b in 0..d {
            let du = u[a].derive(b);
            if du.is_zero() {
                continue;
            }
            for (&m, c) in &form {
                if let Some((nm, sgn)) = wedge_left(b, m) {
                    let e = next.entry(nm).or_insert_with(|| LaurentPoly::zero(f.ring(), d));
                    e.add_assign(&du.mul(c).scale_int(sgn));
                }
            }
        }
        form = next;
    }
    form.retain(|_, v| !v.is_zero());
    Ok(form)
}

pub(crate) fn inverses(u: &[LaurentPoly]) -> Vec<Option<LaurentPoly>> {
    u.iter().map(|x| x.try_inverse().ok()).collect()
}

/// The total differential D = δ + (−1)^r ∇ on one basis element.
pub fn plain_differential(g: &GluedModule, key: &PlainKey) -> Result<Sparse<PlainKey>, CohomError> {
    let r = g.ring();
    let d = g.d();
    let n = g.atlas.len();
    let signed = |c: usize, x: Elem| if c % 2 == 0 { x } else { r.neg(x) };
    let mut out = Sparse::new();
    let j0 = key.j[0] as usize;
    let rr = key.cech();
    // Čech part
    for j in 0..n {
        if key.j.iter().any(|&x| x as usize == j) {
            continue;
        }
        let mut jj: CechIdx = key.j.clone();
        jj.push(j as u8);
        jj.sort();
        let c = jj.iter().position(|&x| x as usize == j).expect("inserted");
        if c != 0 {
            let nk = PlainKey {
                j: jj,
                ..key.clone()
            };
            sparse_add(&r, &mut out, nk, signed(c, 1));
            continue;
        }
        let u = &g.atlas.transitions[&(j0, j)];
        let uinv = inverses(u);
        let mono = LaurentPoly::monomial(r, key.e.clone(), 1);
        let form = transport_form(&mono, key.mask, u, &uinv, d)?;
        let t = &g.transitions[&(j0, j)];
        for l in 0..g.rank {
            let tl = t.get(l, key.k as usize);
            if tl.is_zero() {
                continue;
            }
            for (&m, f) in &form {
                let prod = f.mul(tl);
                for (e, &cf) in prod.terms() {
                    let nk = PlainKey {
                        j: jj.clone(),
                        mask: m,
                        k: l as u16,
                        e: e.clone(),
                    };
                    sparse_add(&r, &mut out, nk, signed(c, cf));
                }
            }
        }
    }
    // de Rham part
    let conn = &g.conns[j0];
    let lam = conn.lambda.value(&r);
    for i in 0..d {
        let Some((nm, sg)) = wedge_left(i, key.mask) else {
            continue;
        };
        let sg = if rr % 2 == 0 { sg } else { -sg };
        let sgn = |x: Elem| if sg > 0 { x } else { r.neg(x) };
        let ei = key.e[i];
        if ei != 0 && lam != 0 {
            let mut e = key.e.clone();
            e[i] -= 1;
            let cf = r.mul(lam, r.from_int(ei as i64));
            sparse_add(
                &r,
                &mut out,
                PlainKey {
                    j: key.j.clone(),
                    mask: nm,
                    k: key.k,
                    e,
                },
                sgn(cf),
            );
        }
        for l in 0..g.rank {
            let a = conn.a[i].get(l, key.k as usize);
            for (ae, &cf) in a.terms() {
                let e: Exps = key.e.iter().zip(ae).map(|(x, y)| x + y).collect();
                sparse_add(
                    &r,
                    &mut out,
                    PlainKey {
                        j: key.j.clone(),
                        mask: nm,
                        k: l as u16,
                        e,
                    },
                    sgn(cf),
                );
            }
        }
    }
    Ok(out)
}

/// The capped total complex of the Čech–de Rham bicomplex.
#[derive(Clone, Debug)]
pub struct PlainBicomplex {
    pub cap: i32,
    pub complex: Complex<PlainKey>,
}

impl PlainBicomplex {
    /// Seeds: every t^e dt_mask e_k with e in the cap box of U_J, closed under D.
    pub fn seeds(g: &GluedModule, cap: i32) -> Vec<BTreeSet<PlainKey>> {
        let top = g.degrees();
        let d = g.d();
        let mut seeds = vec![BTreeSet::new(); top];
        for rr in 0..g.atlas.len() {
            for jset in g.atlas.cech_sets(rr) {
                let patch = g.atlas.patch(&jset);
                let jj: CechIdx = jset.iter().map(|&x| x as u8).collect();
                let exps = box_exponents(&patch, cap);
                for mask in 0u32..(1 << d) {
                    let deg = rr + mask.count_ones() as usize;
                    for k in 0..g.rank {
                        for e in &exps {
                            seeds[deg].insert(PlainKey {
                                j: jj.clone(),
                                mask,
                                k: k as u16,
                                e: e.clone(),
                            });
                        }
                    }
                }
            }
        }
        seeds
    }

    pub fn build(g: &GluedModule, cap: i32) -> Result<PlainBicomplex, CohomError> {
        Self::build_with(g, Self::seeds(g, cap), cap)
    }

    pub fn build_with(g: &GluedModule, seeds: Vec<BTreeSet<PlainKey>>, cap: i32) -> Result<PlainBicomplex, CohomError> {
        let complex = Complex::build(g.ring(), seeds, |_, k| plain_differential(g, k))?;
        Ok(PlainBicomplex { cap, complex })
    }

    /// F^i: weight w_k + s ≥ i.
    pub fn filtration(&self, g: &GluedModule, i: i32) -> Result<Complex<PlainKey>, CohomError> {
        self.complex.restrict(|k| k.weight(g) as i32 >= i, false)
    }

    /// gr^i = F^i / F^{i+1}.
    pub fn graded(&self, g: &GluedModule, i: i32) -> Result<Complex<PlainKey>, CohomError> {
        self.complex.restrict(|k| k.weight(g) as i32 == i, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Chart, FrobLift};

    #[test]
    fn differential_squares_to_zero() {
        let r = Ring::zp(5, 2);
        let g = GluedModule::structure_sheaf(&Atlas::projective_line(r));
        g.validate().unwrap();
        let b = PlainBicomplex::build(&g, 3).unwrap();
        assert!(b.complex.check_d_squared());
        assert_eq!(b.complex.len(), 3);
    }

    #[test]
    fn affine_line_constants() {
        let r = Ring::zp(5, 1);
        let ch = Chart::affine(r, 1);
        let a = Atlas::single(ch.clone(), FrobLift::standard(&ch));
        let g = GluedModule::single_chart(&a, ConnModule::trivial(&ch, 1, Lambda::One), vec![0]).unwrap();
        for cap in 1..4 {
            let b = PlainBicomplex::build(&g, cap).unwrap();
            let h0 = b.complex.cohomology(0);
            assert_eq!(h0.exps, vec![1]);
        }
    }

    #[test]
    fn empty_atlas() {
        let r = Ring::zp(3, 1);
        let g = GluedModule::structure_sheaf(&Atlas::empty(r, 1));
        let b = PlainBicomplex::build(&g, 2).unwrap();
        for m in 0..3 {
            assert!(b.complex.cohomology(m).exps.is_empty());
        }
    }
}
