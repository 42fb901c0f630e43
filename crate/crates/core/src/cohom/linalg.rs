//! Sparse cochain complexes over GR(p^n, s) and their cohomology, computed
//! component by component with dense Howell and Smith reductions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

use crate::ring::{howell, kernel, smith, solve, Elem, HowellForm, Ring, RingMatrix};

use super::CohomError;

/// Keyed sparse vector.
pub type Sparse<K> = BTreeMap<K, Elem>;

pub fn sparse_add<K: Ord>(r: &Ring, acc: &mut Sparse<K>, k: K, c: Elem) {
    if c == 0 {
        return;
    }
    let v = acc.get(&k).copied().unwrap_or(0);
    let s = r.add(v, c);
    if s == 0 {
        acc.remove(&k);
    } else {
        acc.insert(k, s);
    }
}

pub fn sparse_axpy<K: Ord + Clone>(r: &Ring, acc: &mut Sparse<K>, x: &Sparse<K>, f: Elem) {
    if f == 0 {
        return;
    }
    for (k, &c) in x {
        sparse_add(r, acc, k.clone(), r.mul(c, f));
    }
}

pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }
    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

/// A cochain complex with a keyed basis in each degree 0..len.
#[derive(Clone, Debug)]
pub struct Complex<K> {
    pub ring: Ring,
    pub basis: Vec<Vec<K>>,
    pub index: Vec<BTreeMap<K, usize>>,
    /// d[m][j]: image of basis[m][j] in degree m+1.
    pub d: Vec<Vec<Vec<(usize, Elem)>>>,
}

impl<K: Ord + Clone + Debug> Complex<K> {
    /// Smallest complex containing the seeds and closed under the differential.
    pub fn build<E, F>(ring: Ring, seeds: Vec<BTreeSet<K>>, mut diff: F) -> Result<Self, E>
    where
        F: FnMut(usize, &K) -> Result<Sparse<K>, E>,
    {
        let top = seeds.len();
        let mut pending = seeds;
        let mut basis = Vec::new();
        let mut keyed: Vec<Vec<Sparse<K>>> = Vec::new();
        for m in 0..top {
            let keys: Vec<K> = pending[m].iter().cloned().collect();
            let mut imgs = Vec::with_capacity(keys.len());
            for k in &keys {
                let img = diff(m, k)?;
                if m + 1 < top {
                    for kk in img.keys() {
                        pending[m + 1].insert(kk.clone());
                    }
                } else {
                    assert!(img.is_empty(), "differential leaves the top degree at {k:?}");
                }
                imgs.push(img);
            }
            basis.push(keys);
            keyed.push(imgs);
        }
        let index: Vec<BTreeMap<K, usize>> = basis
            .iter()
            .map(|b| b.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect())
            .collect();
        let d = keyed
            .into_iter()
            .enumerate()
            .map(|(m, imgs)| {
                imgs.into_iter()
                    .map(|img| img.into_iter().map(|(k, c)| (index[m + 1][&k], c)).collect())
                    .collect()
            })
            .collect();
        Ok(Complex {
            ring,
            basis,
            index,
            d,
        })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }
    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
    pub fn dim(&self, m: usize) -> usize {
        self.basis.get(m).map(|b| b.len()).unwrap_or(0)
    }
    pub fn total_dim(&self) -> usize {
        self.basis.iter().map(|b| b.len()).sum()
    }

    /// Subcomplex (`quotient = false`) or quotient by the complement
    /// (`quotient = true`) on the keys satisfying `keep`.
    pub fn restrict<P: Fn(&K) -> bool>(&self, keep: P, quotient: bool) -> Result<Complex<K>, CohomError> {
        let basis: Vec<Vec<K>> = self
            .basis
            .iter()
            .map(|b| b.iter().filter(|k| keep(k)).cloned().collect())
            .collect();
        let index: Vec<BTreeMap<K, usize>> = basis
            .iter()
            .map(|b| b.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect())
            .collect();
        let mut d = Vec::new();
        for m in 0..self.len() {
            let mut dm = Vec::new();
            for k in &basis[m] {
                let j = self.index[m][k];
                let mut img = Vec::new();
                for &(t, c) in &self.d[m][j] {
                    let tk = &self.basis[m + 1][t];
                    match index[m + 1].get(tk) {
                        Some(&ti) => img.push((ti, c)),
                        None if quotient => {}
                        None => {
                            return Err(CohomError::Internal(format!(
                                "not a subcomplex: {k:?} reaches {tk:?}"
                            )))
                        }
                    }
                }
                dm.push(img);
            }
            d.push(dm);
        }
        Ok(Complex {
            ring: self.ring,
            basis,
            index,
            d,
        })
    }

    /// Replaces each entry c of d(b) at b' by c · scale(b, b').
    pub fn rescale<S: Fn(&K, &K) -> Elem>(&self, scale: S) -> Complex<K> {
        let r = self.ring;
        let mut out = self.clone();
        for m in 0..self.len() {
            for (j, img) in out.d[m].iter_mut().enumerate() {
                let src = &self.basis[m][j];
                for (t, c) in img.iter_mut() {
                    *c = r.mul(*c, scale(src, &self.basis[m + 1][*t]));
                }
                img.retain(|x| x.1 != 0);
            }
        }
        out
    }

    /// d applied to a keyed vector of degree m.
    pub fn apply_d(&self, m: usize, x: &Sparse<K>) -> Result<Sparse<K>, CohomError> {
        let r = self.ring;
        let mut out = Sparse::new();
        for (k, &c) in x {
            let j = *self.index[m]
                .get(k)
                .ok_or_else(|| CohomError::OutsideCap(format!("{k:?}")))?;
            for &(t, e) in &self.d[m][j] {
                sparse_add(&r, &mut out, self.basis[m + 1][t].clone(), r.mul(c, e));
            }
        }
        Ok(out)
    }

    /// d∘d = 0 on every basis element.
    pub fn check_d_squared(&self) -> bool {
        let r = self.ring;
        for m in 0..self.len().saturating_sub(1) {
            for img in &self.d[m] {
                let mut acc: BTreeMap<usize, Elem> = BTreeMap::new();
                for &(t, c) in img {
                    for &(u, e) in &self.d[m + 1][t] {
                        sparse_add(&r, &mut acc, u, r.mul(c, e));
                    }
                }
                if !acc.is_empty() {
                    return false;
                }
            }
        }
        true
    }

    pub fn cohomology(&self, m: usize) -> Cohomology<K> {
        Cohomology::compute(self, m)
    }
}

#[derive(Clone, Debug)]
struct Comp {
    cols: Vec<usize>,
    zh: Option<HowellForm>,
    p: RingMatrix,
    exps: Vec<(usize, u32)>,
}

/// H^m of a complex as ⊕ W/p^{e_i}, with cocycle representatives and a
/// coordinate map on cocycles.
#[derive(Clone, Debug)]
pub struct Cohomology<K> {
    pub degree: usize,
    pub exps: Vec<u32>,
    pub gens: Vec<Sparse<K>>,
    comp_of: Vec<usize>,
    comps: Vec<Comp>,
    offsets: Vec<usize>,
}

impl<K: Ord + Clone + Debug> Cohomology<K> {
    fn compute(cx: &Complex<K>, m: usize) -> Self {
        let r = cx.ring;
        let n_prev = if m > 0 { cx.dim(m - 1) } else { 0 };
        let n_cur = cx.dim(m);
        let n_next = cx.dim(m + 1);
        let mut dsu = Dsu::new(n_prev + n_cur + n_next);
        if n_prev > 0 {
            for (b, img) in cx.d[m - 1].iter().enumerate() {
                for &(t, _) in img {
                    dsu.union(b, n_prev + t);
                }
            }
        }
        if n_cur > 0 && m + 1 < cx.len() {
            for (c, img) in cx.d[m].iter().enumerate() {
                for &(t, _) in img {
                    dsu.union(n_prev + c, n_prev + n_cur + t);
                }
            }
        }
        let mut comp_ids: BTreeMap<usize, usize> = BTreeMap::new();
        let mut members: Vec<(Vec<usize>, Vec<usize>, Vec<usize>)> = Vec::new();
        let mut comp_of = vec![usize::MAX; n_cur];
        for c in 0..n_cur {
            let root = dsu.find(n_prev + c);
            let id = *comp_ids.entry(root).or_insert_with(|| {
                members.push((Vec::new(), Vec::new(), Vec::new()));
                members.len() - 1
            });
            comp_of[c] = id;
            members[id].1.push(c);
        }
        for b in 0..n_prev {
            let root = dsu.find(b);
            if let Some(&id) = comp_ids.get(&root) {
                members[id].0.push(b);
            }
        }
        for t in 0..n_next {
            let root = dsu.find(n_prev + n_cur + t);
            if let Some(&id) = comp_ids.get(&root) {
                members[id].2.push(t);
            }
        }
        let mut comps = Vec::new();
        let mut exps = Vec::new();
        let mut gens = Vec::new();
        let mut offsets = Vec::new();
        for (prev, cur, next) in members {
            offsets.push(exps.len());
            let lc: BTreeMap<usize, usize> = cur.iter().enumerate().map(|(i, &c)| (c, i)).collect();
            let lt: BTreeMap<usize, usize> = next.iter().enumerate().map(|(i, &t)| (t, i)).collect();
            // cocycles
            let zrows: Vec<Vec<Elem>> = if next.is_empty() {
                (0..cur.len())
                    .map(|i| (0..cur.len()).map(|j| if i == j { 1 } else { 0 }).collect())
                    .collect()
            } else {
                let mut dm = RingMatrix::zeros(r, next.len(), cur.len());
                for (ci, &c) in cur.iter().enumerate() {
                    for &(t, e) in &cx.d[m][c] {
                        dm.set(lt[&t], ci, e);
                    }
                }
                kernel(&dm)
            };
            if zrows.is_empty() {
                comps.push(Comp {
                    cols: cur,
                    zh: None,
                    p: RingMatrix::zeros(r, 0, 0),
                    exps: Vec::new(),
                });
                continue;
            }
            let nz = zrows.len();
            let zmat = RingMatrix::from_rows(r, &zrows);
            let zh = howell(&zmat);
            let mut rels: Vec<Vec<Elem>> = Vec::new();
            for &b in &prev {
                let mut v = vec![0; cur.len()];
                for &(t, e) in &cx.d[m - 1][b] {
                    v[lc[&t]] = e;
                }
                rels.push(zh.express(&v).expect("boundaries are cocycles"));
            }
            rels.extend(kernel(&zmat.transpose()));
            let (p, pinv, diag) = if rels.is_empty() {
                (RingMatrix::identity(r, nz), RingMatrix::identity(r, nz), Vec::new())
            } else {
                let mut rm = RingMatrix::zeros(r, nz, rels.len());
                for (j, v) in rels.iter().enumerate() {
                    for (i, &x) in v.iter().enumerate() {
                        rm.set(i, j, x);
                    }
                }
                let sm = smith(&rm);
                (sm.p, sm.p_inv, sm.diag)
            };
            let mut local = Vec::new();
            for i in 0..nz {
                let e = diag.get(i).copied().unwrap_or(r.n());
                if e == 0 {
                    continue;
                }
                local.push((i, e));
                let mut g = Sparse::new();
                for (j, zr) in zrows.iter().enumerate() {
                    let f = pinv.get(j, i);
                    for (ci, &x) in zr.iter().enumerate() {
                        sparse_add(&r, &mut g, cx.basis[m][cur[ci]].clone(), r.mul(f, x));
                    }
                }
                gens.push(g);
                exps.push(e);
            }
            comps.push(Comp {
                cols: cur,
                zh: Some(zh),
                p,
                exps: local,
            });
        }
        Cohomology {
            degree: m,
            exps,
            gens,
            comp_of,
            comps,
            offsets,
        }
    }

    /// log_p of the order, counted over W (each factor W/p^e has length e·s).
    pub fn length(&self, r: &Ring) -> u32 {
        self.exps.iter().sum::<u32>() * r.s()
    }

    /// Coordinates of the class of a cocycle.
    pub fn coords(&self, cx: &Complex<K>, y: &Sparse<K>) -> Result<Vec<Elem>, CohomError> {
        let r = cx.ring;
        let mut out = vec![0; self.exps.len()];
        let mut parts: BTreeMap<usize, Vec<(usize, Elem)>> = BTreeMap::new();
        for (k, &c) in y {
            let j = *cx.index[self.degree]
                .get(k)
                .ok_or_else(|| CohomError::OutsideCap(format!("{k:?}")))?;
            parts.entry(self.comp_of[j]).or_default().push((j, c));
        }
        for (cid, entries) in parts {
            let comp = &self.comps[cid];
            let Some(zh) = &comp.zh else {
                return Err(CohomError::NotCocycle);
            };
            let mut v = vec![0; comp.cols.len()];
            for (j, c) in entries {
                let pos = comp.cols.binary_search(&j).expect("member");
                v[pos] = c;
            }
            let x = zh.express(&v).ok_or(CohomError::NotCocycle)?;
            let px = comp.p.mul_vec(&x).expect("sizes");
            for (slot, &(i, e)) in comp.exps.iter().enumerate() {
                out[self.offsets[cid] + slot] = r.reduce_mod_pk(px[i], e);
            }
        }
        Ok(out)
    }
}

/// A subgroup of ⊕ W/p^{e_i} with a basis adapted to its cyclic decomposition.
#[derive(Clone, Debug)]
pub struct Subgroup {
    pub ring: Ring,
    pub ambient: Vec<u32>,
    pub exps: Vec<u32>,
    /// Basis elements in ambient coordinates.
    pub basis: Vec<Vec<Elem>>,
    /// Basis elements as combinations of the generators.
    pub combos: Vec<Vec<Elem>>,
    gens: RingMatrix,
    p: RingMatrix,
    slots: Vec<(usize, u32)>,
}

fn ambient_matrix(r: &Ring, ambient: &[u32], gens: &[Vec<Elem>]) -> RingMatrix {
    let a = ambient.len();
    let k = gens.len();
    let mut m = RingMatrix::zeros(*r, a, k + a);
    for (j, g) in gens.iter().enumerate() {
        for i in 0..a {
            m.set(i, j, g[i]);
        }
    }
    for (i, &e) in ambient.iter().enumerate() {
        m.set(i, k + i, r.p_pow(e));
    }
    m
}

impl Subgroup {
    pub fn generated(r: Ring, ambient: &[u32], gens: &[Vec<Elem>]) -> Subgroup {
        let k = gens.len();
        let a = ambient.len();
        if k == 0 || a == 0 {
            return Subgroup {
                ring: r,
                ambient: ambient.to_vec(),
                exps: Vec::new(),
                basis: Vec::new(),
                combos: Vec::new(),
                gens: RingMatrix::zeros(r, a, k),
                p: RingMatrix::zeros(r, 0, 0),
                slots: Vec::new(),
            };
        }
        let am = ambient_matrix(&r, ambient, gens);
        let rels: Vec<Vec<Elem>> = kernel(&am).into_iter().map(|v| v[..k].to_vec()).collect();
        let (p, pinv, diag) = if rels.is_empty() {
            (RingMatrix::identity(r, k), RingMatrix::identity(r, k), Vec::new())
        } else {
            let mut lm = RingMatrix::zeros(r, k, rels.len());
            for (j, v) in rels.iter().enumerate() {
                for i in 0..k {
                    lm.set(i, j, v[i]);
                }
            }
            let sm = smith(&lm);
            (sm.p, sm.p_inv, sm.diag)
        };
        let mut gm = RingMatrix::zeros(r, a, k);
        for (j, g) in gens.iter().enumerate() {
            for i in 0..a {
                gm.set(i, j, g[i]);
            }
        }
        let mut exps = Vec::new();
        let mut basis = Vec::new();
        let mut combos = Vec::new();
        let mut slots = Vec::new();
        for i in 0..k {
            let e = diag.get(i).copied().unwrap_or(r.n());
            if e == 0 {
                continue;
            }
            let col = pinv.col(i);
            let v = gm.mul_vec(&col).expect("sizes");
            let v: Vec<Elem> = v
                .iter()
                .zip(ambient)
                .map(|(&x, &e)| r.reduce_mod_pk(x, e))
                .collect();
            basis.push(v);
            combos.push(col);
            exps.push(e);
            slots.push((i, e));
        }
        Subgroup {
            ring: r,
            ambient: ambient.to_vec(),
            exps,
            basis,
            combos,
            gens: gm,
            p,
            slots,
        }
    }

    pub fn whole(r: Ring, ambient: &[u32]) -> Subgroup {
        let gens: Vec<Vec<Elem>> = (0..ambient.len())
            .map(|i| (0..ambient.len()).map(|j| if i == j { 1 } else { 0 }).collect())
            .collect();
        Subgroup::generated(r, ambient, &gens)
    }

    pub fn length(&self) -> u32 {
        self.exps.iter().sum::<u32>() * self.ring.s()
    }

    /// Coordinates in the adapted basis, if v lies in the subgroup.
    pub fn coords(&self, v: &[Elem]) -> Option<Vec<Elem>> {
        let r = self.ring;
        if self.exps.is_empty() {
            let zero = v
                .iter()
                .zip(&self.ambient)
                .all(|(&x, &e)| r.reduce_mod_pk(x, e) == 0);
            return zero.then(Vec::new);
        }
        let k = self.gens.cols;
        let gens: Vec<Vec<Elem>> = (0..k).map(|j| self.gens.col(j)).collect();
        let am = ambient_matrix(&r, &self.ambient, &gens);
        let sol = solve(&am, v).ok()??;
        let px = self.p.mul_vec(&sol[..k]).expect("sizes");
        Some(self.slots.iter().map(|&(i, e)| r.reduce_mod_pk(px[i], e)).collect())
    }

    pub fn contains(&self, v: &[Elem]) -> bool {
        self.coords(v).is_some()
    }
}

/// Solves A x = b for a sparse column list (columns indexed by position, rows by
/// usize keys), one connected component at a time. Also returns kernel
/// generators of the touched components, or of all components with `all_kernels`.
pub fn solve_sparse(
    r: &Ring,
    columns: &[Vec<(usize, Elem)>],
    nrows: usize,
    rhs: &BTreeMap<usize, Elem>,
    all_kernels: bool,
) -> Option<(Vec<Elem>, Vec<Vec<Elem>>)> {
    let ncols = columns.len();
    let mut dsu = Dsu::new(nrows + ncols);
    for (j, col) in columns.iter().enumerate() {
        for &(i, _) in col {
            dsu.union(nrows + j, i);
        }
    }
    let touched: BTreeSet<usize> = rhs.keys().map(|&i| dsu.find(i)).collect();
    let mut roots = touched.clone();
    if all_kernels {
        roots.extend((0..ncols).map(|j| dsu.find(nrows + j)));
    }
    let mut rows_of: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut cols_of: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..nrows {
        rows_of.entry(dsu.find(i)).or_default().push(i);
    }
    for j in 0..ncols {
        cols_of.entry(dsu.find(nrows + j)).or_default().push(j);
    }
    let mut x = vec![0; ncols];
    let mut kern = Vec::new();
    for root in roots {
        let rows = rows_of.remove(&root).unwrap_or_default();
        let cols = cols_of.remove(&root).unwrap_or_default();
        let lr: BTreeMap<usize, usize> = rows.iter().enumerate().map(|(a, &b)| (b, a)).collect();
        let mut m = RingMatrix::zeros(*r, rows.len(), cols.len());
        for (cj, &j) in cols.iter().enumerate() {
            for &(i, c) in &columns[j] {
                let cur = m.get(lr[&i], cj);
                m.set(lr[&i], cj, r.add(cur, c));
            }
        }
        if touched.contains(&root) {
            let b: Vec<Elem> = rows.iter().map(|i| rhs.get(i).copied().unwrap_or(0)).collect();
            if cols.is_empty() {
                return None;
            }
            let sol = solve(&m, &b).ok()??;
            for (cj, &j) in cols.iter().enumerate() {
                x[j] = sol[cj];
            }
        }
        for k in kernel(&m) {
            let mut full = vec![0; ncols];
            for (cj, &j) in cols.iter().enumerate() {
                full[j] = k[cj];
            }
            kern.push(full);
        }
    }
    Some((x, kern))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(r: Ring, len: usize) -> Complex<(usize, usize)> {
        // 0 -> W^len --(·p)--> W^len -> 0 with basis keys (degree, i)
        let mut seeds = vec![BTreeSet::new(), BTreeSet::new()];
        for i in 0..len {
            seeds[0].insert((0, i));
        }
        Complex::build(r, seeds, |m, k: &(usize, usize)| -> Result<_, ()> {
            let mut out = Sparse::new();
            if m == 0 {
                out.insert((1, k.1), r.from_int(r.p() as i64));
            }
            Ok(out)
        })
        .unwrap()
    }

    #[test]
    fn multiplication_by_p() {
        let r = Ring::zp(3, 2);
        let c = interval(r, 2);
        assert!(c.check_d_squared());
        let h0 = c.cohomology(0);
        let h1 = c.cohomology(1);
        assert_eq!(h0.exps, vec![1, 1]);
        assert_eq!(h1.exps, vec![1, 1]);
        let mut y = Sparse::new();
        y.insert((1, 0), 4);
        let co = h1.coords(&c, &y).unwrap();
        assert_eq!(co.iter().filter(|&&x| x != 0).count(), 1);
    }

    #[test]
    fn subgroup_invariants() {
        let r = Ring::zp(2, 3);
        let s = Subgroup::generated(r, &[3, 2], &[vec![2, 1], vec![4, 0]]);
        // generated by (2,1) and (4,0) in Z/8 ⊕ Z/4: order 4·... check length
        let mut seen = BTreeSet::new();
        for a in 0..8u64 {
            for b in 0..8u64 {
                let x = (r.reduce_mod_pk(r.add(r.mul(a, 2), r.mul(b, 4)), 3), r.reduce_mod_pk(a, 2));
                seen.insert(x);
            }
        }
        assert_eq!(1u32 << s.length(), seen.len() as u32);
        for g in &s.basis {
            assert!(s.contains(g));
        }
        assert!(!s.contains(&[1, 0]));
    }
}
