//! Filtered modules with connection, the module M̃ with its p-connection and
//! R-stratification, divided Frobenius morphisms and Fontaine modules.

use std::collections::BTreeMap;

use rand::Rng;
use smallvec::SmallVec;
use thiserror::Error;

use crate::cartier::{glue_alpha, shiho_phi, CartierError};
use crate::chart::{Chart, ChartError, FrobLift, LaurentPoly, PolyMat};
use crate::conn::{check_horizontal, ConnError, ConnModule, Lambda, StratTable, Vector};
use crate::pdhopf::{idx_total, indices_of_degree, Flavor, Idx, PDPoly};
use crate::ring::{howell, kernel, Elem, Ring, RingError, RingMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FontaineError {
    #[error(transparent)]
    Conn(#[from] ConnError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Cartier(#[from] CartierError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("filtration step {0} is not given by a constant matrix")]
    NotConstant(usize),
    #[error("filtration step {0} is not a free direct summand contained in the previous step")]
    NotSummand(usize),
    #[error("Griffiths transversality fails: entry ({row}, {col}) of A_{dir}")]
    Griffiths { dir: usize, row: usize, col: usize },
    #[error("filtration length {0} exceeds p-1")]
    Length(u32),
    #[error("φ_F is not horizontal")]
    NotHorizontal,
    #[error("lifts live on different charts")]
    ChartMismatch,
    #[error("element outside the filtration step {0}")]
    OutsideFiltration(i32),
    #[error("stratification table does not terminate below order {0}")]
    NotNilpotent(u32),
}

/// A module with integrable connection and a decreasing filtration by constant
/// free direct summands M = M⁰ ⊇ M¹ ⊇ … ⊇ M^ℓ.
///
/// The connection is also stored in an adapted basis (columns of `basis`),
/// where M^i is spanned by the basis vectors of weight ≥ i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilteredConnModule {
    pub conn: ConnModule,
    pub steps: Vec<PolyMat>,
    pub basis: PolyMat,
    pub weights: Vec<u32>,
    pub adapted: ConnModule,
}

fn constant_matrix(m: &PolyMat, step: usize) -> Result<RingMatrix, FontaineError> {
    let mut out = RingMatrix::zeros(m.ring, m.rows, m.cols);
    for i in 0..m.rows {
        for j in 0..m.cols {
            let f = m.get(i, j);
            if f.terms().keys().any(|e| e.iter().any(|&x| x != 0)) {
                return Err(FontaineError::NotConstant(step));
            }
            out.set(i, j, f.constant_term());
        }
    }
    Ok(out)
}

fn rank_mod_p(r: &Ring, vecs: &[Vec<Elem>]) -> usize {
    if vecs.is_empty() {
        return 0;
    }
    let r1 = r.at_level(1);
    let rows: Vec<Vec<Elem>> = vecs
        .iter()
        .map(|v| v.iter().map(|&x| r.reduce_to(x, &r1)).collect())
        .collect();
    howell(&RingMatrix::from_rows(r1, &rows)).pivots.len()
}

fn in_span(cols: &[Vec<Elem>], r: &Ring, dim: usize, v: &[Elem]) -> bool {
    if v.iter().all(|&x| x == 0) {
        return true;
    }
    if cols.is_empty() {
        return false;
    }
    let m = RingMatrix::from_rows(*r, cols);
    debug_assert_eq!(m.cols, dim);
    howell(&m).contains(v)
}

impl FilteredConnModule {
    /// `steps[i-1]` is the inclusion matrix of M^i (columns are a basis, in the
    /// basis of M).
    pub fn new(conn: ConnModule, steps: Vec<PolyMat>) -> Result<Self, FontaineError> {
        let r = conn.ring();
        let rank = conn.rank;
        let consts: Vec<RingMatrix> = steps
            .iter()
            .enumerate()
            .map(|(i, m)| {
                if m.rows != rank {
                    return Err(FontaineError::NotSummand(i + 1));
                }
                constant_matrix(m, i + 1)
            })
            .collect::<Result<_, _>>()?;
        let cols_of = |m: &RingMatrix| -> Vec<Vec<Elem>> {
            (0..m.cols).map(|j| (0..m.rows).map(|i| m.get(i, j)).collect()).collect()
        };
        for i in 1..consts.len() {
            let outer = cols_of(&consts[i - 1]);
            for v in cols_of(&consts[i]) {
                if !in_span(&outer, &r, rank, &v) {
                    return Err(FontaineError::NotSummand(i + 1));
                }
            }
        }
        let mut chosen: Vec<Vec<Elem>> = Vec::new();
        let mut weights: Vec<u32> = Vec::new();
        for level in (0..=consts.len()).rev() {
            let cands: Vec<Vec<Elem>> = if level == 0 {
                (0..rank)
                    .map(|k| (0..rank).map(|i| if i == k { 1 } else { 0 }).collect())
                    .collect()
            } else {
                cols_of(&consts[level - 1])
            };
            for v in cands {
                let mut trial = chosen.clone();
                trial.push(v.clone());
                if rank_mod_p(&r, &trial) == trial.len() {
                    chosen = trial;
                    weights.push(level as u32);
                }
            }
            let want = if level == 0 { rank } else { consts[level - 1].cols };
            if chosen.len() != want {
                return Err(FontaineError::NotSummand(level));
            }
        }
        // keep the standard order when the adapted basis is a permutation of it
        let std_pos: Vec<Option<usize>> = chosen
            .iter()
            .map(|v| {
                let nz: Vec<usize> = (0..rank).filter(|&i| v[i] != 0).collect();
                (nz.len() == 1 && v[nz[0]] == 1).then(|| nz[0])
            })
            .collect();
        let mut order: Vec<usize> = (0..rank).collect();
        if std_pos.iter().all(|x| x.is_some()) {
            order.sort_by_key(|&k| std_pos[k]);
        }
        let chosen: Vec<Vec<Elem>> = order.iter().map(|&k| chosen[k].clone()).collect();
        let weights: Vec<u32> = order.iter().map(|&k| weights[k]).collect();
        let d = conn.d();
        let cols: Vec<Vector> = chosen
            .iter()
            .map(|v| v.iter().map(|&x| LaurentPoly::constant(r, d, x)).collect())
            .collect();
        let basis = PolyMat::from_cols(r, d, rank, &cols);
        let binv = basis
            .try_inverse()
            .ok_or(FontaineError::NotSummand(0))?;
        let a = conn.a.iter().map(|ai| binv.mul(ai).mul(&basis)).collect();
        let adapted = ConnModule::new(conn.chart.clone(), conn.lambda, a)?;
        Ok(FilteredConnModule {
            conn,
            steps,
            basis,
            weights,
            adapted,
        })
    }

    /// The filtration in which basis vector k has weight `weights[k]`.
    pub fn from_weights(conn: ConnModule, weights: &[u32]) -> Result<Self, FontaineError> {
        let r = conn.ring();
        let d = conn.d();
        let l = weights.iter().copied().max().unwrap_or(0);
        let mut steps = Vec::new();
        for i in 1..=l {
            let cols: Vec<Vector> = (0..conn.rank)
                .filter(|&k| weights[k] >= i)
                .map(|k| conn.basis_vector(k))
                .collect();
            steps.push(PolyMat::from_cols(r, d, conn.rank, &cols));
        }
        Self::new(conn, steps)
    }

    pub fn ring(&self) -> Ring {
        self.conn.ring()
    }
    pub fn d(&self) -> usize {
        self.conn.d()
    }
    pub fn rank(&self) -> usize {
        self.conn.rank
    }
    /// ℓ: the last index with M^ℓ ≠ 0 (0 for the trivial filtration).
    pub fn level(&self) -> u32 {
        self.steps.len() as u32
    }
    pub fn chart(&self) -> &Chart {
        &self.conn.chart
    }

    /// Griffiths transversality through the inclusion matrices: ∇(M^i) ⊆ M^{i-1}⊗Ω
    /// tested coefficient by coefficient with Howell membership.
    pub fn check_griffiths(&self) -> bool {
        self.griffiths_witness().is_none()
    }

    /// First (step, basis column, direction) violating Griffiths transversality.
    pub fn griffiths_witness(&self) -> Option<(usize, usize, usize)> {
        let r = self.ring();
        let rank = self.rank();
        let full: Vec<Vec<Elem>> = (0..rank)
            .map(|k| (0..rank).map(|i| if i == k { 1 } else { 0 }).collect())
            .collect();
        let cols_at = |i: usize| -> Vec<Vec<Elem>> {
            if i == 0 {
                full.clone()
            } else {
                let m = &self.steps[i - 1];
                (0..m.cols)
                    .map(|j| (0..rank).map(|k| m.get(k, j).constant_term()).collect())
                    .collect()
            }
        };
        for i in 1..=self.steps.len() {
            let target = cols_at(i - 1);
            let src = &self.steps[i - 1];
            for j in 0..src.cols {
                let v = src.col(j);
                for dir in 0..self.d() {
                    let w = self.conn.nabla(dir, &v);
                    let mut monos: BTreeMap<_, Vec<Elem>> = BTreeMap::new();
                    for (k, f) in w.iter().enumerate() {
                        for (e, &c) in f.terms() {
                            monos.entry(e.clone()).or_insert_with(|| vec![0; rank])[k] = c;
                        }
                    }
                    for coef in monos.values() {
                        if !in_span(&target, &r, rank, coef) {
                            return Some((i, j, dir));
                        }
                    }
                }
            }
        }
        None
    }

    /// Columns of the adapted basis spanning M^i.
    pub fn step_indices(&self, i: i32) -> Vec<usize> {
        (0..self.rank()).filter(|&k| self.weights[k] as i32 >= i).collect()
    }
}

/// M̃ as the cokernel of g(m_i) = (m)_{i-1} − p (m)_i on generators (e_k)_i, i ≤ w_k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PresentedModule {
    pub ring: Ring,
    /// (i, k) stands for the generator (e_k)_i.
    pub generators: Vec<(u32, usize)>,
    /// Columns are relations, rows are generators.
    pub relations: RingMatrix,
    /// Coordinates of each generator in the free basis ẽ_k = (e_k)_{w_k}.
    pub certificate: Option<RingMatrix>,
}

impl PresentedModule {
    /// The certificate is surjective and its kernel is spanned by the relations.
    pub fn verify_certificate(&self) -> bool {
        let Some(c) = &self.certificate else { return false };
        if !c.mul(&self.relations).map(|x| x.is_zero()).unwrap_or(false) {
            return false;
        }
        let rel_rows: Vec<Vec<Elem>> = (0..self.relations.cols)
            .map(|j| self.relations.col(j))
            .collect();
        let span = if rel_rows.is_empty() {
            None
        } else {
            Some(howell(&RingMatrix::from_rows(self.ring, &rel_rows)))
        };
        for v in kernel(c) {
            let ok = match &span {
                Some(h) => h.contains(&v),
                None => v.iter().all(|&x| x == 0),
            };
            if !ok {
                return false;
            }
        }
        // every ẽ_k is one of the generators
        let rank = c.rows;
        (0..rank).all(|k| (0..c.cols).any(|g| (0..rank).all(|l| c.get(l, g) == if l == k { 1 } else { 0 })))
    }

    /// Index of the generator (e_k)_i.
    pub fn generator(&self, i: u32, k: usize) -> Option<usize> {
        self.generators.iter().position(|&g| g == (i, k))
    }
}

/// M̃ with its p-connection on the free basis ẽ_k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mtilde {
    pub presented: PresentedModule,
    pub conn: ConnModule,
    pub weights: Vec<u32>,
}

impl Mtilde {
    /// M̃^{-j} = image of ⊕_{i ≤ j} M^i, spanned by p^{max(w_k - j, 0)} ẽ_k.
    pub fn filtration_exponents(&self, j: u32) -> Vec<u32> {
        self.weights.iter().map(|&w| w.saturating_sub(j)).collect()
    }

    /// ∇̃(M̃^{-j}) ⊆ M̃^{-j-1} ⊗ Ω for all j.
    pub fn check_filtration_shift(&self) -> bool {
        let r = self.conn.ring();
        let l = self.weights.iter().copied().max().unwrap_or(0);
        for j in 0..=l {
            let src = self.filtration_exponents(j);
            let tgt = self.filtration_exponents(j + 1);
            for k in 0..self.conn.rank {
                let mut v = self.conn.zero_vector();
                v[k] = LaurentPoly::constant(r, self.conn.d(), r.p_pow(src[k]));
                for dir in 0..self.conn.d() {
                    let w = self.conn.nabla(dir, &v);
                    for (l2, f) in w.iter().enumerate() {
                        if f.terms().values().any(|&c| r.val(c) < tgt[l2]) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// The presentation of M̃, its free basis and the p-connection
/// ∇̃((m)_i) = (∇m)_{i-1}, ∇̃((m)_0) = p (∇m)_0.
pub fn build_mtilde(m: &FilteredConnModule) -> Result<Mtilde, FontaineError> {
    if let Some((i, j, dir)) = m.griffiths_witness() {
        return Err(FontaineError::Griffiths { dir, row: i, col: j });
    }
    let r = m.ring();
    let rank = m.rank();
    let w = &m.weights;
    for (dir, a) in m.adapted.a.iter().enumerate() {
        for l in 0..rank {
            for k in 0..rank {
                if !a.get(l, k).is_zero() && w[l] + 1 < w[k] {
                    return Err(FontaineError::Griffiths { dir, row: l, col: k });
                }
            }
        }
    }
    let mut generators = Vec::new();
    for i in 0..=m.level() {
        for k in 0..rank {
            if w[k] >= i {
                generators.push((i, k));
            }
        }
    }
    let pos = |i: u32, k: usize| generators.iter().position(|&g| g == (i, k)).unwrap();
    let rels: Vec<(usize, usize)> = generators
        .iter()
        .filter(|&&(i, _)| i >= 1)
        .map(|&(i, k)| (pos(i - 1, k), pos(i, k)))
        .collect();
    let mut relations = RingMatrix::zeros(r, generators.len(), rels.len());
    for (c, &(lo, hi)) in rels.iter().enumerate() {
        relations.set(lo, c, 1);
        relations.set(hi, c, r.neg(r.from_int(r.p() as i64)));
    }
    let mut cert = RingMatrix::zeros(r, rank, generators.len());
    for (g, &(i, k)) in generators.iter().enumerate() {
        cert.set(k, g, r.p_pow(w[k] - i));
    }
    let presented = PresentedModule {
        ring: r,
        generators,
        relations,
        certificate: Some(cert),
    };
    let d = m.d();
    let mut a = Vec::new();
    for ai in &m.adapted.a {
        let mut t = PolyMat::zeros(r, d, rank, rank);
        for l in 0..rank {
            for k in 0..rank {
                let f = ai.get(l, k);
                if f.is_zero() {
                    continue;
                }
                let e = w[l] + 1 - w[k];
                t.set(l, k, f.scale(r.p_pow(e)));
            }
        }
        a.push(t);
    }
    let conn = ConnModule::new(m.conn.chart.clone(), Lambda::P, a)?;
    Ok(Mtilde {
        presented,
        conn,
        weights: w.clone(),
    })
}

/// R-flavor stratification of M̃: θ_I(ẽ_k) = Σ_l (p^{w_l - w_k + |I|}/I!) (∇^I)_{lk} ẽ_l.
pub fn r_stratify_mtilde(m: &FilteredConnModule, bound: u32) -> Result<StratTable, FontaineError> {
    let r = m.ring();
    let p = r.p() as u32;
    if m.level() >= p {
        return Err(FontaineError::Length(m.level()));
    }
    let d = m.d();
    let rank = m.rank();
    let w = &m.weights;
    let mut entries = BTreeMap::new();
    let mut cur: BTreeMap<Idx, PolyMat> = BTreeMap::new();
    cur.insert(crate::pdhopf::idx_zero(d), PolyMat::identity(r, d, rank));
    entries.insert(crate::pdhopf::idx_zero(d), PolyMat::identity(r, d, rank));
    let mut done = false;
    for deg in 1..=bound {
        let mut next = BTreeMap::new();
        let mut any = false;
        for idx in indices_of_degree(d, deg) {
            let j = (0..d).rev().find(|&k| idx[k] > 0).unwrap();
            let mut prev = idx.clone();
            prev[j] -= 1;
            let pm = &cur[&prev];
            let cols: Vec<Vector> = (0..rank).map(|c| m.adapted.nabla(j, &pm.col(c))).collect();
            let nab = PolyMat::from_cols(r, d, rank, &cols);
            let parts: Vec<u64> = idx.iter().map(|&x| x as u64).collect();
            let mut th = PolyMat::zeros(r, d, rank, rank);
            for l in 0..rank {
                for k in 0..rank {
                    let f = nab.get(l, k);
                    if f.is_zero() {
                        continue;
                    }
                    let e = (w[l] + deg)
                        .checked_sub(w[k])
                        .ok_or(FontaineError::Griffiths { dir: j, row: l, col: k })?;
                    let c = r.p_pow_over_multifactorial(e, &parts)?;
                    th.set(l, k, f.scale(c));
                }
            }
            if !nab.is_zero() {
                any = true;
            }
            if !th.is_zero() {
                entries.insert(idx.clone(), th);
            }
            next.insert(idx, nab);
        }
        cur = next;
        // later coefficients p^{|I|+w_l-w_k}/I! vanish once |I| - ℓ - v(|I|!) ≥ n
        let tail = (deg + 1) as i64 - m.level() as i64 - (deg as i64) / (p as i64 - 1);
        if !any || (p > 2 && tail >= r.n() as i64) {
            done = true;
            break;
        }
    }
    if !done {
        return Err(FontaineError::NotNilpotent(bound));
    }
    Ok(StratTable {
        flavor: Flavor::R,
        ring: r,
        d,
        rank,
        entries,
    })
}

/// T-flavor table induced from an R-flavor one: θ^T_I = I! θ^R_I.
pub fn induced_t_table(t: &StratTable) -> StratTable {
    let r = t.ring;
    let mut entries = BTreeMap::new();
    for (i, m) in &t.entries {
        let f = i.iter().fold(r.one(), |acc, &x| r.mul(acc, r.factorial(x as u64)));
        let v = m.scale(f);
        if !v.is_zero() {
            entries.insert(i.clone(), v);
        }
    }
    StratTable {
        flavor: Flavor::T,
        ring: r,
        d: t.d,
        rank: t.rank,
        entries,
    }
}

/// A Fontaine module keyed to a Frobenius lift: φ_F : F^*(M̃) → M in the adapted
/// basis (column k is φ^{w_k}(e_k)).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FontaineModule {
    pub filtered: FilteredConnModule,
    pub lift: FrobLift,
    pub phi_f: PolyMat,
    pub bound: u32,
}

/// Assembles the divided Frobenii from φ_F, after checking horizontality from
/// Φ_F(M̃) to M.
pub fn divided_frobenii(
    f: &FrobLift,
    m: &FilteredConnModule,
    phi_f: &PolyMat,
    bound: u32,
) -> Result<FontaineModule, FontaineError> {
    if f.chart.d != m.d() || f.chart.ring != m.ring() {
        return Err(FontaineError::ChartMismatch);
    }
    let mt = build_mtilde(m)?;
    let phi_m = shiho_phi(f, &mt.conn, bound)?;
    if !check_horizontal(phi_f, &phi_m, &m.adapted)? {
        return Err(FontaineError::NotHorizontal);
    }
    Ok(FontaineModule {
        filtered: m.clone(),
        lift: f.clone(),
        phi_f: phi_f.clone(),
        bound,
    })
}

/// Pass/fail entries of a validation, each with a witness string.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MfReport {
    pub items: Vec<(String, bool, String)>,
}

impl MfReport {
    pub fn ok(&self) -> bool {
        self.items.iter().all(|x| x.1)
    }
    pub fn get(&self, name: &str) -> Option<bool> {
        self.items.iter().find(|x| x.0 == name).map(|x| x.1)
    }
    fn push(&mut self, name: &str, ok: bool, w: String) {
        self.items.push((name.to_string(), ok, w));
    }
}

impl FontaineModule {
    pub fn ring(&self) -> Ring {
        self.filtered.ring()
    }
    pub fn weights(&self) -> &[u32] {
        &self.filtered.weights
    }

    /// φ^i(e_k) = p^{w_k - i} φ_F(ẽ_k) for w_k ≥ i (any k when i ≤ 0).
    pub fn phi_basis(&self, i: i32, k: usize) -> Result<Vector, FontaineError> {
        let w = self.filtered.weights[k] as i32;
        if w < i {
            return Err(FontaineError::OutsideFiltration(i));
        }
        let r = self.ring();
        let c = r.p_pow((w - i) as u32);
        Ok(self.phi_f.col(k).iter().map(|x| x.scale(c)).collect())
    }

    /// Matrix of φ^i on the basis of M^i (columns follow `step_indices(i)`).
    pub fn divided(&self, i: i32) -> Result<PolyMat, FontaineError> {
        let cols: Vec<Vector> = self
            .filtered
            .step_indices(i)
            .into_iter()
            .map(|k| self.phi_basis(i, k))
            .collect::<Result<_, _>>()?;
        Ok(PolyMat::from_cols(self.ring(), self.filtered.d(), self.filtered.rank(), &cols))
    }

    /// σ-semilinear φ^i on a vector of M^i in the adapted basis.
    pub fn apply_divided(&self, i: i32, v: &[LaurentPoly]) -> Result<Vector, FontaineError> {
        let mut out = self.filtered.adapted.zero_vector();
        for (k, f) in v.iter().enumerate() {
            if f.is_zero() {
                continue;
            }
            let col = self.phi_basis(i, k)?;
            let ff = self.lift.apply(f)?;
            for (o, c) in out.iter_mut().zip(&col) {
                o.add_assign(&c.mul(&ff));
            }
        }
        Ok(out)
    }

    pub fn mtilde(&self) -> Result<Mtilde, FontaineError> {
        build_mtilde(&self.filtered)
    }

    pub fn r_stratification(&self) -> Result<StratTable, FontaineError> {
        r_stratify_mtilde(&self.filtered, self.bound)
    }

    /// The assembled φ : F^*(M̃) → M is invertible.
    pub fn check_strong_divisibility(&self) -> bool {
        self.phi_f.try_inverse().is_some()
    }

    /// Axiom checks: length, Griffiths, horizontality of φ_F, (d-i), (d-iii),
    /// strong divisibility.
    pub fn validate(&self) -> MfReport {
        let mut rep = MfReport::default();
        let r = self.ring();
        let fm = &self.filtered;
        let l = fm.level();
        let p = r.p() as u32;
        rep.push("length", l < p, format!("ℓ = {l}, p = {p}"));
        let g = fm.griffiths_witness();
        rep.push(
            "griffiths",
            g.is_none(),
            g.map(|(i, j, dir)| format!("∇_{dir} of basis vector {j} of M^{i}"))
                .unwrap_or_default(),
        );
        let horiz = build_mtilde(fm)
            .map_err(|e| e.to_string())
            .and_then(|mt| shiho_phi(&self.lift, &mt.conn, self.bound).map_err(|e| e.to_string()))
            .and_then(|phi| check_horizontal(&self.phi_f, &phi, &fm.adapted).map_err(|e| e.to_string()));
        match horiz {
            Ok(b) => rep.push("horizontal", b, String::new()),
            Err(e) => rep.push("horizontal", false, e),
        }
        // (d-i): φ^i restricted to M^{i+1} is p φ^{i+1}, for -1 ≤ i < ℓ
        let mut di = (true, String::new());
        for i in -1..l as i32 {
            for k in fm.step_indices(i + 1) {
                let a = self.phi_basis(i, k).unwrap();
                let b: Vector = self
                    .phi_basis(i + 1, k)
                    .unwrap()
                    .iter()
                    .map(|x| x.scale(r.from_int(p as i64)))
                    .collect();
                if a != b && di.0 {
                    di = (false, format!("i = {i}, basis vector {k}"));
                }
            }
        }
        rep.push("d-i", di.0, di.1);
        let d3 = self.check_d3();
        rep.push("d-iii", d3.is_ok(), d3.err().unwrap_or_default());
        let sd = self.check_strong_divisibility();
        rep.push("strong-divisibility", sd, if sd { String::new() } else { "φ_F not invertible".into() });
        rep
    }

    /// ∇(φ^i(e_k)) = Σ_j (dF/p)(dt_j) φ^{i-1}(∇_j e_k) for 0 ≤ i ≤ ℓ and w_k ≥ i.
    fn check_d3(&self) -> Result<(), String> {
        let fm = &self.filtered;
        let dfp = self.lift.df_over_p().map_err(|e| e.to_string())?;
        let d = fm.d();
        for i in 0..=fm.level() as i32 {
            for k in fm.step_indices(i) {
                let lhs_v = self.phi_basis(i, k).map_err(|e| e.to_string())?;
                let mut terms: Vec<Vector> = Vec::new();
                for j in 0..d {
                    let nab = fm.adapted.nabla(j, &fm.adapted.basis_vector(k));
                    terms.push(self.apply_divided(i - 1, &nab).map_err(|e| e.to_string())?);
                }
                for a in 0..d {
                    let lhs = fm.adapted.nabla(a, &lhs_v);
                    let mut rhs = fm.adapted.zero_vector();
                    for (j, t) in terms.iter().enumerate() {
                        for (o, x) in rhs.iter_mut().zip(t) {
                            o.add_assign(&x.mul(&dfp[a][j]));
                        }
                    }
                    if lhs != rhs {
                        return Err(format!("i = {i}, basis vector {k}, direction {a}"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Moves a Fontaine module from its lift to `f2`: φ_{F2} = φ_{F1} ∘ α(F1, F2).
pub fn change_of_lift(fm: &FontaineModule, f2: &FrobLift) -> Result<FontaineModule, FontaineError> {
    if fm.lift.chart != f2.chart {
        return Err(FontaineError::ChartMismatch);
    }
    if &fm.lift == f2 {
        return Ok(fm.clone());
    }
    let strat = fm.r_stratification()?;
    let alpha = glue_alpha(&fm.lift, f2, &strat)?;
    Ok(FontaineModule {
        filtered: fm.filtered.clone(),
        lift: f2.clone(),
        phi_f: fm.phi_f.mul(&alpha),
        bound: fm.bound,
    })
}

/// (O, d) with the trivial filtration and φ_F = 1.
pub fn structure_sheaf(f: &FrobLift) -> FontaineModule {
    let ch = &f.chart;
    let conn = ConnModule::trivial(ch, 1, Lambda::One);
    let filtered = FilteredConnModule::from_weights(conn, &[0]).expect("trivial filtration");
    FontaineModule {
        filtered,
        lift: f.clone(),
        phi_f: PolyMat::identity(ch.ring, ch.d, 1),
        bound: ch.ring.n() + 2,
    }
}

fn random_poly<R: Rng>(rng: &mut R, r: Ring, d: usize, max_deg: i32, nterms: usize, scale: Elem) -> LaurentPoly {
    let mut f = LaurentPoly::zero(r, d);
    for _ in 0..nterms {
        let e: SmallVec<[i32; 4]> = (0..d).map(|_| rng.gen_range(0..=max_deg)).collect();
        let c = r.from_int(rng.gen_range(0..(r.p() as i64 * 4)));
        f.add_term(e, r.mul(c, scale));
    }
    f
}

/// A random Fontaine module on the affine chart: ⊕ O(-w_k) with A = 0 and a
/// constant invertible φ_F, moved by a unipotent gauge G(t) with G̃ integral.
pub fn random_fontaine_module<R: Rng>(
    rng: &mut R,
    lift: &FrobLift,
    rank: usize,
    max_weight: u32,
) -> Result<FontaineModule, FontaineError> {
    let ch = &lift.chart;
    let r = ch.ring;
    let d = ch.d;
    let p = r.p() as u32;
    let top = max_weight.min(p - 1);
    loop {
        let mut weights: Vec<u32> = (0..rank).map(|_| rng.gen_range(0..=top)).collect();
        weights.sort_unstable();
        // G = I + N, N strictly upper triangular; drop-one entries carry a factor p
        let mut g = PolyMat::identity(r, d, rank);
        let mut gt = PolyMat::identity(r, d, rank);
        for l in 0..rank {
            for k in l + 1..rank {
                let gap = weights[k] - weights[l];
                if gap > 1 || rng.gen_bool(0.3) {
                    continue;
                }
                let f = random_poly(rng, r, d, 2, 2, 1);
                let pf = r.from_int(r.p() as i64);
                if gap == 0 {
                    g.set(l, k, f.clone());
                    gt.set(l, k, f);
                } else {
                    g.set(l, k, f.scale(pf));
                    gt.set(l, k, f);
                }
            }
        }
        let gi = g.try_inverse().expect("unipotent");
        let a: Vec<PolyMat> = (0..d).map(|i| gi.mul(&g.derive(i))).collect();
        let conn = ConnModule::new(ch.clone(), Lambda::One, a)?;
        // constant invertible φ_0: unit diagonal plus strictly upper part
        let mut phi0 = PolyMat::identity(r, d, rank);
        for l in 0..rank {
            let u = loop {
                let u = r.from_int(rng.gen_range(1..(r.p() as i64 * 4)));
                if r.is_unit(u) {
                    break u;
                }
            };
            phi0.set(l, l, LaurentPoly::constant(r, d, u));
            for k in l + 1..rank {
                phi0.set(l, k, LaurentPoly::constant(r, d, r.from_int(rng.gen_range(0..5))));
            }
        }
        let gt_pulled = gt.try_map(|x| lift.apply(x))?;
        let phi_f = gi.mul(&phi0).mul(&gt_pulled);
        let filtered = match FilteredConnModule::from_weights(conn, &weights) {
            Ok(f) => f,
            Err(_) => continue,
        };
        if !filtered.check_griffiths() {
            continue;
        }
        let bound = 4 * (d as u32 + 2) + r.n() + 4;
        return divided_frobenii(lift, &filtered, &phi_f, bound);
    }
}

/// Divided Frobenius data on the PD envelope of the diagonal U → U^{r+1}.
///
/// PD variables ξ^{(c)}_k = t^{(c)}_k − t^{(0)}_k for copies c = 1..r are numbered
/// (c-1)·d + k.
#[derive(Clone, Debug)]
pub struct PDFontaineData {
    pub module: FontaineModule,
    pub lifts: Vec<FrobLift>,
    /// z_{c,k} with φ(ξ^{(c)}_k) = p z_{c,k}.
    pub z: Vec<PDPoly>,
    /// ∇^I on the adapted basis (P-flavor stratification of M).
    pub strat: BTreeMap<Idx, PolyMat>,
}

/// f(t + ξ^{(c)}) = Σ_K ∂^K f ξ^{[K]} in a PD algebra with `m` variables.
pub fn pd_taylor(f: &LaurentPoly, m: usize, offset: usize) -> PDPoly {
    let r = f.ring();
    let d = f.nvars();
    let mut out = PDPoly::from_laurent(Flavor::P, f, m);
    let mut deg = 1;
    loop {
        let mut any = false;
        for k in indices_of_degree(d, deg) {
            let g = f.apply_diffop(&k);
            if g.is_zero() {
                continue;
            }
            any = true;
            let mut idx: Idx = SmallVec::from_elem(0, m);
            for i in 0..d {
                idx[offset + i] = k[i];
            }
            for (e, &c) in g.terms() {
                out.add_term(idx.clone(), e.clone(), c);
            }
        }
        if !any {
            return out.to_ring(r);
        }
        deg += 1;
    }
}

/// z = (p-1)! ξ^{[p]} + Σ_{j=1}^{p-1} ((p-1)!/(j!(p-j)!)) ξ^j t^{p-j} + b_c(t + ξ) − b_0(t).
pub fn z_element(lifts: &[FrobLift], c: usize, k: usize) -> Result<PDPoly, FontaineError> {
    let f0 = &lifts[0];
    let ch = &f0.chart;
    let r = ch.ring;
    let d = ch.d;
    let copies = lifts.len() - 1;
    let m = copies * d;
    let p = r.p();
    let var = (c - 1) * d + k;
    let mut z = PDPoly::zero(Flavor::P, r, d, m);
    let mut unit = |j: u32, tpow: i32, coef: Elem| {
        let mut idx: Idx = SmallVec::from_elem(0, m);
        idx[var] = j;
        let mut e: SmallVec<[i32; 4]> = SmallVec::from_elem(0, d);
        e[k] = tpow;
        z.add_term(idx, e, coef);
    };
    // (p-1)!/(j!(p-j)!) ξ^j = (p-1)!/(p-j)! ξ^{[j]}
    for j in 1..p {
        let c = r.mul(r.factorial(p - 1), r.inv(r.factorial(p - j))?);
        unit(j as u32, (p - j) as i32, c);
    }
    unit(p as u32, 0, r.factorial(p - 1));
    let bc = lifts[c].corrections()[k].clone();
    let b0 = lifts[0].corrections()[k].clone();
    z = z.add(&pd_taylor(&bc, m, (c - 1) * d));
    z = z.sub(&PDPoly::from_laurent(Flavor::P, &b0, m));
    Ok(z)
}

/// Pullback of a Fontaine module to the PD envelope of U → U^{r+1} for the
/// given lifts (copy 0 carries lifts[0]).
pub fn diagonal_pullback(fm: &FontaineModule, lifts: &[FrobLift]) -> Result<PDFontaineData, FontaineError> {
    if lifts.is_empty() {
        return Err(FontaineError::ChartMismatch);
    }
    for f in lifts {
        if f.chart != fm.lift.chart {
            return Err(FontaineError::ChartMismatch);
        }
    }
    let module = change_of_lift(fm, &lifts[0])?;
    let d = module.filtered.d();
    let mut z = Vec::new();
    for c in 1..lifts.len() {
        for k in 0..d {
            z.push(z_element(lifts, c, k)?);
        }
    }
    let strat = module.filtered.adapted.iterate_table(module.bound);
    let strat = strat.into_iter().filter(|(_, v)| !v.is_zero()).collect();
    Ok(PDFontaineData {
        module,
        lifts: lifts.to_vec(),
        z,
        strat,
    })
}

impl PDFontaineData {
    pub fn ring(&self) -> Ring {
        self.module.ring()
    }
    pub fn copies(&self) -> usize {
        self.lifts.len() - 1
    }
    pub fn pd_vars(&self) -> usize {
        self.copies() * self.module.filtered.d()
    }

    /// φ^i(ξ^{[I]}) = p^{|I|-i} z^I / I!.
    pub fn phi_xi(&self, i: i32, idx: &[u32]) -> Result<PDPoly, FontaineError> {
        let r = self.ring();
        let tot = idx_total(idx) as i32;
        if tot < i {
            return Err(FontaineError::OutsideFiltration(i));
        }
        let parts: Vec<u64> = idx.iter().map(|&x| x as u64).collect();
        let c = r.p_pow_over_multifactorial((tot - i) as u32, &parts)?;
        let d = self.module.filtered.d();
        let mut acc = PDPoly::one(Flavor::P, r, d, self.pd_vars());
        for (v, &e) in idx.iter().enumerate() {
            for _ in 0..e {
                acc = acc.mul(&self.z[v]).expect("same flavor");
            }
        }
        Ok(acc.scale(c))
    }

    /// Frame of copy c in the frame of copy 0: Σ_I ∇^I ξ^{(c)[I]}.
    pub fn frame(&self, c: usize) -> Vec<Vec<PDPoly>> {
        let r = self.ring();
        let fm = &self.module.filtered;
        let d = fm.d();
        let m = self.pd_vars();
        let rank = fm.rank();
        let mut out = vec![vec![PDPoly::zero(Flavor::P, r, d, m); rank]; rank];
        for (i, th) in &self.strat {
            let mut idx: Idx = SmallVec::from_elem(0, m);
            if c > 0 {
                for k in 0..d {
                    idx[(c - 1) * d + k] = i[k];
                }
            } else if idx_total(i) > 0 {
                continue;
            }
            for a in 0..rank {
                for b in 0..rank {
                    for (e, &x) in th.get(a, b).terms() {
                        out[a][b].add_term(idx.clone(), e.clone(), x);
                    }
                }
            }
        }
        out
    }

    /// φ^i(f ξ^{[I]} e_k) = F_0^*(f) p^{|I|+w_k-i} z^I / I! φ_F(ẽ_k), valid when
    /// |I| + w_k ≥ i.
    pub fn phi(&self, i: i32, f: &LaurentPoly, idx: &[u32], k: usize) -> Result<Vec<PDPoly>, FontaineError> {
        let w = self.module.filtered.weights[k] as i32;
        let tot = idx_total(idx) as i32;
        if tot + w < i {
            return Err(FontaineError::OutsideFiltration(i));
        }
        let split = i.min(tot).max(i - w);
        let xi = self.phi_xi(split, idx)?;
        let col = self.module.phi_basis(i - split, k)?;
        let ff = self.module.lift.apply(f)?;
        let m = self.pd_vars();
        let scal = PDPoly::from_laurent(Flavor::P, &ff, m).mul(&xi).expect("flavor");
        Ok(col
            .iter()
            .map(|c| PDPoly::from_laurent(Flavor::P, c, m).mul(&scal).expect("flavor"))
            .collect())
    }

    /// ξ ↦ 0.
    pub fn augment(v: &[PDPoly]) -> Vector {
        v.iter().map(|x| x.counit()).collect()
    }

    /// The pulled-back φ on M̃_P is the pullback of φ_F along copy 0.
    pub fn is_strongly_divisible(&self) -> bool {
        self.module.check_strong_divisibility()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdhopf::unit_idx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(r: Ring, e: i32, c: i64) -> LaurentPoly {
        LaurentPoly::from_terms(r, 1, [(vec![e], c)])
    }

    fn rank2(r: Ring, a: PolyMat, steps: Vec<Vec<i64>>) -> FilteredConnModule {
        let ch = Chart::affine(r, 1);
        let conn = ConnModule::new(ch, Lambda::One, vec![a]).unwrap();
        let steps = steps
            .into_iter()
            .map(|col| PolyMat::from_ints(r, 1, &col.iter().map(|&x| vec![x]).collect::<Vec<_>>()))
            .collect();
        FilteredConnModule::new(conn, steps).unwrap()
    }

    #[test]
    fn griffiths_examples() {
        let r = Ring::zp(5, 1);
        let o = t(r, 0, 0);
        let e12 = PolyMat::from_rows(vec![vec![o.clone(), t(r, 1, 1)], vec![o.clone(), o.clone()]]);
        assert!(rank2(r, e12, vec![vec![0, 1]]).check_griffiths());
        let e21 = PolyMat::from_rows(vec![vec![o.clone(), o.clone()], vec![t(r, 1, 1), o.clone()]]);
        let m = rank2(r, e21.clone(), vec![vec![1, 0]]);
        assert!(m.check_griffiths());
        let m2 = rank2(r, e21, vec![vec![1, 0], vec![1, 0]]);
        assert_eq!(m2.weights, vec![2, 0]);
        assert!(!m2.check_griffiths());
        assert!(build_mtilde(&m2).is_err());
    }

    #[test]
    fn mtilde_presentation() {
        let r = Ring::zp(5, 2);
        let m = rank2(r, PolyMat::zeros(r, 1, 2, 2), vec![vec![0, 1]]);
        let mt = build_mtilde(&m).unwrap();
        assert_eq!(mt.presented.generators, vec![(0, 0), (0, 1), (1, 1)]);
        assert!(mt.presented.verify_certificate());
        let c = mt.presented.certificate.as_ref().unwrap();
        // (e2)_0 = p (e2)_1
        assert_eq!(c.col(1), vec![0, 5]);
        assert_eq!(c.col(2), vec![0, 1]);
        assert!(mt.check_filtration_shift());
    }

    #[test]
    fn r_table_examples() {
        let r = Ring::zp(5, 2);
        let o = t(r, 0, 0);
        let a = PolyMat::from_rows(vec![vec![o.clone(), t(r, 0, 1)], vec![o.clone(), o.clone()]]);
        let m = rank2(r, a, vec![vec![0, 1]]);
        let tab = r_stratify_mtilde(&m, 10).unwrap();
        assert!(tab.verify_cocycle());
        let th1 = tab.get(&unit_idx(1, 0, 1));
        assert_eq!(th1.get(0, 1), &t(r, 0, 1));
        assert!(th1.get(0, 0).is_zero());
        let mt = build_mtilde(&m).unwrap();
        assert_eq!(mt.conn.stratify(10).unwrap(), induced_t_table(&tab));
        // M = O, A = c: order-k coefficient p^k c^k / k!
        let ch = Chart::affine(r, 1);
        let conn = ConnModule::new(ch, Lambda::One, vec![PolyMat::scalar(r, 1, 1, &t(r, 0, 3))]).unwrap();
        let o1 = FilteredConnModule::from_weights(conn, &[0]).unwrap();
        let tab = r_stratify_mtilde(&o1, 20).unwrap();
        for k in 1..4u32 {
            let want = r.mul(r.p_pow_over_factorial(k, k as u64).unwrap(), r.pow(3, k as u64));
            assert_eq!(tab.get(&unit_idx(1, 0, k)).get(0, 0), &LaurentPoly::constant(r, 1, want));
        }
    }

    #[test]
    fn structure_sheaf_validates() {
        for &(p, n) in &[(2, 1), (2, 2), (5, 1), (5, 2)] {
            let r = Ring::zp(p, n);
            let f = FrobLift::standard(&Chart::affine(r, 1));
            let fm = structure_sheaf(&f);
            let rep = fm.validate();
            assert!(rep.ok(), "{rep:?}");
            let mut bad = fm.clone();
            bad.phi_f = bad.phi_f.scale(r.from_int(p as i64));
            let rep = bad.validate();
            assert_eq!(rep.get("d-i"), Some(true));
            assert_eq!(rep.get("strong-divisibility"), Some(false));
        }
    }

    #[test]
    fn change_of_lift_example() {
        let r = Ring::zp(5, 2);
        let up = r.at_level(3);
        let ch = Chart::affine(r, 1);
        let o = t(r, 0, 0);
        let a = PolyMat::from_rows(vec![vec![o.clone(), t(r, 0, 1)], vec![o.clone(), o.clone()]]);
        let m = rank2(r, a, vec![vec![0, 1]]);
        let f1 = FrobLift::standard(&ch);
        let f2 = FrobLift::from_corrections(&ch, &[t(up, 1, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fm = random_fontaine_module(&mut rng, &f1, 2, 1).unwrap();
        assert!(fm.validate().ok());
        let fm2 = change_of_lift(&fm, &f2).unwrap();
        assert!(fm2.validate().ok(), "{:?}", fm2.validate());
        let back = change_of_lift(&fm2, &f1).unwrap();
        assert_eq!(back.phi_f, fm.phi_f);
        // the α of the explicit rank-2 example: α = I + t E_12
        let strat = r_stratify_mtilde(&m, 10).unwrap();
        let alpha = glue_alpha(&f1, &f2, &strat).unwrap();
        assert_eq!(alpha.get(0, 1), &t(r, 1, 1));
        assert!(alpha.get(0, 0) == &t(r, 0, 1) && alpha.get(1, 1) == &t(r, 0, 1));
    }

    #[test]
    fn random_modules_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(p, n) in &[(3, 2), (5, 1), (2, 2)] {
            let r = Ring::zp(p, n);
            let ch = Chart::affine(r, 1);
            let f = FrobLift::standard(&ch);
            for _ in 0..3 {
                let fm = random_fontaine_module(&mut rng, &f, 3, 2).unwrap();
                let rep = fm.validate();
                assert!(rep.ok(), "{rep:?}");
                let tab = fm.r_stratification().unwrap();
                assert!(tab.verify_cocycle());
                let mt = fm.mtilde().unwrap();
                assert_eq!(mt.conn.stratify(fm.bound).unwrap(), induced_t_table(&tab));
            }
        }
    }

    #[test]
    fn z_element_example() {
        let r = Ring::zp(5, 1);
        let up = r.at_level(2);
        let ch = Chart::affine(r, 1);
        let f1 = FrobLift::standard(&ch);
        let f2 = FrobLift::from_corrections(&ch, &[t(up, 1, 1)]).unwrap();
        let z = z_element(&[f1.clone(), f2.clone()], 1, 0).unwrap();
        // 24 ξ^[5] + Σ_j (4!/(5-j)!) ξ^[j] t^{5-j} + t + ξ
        let mut want = PDPoly::zero(Flavor::P, r, 1, 1);
        let idx = |j: u32| -> Idx { SmallVec::from_elem(j, 1) };
        want.add_term(idx(5), SmallVec::from_elem(0, 1), r.from_int(24));
        for j in 1..5u64 {
            let c = r.mul(r.factorial(4), r.inv(r.factorial(5 - j)).unwrap());
            want.add_term(idx(j as u32), SmallVec::from_elem((5 - j) as i32, 1), c);
        }
        want.add_term(idx(0), SmallVec::from_elem(1, 1), 1);
        want.add_term(idx(1), SmallVec::from_elem(0, 1), 1);
        assert_eq!(z, want);
        let data = diagonal_pullback(&structure_sheaf(&f1), &[f1.clone(), f2]).unwrap();
        assert!(data.is_strongly_divisible());
        // φ^0(ξ) = p z, φ^1(ξ) = z
        assert_eq!(data.phi_xi(1, &[1]).unwrap(), z);
        let single = diagonal_pullback(&structure_sheaf(&f1), &[f1]).unwrap();
        assert_eq!(single.pd_vars(), 0);
    }
}
