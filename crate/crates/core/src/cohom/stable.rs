//! Cohomology certified by stabilization: the image of H(K_D) in H(K_{D'}) for a
//! pair of nested capped complexes, and lifting of classes along chain maps.

use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::ring::{Elem, Ring};

use super::linalg::{solve_sparse, sparse_add, Cohomology, Complex, Sparse, Subgroup};
use super::CohomError;

/// Image of H^m(K_small) in H^m(K_big).
#[derive(Clone, Debug)]
pub struct StableGroup<K> {
    pub degree: usize,
    pub small: Cohomology<K>,
    pub big: Cohomology<K>,
    pub image: Subgroup,
    /// Coordinates of the small generators in the big group.
    pub gen_coords: Vec<Vec<Elem>>,
}

impl<K: Ord + Clone + Debug> StableGroup<K> {
    pub fn compute(small: &Complex<K>, big: &Complex<K>, m: usize) -> Result<Self, CohomError> {
        let hs = small.cohomology(m);
        let hb = big.cohomology(m);
        let gen_coords = hs
            .gens
            .iter()
            .map(|g| hb.coords(big, g))
            .collect::<Result<Vec<_>, _>>()?;
        let image = Subgroup::generated(big.ring, &hb.exps, &gen_coords);
        Ok(StableGroup {
            degree: m,
            small: hs,
            big: hb,
            image,
            gen_coords,
        })
    }

    /// Invariant factors as sorted p-exponents.
    pub fn exps(&self) -> Vec<u32> {
        let mut v = self.image.exps.clone();
        v.sort_unstable();
        v
    }

    pub fn length(&self) -> u32 {
        self.image.length()
    }

    pub fn rank(&self) -> usize {
        self.image.exps.len()
    }

    /// Representatives (in the small complex) of the image basis.
    pub fn reps(&self) -> Vec<Sparse<K>> {
        let r = self.image.ring;
        self.image
            .combos
            .iter()
            .map(|c| {
                let mut out = Sparse::new();
                for (j, &a) in c.iter().enumerate() {
                    for (k, &v) in &self.small.gens[j] {
                        sparse_add(&r, &mut out, k.clone(), r.mul(a, v));
                    }
                }
                out
            })
            .collect()
    }

    /// Coordinates of a cocycle of the big complex in the big group.
    pub fn big_coords(&self, big: &Complex<K>, y: &Sparse<K>) -> Result<Vec<Elem>, CohomError> {
        self.big.coords(big, y)
    }

    /// Coordinates of a cocycle of the big complex in the image basis.
    pub fn coords(&self, big: &Complex<K>, y: &Sparse<K>) -> Result<Vec<Elem>, CohomError> {
        let c = self.big.coords(big, y)?;
        self.image.coords(&c).ok_or_else(|| CohomError::StabilizationFailure {
            degree: self.degree,
            detail: "class outside the image of the smaller cap".into(),
        })
    }

    /// Coordinates in the big group of a combination of small generators.
    pub fn small_to_big(&self, v: &[Elem]) -> Vec<Elem> {
        let r = self.image.ring;
        let mut amb = vec![0; self.big.exps.len()];
        for (a, g) in v.iter().zip(&self.gen_coords) {
            for (x, &y) in amb.iter_mut().zip(g) {
                *x = r.add(*x, r.mul(*a, y));
            }
        }
        amb
    }

    /// Image-basis coordinates of a big-group element, rejecting anything outside the image.
    pub fn image_coords(&self, v: &[Elem]) -> Result<Vec<Elem>, CohomError> {
        self.image.coords(v).ok_or_else(|| CohomError::StabilizationFailure {
            degree: self.degree,
            detail: "class outside the image of the smaller cap".into(),
        })
    }

    pub fn is_zero(&self, v: &[Elem]) -> bool {
        let r = self.image.ring;
        v.iter().zip(&self.big.exps).all(|(&x, &e)| r.reduce_mod_pk(x, e) == 0)
    }
}

/// The certificate: the stable invariants at two consecutive cap pairs agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub degree: usize,
    pub caps: (i32, i32),
    pub exps: Vec<u32>,
    pub exps_next: Vec<u32>,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.exps == self.exps_next
    }

    pub fn check(self) -> Result<Certificate, CohomError> {
        if self.holds() {
            Ok(self)
        } else {
            Err(CohomError::StabilizationFailure {
                degree: self.degree,
                detail: format!(
                    "invariants {:?} at caps {:?} but {:?} one step higher",
                    self.exps, self.caps, self.exps_next
                ),
            })
        }
    }
}

/// A lift of a cocycle y of X along a key-wise chain map ev: Y → X:
/// z with D z = 0 and ev(z) − y ∈ D X. Also returns a second, independent lift
/// when the solution space has one (z plus a nontrivial kernel element).
pub struct Lift<S> {
    pub z: Sparse<S>,
    pub alt: Option<Sparse<S>>,
}

pub fn lift_class<S, T, F>(
    y_cx: &Complex<S>,
    x_cx: &Complex<T>,
    m: usize,
    ev: F,
    y: &Sparse<T>,
) -> Result<Lift<S>, CohomError>
where
    S: Ord + Clone + Debug,
    T: Ord + Clone + Debug,
    F: Fn(&S) -> Option<T>,
{
    let r = y_cx.ring;
    if y.is_empty() {
        return Ok(Lift { z: Sparse::new(), alt: None });
    }
    let zs: &[S] = y_cx.basis.get(m).map(|v| v.as_slice()).unwrap_or(&[]);
    let ny = if m + 1 < y_cx.len() { y_cx.dim(m + 1) } else { 0 };
    let nx = x_cx.dim(m);
    let mut cols: Vec<Vec<(usize, Elem)>> = Vec::new();
    for (a, key) in zs.iter().enumerate() {
        let mut col = Vec::new();
        if ny > 0 {
            col.extend(y_cx.d[m][a].iter().copied());
        }
        if let Some(t) = ev(key) {
            let i = *x_cx.index[m]
                .get(&t)
                .ok_or_else(|| CohomError::OutsideCap(format!("{t:?}")))?;
            col.push((ny + i, r.one()));
        }
        cols.push(col);
    }
    let nz = cols.len();
    if m > 0 {
        for b in 0..x_cx.dim(m - 1) {
            cols.push(x_cx.d[m - 1][b].iter().map(|&(i, c)| (ny + i, r.neg(c))).collect());
        }
    }
    let mut rhs = BTreeMap::new();
    for (k, &c) in y {
        let i = *x_cx.index[m]
            .get(k)
            .ok_or_else(|| CohomError::OutsideCap(format!("{k:?}")))?;
        rhs.insert(ny + i, c);
    }
    let (sol, kern) = solve_sparse(&r, &cols, ny + nx, &rhs, true)
        .ok_or_else(|| CohomError::LiftFailure(format!("degree {m}")))?;
    let to_sparse = |v: &[Elem]| -> Sparse<S> {
        v[..nz]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(a, &c)| (zs[a].clone(), c))
            .collect()
    };
    let z = to_sparse(&sol);
    let mut shift = vec![0; sol.len()];
    let mut any = false;
    for k in kern.iter().filter(|k| k[..nz].iter().any(|&c| c != 0)) {
        any = true;
        for (a, &b) in shift.iter_mut().zip(k) {
            *a = r.add(*a, b);
        }
    }
    let alt = any.then(|| {
        let s: Vec<Elem> = sol.iter().zip(&shift).map(|(&a, &b)| r.add(a, b)).collect();
        to_sparse(&s)
    });
    Ok(Lift { z, alt })
}

/// Σ_j σ(v_j)·x_j for a basis of chains.
pub fn combine<K: Ord + Clone>(r: &Ring, v: &[Elem], xs: &[Sparse<K>], semilinear: bool) -> Sparse<K> {
    let mut out = Sparse::new();
    for (&a, x) in v.iter().zip(xs) {
        let a = if semilinear { r.sigma(a) } else { a };
        if a == 0 {
            continue;
        }
        for (k, &c) in x {
            sparse_add(r, &mut out, k.clone(), r.mul(a, c));
        }
    }
    out
}
