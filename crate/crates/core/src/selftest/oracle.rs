//! Hand-scripted Čech–de Rham computation for (O, d) on the projective line,
//! written without the library's linear algebra.
//!
//! Charts U0 = Spec Z[t], U1 = Spec Z[s], U01 = Spec Z[t, 1/t] with s = 1/t.
//! The total complex splits by torus weight (t-exponent plus form degree):
//!
//! ```text
//! C^0_w: t^w on U0 (w ≥ 0), s^{-w} on U1 (w ≤ 0)
//! C^1_w: t^{w-1} dt on U0 (w ≥ 1), s^{-w-1} ds on U1 (w ≤ -1), t^w on U01
//! C^2_w: t^{w-1} dt on U01
//! ```
//!
//! with D(f0, f1) = (df0, df1, f1 − f0) and D(ω0, ω1, g) = ω1 − ω0 − dg.
//! Each piece is a complex of free Z-modules with integer matrices; cohomology
//! over Z/p^n follows from integer Smith forms and universal coefficients.

use std::collections::BTreeMap;

/// A bounded complex of free Z-modules with a filtration level on each basis vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntComplex {
    pub levels: Vec<Vec<u32>>,
    /// `d[m][row][col]`: C^m → C^{m+1}.
    pub d: Vec<Vec<Vec<i128>>>,
}

impl IntComplex {
    pub fn dim(&self, m: usize) -> usize {
        self.levels.get(m).map(|v| v.len()).unwrap_or(0)
    }

    /// The subquotient spanned by basis vectors whose level satisfies `keep`.
    pub fn restrict<F: Fn(u32) -> bool>(&self, keep: F) -> IntComplex {
        let idx: Vec<Vec<usize>> = self
            .levels
            .iter()
            .map(|l| (0..l.len()).filter(|&i| keep(l[i])).collect())
            .collect();
        let levels = idx
            .iter()
            .zip(&self.levels)
            .map(|(ix, l)| ix.iter().map(|&i| l[i]).collect())
            .collect();
        let d = (0..self.d.len())
            .map(|m| {
                idx[m + 1]
                    .iter()
                    .map(|&r| idx[m].iter().map(|&c| self.d[m][r][c]).collect())
                    .collect()
            })
            .collect();
        IntComplex { levels, d }
    }

    pub fn d_squared_zero(&self) -> bool {
        (0..self.d.len().saturating_sub(1)).all(|m| {
            let a = &self.d[m];
            let b = &self.d[m + 1];
            (0..self.dim(m + 2)).all(|i| {
                (0..self.dim(m)).all(|j| (0..self.dim(m + 1)).map(|k| b[i][k] * a[k][j]).sum::<i128>() == 0)
            })
        })
    }

    /// H^m(C ⊗ Z/p^n) as exponents of its cyclic factors, ascending.
    pub fn cohomology_mod(&self, p: u64, n: u32) -> Vec<Vec<u32>> {
        let q = (p as i128).pow(n);
        let facs: Vec<Vec<i128>> = (0..self.d.len())
            .map(|m| invariant_factors(&self.d[m], self.dim(m + 1), self.dim(m)))
            .collect();
        let none = Vec::new();
        let mut out = Vec::new();
        for m in 0..self.levels.len() {
            let into = if m > 0 { &facs[m - 1] } else { &none };
            let from = facs.get(m).unwrap_or(&none);
            let free = self.dim(m) - into.len() - from.len();
            let mut e = vec![n; free];
            for &a in into.iter().chain(from) {
                let g = gcd(a, q);
                if g > 1 {
                    e.push(valuation(g, p as i128));
                }
            }
            e.sort_unstable();
            out.push(e);
        }
        out
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn valuation(mut x: i128, p: i128) -> u32 {
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Nonzero invariant factors of an integer matrix, by naive Smith reduction.
pub fn invariant_factors(a: &[Vec<i128>], rows: usize, cols: usize) -> Vec<i128> {
    let mut m: Vec<Vec<i128>> = (0..rows).map(|i| (0..cols).map(|j| a[i][j]).collect()).collect();
    let mut out = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if m[i][j] != 0 && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        m.swap(t, bi);
        for row in m.iter_mut() {
            row.swap(t, bj);
        }
        let piv = m[t][t];
        let mut clean = true;
        for i in t + 1..rows {
            let f = m[i][t] / piv;
            for j in t..cols {
                m[i][j] -= f * m[t][j];
            }
            clean &= m[i][t] == 0;
        }
        for j in t + 1..cols {
            let f = m[t][j] / piv;
            for i in t..rows {
                m[i][j] -= f * m[i][t];
            }
            clean &= m[t][j] == 0;
        }
        if !clean {
            continue;
        }
        if let Some(i) = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| m[i][j] % piv != 0)) {
            for k in t..cols {
                m[t][k] += m[i][k];
            }
            continue;
        }
        out.push(piv.abs());
        t += 1;
    }
    out
}

/// The weight-w piece of the Čech–de Rham complex of P^1, filtered by form degree.
pub fn p1_weight_complex(w: i64) -> IntComplex {
    let w = w as i128;
    // C^0: [t^w on U0]?, [s^{-w} on U1]?
    let c0: Vec<&str> = [(w >= 0).then_some("f0"), (w <= 0).then_some("f1")].into_iter().flatten().collect();
    let c1: Vec<&str> = [(w >= 1).then_some("w0"), (w <= -1).then_some("w1"), Some("g")]
        .into_iter()
        .flatten()
        .collect();
    let pos = |v: &[&str], k: &str| v.iter().position(|x| *x == k);
    let mut d0 = vec![vec![0i128; c0.len()]; c1.len()];
    for (c, &b) in c0.iter().enumerate() {
        match b {
            "f0" => {
                // d(t^w) = w t^{w-1} dt, restriction enters with a minus sign
                if let Some(r) = pos(&c1, "w0") {
                    d0[r][c] += w;
                }
                d0[pos(&c1, "g").unwrap()][c] -= 1;
            }
            _ => {
                // d(s^k) = k s^{k-1} ds with k = -w
                if let Some(r) = pos(&c1, "w1") {
                    d0[r][c] += -w;
                }
                d0[pos(&c1, "g").unwrap()][c] += 1;
            }
        }
    }
    let mut d1 = vec![vec![0i128; c1.len()]; 1];
    for (c, &b) in c1.iter().enumerate() {
        d1[0][c] = match b {
            "w0" => -1,
            // s^k ds = -t^{-k-2} dt on the overlap
            "w1" => -1,
            _ => -w,
        };
    }
    let lv = |b: &&str| if b.starts_with('w') { 1 } else { 0 };
    IntComplex {
        levels: vec![c0.iter().map(lv).collect(), c1.iter().map(lv).collect(), vec![1]],
        d: vec![d0, d1],
    }
}

fn add_exps(acc: &mut [Vec<u32>], h: Vec<Vec<u32>>) {
    for (a, x) in acc.iter_mut().zip(h) {
        a.extend(x);
        a.sort_unstable();
    }
}

/// H^m(P^1, O) over Z/p^n summed over weights |w| ≤ wcap.
pub fn p1_cohomology(p: u64, n: u32, wcap: i64) -> Vec<Vec<u32>> {
    p1_filtered(p, n, wcap, |_| true)
}

/// H^m(F^i) for the form-degree filtration.
pub fn p1_filtration(p: u64, n: u32, wcap: i64, i: u32) -> Vec<Vec<u32>> {
    p1_filtered(p, n, wcap, |l| l >= i)
}

fn p1_filtered<F: Fn(u32) -> bool + Copy>(p: u64, n: u32, wcap: i64, keep: F) -> Vec<Vec<u32>> {
    let mut acc = vec![Vec::new(); 3];
    for w in -wcap..=wcap {
        add_exps(&mut acc, p1_weight_complex(w).restrict(keep).cohomology_mod(p, n));
    }
    acc
}

/// E_1^{r,s} = H^{r+s}(gr^r) over Z/p^n.
pub fn p1_e1(p: u64, n: u32, wcap: i64) -> BTreeMap<(usize, usize), Vec<u32>> {
    let mut out = BTreeMap::new();
    for r in 0..=1u32 {
        let h = p1_filtered(p, n, wcap, |l| l == r);
        for (m, e) in h.into_iter().enumerate() {
            if m >= r as usize && !e.is_empty() {
                out.insert((r as usize, m - r as usize), e);
            }
        }
    }
    out
}

/// Dimensions of E_1 of a product over a field, from the factors.
pub fn kunneth(
    a: &BTreeMap<(usize, usize), u32>,
    b: &BTreeMap<(usize, usize), u32>,
) -> BTreeMap<(usize, usize), u32> {
    let mut out = BTreeMap::new();
    for (&(r1, s1), &x) in a {
        for (&(r2, s2), &y) in b {
            *out.entry((r1 + r2, s1 + s2)).or_insert(0) += x * y;
        }
    }
    out
}

/// F^*(dt/t)/p for F(t) = t^p, as (coefficient, exponent) of the result times dt:
/// d(t^p) = p t^{p-1} dt, divided by p·t^p.
pub fn frobenius_on_dlog(p: i128) -> (i128, i128) {
    let (c, e) = (p, p - 1);
    (c / p, e - p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_zero_carries_everything() {
        let c = p1_weight_complex(0);
        assert!(c.d_squared_zero());
        assert_eq!(c.cohomology_mod(5, 2), vec![vec![2], vec![], vec![2]]);
        for w in [-7, -3, -1, 1, 2, 9] {
            let c = p1_weight_complex(w);
            assert!(c.d_squared_zero());
            assert_eq!(c.cohomology_mod(5, 2), vec![vec![]; 3], "w = {w}");
        }
    }

    #[test]
    fn filtration_and_e1() {
        assert_eq!(p1_filtration(5, 2, 6, 1), vec![vec![], vec![], vec![2]]);
        let e1 = p1_e1(5, 1, 6);
        assert_eq!(e1.len(), 2);
        assert_eq!(e1[&(0, 0)], vec![1]);
        assert_eq!(e1[&(1, 1)], vec![1]);
        assert_eq!(frobenius_on_dlog(5), (1, -1));
    }

    #[test]
    fn smith_of_small_integer_matrices() {
        assert_eq!(invariant_factors(&[vec![2, 4], vec![6, 8]], 2, 2), vec![2, 4]);
        assert_eq!(invariant_factors(&[vec![2, 0], vec![0, 3]], 2, 2), vec![1, 6]);
        assert!(invariant_factors(&[vec![0, 0]], 1, 2).is_empty());
    }
}
