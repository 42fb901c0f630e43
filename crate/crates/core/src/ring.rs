//! Arithmetic in the Galois ring GR(p^n, s) and linear algebra over it.
//!
//! Elements are packed into a `u64` as base-`p^n` digits of the coordinates
//! with respect to the power basis `1, w, .., w^{s-1}`, where `w` is a root of
//! a fixed monic lift of an irreducible polynomial over F_p.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid level n={0} or degree s={1}")]
    BadShape(u32, u32),
    #[error("ring GR({p}^{n},{s}) does not fit in 64-bit packed representation")]
    TooLarge { p: u64, n: u32, s: u32 },
    #[error("element is not divisible by p")]
    NotDivisible,
    #[error("element is not a unit")]
    NotUnit,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("rings differ")]
    RingMismatch,
}

pub type Elem = u64;

const MAX_S: usize = 4;

/// Conway polynomials (coefficients c_0..c_{s-1} of x^s + ...), used when available.
fn conway(p: u64, s: u32) -> Option<Vec<u64>> {
    let v: &[u64] = match (p, s) {
        (2, 2) => &[1, 1],
        (2, 3) => &[1, 1, 0],
        (2, 4) => &[1, 1, 0, 0],
        (3, 2) => &[2, 2],
        (3, 3) => &[1, 2, 0],
        (3, 4) => &[2, 0, 0, 2],
        (5, 2) => &[2, 4],
        (5, 3) => &[3, 3, 0],
        (5, 4) => &[2, 4, 4, 0],
        (7, 2) => &[3, 6],
        (7, 3) => &[4, 0, 6],
        (7, 4) => &[3, 4, 5, 0],
        _ => return None,
    };
    Some(v.to_vec())
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Polynomials over F_p given as coefficient vectors (low degree first).
fn fp_polymod(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r: Vec<u64> = a.iter().map(|x| x % p).collect();
    let dm = m.len() - 1;
    let lead_inv = modinv(m[dm] as i128, p as i128).unwrap() as u64;
    while r.len() > dm {
        let top = r.pop().unwrap();
        if top == 0 {
            continue;
        }
        let f = top * lead_inv % p;
        let shift = r.len() - dm;
        for i in 0..dm {
            r[shift + i] = (r[shift + i] + p * p - f * m[i] % p) % p;
        }
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r
}

fn fp_irreducible(c: &[u64], p: u64) -> bool {
    // monic f = x^s + sum c_i x^i; test no factor of degree <= s/2 by brute force
    let s = c.len();
    let mut f: Vec<u64> = c.to_vec();
    f.push(1);
    for deg in 1..=s / 2 {
        let count = p.pow(deg as u32);
        for code in 0..count {
            let mut g = Vec::with_capacity(deg + 1);
            let mut x = code;
            for _ in 0..deg {
                g.push(x % p);
                x /= p;
            }
            g.push(1);
            if fp_polymod(&f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

fn default_modulus(p: u64, s: u32) -> Vec<u64> {
    if s == 1 {
        return vec![0];
    }
    if let Some(c) = conway(p, s) {
        return c;
    }
    let count = p.pow(s);
    for code in 0..count {
        let mut c = Vec::new();
        let mut x = code;
        for _ in 0..s {
            c.push(x % p);
            x /= p;
        }
        if fp_irreducible(&c, p) {
            return c;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

pub(crate) fn modinv(a: i128, m: i128) -> Option<i128> {
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m))
}

/// The coefficient ring GR(p^n, s).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ring {
    p: u64,
    n: u32,
    s: u32,
    q: u64,
    modulus: [u64; MAX_S],
    sigma_w: Elem,
}

impl fmt::Debug for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.s == 1 {
            write!(f, "Z/{}^{}", self.p, self.n)
        } else {
            write!(f, "GR({}^{},{})", self.p, self.n, self.s)
        }
    }
}

impl Ring {
    pub fn new(p: u64, n: u32, s: u32) -> Result<Ring, RingError> {
        if !is_prime(p) {
            return Err(RingError::NotPrime(p));
        }
        if n == 0 || s == 0 || s as usize > MAX_S {
            return Err(RingError::BadShape(n, s));
        }
        let q = p
            .checked_pow(n)
            .ok_or(RingError::TooLarge { p, n, s })?;
        if q >= 1 << 31 || (q as u128).pow(s) >= 1u128 << 63 {
            return Err(RingError::TooLarge { p, n, s });
        }
        let c = default_modulus(p, s);
        let mut modulus = [0u64; MAX_S];
        for (i, x) in c.iter().enumerate() {
            modulus[i] = x % q;
        }
        let mut r = Ring {
            p,
            n,
            s,
            q,
            modulus,
            sigma_w: 0,
        };
        r.sigma_w = if s == 1 { 0 } else { r.frobenius_root() };
        Ok(r)
    }

    pub fn zp(p: u64, n: u32) -> Ring {
        Ring::new(p, n, 1).expect("valid Z/p^n")
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn s(&self) -> u32 {
        self.s
    }
    /// p^n
    pub fn modulus(&self) -> u64 {
        self.q
    }
    /// Number of elements p^{ns}.
    pub fn size(&self) -> u128 {
        (self.q as u128).pow(self.s)
    }

    pub fn at_level(&self, n: u32) -> Ring {
        Ring::new(self.p, n, self.s).expect("level change keeps the ring valid")
    }

    fn digits(&self, x: Elem) -> [u64; MAX_S] {
        let mut d = [0u64; MAX_S];
        if self.s == 1 {
            d[0] = x;
            return d;
        }
        let mut x = x;
        for di in d.iter_mut().take(self.s as usize) {
            *di = x % self.q;
            x /= self.q;
        }
        d
    }

    fn pack(&self, d: &[u64; MAX_S]) -> Elem {
        if self.s == 1 {
            return d[0] % self.q;
        }
        let mut x = 0u64;
        for i in (0..self.s as usize).rev() {
            x = x * self.q + d[i] % self.q;
        }
        x
    }

    /// Coordinates with respect to 1, w, .., w^{s-1}.
    pub fn coords(&self, x: Elem) -> Vec<u64> {
        self.digits(x)[..self.s as usize].to_vec()
    }

    pub fn from_coords(&self, c: &[i64]) -> Elem {
        let mut d = [0u64; MAX_S];
        for (i, v) in c.iter().enumerate().take(self.s as usize) {
            d[i] = v.rem_euclid(self.q as i64) as u64;
        }
        self.pack(&d)
    }

    pub fn zero(&self) -> Elem {
        0
    }
    pub fn one(&self) -> Elem {
        1
    }

    pub fn from_int(&self, v: i64) -> Elem {
        v.rem_euclid(self.q as i64) as u64
    }

    pub fn from_i128(&self, v: i128) -> Elem {
        v.rem_euclid(self.q as i128) as u64
    }

    /// The generator w of the residue extension (equal to 0 when s = 1).
    pub fn generator(&self) -> Elem {
        if self.s == 1 {
            0
        } else {
            self.q
        }
    }

    pub fn is_zero(&self, x: Elem) -> bool {
        x == 0
    }

    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if self.s == 1 {
            let r = a + b;
            return if r >= self.q { r - self.q } else { r };
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let mut d = [0u64; MAX_S];
        for i in 0..self.s as usize {
            d[i] = (da[i] + db[i]) % self.q;
        }
        self.pack(&d)
    }

    pub fn neg(&self, a: Elem) -> Elem {
        if self.s == 1 {
            return if a == 0 { 0 } else { self.q - a };
        }
        let da = self.digits(a);
        let mut d = [0u64; MAX_S];
        for i in 0..self.s as usize {
            d[i] = (self.q - da[i]) % self.q;
        }
        self.pack(&d)
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if self.s == 1 {
            return ((a as u128 * b as u128) % self.q as u128) as u64;
        }
        let s = self.s as usize;
        let (da, db) = (self.digits(a), self.digits(b));
        let q = self.q as u128;
        let mut prod = [0u128; 2 * MAX_S];
        for i in 0..s {
            for j in 0..s {
                prod[i + j] = (prod[i + j] + da[i] as u128 * db[j] as u128) % q;
            }
        }
        for k in (s..2 * s - 1).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            prod[k] = 0;
            for i in 0..s {
                let t = c * self.modulus[i] as u128 % q;
                prod[k - s + i] = (prod[k - s + i] + q - t) % q;
            }
        }
        let mut d = [0u64; MAX_S];
        for i in 0..s {
            d[i] = prod[i] as u64;
        }
        self.pack(&d)
    }

    pub fn mul_int(&self, a: Elem, k: i64) -> Elem {
        self.mul(a, self.from_int(k))
    }

    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// p-adic valuation; equals n exactly for 0.
    pub fn val(&self, x: Elem) -> u32 {
        if x == 0 {
            return self.n;
        }
        let d = self.digits(x);
        let mut v = self.n;
        for &c in d.iter().take(self.s as usize) {
            if c != 0 {
                let mut c = c;
                let mut k = 0;
                while c % self.p == 0 {
                    c /= self.p;
                    k += 1;
                }
                v = v.min(k);
            }
        }
        v
    }

    pub fn is_unit(&self, x: Elem) -> bool {
        self.val(x) == 0
    }

    pub fn p_pow(&self, k: u32) -> Elem {
        if k >= self.n {
            0
        } else {
            self.p.pow(k)
        }
    }

    pub fn inv(&self, x: Elem) -> Result<Elem, RingError> {
        if !self.is_unit(x) {
            return Err(RingError::NotUnit);
        }
        if self.s == 1 {
            return Ok(modinv(x as i128, self.q as i128).unwrap() as u64);
        }
        let r1 = self.at_level(1);
        let x1 = self.reduce_to(x, &r1);
        let e = (r1.size() - 2) as u64;
        let mut y = self.lift_from(r1.pow(x1, e), &r1);
        let two = self.from_int(2);
        let mut prec = 1;
        while prec < self.n {
            y = self.mul(y, self.sub(two, self.mul(x, y)));
            prec *= 2;
        }
        Ok(y)
    }

    /// Exact quotient a / b, valid when v(a) >= v(b); the answer is determined
    /// modulo p^{n - v(b)} and a canonical representative is returned.
    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem, RingError> {
        let vb = self.val(b);
        if b == 0 {
            return if a == 0 { Ok(0) } else { Err(RingError::NotDivisible) };
        }
        if self.val(a) < vb {
            return Err(RingError::NotDivisible);
        }
        let ub = self.shift_down(b, vb);
        let ua = self.shift_down(a, vb);
        let r = self.mul(ua, self.inv(ub)?);
        Ok(self.reduce_mod_pk(r, self.n - vb))
    }

    /// Divides every digit by p^k (requires divisibility), staying at level n.
    fn shift_down(&self, x: Elem, k: u32) -> Elem {
        let pk = self.p.pow(k);
        let d = self.digits(x);
        let mut e = [0u64; MAX_S];
        for i in 0..self.s as usize {
            debug_assert!(d[i] % pk == 0);
            e[i] = d[i] / pk;
        }
        self.pack(&e)
    }

    /// Canonical representative of x modulo p^k.
    pub fn reduce_mod_pk(&self, x: Elem, k: u32) -> Elem {
        if k >= self.n {
            return x;
        }
        let pk = self.p.pow(k);
        let d = self.digits(x);
        let mut e = [0u64; MAX_S];
        for i in 0..self.s as usize {
            e[i] = d[i] % pk;
        }
        self.pack(&e)
    }

    /// Writes x = p^k * quotient + remainder with the remainder canonical mod p^k.
    pub fn divmod_pk(&self, x: Elem, k: u32) -> (Elem, Elem) {
        let r = self.reduce_mod_pk(x, k);
        let diff = self.sub(x, r);
        if k >= self.n {
            return (0, x);
        }
        (self.shift_down(diff, k), r)
    }

    /// Image of x under the map to another level (reduction or representative lift).
    pub fn reduce_to(&self, x: Elem, target: &Ring) -> Elem {
        debug_assert_eq!(self.p, target.p);
        debug_assert_eq!(self.s, target.s);
        let d = self.digits(x);
        target.pack(&d)
    }

    /// Embeds the canonical representative of x (from `from`) into this ring.
    pub fn lift_from(&self, x: Elem, from: &Ring) -> Elem {
        from.reduce_to(x, self)
    }

    /// Given x at level n+1 (this ring is level n), returns x/p at level n.
    pub fn p_divide(&self, x: Elem, upper: &Ring) -> Result<Elem, RingError> {
        if upper.n != self.n + 1 || upper.p != self.p || upper.s != self.s {
            return Err(RingError::RingMismatch);
        }
        if upper.val(x) == 0 {
            return Err(RingError::NotDivisible);
        }
        let d = upper.digits(x);
        let mut e = [0u64; MAX_S];
        for i in 0..self.s as usize {
            e[i] = d[i] / self.p;
        }
        Ok(self.pack(&e))
    }

    /// Divides an element at level n+k by p^k, landing at this level n.
    pub fn p_divide_k(&self, x: Elem, upper: &Ring, k: u32) -> Result<Elem, RingError> {
        if upper.n != self.n + k || upper.p != self.p || upper.s != self.s {
            return Err(RingError::RingMismatch);
        }
        if upper.val(x) < k {
            return Err(RingError::NotDivisible);
        }
        let d = upper.digits(x);
        let pk = self.p.pow(k);
        let mut e = [0u64; MAX_S];
        for i in 0..self.s as usize {
            e[i] = d[i] / pk;
        }
        Ok(self.pack(&e))
    }

    fn eval_modulus(&self, x: Elem) -> Elem {
        // f(x) = x^s + sum c_i x^i
        let mut acc = self.one();
        for i in (0..self.s as usize).rev() {
            acc = self.add(self.mul(acc, x), self.modulus[i]);
        }
        acc
    }

    fn eval_modulus_deriv(&self, x: Elem) -> Elem {
        let s = self.s as usize;
        let mut acc = self.from_int(s as i64);
        for i in (1..s).rev() {
            acc = self.add(self.mul(acc, x), self.mul_int(self.modulus[i], i as i64));
        }
        acc
    }

    fn frobenius_root(&self) -> Elem {
        // Newton iteration from w^p converges to the root of the lift reducing to w^p.
        let mut r = self.pow(self.generator(), self.p);
        for _ in 0..=self.n + 1 {
            let fr = self.eval_modulus(r);
            if fr == 0 {
                break;
            }
            let dr = self.eval_modulus_deriv(r);
            r = self.sub(r, self.mul(fr, self.inv(dr).expect("separable")));
        }
        r
    }

    /// The Frobenius automorphism sigma of GR(p^n, s).
    pub fn sigma(&self, x: Elem) -> Elem {
        if self.s == 1 {
            return x;
        }
        let d = self.digits(x);
        let mut acc = 0;
        for i in (0..self.s as usize).rev() {
            acc = self.add(self.mul(acc, self.sigma_w), d[i]);
        }
        acc
    }

    pub fn sigma_pow(&self, x: Elem, k: u32) -> Elem {
        let mut y = x;
        for _ in 0..k % self.s {
            y = self.sigma(y);
        }
        y
    }

    /// Iterates over all elements (small rings only).
    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        let total = self.size() as u64;
        (0..total).map(move |code| {
            let mut d = [0u64; MAX_S];
            let mut c = code;
            for di in d.iter_mut().take(self.s as usize) {
                *di = c % self.q;
                c /= self.q;
            }
            self.pack(&d)
        })
    }

    pub fn fmt_elem(&self, x: Elem) -> String {
        if self.s == 1 {
            return x.to_string();
        }
        let d = self.digits(x);
        let parts: Vec<String> = (0..self.s as usize)
            .filter(|&i| d[i] != 0)
            .map(|i| match i {
                0 => d[i].to_string(),
                1 => format!("{}w", d[i]),
                _ => format!("{}w^{}", d[i], i),
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }

    /// Integer binomial coefficient reduced into the ring (exact via u128 arithmetic mod q).
    pub fn binom(&self, n: u64, k: u64) -> Elem {
        binom_mod(n, k, self.q)
    }

    /// Multinomial (sum a)!/(prod a_i!) reduced into the ring.
    pub fn multinomial(&self, parts: &[u64]) -> Elem {
        let mut acc = self.one();
        let mut total = 0u64;
        for &a in parts {
            total += a;
            acc = self.mul(acc, self.binom(total, a));
        }
        acc
    }
}

/// Binomial coefficient modulo m, computed exactly with Pascal recursion on
/// the smaller argument (entries stay below m).
pub fn binom_mod(n: u64, k: u64, m: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut row = vec![0u64; k as usize + 1];
    row[0] = 1 % m;
    for i in 1..=n {
        let top = (i.min(k)) as usize;
        for j in (1..=top).rev() {
            row[j] = (row[j] + row[j - 1]) % m;
        }
    }
    row[k as usize]
}

/// Exact binomial coefficient (small arguments).
pub fn binom_exact(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// v_p(n!)
pub fn val_factorial(p: u64, n: u64) -> u32 {
    let mut v = 0;
    let mut x = n / p;
    while x > 0 {
        v += x as u32;
        x /= p;
    }
    v
}

/// n! = p^{v} * u with u a unit; returns u reduced mod q.
pub fn factorial_unit_part(p: u64, n: u64, q: u64) -> u64 {
    let mut acc: u128 = 1 % q as u128;
    for i in 1..=n {
        let mut x = i;
        while x % p == 0 {
            x /= p;
        }
        acc = acc * (x as u128 % q as u128) % q as u128;
    }
    acc as u64
}

impl Ring {
    /// c * p^e / a! reduced into the ring, requiring e >= v_p(a!).
    pub fn p_pow_over_factorial(&self, e: u32, a: u64) -> Result<Elem, RingError> {
        let v = val_factorial(self.p, a);
        if e < v {
            return Err(RingError::NotDivisible);
        }
        let u = factorial_unit_part(self.p, a, self.q);
        Ok(self.mul(self.p_pow(e - v), self.inv(u)?))
    }

    /// p^e / prod a_i! for a multi-index.
    pub fn p_pow_over_multifactorial(&self, e: u32, a: &[u64]) -> Result<Elem, RingError> {
        let v: u32 = a.iter().map(|&x| val_factorial(self.p, x)).sum();
        if e < v {
            return Err(RingError::NotDivisible);
        }
        let mut u = self.one();
        for &x in a {
            u = self.mul(u, factorial_unit_part(self.p, x, self.q));
        }
        Ok(self.mul(self.p_pow(e - v), self.inv(u)?))
    }

    /// 1 / prod a_i!, when it is integral (no factor divisible by p).
    pub fn inv_multifactorial(&self, a: &[u64]) -> Result<Elem, RingError> {
        self.p_pow_over_multifactorial(0, a)
    }

    pub fn factorial(&self, a: u64) -> Elem {
        let v = val_factorial(self.p, a);
        self.mul(self.p_pow(v), factorial_unit_part(self.p, a, self.q))
    }
}

/// Dense matrix over a `Ring`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RingMatrix {
    pub ring: Ring,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Elem>,
}

impl RingMatrix {
    pub fn zeros(ring: Ring, rows: usize, cols: usize) -> RingMatrix {
        RingMatrix {
            ring,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(ring: Ring, n: usize) -> RingMatrix {
        let mut m = RingMatrix::zeros(ring, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(ring: Ring, rows: &[Vec<Elem>]) -> RingMatrix {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        let mut m = RingMatrix::zeros(ring, r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn from_ints(ring: Ring, rows: &[Vec<i64>]) -> RingMatrix {
        let conv: Vec<Vec<Elem>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| ring.from_int(x)).collect())
            .collect();
        RingMatrix::from_rows(ring, &conv)
    }

    pub fn get(&self, i: usize, j: usize) -> Elem {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Elem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Elem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<Elem>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn col(&self, j: usize) -> Vec<Elem> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> RingMatrix {
        let mut t = RingMatrix::zeros(self.ring, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn mul(&self, other: &RingMatrix) -> Result<RingMatrix, RingError> {
        if self.cols != other.rows {
            return Err(RingError::Dimension(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let r = &self.ring;
        let mut out = RingMatrix::zeros(*r, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b != 0 {
                        let idx = i * out.cols + j;
                        out.data[idx] = r.add(out.data[idx], r.mul(a, b));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Elem]) -> Result<Vec<Elem>, RingError> {
        if v.len() != self.cols {
            return Err(RingError::Dimension(format!(
                "{}x{} * vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let r = &self.ring;
        let mut out = vec![0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0;
            for (j, &x) in v.iter().enumerate() {
                let a = self.get(i, j);
                if a != 0 && x != 0 {
                    acc = r.add(acc, r.mul(a, x));
                }
            }
            *o = acc;
        }
        Ok(out)
    }

    pub fn add(&self, other: &RingMatrix) -> Result<RingMatrix, RingError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(RingError::Dimension("matrix sum".into()));
        }
        let r = &self.ring;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| r.add(a, b))
            .collect();
        Ok(RingMatrix {
            ring: *r,
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, c: Elem) -> RingMatrix {
        let r = &self.ring;
        RingMatrix {
            ring: *r,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| r.mul(a, c)).collect(),
        }
    }

    pub fn hstack(&self, other: &RingMatrix) -> RingMatrix {
        assert_eq!(self.rows, other.rows);
        let mut out = RingMatrix::zeros(self.ring, self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
            for j in 0..other.cols {
                out.set(i, self.cols + j, other.get(i, j));
            }
        }
        out
    }

    /// Determinant by elimination over the local ring (pivot of least valuation).
    pub fn det(&self) -> Result<Elem, RingError> {
        if self.rows != self.cols {
            return Err(RingError::Dimension("det of non-square matrix".into()));
        }
        let r = &self.ring;
        let n = self.rows;
        let mut a = self.clone();
        let mut det = r.one();
        for c in 0..n {
            let mut best: Option<(usize, u32)> = None;
            for i in c..n {
                let v = r.val(a.get(i, c));
                if v < r.n() && best.map(|b| v < b.1).unwrap_or(true) {
                    best = Some((i, v));
                }
            }
            let Some((piv, _)) = best else { return Ok(0) };
            if piv != c {
                a.swap_rows(piv, c);
                det = r.neg(det);
            }
            let pv = a.get(c, c);
            det = r.mul(det, pv);
            for i in c + 1..n {
                let f = r.div(a.get(i, c), pv)?;
                if f != 0 {
                    a.row_axpy(i, c, r.neg(f));
                }
            }
        }
        Ok(det)
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.cols {
            self.data.swap(i * self.cols + k, j * self.cols + k);
        }
    }

    /// row_i += f * row_j
    pub fn row_axpy(&mut self, i: usize, j: usize, f: Elem) {
        let r = self.ring;
        for k in 0..self.cols {
            let b = self.data[j * self.cols + k];
            if b != 0 {
                let idx = i * self.cols + k;
                self.data[idx] = r.add(self.data[idx], r.mul(f, b));
            }
        }
    }
}

/// Howell normal form of the row span of a matrix.
#[derive(Clone, Debug)]
pub struct HowellForm {
    /// Nonzero rows in echelon shape, pivots normalized to p^v, entries above pivots reduced.
    pub form: RingMatrix,
    /// `certificate * original = form`.
    pub certificate: RingMatrix,
    /// (pivot column, valuation of pivot) per row.
    pub pivots: Vec<(usize, u32)>,
}

pub fn howell(m: &RingMatrix) -> HowellForm {
    let r = m.ring;
    let nrows = m.rows;
    let ncols = m.cols;
    let mut pool: Vec<(Vec<Elem>, Vec<Elem>)> = (0..nrows)
        .map(|i| {
            let mut c = vec![0; nrows];
            c[i] = 1;
            (m.row(i).to_vec(), c)
        })
        .filter(|(row, _)| row.iter().any(|&x| x != 0))
        .collect();
    let mut out: Vec<(Vec<Elem>, Vec<Elem>)> = Vec::new();
    let mut pivots = Vec::new();
    for col in 0..ncols {
        let mut best: Option<(usize, u32)> = None;
        for (idx, (row, _)) in pool.iter().enumerate() {
            let x = row[col];
            if x != 0 {
                let v = r.val(x);
                if best.map(|b| v < b.1).unwrap_or(true) {
                    best = Some((idx, v));
                    if v == 0 {
                        break;
                    }
                }
            }
        }
        let Some((idx, v)) = best else { continue };
        let (mut prow, mut pcert) = pool.swap_remove(idx);
        let unit = r.div(prow[col], r.p_pow(v)).expect("valuation");
        let uinv = r.inv(unit).expect("unit");
        scale_vec(&r, &mut prow, uinv);
        scale_vec(&r, &mut pcert, uinv);
        prow[col] = r.p_pow(v);
        let pv = r.p_pow(v);
        for (row, cert) in pool.iter_mut() {
            let x = row[col];
            if x != 0 {
                let f = r.neg(r.div(x, pv).expect("minimal valuation divides"));
                axpy(&r, row, &prow, f);
                axpy(&r, cert, &pcert, f);
                debug_assert_eq!(row[col], 0);
            }
        }
        pool.retain(|(row, _)| row.iter().any(|&x| x != 0));
        if v > 0 {
            let f = r.p_pow(r.n() - v);
            let mut srow = prow.clone();
            let mut scert = pcert.clone();
            scale_vec(&r, &mut srow, f);
            scale_vec(&r, &mut scert, f);
            if srow.iter().any(|&x| x != 0) {
                pool.push((srow, scert));
            }
        }
        out.push((prow, pcert));
        pivots.push((col, v));
    }
    // reduce entries above pivots
    for i in 0..out.len() {
        let (col, v) = pivots[i];
        for j in 0..i {
            let x = out[j].0[col];
            if x == 0 {
                continue;
            }
            let (qt, _) = r.divmod_pk(x, v);
            if qt != 0 {
                let f = r.neg(qt);
                let (pr, pc) = (out[i].0.clone(), out[i].1.clone());
                axpy(&r, &mut out[j].0, &pr, f);
                axpy(&r, &mut out[j].1, &pc, f);
            }
        }
    }
    let form_rows: Vec<Vec<Elem>> = out.iter().map(|x| x.0.clone()).collect();
    let cert_rows: Vec<Vec<Elem>> = out.iter().map(|x| x.1.clone()).collect();
    let mut form = RingMatrix::zeros(r, form_rows.len(), ncols);
    for (i, row) in form_rows.iter().enumerate() {
        form.data[i * ncols..(i + 1) * ncols].copy_from_slice(row);
    }
    let mut certificate = RingMatrix::zeros(r, cert_rows.len(), nrows);
    for (i, row) in cert_rows.iter().enumerate() {
        certificate.data[i * nrows..(i + 1) * nrows].copy_from_slice(row);
    }
    HowellForm {
        form,
        certificate,
        pivots,
    }
}

pub(crate) fn scale_vec(r: &Ring, v: &mut [Elem], f: Elem) {
    for x in v.iter_mut() {
        if *x != 0 {
            *x = r.mul(*x, f);
        }
    }
}

/// y += f * x
pub(crate) fn axpy(r: &Ring, y: &mut [Elem], x: &[Elem], f: Elem) {
    if f == 0 {
        return;
    }
    for (a, &b) in y.iter_mut().zip(x) {
        if b != 0 {
            *a = r.add(*a, r.mul(f, b));
        }
    }
}

impl HowellForm {
    /// Reduces `v` against the form; returns the remainder and the coefficients
    /// (with respect to the form rows) that were subtracted.
    pub fn reduce(&self, v: &[Elem]) -> (Vec<Elem>, Vec<Elem>) {
        let r = self.form.ring;
        let mut w = v.to_vec();
        let mut coeffs = vec![0; self.form.rows];
        for (i, &(col, pv)) in self.pivots.iter().enumerate() {
            let x = w[col];
            if x == 0 {
                continue;
            }
            let (qt, _) = r.divmod_pk(x, pv);
            if qt != 0 {
                axpy(&r, &mut w, self.form.row(i), r.neg(qt));
                coeffs[i] = qt;
            }
        }
        (w, coeffs)
    }

    pub fn contains(&self, v: &[Elem]) -> bool {
        self.reduce(v).0.iter().all(|&x| x == 0)
    }

    /// Writes v as a combination of the original rows, if it lies in their span.
    pub fn express(&self, v: &[Elem]) -> Option<Vec<Elem>> {
        let (rem, coeffs) = self.reduce(v);
        if rem.iter().any(|&x| x != 0) {
            return None;
        }
        let r = self.form.ring;
        let mut out = vec![0; self.certificate.cols];
        for (i, &c) in coeffs.iter().enumerate() {
            axpy(&r, &mut out, self.certificate.row(i), c);
        }
        Some(out)
    }

    /// Length (log_p of the cardinality) of the row span.
    pub fn length(&self) -> u32 {
        self.pivots
            .iter()
            .map(|&(_, v)| self.form.ring.n() - v)
            .sum::<u32>()
            * self.form.ring.s()
    }
}

/// Generators of {x : M x = 0}.
pub fn kernel(m: &RingMatrix) -> Vec<Vec<Elem>> {
    let r = m.ring;
    let aug = m.transpose().hstack(&RingMatrix::identity(r, m.cols));
    let h = howell(&aug);
    let mut out = Vec::new();
    for (i, &(col, _)) in h.pivots.iter().enumerate() {
        if col >= m.rows {
            out.push(h.form.row(i)[m.rows..].to_vec());
        }
    }
    out
}

/// Some x with M x = b, if one exists.
pub fn solve(m: &RingMatrix, b: &[Elem]) -> Result<Option<Vec<Elem>>, RingError> {
    if b.len() != m.rows {
        return Err(RingError::Dimension(format!(
            "rhs of length {} for {} rows",
            b.len(),
            m.rows
        )));
    }
    let h = howell(&m.transpose());
    Ok(h.express(b))
}

/// Result of a two-sided reduction `P * A * Q = D` with D diagonal (entries p^{e_i}).
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub p: RingMatrix,
    pub p_inv: RingMatrix,
    pub q: RingMatrix,
    pub q_inv: RingMatrix,
    /// valuation of each diagonal entry (n for zero entries), length min(rows, cols)
    pub diag: Vec<u32>,
}

pub fn smith(a: &RingMatrix) -> SmithForm {
    let r = a.ring;
    let (m, n) = (a.rows, a.cols);
    let mut d = a.clone();
    let mut p = RingMatrix::identity(r, m);
    let mut pi = RingMatrix::identity(r, m);
    let mut q = RingMatrix::identity(r, n);
    let mut qi = RingMatrix::identity(r, n);
    let mut diag = Vec::new();
    for t in 0..m.min(n) {
        let mut best: Option<(usize, usize, u32)> = None;
        'outer: for i in t..m {
            for j in t..n {
                let x = d.get(i, j);
                if x != 0 {
                    let v = r.val(x);
                    if best.map(|b| v < b.2).unwrap_or(true) {
                        best = Some((i, j, v));
                        if v == 0 {
                            break 'outer;
                        }
                    }
                }
            }
        }
        let Some((bi, bj, v)) = best else {
            diag.extend(std::iter::repeat(r.n()).take(m.min(n) - t));
            break;
        };
        d.swap_rows(t, bi);
        p.swap_rows(t, bi);
        swap_cols(&mut pi, t, bi);
        swap_cols(&mut d, t, bj);
        swap_cols(&mut q, t, bj);
        qi.swap_rows(t, bj);
        let pv = r.p_pow(v);
        let unit = r.div(d.get(t, t), pv).unwrap();
        let uinv = r.inv(unit).unwrap();
        // scale row t of D and P
        for k in 0..n {
            let x = d.get(t, k);
            d.set(t, k, r.mul(x, uinv));
        }
        for k in 0..m {
            let x = p.get(t, k);
            p.set(t, k, r.mul(x, uinv));
            let y = pi.get(k, t);
            pi.set(k, t, r.mul(y, unit));
        }
        d.set(t, t, pv);
        for i in t + 1..m {
            let x = d.get(i, t);
            if x != 0 {
                let f = r.neg(r.div(x, pv).unwrap());
                d.row_axpy(i, t, f);
                p.row_axpy(i, t, f);
                col_axpy(&mut pi, t, i, r.neg(f));
            }
        }
        for j in t + 1..n {
            let x = d.get(t, j);
            if x != 0 {
                let f = r.neg(r.div(x, pv).unwrap());
                // col_j += f col_t  (Q <- Q E, Q^{-1} <- E^{-1} Q^{-1})
                col_axpy(&mut d, j, t, f);
                col_axpy(&mut q, j, t, f);
                qi.row_axpy(t, j, r.neg(f));
            }
        }
        diag.push(v);
    }
    SmithForm {
        p,
        p_inv: pi,
        q,
        q_inv: qi,
        diag,
    }
}

fn swap_cols(m: &mut RingMatrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    for k in 0..m.rows {
        let c = m.cols;
        m.data.swap(k * c + i, k * c + j);
    }
}

/// col_i += f col_j
fn col_axpy(m: &mut RingMatrix, i: usize, j: usize, f: Elem) {
    let r = m.ring;
    for k in 0..m.rows {
        let b = m.get(k, j);
        if b != 0 {
            let a = m.get(k, i);
            m.set(k, i, r.add(a, r.mul(f, b)));
        }
    }
}

/// Cokernel R^rows / (column span of A) as exponents e_i of its cyclic factors R/p^{e_i}
/// (trivial factors dropped, free factors reported with e = n), sorted ascending.
pub fn cokernel_invariants(a: &RingMatrix) -> Vec<u32> {
    let r = a.ring;
    let sm = smith(a);
    let mut out: Vec<u32> = sm.diag.iter().copied().filter(|&v| v > 0).collect();
    for _ in sm.diag.len()..a.rows {
        out.push(r.n());
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(Ring::new(5, 2, 1).unwrap().size(), 25);
        assert_eq!(Ring::new(2, 1, 1).unwrap().size(), 2);
        assert_eq!(Ring::new(2, 2, 2).unwrap().size(), 16);
        assert!(Ring::new(4, 1, 1).is_err());
        assert!(Ring::new(3, 0, 1).is_err());
        assert!(Ring::new(3, 1, 0).is_err());
    }

    #[test]
    fn p_power_annihilates() {
        for &(p, n, s) in &[(2, 3, 1), (3, 2, 2), (5, 1, 3)] {
            let r = Ring::new(p, n, s).unwrap();
            let x = r.add(r.generator(), r.one());
            assert_eq!(r.mul(r.from_int(p.pow(n) as i64), x), 0);
            if n > 1 {
                assert_ne!(r.mul(r.from_int(p.pow(n - 1) as i64), x), 0);
            }
        }
    }

    #[test]
    fn p_divide_examples() {
        let r1 = Ring::zp(5, 1);
        let r2 = Ring::zp(5, 2);
        assert_eq!(r1.p_divide(10, &r2).unwrap(), 2);
        assert_eq!(r1.p_divide(7, &r2), Err(RingError::NotDivisible));
        let q2 = Ring::zp(2, 2);
        let q3 = Ring::zp(2, 3);
        assert_eq!(q2.p_divide(4, &q3).unwrap(), 2);
    }

    #[test]
    fn sigma_gr42() {
        let r = Ring::new(2, 2, 2).unwrap();
        let w = r.generator();
        // w^2 + w + 1 = 0
        assert_eq!(r.add(r.add(r.mul(w, w), w), 1), 0);
        let sw = r.sigma(w);
        let r1 = r.at_level(1);
        assert_eq!(r.reduce_to(sw, &r1), r1.mul(r1.generator(), r1.generator()));
        for x in r.elements() {
            assert_eq!(r.sigma(r.sigma(x)), x);
        }
    }

    #[test]
    fn inverse_and_div() {
        let r = Ring::new(3, 3, 2).unwrap();
        for x in r.elements().take(300) {
            if r.is_unit(x) {
                assert_eq!(r.mul(x, r.inv(x).unwrap()), 1);
            }
        }
        let z = Ring::zp(5, 3);
        assert_eq!(z.mul(z.div(50, 5).unwrap(), 5), 50);
    }

    #[test]
    fn howell_small() {
        let r = Ring::zp(2, 2);
        let m = RingMatrix::from_ints(r, &[vec![2]]);
        assert_eq!(kernel(&m), vec![vec![2]]);
        let m = RingMatrix::from_ints(r, &[vec![1, 2], vec![0, 2]]);
        assert_eq!(cokernel_invariants(&m), vec![1]);
        let z = Ring::zp(5, 2);
        let m = RingMatrix::from_ints(z, &[vec![5]]);
        let x = solve(&m, &[5]).unwrap().unwrap();
        assert_eq!(z.mul(5, x[0]), 5);
    }

    #[test]
    fn conway_table_irreducible() {
        for &p in &[2u64, 3, 5, 7] {
            for s in 2..=4 {
                assert!(fp_irreducible(&conway(p, s).unwrap(), p), "p={p} s={s}");
            }
        }
    }
}
