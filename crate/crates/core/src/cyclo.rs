//! Exact arithmetic in cyclotomic fields `Q(ζ_N)` and dense linear algebra
//! over them.
//!
//! An element is stored in the power basis `1, ζ, …, ζ^{φ(N)−1}` with
//! rational coefficients, reduced modulo the N-th cyclotomic polynomial.
//! That representation is unique, so equality is coefficient comparison
//! after promoting both operands into `Q(ζ_lcm)`. Nothing here is numeric:
//! traces of finite-order operators, character values, and homology
//! computations all stay in the exact field.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

/// Euler's totient for small moduli.
pub fn phi(n: u32) -> u32 {
    assert!(n >= 1);
    let mut result = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

fn divisors(n: u32) -> Vec<u32> {
    let mut out: Vec<u32> = (1..=n).filter(|d| n % d == 0).collect();
    out.sort_unstable();
    out
}

/// Coefficients (ascending) of the N-th cyclotomic polynomial, over `Z`.
pub fn cyclotomic_polynomial(n: u32) -> Vec<BigInt> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Vec<BigInt>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&n) {
        return p.clone();
    }
    let poly = if n == 1 {
        vec![-BigInt::one(), BigInt::one()] // x − 1
    } else {
        // (x^n − 1) / Π_{d|n, d<n} Φ_d, exact integer division
        let mut num = vec![BigInt::zero(); n as usize + 1];
        num[0] = -BigInt::one();
        num[n as usize] = BigInt::one();
        for d in divisors(n) {
            if d < n {
                num = int_poly_div_exact(&num, &cyclotomic_polynomial(d));
            }
        }
        num
    };
    cache.lock().unwrap().insert(n, poly.clone());
    poly
}

/// Exact division of integer polynomials with monic divisor.
fn int_poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    assert!(den.last().map(|c| c.is_one()).unwrap_or(false), "divisor must be monic");
    let mut rem: Vec<BigInt> = num.to_vec();
    let dn = den.len() - 1;
    let qn = rem.len().saturating_sub(dn);
    let mut quot = vec![BigInt::zero(); qn];
    for i in (0..qn).rev() {
        let c = rem[i + dn].clone();
        if c.is_zero() {
            continue;
        }
        quot[i] = c.clone();
        for (j, dj) in den.iter().enumerate() {
            let sub = &c * dj;
            rem[i + j] -= sub;
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "division was not exact");
    quot
}

fn trim(p: &mut Vec<BigRational>) {
    while p.last().map(|c| c.is_zero()).unwrap_or(false) {
        p.pop();
    }
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            let add = ai * bj;
            out[i + j] += add;
        }
    }
    out
}

/// Remainder of `p` modulo monic integer polynomial `m`, over `Q`.
fn poly_rem_monic(p: &[BigRational], m: &[BigInt]) -> Vec<BigRational> {
    let dm = m.len() - 1;
    let mut rem: Vec<BigRational> = p.to_vec();
    trim(&mut rem);
    while rem.len() > dm {
        let lead = rem.last().unwrap().clone();
        let shift = rem.len() - 1 - dm;
        for (j, mj) in m.iter().enumerate() {
            let sub = &lead * BigRational::from(mj.clone());
            rem[shift + j] -= sub;
        }
        trim(&mut rem);
    }
    rem
}

/// An element of `Q(ζ_order)` in the power basis.
#[derive(Clone)]
pub struct Cyc {
    order: u32,
    /// coefficients, length φ(order)
    c: Vec<BigRational>,
}

impl Cyc {
    pub fn zero() -> Self {
        Cyc { order: 1, c: vec![BigRational::zero()] }
    }

    pub fn one() -> Self {
        Cyc { order: 1, c: vec![BigRational::one()] }
    }

    pub fn from_rational(q: BigRational) -> Self {
        Cyc { order: 1, c: vec![q] }
    }

    pub fn from_int(x: i64) -> Self {
        Cyc::from_rational(BigRational::from(BigInt::from(x)))
    }

    pub fn from_bigint(x: BigInt) -> Self {
        Cyc::from_rational(BigRational::from(x))
    }

    /// `ζ_n^k`.
    pub fn root_of_unity(n: u32, k: i64) -> Self {
        assert!(n >= 1);
        let k = k.rem_euclid(n as i64) as usize;
        let mut p = vec![BigRational::zero(); k + 1];
        p[k] = BigRational::one();
        Cyc::reduce(n, p)
    }

    fn reduce(order: u32, p: Vec<BigRational>) -> Self {
        let m = cyclotomic_polynomial(order);
        let mut r = poly_rem_monic(&p, &m);
        r.resize(phi(order) as usize, BigRational::zero());
        Cyc { order, c: r }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.c
    }

    /// Re-express in `Q(ζ_target)`; `order` must divide `target`.
    pub fn promote(&self, target: u32) -> Cyc {
        assert!(target % self.order == 0, "{} does not divide {}", self.order, target);
        if target == self.order {
            return self.clone();
        }
        let step = (target / self.order) as usize;
        let mut p = vec![BigRational::zero(); (self.c.len() - 1) * step + 1];
        for (i, ci) in self.c.iter().enumerate() {
            p[i * step] = ci.clone();
        }
        Cyc::reduce(target, p)
    }

    fn common(a: &Cyc, b: &Cyc) -> (Cyc, Cyc) {
        let l = num_integer::lcm(a.order, b.order);
        (a.promote(l), b.promote(l))
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.c[0].is_one() && self.c[1..].iter().all(|x| x.is_zero())
    }

    /// `Some(q)` iff the element lies in `Q`.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.c[1..].iter().all(|x| x.is_zero()) {
            Some(self.c[0].clone())
        } else {
            None
        }
    }

    pub fn add(&self, other: &Cyc) -> Cyc {
        let (mut a, b) = Cyc::common(self, other);
        for (x, y) in a.c.iter_mut().zip(b.c.iter()) {
            *x += y;
        }
        a
    }

    pub fn sub(&self, other: &Cyc) -> Cyc {
        let (mut a, b) = Cyc::common(self, other);
        for (x, y) in a.c.iter_mut().zip(b.c.iter()) {
            *x -= y;
        }
        a
    }

    pub fn neg(&self) -> Cyc {
        let mut a = self.clone();
        for x in a.c.iter_mut() {
            *x = -x.clone();
        }
        a
    }

    pub fn mul(&self, other: &Cyc) -> Cyc {
        let (a, b) = Cyc::common(self, other);
        Cyc::reduce(a.order, poly_mul(&a.c, &b.c))
    }

    pub fn scale(&self, q: &BigRational) -> Cyc {
        let mut a = self.clone();
        for x in a.c.iter_mut() {
            *x *= q;
        }
        a
    }

    /// Multiplicative inverse via the extended Euclidean algorithm in `Q[x]`
    /// against the cyclotomic modulus. Panics on zero.
    pub fn inv(&self) -> Cyc {
        assert!(!self.is_zero(), "division by zero in Q(zeta)");
        let m: Vec<BigRational> = cyclotomic_polynomial(self.order)
            .iter()
            .map(|c| BigRational::from(c.clone()))
            .collect();
        // invariants: r0 = s0·p (mod Φ), r1 = s1·p (mod Φ)
        let mut r0 = m;
        let mut r1 = self.c.clone();
        trim(&mut r1);
        let mut s0 = vec![];
        let mut s1 = vec![BigRational::one()];
        while !r1.is_empty() {
            // divide r0 by r1
            let mut q = vec![BigRational::zero(); r0.len().saturating_sub(r1.len()) + 1];
            let mut rem = r0.clone();
            let lead = r1.last().unwrap().clone();
            while rem.len() >= r1.len() && !rem.is_empty() {
                let c = rem.last().unwrap() / &lead;
                let shift = rem.len() - r1.len();
                q[shift] = c.clone();
                for (j, rj) in r1.iter().enumerate() {
                    let sub = &c * rj;
                    rem[shift + j] -= sub;
                }
                trim(&mut rem);
            }
            let mut s2: Vec<BigRational> = {
                let qs1 = poly_mul(&q, &s1);
                let mut out = s0.clone();
                out.resize(out.len().max(qs1.len()), BigRational::zero());
                for (i, x) in qs1.iter().enumerate() {
                    out[i] -= x;
                }
                out
            };
            trim(&mut s2);
            r0 = r1;
            r1 = rem;
            s0 = s1;
            s1 = s2;
        }
        // r0 = gcd (a nonzero constant, since Φ is irreducible and p ≠ 0 mod Φ)
        assert!(r0.len() == 1, "cyclotomic modulus not coprime to element");
        let g = r0[0].clone();
        let inv_coeffs: Vec<BigRational> = s0.iter().map(|c| c / &g).collect();
        Cyc::reduce(self.order, inv_coeffs)
    }

    pub fn pow(&self, e: i64) -> Cyc {
        if e == 0 {
            return Cyc::one();
        }
        let base = if e < 0 { self.inv() } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Cyc::one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        acc
    }
}

impl PartialEq for Cyc {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = Cyc::common(self, other);
        a.c == b.c
    }
}

impl Eq for Cyc {}

impl fmt::Debug for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = self.as_rational() {
            return write!(f, "{q}");
        }
        let mut terms = Vec::new();
        for (i, c) in self.c.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let var = match i {
                0 => String::new(),
                1 => format!("z{}", self.order),
                _ => format!("z{}^{}", self.order, i),
            };
            let t = if var.is_empty() {
                format!("{c}")
            } else if c.is_one() {
                var
            } else if (-c).is_one() {
                format!("-{var}")
            } else {
                format!("{c}*{var}")
            };
            terms.push(t);
        }
        let mut s = String::new();
        for (k, t) in terms.iter().enumerate() {
            if k == 0 {
                s.push_str(t);
            } else if let Some(stripped) = t.strip_prefix('-') {
                s.push_str(" - ");
                s.push_str(stripped);
            } else {
                s.push_str(" + ");
                s.push_str(t);
            }
        }
        write!(f, "{s}")
    }
}

/// Dense matrix over [`Cyc`], row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct CycMat {
    rows: usize,
    cols: usize,
    a: Vec<Cyc>,
}

impl fmt::Debug for CycMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CycMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{}", self[(i, j)])).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for CycMat {
    type Output = Cyc;
    fn index(&self, (i, j): (usize, usize)) -> &Cyc {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CycMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cyc {
        &mut self.a[i * self.cols + j]
    }
}

impl CycMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        CycMat { rows, cols, a: vec![Cyc::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CycMat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Cyc::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Cyc>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        CycMat { rows: r, cols: c, a: rows.into_iter().flatten().collect() }
    }

    pub fn from_cols(cols: Vec<Vec<Cyc>>) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |col| col.len());
        let mut m = CycMat::zero(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, x) in col.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn scalar(n: usize, s: &Cyc) -> Self {
        let mut m = CycMat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = s.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> Vec<Cyc> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn mul(&self, other: &CycMat) -> CycMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = CycMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    if other[(k, j)].is_zero() {
                        continue;
                    }
                    let add = self[(i, k)].mul(&other[(k, j)]);
                    out[(i, j)] = out[(i, j)].add(&add);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CycMat) -> CycMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(other.a.iter()) {
            *x = x.add(y);
        }
        out
    }

    pub fn sub(&self, other: &CycMat) -> CycMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(other.a.iter()) {
            *x = x.sub(y);
        }
        out
    }

    pub fn scale(&self, s: &Cyc) -> CycMat {
        let mut out = self.clone();
        for x in out.a.iter_mut() {
            *x = x.mul(s);
        }
        out
    }

    pub fn trace(&self) -> Cyc {
        assert_eq!(self.rows, self.cols);
        let mut t = Cyc::zero();
        for i in 0..self.rows {
            t = t.add(&self[(i, i)]);
        }
        t
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self[(i, j)].is_one()
                    } else {
                        self[(i, j)].is_zero()
                    }
                })
            })
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|x| x.is_zero())
    }

    /// Kronecker (tensor) product.
    pub fn kronecker(&self, other: &CycMat) -> CycMat {
        let mut out = CycMat::zero(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self[(i, j)].is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] =
                            self[(i, j)].mul(&other[(k, l)]);
                    }
                }
            }
        }
        out
    }

    /// Gauss-Jordan inverse; panics if singular (callers validate first via
    /// [`CycMat::inverse_checked`] when singularity is a user-facing error).
    pub fn inverse(&self) -> CycMat {
        self.inverse_checked().expect("matrix is singular")
    }

    pub fn inverse_checked(&self) -> Option<CycMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut inv = CycMat::identity(n);
        for col in 0..n {
            let p = (col..n).find(|&i| !m[(i, col)].is_zero())?;
            if p != col {
                for j in 0..n {
                    let t = m[(col, j)].clone();
                    m[(col, j)] = m[(p, j)].clone();
                    m[(p, j)] = t;
                    let t = inv[(col, j)].clone();
                    inv[(col, j)] = inv[(p, j)].clone();
                    inv[(p, j)] = t;
                }
            }
            let piv = m[(col, col)].inv();
            for j in 0..n {
                m[(col, j)] = m[(col, j)].mul(&piv);
                inv[(col, j)] = inv[(col, j)].mul(&piv);
            }
            for i in 0..n {
                if i != col && !m[(i, col)].is_zero() {
                    let f = m[(i, col)].clone();
                    for j in 0..n {
                        let s = f.mul(&m[(col, j)]);
                        m[(i, j)] = m[(i, j)].sub(&s);
                        let s = f.mul(&inv[(col, j)]);
                        inv[(i, j)] = inv[(i, j)].sub(&s);
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn pow(&self, e: i64) -> CycMat {
        assert_eq!(self.rows, self.cols);
        if e == 0 {
            return CycMat::identity(self.rows);
        }
        let base = if e < 0 { self.inverse() } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = CycMat::identity(self.rows);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        acc
    }

    /// Row-reduce a copy; returns (reduced matrix, pivot column indices).
    fn rref(&self) -> (CycMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
            if p != r {
                for j in 0..m.cols {
                    let t = m[(r, j)].clone();
                    m[(r, j)] = m[(p, j)].clone();
                    m[(p, j)] = t;
                }
            }
            let inv = m[(r, c)].inv();
            for j in 0..m.cols {
                m[(r, j)] = m[(r, j)].mul(&inv);
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in 0..m.cols {
                        let s = f.mul(&m[(r, j)]);
                        m[(i, j)] = m[(i, j)].sub(&s);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the (right) null space, as column vectors.
    pub fn kernel_basis(&self) -> Vec<Vec<Cyc>> {
        let (m, pivots) = self.rref();
        let mut basis = Vec::new();
        let is_pivot: Vec<bool> = {
            let mut v = vec![false; self.cols];
            for &p in &pivots {
                v[p] = true;
            }
            v
        };
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut vec = vec![Cyc::zero(); self.cols];
            vec[free] = Cyc::one();
            for (r, &p) in pivots.iter().enumerate() {
                vec[p] = m[(r, free)].neg();
            }
            basis.push(vec);
        }
        basis
    }

    /// Indices of a maximal independent subset of columns.
    pub fn independent_cols(&self) -> Vec<usize> {
        self.rref().1
    }

    /// Solve `self · X = B` (self must have full column rank; the system must
    /// be consistent). Returns the unique `X`.
    pub fn solve_exact(&self, b: &CycMat) -> CycMat {
        assert_eq!(self.rows, b.rows);
        let n = self.cols;
        let mut aug = CycMat::zero(self.rows, n + b.cols);
        for i in 0..self.rows {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..b.cols {
                aug[(i, n + j)] = b[(i, j)].clone();
            }
        }
        let (m, pivots) = aug.rref();
        assert_eq!(pivots.len(), n, "solve_exact: matrix does not have full column rank");
        assert!(pivots.iter().all(|&p| p < n), "solve_exact: inconsistent system");
        let mut x = CycMat::zero(n, b.cols);
        for (r, &p) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x[(p, j)] = m[(r, n + j)].clone();
            }
        }
        // consistency check on remaining rows
        for i in pivots.len()..self.rows {
            for j in 0..b.cols {
                assert!(m[(i, n + j)].is_zero(), "solve_exact: inconsistent system");
            }
        }
        x
    }
}
