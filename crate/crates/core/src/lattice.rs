//! Exact integer-lattice algebra.
//!
//! Everything here works over arbitrary-precision integers: Smith normal
//! form entries grow quickly under elementary transforms, so no fixed-width
//! shortcuts are taken. The central object is [`IntMat`], a dense row-major
//! matrix over [`BigInt`], together with:
//!
//! * [`smith_normal_form`]: `A = U · D · V` with `U`, `V` unimodular and `D`
//!   diagonal with a divisibility chain. Both transforms and their inverses
//!   are tracked, which gives kernels (saturated by construction), cokernel
//!   invariant factors, canonical coset representatives, and integer linear
//!   solving without any extra elimination passes.
//! * [`coinvariants`]: the quotient `Λ/(1−u)Λ` as a [`FiniteAbelianGroup`].
//! * [`det_one_minus`] and [`alt_exterior_trace`]: both sides of the
//!   identity `det(1−u) = Σ_i (−1)^i tr(u, ∧^i Λ)`, computed independently
//!   (Bareiss elimination vs. principal-minor sums).
//! * [`fixed_sublattice`]: a basis of `ker(u − 1)`, saturated, so rank zero
//!   is exactly ellipticity of `u`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

use thiserror::Error;

/// Errors from lattice-level linear algebra.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("matrix dimensions {0}x{1} and {2}x{3} are incompatible")]
    Shape(usize, usize, usize, usize),
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("quotient is infinite (free rank {0} > 0)")]
    InfiniteQuotient(usize),
}

/// Dense row-major matrix over `BigInt`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    a: Vec<BigInt>,
}

impl fmt::Debug for IntMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for IntMat {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.a[i * self.cols + j]
    }
}

impl IntMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMat { rows, cols, a: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    /// Build from rows of machine integers.
    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut m = IntMat::zero(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = BigInt::from(x);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        IntMat { rows: r, cols: c, a: rows.into_iter().flatten().collect() }
    }

    /// Build from a list of column vectors.
    pub fn from_cols(cols: Vec<Vec<BigInt>>) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |col| col.len());
        assert!(cols.iter().all(|col| col.len() == r), "ragged columns");
        let mut m = IntMat::zero(r, c);
        for (j, col) in cols.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> Vec<BigInt> {
        (0..self.cols).map(|j| self[(i, j)].clone()).collect()
    }

    pub fn col(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> IntMat {
        let mut t = IntMat::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = IntMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = &self[(i, k)];
                if aik.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = aik * &other[(k, j)];
                    out[(i, j)] += add;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in mul_vec");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| &self[(i, j)] * &v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &IntMat) -> IntMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(other.a.iter()) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &IntMat) -> IntMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(other.a.iter()) {
            *x -= y;
        }
        out
    }

    pub fn neg(&self) -> IntMat {
        let mut out = self.clone();
        for x in out.a.iter_mut() {
            *x = -&*x;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|x| x.is_zero())
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

    /// `I − self` for square matrices.
    pub fn one_minus(&self) -> Result<IntMat, LatticeError> {
        if self.rows != self.cols {
            return Err(LatticeError::NotSquare(self.rows, self.cols));
        }
        Ok(IntMat::identity(self.rows).sub(self))
    }

    /// Exact determinant by fraction-free Bareiss elimination.
    pub fn det(&self) -> Result<BigInt, LatticeError> {
        if self.rows != self.cols {
            return Err(LatticeError::NotSquare(self.rows, self.cols));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                // find a pivot row below
                match (k + 1..n).find(|&i| !m[(i, k)].is_zero()) {
                    Some(i) => {
                        for j in 0..n {
                            let tmp = m[(k, j)].clone();
                            m[(k, j)] = m[(i, j)].clone();
                            m[(i, j)] = tmp;
                        }
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[(i, j)] * &m[(k, k)] - &m[(i, k)] * &m[(k, j)];
                    // Bareiss: division is exact
                    m[(i, j)] = num / &prev;
                }
                m[(i, k)] = BigInt::zero();
            }
            prev = m[(k, k)].clone();
        }
        Ok(sign * m[(n - 1, n - 1)].clone())
    }

    /// Exact inverse of a unimodular matrix (|det| = 1), via the adjugate.
    pub fn inverse_unimodular(&self) -> Result<IntMat, LatticeError> {
        let d = self.det()?;
        assert!(
            d.abs().is_one(),
            "inverse_unimodular requires |det| = 1, got det = {d}"
        );
        let n = self.rows;
        let mut adj = IntMat::zero(n, n);
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor(i, j);
                let cof = minor.det()?;
                let sg = if (i + j) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
                adj[(j, i)] = sg * cof;
            }
        }
        if d.is_one() {
            Ok(adj)
        } else {
            Ok(adj.neg())
        }
    }

    fn minor(&self, drop_row: usize, drop_col: usize) -> IntMat {
        let mut m = IntMat::zero(self.rows - 1, self.cols - 1);
        let mut ii = 0;
        for i in 0..self.rows {
            if i == drop_row {
                continue;
            }
            let mut jj = 0;
            for j in 0..self.cols {
                if j == drop_col {
                    continue;
                }
                m[(ii, jj)] = self[(i, j)].clone();
                jj += 1;
            }
            ii += 1;
        }
        m
    }

    /// Trace of the induced map on the k-th exterior power: the sum of all
    /// principal k×k minors.
    pub fn exterior_trace(&self, k: usize) -> Result<BigInt, LatticeError> {
        if self.rows != self.cols {
            return Err(LatticeError::NotSquare(self.rows, self.cols));
        }
        let n = self.rows;
        if k > n {
            return Ok(BigInt::zero());
        }
        let mut total = BigInt::zero();
        for subset in combinations(n, k) {
            let mut sub = IntMat::zero(k, k);
            for (ii, &i) in subset.iter().enumerate() {
                for (jj, &j) in subset.iter().enumerate() {
                    sub[(ii, jj)] = self[(i, j)].clone();
                }
            }
            total += sub.det()?;
        }
        Ok(total)
    }
}

/// All k-element subsets of {0, …, n−1} in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Smith normal form `A = U · D · V` together with the inverse transforms.
///
/// `u_inv · A · v_inv = D`, with `u · u_inv = v · v_inv = I`. `D` is
/// diagonal with nonnegative entries satisfying `d₁ | d₂ | …`.
#[derive(Clone, Debug)]
pub struct Snf {
    pub u: IntMat,
    pub d: IntMat,
    pub v: IntMat,
    pub u_inv: IntMat,
    pub v_inv: IntMat,
}

impl Snf {
    /// Diagonal entries of `D` (length `min(rows, cols)`).
    pub fn diag(&self) -> Vec<BigInt> {
        let n = self.d.rows().min(self.d.cols());
        (0..n).map(|i| self.d[(i, i)].clone()).collect()
    }

    /// Rank of the matrix = number of nonzero diagonal entries.
    pub fn rank(&self) -> usize {
        self.diag().iter().filter(|d| !d.is_zero()).count()
    }

    /// Basis of `ker(A)` as columns; the basis extends to a basis of the
    /// ambient lattice, so the kernel is saturated.
    pub fn kernel_basis(&self) -> Vec<Vec<BigInt>> {
        let rank = self.rank();
        let c = self.d.cols();
        // A x = 0  ⟺  D (v x) = 0  ⟺  v x supported on zero-diagonal columns,
        // so x runs over the corresponding columns of v⁻¹.
        (rank..c).map(|j| self.v_inv.col(j)).collect()
    }

    /// The cokernel `Z^rows / A·Z^cols` as an abstract group.
    pub fn cokernel(&self) -> FiniteAbelianGroup {
        let rank = self.rank();
        let free_rank = self.d.rows() - rank;
        let factors: Vec<BigInt> = self
            .diag()
            .into_iter()
            .filter(|d| !d.is_zero() && !d.is_one())
            .collect();
        FiniteAbelianGroup { invariant_factors: factors, free_rank }
    }

    /// Canonical representative of `x + A·Z^cols` inside `Z^rows`: torsion
    /// coordinates are reduced into `[0, dᵢ)`, free coordinates are kept.
    pub fn reduce_mod_image(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.d.rows());
        let mut y = self.u_inv.mul_vec(x);
        let n = self.d.rows().min(self.d.cols());
        for (i, yi) in y.iter_mut().enumerate() {
            if i < n {
                let di = &self.d[(i, i)];
                if !di.is_zero() {
                    *yi = yi.mod_floor(di);
                }
            }
        }
        self.u.mul_vec(&y)
    }

    /// All coset representatives of the cokernel, in a deterministic
    /// (odometer over the SNF box) order. Errors if the cokernel is infinite.
    pub fn coset_reps(&self) -> Result<Vec<Vec<BigInt>>, LatticeError> {
        let g = self.cokernel();
        if g.free_rank > 0 {
            return Err(LatticeError::InfiniteQuotient(g.free_rank));
        }
        let n = self.d.rows().min(self.d.cols());
        let diag = self.diag();
        let mut reps = vec![vec![BigInt::zero(); self.d.rows()]];
        // odometer over Π [0, dᵢ)
        let mut digits = vec![BigInt::zero(); n];
        'outer: loop {
            // advance odometer
            let mut i = 0;
            loop {
                if i == n {
                    break 'outer;
                }
                digits[i] += 1;
                if digits[i] < diag[i] {
                    break;
                }
                digits[i] = BigInt::zero();
                i += 1;
            }
            let mut y = digits.clone();
            y.resize(self.d.rows(), BigInt::zero());
            reps.push(self.u.mul_vec(&y));
        }
        Ok(reps)
    }

    /// Solve `A x = b` over the integers. Returns `None` if no solution.
    pub fn solve(&self, b: &[BigInt]) -> Option<Vec<BigInt>> {
        assert_eq!(b.len(), self.d.rows());
        let c = self.u_inv.mul_vec(b);
        let n = self.d.rows().min(self.d.cols());
        let mut y = vec![BigInt::zero(); self.d.cols()];
        for (i, ci) in c.iter().enumerate() {
            if i < n && !self.d[(i, i)].is_zero() {
                let (q, r) = ci.div_mod_floor(&self.d[(i, i)]);
                if !r.is_zero() {
                    return None;
                }
                y[i] = q;
            } else if !ci.is_zero() {
                return None;
            }
        }
        Some(self.v_inv.mul_vec(&y))
    }
}

/// A finitely generated abelian group `Z^free_rank ⊕ ⊕ᵢ Z/dᵢ` with
/// `d₁ | d₂ | …` and every `dᵢ ≥ 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAbelianGroup {
    pub invariant_factors: Vec<BigInt>,
    pub free_rank: usize,
}

impl FiniteAbelianGroup {
    pub fn trivial() -> Self {
        FiniteAbelianGroup { invariant_factors: vec![], free_rank: 0 }
    }

    pub fn is_trivial(&self) -> bool {
        self.invariant_factors.is_empty() && self.free_rank == 0
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    /// Order of the torsion part.
    pub fn torsion_order(&self) -> BigInt {
        self.invariant_factors.iter().product()
    }

    /// Order of the whole group, `None` when infinite.
    pub fn order(&self) -> Option<BigInt> {
        if self.free_rank == 0 {
            Some(self.torsion_order())
        } else {
            None
        }
    }
}

impl fmt::Display for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> =
            self.invariant_factors.iter().map(|d| format!("Z/{d}")).collect();
        if self.free_rank > 0 {
            parts.push(format!("Z^{}", self.free_rank));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" x "))
        }
    }
}

/// Compute the Smith normal form `A = U · D · V`.
pub fn smith_normal_form(a: &IntMat) -> Snf {
    let rows = a.rows();
    let cols = a.cols();
    let mut d = a.clone();
    let mut u = IntMat::identity(rows);
    let mut u_inv = IntMat::identity(rows);
    let mut v = IntMat::identity(cols);
    let mut v_inv = IntMat::identity(cols);

    // Row ops apply E on the left of d and must be compensated in u (right
    // multiply by E⁻¹) while u_inv accumulates E on the left. Column ops are
    // mirrored on v / v_inv.
    fn swap_rows(d: &mut IntMat, u: &mut IntMat, u_inv: &mut IntMat, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..d.cols() {
            let t = d[(i, c)].clone();
            d[(i, c)] = d[(j, c)].clone();
            d[(j, c)] = t;
        }
        for r in 0..u.rows() {
            let t = u[(r, i)].clone();
            u[(r, i)] = u[(r, j)].clone();
            u[(r, j)] = t;
        }
        for c in 0..u_inv.cols() {
            let t = u_inv[(i, c)].clone();
            u_inv[(i, c)] = u_inv[(j, c)].clone();
            u_inv[(j, c)] = t;
        }
    }
    fn swap_cols(d: &mut IntMat, v: &mut IntMat, v_inv: &mut IntMat, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..d.rows() {
            let t = d[(r, i)].clone();
            d[(r, i)] = d[(r, j)].clone();
            d[(r, j)] = t;
        }
        for c in 0..v.cols() {
            let t = v[(i, c)].clone();
            v[(i, c)] = v[(j, c)].clone();
            v[(j, c)] = t;
        }
        for r in 0..v_inv.rows() {
            let t = v_inv[(r, i)].clone();
            v_inv[(r, i)] = v_inv[(r, j)].clone();
            v_inv[(r, j)] = t;
        }
    }
    fn negate_row(d: &mut IntMat, u: &mut IntMat, u_inv: &mut IntMat, i: usize) {
        for c in 0..d.cols() {
            d[(i, c)] = -d[(i, c)].clone();
        }
        for r in 0..u.rows() {
            u[(r, i)] = -u[(r, i)].clone();
        }
        for c in 0..u_inv.cols() {
            u_inv[(i, c)] = -u_inv[(i, c)].clone();
        }
    }
    /// row i += k · row j  (on d and u_inv); u col j -= k · u col i.
    fn addmul_row(
        d: &mut IntMat,
        u: &mut IntMat,
        u_inv: &mut IntMat,
        i: usize,
        j: usize,
        k: &BigInt,
    ) {
        if k.is_zero() {
            return;
        }
        for c in 0..d.cols() {
            let add = k * &d[(j, c)];
            d[(i, c)] += add;
        }
        for c in 0..u_inv.cols() {
            let add = k * &u_inv[(j, c)];
            u_inv[(i, c)] += add;
        }
        for r in 0..u.rows() {
            let sub = k * &u[(r, i)];
            u[(r, j)] -= sub;
        }
    }
    /// col i += k · col j  (on d and v); v_inv row j -= k · row i... mirrored.
    fn addmul_col(
        d: &mut IntMat,
        v: &mut IntMat,
        v_inv: &mut IntMat,
        i: usize,
        j: usize,
        k: &BigInt,
    ) {
        if k.is_zero() {
            return;
        }
        for r in 0..d.rows() {
            let add = k * &d[(r, j)];
            d[(r, i)] += add;
        }
        // d ← d · F with F = I + k·e_{j,i}; v_inv ← v_inv · F, v ← F⁻¹ · v.
        for r in 0..v_inv.rows() {
            let add = k * &v_inv[(r, j)];
            v_inv[(r, i)] += add;
        }
        for c in 0..v.cols() {
            let sub = k * &v[(i, c)];
            v[(j, c)] -= sub;
        }
    }

    let n = rows.min(cols);
    let mut t = 0;
    while t < n {
        // find the nonzero entry of smallest absolute value in d[t.., t..]
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !d[(i, j)].is_zero()
                    && pivot.is_none_or(|(pi, pj)| d[(i, j)].abs() < d[(pi, pj)].abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        swap_rows(&mut d, &mut u, &mut u_inv, t, pi);
        swap_cols(&mut d, &mut v, &mut v_inv, t, pj);
        if d[(t, t)].is_negative() {
            negate_row(&mut d, &mut u, &mut u_inv, t);
        }
        // clear column and row t by repeated reduction
        let mut clean = true;
        for i in t + 1..rows {
            if !d[(i, t)].is_zero() {
                let q = -d[(i, t)].div_floor(&d[(t, t)]);
                addmul_row(&mut d, &mut u, &mut u_inv, i, t, &q);
                if !d[(i, t)].is_zero() {
                    clean = false;
                }
            }
        }
        for j in t + 1..cols {
            if !d[(t, j)].is_zero() {
                let q = -d[(t, j)].div_floor(&d[(t, t)]);
                addmul_col(&mut d, &mut v, &mut v_inv, j, t, &q);
                if !d[(t, j)].is_zero() {
                    clean = false;
                }
            }
        }
        if !clean {
            continue; // smaller remainders exist; re-pick pivot
        }
        // ensure d[t][t] divides every later entry
        let mut divides_all = true;
        'scan: for i in t + 1..rows {
            for j in t + 1..cols {
                if !d[(i, j)].mod_floor(&d[(t, t)]).is_zero() {
                    // fold row i into row t to create a smaller pivot
                    addmul_row(&mut d, &mut u, &mut u_inv, t, i, &BigInt::one());
                    divides_all = false;
                    break 'scan;
                }
            }
        }
        if divides_all {
            t += 1;
        }
    }
    Snf { u, d, v, u_inv, v_inv }
}

/// `Λ/(1−u)Λ` for a lattice automorphism (or any endomorphism) `u`.
pub fn coinvariants(u: &IntMat) -> Result<FiniteAbelianGroup, LatticeError> {
    Ok(smith_normal_form(&u.one_minus()?).cokernel())
}

/// `det(1 − u)`, exactly.
pub fn det_one_minus(u: &IntMat) -> Result<BigInt, LatticeError> {
    u.one_minus()?.det()
}

/// `Σ_i (−1)^i tr(u, ∧^i Λ)` by principal-minor sums — an independent route
/// to `det(1 − u)`.
pub fn alt_exterior_trace(u: &IntMat) -> Result<BigInt, LatticeError> {
    if u.rows() != u.cols() {
        return Err(LatticeError::NotSquare(u.rows(), u.cols()));
    }
    let n = u.rows();
    let mut total = BigInt::zero();
    for k in 0..=n {
        let t = u.exterior_trace(k)?;
        if k % 2 == 0 {
            total += t;
        } else {
            total -= t;
        }
    }
    Ok(total)
}

/// Saturated basis of the fixed sublattice `ker(u − 1)` (as columns).
pub fn fixed_sublattice(u: &IntMat) -> Result<Vec<Vec<BigInt>>, LatticeError> {
    let m = u.one_minus()?.neg(); // u − 1
    Ok(smith_normal_form(&m).kernel_basis())
}

/// A basis for the lattice generated by the given column vectors
/// (deterministic; columns of `U·D` restricted to nonzero diagonal).
pub fn column_span_basis(gens: &IntMat) -> Vec<Vec<BigInt>> {
    let snf = smith_normal_form(gens);
    let rank = snf.rank();
    (0..rank)
        .map(|i| {
            let col = snf.u.col(i);
            col.iter().map(|x| x * &snf.d[(i, i)]).collect()
        })
        .collect()
}

/// Solve `A x = b` over the rationals by exact Gaussian elimination.
/// Returns one solution if the system is consistent.
pub fn solve_rational(a: &IntMat, b: &[BigInt]) -> Option<Vec<BigRational>> {
    assert_eq!(a.rows(), b.len());
    let rows = a.rows();
    let cols = a.cols();
    let mut m: Vec<Vec<BigRational>> = (0..rows)
        .map(|i| {
            (0..cols + 1)
                .map(|j| {
                    if j < cols {
                        BigRational::from(a[(i, j)].clone())
                    } else {
                        BigRational::from(b[i].clone())
                    }
                })
                .collect()
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for j in c..=cols {
            m[r][j] = &m[r][j] * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..=cols {
                    let sub = &f * &m[r][j];
                    m[i][j] = &m[i][j] - sub;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    // consistency: no row (0 … 0 | nonzero)
    for row in m.iter().skip(r) {
        if row[..cols].iter().all(|x| x.is_zero()) && !row[cols].is_zero() {
            return None;
        }
    }
    let mut x = vec![BigRational::zero(); cols];
    for (i, &c) in pivot_cols.iter().enumerate() {
        x[c] = m[i][cols].clone();
    }
    Some(x)
}

/// Basis (as columns) of `{x ∈ Z^n : M·x ∈ L}` where `L` is spanned by the
/// columns of `l_basis`. Computed from the kernel of the block `[M | −L]`.
pub fn preimage_lattice(m: &IntMat, l_basis: &IntMat) -> Vec<Vec<BigInt>> {
    assert_eq!(m.rows(), l_basis.rows());
    let n = m.cols();
    let k = l_basis.cols();
    let mut block = IntMat::zero(m.rows(), n + k);
    for i in 0..m.rows() {
        for j in 0..n {
            block[(i, j)] = m[(i, j)].clone();
        }
        for j in 0..k {
            block[(i, n + j)] = -l_basis[(i, j)].clone();
        }
    }
    let kernel = smith_normal_form(&block).kernel_basis();
    if kernel.is_empty() {
        return vec![];
    }
    let projected = IntMat::from_cols(
        kernel.into_iter().map(|col| col[..n].to_vec()).collect(),
    );
    column_span_basis(&projected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[track_caller]
    fn check_snf(a: &IntMat) {
        let snf = smith_normal_form(a);
        // reconstruction
        assert_eq!(snf.u.mul(&snf.d).mul(&snf.v), *a, "U·D·V != A");
        // tracked inverses
        assert!(snf.u.mul(&snf.u_inv).is_identity());
        assert!(snf.v.mul(&snf.v_inv).is_identity());
        // unimodularity
        assert!(snf.u.det().unwrap().abs().is_one());
        assert!(snf.v.det().unwrap().abs().is_one());
        // diagonal shape + chain
        for i in 0..snf.d.rows() {
            for j in 0..snf.d.cols() {
                if i != j {
                    assert!(snf.d[(i, j)].is_zero(), "off-diagonal junk at ({i},{j})");
                }
            }
        }
        let diag = snf.diag();
        for w in diag.windows(2) {
            assert!(!w[0].is_negative());
            if w[0].is_zero() {
                assert!(w[1].is_zero(), "zero before nonzero in chain");
            } else {
                assert!(w[1].mod_floor(&w[0]).is_zero(), "chain {} ∤ {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn snf_of_worked_example() {
        // frozen: invariant factors of [[1,−1],[1,2]] are (1, 3)
        let a = IntMat::from_i64_rows(&[vec![1, -1], vec![1, 2]]);
        check_snf(&a);
        let snf = smith_normal_form(&a);
        assert_eq!(snf.diag(), vec![bi(1), bi(3)]);
    }

    #[test]
    fn coinvariants_of_minus_one() {
        // u = −1 on Z²: Λ_u = (Z/2)², order 4
        let u = IntMat::from_i64_rows(&[vec![-1, 0], vec![0, -1]]);
        let g = coinvariants(&u).unwrap();
        assert_eq!(g.invariant_factors, vec![bi(2), bi(2)]);
        assert_eq!(g.free_rank, 0);
        assert_eq!(g.order(), Some(bi(4)));
        assert_eq!(g.to_string(), "Z/2 x Z/2");
    }

    #[test]
    fn coinvariants_of_identity_is_free() {
        let u = IntMat::identity(3);
        let g = coinvariants(&u).unwrap();
        assert_eq!(g.free_rank, 3);
        assert_eq!(g.order(), None);
    }

    #[test]
    fn det_one_minus_coxeter_order_three() {
        // order-3 rotation on Z² (companion of x²+x+1): det(1−u) = 3
        let u = IntMat::from_i64_rows(&[vec![0, -1], vec![1, -1]]);
        assert_eq!(det_one_minus(&u).unwrap(), bi(3));
        assert_eq!(alt_exterior_trace(&u).unwrap(), bi(3));
    }

    #[test]
    fn alternating_trace_equals_det_one_minus() {
        // frozen small cases + a pseudo-random sweep with an LCG
        let cases = [
            vec![vec![0, -1], vec![1, 0]],
            vec![vec![2, 1], vec![1, 1]],
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
            vec![vec![0, 0, -1], vec![1, 0, -1], vec![0, 1, -1]],
        ];
        for c in &cases {
            let u = IntMat::from_i64_rows(c);
            assert_eq!(alt_exterior_trace(&u).unwrap(), det_one_minus(&u).unwrap());
        }
        let mut state: u64 = 0x9E3779B97F4A7C15;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as i64 % 7) - 3
        };
        for n in 1..=4usize {
            for _ in 0..25 {
                let rows: Vec<Vec<i64>> =
                    (0..n).map(|_| (0..n).map(|_| next()).collect()).collect();
                let u = IntMat::from_i64_rows(&rows);
                assert_eq!(
                    alt_exterior_trace(&u).unwrap(),
                    det_one_minus(&u).unwrap(),
                    "mismatch for {u:?}"
                );
            }
        }
    }

    #[test]
    fn kernel_is_saturated() {
        // ker of the 1×2 matrix [2, −2] is spanned by (1,1), not (2,2)
        let a = IntMat::from_i64_rows(&[vec![2, -2]]);
        let snf = smith_normal_form(&a);
        let kb = snf.kernel_basis();
        assert_eq!(kb.len(), 1);
        let v = &kb[0];
        assert_eq!((&v[0] * 2 - &v[1] * 2), bi(0));
        let g = v[0].gcd(&v[1]);
        assert!(g.is_one(), "kernel generator {v:?} is not primitive");
    }

    #[test]
    fn fixed_sublattice_reflection() {
        // reflection fixing the antidiagonal: u(x,y) = (−y,−x) fixes (1,−1)
        let u = IntMat::from_i64_rows(&[vec![0, -1], vec![-1, 0]]);
        let fixed = fixed_sublattice(&u).unwrap();
        assert_eq!(fixed.len(), 1);
        let v = &fixed[0];
        assert_eq!(v[0], -v[1].clone());
        assert!(v[0].gcd(&v[1]).is_one());
        // while −1 is elliptic: no fixed vectors
        let m = IntMat::from_i64_rows(&[vec![-1, 0], vec![0, -1]]);
        assert!(fixed_sublattice(&m).unwrap().is_empty());
    }

    #[test]
    fn snf_shapes_and_rectangular() {
        let mats = [
            IntMat::from_i64_rows(&[vec![0, 0], vec![0, 0]]),
            IntMat::from_i64_rows(&[vec![6, 4, 2], vec![4, 4, 4]]),
            IntMat::from_i64_rows(&[vec![2], vec![4], vec![6]]),
            IntMat::from_i64_rows(&[vec![-7]]),
            IntMat::from_i64_rows(&[vec![2, 0], vec![0, 3]]),
        ];
        for a in &mats {
            check_snf(a);
        }
        // gcd appears first for diag(2,3)
        let snf = smith_normal_form(&mats[4]);
        assert_eq!(snf.diag(), vec![bi(1), bi(6)]);
    }

    #[test]
    fn snf_pseudorandom_sweep() {
        let mut state: u64 = 42;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as i64 % 41) - 20
        };
        for rows in 1..=5usize {
            for cols in 1..=6usize {
                for _ in 0..8 {
                    let m: Vec<Vec<i64>> =
                        (0..rows).map(|_| (0..cols).map(|_| next()).collect()).collect();
                    check_snf(&IntMat::from_i64_rows(&m));
                }
            }
        }
    }

    #[test]
    fn solve_and_reduce() {
        let a = IntMat::from_i64_rows(&[vec![2, 0], vec![0, 3]]);
        let snf = smith_normal_form(&a);
        let x = snf.solve(&[bi(4), bi(-9)]).unwrap();
        assert_eq!(a.mul_vec(&x), vec![bi(4), bi(-9)]);
        assert!(snf.solve(&[bi(1), bi(0)]).is_none());
        // canonical reps: Z²/(2Z×3Z) has 6 cosets, reduction is idempotent
        let reps = snf.coset_reps().unwrap();
        assert_eq!(reps.len(), 6);
        for r in &reps {
            assert_eq!(snf.reduce_mod_image(r), *r);
        }
        let r1 = snf.reduce_mod_image(&[bi(5), bi(-4)]);
        let diff = [&bi(5) - &r1[0], &bi(-4) - &r1[1]];
        assert!(snf.solve(&[diff[0].clone(), diff[1].clone()]).is_some());
    }

    #[test]
    fn rational_solver() {
        let a = IntMat::from_i64_rows(&[vec![2, 0], vec![0, 2]]);
        let x = solve_rational(&a, &[bi(1), bi(3)]).unwrap();
        assert_eq!(x[0], BigRational::new(bi(1), bi(2)));
        assert_eq!(x[1], BigRational::new(bi(3), bi(2)));
        // inconsistent system
        let b = IntMat::from_i64_rows(&[vec![1, 1], vec![1, 1]]);
        assert!(solve_rational(&b, &[bi(0), bi(1)]).is_none());
        // underdetermined but consistent
        let c = IntMat::from_i64_rows(&[vec![1, 1]]);
        let x = solve_rational(&c, &[bi(2)]).unwrap();
        assert_eq!(&x[0] + &x[1], BigRational::from(bi(2)));
    }

    #[test]
    fn preimage_lattice_halving() {
        // {x ∈ Z² : 2x ∈ 4Z×2Z} = 2Z × Z
        let m = IntMat::from_i64_rows(&[vec![2, 0], vec![0, 2]]);
        let l = IntMat::from_i64_rows(&[vec![4, 0], vec![0, 2]]);
        let basis = preimage_lattice(&m, &l);
        let b = IntMat::from_cols(basis);
        let snf = smith_normal_form(&b);
        // index of 2Z×Z in Z² is 2
        assert_eq!(snf.diag().iter().product::<BigInt>(), bi(2));
        for j in 0..b.cols() {
            let col = b.col(j);
            assert!(col[0].mod_floor(&bi(2)).is_zero());
        }
    }

    #[test]
    fn combinations_enumerator() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(2, 3), Vec::<Vec<usize>>::new());
        assert_eq!(combinations(5, 5).len(), 1);
    }
}
