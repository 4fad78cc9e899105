//! Root data of types `A`–`G` at a chosen isogeny.
//!
//! The ambient lattice is always the coweight lattice `P∨` of the root
//! system, with the fundamental coweights as standard basis. In these
//! coordinates everything stays integral for *every* isogeny:
//!
//! * a root `α` is stored as the integer vector of its values on the basis
//!   (equivalently, its coefficients in the simple roots);
//! * the simple coroot `αᵢ∨` is row `i` of the Cartan matrix;
//! * the coroot lattice `Λ` is spanned by the coroots, and the chosen
//!   cocharacter lattice `Λ_G` satisfies `Λ ⊆ Λ_G ⊆ P∨`: all of `P∨` for
//!   the adjoint isogeny, `Λ` itself for the simply connected one, or a
//!   validated intermediate lattice for a custom isogeny;
//! * the fundamental group is the finite quotient `Λ_G/Λ`, computed by
//!   Smith normal form of the inclusion.
//!
//! Pairings use the convention `⟨α_i, α_j∨⟩ = cartan[j][i]`, so row `j` of
//! the Cartan matrix lists the values of all simple roots on `α_j∨`.

use crate::lattice::{self, FiniteAbelianGroup, IntMat, Snf};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CartanError {
    #[error("invalid rank {rank} for type {ctype}")]
    InvalidRank { ctype: char, rank: usize },
    #[error("unknown Cartan type `{0}` (expected one of A,B,C,D,E,F,G)")]
    UnknownType(String),
    #[error("custom lattice basis must be square of size {0}, got {1} rows")]
    CustomBasisShape(usize, usize),
    #[error("custom lattice basis is singular")]
    CustomBasisSingular,
    #[error("custom lattice does not contain the coroot lattice")]
    CustomBasisTooSmall,
    #[error("custom lattice is not stable under the Weyl group")]
    CustomBasisNotStable,
    #[error("vector has wrong dimension: expected {0}, got {1}")]
    Dimension(usize, usize),
}

/// The seven simple Cartan–Killing families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CartanType {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl CartanType {
    pub fn letter(self) -> char {
        match self {
            CartanType::A => 'A',
            CartanType::B => 'B',
            CartanType::C => 'C',
            CartanType::D => 'D',
            CartanType::E => 'E',
            CartanType::F => 'F',
            CartanType::G => 'G',
        }
    }

    pub fn from_letter(s: &str) -> Result<Self, CartanError> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(CartanType::A),
            "B" => Ok(CartanType::B),
            "C" => Ok(CartanType::C),
            "D" => Ok(CartanType::D),
            "E" => Ok(CartanType::E),
            "F" => Ok(CartanType::F),
            "G" => Ok(CartanType::G),
            other => Err(CartanError::UnknownType(other.to_string())),
        }
    }
}

/// Which cocharacter lattice `Λ_G` to attach to the root system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Isogeny {
    /// `Λ_G = Λ` (coroot lattice): trivial fundamental group.
    SimplyConnected,
    /// `Λ_G = P∨` (full coweight lattice): largest fundamental group.
    Adjoint,
    /// Explicit basis (rows, ambient coordinates) with `Λ ⊆ Λ_G ⊆ P∨`.
    Custom(Vec<Vec<i64>>),
}

/// Square integer matrix acting on ambient (coweight) coordinates.
///
/// Kept in machine integers: Weyl matrices and their products have tiny
/// entries; anything where growth is possible is converted to [`IntMat`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SmallMat {
    pub n: usize,
    a: Vec<i64>,
}

impl fmt::Debug for SmallMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmallMat{:?}", self.rows())
    }
}

impl SmallMat {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![0; n * n];
        for i in 0..n {
            a[i * n + i] = 1;
        }
        SmallMat { n, a }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "must be square");
        SmallMat { n, a: rows.concat() }
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.n).map(|i| self.a[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: i64) {
        self.a[i * self.n + j] = x;
    }

    pub fn mul(&self, other: &SmallMat) -> SmallMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = SmallMat { n, a: vec![0; n * n] };
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] = out.a[i * n + j]
                        .checked_add(aik.checked_mul(other.get(k, j)).expect("overflow"))
                        .expect("overflow");
                }
            }
        }
        out
    }

    /// Column action `M · v`.
    pub fn act_vec(&self, v: &[i64]) -> Vec<i64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Row action `f · M` (how linear functionals transform).
    pub fn row_mul(&self, f: &[i64]) -> Vec<i64> {
        assert_eq!(f.len(), self.n);
        (0..self.n)
            .map(|j| (0..self.n).map(|i| f[i] * self.get(i, j)).sum())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == SmallMat::identity(self.n)
    }

    pub fn to_int_mat(&self) -> IntMat {
        IntMat::from_i64_rows(&self.rows())
    }

    pub fn from_int_mat(m: &IntMat) -> SmallMat {
        let n = m.rows();
        assert_eq!(n, m.cols());
        let mut a = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = i64::try_from(&m[(i, j)]).expect("entry exceeds i64");
            }
        }
        SmallMat { n, a }
    }

    /// Exact inverse for `|det| = 1` matrices.
    pub fn inverse_unimodular(&self) -> SmallMat {
        SmallMat::from_int_mat(&self.to_int_mat().inverse_unimodular().expect("square"))
    }
}

/// `⟨α, x⟩` for a root in functional coordinates and `x` ambient.
pub fn pairing(root: &[i64], x: &[i64]) -> i64 {
    root.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
}

/// One Weyl group element: ambient matrix, exact inverse, and a shortest
/// word in the simple reflections (deterministic: breadth-first with
/// generators tried in index order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylElt {
    pub mat: SmallMat,
    pub inv: SmallMat,
    pub word: Vec<usize>,
}

/// A root datum: root system of the given type and rank plus a cocharacter
/// lattice choice.
#[derive(Clone)]
pub struct RootDatum {
    pub ctype: CartanType,
    pub rank: usize,
    pub isogeny: Isogeny,
    /// `cartan[j][i] = ⟨α_i, α_j∨⟩`.
    pub cartan: Vec<Vec<i64>>,
    /// All roots in functional coordinates: positives (by height, then
    /// lexicographic), then their negatives in the same order.
    pub roots: Vec<Vec<i64>>,
    /// Coroots in ambient coordinates, parallel to `roots`.
    pub coroots: Vec<Vec<i64>>,
    /// Index of the highest root inside `roots`.
    pub highest_root: usize,
    /// Simple reflection matrices `s_1 … s_r` on the ambient lattice.
    pub simple_reflections: Vec<SmallMat>,
    /// Columns = coroot lattice basis (= transposed Cartan matrix).
    lambda_snf: Snf,
    /// Columns = `Λ_G` basis in ambient coordinates.
    pub lambda_g_cols: IntMat,
    lambda_g_snf: Snf,
    /// Inclusion `Λ ↪ Λ_G` written in the `Λ_G` basis.
    inclusion_snf: Snf,
}

impl fmt::Debug for RootDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RootDatum({}{}, {} roots, isogeny {:?})",
            self.ctype.letter(),
            self.rank,
            self.roots.len(),
            self.isogeny
        )
    }
}

fn cartan_matrix(ctype: CartanType, rank: usize) -> Result<Vec<Vec<i64>>, CartanError> {
    let bad = || CartanError::InvalidRank { ctype: ctype.letter(), rank };
    let n = rank;
    let chain = |bonds: &[(usize, usize, i64, i64)]| {
        let mut m = vec![vec![0i64; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 2;
        }
        for &(i, j, down, up) in bonds {
            m[i][j] = down;
            m[j][i] = up;
        }
        m
    };
    match ctype {
        CartanType::A => {
            if n < 1 {
                return Err(bad());
            }
            let bonds: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1, -1, -1)).collect();
            Ok(chain(&bonds))
        }
        CartanType::B => {
            // α_{n−1} is the short root
            if n < 2 {
                return Err(bad());
            }
            let mut bonds: Vec<_> = (0..n - 2).map(|i| (i, i + 1, -1, -1)).collect();
            bonds.push((n - 2, n - 1, -1, -2));
            Ok(chain(&bonds))
        }
        CartanType::C => {
            // α_{n−1} is the long root
            if n < 2 {
                return Err(bad());
            }
            let mut bonds: Vec<_> = (0..n - 2).map(|i| (i, i + 1, -1, -1)).collect();
            bonds.push((n - 2, n - 1, -2, -1));
            Ok(chain(&bonds))
        }
        CartanType::D => {
            if n < 3 {
                return Err(bad());
            }
            let mut bonds: Vec<_> = (0..n - 2).map(|i| (i, i + 1, -1, -1)).collect();
            bonds.push((n - 3, n - 1, -1, -1));
            Ok(chain(&bonds))
        }
        CartanType::E => {
            if !(6..=8).contains(&n) {
                return Err(bad());
            }
            // Bourbaki: chain 1−3−4−5−6(−7)(−8), node 2 hangs off node 4
            let mut bonds = vec![(0, 2, -1, -1), (1, 3, -1, -1)];
            for i in 2..n - 1 {
                bonds.push((i, i + 1, -1, -1));
            }
            Ok(chain(&bonds))
        }
        CartanType::F => {
            if n != 4 {
                return Err(bad());
            }
            Ok(chain(&[(0, 1, -1, -1), (1, 2, -1, -2), (2, 3, -1, -1)]))
        }
        CartanType::G => {
            if n != 2 {
                return Err(bad());
            }
            // α_0 short, α_1 long
            Ok(chain(&[(0, 1, -3, -1)]))
        }
    }
}

/// Enumerate the full root system (with coroots) by reflection closure of
/// the simple roots.
fn root_closure(cartan: &[Vec<i64>]) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let n = cartan.len();
    let mut seen: HashMap<Vec<i64>, Vec<i64>> = HashMap::new();
    let mut queue: Vec<(Vec<i64>, Vec<i64>)> = Vec::new();
    for i in 0..n {
        let mut root = vec![0i64; n];
        root[i] = 1;
        let coroot = cartan[i].clone();
        seen.insert(root.clone(), coroot.clone());
        queue.push((root, coroot));
    }
    while let Some((root, coroot)) = queue.pop() {
        for j in 0..n {
            // s_j(α) = α − ⟨α, α_j∨⟩ α_j ;  s_j(α∨) = α∨ − ⟨α_j, α∨⟩ α_j∨
            let pair_with_cj: i64 = root.iter().zip(&cartan[j]).map(|(a, b)| a * b).sum();
            let mut new_root = root.clone();
            new_root[j] -= pair_with_cj;
            let pair_aj: i64 = coroot[j];
            let new_coroot: Vec<i64> = coroot
                .iter()
                .zip(&cartan[j])
                .map(|(c, cj)| c - pair_aj * cj)
                .collect();
            if !seen.contains_key(&new_root) {
                seen.insert(new_root.clone(), new_coroot.clone());
                queue.push((new_root, new_coroot));
            }
        }
    }
    // canonical order: positives sorted by (height, coords), then negatives
    let mut positives: Vec<Vec<i64>> = seen
        .keys()
        .filter(|r| r.iter().find(|&&c| c != 0).map(|&c| c > 0).unwrap_or(false))
        .cloned()
        .collect();
    positives.sort_by_key(|r| (r.iter().sum::<i64>(), r.clone()));
    let mut roots = positives.clone();
    roots.extend(positives.iter().map(|r| r.iter().map(|c| -c).collect::<Vec<i64>>()));
    let coroots = roots.iter().map(|r| seen[r].clone()).collect();
    (roots, coroots)
}

/// Construct a root datum.
pub fn build_root_datum(
    ctype: CartanType,
    rank: usize,
    isogeny: Isogeny,
) -> Result<RootDatum, CartanError> {
    let cartan = cartan_matrix(ctype, rank)?;
    let (roots, coroots) = root_closure(&cartan);
    let num_positive = roots.len() / 2;
    // highest root: the (unique) positive root of maximal height
    let highest_root = (0..num_positive)
        .max_by_key(|&i| roots[i].iter().sum::<i64>())
        .expect("nonempty root system");

    let simple_reflections: Vec<SmallMat> = (0..rank)
        .map(|i| {
            let mut m = SmallMat::identity(rank);
            // s_i(e_j) = e_j − δ_{ij} α_i∨
            for k in 0..rank {
                m.set(k, i, m.get(k, i) - cartan[i][k]);
            }
            m
        })
        .collect();

    // Λ basis: columns = coroots of the simple roots
    let lambda_cols = IntMat::from_i64_rows(&cartan).transpose();
    let lambda_snf = lattice::smith_normal_form(&lambda_cols);

    let lambda_g_rows: Vec<Vec<i64>> = match &isogeny {
        Isogeny::SimplyConnected => cartan.clone(),
        Isogeny::Adjoint => SmallMat::identity(rank).rows(),
        Isogeny::Custom(rows) => {
            if rows.len() != rank || rows.iter().any(|r| r.len() != rank) {
                return Err(CartanError::CustomBasisShape(rank, rows.len()));
            }
            rows.clone()
        }
    };
    let lambda_g_cols = IntMat::from_i64_rows(&lambda_g_rows).transpose();
    let lambda_g_snf = lattice::smith_normal_form(&lambda_g_cols);
    if lambda_g_snf.rank() < rank {
        return Err(CartanError::CustomBasisSingular);
    }

    // inclusion Λ ⊆ Λ_G, written in the Λ_G basis
    let mut inclusion_cols = Vec::with_capacity(rank);
    for i in 0..rank {
        let coroot: Vec<BigInt> = cartan[i].iter().map(|&x| BigInt::from(x)).collect();
        match lambda_g_snf.solve(&coroot) {
            Some(col) => inclusion_cols.push(col),
            None => return Err(CartanError::CustomBasisTooSmall),
        }
    }
    let inclusion_snf = lattice::smith_normal_form(&IntMat::from_cols(inclusion_cols));

    let datum = RootDatum {
        ctype,
        rank,
        isogeny,
        cartan,
        roots,
        coroots,
        highest_root,
        simple_reflections,
        lambda_snf,
        lambda_g_cols,
        lambda_g_snf,
        inclusion_snf,
    };

    // W-stability of Λ_G (automatic for lattices between Λ and P∨; checked
    // anyway so a bad custom basis cannot slip through)
    for s in &datum.simple_reflections {
        for j in 0..rank {
            let col = datum.lambda_g_cols.col(j);
            let v: Vec<i64> =
                col.iter().map(|x| i64::try_from(x).expect("basis entry")).collect();
            if !datum.in_lambda_g(&s.act_vec(&v)) {
                return Err(CartanError::CustomBasisNotStable);
            }
        }
    }
    Ok(datum)
}

impl RootDatum {
    pub fn num_positive(&self) -> usize {
        self.roots.len() / 2
    }

    pub fn positive_roots(&self) -> &[Vec<i64>] {
        &self.roots[..self.num_positive()]
    }

    /// Is the root (given in functional coordinates) positive?
    pub fn is_positive_root(&self, root: &[i64]) -> bool {
        root.iter().find(|&&c| c != 0).map(|&c| c > 0).unwrap_or(false)
    }

    pub fn root_index(&self, root: &[i64]) -> Option<usize> {
        self.roots.iter().position(|r| r == root)
    }

    /// Coroot of an arbitrary root in the system.
    pub fn coroot_of(&self, root: &[i64]) -> Option<&Vec<i64>> {
        self.root_index(root).map(|i| &self.coroots[i])
    }

    /// Reflection about an arbitrary root.
    pub fn reflection(&self, root: &[i64]) -> SmallMat {
        let coroot = self.coroot_of(root).expect("not a root").clone();
        let mut m = SmallMat::identity(self.rank);
        // s_α(e_j) = e_j − ⟨α, e_j⟩ α∨ = e_j − root[j]·α∨
        for j in 0..self.rank {
            for k in 0..self.rank {
                m.set(k, j, m.get(k, j) - root[j] * coroot[k]);
            }
        }
        m
    }

    pub fn in_lambda(&self, v: &[i64]) -> bool {
        let b: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        self.lambda_snf.solve(&b).is_some()
    }

    pub fn in_lambda_g(&self, v: &[i64]) -> bool {
        let b: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        self.lambda_g_snf.solve(&b).is_some()
    }

    /// Columns = simple coroots: a basis of the coroot lattice `Λ`.
    pub fn lambda_basis(&self) -> IntMat {
        IntMat::from_i64_rows(&self.cartan).transpose()
    }

    /// Coordinates of an ambient vector in the coroot-lattice basis,
    /// `None` if it is not in `Λ`.
    pub fn lambda_coords(&self, v: &[i64]) -> Option<Vec<BigInt>> {
        let b: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        self.lambda_snf.solve(&b)
    }

    /// Coordinates of an ambient vector in the `Λ_G` basis, `None` if it
    /// is not in `Λ_G`.
    pub fn lambda_g_coords(&self, v: &[i64]) -> Option<Vec<BigInt>> {
        let b: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        self.lambda_g_snf.solve(&b)
    }

    /// The fundamental group `Λ_G/Λ`.
    pub fn fundamental_group(&self) -> FiniteAbelianGroup {
        self.inclusion_snf.cokernel()
    }

    /// Coset representatives of `Λ_G/Λ` in ambient coordinates,
    /// deterministic order, identity coset first.
    pub fn fundamental_group_reps(&self) -> Vec<Vec<i64>> {
        let reps = self.inclusion_snf.coset_reps().expect("Λ_G/Λ is finite");
        reps.iter()
            .map(|r| {
                let amb = self.lambda_g_cols.mul_vec(r);
                amb.iter().map(|x| i64::try_from(x).expect("rep fits i64")).collect()
            })
            .collect()
    }

    /// Canonical representative of `v + Λ` (SNF box reduction), ambient coords.
    pub fn reduce_mod_lambda(&self, v: &[i64]) -> Vec<i64> {
        let b: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        let r = self.lambda_snf.reduce_mod_image(&b);
        r.iter().map(|x| i64::try_from(x).expect("rep fits i64")).collect()
    }

    /// Enumerate the full Weyl group by breadth-first closure.
    pub fn weyl_group(&self) -> Vec<WeylElt> {
        let id = SmallMat::identity(self.rank);
        let mut seen: HashMap<SmallMat, Vec<usize>> = HashMap::new();
        seen.insert(id.clone(), vec![]);
        let mut frontier = vec![id];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for w in &frontier {
                for (i, s) in self.simple_reflections.iter().enumerate() {
                    // right-multiply: w·s_i (word grows on the right)
                    let m = w.mul(s);
                    if !seen.contains_key(&m) {
                        let mut word = seen[w].clone();
                        word.push(i);
                        seen.insert(m.clone(), word);
                        next.push(m);
                    }
                }
            }
            frontier = next;
        }
        let mut elts: Vec<WeylElt> = seen
            .into_iter()
            .map(|(mat, word)| {
                let inv = mat.inverse_unimodular();
                WeylElt { mat, inv, word }
            })
            .collect();
        elts.sort_by(|a, b| (a.word.len(), &a.word).cmp(&(b.word.len(), &b.word)));
        elts
    }

    /// Matrix of a word in the simple reflections.
    pub fn word_matrix(&self, word: &[usize]) -> SmallMat {
        let mut m = SmallMat::identity(self.rank);
        for &i in word {
            m = m.mul(&self.simple_reflections[i]);
        }
        m
    }

    /// Image of a root (functional coords) under a Weyl-group matrix:
    /// `(w·α)(x) = α(w⁻¹x)`.
    pub fn act_on_root(&self, w_inv: &SmallMat, root: &[i64]) -> Vec<i64> {
        w_inv.row_mul(root)
    }

    /// Length of a finite Weyl element = number of positive roots it makes
    /// negative.
    pub fn finite_length(&self, w: &SmallMat) -> usize {
        let w_inv = w.inverse_unimodular();
        self.positive_roots()
            .iter()
            .filter(|r| !self.is_positive_root(&self.act_on_root(&w_inv, r)))
            .count()
    }

    /// Canonical (shortest, smallest-index-first) word for a Weyl matrix:
    /// repeatedly strip the smallest left descent.
    pub fn canonical_word(&self, w: &SmallMat) -> Vec<usize> {
        let mut word = Vec::new();
        let mut cur = w.clone();
        loop {
            if cur.is_identity() {
                return word;
            }
            let mut stripped = false;
            for i in 0..self.rank {
                let mut alpha = vec![0i64; self.rank];
                alpha[i] = 1;
                // s_i·cur < cur ⟺ cur⁻¹(α_i) < 0; act_on_root(&m, α) = m⁻¹·α
                if !self.is_positive_root(&self.act_on_root(&cur, &alpha)) {
                    word.push(i);
                    cur = self.simple_reflections[i].mul(&cur);
                    stripped = true;
                    break;
                }
            }
            assert!(stripped, "matrix is not in the Weyl group");
        }
    }
}

/// JSON-friendly description of a root datum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootDatumConfig {
    #[serde(rename = "type")]
    pub ctype: String,
    pub rank: usize,
    pub isogeny: IsogenyConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IsogenyConfig {
    Named(String),
    Custom { custom: Vec<Vec<i64>> },
}

impl RootDatumConfig {
    pub fn build(&self) -> Result<RootDatum, CartanError> {
        let ctype = CartanType::from_letter(&self.ctype)?;
        let isogeny = match &self.isogeny {
            IsogenyConfig::Named(s) => match s.trim().to_ascii_lowercase().as_str() {
                "sc" | "simply_connected" | "simply-connected" => Isogeny::SimplyConnected,
                "ad" | "adj" | "adjoint" => Isogeny::Adjoint,
                other => return Err(CartanError::UnknownType(format!("isogeny `{other}`"))),
            },
            IsogenyConfig::Custom { custom } => Isogeny::Custom(custom.clone()),
        };
        build_root_datum(ctype, self.rank, isogeny)
    }
}
