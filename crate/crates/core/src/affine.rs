//! The extended affine Weyl group `W̃_G = Λ_G ⋊ W` of a root datum.
//!
//! Elements are pairs `t_λ·w̄` with `λ ∈ Λ_G` (ambient coordinates) and `w̄`
//! a finite Weyl matrix, multiplying by `(λ₁,w̄₁)(λ₂,w̄₂) = (λ₁+w̄₁λ₂, w̄₁w̄₂)`.
//! Affine roots are pairs `a = (ᾱ, r)`; `a` is positive iff `r > 0`, or
//! `r = 0` and `ᾱ > 0`. The action is
//!
//! ```text
//! (t_λ w̄)(ᾱ, r) = (w̄ᾱ, r − ⟨w̄ᾱ, λ⟩),
//! ```
//!
//! the unique orientation for which the simple affine reflection
//! `s_0 = t_{θ∨} s_θ` has length 1 and `l(t_λ) = Σ_{α>0} |⟨α,λ⟩|`.
//!
//! Length is *defined* as the number of positive affine roots made negative
//! (computed in closed form per finite root; a literal window scan is kept
//! as an oracle in the tests), and agrees with reduced-word length. The
//! length-zero elements form the subgroup `Ω_G ≅ Λ_G/Λ`; every element
//! factors uniquely as (word in the simple affine reflections)·ω.
//!
//! On top of the group sit the order-theoretic operations: Bruhat
//! comparison by the descent-lifting recursion, Demazure products
//! (`u*s = max(u, us)` folded along a reduced word), longest elements of
//! finite standard parabolics, pairing counts against a fixed finite root
//! with their regularity predicates, minimal coset representatives, the
//! additivity-witness search for length-additive translations, the
//! finite-generation witness for length filtrations of sublattices, and
//! Hilbert bases of pointed rational cones.

use crate::cartan::{pairing, RootDatum, SmallMat};
use crate::lattice::{self, IntMat};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AffineError {
    #[error("translation part {0:?} is not in the chosen cocharacter lattice")]
    NotInLatticeGroup(Vec<i64>),
    #[error("vector {0:?} is not in the coroot lattice")]
    NotInCorootLattice(Vec<i64>),
    #[error("{0:?} is not a root of the system")]
    NotARoot(Vec<i64>),
    #[error("affine root {0:?} level {1} is not positive")]
    NotPositive(Vec<i64>, i64),
    #[error("reflection subgroup exceeded the enumeration cap of {0} elements")]
    NotFinite(usize),
    #[error("generators are not sign-coherent against root {0:?}")]
    WitnessPrecondition(Vec<i64>),
    #[error("no additivity witness within depth {depth}; last candidate {candidate:?} fails at lambda {lambda:?}, w'' of length {wlen}")]
    WitnessNotFound { depth: usize, candidate: Vec<i64>, lambda: Vec<i64>, wlen: usize },
    #[error("no finite-generation witness up to n_max = {0}")]
    FiltrationTooShallow(usize),
    #[error("sublattice basis vectors are linearly dependent")]
    DependentBasis,
    #[error("cone is not pointed: it contains the line through {0:?}")]
    NotPointed(Vec<i64>),
    #[error("cannot parse element `{0}`: {1}")]
    Parse(String, String),
}

/// An affine root `(ᾱ, r)`: the finite root in functional coordinates plus
/// an integer level.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AffineRoot {
    pub root: Vec<i64>,
    pub level: i64,
}

impl AffineRoot {
    pub fn new(root: Vec<i64>, level: i64) -> Self {
        AffineRoot { root, level }
    }

    pub fn negated(&self) -> AffineRoot {
        AffineRoot {
            root: self.root.iter().map(|c| -c).collect(),
            level: -self.level,
        }
    }
}

/// An element `t_λ · w̄` of the extended affine Weyl group.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffElt {
    /// Translation part, ambient coordinates.
    pub t: Vec<i64>,
    /// Finite Weyl part.
    pub w: SmallMat,
    /// Cached exact inverse of `w`.
    w_inv: SmallMat,
}

impl AffElt {
    pub fn new(t: Vec<i64>, w: SmallMat) -> Self {
        let w_inv = w.inverse_unimodular();
        AffElt { t, w, w_inv }
    }

    pub fn identity(rank: usize) -> Self {
        AffElt::new(vec![0; rank], SmallMat::identity(rank))
    }

    pub fn from_translation(t: Vec<i64>) -> Self {
        let n = t.len();
        AffElt::new(t, SmallMat::identity(n))
    }

    pub fn from_finite(w: SmallMat) -> Self {
        let n = w.n;
        AffElt::new(vec![0; n], w)
    }

    pub fn w_inv(&self) -> &SmallMat {
        &self.w_inv
    }

    pub fn rank(&self) -> usize {
        self.t.len()
    }

    pub fn is_identity(&self) -> bool {
        self.t.iter().all(|&c| c == 0) && self.w.is_identity()
    }

    pub fn is_translation(&self) -> bool {
        self.w.is_identity()
    }

    /// `(λ₁,w̄₁)(λ₂,w̄₂) = (λ₁ + w̄₁λ₂, w̄₁w̄₂)`.
    pub fn mul(&self, other: &AffElt) -> AffElt {
        let moved = self.w.act_vec(&other.t);
        let t: Vec<i64> = self.t.iter().zip(&moved).map(|(a, b)| a + b).collect();
        AffElt {
            t,
            w: self.w.mul(&other.w),
            w_inv: other.w_inv.mul(&self.w_inv),
        }
    }

    pub fn inverse(&self) -> AffElt {
        let t: Vec<i64> = self.w_inv.act_vec(&self.t).iter().map(|c| -c).collect();
        AffElt { t, w: self.w_inv.clone(), w_inv: self.w.clone() }
    }

    /// Action on an affine root: `(t_λ w̄)(ᾱ, r) = (w̄ᾱ, r − ⟨w̄ᾱ, λ⟩)`.
    pub fn act(&self, a: &AffineRoot) -> AffineRoot {
        let beta = self.w_inv.row_mul(&a.root);
        let level = a.level - pairing(&beta, &self.t);
        AffineRoot { root: beta, level }
    }
}

/// Is the affine root positive (`r > 0`, or `r = 0` and `ᾱ > 0`)?
pub fn is_affine_positive(datum: &RootDatum, a: &AffineRoot) -> bool {
    a.level > 0 || (a.level == 0 && datum.is_positive_root(&a.root))
}

fn lo(datum: &RootDatum, root: &[i64]) -> i64 {
    if datum.is_positive_root(root) {
        0
    } else {
        1
    }
}

/// Length = number of positive affine roots sent negative, summed in closed
/// form over the finite roots: the levels over `α` contributing an inversion
/// form the interval `lo(α) ≤ r < ⟨w̄α, λ⟩ + lo(w̄α)`.
pub fn length(datum: &RootDatum, e: &AffElt) -> usize {
    let mut total: i64 = 0;
    for alpha in &datum.roots {
        let beta = e.w_inv.row_mul(alpha);
        let c = pairing(&beta, &e.t) + lo(datum, &beta) - lo(datum, alpha);
        if c > 0 {
            total += c;
        }
    }
    usize::try_from(total).expect("length is nonnegative")
}

/// Brute-force inversion count: enumerate every affine root whose
/// positivity `e` could change (levels within the pairing bound) and test
/// each sign flip through [`AffElt::act`]. Independent of the closed-form
/// interval used by [`length`], with which it always agrees.
pub fn inversion_count(datum: &RootDatum, e: &AffElt) -> usize {
    let mut count = 0;
    for beta in &datum.roots {
        let r0 = if datum.is_positive_root(beta) { 0 } else { 1 };
        // the image of (β, r) has level r − c for a constant c, so no
        // positivity flips happen past |c| + 1
        let c = -e.act(&AffineRoot::new(beta.clone(), 0)).level;
        for r in r0..=(c.abs() + 1).max(r0) {
            let a = AffineRoot::new(beta.clone(), r);
            debug_assert!(is_affine_positive(datum, &a));
            if !is_affine_positive(datum, &e.act(&a)) {
                count += 1;
            }
        }
    }
    count
}

/// The simple affine reflections `s_0 = t_{θ∨} s_θ, s_1, …, s_r`.
pub fn simple_affine_reflections(datum: &RootDatum) -> Vec<AffElt> {
    let mut out = Vec::with_capacity(datum.rank + 1);
    let theta = datum.roots[datum.highest_root].clone();
    let theta_cov = datum.coroots[datum.highest_root].clone();
    out.push(AffElt::new(theta_cov, datum.reflection(&theta)));
    for s in &datum.simple_reflections {
        out.push(AffElt::from_finite(s.clone()));
    }
    out
}

/// The affine root attached to the i-th simple affine reflection:
/// `a_0 = (−θ, 1)`, `a_i = (α_i, 0)`.
pub fn simple_affine_root(datum: &RootDatum, i: usize) -> AffineRoot {
    if i == 0 {
        let theta = &datum.roots[datum.highest_root];
        AffineRoot::new(theta.iter().map(|c| -c).collect(), 1)
    } else {
        let mut root = vec![0i64; datum.rank];
        root[i - 1] = 1;
        AffineRoot::new(root, 0)
    }
}

/// The reflection about an arbitrary affine root: `s_{(α,r)} = t_{−r·α∨} s_α`.
pub fn affine_reflection(datum: &RootDatum, a: &AffineRoot) -> Result<AffElt, AffineError> {
    let coroot = datum
        .coroot_of(&a.root)
        .ok_or_else(|| AffineError::NotARoot(a.root.clone()))?;
    let t: Vec<i64> = coroot.iter().map(|c| -a.level * c).collect();
    Ok(AffElt::new(t, datum.reflection(&a.root)))
}

/// Smallest right descent: least `i` with `l(w·sᵢ) < l(w)`, i.e. `w(aᵢ) < 0`.
pub fn smallest_right_descent(datum: &RootDatum, e: &AffElt) -> Option<usize> {
    (0..=datum.rank).find(|&i| !is_affine_positive(datum, &e.act(&simple_affine_root(datum, i))))
}

/// Smallest left descent: least `i` with `l(sᵢ·w) < l(w)`, i.e. `w⁻¹(aᵢ) < 0`.
pub fn smallest_left_descent(datum: &RootDatum, e: &AffElt) -> Option<usize> {
    let inv = e.inverse();
    (0..=datum.rank).find(|&i| !is_affine_positive(datum, &inv.act(&simple_affine_root(datum, i))))
}

/// The length-zero subgroup `Ω_G ≅ Λ_G/Λ`, identity first, then in the
/// deterministic order of the fundamental-group representatives.
pub fn omega_elements(datum: &RootDatum) -> Vec<AffElt> {
    let refl = simple_affine_reflections(datum);
    datum
        .fundamental_group_reps()
        .into_iter()
        .map(|mu| {
            // greedy right-descent reduction of t_μ inside its W̃-coset
            let mut x = AffElt::from_translation(mu);
            while let Some(i) = smallest_right_descent(datum, &x) {
                x = x.mul(&refl[i]);
            }
            debug_assert_eq!(length(datum, &x), 0);
            x
        })
        .collect()
}

/// Factor `w` as `(s_{i₁} ⋯ s_{i_k}) · ω` with the word reduced and
/// `l(ω) = 0`: repeatedly strip the smallest-index left descent.
pub fn reduced_word(datum: &RootDatum, e: &AffElt) -> (Vec<usize>, AffElt) {
    let refl = simple_affine_reflections(datum);
    let mut word = Vec::new();
    let mut cur = e.clone();
    while let Some(i) = smallest_left_descent(datum, &cur) {
        word.push(i);
        cur = refl[i].mul(&cur);
    }
    (word, cur)
}

/// Multiply out a word in the simple affine reflections.
pub fn word_product(datum: &RootDatum, word: &[usize]) -> AffElt {
    let refl = simple_affine_reflections(datum);
    let mut e = AffElt::identity(datum.rank);
    for &i in word {
        e = e.mul(&refl[i]);
    }
    e
}

/// Bruhat order on the extended group: components under `Ω_G` must agree,
/// and the reduced parts compare by the descent-lifting recursion (the
/// standard implementation of the subword criterion).
pub fn bruhat_leq(datum: &RootDatum, u: &AffElt, v: &AffElt) -> bool {
    let (_, omega_u) = reduced_word(datum, u);
    let (_, omega_v) = reduced_word(datum, v);
    if omega_u != omega_v {
        return false;
    }
    let omega_inv = omega_u.inverse();
    let mut u = u.mul(&omega_inv);
    let mut v = v.mul(&omega_inv);
    let refl = simple_affine_reflections(datum);
    let mut lu = length(datum, &u);
    let mut lv = length(datum, &v);
    loop {
        if lu > lv {
            return false;
        }
        if lv == 0 {
            return lu == 0;
        }
        let s = smallest_right_descent(datum, &v).expect("positive length has a descent");
        v = v.mul(&refl[s]);
        lv -= 1;
        let us = u.mul(&refl[s]);
        let lus = length(datum, &us);
        if lus < lu {
            u = us;
            lu = lus;
        }
    }
}

/// Demazure (join) product: the unique `u*v` with
/// `W̃^{≤u}·W̃^{≤v} = W̃^{≤u*v}`. Computed by folding `x*s = max(x, xs)`
/// along a reduced word of `v`, then multiplying the length-zero part.
pub fn demazure(datum: &RootDatum, u: &AffElt, v: &AffElt) -> AffElt {
    let refl = simple_affine_reflections(datum);
    let (word, omega) = reduced_word(datum, v);
    let mut x = u.clone();
    let mut lx = length(datum, &x);
    for &i in &word {
        let xs = x.mul(&refl[i]);
        let lxs = length(datum, &xs);
        if lxs > lx {
            x = xs;
            lx = lxs;
        }
    }
    x.mul(&omega)
}

/// Enumerate the (finite) reflection subgroup generated by `{sⱼ : j ∈ J}`,
/// `J ⊆ {0, …, r}`. Errors once `cap` elements are exceeded.
pub fn parabolic_subgroup(
    datum: &RootDatum,
    j_set: &[usize],
    cap: usize,
) -> Result<Vec<AffElt>, AffineError> {
    let refl = simple_affine_reflections(datum);
    let mut seen = HashSet::new();
    let id = AffElt::identity(datum.rank);
    seen.insert(id.clone());
    let mut out = vec![id];
    let mut frontier = vec![out[0].clone()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for x in &frontier {
            for &j in j_set {
                let y = x.mul(&refl[j]);
                if seen.insert(y.clone()) {
                    if seen.len() > cap {
                        return Err(AffineError::NotFinite(cap));
                    }
                    next.push(y.clone());
                    out.push(y);
                }
            }
        }
        frontier = next;
    }
    Ok(out)
}

/// Default enumeration cap for parahoric/parabolic subgroups.
pub const PARABOLIC_CAP: usize = 1_000_000;

/// The longest element `w_J` of the finite standard parabolic `W_J`.
pub fn longest_element(datum: &RootDatum, j_set: &[usize]) -> Result<AffElt, AffineError> {
    let group = parabolic_subgroup(datum, j_set, PARABOLIC_CAP)?;
    Ok(group
        .into_iter()
        .map(|e| (length(datum, &e), e))
        .max_by(|a, b| a.0.cmp(&b.0).then_with(|| sort_key_raw(&a.1).cmp(&sort_key_raw(&b.1))))
        .expect("nonempty group")
        .1)
}

fn sort_key_raw(e: &AffElt) -> (Vec<i64>, Vec<Vec<i64>>) {
    (e.t.clone(), e.w.rows())
}

/// `w` is right-`J`-longest iff `w * w_J = w`.
pub fn is_right_j_longest(
    datum: &RootDatum,
    e: &AffElt,
    j_set: &[usize],
) -> Result<bool, AffineError> {
    let wj = longest_element(datum, j_set)?;
    Ok(demazure(datum, e, &wj) == *e)
}

/// `w` is left-`J`-longest iff `w_J * w = w`.
pub fn is_left_j_longest(
    datum: &RootDatum,
    e: &AffElt,
    j_set: &[usize],
) -> Result<bool, AffineError> {
    let wj = longest_element(datum, j_set)?;
    Ok(demazure(datum, &wj, e) == *e)
}

/// Number of affine roots lying over the fixed finite root `ᾱ` whose sign
/// is flipped by `w⁻¹`: counts `a = (ᾱ, r)` with
/// `(a > 0 ∧ w⁻¹a < 0) ∨ (a < 0 ∧ w⁻¹a > 0)`.
///
/// Scans the level window `|r| ≤ |⟨ᾱ, λ⟩| + 1`, which provably contains all
/// sign flips (outside it, level and image level share their sign).
pub fn pairing_count(datum: &RootDatum, alpha: &[i64], e: &AffElt) -> Result<usize, AffineError> {
    if datum.root_index(alpha).is_none() {
        return Err(AffineError::NotARoot(alpha.to_vec()));
    }
    let inv = e.inverse();
    let c = pairing(alpha, &e.t).abs();
    let mut count = 0;
    for r in -(c + 1)..=(c + 1) {
        let a = AffineRoot::new(alpha.to_vec(), r);
        let image = inv.act(&a);
        let pos = is_affine_positive(datum, &a);
        let image_pos = is_affine_positive(datum, &image);
        if pos != image_pos {
            count += 1;
        }
    }
    Ok(count)
}

/// `w` is `m`-regular when every finite root has pairing count ≥ `m`.
pub fn is_m_regular(datum: &RootDatum, e: &AffElt, m: usize) -> Result<bool, AffineError> {
    for alpha in &datum.roots {
        if pairing_count(datum, alpha, e)? < m {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The largest `m` such that `w` is `m`-regular.
pub fn regularity(datum: &RootDatum, e: &AffElt) -> Result<usize, AffineError> {
    let mut m = usize::MAX;
    for alpha in &datum.roots {
        m = m.min(pairing_count(datum, alpha, e)?);
    }
    Ok(m)
}

/// All extended-affine elements of length ≤ `bound`, grouped layer by layer:
/// `ω·(BFS sphere of W̃)` for every length-zero `ω`. Deterministic order:
/// by length, then translation, then finite part.
pub fn elements_up_to_length(datum: &RootDatum, bound: usize) -> Vec<AffElt> {
    let refl = simple_affine_reflections(datum);
    let mut seen: HashSet<AffElt> = HashSet::new();
    let id = AffElt::identity(datum.rank);
    seen.insert(id.clone());
    let mut layer = vec![id];
    let mut all = vec![layer.clone()];
    for n in 0..bound {
        let mut next = Vec::new();
        for x in &layer {
            for s in &refl {
                let y = x.mul(s);
                if length(datum, &y) == n + 1 && seen.insert(y.clone()) {
                    next.push(y);
                }
            }
        }
        all.push(next.clone());
        layer = next;
    }
    let omegas = omega_elements(datum);
    let mut out = Vec::new();
    for (n, layer) in all.iter().enumerate() {
        let mut with_omega: Vec<AffElt> = Vec::new();
        for omega in &omegas {
            for x in layer {
                let y = omega.mul(x);
                debug_assert_eq!(length(datum, &y), n);
                with_omega.push(y);
            }
        }
        with_omega.sort_by_key(sort_key_raw);
        with_omega.dedup();
        out.extend(with_omega);
    }
    out
}

/// Minimal coset representatives: elements of length ≤ `bound` sending every
/// root of `delta_s` to a positive affine root.
pub fn min_coset_reps(
    datum: &RootDatum,
    delta_s: &[AffineRoot],
    bound: usize,
) -> Result<Vec<AffElt>, AffineError> {
    for a in delta_s {
        if datum.root_index(&a.root).is_none() {
            return Err(AffineError::NotARoot(a.root.clone()));
        }
        if !is_affine_positive(datum, a) {
            return Err(AffineError::NotPositive(a.root.clone(), a.level));
        }
    }
    Ok(elements_up_to_length(datum, bound)
        .into_iter()
        .filter(|e| delta_s.iter().all(|a| is_affine_positive(datum, &e.act(a))))
        .collect())
}

/// Closure of `delta` under the reflections about its own members (the
/// affine sub-root-system it generates). Errors if the closure exceeds the
/// cap — the given roots then do not span a finite system.
pub fn affine_subsystem(
    datum: &RootDatum,
    delta: &[AffineRoot],
) -> Result<Vec<AffineRoot>, AffineError> {
    let cap = 20 * datum.roots.len() + 100;
    let mut seen: HashSet<AffineRoot> = HashSet::new();
    let mut queue: Vec<AffineRoot> = Vec::new();
    for a in delta {
        for b in [a.clone(), a.negated()] {
            if seen.insert(b.clone()) {
                queue.push(b);
            }
        }
    }
    while let Some(a) = queue.pop() {
        let refl = affine_reflection(datum, &a)?;
        let current: Vec<AffineRoot> = seen.iter().cloned().collect();
        for b in current {
            let c = refl.act(&b);
            if seen.insert(c.clone()) {
                if seen.len() > cap {
                    return Err(AffineError::NotFinite(cap));
                }
                queue.push(c);
            }
        }
    }
    let mut out: Vec<AffineRoot> = seen.into_iter().collect();
    out.sort_by_key(|a| (a.root.clone(), a.level));
    Ok(out)
}

/// All sums of at most `depth` of the generators (with repetition),
/// deterministic order (by number of summands, then lexicographic choice).
fn bounded_sums(gens: &[Vec<i64>], depth: usize, rank: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![0i64; rank]];
    let mut seen: HashSet<Vec<i64>> = out.iter().cloned().collect();
    let mut layer = out.clone();
    for _ in 0..depth {
        let mut next = Vec::new();
        for base in &layer {
            for g in gens {
                let s: Vec<i64> = base.iter().zip(g).map(|(a, b)| a + b).collect();
                if seen.insert(s.clone()) {
                    next.push(s.clone());
                    out.push(s);
                }
            }
        }
        layer = next;
    }
    out
}

/// Search for a translation `λ₀` (a sum of ≤ `depth` generators) making
/// lengths additive: `l(t_λ · t_{λ₀} · w″) = l(t_λ) + l(t_{λ₀} w″)` for
/// every `w″ ≤ w` and every `λ` a sum of ≤ `depth` generators.
///
/// Precondition: the generators pair sign-coherently with every root.
pub fn find_additivity_witness(
    datum: &RootDatum,
    gens: &[Vec<i64>],
    w: &AffElt,
    depth: usize,
) -> Result<Vec<i64>, AffineError> {
    for g in gens {
        if !datum.in_lambda_g(g) {
            return Err(AffineError::NotInLatticeGroup(g.clone()));
        }
    }
    // sign coherence: for each root, all generators pair ≥ 0 or all ≤ 0
    for alpha in datum.positive_roots() {
        let mut pos = false;
        let mut neg = false;
        for g in gens {
            let p = pairing(alpha, g);
            if p > 0 {
                pos = true;
            }
            if p < 0 {
                neg = true;
            }
        }
        if pos && neg {
            return Err(AffineError::WitnessPrecondition(alpha.clone()));
        }
    }

    // the lower Bruhat set {w″ ≤ w}: products of subwords of a reduced word
    let (word, omega) = reduced_word(datum, w);
    let refl = simple_affine_reflections(datum);
    let mut lower: HashSet<AffElt> = HashSet::new();
    lower.insert(AffElt::identity(datum.rank));
    for &i in &word {
        let mut grown: HashSet<AffElt> = lower.clone();
        for x in &lower {
            grown.insert(x.mul(&refl[i]));
        }
        lower = grown;
    }
    let mut lower: Vec<AffElt> = lower.into_iter().map(|x| x.mul(&omega)).collect();
    lower.sort_by_key(sort_key_raw);

    let candidates = bounded_sums(gens, depth, datum.rank);
    let lambdas = &candidates;
    let mut last_failure: Option<(Vec<i64>, Vec<i64>, usize)> = None;
    'candidates: for lambda0 in &candidates {
        for w2 in &lower {
            let base = AffElt::from_translation(lambda0.clone()).mul(w2);
            let l_base = length(datum, &base);
            for lambda in lambdas {
                let t = AffElt::from_translation(lambda.clone());
                let l_t = length(datum, &t);
                let combined = t.mul(&base);
                if length(datum, &combined) != l_t + l_base {
                    last_failure =
                        Some((lambda0.clone(), lambda.clone(), length(datum, w2)));
                    continue 'candidates;
                }
            }
        }
        return Ok(lambda0.clone());
    }
    let (candidate, lambda, wlen) =
        last_failure.unwrap_or((vec![], vec![], 0));
    Err(AffineError::WitnessNotFound { depth, candidate, lambda, wlen })
}

/// Smallest `m ≤ n_max` such that every layer `Δ^{≤i}` with `m < i ≤ n_max`
/// equals `∪_{j=1..m} Δ^{≤j} + Δ^{≤i−j}`, where `Δ^{≤n}` is the set of
/// `δ ∈ Δ` with translation length ≤ `n`.
pub fn filtration_fg_check(
    datum: &RootDatum,
    delta_basis: &[Vec<i64>],
    n_max: usize,
) -> Result<usize, AffineError> {
    for b in delta_basis {
        if !datum.in_lambda(b) {
            return Err(AffineError::NotInCorootLattice(b.clone()));
        }
    }
    let d = delta_basis.len();
    if d == 0 {
        return Ok(0); // zero filtration: generated in degree 0
    }
    let b_mat = IntMat::from_cols(delta_basis.iter().map(|b| to_big(b)).collect());
    if lattice::smith_normal_form(&b_mat).rank() < d {
        return Err(AffineError::DependentBasis);
    }
    // translation length of B·c as a function of the coefficients c
    let tlen = |c: &[i64]| -> usize {
        let v: Vec<i64> = (0..datum.rank)
            .map(|k| (0..d).map(|j| delta_basis[j][k] * c[j]).sum())
            .collect();
        length(datum, &AffElt::from_translation(v))
    };
    // coefficient box bound: |c|∞ ≤ ‖pinv(G)‖∞ · n_max where G has rows
    // (α ∘ B) over positive roots; exact rational computation
    let g_rows: Vec<Vec<BigInt>> = datum
        .positive_roots()
        .iter()
        .map(|alpha| {
            (0..d)
                .map(|j| BigInt::from(pairing(alpha, &delta_basis[j])))
                .collect()
        })
        .collect();
    let g = IntMat::from_rows(g_rows);
    let gtg = g.transpose().mul(&g);
    // solve (GᵀG) X = Gᵀ columnwise over Q to get the pseudo-inverse
    let gt = g.transpose();
    let mut norm = BigRational::zero();
    for i in 0..d {
        let mut row_sum = BigRational::zero();
        for j in 0..g.rows() {
            let col = gt.col(j);
            let x = lattice::solve_rational(&gtg, &col)
                .expect("GᵀG invertible for independent basis");
            row_sum += x[i].abs();
        }
        if row_sum > norm {
            norm = row_sum;
        }
    }
    let bound = (norm * BigRational::from(BigInt::from(n_max as i64)))
        .ceil()
        .to_integer()
        .to_i64()
        .expect("box bound fits i64");

    // enumerate the coefficient box, bucket points by translation length
    let mut layers: Vec<HashSet<Vec<i64>>> = vec![HashSet::new(); n_max + 1];
    let mut c = vec![-bound; d];
    'outer: loop {
        let l = tlen(&c);
        if l <= n_max {
            for layer in layers.iter_mut().skip(l) {
                layer.insert(c.clone());
            }
        }
        let mut i = 0;
        loop {
            if i == d {
                break 'outer;
            }
            c[i] += 1;
            if c[i] <= bound {
                break;
            }
            c[i] = -bound;
            i += 1;
        }
    }
    // zero filtration special case: everything has length 0
    if layers[n_max].len() == 1 {
        return Ok(0);
    }
    'm_loop: for m in 1..n_max {
        for i in m + 1..=n_max {
            for point in &layers[i] {
                let mut decomposed = false;
                'decomp: for j in 1..=m.min(i) {
                    for p1 in &layers[j] {
                        let rest: Vec<i64> =
                            point.iter().zip(p1).map(|(a, b)| a - b).collect();
                        if layers[i - j].contains(&rest) {
                            decomposed = true;
                            break 'decomp;
                        }
                    }
                }
                if !decomposed {
                    continue 'm_loop;
                }
            }
        }
        return Ok(m);
    }
    Err(AffineError::FiltrationTooShallow(n_max))
}

// ---------------------------------------------------------------------------
// Hilbert bases of pointed rational cones
// ---------------------------------------------------------------------------

fn to_big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

/// Is `p` in the rational cone spanned by `gens`? Carathéodory: test all
/// linearly independent subsets of size ≤ dim for a nonnegative solution.
fn in_cone(gens: &[Vec<i64>], p: &[i64], dim: usize) -> bool {
    if p.iter().all(|&x| x == 0) {
        return true;
    }
    for size in 1..=dim.min(gens.len()) {
        for subset in lattice::combinations(gens.len(), size) {
            let cols: Vec<Vec<BigInt>> = subset.iter().map(|&i| to_big(&gens[i])).collect();
            let a = IntMat::from_cols(cols);
            if let Some(x) = lattice::solve_rational(&a, &to_big(p)) {
                // solution must actually solve (solve_rational checks) and be ≥ 0
                if x.iter().all(|c| !c.is_negative()) {
                    // verify (guards the underdetermined case)
                    let mut ok = true;
                    for (row, pk) in (0..a.rows()).zip(p) {
                        let mut acc = BigRational::zero();
                        for (col, xc) in x.iter().enumerate() {
                            acc += BigRational::from(a[(row, col)].clone()) * xc;
                        }
                        if acc != BigRational::from(BigInt::from(*pk)) {
                            ok = false;
                            break;
                        }
                    }
                    if ok {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Hilbert basis of the pointed cone generated by `gens` (dimension of the
/// span ≤ 3): the unique minimal generating set of the semigroup
/// `cone ∩ Z^n`. Deterministic (lexicographically sorted) output.
pub fn hilbert_basis(gens: &[Vec<i64>]) -> Result<Vec<Vec<i64>>, AffineError> {
    let ambient = match gens.first() {
        Some(g) => g.len(),
        None => return Ok(vec![]),
    };
    let gens: Vec<Vec<i64>> = gens.iter().filter(|g| g.iter().any(|&x| x != 0)).cloned().collect();
    if gens.is_empty() {
        return Ok(vec![]);
    }

    // saturated span: first `rank` columns of U from the SNF of the generator
    // matrix form a basis of (R·gens) ∩ Z^ambient
    let gen_mat = IntMat::from_cols(gens.iter().map(|g| to_big(g)).collect());
    let snf = lattice::smith_normal_form(&gen_mat);
    let dim = snf.rank();
    assert!(dim <= 3, "cone span dimension {dim} > 3 unsupported");
    let span_cols: Vec<Vec<BigInt>> = (0..dim).map(|i| snf.u.col(i)).collect();
    let span = IntMat::from_cols(span_cols);
    let span_snf = lattice::smith_normal_form(&span);
    // generators in span coordinates
    let sgens: Vec<Vec<i64>> = gens
        .iter()
        .map(|g| {
            let sol = span_snf.solve(&to_big(g)).expect("generator lies in its span");
            sol.iter().map(|x| i64::try_from(x).expect("coordinate fits")).collect()
        })
        .collect();

    // pointedness: 0 ∈ conv(gens) ⟺ the cone contains a line. Carathéodory
    // over affinely independent subsets of size ≤ dim+1.
    for size in 1..=(dim + 1).min(sgens.len()) {
        for subset in lattice::combinations(sgens.len(), size) {
            // rows: dim coordinate equations + the affine constraint Σc = 1
            let mut cols = Vec::new();
            for &i in &subset {
                let mut col = to_big(&sgens[i]);
                col.push(BigInt::from(1));
                cols.push(col);
            }
            let a = IntMat::from_cols(cols);
            let mut rhs = vec![BigInt::zero(); dim];
            rhs.push(BigInt::from(1));
            if let Some(x) = lattice::solve_rational(&a, &rhs) {
                if x.iter().all(|c| !c.is_negative()) {
                    // verify the solution exactly
                    let mut ok = true;
                    for row in 0..=dim {
                        let mut acc = BigRational::zero();
                        for (col, xc) in x.iter().enumerate() {
                            acc += BigRational::from(a[(row, col)].clone()) * xc;
                        }
                        let target = if row == dim {
                            BigRational::from(BigInt::from(1))
                        } else {
                            BigRational::zero()
                        };
                        if acc != target {
                            ok = false;
                            break;
                        }
                    }
                    if ok {
                        // a vanishing convex combination: report a line direction
                        let witness = gens[subset[0]].clone();
                        return Err(AffineError::NotPointed(witness));
                    }
                }
            }
        }
    }

    // strictly positive integer grading functional on the cone
    let phi: Vec<i64> = if dim == 1 {
        let sign = sgens.iter().map(|g| g[0].signum()).find(|&s| s != 0).unwrap_or(1);
        vec![sign]
    } else {
        let mut normals: HashSet<Vec<i64>> = HashSet::new();
        for subset in lattice::combinations(sgens.len(), dim - 1) {
            let rows: Vec<Vec<BigInt>> = subset.iter().map(|&i| to_big(&sgens[i])).collect();
            let m = IntMat::from_rows(rows);
            let kernel = lattice::smith_normal_form(&m).kernel_basis();
            if kernel.len() != 1 {
                continue;
            }
            let n: Vec<i64> =
                kernel[0].iter().map(|x| i64::try_from(x).expect("normal fits")).collect();
            let pairings: Vec<i64> =
                sgens.iter().map(|g| n.iter().zip(g).map(|(a, b)| a * b).sum()).collect();
            if pairings.iter().all(|&p| p >= 0) {
                normals.insert(n);
            } else if pairings.iter().all(|&p| p <= 0) {
                normals.insert(n.iter().map(|x| -x).collect());
            }
        }
        let mut phi = vec![0i64; dim];
        let mut sorted: Vec<Vec<i64>> = normals.into_iter().collect();
        sorted.sort();
        for n in sorted {
            for (p, nk) in phi.iter_mut().zip(&n) {
                *p += nk;
            }
        }
        phi
    };
    let phi_of = |v: &[i64]| -> i64 { phi.iter().zip(v).map(|(a, b)| a * b).sum() };
    for g in &sgens {
        assert!(phi_of(g) > 0, "grading functional not positive on generator {g:?}");
    }

    // every cone point with φ ≤ Φmax has |coordinate k| ≤ Φmax·max |g_k|/φ(g)
    let phimax: i64 = sgens.iter().map(|g| phi_of(g)).sum();
    let box_bound: Vec<i64> = (0..dim)
        .map(|k| {
            sgens
                .iter()
                .map(|g| {
                    let num = BigRational::new(
                        BigInt::from(phimax * g[k].abs()),
                        BigInt::from(phi_of(g)),
                    );
                    num.ceil().to_integer().to_i64().expect("bound fits")
                })
                .max()
                .unwrap_or(0)
        })
        .collect();

    // candidates: nonzero cone lattice points in the box with φ ≤ Φmax
    let mut candidates: HashSet<Vec<i64>> = HashSet::new();
    let mut c: Vec<i64> = box_bound.iter().map(|b| -b).collect();
    'outer: loop {
        let f = phi_of(&c);
        if f > 0 && f <= phimax && in_cone(&sgens, &c, dim) {
            candidates.insert(c.clone());
        }
        let mut i = 0;
        loop {
            if i == dim {
                break 'outer;
            }
            c[i] += 1;
            if c[i] <= box_bound[i] {
                break;
            }
            c[i] = -box_bound[i];
            i += 1;
        }
    }

    // irreducibles: p with no decomposition p = q + (p−q), both candidates
    let mut basis: Vec<Vec<i64>> = candidates
        .iter()
        .filter(|p| {
            !candidates.iter().any(|q| {
                let rest: Vec<i64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
                *q != **p && candidates.contains(&rest)
            })
        })
        .cloned()
        .collect();
    basis.sort();

    // back to ambient coordinates
    let out: Vec<Vec<i64>> = basis
        .iter()
        .map(|b| {
            (0..ambient)
                .map(|k| {
                    (0..dim)
                        .map(|j| {
                            i64::try_from(&span[(k, j)]).expect("span entry") * b[j]
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    let mut out = out;
    out.sort();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parsing and serialization
// ---------------------------------------------------------------------------

/// JSON shape of an element: explicit translation plus a word for the
/// finite part (`"e"` for the identity).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ElementRepr {
    pub t: Vec<i64>,
    pub w: String,
}

/// Canonical serialization: translation + canonical word of the finite part.
pub fn element_repr(datum: &RootDatum, e: &AffElt) -> ElementRepr {
    let word = datum.canonical_word(&e.w);
    ElementRepr { t: e.t.clone(), w: finite_word_string(&word) }
}

/// `"s1*s2"` etc.; `"e"` for the empty word.
pub fn finite_word_string(word: &[usize]) -> String {
    if word.is_empty() {
        "e".to_string()
    } else {
        word.iter().map(|i| format!("s{}", i + 1)).collect::<Vec<_>>().join("*")
    }
}

/// Word string over the *affine* generators (`s0` allowed).
pub fn affine_word_string(word: &[usize]) -> String {
    if word.is_empty() {
        "e".to_string()
    } else {
        word.iter().map(|i| format!("s{i}")).collect::<Vec<_>>().join("*")
    }
}

/// Parse an [`ElementRepr`]: the `w` field is a word in the finite simple
/// reflections `s1…sr`; translation must lie in `Λ_G`.
pub fn parse_element(datum: &RootDatum, repr: &ElementRepr) -> Result<AffElt, AffineError> {
    if repr.t.len() != datum.rank {
        return Err(AffineError::Parse(
            format!("{repr:?}"),
            format!("translation has length {} but rank is {}", repr.t.len(), datum.rank),
        ));
    }
    if !datum.in_lambda_g(&repr.t) {
        return Err(AffineError::NotInLatticeGroup(repr.t.clone()));
    }
    let mut w = SmallMat::identity(datum.rank);
    for token in word_tokens(&repr.w)? {
        match token {
            Token::Simple(i) => {
                if i == 0 || i > datum.rank {
                    return Err(AffineError::Parse(
                        repr.w.clone(),
                        format!("s{i} is not a finite simple reflection (rank {})", datum.rank),
                    ));
                }
                w = w.mul(&datum.simple_reflections[i - 1]);
            }
            Token::Identity => {}
            Token::Translation(_) => {
                return Err(AffineError::Parse(
                    repr.w.clone(),
                    "translations are not allowed in the finite word".into(),
                ))
            }
        }
    }
    Ok(AffElt::new(repr.t.clone(), w))
}

/// Parse a full affine word such as `"s0*s1"`, `"t[1,0]*s2"`, or `"e"`.
pub fn parse_affine_word(datum: &RootDatum, s: &str) -> Result<AffElt, AffineError> {
    let refl = simple_affine_reflections(datum);
    let mut e = AffElt::identity(datum.rank);
    for token in word_tokens(s)? {
        match token {
            Token::Identity => {}
            Token::Simple(i) => {
                if i > datum.rank {
                    return Err(AffineError::Parse(
                        s.to_string(),
                        format!("s{i} out of range (rank {})", datum.rank),
                    ));
                }
                e = e.mul(&refl[i]);
            }
            Token::Translation(t) => {
                if t.len() != datum.rank {
                    return Err(AffineError::Parse(
                        s.to_string(),
                        format!("translation has {} coordinates, rank is {}", t.len(), datum.rank),
                    ));
                }
                if !datum.in_lambda_g(&t) {
                    return Err(AffineError::NotInLatticeGroup(t));
                }
                e = e.mul(&AffElt::from_translation(t));
            }
        }
    }
    Ok(e)
}

enum Token {
    Simple(usize),
    Translation(Vec<i64>),
    Identity,
}

fn word_tokens(s: &str) -> Result<Vec<Token>, AffineError> {
    let s = s.trim();
    if s.is_empty() || s == "e" || s == "1" {
        return Ok(vec![Token::Identity]);
    }
    let mut out = Vec::new();
    for part in s.split('*') {
        let part = part.trim();
        if part == "e" || part == "1" || part.is_empty() {
            out.push(Token::Identity);
        } else if let Some(rest) = part.strip_prefix('s') {
            let i: usize = rest.parse().map_err(|_| {
                AffineError::Parse(s.to_string(), format!("bad generator `{part}`"))
            })?;
            out.push(Token::Simple(i));
        } else if let Some(rest) = part.strip_prefix('t') {
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| {
                    AffineError::Parse(s.to_string(), format!("bad translation `{part}`"))
                })?;
            let coords: Result<Vec<i64>, _> = inner
                .split(',')
                .map(|c| c.trim().parse::<i64>())
                .collect();
            let coords = coords.map_err(|_| {
                AffineError::Parse(s.to_string(), format!("bad translation `{part}`"))
            })?;
            out.push(Token::Translation(coords));
        } else {
            return Err(AffineError::Parse(s.to_string(), format!("bad token `{part}`")));
        }
    }
    Ok(out)
}

/// Canonical comparison key: `(length, translation, finite word)`.
pub fn sort_key(datum: &RootDatum, e: &AffElt) -> (usize, Vec<i64>, Vec<usize>) {
    (length(datum, e), e.t.clone(), datum.canonical_word(&e.w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{build_root_datum, CartanType, Isogeny};

    fn a1() -> RootDatum {
        build_root_datum(CartanType::A, 1, Isogeny::SimplyConnected).unwrap()
    }

    fn a1_adjoint() -> RootDatum {
        build_root_datum(CartanType::A, 1, Isogeny::Adjoint).unwrap()
    }

    fn a2() -> RootDatum {
        build_root_datum(CartanType::A, 2, Isogeny::SimplyConnected).unwrap()
    }

    /// Literal window-scan inversion count: oracle for the closed form.
    fn brute_length(datum: &RootDatum, e: &AffElt) -> usize {
        let max_pair = datum
            .roots
            .iter()
            .map(|a| pairing(a, &e.t).abs())
            .max()
            .unwrap_or(0);
        let window = max_pair + 2;
        let mut count = 0;
        for alpha in &datum.roots {
            for r in -window..=window {
                let a = AffineRoot::new(alpha.clone(), r);
                if is_affine_positive(datum, &a) && !is_affine_positive(datum, &e.act(&a)) {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn a1_length_table() {
        let d = a1();
        let refl = simple_affine_reflections(&d);
        assert_eq!(length(&d, &AffElt::identity(1)), 0);
        assert_eq!(length(&d, &refl[0]), 1, "l(s0)");
        assert_eq!(length(&d, &refl[1]), 1, "l(s1)");
        // t_{α∨} has coordinates (2) in the coweight basis
        assert_eq!(length(&d, &AffElt::from_translation(vec![2])), 2);
        assert_eq!(length(&d, &AffElt::from_translation(vec![4])), 4);
        assert_eq!(length(&d, &AffElt::from_translation(vec![-2])), 2);
        assert_eq!(length(&d, &refl[0].mul(&refl[1])), 2);
    }

    #[test]
    fn translation_length_formula() {
        // l(t_λ) = Σ_{α>0} |⟨α, λ⟩| on a grid, in several systems
        for (t, rank) in [
            (CartanType::A, 2usize),
            (CartanType::C, 2),
            (CartanType::G, 2),
        ] {
            let d = build_root_datum(t, rank, Isogeny::SimplyConnected).unwrap();
            for x in -3i64..=3 {
                for y in -3i64..=3 {
                    let lam_coeff = [x, y];
                    // λ = Σ cᵢ αᵢ∨ keeps us inside Λ
                    let lam: Vec<i64> = (0..rank)
                        .map(|k| (0..rank).map(|i| lam_coeff[i] * d.cartan[i][k]).sum())
                        .collect();
                    let formula: i64 =
                        d.positive_roots().iter().map(|a| pairing(a, &lam).abs()).sum();
                    let e = AffElt::from_translation(lam.clone());
                    assert_eq!(length(&d, &e) as i64, formula, "λ = {lam:?}");
                    assert_eq!(brute_length(&d, &e) as i64, formula);
                }
            }
        }
    }

    #[test]
    fn length_three_ways_small() {
        for d in [a1(), a2()] {
            for e in elements_up_to_length(&d, 5) {
                let l = length(&d, &e);
                assert_eq!(l, brute_length(&d, &e), "inversion oracle for {e:?}");
                assert_eq!(l, inversion_count(&d, &e), "inversion count for {e:?}");
                let (word, omega) = reduced_word(&d, &e);
                assert_eq!(word.len(), l, "reduced word length for {e:?}");
                assert_eq!(length(&d, &omega), 0);
                assert_eq!(word_product(&d, &word).mul(&omega), e, "reconstruction");
            }
        }
    }

    #[test]
    fn a1_reduced_word_examples() {
        let d = a1();
        // t_{α∨} = s0·s1 under the smallest-index tie break
        let (word, omega) = reduced_word(&d, &AffElt::from_translation(vec![2]));
        assert_eq!(word, vec![0, 1]);
        assert!(omega.is_identity());
        // the affine simple reflection is t_{θ∨} s_θ
        let refl = simple_affine_reflections(&d);
        assert_eq!(refl[0].t, vec![2]);
        assert!(!refl[0].w.is_identity());
    }

    #[test]
    fn adjoint_omega() {
        let d = a1_adjoint();
        let omegas = omega_elements(&d);
        assert_eq!(omegas.len(), 2);
        assert!(omegas[0].is_identity());
        let omega = &omegas[1];
        assert_eq!(length(&d, omega), 0);
        assert!(omega.mul(omega).is_identity(), "Ω element of A1 is an involution");
        // conjugation by ω swaps s0 and s1
        let refl = simple_affine_reflections(&d);
        let conj = omega.mul(&refl[0]).mul(&omega.inverse());
        assert_eq!(conj, refl[1]);
        // t_{α∨/2} = ambient (1): length 1, word [s0], omega nontrivial
        let e = AffElt::from_translation(vec![1]);
        assert_eq!(length(&d, &e), 1);
        let (word, om) = reduced_word(&d, &e);
        assert_eq!(word, vec![0]);
        assert_eq!(&om, omega);
    }

    #[test]
    fn bruhat_matches_subword_oracle() {
        let d = a2();
        let elements = elements_up_to_length(&d, 4);
        for v in &elements {
            let (vword, vomega) = reduced_word(&d, v);
            // all subword products of v's reduced word
            let mut products: HashSet<AffElt> = HashSet::new();
            let n = vword.len();
            for mask in 0..(1u32 << n) {
                let sub: Vec<usize> = (0..n).filter(|&k| mask >> k & 1 == 1).map(|k| vword[k]).collect();
                products.insert(word_product(&d, &sub).mul(&vomega));
            }
            for u in &elements {
                let expected = products.contains(u);
                assert_eq!(
                    bruhat_leq(&d, u, v),
                    expected,
                    "u = {u:?} vs v = {v:?}"
                );
            }
        }
    }

    #[test]
    fn bruhat_is_a_partial_order() {
        let d = a1();
        let elements = elements_up_to_length(&d, 4);
        for u in &elements {
            assert!(bruhat_leq(&d, u, u));
            for v in &elements {
                if bruhat_leq(&d, u, v) && bruhat_leq(&d, v, u) {
                    assert_eq!(u, v, "antisymmetry");
                }
                if bruhat_leq(&d, u, v) && u != v {
                    assert!(length(&d, u) < length(&d, v), "strict comparability");
                }
            }
        }
    }

    #[test]
    fn demazure_worked_example() {
        let d = a1();
        let u = parse_affine_word(&d, "s0*s1").unwrap();
        let v = parse_affine_word(&d, "s1*s0").unwrap();
        let p = demazure(&d, &u, &v);
        let (word, omega) = reduced_word(&d, &p);
        assert_eq!(affine_word_string(&word), "s0*s1*s0");
        assert!(omega.is_identity());
        assert_eq!(length(&d, &p), 3);
    }

    #[test]
    fn demazure_closure_property_small() {
        // {u′v′ : u′ ≤ u, v′ ≤ v} = {x : x ≤ u*v} on a small sample
        let d = a1();
        let elements = elements_up_to_length(&d, 3);
        let all = elements_up_to_length(&d, 7);
        for u in &elements {
            for v in &elements {
                let product = demazure(&d, u, v);
                let mut lhs: HashSet<AffElt> = HashSet::new();
                for x in all.iter().filter(|x| bruhat_leq(&d, x, u)) {
                    for y in all.iter().filter(|y| bruhat_leq(&d, y, v)) {
                        lhs.insert(x.mul(y));
                    }
                }
                let rhs: HashSet<AffElt> =
                    all.iter().filter(|x| bruhat_leq(&d, x, &product)).cloned().collect();
                assert_eq!(lhs, rhs, "u = {u:?}, v = {v:?}");
            }
        }
    }

    #[test]
    fn demazure_with_reflections_and_omega() {
        let d = a1();
        let refl = simple_affine_reflections(&d);
        for s in &refl {
            assert_eq!(demazure(&d, s, s), *s, "s*s = s");
        }
        // Ω parts multiply through
        let da = a1_adjoint();
        let omega = omega_elements(&da)[1].clone();
        let s0 = simple_affine_reflections(&da)[0].clone();
        let p = demazure(&da, &s0, &omega);
        assert_eq!(p, s0.mul(&omega));
    }

    #[test]
    fn longest_elements() {
        let d = a2();
        // {s1, s2} generates the finite Weyl group; longest has length 3
        let w0 = longest_element(&d, &[1, 2]).unwrap();
        assert_eq!(length(&d, &w0), 3);
        assert!(w0.t.iter().all(|&c| c == 0));
        assert_eq!(parabolic_subgroup(&d, &[1, 2], 100).unwrap().len(), 6);
        // single generator
        let s0 = longest_element(&d, &[0]).unwrap();
        assert_eq!(s0, simple_affine_reflections(&d)[0]);
        // the full affine diagram is infinite
        let err = parabolic_subgroup(&d, &[0, 1, 2], 500).unwrap_err();
        assert_eq!(err, AffineError::NotFinite(500));
        // J-longest predicates
        assert!(is_right_j_longest(&d, &w0, &[1, 2]).unwrap());
        assert!(!is_right_j_longest(&d, &AffElt::identity(2), &[1, 2]).unwrap());
        assert!(is_left_j_longest(&d, &w0, &[1, 2]).unwrap());
    }

    #[test]
    fn pairing_counts_and_regularity() {
        let d = a1();
        let alpha = vec![1i64];
        // pure translations: count = |⟨α, λ⟩|
        for k in -4i64..=4 {
            let e = AffElt::from_translation(vec![2 * k]);
            assert_eq!(pairing_count(&d, &alpha, &e).unwrap() as i64, (2 * k).abs());
        }
        let t3 = AffElt::from_translation(vec![6]); // 3α∨
        assert!(is_m_regular(&d, &t3, 6).unwrap());
        assert!(!is_m_regular(&d, &t3, 7).unwrap());
        assert_eq!(regularity(&d, &t3).unwrap(), 6);
        // window scan agrees with the closed form |c + lo(α) − lo(w̄⁻¹α)|
        let d2 = a2();
        for e in elements_up_to_length(&d2, 5) {
            for alpha in &d2.roots {
                let beta = e.w.row_mul(alpha); // w̄⁻¹·α = α·M_w
                let c = pairing(alpha, &e.t);
                let closed = (c + lo(&d2, alpha) - lo(&d2, &beta)).unsigned_abs() as usize;
                assert_eq!(
                    pairing_count(&d2, alpha, &e).unwrap(),
                    closed,
                    "e = {e:?}, α = {alpha:?}"
                );
            }
        }
    }

    #[test]
    fn regularity_sandwich_small() {
        // |⟨ᾱ, λ⟩| − 1 ≤ pairing_count(ᾱ, t_λ·ū) ≤ |⟨ᾱ, λ⟩| + 1
        let d = a2();
        for e in elements_up_to_length(&d, 6) {
            for alpha in &d.roots {
                let c = pairing(alpha, &e.t).abs() as isize;
                let pc = pairing_count(&d, alpha, &e).unwrap() as isize;
                assert!(c - 1 <= pc && pc <= c + 1, "sandwich fails: {e:?} {alpha:?}");
            }
        }
    }

    #[test]
    fn demazure_preserves_regularity_small() {
        let d = a1();
        let elements = elements_up_to_length(&d, 5);
        for u in &elements {
            let m = regularity(&d, u).unwrap();
            if m == 0 {
                continue;
            }
            for v in &elements {
                let p = demazure(&d, u, v);
                assert!(is_m_regular(&d, &p, m).unwrap(), "u*v loses regularity");
                let q = demazure(&d, v, u);
                assert!(is_m_regular(&d, &q, m).unwrap(), "v*u loses regularity");
            }
        }
    }

    #[test]
    fn min_coset_reps_example() {
        let d = a1();
        let delta = vec![AffineRoot::new(vec![1], 0)];
        let reps = min_coset_reps(&d, &delta, 2).unwrap();
        let words: Vec<String> = reps
            .iter()
            .map(|e| {
                let (w, _) = reduced_word(&d, e);
                affine_word_string(&w)
            })
            .collect();
        assert_eq!(words, vec!["e", "s0", "s1*s0"]);
        // suffix closure: for a rep with reduced word s_n…s_1, every
        // trailing product s_i…s_1 is again a rep
        let reps6 = min_coset_reps(&d, &delta, 6).unwrap();
        let rep_set: HashSet<AffElt> = reps6.iter().cloned().collect();
        for e in &reps6 {
            let (word, omega) = reduced_word(&d, e);
            assert!(omega.is_identity());
            for k in 0..word.len() {
                let suffix = word_product(&d, &word[k..]);
                assert!(rep_set.contains(&suffix), "suffix of {word:?} at {k}");
            }
        }
    }

    #[test]
    fn min_coset_dichotomy() {
        // for a rep w and an ambient simple affine root a:
        // s_a·w is a rep ⟺ w⁻¹(a) ∉ Φ̃_s
        let d = a2();
        let delta = vec![AffineRoot::new(vec![1, 0], 0), AffineRoot::new(vec![0, 1], 0)];
        let subsystem = affine_subsystem(&d, &delta).unwrap();
        let sub_set: HashSet<AffineRoot> = subsystem.iter().cloned().collect();
        let is_rep =
            |w: &AffElt| delta.iter().all(|b| is_affine_positive(&d, &w.act(b)));
        for w in min_coset_reps(&d, &delta, 4).unwrap() {
            for i in 0..=d.rank {
                let a = simple_affine_root(&d, i);
                let refl = affine_reflection(&d, &a).unwrap();
                let sw = refl.mul(&w);
                let pulled = w.inverse().act(&a);
                assert_eq!(
                    is_rep(&sw),
                    !sub_set.contains(&pulled),
                    "w = {w:?}, a = {a:?}"
                );
            }
        }
    }

    #[test]
    fn additivity_witness() {
        let d = a1();
        // w = 1: λ₀ = 0 works
        let id = AffElt::identity(1);
        assert_eq!(find_additivity_witness(&d, &[vec![2]], &id, 2).unwrap(), vec![0]);
        // w = s1: some witness exists at depth 2
        let s1 = AffElt::from_finite(d.simple_reflections[0].clone());
        let w = find_additivity_witness(&d, &[vec![2]], &s1, 2).unwrap();
        // verify the defining property once more for the returned witness
        let base = AffElt::from_translation(w.clone()).mul(&s1);
        for k in 0..=2i64 {
            let t = AffElt::from_translation(vec![2 * k]);
            assert_eq!(
                length(&d, &t.mul(&base)),
                length(&d, &t) + length(&d, &base)
            );
        }
        // sign-incoherent generators are rejected
        let err = find_additivity_witness(&d, &[vec![2], vec![-2]], &s1, 1).unwrap_err();
        assert!(matches!(err, AffineError::WitnessPrecondition(_)));
    }

    #[test]
    fn filtration_witnesses() {
        let d = a1();
        // Δ = Λ: layers are {l ≤ n} multiples of α∨, generated by length 2
        assert_eq!(filtration_fg_check(&d, &[vec![2]], 12).unwrap(), 2);
        // Δ = 2Λ: lengths jump by 4
        assert_eq!(filtration_fg_check(&d, &[vec![4]], 12).unwrap(), 4);
        // Δ = 0
        assert_eq!(filtration_fg_check(&d, &[], 8).unwrap(), 0);
        // dependent basis is rejected
        assert_eq!(
            filtration_fg_check(&d, &[vec![2], vec![4]], 8).unwrap_err(),
            AffineError::DependentBasis
        );
        // A2 coroot lattice: lengths 4 and 6 occur on generators, the
        // length-6 vectors are indecomposable, all length-8 ones split
        let d2 = a2();
        let m = filtration_fg_check(&d2, &[d2.cartan[0].clone(), d2.cartan[1].clone()], 10)
            .unwrap();
        assert_eq!(m, 6, "witness for the full coroot lattice of A2");
    }

    #[test]
    fn hilbert_basis_examples() {
        // first quadrant
        assert_eq!(
            hilbert_basis(&[vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap(),
            vec![vec![0, 1], vec![1, 0]]
        );
        // cone over (1,0),(1,2) needs the interior point (1,1)
        assert_eq!(
            hilbert_basis(&[vec![1, 0], vec![1, 2]]).unwrap(),
            vec![vec![1, 0], vec![1, 1], vec![1, 2]]
        );
        // single non-primitive ray: saturates to (1,2)
        assert_eq!(hilbert_basis(&[vec![2, 4]]).unwrap(), vec![vec![1, 2]]);
        // a line is not pointed
        assert!(matches!(
            hilbert_basis(&[vec![1, 0], vec![-1, 0]]).unwrap_err(),
            AffineError::NotPointed(_)
        ));
        // empty/zero input
        assert_eq!(hilbert_basis(&[vec![0, 0]]).unwrap(), Vec::<Vec<i64>>::new());
    }

    #[test]
    fn hilbert_basis_generates_and_is_minimal() {
        let gens = vec![vec![2, 1], vec![1, 3]];
        let hb = hilbert_basis(&gens).unwrap();
        // membership test for the semigroup generated by hb, by BFS up to a box
        let in_semigroup = |target: &[i64]| -> bool {
            let mut reached: HashSet<Vec<i64>> = HashSet::new();
            let mut frontier = vec![vec![0i64, 0]];
            reached.insert(frontier[0].clone());
            while let Some(p) = frontier.pop() {
                if p == target {
                    return true;
                }
                for h in &hb {
                    let q: Vec<i64> = p.iter().zip(h).map(|(a, b)| a + b).collect();
                    if q.iter().zip(target).all(|(a, b)| a.abs() <= b.abs() + 4)
                        && reached.insert(q.clone())
                    {
                        frontier.push(q);
                    }
                }
            }
            false
        };
        // every cone lattice point in a test box is generated
        for x in 0..=6i64 {
            for y in 0..=6i64 {
                let p = vec![x, y];
                if in_cone(&gens, &p, 2) {
                    assert!(in_semigroup(&p), "{p:?} not generated by {hb:?}");
                }
            }
        }
        // minimality: dropping any element loses generation
        for skip in 0..hb.len() {
            let partial: Vec<Vec<i64>> =
                hb.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, h)| h.clone()).collect();
            let mut reached: HashSet<Vec<i64>> = HashSet::new();
            reached.insert(vec![0, 0]);
            let mut frontier = vec![vec![0i64, 0]];
            while let Some(p) = frontier.pop() {
                for h in &partial {
                    let q: Vec<i64> = p.iter().zip(h).map(|(a, b)| a + b).collect();
                    if q.iter().all(|c| c.abs() <= 12) && reached.insert(q.clone()) {
                        frontier.push(q);
                    }
                }
            }
            assert!(
                !reached.contains(&hb[skip]),
                "{:?} is redundant in {hb:?}",
                hb[skip]
            );
        }
    }

    #[test]
    fn parse_and_format_round_trip() {
        let d = a2();
        for e in elements_up_to_length(&d, 4) {
            let repr = element_repr(&d, &e);
            let back = parse_element(&d, &repr).unwrap();
            assert_eq!(back, e);
        }
        let e = parse_affine_word(&d, "t[1,1]*s1*s2").unwrap();
        assert_eq!(e.t, vec![1, 1]);
        assert!(parse_affine_word(&d, "s7").is_err());
        assert!(parse_affine_word(&d, "t[1]").is_err());
        assert!(parse_affine_word(&d, "q3").is_err());
        // translations outside Λ_G are rejected for the sc isogeny
        assert!(parse_affine_word(&d, "t[1,0]").is_err());
        assert!(parse_affine_word(&a1_adjoint(), "t[1]").is_ok());
    }
}
