//! Twists of the extended affine Weyl group by a diagram automorphism σ,
//! and the conjugacy combinatorics of the coset `W̃_G·σ`.
//!
//! A [`FrobeniusTwist`] is an automorphism of the root datum: a permutation
//! of the Dynkin nodes together with the induced integer automorphism of the
//! ambient lattice (fixing `Λ` and `Λ_G`). An element `w̃σ` with
//! `w̃ = t_λ·ū` acts on the cocharacter space as the affine map
//! `x ↦ λ + v·x`, `v = M_ū·M_σ`; everything in this module is phrased in
//! terms of that linearization:
//!
//! * `w̃σ` is torsion iff the affine map has a rational fixed point, i.e.
//!   `(1 − v)x = λ` is solvable over `Q` (cross-checked against the
//!   σ-norm iteration `N_k(w̃) = w̃·σ(w̃)⋯σ^{k−1}(w̃)`);
//! * conjugating by a translation `t_μ` shifts `λ` by `(1 − v)μ`;
//! * `ūσ` is elliptic iff its fixed sublattice vanishes, iff
//!   `det(1 − v) ≠ 0`;
//! * for elliptic `ūσ`, the translations of the fiber `{t_λ·ū·σ}` modulo
//!   lattice conjugation form the finite group `L/(1−v)L`, enumerated by
//!   Smith-normal-form box representatives;
//! * classes under the coroot lattice merge under the bigger group exactly
//!   when some `μ ∈ Λ_G` with `σ(μ) − μ ∈ Λ` conjugates one to the other.

use crate::affine::{self, AffElt};
use crate::cartan::{RootDatum, SmallMat};
use crate::lattice::{self, IntMat};
use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TwistError {
    #[error("diagram_perm {0:?} is not a permutation of the nodes")]
    NotAPermutation(Vec<usize>),
    #[error("Cartan matrix is not symmetric under the permutation at nodes ({0}, {1})")]
    DiagramNotSymmetric(usize, usize),
    #[error("lattice map does not send coroot {0} to coroot {1}")]
    CorootMismatch(usize, usize),
    #[error("claimed order {claimed} but the map has order {actual}")]
    OrderMismatch { claimed: usize, actual: usize },
    #[error("lattice map does not preserve the cocharacter lattice (moves {0:?} out)")]
    LatticeNotPreserved(Vec<i64>),
    #[error("permutation does not induce an integral map on the ambient lattice")]
    NonIntegralMap,
    #[error("not elliptic: {0:?} is a nonzero fixed vector")]
    NotElliptic(Vec<i64>),
    #[error("sublattice is not stable: generator {0:?} maps outside")]
    NotStable(Vec<i64>),
    #[error("vector {0:?} is not in the acting lattice")]
    NotInActingLattice(Vec<i64>),
    #[error("class representatives do not lie in a single fiber")]
    MixedFiber,
}

/// A root-datum automorphism: Dynkin-node permutation plus the matching
/// integer automorphism of the ambient lattice.
#[derive(Clone, Debug)]
pub struct FrobeniusTwist {
    pub diagram_perm: Vec<usize>,
    pub lattice_map: SmallMat,
    pub order: usize,
    lattice_map_inv: SmallMat,
}

impl FrobeniusTwist {
    /// Validating constructor. Checks that the permutation and matrix match
    /// on the simple coroots, that the Cartan matrix is symmetric under the
    /// permutation, that `Λ_G` is preserved, and that `order` is exact.
    pub fn new(
        datum: &RootDatum,
        diagram_perm: Vec<usize>,
        lattice_map: SmallMat,
        order: usize,
    ) -> Result<Self, TwistError> {
        let rank = datum.rank;
        let mut seen = vec![false; rank];
        for &p in &diagram_perm {
            if p >= rank || seen[p] {
                return Err(TwistError::NotAPermutation(diagram_perm.clone()));
            }
            seen[p] = true;
        }
        if diagram_perm.len() != rank {
            return Err(TwistError::NotAPermutation(diagram_perm.clone()));
        }
        for i in 0..rank {
            for j in 0..rank {
                if datum.cartan[diagram_perm[j]][diagram_perm[i]] != datum.cartan[j][i] {
                    return Err(TwistError::DiagramNotSymmetric(i, j));
                }
            }
        }
        for i in 0..rank {
            if lattice_map.act_vec(&datum.cartan[i]) != datum.cartan[diagram_perm[i]] {
                return Err(TwistError::CorootMismatch(i, diagram_perm[i]));
            }
        }
        for j in 0..rank {
            let col = datum.lambda_g_cols.col(j);
            let v: Vec<i64> =
                col.iter().map(|x| i64::try_from(x).expect("basis entry")).collect();
            let image = lattice_map.act_vec(&v);
            if !datum.in_lambda_g(&image) {
                return Err(TwistError::LatticeNotPreserved(v));
            }
        }
        let actual = matrix_order(&lattice_map, 4 * order.max(12));
        if actual != order {
            return Err(TwistError::OrderMismatch { claimed: order, actual });
        }
        let lattice_map_inv = lattice_map.inverse_unimodular();
        Ok(FrobeniusTwist { diagram_perm, lattice_map, order, lattice_map_inv })
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    pub fn lattice_map_inv(&self) -> &SmallMat {
        &self.lattice_map_inv
    }
}

/// Multiplicative order of `m`, or `cap + 1` if not found within the cap.
fn matrix_order(m: &SmallMat, cap: usize) -> usize {
    let mut p = m.clone();
    let mut k = 1;
    while !p.is_identity() {
        if k > cap {
            return cap + 1;
        }
        p = p.mul(m);
        k += 1;
    }
    k
}

/// The identity twist.
pub fn trivial_twist(datum: &RootDatum) -> FrobeniusTwist {
    FrobeniusTwist::new(
        datum,
        (0..datum.rank).collect(),
        SmallMat::identity(datum.rank),
        1,
    )
    .expect("identity twist is always valid")
}

/// Build the twist induced by a Dynkin-diagram permutation: the unique
/// lattice map sending `αᵢ∨ ↦ α_{p(i)}∨`. Errors if that map is not
/// integral on the ambient lattice or does not preserve `Λ_G`.
pub fn diagram_twist(datum: &RootDatum, perm: &[usize]) -> Result<FrobeniusTwist, TwistError> {
    let rank = datum.rank;
    // solve Cᵀ·(Mᵀ eₖ) = (C_p)ᵀ eₖ column by column, C = coroot basis
    let c_t = datum.lambda_basis().transpose();
    let mut m_rows: Vec<Vec<i64>> = Vec::with_capacity(rank);
    for k in 0..rank {
        let rhs: Vec<BigInt> =
            (0..rank).map(|i| BigInt::from(datum.cartan[perm[i]][k])).collect();
        let sol = lattice::solve_rational(&c_t, &rhs).ok_or(TwistError::NonIntegralMap)?;
        let mut row = Vec::with_capacity(rank);
        for x in sol {
            if !x.is_integer() {
                return Err(TwistError::NonIntegralMap);
            }
            row.push(
                i64::try_from(x.to_integer()).map_err(|_| TwistError::NonIntegralMap)?,
            );
        }
        m_rows.push(row);
    }
    let m = SmallMat::from_rows(&m_rows);
    let order = matrix_order(&m, 48);
    FrobeniusTwist::new(datum, perm.to_vec(), m, order)
}

/// An element of the coset `W̃_G·σ`, stored by its `W̃_G` part.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TwistedElt {
    pub base: AffElt,
}

impl TwistedElt {
    pub fn new(base: AffElt) -> Self {
        TwistedElt { base }
    }
}

/// Apply σ to a group element: `σ(t_λ·w̄) = t_{σλ}·(σ w̄ σ⁻¹)`.
pub fn apply_sigma(twist: &FrobeniusTwist, e: &AffElt) -> AffElt {
    let t = twist.lattice_map.act_vec(&e.t);
    let w = twist.lattice_map.mul(&e.w).mul(&twist.lattice_map_inv);
    AffElt::new(t, w)
}

/// The σ-norm `N_k(w̃) = w̃ · σ(w̃) · σ²(w̃) ⋯ σ^{k−1}(w̃)`.
pub fn sigma_norm(twist: &FrobeniusTwist, e: &AffElt, k: usize) -> AffElt {
    let mut norm = AffElt::identity(e.rank());
    let mut twisted = e.clone();
    for _ in 0..k {
        norm = norm.mul(&twisted);
        twisted = apply_sigma(twist, &twisted);
    }
    norm
}

/// Linear part of the affine action of `w̄σ` on the cocharacter space.
pub fn linearization(twist: &FrobeniusTwist, wbar: &SmallMat) -> SmallMat {
    wbar.mul(&twist.lattice_map)
}

/// Is `w̃σ` a torsion element of `W̃_G ⋊ ⟨σ⟩`? Equivalent to the affine
/// map `x ↦ λ + v·x` having a rational fixed point: solve `(1 − v)x = λ`.
pub fn is_sigma_torsion(twist: &FrobeniusTwist, e: &AffElt) -> bool {
    let v = linearization(twist, &e.w).to_int_mat();
    let lambda: Vec<BigInt> = e.t.iter().map(|&x| BigInt::from(x)).collect();
    let one_minus = v.one_minus().expect("square");
    lattice::solve_rational(&one_minus, &lambda).is_some()
}

/// Torsion test by brute-force norm iteration: `N_k(w̃) = 1` for some
/// `k ≤ order(σ)·|W|·exp(Λ_G/Λ)`. Independent of [`is_sigma_torsion`].
pub fn is_sigma_torsion_by_norm(
    datum: &RootDatum,
    twist: &FrobeniusTwist,
    e: &AffElt,
) -> bool {
    let weyl_order = datum.weyl_group().len();
    let exponent = datum
        .fundamental_group()
        .invariant_factors
        .last()
        .map(|d| usize::try_from(d).expect("small torsion"))
        .unwrap_or(1);
    let bound = twist.order * weyl_order * exponent;
    let mut norm = AffElt::identity(datum.rank);
    let mut twisted = e.clone();
    for _ in 1..=bound {
        norm = norm.mul(&twisted);
        twisted = apply_sigma(twist, &twisted);
        if norm.is_identity() {
            return true;
        }
    }
    false
}

/// Twisted conjugation by a translation: `t_μ · (w̃σ) · t_μ⁻¹`, which
/// replaces the translation part `λ` by `λ + (1 − v)μ = μ + λ − ūσ(μ)`.
pub fn twisted_conjugate(
    twist: &FrobeniusTwist,
    mu: &[i64],
    x: &TwistedElt,
) -> TwistedElt {
    let m = AffElt::from_translation(mu.to_vec());
    twisted_conjugate_by(twist, &m, x)
}

/// Twisted conjugation by an arbitrary `g ∈ W̃_G`: `g · w̃ · σ(g)⁻¹`
/// (so that `g(w̃σ)g⁻¹ = (g·w̃·σ(g)⁻¹)σ`).
pub fn twisted_conjugate_by(
    twist: &FrobeniusTwist,
    g: &AffElt,
    x: &TwistedElt,
) -> TwistedElt {
    let base = g.mul(&x.base).mul(&apply_sigma(twist, g).inverse());
    TwistedElt { base }
}

/// Lattice on which ellipticity is measured.
#[derive(Clone, Debug)]
pub enum EllipticityLattice {
    /// The coroot lattice `Λ`.
    Coroot,
    /// The quotient `Λ_G/Λ₀` by a σ- and W-stable sublattice, given by its
    /// basis in ambient coordinates.
    QuotientByStable(Vec<Vec<i64>>),
}

pub(crate) fn lattice_action(
    basis: &IntMat,
    v: &SmallMat,
) -> IntMat {
    // A = B⁻¹·v·B, integral whenever v preserves the lattice spanned by B
    let snf = lattice::smith_normal_form(basis);
    let n = basis.cols();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let col = basis.col(j);
        let col_i64: Vec<i64> =
            col.iter().map(|x| i64::try_from(x).expect("entry fits")).collect();
        let image: Vec<BigInt> =
            v.act_vec(&col_i64).iter().map(|&x| BigInt::from(x)).collect();
        let sol = snf.solve(&image).expect("map preserves the lattice");
        cols.push(sol);
    }
    IntMat::from_cols(cols)
}

/// Is `ūσ` elliptic on the chosen lattice, i.e. is its fixed sublattice 0?
pub fn is_elliptic(
    datum: &RootDatum,
    twist: &FrobeniusTwist,
    wbar: &SmallMat,
    lattice_choice: &EllipticityLattice,
) -> Result<bool, TwistError> {
    let v = linearization(twist, wbar);
    match lattice_choice {
        EllipticityLattice::Coroot => {
            let a = lattice_action(&datum.lambda_basis(), &v);
            Ok(lattice::fixed_sublattice(&a).expect("square").is_empty())
        }
        EllipticityLattice::QuotientByStable(basis) => {
            // validity: generators in Λ_G, stable under σ and all of W
            let in_sublattice = {
                let b = IntMat::from_cols(
                    basis.iter().map(|g| g.iter().map(|&x| BigInt::from(x)).collect()).collect(),
                );
                let snf = lattice::smith_normal_form(&b);
                move |w: &[i64]| {
                    let big: Vec<BigInt> = w.iter().map(|&x| BigInt::from(x)).collect();
                    snf.solve(&big).is_some()
                }
            };
            for g in basis {
                if !datum.in_lambda_g(g) {
                    return Err(TwistError::NotInActingLattice(g.clone()));
                }
                if !in_sublattice(&twist.lattice_map.act_vec(g)) {
                    return Err(TwistError::NotStable(g.clone()));
                }
                for s in &datum.simple_reflections {
                    if !in_sublattice(&s.act_vec(g)) {
                        return Err(TwistError::NotStable(g.clone()));
                    }
                }
            }
            // work in Λ_G coordinates and split off the saturation of Λ₀
            let a_g = lattice_action(&datum.lambda_g_cols, &v);
            let y_cols: Vec<Vec<BigInt>> = basis
                .iter()
                .map(|g| datum.lambda_g_coords(g).expect("validated"))
                .collect();
            let k = if y_cols.is_empty() {
                0
            } else {
                lattice::smith_normal_form(&IntMat::from_cols(y_cols.clone())).rank()
            };
            let r = datum.rank;
            if k == r {
                return Ok(true); // quotient is the zero lattice
            }
            let u = if y_cols.is_empty() {
                IntMat::identity(r)
            } else {
                lattice::smith_normal_form(&IntMat::from_cols(y_cols)).u.clone()
            };
            let t = u.inverse_unimodular().expect("U is unimodular").mul(&a_g).mul(&u);
            // induced action on the free quotient: lower-right block
            let mut q = IntMat::zero(r - k, r - k);
            for i in k..r {
                for j in k..r {
                    q[(i - k, j - k)] = t[(i, j)].clone();
                }
            }
            Ok(lattice::fixed_sublattice(&q).expect("square").is_empty())
        }
    }
}

/// Which lattice conjugates in [`enumerate_fiber_classes`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActingLattice {
    /// The coroot lattice `Λ`.
    Coroot,
    /// The full cocharacter lattice `Λ_G`.
    Cocharacter,
}

fn acting_basis(datum: &RootDatum, acting: ActingLattice) -> IntMat {
    match acting {
        ActingLattice::Coroot => datum.lambda_basis(),
        ActingLattice::Cocharacter => datum.lambda_g_cols.clone(),
    }
}

/// One representative `t_λ·ū` (as a [`TwistedElt`], standing for
/// `t_λ·ū·σ`) per orbit of the acting lattice `L` on the fiber
/// `{t_λ·ū·σ : λ ∈ L}` — the orbits are the cosets of `(1−v)L` in `L`.
/// Deterministic order.
///
/// Errors with a nonzero fixed vector when `ūσ` is not elliptic.
pub fn enumerate_fiber_classes(
    datum: &RootDatum,
    twist: &FrobeniusTwist,
    wbar: &SmallMat,
    acting: ActingLattice,
) -> Result<Vec<TwistedElt>, TwistError> {
    let basis = acting_basis(datum, acting);
    let v = linearization(twist, wbar);
    let a = lattice_action(&basis, &v);
    let one_minus = a.one_minus().expect("square");
    let snf = lattice::smith_normal_form(&one_minus);
    if snf.rank() < datum.rank {
        let fixed = lattice::fixed_sublattice(&a).expect("square");
        let ambient = basis.mul_vec(&fixed[0]);
        let fixed_i64: Vec<i64> =
            ambient.iter().map(|x| i64::try_from(x).expect("fixed vector fits")).collect();
        return Err(TwistError::NotElliptic(fixed_i64));
    }
    let reps = snf.coset_reps().expect("elliptic cokernel is finite");
    let mut out: Vec<TwistedElt> = reps
        .iter()
        .map(|y| {
            let amb = basis.mul_vec(y);
            let t: Vec<i64> =
                amb.iter().map(|x| i64::try_from(x).expect("rep fits")).collect();
            TwistedElt::new(AffElt::new(t, wbar.clone()))
        })
        .collect();
    out.sort_by_key(|x| affine::sort_key(datum, &x.base));
    Ok(out)
}

/// Canonical representative of the `L`-conjugation class of `x`: reduces
/// the translation into the Smith box fundamental domain of `(1−v)L`.
pub fn canonical_class_rep(
    datum: &RootDatum,
    twist: &FrobeniusTwist,
    x: &TwistedElt,
    acting: ActingLattice,
) -> Result<TwistedElt, TwistError> {
    let basis = acting_basis(datum, acting);
    let basis_snf = lattice::smith_normal_form(&basis);
    let t_big: Vec<BigInt> = x.base.t.iter().map(|&c| BigInt::from(c)).collect();
    let y = basis_snf
        .solve(&t_big)
        .ok_or_else(|| TwistError::NotInActingLattice(x.base.t.clone()))?;
    let v = linearization(twist, &x.base.w);
    let a = lattice_action(&basis, &v);
    let snf = lattice::smith_normal_form(&a.one_minus().expect("square"));
    if snf.rank() < datum.rank {
        let fixed = lattice::fixed_sublattice(&a).expect("square");
        let ambient = basis.mul_vec(&fixed[0]);
        let fixed_i64: Vec<i64> =
            ambient.iter().map(|c| i64::try_from(c).expect("fits")).collect();
        return Err(TwistError::NotElliptic(fixed_i64));
    }
    let reduced = snf.reduce_mod_image(&y);
    let amb = basis.mul_vec(&reduced);
    let t: Vec<i64> = amb.iter().map(|c| i64::try_from(c).expect("fits")).collect();
    Ok(TwistedElt::new(AffElt::new(t, x.base.w.clone())))
}

/// Partition coroot-lattice classes into their orbits under the bigger
/// group: two classes merge iff some `μ ∈ Λ_G` with `σ(μ) − μ ∈ Λ`
/// conjugates one to the other. In the elliptic case the merging `μ` is
/// unique modulo `Λ` (asserted). Groups and members in deterministic order.
pub fn refine_by_larger_lattice(
    datum: &RootDatum,
    twist: &FrobeniusTwist,
    classes: &[TwistedElt],
) -> Result<Vec<Vec<TwistedElt>>, TwistError> {
    if classes.is_empty() {
        return Ok(vec![]);
    }
    let wbar = &classes[0].base.w;
    for x in classes {
        if &x.base.w != wbar {
            return Err(TwistError::MixedFiber);
        }
        if !datum.in_lambda(&x.base.t) {
            return Err(TwistError::NotInActingLattice(x.base.t.clone()));
        }
    }
    let v = linearization(twist, wbar);
    // canonical labels for the Λ-classes of the inputs
    let canon: Vec<TwistedElt> = classes
        .iter()
        .map(|x| canonical_class_rep(datum, twist, x, ActingLattice::Coroot))
        .collect::<Result<_, _>>()?;
    // qualifying shift directions: μ ∈ Λ_G/Λ with σ(μ) − μ ∈ Λ; for those,
    // (1−v)μ ∈ Λ, so the shift acts on the Λ-classes
    let qualifying: Vec<Vec<i64>> = datum
        .fundamental_group_reps()
        .into_iter()
        .filter(|mu| {
            let smu = twist.lattice_map.act_vec(mu);
            let diff: Vec<i64> = smu.iter().zip(mu).map(|(a, b)| a - b).collect();
            datum.in_lambda(&diff)
        })
        .collect();

    let n = classes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for mu in &qualifying {
            let shift: Vec<i64> = {
                let vmu = v.act_vec(mu);
                mu.iter().zip(&vmu).map(|(a, b)| a - b).collect()
            };
            let t: Vec<i64> =
                canon[i].base.t.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let moved = canonical_class_rep(
                datum,
                twist,
                &TwistedElt::new(AffElt::new(t, wbar.clone())),
                ActingLattice::Coroot,
            )?;
            if let Some(j) = canon.iter().position(|c| *c == moved) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj] = ri;
                }
            }
        }
        // uniqueness of the conjugating μ mod Λ (elliptic case): each target
        // class is reached by at most one qualifying representative
        let mut targets: Vec<usize> = Vec::new();
        for mu in &qualifying {
            let shift: Vec<i64> = {
                let vmu = v.act_vec(mu);
                mu.iter().zip(&vmu).map(|(a, b)| a - b).collect()
            };
            let t: Vec<i64> =
                canon[i].base.t.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let moved = canonical_class_rep(
                datum,
                twist,
                &TwistedElt::new(AffElt::new(t, wbar.clone())),
                ActingLattice::Coroot,
            )?;
            if let Some(j) = canon.iter().position(|c| *c == moved) {
                assert!(
                    !targets.contains(&j),
                    "two distinct μ mod Λ conjugate the same pair of classes"
                );
                targets.push(j);
            }
        }
    }
    let mut groups: Vec<Vec<TwistedElt>> = Vec::new();
    let mut root_index: Vec<(usize, usize)> = Vec::new(); // (root, group idx)
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_index.iter().find(|(root, _)| *root == r) {
            Some(&(_, g)) => groups[g].push(classes[i].clone()),
            None => {
                root_index.push((r, groups.len()));
                groups.push(vec![classes[i].clone()]);
            }
        }
    }
    for g in &mut groups {
        g.sort_by_key(|x| affine::sort_key(datum, &x.base));
    }
    groups.sort_by_key(|g| affine::sort_key(datum, &g[0].base));
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{
        elements_up_to_length, length, regularity, simple_affine_reflections,
    };
    use crate::cartan::{build_root_datum, CartanType, Isogeny};
    use num_traits::{ToPrimitive, Zero};
    use std::collections::HashSet;

    fn a1() -> RootDatum {
        build_root_datum(CartanType::A, 1, Isogeny::SimplyConnected).unwrap()
    }

    fn a1_adjoint() -> RootDatum {
        build_root_datum(CartanType::A, 1, Isogeny::Adjoint).unwrap()
    }

    fn a2() -> RootDatum {
        build_root_datum(CartanType::A, 2, Isogeny::SimplyConnected).unwrap()
    }

    fn a2_swap() -> (RootDatum, FrobeniusTwist) {
        let d = a2();
        let t = diagram_twist(&d, &[1, 0]).unwrap();
        (d, t)
    }

    #[test]
    fn diagram_twists_validate() {
        let d = a2();
        let s = diagram_twist(&d, &[1, 0]).unwrap();
        assert_eq!(s.order, 2);
        assert_eq!(s.lattice_map.act_vec(&d.cartan[0]), d.cartan[1]);
        // the swap commutes with the highest root: σ s0 σ⁻¹ = s0
        let refl = simple_affine_reflections(&d);
        assert_eq!(apply_sigma(&s, &refl[0]), refl[0]);
        assert_eq!(apply_sigma(&s, &refl[1]), refl[2]);
        // triality on D4 (nodes 1,3,4 around the center 2; 0-indexed 0,2,3)
        let d4 = build_root_datum(CartanType::D, 4, Isogeny::SimplyConnected).unwrap();
        let tri = diagram_twist(&d4, &[2, 1, 3, 0]).unwrap();
        assert_eq!(tri.order, 3);
        // B2 has no diagram symmetry: the induced map is non-integral, and
        // even a hand-supplied matrix fails the Cartan symmetry check
        let b2 = build_root_datum(CartanType::B, 2, Isogeny::SimplyConnected).unwrap();
        assert!(diagram_twist(&b2, &[1, 0]).is_err());
        assert!(matches!(
            FrobeniusTwist::new(&b2, vec![1, 0], SmallMat::identity(2), 1),
            Err(TwistError::DiagramNotSymmetric(_, _))
        ));
        // wrong claimed order is rejected
        let err = FrobeniusTwist::new(&d, vec![1, 0], s.lattice_map.clone(), 4).unwrap_err();
        assert_eq!(err, TwistError::OrderMismatch { claimed: 4, actual: 2 });
    }

    #[test]
    fn sigma_preserves_lengths_and_positivity() {
        let (d, s) = a2_swap();
        for e in elements_up_to_length(&d, 4) {
            let image = apply_sigma(&s, &e);
            assert_eq!(length(&d, &image), length(&d, &e));
            assert_eq!(regularity(&d, &image).unwrap(), regularity(&d, &e).unwrap());
        }
        // σ permutes the simple affine reflections
        let refl = simple_affine_reflections(&d);
        for r in &refl {
            assert!(refl.contains(&apply_sigma(&s, r)));
        }
    }

    #[test]
    fn norms_with_trivial_twist_are_powers() {
        let d = a1();
        let s = trivial_twist(&d);
        let t = AffElt::from_translation(vec![2]);
        assert_eq!(sigma_norm(&s, &t, 3), AffElt::from_translation(vec![6]));
        for e in elements_up_to_length(&d, 3) {
            let mut power = AffElt::identity(1);
            for k in 0..4 {
                assert_eq!(sigma_norm(&s, &e, k), power);
                power = power.mul(&e);
            }
        }
    }

    #[test]
    fn torsion_examples() {
        let d = a1();
        let s = trivial_twist(&d);
        assert!(is_sigma_torsion(&s, &AffElt::identity(1)));
        assert!(!is_sigma_torsion(&s, &AffElt::from_translation(vec![2])));
        let s0 = simple_affine_reflections(&d)[0].clone();
        assert!(is_sigma_torsion(&s, &s0));
    }

    #[test]
    fn torsion_routes_agree() {
        let d = a1();
        let s = trivial_twist(&d);
        for e in elements_up_to_length(&d, 6) {
            assert_eq!(
                is_sigma_torsion(&s, &e),
                is_sigma_torsion_by_norm(&d, &s, &e),
                "disagreement at {e:?}"
            );
        }
        let da = a1_adjoint();
        let sa = trivial_twist(&da);
        for e in elements_up_to_length(&da, 6) {
            assert_eq!(
                is_sigma_torsion(&sa, &e),
                is_sigma_torsion_by_norm(&da, &sa, &e)
            );
        }
        let (d2, s2) = a2_swap();
        for e in elements_up_to_length(&d2, 4) {
            assert_eq!(
                is_sigma_torsion(&s2, &e),
                is_sigma_torsion_by_norm(&d2, &s2, &e),
                "twisted disagreement at {e:?}"
            );
        }
    }

    #[test]
    fn conjugation_law_and_action() {
        let d = a1();
        let s = trivial_twist(&d);
        let x = TwistedElt::new(AffElt::from_finite(d.simple_reflections[0].clone()));
        // μ = 0 fixes
        assert_eq!(twisted_conjugate(&s, &[0], &x), x);
        // μ = α∨: s ↦ t_{2α∨}·s
        let y = twisted_conjugate(&s, &[2], &x);
        assert_eq!(y.base.t, vec![4]); // 2α∨ has ambient coordinates (4)
        assert_eq!(y.base.w, x.base.w);
        // the cited law λ⁻¹(wσ)λ = (λ⁻¹·w·σ(λ))σ is conjugation by −μ
        let lam = AffElt::from_translation(vec![2]);
        let lhs = twisted_conjugate(&s, &[-2], &x).base;
        let rhs = lam.inverse().mul(&x.base).mul(&apply_sigma(&s, &lam));
        assert_eq!(lhs, rhs);
        // group action: conj(μ₁) ∘ conj(μ₂) = conj(μ₁+μ₂)
        let (d2, s2) = a2_swap();
        let z = TwistedElt::new(AffElt::from_finite(d2.simple_reflections[0].clone()));
        for mu1 in [[2i64, -1], [1, 1], [0, 3]] {
            for mu2 in [[-1i64, 2], [3, 0]] {
                let one = twisted_conjugate(&s2, &mu1, &twisted_conjugate(&s2, &mu2, &z));
                let sum: Vec<i64> = mu1.iter().zip(&mu2).map(|(a, b)| a + b).collect();
                let two = twisted_conjugate(&s2, &sum, &z);
                assert_eq!(one, two);
            }
        }
    }

    #[test]
    fn conjugation_preserves_torsion_and_fiber() {
        let d = a2();
        let s = trivial_twist(&d);
        for e in elements_up_to_length(&d, 3) {
            let x = TwistedElt::new(e.clone());
            for mu in [[1i64, 1], [2, -1]] {
                let y = twisted_conjugate(&s, &mu, &x);
                assert_eq!(y.base.w, e.w, "fiber preserved");
                assert_eq!(
                    is_sigma_torsion(&s, &y.base),
                    is_sigma_torsion(&s, &e)
                );
            }
        }
    }

    #[test]
    fn ellipticity() {
        let d = a1();
        let s = trivial_twist(&d);
        let id = SmallMat::identity(1);
        let refl = d.simple_reflections[0].clone();
        assert!(!is_elliptic(&d, &s, &id, &EllipticityLattice::Coroot).unwrap());
        assert!(is_elliptic(&d, &s, &refl, &EllipticityLattice::Coroot).unwrap());
        let d2 = a2();
        let s2 = trivial_twist(&d2);
        let cox = d2.simple_reflections[0].mul(&d2.simple_reflections[1]);
        assert!(is_elliptic(&d2, &s2, &cox, &EllipticityLattice::Coroot).unwrap());
        assert!(!is_elliptic(&d2, &s2, &d2.simple_reflections[0], &EllipticityLattice::Coroot)
            .unwrap());
        // with σ the A2 swap, the longest element w0 = s1s2s1 becomes elliptic:
        // w0σ = −1 on the lattice
        let (d2s, sw) = a2_swap();
        let w0 = d2s.word_matrix(&[0, 1, 0]);
        assert!(!is_elliptic(&d2s, &trivial_twist(&d2s), &w0, &EllipticityLattice::Coroot)
            .unwrap());
        assert!(is_elliptic(&d2s, &sw, &w0, &EllipticityLattice::Coroot).unwrap());
    }

    #[test]
    fn ellipticity_on_quotients() {
        let da = a1_adjoint();
        let s = trivial_twist(&da);
        let id = SmallMat::identity(1);
        // Λ₀ = Λ_G: quotient is zero, everything is elliptic
        let full = EllipticityLattice::QuotientByStable(vec![vec![1]]);
        assert!(is_elliptic(&da, &s, &id, &full).unwrap());
        // Λ₀ = 0: quotient is Λ_G itself
        let zero = EllipticityLattice::QuotientByStable(vec![]);
        assert!(!is_elliptic(&da, &s, &id, &zero).unwrap());
        let refl = da.simple_reflections[0].clone();
        assert!(is_elliptic(&da, &s, &refl, &zero).unwrap());
        // a W-unstable sublattice is rejected
        let d2 = a2();
        let s2 = trivial_twist(&d2);
        let bad = EllipticityLattice::QuotientByStable(vec![d2.cartan[0].clone()]);
        assert!(matches!(
            is_elliptic(&d2, &s2, &SmallMat::identity(2), &bad),
            Err(TwistError::NotStable(_))
        ));
    }

    #[test]
    fn fiber_classes_a1() {
        let d = a1();
        let s = trivial_twist(&d);
        let refl = d.simple_reflections[0].clone();
        let classes =
            enumerate_fiber_classes(&d, &s, &refl, ActingLattice::Coroot).unwrap();
        assert_eq!(classes.len(), 2);
        assert_eq!(classes[0].base, AffElt::from_finite(refl.clone()));
        assert_eq!(classes[1].base, AffElt::new(vec![2], refl.clone()));
        // non-elliptic fiber errors with a fixed vector
        let err =
            enumerate_fiber_classes(&d, &s, &SmallMat::identity(1), ActingLattice::Coroot)
                .unwrap_err();
        match err {
            TwistError::NotElliptic(v) => assert_ne!(v, vec![0]),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn fiber_class_count_is_det() {
        for datum in [a2(), a1_adjoint()] {
            let s = trivial_twist(&datum);
            for w in datum.weyl_group() {
                for acting in [ActingLattice::Coroot, ActingLattice::Cocharacter] {
                    let v = linearization(&s, &w.mat);
                    let det = lattice::det_one_minus(&v.to_int_mat()).unwrap();
                    let classes = enumerate_fiber_classes(&datum, &s, &w.mat, acting);
                    match classes {
                        Ok(c) => {
                            let expected = det.to_i64().unwrap().unsigned_abs() as usize;
                            assert_eq!(c.len(), expected, "w = {:?}", w.word);
                        }
                        Err(TwistError::NotElliptic(_)) => {
                            assert!(det.is_zero(), "w = {:?}", w.word)
                        }
                        Err(other) => panic!("unexpected error {other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn canonical_reps_are_stable_under_conjugation() {
        let d = a2();
        let s = trivial_twist(&d);
        let cox = d.simple_reflections[0].mul(&d.simple_reflections[1]);
        let classes = enumerate_fiber_classes(&d, &s, &cox, ActingLattice::Coroot).unwrap();
        assert_eq!(classes.len(), 3);
        for x in &classes {
            for mu_coeff in [[1i64, 0], [0, 1], [2, -1]] {
                // μ = Σ cᵢαᵢ∨ ∈ Λ
                let mu: Vec<i64> = (0..2)
                    .map(|k| (0..2).map(|i| mu_coeff[i] * d.cartan[i][k]).sum())
                    .collect();
                let y = twisted_conjugate(&s, &mu, x);
                let canon = canonical_class_rep(&d, &s, &y, ActingLattice::Coroot).unwrap();
                assert_eq!(&canon, x, "conjugation moves the canonical rep");
            }
        }
    }

    #[test]
    fn refinement_merges_adjoint_a1() {
        let da = a1_adjoint();
        let s = trivial_twist(&da);
        let refl = da.simple_reflections[0].clone();
        let classes =
            enumerate_fiber_classes(&da, &s, &refl, ActingLattice::Coroot).unwrap();
        assert_eq!(classes.len(), 2);
        let groups = refine_by_larger_lattice(&da, &s, &classes).unwrap();
        assert_eq!(groups.len(), 1, "μ = α∨/2 merges the two classes");
        assert_eq!(groups[0].len(), 2);
        // simply connected: Λ_G = Λ, partition stays discrete
        let d = a1();
        let ssc = trivial_twist(&d);
        let refl_sc = d.simple_reflections[0].clone();
        let classes_sc =
            enumerate_fiber_classes(&d, &ssc, &refl_sc, ActingLattice::Coroot).unwrap();
        let groups_sc = refine_by_larger_lattice(&d, &ssc, &classes_sc).unwrap();
        assert_eq!(groups_sc.len(), 2);
        assert!(groups_sc.iter().all(|g| g.len() == 1));
        // singleton input stays a singleton
        let single = refine_by_larger_lattice(&da, &s, &classes[..1]).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].len(), 1);
    }

    #[test]
    fn refinement_merges_adjoint_a2_coxeter() {
        let da = build_root_datum(CartanType::A, 2, Isogeny::Adjoint).unwrap();
        let s = trivial_twist(&da);
        let cox = da.simple_reflections[0].mul(&da.simple_reflections[1]);
        let classes = enumerate_fiber_classes(&da, &s, &cox, ActingLattice::Coroot).unwrap();
        assert_eq!(classes.len(), 3);
        let groups = refine_by_larger_lattice(&da, &s, &classes).unwrap();
        assert_eq!(groups.len(), 1, "the center Z/3 merges all three classes");
    }

    #[test]
    fn mixed_fiber_is_rejected() {
        let d = a1();
        let s = trivial_twist(&d);
        let a = TwistedElt::new(AffElt::from_finite(d.simple_reflections[0].clone()));
        let b = TwistedElt::new(AffElt::identity(1));
        assert_eq!(
            refine_by_larger_lattice(&d, &s, &[a, b]).unwrap_err(),
            TwistError::MixedFiber
        );
    }

    #[test]
    fn fixed_points_of_twisted_translations() {
        // regression against hand linearization: for w̃ = t_λ·ū and the A2
        // swap, torsion ⟺ λ ∈ (1−v)·Q-span, v = M_ū·M_σ
        let (d, s) = a2_swap();
        let mut torsion_count = 0usize;
        let mut seen = HashSet::new();
        for e in elements_up_to_length(&d, 5) {
            if is_sigma_torsion(&s, &e) {
                torsion_count += 1;
            }
            seen.insert(e);
        }
        assert!(torsion_count > 0);
        assert!(torsion_count < seen.len());
    }
}
