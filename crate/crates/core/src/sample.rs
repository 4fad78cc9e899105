//! Seeded random generators for stress-testing the trace machinery:
//! elliptic lattice automorphisms in small rank, stable sublattices,
//! random modules over `Λ⋊⟨u⟩`, random extended modules over
//! `(Λ_G⋊W)⋊⟨σ⟩`, and families of admissible filtrations.
//!
//! Everything is driven by a caller-supplied [`ChaCha8Rng`] so that test
//! runs are reproducible from a single seed.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cartan::RootDatum;
use crate::cyclo::{Cyc, CycMat};
use crate::gentrace::{
    induce, lambda_g_matrix, orbit_closure, restrict_auto, DeltaElt, DeltaGroup, DeltaModule,
    ExtendedModule, FiltrationSpec,
};
use crate::lattice::{column_span_basis, det_one_minus, IntMat};
use crate::twist::FrobeniusTwist;

/// A reproducible generator from a fixed seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn bigs(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

// ---------------------------------------------------------------------------
// elliptic automorphisms
// ---------------------------------------------------------------------------

/// The finite orders realized by fixed-point-free lattice automorphisms in
/// the given rank (up to rank 3).
pub fn elliptic_orders(rank: usize) -> Vec<u32> {
    match rank {
        1 => vec![2],
        2 => vec![2, 3, 4, 6],
        3 => vec![2, 4, 6],
        _ => vec![2],
    }
}

/// A canonical fixed-point-free automorphism of `Z^rank` of the given
/// order, or `None` when the pair is not realizable.
pub fn elliptic_block(rank: usize, order: u32) -> Option<IntMat> {
    let rot = |r: &[Vec<i64>]| IntMat::from_i64_rows(r);
    match (rank, order) {
        (r, 2) => {
            let rows: Vec<Vec<i64>> = (0..r)
                .map(|i| (0..r).map(|j| if i == j { -1 } else { 0 }).collect())
                .collect();
            Some(rot(&rows))
        }
        (2, 3) => Some(rot(&[vec![0, -1], vec![1, -1]])),
        (2, 4) => Some(rot(&[vec![0, -1], vec![1, 0]])),
        (2, 6) => Some(rot(&[vec![0, -1], vec![1, 1]])),
        (3, 4) => Some(rot(&[vec![0, -1, 0], vec![1, 0, 0], vec![0, 0, -1]])),
        (3, 6) => Some(rot(&[vec![0, -1, 0], vec![1, 1, 0], vec![0, 0, -1]])),
        _ => None,
    }
}

/// A random conjugate `g·u₀·g⁻¹` of the canonical block of the given rank
/// and order, with `g` a product of elementary shears. Returns `None` when
/// the (rank, order) pair is not realizable.
pub fn random_elliptic(rank: usize, order: u32, rng: &mut ChaCha8Rng) -> Option<DeltaGroup> {
    let block = elliptic_block(rank, order)?;
    if rank == 1 {
        return Some(DeltaGroup::new(block).expect("canonical block is valid"));
    }
    let mut g = IntMat::identity(rank);
    let mut g_inv = IntMat::identity(rank);
    for _ in 0..rank + 3 {
        let i = rng.gen_range(0..rank);
        let mut j = rng.gen_range(0..rank - 1);
        if j >= i {
            j += 1;
        }
        let c: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
        let mut shear = IntMat::identity(rank);
        let mut shear_inv = IntMat::identity(rank);
        shear[(i, j)] = BigInt::from(c);
        shear_inv[(i, j)] = BigInt::from(-c);
        g = g.mul(&shear);
        g_inv = shear_inv.mul(&g_inv);
    }
    let u = g.mul(&block).mul(&g_inv);
    Some(DeltaGroup::new(u).expect("conjugate of a valid block is valid"))
}

/// The exponents `k` in `1..order` for which `u^k` is still fixed-point
/// free, i.e. for which generalized traces against `t·u^k` are defined.
pub fn elliptic_exponents(group: &DeltaGroup) -> Vec<u32> {
    (1..group.order)
        .filter(|&k| !det_one_minus(&group.u_pow(i64::from(k))).expect("square").is_zero())
        .collect()
}

/// A random group element `t_λ·u^k` with small translation part and `u^k`
/// fixed-point free.
pub fn random_delta(group: &DeltaGroup, rng: &mut ChaCha8Rng) -> DeltaElt {
    let exps = elliptic_exponents(group);
    let k = exps[rng.gen_range(0..exps.len())];
    let t = (0..group.rank).map(|_| rng.gen_range(-3..=3)).collect();
    group.elt(t, i64::from(k))
}

// ---------------------------------------------------------------------------
// stable sublattices
// ---------------------------------------------------------------------------

/// A random `u`-stable sublattice of positive rank, as a basis matrix with
/// independent columns. Mixes scaled full lattices with orbit spans of
/// random vectors (which can have lower rank).
pub fn random_stable_sublattice(group: &DeltaGroup, rng: &mut ChaCha8Rng) -> IntMat {
    let r = group.rank;
    if rng.gen_bool(0.3) {
        let m = rng.gen_range(1..=3);
        let mut b = IntMat::identity(r);
        for i in 0..r {
            b[(i, i)] = BigInt::from(m);
        }
        return b;
    }
    // span of the u-orbit of one or two random nonzero vectors
    let mut cols: Vec<Vec<BigInt>> = Vec::new();
    let vectors = if rng.gen_bool(0.3) { 2 } else { 1 };
    for _ in 0..vectors {
        let mut v: Vec<i64> = (0..r).map(|_| rng.gen_range(-2..=2)).collect();
        if v.iter().all(|&x| x == 0) {
            v[rng.gen_range(0..r)] = 1;
        }
        let mut w = bigs(&v);
        for _ in 0..group.order {
            cols.push(w.clone());
            w = group.u().mul_vec(&w);
        }
    }
    let basis = column_span_basis(&IntMat::from_cols(cols));
    IntMat::from_cols(basis)
}

// ---------------------------------------------------------------------------
// random modules
// ---------------------------------------------------------------------------

/// All vectors in `{0,…,m−1}^r`, in odometer order.
fn residues(m: i64, r: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..m).map(move |d| {
                    let mut w = v.clone();
                    w.push(d);
                    w
                })
            })
            .collect();
    }
    out
}

fn reduce_mod(v: &[BigInt], m: i64) -> Vec<i64> {
    v.iter().map(|x| (x % m + m) % m).map(|x| i64::try_from(&x).expect("small")).collect()
}

/// Permutation matrix of the affine map `x ↦ a·x + b` on `(Z/m)^r`.
fn affine_perm(
    index: &HashMap<Vec<i64>, usize>,
    points: &[Vec<i64>],
    a: &IntMat,
    b: &[i64],
    m: i64,
) -> CycMat {
    let n = points.len();
    let mut out = CycMat::zero(n, n);
    for (j, x) in points.iter().enumerate() {
        let mut y = a.mul_vec(&bigs(x));
        for (yi, bi) in y.iter_mut().zip(b) {
            *yi += *bi;
        }
        let target = index[&reduce_mod(&y, m)];
        out[(target, j)] = Cyc::one();
    }
    out
}

/// The translation action of `Λ` on `C[Λ/mΛ]` together with the
/// permutation induced by `u`; relations hold by construction.
pub fn quotient_permutation_module(group: &DeltaGroup, m: i64) -> DeltaModule {
    let points = residues(m, group.rank);
    let index: HashMap<Vec<i64>, usize> =
        points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let rho = (0..group.rank)
        .map(|j| {
            let mut b = vec![0i64; group.rank];
            b[j] = 1;
            affine_perm(&index, &points, &IntMat::identity(group.rank), &b, m)
        })
        .collect();
    let u_action = affine_perm(&index, &points, group.u(), &vec![0; group.rank], m);
    DeltaModule::FiniteDim { rho, u_action }
}

fn random_root_of_unity(rng: &mut ChaCha8Rng) -> Cyc {
    let orders = [1u32, 2, 3, 4, 6];
    let n = orders[rng.gen_range(0..orders.len())];
    Cyc::root_of_unity(n, i64::from(rng.gen_range(0..n)))
}

/// A `u`-invariant character `λ ↦ ζ_M^{aᵀλ}` of `Λ` with a random scalar
/// `u`-action.
fn random_invariant_line(group: &DeltaGroup, rng: &mut ChaCha8Rng) -> DeltaModule {
    let ms = [2i64, 3, 4];
    let m = ms[rng.gen_range(0..ms.len())];
    let u_t = group.u().transpose();
    let invariant: Vec<Vec<i64>> = residues(m, group.rank)
        .into_iter()
        .filter(|a| reduce_mod(&u_t.mul_vec(&bigs(a)), m) == *a)
        .collect();
    let a = &invariant[rng.gen_range(0..invariant.len())];
    let values = a.iter().map(|&ai| Cyc::root_of_unity(u32::try_from(m).expect("small"), ai)).collect();
    DeltaModule::character_line(values, random_root_of_unity(rng))
}

/// An invertible fiber of the given dimension: a permutation matrix times
/// a diagonal matrix of roots of unity.
fn random_fiber(dim: usize, rng: &mut ChaCha8Rng) -> CycMat {
    let mut perm: Vec<usize> = (0..dim).collect();
    for i in (1..dim).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut out = CycMat::zero(dim, dim);
    for (j, &target) in perm.iter().enumerate() {
        out[(target, j)] = random_root_of_unity(rng);
    }
    out
}

/// A random module over `Λ⋊⟨u⟩`, valid by construction. `depth` bounds the
/// nesting of induction, direct sum, and twist; `budget` bounds the fiber
/// dimension.
pub fn random_module(
    group: &DeltaGroup,
    rng: &mut ChaCha8Rng,
    depth: usize,
    budget: usize,
) -> DeltaModule {
    let r = group.rank;
    let leaf = |rng: &mut ChaCha8Rng, budget: usize| -> DeltaModule {
        let perm_dim = (2i64).checked_pow(r as u32).map_or(usize::MAX, |d| d as usize);
        match rng.gen_range(0..4) {
            0 if perm_dim <= budget => quotient_permutation_module(group, 2),
            1 if r <= 2 && 3usize.pow(r as u32) <= budget => {
                quotient_permutation_module(group, 3)
            }
            2 => DeltaModule::Free { fiber: random_fiber(rng.gen_range(1..=2.min(budget)), rng) },
            _ => random_invariant_line(group, rng),
        }
    };
    if depth == 0 {
        return leaf(rng, budget);
    }
    match rng.gen_range(0..5) {
        // induction from a random stable sublattice
        0 => {
            let basis = random_stable_sublattice(group, rng);
            let inner_u = restrict_auto(group.u(), &basis).expect("stable by construction");
            let inner_group = DeltaGroup::new(inner_u).expect("restriction has finite order");
            let inner = random_module(&inner_group, rng, depth - 1, budget);
            induce(basis, inner)
        }
        1 => {
            let half = (budget / 2).max(1);
            DeltaModule::DirectSum(vec![
                random_module(group, rng, depth - 1, half),
                random_module(group, rng, depth - 1, half),
            ])
        }
        2 => DeltaModule::Twist {
            character: random_root_of_unity(rng),
            module: Box::new(random_module(group, rng, depth - 1, budget)),
        },
        _ => leaf(rng, budget),
    }
}

// ---------------------------------------------------------------------------
// random filtrations
// ---------------------------------------------------------------------------

/// `count` pairwise distinct admissible filtrations for the group: varied
/// step sets (always containing the basic orbit, so generation is
/// guaranteed) and varied seed slots.
pub fn random_filtrations(
    group: &DeltaGroup,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Vec<FiltrationSpec> {
    let r = group.rank;
    let mut base: Vec<Vec<i64>> = vec![vec![0; r]];
    for i in 0..r {
        let mut e = vec![0i64; r];
        e[i] = 1;
        base.push(e.clone());
        e[i] = -1;
        base.push(e);
    }
    let mut out: Vec<FiltrationSpec> = vec![FiltrationSpec::default_for(group)];
    while out.len() < count {
        let mut seeds = base.clone();
        for _ in 0..rng.gen_range(0..=2) {
            seeds.push((0..r).map(|_| rng.gen_range(-2..=2)).collect());
        }
        let spec = FiltrationSpec {
            steps: orbit_closure(group.u(), &seeds),
            seeds: vec![(0..r).map(|_| rng.gen_range(-2..=2)).collect()],
        };
        if spec.validated(group).is_ok() && !out.contains(&spec) {
            out.push(spec);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// random extended modules
// ---------------------------------------------------------------------------

/// The permutation action of `(Λ_G⋊W)⋊⟨σ⟩` on `C[Λ_G/mΛ_G]` (coordinates
/// taken in the datum's cocharacter basis); relations hold by construction.
pub fn extended_permutation_module(
    datum: &RootDatum,
    twist: &FrobeniusTwist,
    m: i64,
) -> ExtendedModule {
    let r = datum.rank;
    let points = residues(m, r);
    let index: HashMap<Vec<i64>, usize> =
        points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let zero = vec![0i64; r];
    let rho = (0..r)
        .map(|j| {
            let mut b = vec![0i64; r];
            b[j] = 1;
            affine_perm(&index, &points, &IntMat::identity(r), &b, m)
        })
        .collect();
    let w_gens = (0..r)
        .map(|i| {
            let w = lambda_g_matrix(datum, &datum.simple_reflections[i]);
            affine_perm(&index, &points, &w, &zero, m)
        })
        .collect();
    let sigma_lat = lambda_g_matrix(datum, &twist.lattice_map);
    let sigma = affine_perm(&index, &points, &sigma_lat, &zero, m);
    ExtendedModule { rho, w_gens, sigma }
}

/// Block-diagonal direct sum of two extended modules.
pub fn extended_direct_sum(a: &ExtendedModule, b: &ExtendedModule) -> ExtendedModule {
    let block = |x: &CycMat, y: &CycMat| -> CycMat {
        let (dx, dy) = (x.rows(), y.rows());
        let mut out = CycMat::zero(dx + dy, dx + dy);
        for i in 0..dx {
            for j in 0..dx {
                out[(i, j)] = x[(i, j)].clone();
            }
        }
        for i in 0..dy {
            for j in 0..dy {
                out[(dx + i, dx + j)] = y[(i, j)].clone();
            }
        }
        out
    };
    ExtendedModule {
        rho: a.rho.iter().zip(&b.rho).map(|(x, y)| block(x, y)).collect(),
        w_gens: a.w_gens.iter().zip(&b.w_gens).map(|(x, y)| block(x, y)).collect(),
        sigma: block(&a.sigma, &b.sigma),
    }
}

/// A `(W,σ)`-invariant character line of `Λ_G` with scalar reflection and
/// `σ` actions.
fn random_extended_line(
    datum: &RootDatum,
    twist: &FrobeniusTwist,
    rng: &mut ChaCha8Rng,
) -> ExtendedModule {
    let r = datum.rank;
    let ms = [2i64, 3];
    let m = ms[rng.gen_range(0..ms.len())];
    let gens: Vec<IntMat> = (0..r)
        .map(|i| lambda_g_matrix(datum, &datum.simple_reflections[i]).transpose())
        .chain([lambda_g_matrix(datum, &twist.lattice_map).transpose()])
        .collect();
    let invariant: Vec<Vec<i64>> = residues(m, r)
        .into_iter()
        .filter(|a| gens.iter().all(|g| reduce_mod(&g.mul_vec(&bigs(a)), m) == *a))
        .collect();
    let a = &invariant[rng.gen_range(0..invariant.len())];
    let rho = a
        .iter()
        .map(|&ai| CycMat::scalar(1, &Cyc::root_of_unity(u32::try_from(m).expect("small"), ai)))
        .collect();
    // trivial or sign character of W; σ scalar of compatible order
    let eps = if rng.gen_bool(0.5) { Cyc::one() } else { Cyc::from_int(-1) };
    let order = u32::try_from(twist.order).expect("small order");
    let sigma_scalar = Cyc::root_of_unity(order, i64::from(rng.gen_range(0..order)));
    ExtendedModule {
        w_gens: vec![CycMat::scalar(1, &eps); r],
        sigma: CycMat::scalar(1, &sigma_scalar),
        rho,
    }
}

/// A random extended module, valid by construction: permutation modules on
/// finite quotients, invariant lines, sign tensors, σ-scalar twists, and
/// direct sums.
pub fn random_extended_module(
    datum: &RootDatum,
    twist: &FrobeniusTwist,
    rng: &mut ChaCha8Rng,
) -> ExtendedModule {
    let base = match rng.gen_range(0..3) {
        0 => extended_permutation_module(datum, twist, 2),
        1 if datum.rank <= 2 => extended_permutation_module(datum, twist, 3),
        _ => random_extended_line(datum, twist, rng),
    };
    let mut module = if rng.gen_bool(0.3) {
        extended_direct_sum(&base, &random_extended_line(datum, twist, rng))
    } else {
        base
    };
    // tensor by a character trivial on Λ_G: a sign on W and a compatible
    // root of unity on σ
    if rng.gen_bool(0.5) {
        let minus = Cyc::from_int(-1);
        for w in &mut module.w_gens {
            *w = w.scale(&minus);
        }
        if twist.order % 2 == 0 && rng.gen_bool(0.5) {
            module.sigma = module.sigma.scale(&minus);
        }
    }
    if twist.order > 1 && rng.gen_bool(0.5) {
        let order = u32::try_from(twist.order).expect("small order");
        let scalar = Cyc::root_of_unity(order, i64::from(rng.gen_range(0..order)));
        module.sigma = module.sigma.scale(&scalar);
    }
    module
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{build_root_datum, CartanType, Isogeny};
    use crate::gentrace::{gen_trace, verify_trace_formula, weyl_averaged_trace};
    use crate::twist::{diagram_twist, trivial_twist};

    #[test]
    fn elliptic_samples_have_the_claimed_order() {
        let mut r = rng(7);
        for rank in 1..=3 {
            for order in elliptic_orders(rank) {
                for _ in 0..5 {
                    let g = random_elliptic(rank, order, &mut r).expect("realizable");
                    assert_eq!(g.order, order);
                    assert!(g.is_elliptic());
                    assert_eq!(g.rank, rank);
                }
            }
        }
        assert!(random_elliptic(3, 3, &mut r).is_none());
    }

    #[test]
    fn stable_sublattices_restrict() {
        let mut r = rng(11);
        for rank in 1..=3 {
            for order in elliptic_orders(rank) {
                let g = random_elliptic(rank, order, &mut r).unwrap();
                for _ in 0..10 {
                    let basis = random_stable_sublattice(&g, &mut r);
                    assert!(basis.cols() > 0);
                    let inner = restrict_auto(g.u(), &basis).expect("stable by construction");
                    assert!(DeltaGroup::new(inner).is_ok());
                }
            }
        }
    }

    #[test]
    fn random_modules_validate_and_trace() {
        let mut r = rng(23);
        for rank in 1..=2 {
            for order in elliptic_orders(rank) {
                let g = random_elliptic(rank, order, &mut r).unwrap();
                for _ in 0..5 {
                    let m = random_module(&g, &mut r, 2, 9);
                    m.validate(&g).expect("samples are valid by construction");
                    let delta = random_delta(&g, &mut r);
                    let specs = random_filtrations(&g, &mut r, 3);
                    let values: Vec<Cyc> = specs
                        .iter()
                        .map(|s| gen_trace(&g, &m, &delta, s).unwrap())
                        .collect();
                    assert!(values.windows(2).all(|w| w[0] == w[1]));
                }
            }
        }
    }

    #[test]
    fn random_formula_smoke() {
        let mut r = rng(31);
        let g = random_elliptic(2, 4, &mut r).unwrap();
        let m = random_module(&g, &mut r, 2, 9);
        let spec = FiltrationSpec::default_for(&g);
        let report = verify_trace_formula(&g, &m, &spec).unwrap();
        assert!(report.equal);
    }

    #[test]
    fn random_extended_modules_validate() {
        let mut r = rng(41);
        let a1 = build_root_datum(CartanType::A, 1, Isogeny::SimplyConnected).unwrap();
        let a2 = build_root_datum(CartanType::A, 2, Isogeny::SimplyConnected).unwrap();
        let cases = [
            (a1.clone(), trivial_twist(&a1)),
            (a2.clone(), trivial_twist(&a2)),
            (a2.clone(), diagram_twist(&a2, &[1, 0]).unwrap()),
        ];
        for (datum, twist) in &cases {
            for _ in 0..5 {
                let m = random_extended_module(datum, twist, &mut r);
                m.validate(datum, twist).expect("samples are valid by construction");
                let report = weyl_averaged_trace(datum, twist, &m).unwrap();
                assert_eq!(report.averaged, report.invariants);
            }
        }
    }
}
