//! The invariant suite behind `weylkit selftest`: one named check per
//! library layer, each deterministic in `(seed, bound)`. The checks run
//! through the deterministic parallel mapper, so the report is
//! byte-identical for every `WEYLKIT_THREADS` value.

use serde::Serialize;

use weylkit_core::affine::{
    bruhat_leq, demazure, elements_up_to_length, filtration_fg_check, find_additivity_witness,
    hilbert_basis, inversion_count, is_m_regular, length, longest_element, min_coset_reps,
    parabolic_subgroup, parse_affine_word, reduced_word, regularity, simple_affine_reflections,
    simple_affine_root, AffElt,
};
use weylkit_core::cartan::{build_root_datum, pairing, CartanType, Isogeny, RootDatum};
use weylkit_core::cyclo::Cyc;
use weylkit_core::gentrace::{
    conjugation_invariance_check, gen_trace, gen_trace_default, induce, induced_trace, restrict_auto,
    verify_trace_formula, weyl_averaged_trace, DeltaGroup, DeltaModule, FiltrationSpec,
};
use weylkit_core::lattice::{self, IntMat};
use weylkit_core::packets::{packet_classes, packet_partition, verify_eq_m, PacketDescription};
use weylkit_core::sample;
use weylkit_core::twist::{
    diagram_twist, is_sigma_torsion, is_sigma_torsion_by_norm, trivial_twist,
};
use weylkit_core::util;

use rand::Rng;

#[derive(Serialize)]
pub struct CheckOut {
    pub name: &'static str,
    pub cases: usize,
    pub ok: bool,
}

#[derive(Serialize)]
pub struct SelftestOut {
    pub checks: Vec<CheckOut>,
    pub all_ok: bool,
}

type CheckFn = fn(u64, usize) -> (usize, bool);

pub fn run(seed: u64, bound: usize) -> SelftestOut {
    let checks: &[(&'static str, CheckFn)] = &[
        ("root-datum-tables", check_root_data),
        ("affine-length-routes", check_lengths),
        ("demazure-laws", check_demazure),
        ("regularity", check_regularity),
        ("group-generation", check_generation),
        ("torsion-routes", check_torsion),
        ("lattice-identities", check_lattice),
        ("trace-formula", check_trace_formula),
        ("induced-traces", check_induced),
        ("conjugation-invariance", check_conjugation),
        ("packet-counts", check_packets),
        ("weyl-averaging", check_averaging),
    ];
    let results = util::par_map(checks, |&(name, f)| {
        let (cases, ok) = f(seed, bound);
        CheckOut { name, cases, ok }
    });
    let all_ok = results.iter().all(|c| c.ok);
    SelftestOut { checks: results, all_ok }
}

fn datum(t: CartanType, rank: usize, iso: Isogeny) -> RootDatum {
    build_root_datum(t, rank, iso).expect("valid datum")
}

// ---------------------------------------------------------------------------
// cartan
// ---------------------------------------------------------------------------

/// Root counts, Weyl orders, and fundamental groups against the classical
/// tables, plus the duality `⟨α_i, α_j∨⟩ = cartan[j][i]`.
fn check_root_data(_seed: u64, _bound: usize) -> (usize, bool) {
    use CartanType::*;
    use Isogeny::{Adjoint, SimplyConnected as Sc};
    let table: &[(CartanType, usize, Isogeny, usize, usize, &[i64])] = &[
        (A, 1, Sc, 2, 2, &[]),
        (A, 1, Adjoint, 2, 2, &[2]),
        (A, 2, Sc, 6, 6, &[]),
        (A, 2, Adjoint, 6, 6, &[3]),
        (A, 3, Sc, 12, 24, &[]),
        (A, 3, Adjoint, 12, 24, &[4]),
        (B, 2, Sc, 8, 8, &[]),
        (B, 2, Adjoint, 8, 8, &[2]),
        (C, 2, Sc, 8, 8, &[]),
        (C, 3, Sc, 18, 48, &[]),
        (D, 4, Sc, 24, 192, &[]),
        (G, 2, Sc, 12, 12, &[]),
        (G, 2, Adjoint, 12, 12, &[]),
        (F, 4, Sc, 48, 1152, &[]),
    ];
    let mut cases = 0;
    let mut ok = true;
    for (t, rank, iso, num_roots, weyl_order, factors) in table {
        let d = datum(*t, *rank, iso.clone());
        ok &= d.roots.len() == *num_roots;
        ok &= d.weyl_group().len() == *weyl_order;
        let fg: Vec<i64> = d
            .fundamental_group()
            .invariant_factors
            .iter()
            .map(|x| i64::try_from(x).expect("small factor"))
            .collect();
        ok &= fg == *factors;
        // ⟨α_i, α_j∨⟩: the i-th simple root is the i-th coordinate
        // functional, the j-th simple coroot is the row cartan[j]
        for i in 0..*rank {
            for j in 0..*rank {
                let mut alpha = vec![0i64; *rank];
                alpha[i] = 1;
                ok &= pairing(&alpha, &d.cartan[j]) == d.cartan[j][i];
            }
        }
        cases += 1;
    }
    (cases, ok)
}

// ---------------------------------------------------------------------------
// affine
// ---------------------------------------------------------------------------

/// Closed-form length = reduced-word length = brute-force inversion count,
/// and word rendering round-trips, on every element up to the bound.
fn check_lengths(_seed: u64, bound: usize) -> (usize, bool) {
    let data = [
        datum(CartanType::A, 1, Isogeny::SimplyConnected),
        datum(CartanType::A, 2, Isogeny::SimplyConnected),
        datum(CartanType::C, 2, Isogeny::SimplyConnected),
        datum(CartanType::A, 2, Isogeny::Adjoint),
    ];
    let mut cases = 0;
    let mut ok = true;
    for d in &data {
        for e in elements_up_to_length(d, bound) {
            let l = length(d, &e);
            let (word, omega) = reduced_word(d, &e);
            ok &= word.len() == l;
            ok &= inversion_count(d, &e) == l;
            ok &= length(d, &omega) == 0;
            let rendered = crate::render_affine(d, &e);
            ok &= parse_affine_word(d, &rendered).map(|back| back == e).unwrap_or(false);
            cases += 1;
        }
    }
    (cases, ok)
}

/// Identity and idempotence laws, associativity on seeded triples, and
/// compatibility of the join product with length and Bruhat order.
fn check_demazure(seed: u64, bound: usize) -> (usize, bool) {
    let mut rng = sample::rng(seed ^ 0x01);
    let mut cases = 0;
    let mut ok = true;
    for d in [
        datum(CartanType::A, 2, Isogeny::SimplyConnected),
        datum(CartanType::A, 1, Isogeny::Adjoint),
    ] {
        let els = elements_up_to_length(&d, bound);
        let id = AffElt::identity(d.rank);
        for s in simple_affine_reflections(&d) {
            ok &= demazure(&d, &s, &s) == s;
            cases += 1;
        }
        for e in &els {
            ok &= demazure(&d, &id, e) == *e && demazure(&d, e, &id) == *e;
            cases += 1;
        }
        for _ in 0..30 {
            let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
                els[rng.gen_range(0..els.len())].clone()
            };
            let (u, v, w) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let uv = demazure(&d, &u, &v);
            ok &= demazure(&d, &uv, &w) == demazure(&d, &u, &demazure(&d, &v, &w));
            ok &= length(&d, &uv) >= length(&d, &u).max(length(&d, &v));
            // the factors sit below the join once shifted into its length-zero
            // component: u·ω_v and ω_u·v, where ω is the component of the
            // other factor
            let (_, omega_u) = reduced_word(&d, &u);
            let (_, omega_v) = reduced_word(&d, &v);
            ok &= bruhat_leq(&d, &u.mul(&omega_v), &uv);
            ok &= bruhat_leq(&d, &omega_u.mul(&v), &uv);
            cases += 1;
        }
    }
    (cases, ok)
}

/// `is_m_regular(e, m) ⟺ m ≤ regularity(e)`, and the translation closed
/// form `regularity(t_λ) = min_α |⟨α, λ⟩|`.
fn check_regularity(_seed: u64, bound: usize) -> (usize, bool) {
    let mut cases = 0;
    let mut ok = true;
    for d in [
        datum(CartanType::A, 2, Isogeny::SimplyConnected),
        datum(CartanType::C, 2, Isogeny::SimplyConnected),
    ] {
        for e in elements_up_to_length(&d, bound) {
            let reg = regularity(&d, &e).expect("valid element");
            for m in 0..=reg + 2 {
                ok &= is_m_regular(&d, &e, m).expect("valid element") == (m <= reg);
            }
            cases += 1;
        }
        for x in -2i64..=2 {
            for y in -2i64..=2 {
                let lam: Vec<i64> = (0..d.rank)
                    .map(|k| x * d.cartan[0][k] + y * d.cartan[1][k])
                    .collect();
                let e = AffElt::from_translation(lam.clone());
                let expected = d
                    .roots
                    .iter()
                    .map(|a| pairing(a, &lam).unsigned_abs() as usize)
                    .min()
                    .expect("nonempty root system");
                ok &= regularity(&d, &e).expect("valid element") == expected;
                cases += 1;
            }
        }
    }
    (cases, ok)
}

/// Parahoric subgroups, minimal coset representatives, the length-additivity
/// witness, filtration finite generation, and Hilbert bases.
fn check_generation(_seed: u64, bound: usize) -> (usize, bool) {
    let mut cases = 0;
    let mut ok = true;
    let a2 = datum(CartanType::A, 2, Isogeny::SimplyConnected);

    // finite parahoric {s1, s2} is the finite Weyl group; its longest
    // element has one inversion per positive root
    let finite = parabolic_subgroup(&a2, &[1, 2], 100).expect("finite");
    ok &= finite.len() == 6;
    let w0 = longest_element(&a2, &[1, 2]).expect("finite parahoric");
    ok &= length(&a2, &w0) == a2.num_positive();
    // {s0, s1} generates another copy of S3
    ok &= parabolic_subgroup(&a2, &[0, 1], 100).expect("finite").len() == 6;
    cases += 3;

    // every element factors as (minimal coset rep)·(finite part) with
    // additive lengths
    let finite_simples: Vec<_> = (1..=a2.rank).map(|i| simple_affine_root(&a2, i)).collect();
    let reps = min_coset_reps(&a2, &finite_simples, bound).expect("positive roots");
    for e in elements_up_to_length(&a2, bound) {
        let mut y = AffElt::identity(a2.rank);
        let mut x = e.clone();
        let refl = simple_affine_reflections(&a2);
        loop {
            let descent = (1..=a2.rank)
                .find(|&i| length(&a2, &x.mul(&refl[i])) < length(&a2, &x));
            match descent {
                Some(i) => {
                    x = x.mul(&refl[i]);
                    y = refl[i].mul(&y);
                }
                None => break,
            }
        }
        ok &= reps.contains(&x);
        ok &= length(&a2, &e) == length(&a2, &x) + length(&a2, &y);
        cases += 1;
    }

    // length-additivity witness over a dominant direction
    let a1 = datum(CartanType::A, 1, Isogeny::SimplyConnected);
    let s0 = simple_affine_reflections(&a1)[0].clone();
    ok &= find_additivity_witness(&a1, &[vec![2]], &s0, 3).is_ok();
    let w = parse_affine_word(&a2, "s1*s2").expect("valid word");
    ok &= find_additivity_witness(&a2, &[vec![1, 1]], &w, 3).is_ok();
    cases += 2;

    // filtration layers are generated in low degree
    ok &= filtration_fg_check(&a1, &[vec![2]], 8).map(|m| m <= 8).unwrap_or(false);
    let basis: Vec<Vec<i64>> = vec![a2.cartan[0].clone(), a2.cartan[1].clone()];
    ok &= filtration_fg_check(&a2, &basis, 10).map(|m| m <= 10).unwrap_or(false);
    cases += 2;

    // Hilbert bases: saturation of a numerical semigroup, the quadrant, and
    // the classic two-ray cone that needs an interior generator
    ok &= hilbert_basis(&[vec![2], vec![3]]).expect("pointed") == vec![vec![1]];
    ok &= hilbert_basis(&[vec![1, 0], vec![0, 1], vec![1, 1]]).expect("pointed")
        == vec![vec![0, 1], vec![1, 0]];
    ok &= hilbert_basis(&[vec![2, 1], vec![1, 2]]).expect("pointed")
        == vec![vec![1, 1], vec![1, 2], vec![2, 1]];
    cases += 3;

    (cases, ok)
}

// ---------------------------------------------------------------------------
// twist
// ---------------------------------------------------------------------------

/// The rational-fixed-point torsion test agrees with norm iteration, with
/// and without a diagram twist, including on the length-zero subgroup.
fn check_torsion(_seed: u64, bound: usize) -> (usize, bool) {
    let mut cases = 0;
    let mut ok = true;
    let a2 = datum(CartanType::A, 2, Isogeny::SimplyConnected);
    let a1_ad = datum(CartanType::A, 1, Isogeny::Adjoint);
    let flip = diagram_twist(&a2, &[1, 0]).expect("A2 diagram flip");
    let setups = [
        (&a2, trivial_twist(&a2)),
        (&a2, flip),
        (&a1_ad, trivial_twist(&a1_ad)),
    ];
    for (d, twist) in &setups {
        for e in elements_up_to_length(d, bound) {
            ok &= is_sigma_torsion(twist, &e) == is_sigma_torsion_by_norm(d, twist, &e);
            cases += 1;
        }
    }
    // a nonzero translation is never torsion without a twist
    let t = AffElt::from_translation(a2.cartan[0].clone());
    ok &= !is_sigma_torsion(&trivial_twist(&a2), &t);
    cases += 1;
    (cases, ok)
}

// ---------------------------------------------------------------------------
// lattice
// ---------------------------------------------------------------------------

/// `|Λ/(1−u)Λ| = det(1−u) = Σ(−1)^i Tr(u, ∧^i Λ)` on random elliptic
/// automorphisms, and the degenerate ranks on non-elliptic ones.
fn check_lattice(seed: u64, _bound: usize) -> (usize, bool) {
    let mut rng = sample::rng(seed ^ 0x02);
    let mut cases = 0;
    let mut ok = true;
    for rank in 1..=3 {
        for order in sample::elliptic_orders(rank) {
            for _ in 0..3 {
                let g = sample::random_elliptic(rank, order, &mut rng).expect("realizable");
                let u = g.u();
                let det = lattice::det_one_minus(u).expect("square");
                let alt = lattice::alt_exterior_trace(u).expect("square");
                ok &= det == alt;
                let group = lattice::coinvariants(u).expect("square");
                ok &= group.order() == Some(det.magnitude().clone().into());
                ok &= lattice::fixed_sublattice(u).expect("square").is_empty();
                cases += 1;
            }
        }
    }
    let id = IntMat::identity(2);
    ok &= lattice::coinvariants(&id).expect("square").free_rank == 2;
    ok &= lattice::det_one_minus(&id).expect("square") == 0.into();
    let shear = IntMat::from_i64_rows(&[vec![1, 1], vec![0, 1]]);
    let shear_co = lattice::coinvariants(&shear).expect("square");
    ok &= shear_co.free_rank == 1 && shear_co.invariant_factors.is_empty();
    cases += 2;
    (cases, ok)
}

// ---------------------------------------------------------------------------
// gentrace
// ---------------------------------------------------------------------------

/// The homology trace formula on random modules, plus independence of the
/// generalized trace from the choice of filtration.
fn check_trace_formula(seed: u64, _bound: usize) -> (usize, bool) {
    let mut rng = sample::rng(seed ^ 0x03);
    let mut cases = 0;
    let mut ok = true;
    for (rank, order) in [(1usize, 2u32), (2, 2), (2, 3), (2, 4)] {
        let group = sample::random_elliptic(rank, order, &mut rng).expect("realizable");
        let module = sample::random_module(&group, &mut rng, 2, 6);
        let report = verify_trace_formula(&group, &module, &FiltrationSpec::default_for(&group))
            .expect("formula runs");
        ok &= report.equal;
        cases += 1;
    }
    let group = sample::random_elliptic(2, 4, &mut rng).expect("realizable");
    let module = sample::random_module(&group, &mut rng, 1, 4);
    let delta = sample::random_delta(&group, &mut rng);
    let values: Vec<Cyc> = sample::random_filtrations(&group, &mut rng, 3)
        .iter()
        .map(|spec| gen_trace(&group, &module, &delta, spec).expect("trace runs"))
        .collect();
    ok &= values.windows(2).all(|w| w[0] == w[1]);
    cases += values.len();
    (cases, ok)
}

/// The slot-sum route to the induced trace equals the direct generalized
/// trace of the induced module.
fn check_induced(seed: u64, _bound: usize) -> (usize, bool) {
    let mut rng = sample::rng(seed ^ 0x04);
    let mut cases = 0;
    let mut ok = true;
    for (rank, order) in [(1usize, 2u32), (2, 2), (2, 4)] {
        let group = sample::random_elliptic(rank, order, &mut rng).expect("realizable");
        let basis = sample::random_stable_sublattice(&group, &mut rng);
        let inner_group = DeltaGroup::new(restrict_auto(group.u(), &basis).expect("stable"))
            .expect("finite order");
        let inner = sample::random_module(&inner_group, &mut rng, 1, 4);
        let delta = sample::random_delta(&group, &mut rng);
        let by_slots =
            induced_trace(&group, &basis, &inner, &delta, None).expect("induced trace runs");
        let direct = gen_trace_default(&group, &induce(basis, inner), &delta)
            .expect("direct trace runs");
        ok &= by_slots == direct;
        cases += 1;
    }
    (cases, ok)
}

/// The generalized trace is invariant under conjugation by translations.
fn check_conjugation(seed: u64, _bound: usize) -> (usize, bool) {
    let mut rng = sample::rng(seed ^ 0x05);
    let mut cases = 0;
    let mut ok = true;
    for (rank, order) in [(1usize, 2u32), (2, 3), (2, 6)] {
        let group = sample::random_elliptic(rank, order, &mut rng).expect("realizable");
        let module = sample::random_module(&group, &mut rng, 1, 4);
        let delta = sample::random_delta(&group, &mut rng);
        let mu: Vec<i64> = (0..rank).map(|_| rng.gen_range(-2..=2)).collect();
        ok &= conjugation_invariance_check(
            &group,
            &module,
            &delta,
            &mu,
            &FiltrationSpec::default_for(&group),
        )
        .expect("check runs");
        cases += 1;
    }
    (cases, ok)
}

// ---------------------------------------------------------------------------
// packets
// ---------------------------------------------------------------------------

/// Class counts against determinants, partition structure under the bigger
/// lattice, and the homology decomposition on both rank-one and Coxeter
/// fibers.
fn check_packets(_seed: u64, _bound: usize) -> (usize, bool) {
    let mut cases = 0;
    let mut ok = true;

    let a1 = datum(CartanType::A, 1, Isogeny::SimplyConnected);
    let p = PacketDescription::new(
        a1.clone(),
        trivial_twist(&a1),
        a1.simple_reflections[0].clone(),
        vec![],
    )
    .expect("elliptic");
    let classes = packet_classes(&p).expect("enumerates");
    ok &= classes.classes.len() == 2 && classes.determinant == 2.into();
    ok &= packet_partition(&p).expect("partitions").len() == 2;
    let trivial = verify_eq_m(&p, &DeltaModule::trivial_line(1), None).expect("decomposes");
    ok &= trivial.equal && trivial.lhs == Cyc::from_int(2);
    let sign = DeltaModule::character_line(vec![Cyc::from_int(-1)], Cyc::one());
    let signed = verify_eq_m(&p, &sign, None).expect("decomposes");
    ok &= signed.equal && signed.lhs == Cyc::zero();
    cases += 4;

    let a1_ad = datum(CartanType::A, 1, Isogeny::Adjoint);
    let p_ad = PacketDescription::new(
        a1_ad.clone(),
        trivial_twist(&a1_ad),
        a1_ad.simple_reflections[0].clone(),
        vec![],
    )
    .expect("elliptic");
    let blocks = packet_partition(&p_ad).expect("partitions");
    ok &= blocks.len() == 1 && blocks[0].len() == 2;
    cases += 1;

    for iso in [Isogeny::SimplyConnected, Isogeny::Adjoint] {
        let a2 = datum(CartanType::A, 2, iso.clone());
        let p2 = PacketDescription::new(
            a2.clone(),
            trivial_twist(&a2),
            a2.word_matrix(&[0, 1]),
            vec![],
        )
        .expect("elliptic");
        let classes = packet_classes(&p2).expect("enumerates");
        ok &= classes.classes.len() == 3 && classes.determinant == 3.into();
        if iso == Isogeny::SimplyConnected {
            ok &= packet_partition(&p2).expect("partitions").len() == 3;
            let report =
                verify_eq_m(&p2, &DeltaModule::trivial_line(2), None).expect("decomposes");
            ok &= report.equal && report.lhs == Cyc::from_int(3);
        } else {
            let blocks = packet_partition(&p2).expect("partitions");
            ok &= blocks.len() == 1 && blocks[0].len() == 3;
        }
        cases += 1;
    }

    (cases, ok)
}

/// Averaged traces equal invariant-subspace traces on random extended
/// modules, with and without a diagram twist.
fn check_averaging(seed: u64, _bound: usize) -> (usize, bool) {
    let mut rng = sample::rng(seed ^ 0x06);
    let mut cases = 0;
    let mut ok = true;
    let a1 = datum(CartanType::A, 1, Isogeny::SimplyConnected);
    let a2 = datum(CartanType::A, 2, Isogeny::SimplyConnected);
    let flip = diagram_twist(&a2, &[1, 0]).expect("A2 diagram flip");
    let setups = [
        (&a1, trivial_twist(&a1)),
        (&a2, trivial_twist(&a2)),
        (&a2, flip),
    ];
    for (d, twist) in &setups {
        for _ in 0..2 {
            let module = sample::random_extended_module(d, twist, &mut rng);
            let report = weyl_averaged_trace(d, twist, &module).expect("averaging runs");
            ok &= report.averaged == report.invariants;
            cases += 1;
        }
    }
    (cases, ok)
}
