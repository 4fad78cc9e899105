//! Exact computational algebra for extended affine Weyl groups.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`] — arbitrary-precision integer matrices, Smith normal form,
//!   coinvariant groups, determinant identities, saturated fixed sublattices.
//! * [`cyclo`] — exact arithmetic in cyclotomic fields `Q(ζ_N)` and dense
//!   linear algebra over them.
//! * [`cartan`] — root data of types `A`–`G` at a chosen isogeny: roots,
//!   coroots, Weyl group, coweight/coroot lattices, fundamental group.
//! * [`affine`] — the extended affine Weyl group `Λ_G ⋊ W`: affine roots,
//!   length, Bruhat order, Demazure products, regularity bounds, minimal
//!   coset representatives, monoid filtrations, Hilbert bases.
//! * [`twist`] — Frobenius-style diagram twists: σ-torsion, twisted
//!   conjugacy, ellipticity, fiber class enumeration and refinement.
//! * [`gentrace`] — generalized trace functionals on constructively
//!   presented modules over `Λ ⋊ ⟨u⟩`, group homology, the trace formula,
//!   induced-trace and averaging identities.
//! * [`packets`] — packet-style class enumeration built from the twisted
//!   fiber machinery, with the trace-formula cross-check.
//!
//! All arithmetic is exact: integers are arbitrary precision where growth is
//! possible, and character-level scalars live in explicit cyclotomic fields.
//! No floating point is used anywhere.

pub mod affine;
pub mod cartan;
pub mod cyclo;
pub mod gentrace;
pub mod lattice;
pub mod packets;
pub mod sample;
pub mod twist;
pub mod util;
