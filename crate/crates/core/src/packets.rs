//! Packets of twisted conjugacy classes over an elliptic element.
//!
//! Fix a root datum, a twist `σ`, and a Weyl element `ū` whose composite
//! `ūσ` acts on the coroot lattice without fixed vectors. The fiber
//! `{t_λ·ūσ : λ ∈ Λ}` breaks into finitely many `Λ`-conjugacy classes;
//! this module enumerates them, partitions them under the bigger
//! cocharacter lattice, and verifies the main decomposition: the trace of
//! `ūσ` on the homology of a module equals the sum of the generalized
//! traces of the class representatives.

use num_bigint::BigInt;
use thiserror::Error;

use crate::cartan::{RootDatum, SmallMat};
use crate::cyclo::Cyc;
use crate::gentrace::{
    gen_trace, trace_on_homology, DeltaGroup, DeltaModule, FiltrationSpec, GentraceError,
};
use crate::lattice::{self, det_one_minus};
use crate::twist::{
    enumerate_fiber_classes, is_elliptic, lattice_action, linearization, ActingLattice,
    EllipticityLattice, FrobeniusTwist, TwistError, TwistedElt,
};

#[derive(Debug, Error)]
pub enum PacketError {
    #[error("the matrix is not an element of the Weyl group")]
    NotInWeylGroup,
    #[error("ūσ has nonzero fixed vectors on the coroot lattice")]
    NotEllipticOnCoroots,
    #[error("ūσ has nonzero fixed vectors on the quotient of the cocharacter lattice")]
    NotEllipticOnQuotient,
    #[error(
        "the homology decomposition is implemented only when the cocharacter lattice \
         equals the coroot lattice; induct from the derived-group datum first"
    )]
    RequiresEqualLattices,
    #[error(transparent)]
    Twist(#[from] TwistError),
    #[error(transparent)]
    Trace(#[from] GentraceError),
}

/// An elliptic fiber to enumerate: datum, twist, Weyl part, and an
/// optional central sublattice `Λ₀` (basis vectors in ambient
/// coordinates) that the ellipticity quotient divides out.
#[derive(Clone, Debug)]
pub struct PacketDescription {
    pub datum: RootDatum,
    pub twist: FrobeniusTwist,
    pub wbar: SmallMat,
    pub central: Vec<Vec<i64>>,
}

impl PacketDescription {
    pub fn new(
        datum: RootDatum,
        twist: FrobeniusTwist,
        wbar: SmallMat,
        central: Vec<Vec<i64>>,
    ) -> Result<Self, PacketError> {
        let p = PacketDescription { datum, twist, wbar, central };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PacketError> {
        if !self.datum.weyl_group().iter().any(|g| g.mat == self.wbar) {
            return Err(PacketError::NotInWeylGroup);
        }
        if !is_elliptic(&self.datum, &self.twist, &self.wbar, &EllipticityLattice::Coroot)? {
            return Err(PacketError::NotEllipticOnCoroots);
        }
        let quotient = EllipticityLattice::QuotientByStable(self.central.clone());
        if !is_elliptic(&self.datum, &self.twist, &self.wbar, &quotient)? {
            return Err(PacketError::NotEllipticOnQuotient);
        }
        Ok(())
    }

    /// The composite `ūσ` as a lattice map in ambient coordinates.
    pub fn composite(&self) -> SmallMat {
        linearization(&self.twist, &self.wbar)
    }

    /// The automorphism induced by `ūσ` on the coroot lattice, in coroot
    /// coordinates, as a translation–automorphism group.
    pub fn coroot_group(&self) -> Result<DeltaGroup, PacketError> {
        let u = lattice_action(&self.datum.lambda_basis(), &self.composite());
        Ok(DeltaGroup::new(u)?)
    }

    /// Coroot coordinates of a class representative's translation part.
    fn coroot_coords(&self, t: &[i64]) -> Vec<i64> {
        let basis = self.datum.lambda_basis();
        let snf = lattice::smith_normal_form(&basis);
        let big: Vec<BigInt> = t.iter().map(|&x| BigInt::from(x)).collect();
        let sol = snf.solve(&big).expect("representative lies in the coroot lattice");
        sol.iter().map(|x| i64::try_from(x).expect("coordinate fits")).collect()
    }
}

/// The enumerated classes together with the determinant cross-check.
#[derive(Clone, Debug)]
pub struct PacketClasses {
    /// One representative per `Λ`-conjugacy class, deterministic order.
    pub classes: Vec<TwistedElt>,
    /// `|det(1 − ūσ)|`, which always equals `classes.len()`.
    pub determinant: BigInt,
}

/// Enumerate the `Λ`-conjugacy classes in the fiber over `ūσ` and check
/// the count against `|det(1 − ūσ)|`.
pub fn packet_classes(p: &PacketDescription) -> Result<PacketClasses, PacketError> {
    p.validate()?;
    let classes = enumerate_fiber_classes(&p.datum, &p.twist, &p.wbar, ActingLattice::Coroot)?;
    let determinant = det_one_minus(&p.composite().to_int_mat())
        .expect("square")
        .magnitude()
        .clone()
        .into();
    assert_eq!(
        BigInt::from(classes.len()),
        determinant,
        "class count equals |det(1 − ūσ)|"
    );
    Ok(PacketClasses { classes, determinant })
}

/// Partition the `Λ`-conjugacy classes into orbits of the full
/// cocharacter lattice. All blocks have the same size (the bigger lattice
/// acts through a finite abelian group), which is asserted.
pub fn packet_partition(p: &PacketDescription) -> Result<Vec<Vec<TwistedElt>>, PacketError> {
    let classes = packet_classes(p)?.classes;
    let blocks = crate::twist::refine_by_larger_lattice(&p.datum, &p.twist, &classes)?;
    assert!(
        blocks.windows(2).all(|w| w[0].len() == w[1].len()),
        "orbits of a finite abelian group action on a torsor have equal size"
    );
    Ok(blocks)
}

/// One class term of the decomposition: the representative's translation
/// part in coroot coordinates, and its generalized trace.
#[derive(Clone, Debug)]
pub struct PacketTerm {
    pub rep: Vec<i64>,
    pub term: Cyc,
}

/// Both sides of the homology decomposition.
#[derive(Clone, Debug)]
pub struct EqReport {
    /// `Σ_j (−1)^j Tr(ūσ, H_j(Λ, M))`.
    pub lhs: Cyc,
    /// Generalized trace of each class representative.
    pub per_class: Vec<PacketTerm>,
    /// Sum of the class terms.
    pub rhs: Cyc,
    pub equal: bool,
}

/// Verify the decomposition `Tr(ūσ, H_*(Λ, M)) = Σ_ũ Tr_gen(ũ, M)` over
/// the packet classes. The module lives over the coroot lattice in coroot
/// coordinates, with `ūσ` as the automorphism. Only the case where the
/// cocharacter lattice equals the coroot lattice is supported; larger
/// quotients reduce to it by induction on the derived-group datum.
///
/// This is an independent route to the same numbers as the trace formula:
/// the class enumeration and conjugation machinery on one side, the
/// translation-coset machinery on the other.
pub fn verify_eq_m(
    p: &PacketDescription,
    module: &DeltaModule,
    spec: Option<&FiltrationSpec>,
) -> Result<EqReport, PacketError> {
    p.validate()?;
    if !p.datum.fundamental_group().is_trivial() {
        return Err(PacketError::RequiresEqualLattices);
    }
    let group = p.coroot_group()?;
    let default_spec;
    let spec = match spec {
        Some(s) => s,
        None => {
            default_spec = FiltrationSpec::default_for(&group);
            &default_spec
        }
    };
    let lhs = trace_on_homology(&group, module, 1)?;
    let classes = packet_classes(p)?.classes;
    let mut per_class = Vec::with_capacity(classes.len());
    let mut rhs = Cyc::zero();
    for class in &classes {
        let rep = p.coroot_coords(&class.base.t);
        let delta = group.elt(rep.clone(), 1);
        let term = gen_trace(&group, module, &delta, spec)?;
        rhs = rhs.add(&term);
        per_class.push(PacketTerm { rep, term });
    }
    let equal = lhs == rhs;
    Ok(EqReport { lhs, per_class, rhs, equal })
}
