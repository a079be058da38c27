//! Finitely presented abelian groups over the integers.
//!
//! A group is `Z^ngens / L(relations)` where `L` is the row lattice of the
//! relation matrix. Elements are integer coordinate rows; equality and
//! membership questions are answered through cached Smith data.

pub mod cache;
pub mod lattice;
pub mod matrix;
pub mod reduce;
pub mod snf;
pub mod tensor;

pub use lattice::{
    lattice_contains, lattice_intersection, left_kernel, row_basis_bigint, solve_in_lattice,
    IncrementalLattice,
};
pub use matrix::IntMatrix;
pub use snf::{smith_diagonal, smith_normal_form, Smith};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AbGroupError {
    #[error("map is not well defined: relation row {relation} does not land in the target relation lattice")]
    NotWellDefined { relation: usize },
    #[error("operation requires a finite group")]
    InfiniteGroup,
}

#[derive(Clone)]
pub struct FPAbGroup {
    ngens: usize,
    relations: IntMatrix,
    smith: Arc<Smith>,
}

impl FPAbGroup {
    pub fn new(ngens: usize, relations: IntMatrix) -> Self {
        assert_eq!(relations.cols(), ngens, "relation width mismatch");
        // Reduce tall relation matrices to a row basis first: the lattice
        // is unchanged and the Smith transforms stay ngens-sized.
        let relations = if relations.rows() > ngens {
            row_basis_bigint(ngens, (0..relations.rows()).map(|i| relations.row(i).to_vec()))
        } else {
            relations
        };
        let smith = Arc::new(cache::smith_cached(&relations));
        FPAbGroup {
            ngens,
            relations,
            smith,
        }
    }

    pub fn free(ngens: usize) -> Self {
        FPAbGroup::new(ngens, IntMatrix::zero(0, ngens))
    }

    pub fn trivial() -> Self {
        FPAbGroup::free(0)
    }

    pub fn from_orders(orders: &[u64]) -> Self {
        let n = orders.len();
        let rows: Vec<Vec<BigInt>> = orders
            .iter()
            .enumerate()
            .map(|(i, &o)| {
                let mut r = vec![BigInt::zero(); n];
                r[i] = BigInt::from(o);
                r
            })
            .collect();
        FPAbGroup::new(n, IntMatrix::from_rows(n, rows))
    }

    pub fn ngens(&self) -> usize {
        self.ngens
    }

    pub fn relations(&self) -> &IntMatrix {
        &self.relations
    }

    pub fn smith(&self) -> &Smith {
        &self.smith
    }

    /// Invariant factors: the diagonal entries other than 1, in divisibility
    /// order, followed by one 0 per free generator.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        let mut out: Vec<BigInt> = self
            .smith
            .diag
            .iter()
            .filter(|d| !d.is_zero() && !d.is_one())
            .cloned()
            .collect();
        let free = self.ngens - self.smith.rank;
        out.extend(std::iter::repeat(BigInt::zero()).take(free));
        out
    }

    pub fn invariant_factors_u64(&self) -> Vec<u64> {
        self.invariant_factors()
            .iter()
            .map(|d| u64::try_from(d.clone()).expect("invariant factor exceeds u64"))
            .collect()
    }

    pub fn order(&self) -> Option<BigInt> {
        if self.ngens > self.smith.rank {
            return None;
        }
        let mut o = BigInt::one();
        for d in &self.smith.diag {
            if !d.is_zero() {
                o *= d;
            }
        }
        Some(o)
    }

    pub fn is_trivial(&self) -> bool {
        self.invariant_factors().is_empty()
    }

    /// True when the coordinate row represents the zero element.
    pub fn is_zero_element(&self, v: &[BigInt]) -> bool {
        assert_eq!(v.len(), self.ngens);
        lattice_contains(&self.smith, v)
    }

    pub fn elements_equal(&self, a: &[BigInt], b: &[BigInt]) -> bool {
        let diff: Vec<BigInt> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
        self.is_zero_element(&diff)
    }

    /// Canonical coordinates in the Smith basis: stable across runs, used
    /// for hashing and reporting.
    pub fn canonical_form(&self, v: &[BigInt]) -> Vec<BigInt> {
        let w = self.smith.v.mul_vec_left(v);
        w.iter()
            .enumerate()
            .map(|(i, wi)| {
                if i < self.smith.diag.len() && !self.smith.diag[i].is_zero() {
                    wi.mod_floor(&self.smith.diag[i])
                } else {
                    wi.clone()
                }
            })
            .collect()
    }

    pub fn are_isomorphic(a: &FPAbGroup, b: &FPAbGroup) -> bool {
        a.invariant_factors() == b.invariant_factors()
    }
}

impl std::fmt::Debug for FPAbGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "FPAbGroup(ngens={}, invariants={:?})",
            self.ngens,
            self.invariant_factors()
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
        )
    }
}

/// Homomorphism between presented groups, given on generators. Row i of
/// `images` is the image of source generator i in target coordinates.
#[derive(Clone)]
pub struct AbHom {
    source: Arc<FPAbGroup>,
    target: Arc<FPAbGroup>,
    images: IntMatrix,
}

impl AbHom {
    pub fn new(
        source: Arc<FPAbGroup>,
        target: Arc<FPAbGroup>,
        images: IntMatrix,
    ) -> Result<Self, AbGroupError> {
        assert_eq!(images.rows(), source.ngens());
        assert_eq!(images.cols(), target.ngens());
        for r in 0..source.relations.rows() {
            let pushed = images.mul_vec_left(source.relations.row(r));
            if !target.is_zero_element(&pushed) {
                return Err(AbGroupError::NotWellDefined { relation: r });
            }
        }
        Ok(AbHom {
            source,
            target,
            images,
        })
    }

    /// For maps already known to be well defined (compositions, inclusions
    /// produced by kernel computations).
    pub fn new_unchecked(source: Arc<FPAbGroup>, target: Arc<FPAbGroup>, images: IntMatrix) -> Self {
        assert_eq!(images.rows(), source.ngens());
        assert_eq!(images.cols(), target.ngens());
        AbHom {
            source,
            target,
            images,
        }
    }

    pub fn identity(g: Arc<FPAbGroup>) -> Self {
        let n = g.ngens();
        AbHom::new_unchecked(g.clone(), g, IntMatrix::identity(n))
    }

    pub fn source(&self) -> &Arc<FPAbGroup> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FPAbGroup> {
        &self.target
    }

    pub fn images(&self) -> &IntMatrix {
        &self.images
    }

    pub fn apply(&self, v: &[BigInt]) -> Vec<BigInt> {
        self.images.mul_vec_left(v)
    }

    pub fn compose(&self, then: &AbHom) -> AbHom {
        assert_eq!(self.target.ngens(), then.source.ngens());
        AbHom::new_unchecked(
            self.source.clone(),
            then.target.clone(),
            self.images.mul(&then.images),
        )
    }

    /// Equality as maps of presented groups: images agree modulo target
    /// relations on every generator.
    pub fn equal_hom(&self, other: &AbHom) -> bool {
        if self.images.rows() != other.images.rows()
            || self.images.cols() != other.images.cols()
        {
            return false;
        }
        for i in 0..self.images.rows() {
            if !self
                .target
                .elements_equal(self.images.row(i), other.images.row(i))
            {
                return false;
            }
        }
        true
    }

    /// Is this the identity map (source and target present the same group)?
    /// Returns the first witnessing generator on failure.
    pub fn identity_witness(&self) -> Option<usize> {
        assert_eq!(self.images.rows(), self.images.cols());
        for i in 0..self.images.rows() {
            let mut e = vec![BigInt::zero(); self.images.cols()];
            e[i] = BigInt::one();
            if !self.target.elements_equal(self.images.row(i), &e) {
                return Some(i);
            }
        }
        None
    }

    /// Kernel subgroup: presented on a generating set of the preimage of
    /// the target relation lattice, together with the inclusion map.
    pub fn kernel(&self) -> (Arc<FPAbGroup>, AbHom) {
        let stacked = IntMatrix::stack(&self.images, self.target.relations());
        let ker = left_kernel(&stacked);
        let mut gens: Vec<Vec<BigInt>> = Vec::new();
        for i in 0..ker.rows() {
            gens.push(ker.row(i)[..self.source.ngens()].to_vec());
        }
        let gens = row_basis_bigint(self.source.ngens(), gens);
        let (group, inclusion_rows) = subgroup_presentation(&self.source, &gens);
        let group = Arc::new(group);
        let inclusion = AbHom::new_unchecked(group.clone(), self.source.clone(), inclusion_rows);
        (group, inclusion)
    }

    /// The image as an abstractly presented group.
    pub fn image_group(&self) -> FPAbGroup {
        let gens = row_basis_bigint(
            self.target.ngens(),
            (0..self.images.rows()).map(|i| self.images.row(i).to_vec()),
        );
        subgroup_presentation(&self.target, &gens).0
    }
}

/// Presents the subgroup of `ambient` generated by the rows of `gens`:
/// one presentation generator per row, relations = all integer combinations
/// that die in the ambient group. Returns (group, generator rows).
pub fn subgroup_presentation(ambient: &FPAbGroup, gens: &IntMatrix) -> (FPAbGroup, IntMatrix) {
    assert_eq!(gens.cols(), ambient.ngens());
    let stacked = IntMatrix::stack(gens, ambient.relations());
    let ker = left_kernel(&stacked);
    let mut rel_rows: Vec<Vec<BigInt>> = Vec::new();
    for i in 0..ker.rows() {
        let head = ker.row(i)[..gens.rows()].to_vec();
        if head.iter().any(|x| !x.is_zero()) {
            rel_rows.push(head);
        }
    }
    let relations = row_basis_bigint(gens.rows(), rel_rows);
    (FPAbGroup::new(gens.rows(), relations), gens.clone())
}

/// Quotient of `g` by the subgroup generated by the given coordinate rows.
pub fn quotient(g: &FPAbGroup, sub_gens: &IntMatrix) -> FPAbGroup {
    assert_eq!(sub_gens.cols(), g.ngens());
    FPAbGroup::new(g.ngens(), IntMatrix::stack(g.relations(), sub_gens))
}

/// Do two generating sets span the same subgroup of `ambient`?
pub fn subgroup_spans_equal(ambient: &FPAbGroup, a: &IntMatrix, b: &IntMatrix) -> bool {
    let with_a = smith_normal_form(&IntMatrix::stack(a, ambient.relations()));
    let with_b = smith_normal_form(&IntMatrix::stack(b, ambient.relations()));
    (0..a.rows()).all(|i| lattice_contains(&with_b, a.row(i)))
        && (0..b.rows()).all(|i| lattice_contains(&with_a, b.row(i)))
}
