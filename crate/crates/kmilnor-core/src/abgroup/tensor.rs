//! Tensor product of finite presented abelian groups through their cyclic
//! decompositions, with an encoder for pure tensors.

use super::{AbGroupError, FPAbGroup, IntMatrix};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::sync::Arc;

/// Cyclic coordinates of a finite group: component orders > 1 plus the
/// column indices of the Smith basis realizing them.
struct CyclicCoords {
    group: Arc<FPAbGroup>,
    orders: Vec<BigInt>,
    columns: Vec<usize>,
}

impl CyclicCoords {
    fn new(group: Arc<FPAbGroup>) -> Result<Self, AbGroupError> {
        let smith = group.smith();
        if group.ngens() > smith.rank {
            return Err(AbGroupError::InfiniteGroup);
        }
        let mut orders = Vec::new();
        let mut columns = Vec::new();
        for (i, d) in smith.diag.iter().enumerate() {
            if !d.is_one() {
                orders.push(d.clone());
                columns.push(i);
            }
        }
        Ok(CyclicCoords {
            group,
            orders,
            columns,
        })
    }

    fn coords(&self, v: &[BigInt]) -> Vec<BigInt> {
        let w = self.group.smith().v.mul_vec_left(v);
        self.columns
            .iter()
            .zip(self.orders.iter())
            .map(|(&c, o)| w[c].mod_floor(o))
            .collect()
    }
}

pub struct TensorGroup {
    left: CyclicCoords,
    right: CyclicCoords,
    /// Kept component pairs (i, j) with gcd of orders > 1, in row-major order.
    pub pairs: Vec<(usize, usize)>,
    pub moduli: Vec<BigInt>,
    pub group: FPAbGroup,
}

/// `a (x) b` for finite groups. Components `Z/m (x) Z/n = Z/gcd(m, n)`.
pub fn tensor(a: Arc<FPAbGroup>, b: Arc<FPAbGroup>) -> Result<TensorGroup, AbGroupError> {
    let left = CyclicCoords::new(a)?;
    let right = CyclicCoords::new(b)?;
    let mut pairs = Vec::new();
    let mut moduli = Vec::new();
    for i in 0..left.orders.len() {
        for j in 0..right.orders.len() {
            let g = left.orders[i].gcd(&right.orders[j]);
            if !g.is_one() {
                pairs.push((i, j));
                moduli.push(g);
            }
        }
    }
    let n = pairs.len();
    let rows: Vec<Vec<BigInt>> = moduli
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let mut r = vec![BigInt::zero(); n];
            r[k] = m.clone();
            r
        })
        .collect();
    let group = FPAbGroup::new(n, IntMatrix::from_rows(n, rows));
    Ok(TensorGroup {
        left,
        right,
        pairs,
        moduli,
        group,
    })
}

impl TensorGroup {
    /// Coordinates of the pure tensor `x (x) y`.
    pub fn encode_pure(&self, x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
        let cx = self.left.coords(x);
        let cy = self.right.coords(y);
        self.pairs
            .iter()
            .zip(self.moduli.iter())
            .map(|(&(i, j), m)| (&cx[i] * &cy[j]).mod_floor(m))
            .collect()
    }
}
