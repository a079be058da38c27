//! Integer row-lattice utilities: incremental echelon bases for large
//! relation streams, kernels, intersections and exact lattice solving.

use super::matrix::IntMatrix;
use super::snf::{smith_normal_form, Smith};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("integer overflow while reducing lattice rows")]
    Overflow,
}

/// Maintains an echelon basis (one row per leading column, positive leading
/// entry) of the lattice spanned by all inserted rows. Machine integers with
/// checked arithmetic; callers fall back to `row_basis_bigint` on overflow.
pub struct IncrementalLattice {
    cols: usize,
    basis: BTreeMap<usize, Vec<i128>>,
}

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, x, y) = egcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

impl IncrementalLattice {
    pub fn new(cols: usize) -> Self {
        IncrementalLattice {
            cols,
            basis: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    fn leading(row: &[i128]) -> Option<usize> {
        row.iter().position(|&x| x != 0)
    }

    /// Inserts a row, updating the basis. Returns true if the lattice grew.
    pub fn insert(&mut self, row: &[i128]) -> Result<bool, LatticeError> {
        debug_assert_eq!(row.len(), self.cols);
        let mut work = row.to_vec();
        let mut changed = false;
        loop {
            let Some(lead) = Self::leading(&work) else {
                return Ok(changed);
            };
            match self.basis.get_mut(&lead) {
                None => {
                    if work[lead] < 0 {
                        for x in work.iter_mut() {
                            *x = -*x;
                        }
                    }
                    self.basis.insert(lead, work);
                    return Ok(true);
                }
                Some(b) => {
                    let p = b[lead];
                    let w = work[lead];
                    if w.rem_euclid(p) == 0 {
                        let q = w / p;
                        for (x, y) in work.iter_mut().zip(b.iter()) {
                            *x = x
                                .checked_sub(q.checked_mul(*y).ok_or(LatticeError::Overflow)?)
                                .ok_or(LatticeError::Overflow)?;
                        }
                    } else {
                        // Replace the basis row with the gcd combination and
                        // keep reducing the remainder row.
                        let (g, s, t) = egcd(p, w);
                        let mut newb = vec![0i128; self.cols];
                        for j in 0..self.cols {
                            let sp = s.checked_mul(b[j]).ok_or(LatticeError::Overflow)?;
                            let tw = t.checked_mul(work[j]).ok_or(LatticeError::Overflow)?;
                            newb[j] = sp.checked_add(tw).ok_or(LatticeError::Overflow)?;
                        }
                        let bq = p / g;
                        let wq = w / g;
                        for j in 0..self.cols {
                            let a = bq.checked_mul(work[j]).ok_or(LatticeError::Overflow)?;
                            let c = wq.checked_mul(b[j]).ok_or(LatticeError::Overflow)?;
                            work[j] = a.checked_sub(c).ok_or(LatticeError::Overflow)?;
                        }
                        debug_assert_eq!(newb[lead], g);
                        debug_assert_eq!(work[lead], 0);
                        *b = newb;
                        changed = true;
                    }
                }
            }
        }
    }

    pub fn insert_sparse(&mut self, entries: &[(usize, i128)]) -> Result<bool, LatticeError> {
        let mut row = vec![0i128; self.cols];
        for &(j, c) in entries {
            row[j] += c;
        }
        self.insert(&row)
    }

    /// Reduces a copy of `row` against the basis without modifying it;
    /// returns true if the row lies in the lattice.
    pub fn contains(&self, row: &[i128]) -> Result<bool, LatticeError> {
        let mut work = row.to_vec();
        loop {
            let Some(lead) = Self::leading(&work) else {
                return Ok(true);
            };
            match self.basis.get(&lead) {
                None => return Ok(false),
                Some(b) => {
                    let p = b[lead];
                    if work[lead].rem_euclid(p) != 0 {
                        return Ok(false);
                    }
                    let q = work[lead] / p;
                    for (x, y) in work.iter_mut().zip(b.iter()) {
                        *x = x
                            .checked_sub(q.checked_mul(*y).ok_or(LatticeError::Overflow)?)
                            .ok_or(LatticeError::Overflow)?;
                    }
                }
            }
        }
    }

    /// Basis rows ordered by leading column.
    pub fn rows(&self) -> Vec<Vec<i128>> {
        self.basis.values().cloned().collect()
    }

    pub fn to_matrix(&self) -> IntMatrix {
        IntMatrix::from_rows(
            self.cols,
            self.basis
                .values()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }
}

/// Echelon row basis over BigInt; same algorithm as `IncrementalLattice`
/// without the overflow concern. Used for small or already-reduced inputs.
pub fn row_basis_bigint(cols: usize, rows: impl IntoIterator<Item = Vec<BigInt>>) -> IntMatrix {
    let mut basis: BTreeMap<usize, Vec<BigInt>> = BTreeMap::new();
    for row in rows {
        debug_assert_eq!(row.len(), cols);
        let mut work = row;
        loop {
            let Some(lead) = work.iter().position(|x| !x.is_zero()) else {
                break;
            };
            match basis.get_mut(&lead) {
                None => {
                    if work[lead].is_negative() {
                        for x in work.iter_mut() {
                            *x = -x.clone();
                        }
                    }
                    basis.insert(lead, work);
                    break;
                }
                Some(b) => {
                    let p = b[lead].clone();
                    if work[lead].mod_floor(&p).is_zero() {
                        let q = &work[lead] / &p;
                        for (x, y) in work.iter_mut().zip(b.iter()) {
                            *x -= &q * y;
                        }
                    } else {
                        let ext = p.extended_gcd(&work[lead]);
                        let (g, s, t) = (ext.gcd, ext.x, ext.y);
                        let mut newb = vec![BigInt::zero(); cols];
                        for j in 0..cols {
                            newb[j] = &s * &b[j] + &t * &work[j];
                        }
                        let bq = &p / &g;
                        let wq = &work[lead] / &g;
                        for j in 0..cols {
                            let x = &bq * &work[j] - &wq * &b[j];
                            work[j] = x;
                        }
                        *b = newb;
                    }
                }
            }
        }
    }
    IntMatrix::from_rows(cols, basis.into_values().collect())
}

/// Basis of the left kernel `{ x : x * m = 0 }`, as rows.
pub fn left_kernel(m: &IntMatrix) -> IntMatrix {
    let s = smith_normal_form(m);
    let rows = (s.rank..m.rows())
        .map(|i| s.u.row(i).to_vec())
        .collect::<Vec<_>>();
    row_basis_bigint(m.rows(), rows)
}

/// Basis of the intersection of the row lattices of `a` and `b`.
pub fn lattice_intersection(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    assert_eq!(a.cols(), b.cols());
    let stacked = IntMatrix::stack(a, b);
    let ker = left_kernel(&stacked);
    let mut rows = Vec::new();
    for k in 0..ker.rows() {
        let coeffs = &ker.row(k)[..a.rows()];
        let mut v = vec![BigInt::zero(); a.cols()];
        for (i, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for j in 0..a.cols() {
                v[j] += c * a.at(i, j);
            }
        }
        rows.push(v);
    }
    row_basis_bigint(a.cols(), rows)
}

/// Membership of `v` in the row lattice of the matrix behind `smith`.
pub fn lattice_contains(smith: &Smith, v: &[BigInt]) -> bool {
    let w = smith.v.mul_vec_left(v);
    for (i, wi) in w.iter().enumerate() {
        if i < smith.diag.len() && !smith.diag[i].is_zero() {
            if !wi.mod_floor(&smith.diag[i]).is_zero() {
                return false;
            }
        } else if !wi.is_zero() {
            return false;
        }
    }
    true
}

/// Solves `x * m = v` exactly over the integers, where `smith` is the Smith
/// data of `m`. Returns None when `v` is not in the row lattice.
pub fn solve_in_lattice(smith: &Smith, v: &[BigInt]) -> Option<Vec<BigInt>> {
    let w = smith.v.mul_vec_left(v);
    let rows = smith.u.rows();
    let mut y = vec![BigInt::zero(); rows];
    for (i, wi) in w.iter().enumerate() {
        if i < smith.diag.len() && !smith.diag[i].is_zero() {
            let (q, r) = wi.div_mod_floor(&smith.diag[i]);
            if !r.is_zero() {
                return None;
            }
            y[i] = q;
        } else if !wi.is_zero() {
            return None;
        }
    }
    Some(smith.u.mul_vec_left(&y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(cols: usize, rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64_rows(cols, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn incremental_matches_bigint_basis() {
        let rows: Vec<Vec<i128>> = vec![
            vec![2, 4, 0],
            vec![0, 6, 3],
            vec![2, 10, 3],
            vec![4, 8, 0],
        ];
        let mut lat = IncrementalLattice::new(3);
        for r in &rows {
            lat.insert(r).unwrap();
        }
        let big = row_basis_bigint(
            3,
            rows.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect::<Vec<_>>(),
        );
        assert_eq!(lat.to_matrix(), big);
        assert!(lat.contains(&[2, 4, 0]).unwrap());
        assert!(lat.contains(&[2, 10, 3]).unwrap());
        assert!(!lat.contains(&[1, 0, 0]).unwrap());
    }

    #[test]
    fn gcd_combination_is_kept() {
        let mut lat = IncrementalLattice::new(1);
        lat.insert(&[6]).unwrap();
        lat.insert(&[10]).unwrap();
        assert!(lat.contains(&[2]).unwrap());
        assert!(!lat.contains(&[1]).unwrap());
    }

    #[test]
    fn left_kernel_annihilates() {
        let a = m(2, &[&[1, 0], &[0, 1], &[1, 1]]);
        let k = left_kernel(&a);
        assert_eq!(k.rows(), 1);
        let prod = k.mul(&a);
        assert!(prod.is_zero());
    }

    #[test]
    fn intersection_of_scaled_lattices() {
        // 2Z^2 and 3Z^2 meet in 6Z^2.
        let a = m(2, &[&[2, 0], &[0, 2]]);
        let b = m(2, &[&[3, 0], &[0, 3]]);
        let i = lattice_intersection(&a, &b);
        let s = smith_normal_form(&i);
        assert_eq!(s.diag, vec![BigInt::from(6), BigInt::from(6)]);
    }

    #[test]
    fn solve_recovers_combination() {
        let a = m(3, &[&[2, 0, 1], &[0, 3, 1]]);
        let s = smith_normal_form(&a);
        let target = vec![BigInt::from(4), BigInt::from(-3), BigInt::from(1)];
        let x = solve_in_lattice(&s, &target).expect("solvable");
        let got = a.mul_vec_left(&x);
        assert_eq!(got, target);
        assert!(solve_in_lattice(&s, &[BigInt::from(1), BigInt::zero(), BigInt::zero()]).is_none());
    }
}
