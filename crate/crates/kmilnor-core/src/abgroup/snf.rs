//! Smith normal form over the integers with full transform tracking.
//!
//! `u * input * v = diag(d)` with `u`, `v` unimodular and `d[0] | d[1] | ...`.
//! The inverses of `u` and `v` are accumulated alongside, since the group
//! code needs both directions (membership tests use `v`, coordinate lifts
//! use `v_inv`, lattice solving uses `u`).
//!
//! Pivot choice is deterministic: smallest nonzero absolute value, ties
//! broken by row-major position. This keeps cached results reproducible.

use super::matrix::IntMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

pub struct Smith {
    /// Diagonal of the normal form, length `min(rows, cols)`, entries
    /// nonnegative, divisibility chain, zeros trailing.
    pub diag: Vec<BigInt>,
    pub rank: usize,
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub v: IntMatrix,
    pub v_inv: IntMatrix,
}

struct Workspace {
    a: IntMatrix,
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
    v_inv: IntMatrix,
}

impl Workspace {
    fn row_swap(&mut self, i: usize, k: usize) {
        if i == k {
            return;
        }
        let c = self.a.cols();
        for j in 0..c {
            let x = self.a.at(i, j).clone();
            let y = self.a.at(k, j).clone();
            self.a.set(i, j, y);
            self.a.set(k, j, x);
        }
        let r = self.u.cols();
        for j in 0..r {
            let x = self.u.at(i, j).clone();
            let y = self.u.at(k, j).clone();
            self.u.set(i, j, y);
            self.u.set(k, j, x);
            let x = self.u_inv.at(j, i).clone();
            let y = self.u_inv.at(j, k).clone();
            self.u_inv.set(j, i, y);
            self.u_inv.set(j, k, x);
        }
    }

    fn row_negate(&mut self, i: usize) {
        for j in 0..self.a.cols() {
            let x = -self.a.at(i, j).clone();
            self.a.set(i, j, x);
        }
        for j in 0..self.u.cols() {
            let x = -self.u.at(i, j).clone();
            self.u.set(i, j, x);
            let y = -self.u_inv.at(j, i).clone();
            self.u_inv.set(j, i, y);
        }
    }

    /// row_i += q * row_k
    fn row_add(&mut self, i: usize, k: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.a.cols() {
            if !self.a.at(k, j).is_zero() {
                let x = self.a.at(i, j) + q * self.a.at(k, j);
                self.a.set(i, j, x);
            }
        }
        for j in 0..self.u.cols() {
            if !self.u.at(k, j).is_zero() {
                let x = self.u.at(i, j) + q * self.u.at(k, j);
                self.u.set(i, j, x);
            }
            if !self.u_inv.at(j, i).is_zero() {
                let y = self.u_inv.at(j, k) - q * self.u_inv.at(j, i);
                self.u_inv.set(j, k, y);
            }
        }
    }

    fn col_swap(&mut self, j: usize, l: usize) {
        if j == l {
            return;
        }
        for i in 0..self.a.rows() {
            let x = self.a.at(i, j).clone();
            let y = self.a.at(i, l).clone();
            self.a.set(i, j, y);
            self.a.set(i, l, x);
        }
        let c = self.v.rows();
        for i in 0..c {
            let x = self.v.at(i, j).clone();
            let y = self.v.at(i, l).clone();
            self.v.set(i, j, y);
            self.v.set(i, l, x);
            let x = self.v_inv.at(j, i).clone();
            let y = self.v_inv.at(l, i).clone();
            self.v_inv.set(j, i, y);
            self.v_inv.set(l, i, x);
        }
    }

    /// col_j += q * col_l
    fn col_add(&mut self, j: usize, l: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.a.rows() {
            if !self.a.at(i, l).is_zero() {
                let x = self.a.at(i, j) + q * self.a.at(i, l);
                self.a.set(i, j, x);
            }
        }
        for i in 0..self.v.rows() {
            if !self.v.at(i, l).is_zero() {
                let x = self.v.at(i, j) + q * self.v.at(i, l);
                self.v.set(i, j, x);
            }
            if !self.v_inv.at(j, i).is_zero() {
                let y = self.v_inv.at(l, i) - q * self.v_inv.at(j, i);
                self.v_inv.set(l, i, y);
            }
        }
    }
}

/// Finds the entry of smallest nonzero absolute value in the trailing
/// submatrix starting at (t, t); ties go to the earliest row-major position.
fn find_pivot(a: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(BigInt, usize, usize)> = None;
    for i in t..a.rows() {
        for j in t..a.cols() {
            let e = a.at(i, j);
            if e.is_zero() {
                continue;
            }
            let mag = e.abs();
            match &best {
                Some((m, _, _)) if *m <= mag => {}
                _ => best = Some((mag, i, j)),
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

fn diagonalize(ws: &mut Workspace) {
    let r = ws.a.rows();
    let c = ws.a.cols();
    let k = r.min(c);
    for t in 0..k {
        loop {
            let Some((pi, pj)) = find_pivot(&ws.a, t) else {
                return;
            };
            ws.row_swap(t, pi);
            ws.col_swap(t, pj);
            if ws.a.at(t, t).is_negative() {
                ws.row_negate(t);
            }
            let pivot = ws.a.at(t, t).clone();
            let mut clean = true;
            for i in t + 1..r {
                if !ws.a.at(i, t).is_zero() {
                    let q = ws.a.at(i, t).div_floor(&pivot);
                    ws.row_add(i, t, &(-q));
                    if !ws.a.at(i, t).is_zero() {
                        clean = false;
                    }
                }
            }
            for j in t + 1..c {
                if !ws.a.at(t, j).is_zero() {
                    let q = ws.a.at(t, j).div_floor(&pivot);
                    ws.col_add(j, t, &(-q));
                    if !ws.a.at(t, j).is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                continue;
            }
            // Pivot divides its row and column; pull in any entry of the
            // trailing block it does not divide, then keep reducing.
            let mut offender = None;
            'scan: for i in t + 1..r {
                for j in t + 1..c {
                    if !ws.a.at(i, j).mod_floor(&pivot).is_zero() {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            match offender {
                Some(i) => {
                    let one = BigInt::from(1);
                    ws.row_add(t, i, &one);
                }
                None => break,
            }
        }
    }
}

pub fn smith_normal_form(input: &IntMatrix) -> Smith {
    let r = input.rows();
    let c = input.cols();
    let k = r.min(c);
    let mut ws = Workspace {
        a: input.clone(),
        u: IntMatrix::identity(r),
        u_inv: IntMatrix::identity(r),
        v: IntMatrix::identity(c),
        v_inv: IntMatrix::identity(c),
    };
    let mut guard = 0usize;
    loop {
        guard += 1;
        assert!(guard < 100_000, "smith normal form failed to converge");
        diagonalize(&mut ws);
        for t in 0..k {
            if ws.a.at(t, t).is_negative() {
                ws.row_negate(t);
            }
        }
        // Move zero diagonal entries to the end.
        for t in 0..k {
            if ws.a.at(t, t).is_zero() {
                if let Some(j) = (t + 1..k).find(|&j| !ws.a.at(j, j).is_zero()) {
                    ws.row_swap(t, j);
                    ws.col_swap(t, j);
                }
            }
        }
        // Enforce the divisibility chain; each violation fix strictly
        // shrinks an earlier diagonal entry, so this terminates.
        let mut violation = None;
        'chain: for t in 0..k {
            let dt = ws.a.at(t, t).clone();
            if dt.is_zero() {
                break;
            }
            for j in t + 1..k {
                let dj = ws.a.at(j, j);
                if !dj.mod_floor(&dt).is_zero() {
                    violation = Some((t, j));
                    break 'chain;
                }
            }
        }
        match violation {
            Some((t, j)) => {
                let one = BigInt::from(1);
                ws.col_add(t, j, &one);
            }
            None => break,
        }
    }
    let diag: Vec<BigInt> = (0..k).map(|t| ws.a.at(t, t).clone()).collect();
    let rank = diag.iter().take_while(|d| !d.is_zero()).count();
    Smith {
        diag,
        rank,
        u: ws.u,
        u_inv: ws.u_inv,
        v: ws.v,
        v_inv: ws.v_inv,
    }
}

/// Diagonal of the Smith form without transform tracking, for large
/// presentations where only the invariant factors matter. The transform
/// bookkeeping is rows^2 and dominates on tall inputs, so skip it entirely.
pub fn smith_diagonal(input: &IntMatrix) -> Vec<BigInt> {
    let mut ws = Workspace {
        a: input.clone(),
        u: IntMatrix::identity(0),
        u_inv: IntMatrix::identity(0),
        v: IntMatrix::identity(0),
        v_inv: IntMatrix::identity(0),
    };
    smith_diag_untracked(&mut ws)
}

fn smith_diag_untracked(ws: &mut Workspace) -> Vec<BigInt> {
    // Workspace ops tolerate empty transform matrices: their loops run over
    // zero rows/cols.
    let k = ws.a.rows().min(ws.a.cols());
    let mut guard = 0usize;
    loop {
        guard += 1;
        assert!(guard < 100_000, "smith diagonal failed to converge");
        diagonalize(ws);
        for t in 0..k {
            if ws.a.at(t, t).is_negative() {
                ws.row_negate(t);
            }
        }
        for t in 0..k {
            if ws.a.at(t, t).is_zero() {
                if let Some(j) = (t + 1..k).find(|&j| !ws.a.at(j, j).is_zero()) {
                    ws.row_swap(t, j);
                    ws.col_swap(t, j);
                }
            }
        }
        let mut violation = None;
        'chain: for t in 0..k {
            let dt = ws.a.at(t, t).clone();
            if dt.is_zero() {
                break;
            }
            for j in t + 1..k {
                if !ws.a.at(j, j).mod_floor(&dt).is_zero() {
                    violation = Some((t, j));
                    break 'chain;
                }
            }
        }
        match violation {
            Some((t, j)) => {
                let one = BigInt::from(1);
                ws.col_add(t, j, &one);
            }
            None => break,
        }
    }
    (0..k).map(|t| ws.a.at(t, t).clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn m(cols: usize, rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64_rows(cols, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn check_transforms(input: &IntMatrix, s: &Smith) {
        let umv = s.u.mul(input).mul(&s.v);
        for i in 0..umv.rows() {
            for j in 0..umv.cols() {
                let expect = if i == j && i < s.diag.len() {
                    s.diag[i].clone()
                } else {
                    BigInt::zero()
                };
                assert_eq!(*umv.at(i, j), expect, "U*M*V not diagonal at {i},{j}");
            }
        }
        assert!(s.u.mul(&s.u_inv).is_identity(), "u_inv wrong");
        assert!(s.v.mul(&s.v_inv).is_identity(), "v_inv wrong");
    }

    #[test]
    fn identity_stays_identity() {
        let id = IntMatrix::identity(3);
        let s = smith_normal_form(&id);
        assert_eq!(s.diag, vec![BigInt::one(); 3]);
        check_transforms(&id, &s);
    }

    #[test]
    fn diag_2_3_becomes_1_6() {
        let input = m(2, &[&[2, 0], &[0, 3]]);
        let s = smith_normal_form(&input);
        assert_eq!(s.diag, vec![BigInt::from(1), BigInt::from(6)]);
        check_transforms(&input, &s);
    }

    #[test]
    fn gcd_and_determinant_pin_the_form() {
        // gcd of entries is 2 and |det| = 8, forcing diag (2, 4).
        let input = m(2, &[&[2, 4], &[6, 8]]);
        let s = smith_normal_form(&input);
        assert_eq!(s.diag, vec![BigInt::from(2), BigInt::from(4)]);
        check_transforms(&input, &s);
    }

    #[test]
    fn rectangular_and_zero_matrices() {
        let input = m(3, &[&[0, 0, 0], &[0, 4, 6]]);
        let s = smith_normal_form(&input);
        assert_eq!(s.diag, vec![BigInt::from(2), BigInt::zero()]);
        assert_eq!(s.rank, 1);
        check_transforms(&input, &s);

        let z = IntMatrix::zero(0, 4);
        let s = smith_normal_form(&z);
        assert!(s.diag.is_empty());
        assert_eq!(s.rank, 0);
    }

    #[test]
    fn diagonal_only_agrees() {
        let input = m(3, &[&[2, 4, 4], &[-6, 6, 12], &[10, 4, 16]]);
        let s = smith_normal_form(&input);
        assert_eq!(smith_diagonal(&input), s.diag);
    }
}
