//! Streaming reducer for huge sparse abelian-group presentations.
//!
//! Relations arrive one row at a time. Any row with a +-1 coefficient lets
//! us solve for that generator and substitute it away; rows without a unit
//! coefficient are kept as residual relations. The final group lives on the
//! surviving generators with the re-resolved residual rows as relations,
//! which is then small enough for Smith normal form.
//!
//! Substitution expressions only ever reference generators that were alive
//! at the time of solving, and a generator solved later can never reference
//! one solved earlier, so in-place expansion terminates.

use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("integer overflow while reducing presentation")]
    Overflow,
}

type Expr = Vec<(u32, i128)>; // sorted by column, nonzero coefficients

pub struct PresentationReducer {
    ncols: usize,
    solved: Vec<Option<Expr>>,
    residual: Vec<Expr>,
    rows_seen: u64,
    /// Optional exponent of the presented group: when the caller can prove
    /// that `modulus * e_col` lies in the relation lattice for every
    /// column, all coefficient arithmetic happens in the balanced range
    /// (-m/2, m/2], which keeps deep substitution chains from overflowing.
    modulus: Option<i128>,
}

fn balance(x: i128, modulus: Option<i128>) -> i128 {
    match modulus {
        None => x,
        Some(m) => {
            let mut r = x.rem_euclid(m);
            if 2 * r > m {
                r -= m;
            }
            r
        }
    }
}

impl PresentationReducer {
    pub fn new(ncols: usize) -> Self {
        PresentationReducer {
            ncols,
            solved: vec![None; ncols],
            residual: Vec::new(),
            rows_seen: 0,
            modulus: None,
        }
    }

    /// See the `modulus` field; the caller asserts that the given value
    /// annihilates every generator in the presented group.
    pub fn new_with_exponent(ncols: usize, exponent: i128) -> Self {
        assert!(exponent > 0);
        PresentationReducer {
            ncols,
            solved: vec![None; ncols],
            residual: Vec::new(),
            rows_seen: 0,
            modulus: Some(exponent),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows_seen(&self) -> u64 {
        self.rows_seen
    }

    /// Rewrites `expr` so that it references no solved columns. Stack
    /// driven: solved terms expand in place, unsolved terms merge into a
    /// short sorted accumulator.
    fn resolve_expr(&mut self, expr: &[(u32, i128)]) -> Result<Expr, ReduceError> {
        let mut out: Expr = Vec::with_capacity(expr.len());
        let mut stack: Vec<(u32, i128)> = expr.to_vec();
        while let Some((col, coef)) = stack.pop() {
            let coef = balance(coef, self.modulus);
            if coef == 0 {
                continue;
            }
            if self.solved[col as usize].is_some() {
                let sub = self.compress(col as usize)?;
                for &(c, k) in sub.iter() {
                    stack.push((c, k.checked_mul(coef).ok_or(ReduceError::Overflow)?));
                }
            } else {
                match out.binary_search_by_key(&col, |&(c, _)| c) {
                    Ok(i) => {
                        out[i].1 = balance(
                            out[i].1.checked_add(coef).ok_or(ReduceError::Overflow)?,
                            self.modulus,
                        );
                        if out[i].1 == 0 {
                            out.remove(i);
                        }
                    }
                    Err(i) => out.insert(i, (col, coef)),
                }
            }
        }
        Ok(out)
    }

    /// Ensures solved[col] references only unsolved columns, updating it.
    fn compress(&mut self, col: usize) -> Result<Expr, ReduceError> {
        let expr = self.solved[col].clone().expect("compress of unsolved column");
        if expr
            .iter()
            .all(|&(c, _)| self.solved[c as usize].is_none())
        {
            return Ok(expr);
        }
        let resolved = self.resolve_expr(&expr)?;
        self.solved[col] = Some(resolved.clone());
        Ok(resolved)
    }

    pub fn insert(&mut self, row: &[(u32, i128)]) -> Result<(), ReduceError> {
        self.rows_seen += 1;
        let resolved = self.resolve_expr(row)?;
        if resolved.is_empty() {
            return Ok(());
        }
        // Prefer the smallest column with a unit coefficient.
        let pivot = resolved.iter().find(|&&(_, k)| k == 1 || k == -1).copied();
        match pivot {
            Some((col, coef)) => {
                let mut expr: Expr = Vec::with_capacity(resolved.len() - 1);
                for &(c, k) in &resolved {
                    if c == col {
                        continue;
                    }
                    // coef * x_col + rest = 0  =>  x_col = -rest / coef.
                    expr.push((c, if coef == 1 { -k } else { k }));
                }
                self.solved[col as usize] = Some(expr);
            }
            None => self.residual.push(resolved),
        }
        Ok(())
    }

    /// Finishes reduction: returns surviving columns, the residual relation
    /// rows expressed over them, and retains substitutions for encoding.
    pub fn finalize(mut self) -> Result<ReducedPresentation, ReduceError> {
        let alive: Vec<usize> = (0..self.ncols).filter(|&c| self.solved[c].is_none()).collect();
        let mut alive_index = vec![usize::MAX; self.ncols];
        for (i, &c) in alive.iter().enumerate() {
            alive_index[c] = i;
        }
        let residual = std::mem::take(&mut self.residual);
        // Stream the re-resolved rows into an echelon basis so the final
        // relation matrix has at most one row per surviving generator.
        let mut basis: Option<crate::abgroup::lattice::IncrementalLattice> =
            Some(crate::abgroup::lattice::IncrementalLattice::new(alive.len()));
        let mut big_rows: Vec<Vec<BigInt>> = Vec::new();
        for row in residual {
            let resolved = self.resolve_expr(&row)?;
            if resolved.is_empty() {
                continue;
            }
            let mut dense = vec![0i128; alive.len()];
            for &(c, k) in &resolved {
                dense[alive_index[c as usize]] = k;
            }
            if let Some(lat) = basis.as_mut() {
                if lat.insert(&dense).is_err() {
                    // Fall back to exact BigInt reduction on overflow.
                    for r in lat.rows() {
                        big_rows.push(r.iter().map(|&x| BigInt::from(x)).collect());
                    }
                    big_rows.push(dense.iter().map(|&x| BigInt::from(x)).collect());
                    basis = None;
                }
            } else {
                big_rows.push(dense.iter().map(|&x| BigInt::from(x)).collect());
            }
        }
        if let Some(m) = self.modulus {
            if let Some(lat) = basis.as_mut() {
                let mut row = vec![0i128; alive.len()];
                for idx in 0..alive.len() {
                    row.iter_mut().for_each(|x| *x = 0);
                    row[idx] = m;
                    if lat.insert(&row).is_err() {
                        for r in lat.rows() {
                            big_rows.push(r.iter().map(|&x| BigInt::from(x)).collect());
                        }
                        basis = None;
                        break;
                    }
                }
            }
            if basis.is_none() {
                for idx in 0..alive.len() {
                    let mut row = vec![BigInt::from(0); alive.len()];
                    row[idx] = BigInt::from(m);
                    big_rows.push(row);
                }
            }
        }
        let rows: Vec<Vec<BigInt>> = match basis {
            Some(lat) => lat
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
            None => {
                let m = crate::abgroup::lattice::row_basis_bigint(alive.len(), big_rows);
                (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
            }
        };
        Ok(ReducedPresentation {
            reducer: self,
            alive,
            alive_index,
            residual_rows: rows,
        })
    }
}

pub struct ReducedPresentation {
    reducer: PresentationReducer,
    pub alive: Vec<usize>,
    alive_index: Vec<usize>,
    pub residual_rows: Vec<Vec<BigInt>>,
}

impl ReducedPresentation {
    /// Expresses an original generator over the surviving generators.
    pub fn encode_column(&mut self, col: usize) -> Result<Vec<(usize, i128)>, ReduceError> {
        let resolved = self.reducer.resolve_expr(&[(col as u32, 1)])?;
        Ok(resolved
            .into_iter()
            .map(|(c, k)| (self.alive_index[c as usize], k))
            .collect())
    }

    pub fn encode_combination(
        &mut self,
        terms: &[(usize, i128)],
    ) -> Result<Vec<(usize, i128)>, ReduceError> {
        let expr: Expr = terms.iter().map(|&(c, k)| (c as u32, k)).collect();
        let resolved = self.reducer.resolve_expr(&expr)?;
        Ok(resolved
            .into_iter()
            .map(|(c, k)| (self.alive_index[c as usize], k))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_by_substitution() {
        // x0 + x1 = 0, x1 + x2 = 0, 3*x2 = 0  presents Z/3.
        let mut r = PresentationReducer::new(3);
        r.insert(&[(0, 1), (1, 1)]).unwrap();
        r.insert(&[(1, 1), (2, 1)]).unwrap();
        r.insert(&[(2, 3)]).unwrap();
        let mut p = r.finalize().unwrap();
        assert_eq!(p.alive.len(), 1);
        assert_eq!(p.residual_rows, vec![vec![BigInt::from(3)]]);
        // x0 = -x1 = x2
        assert_eq!(p.encode_column(0).unwrap(), vec![(0, 1)]);
        assert_eq!(p.encode_column(1).unwrap(), vec![(0, -1)]);
    }

    #[test]
    fn unresolvable_rows_go_to_residual() {
        let mut r = PresentationReducer::new(2);
        r.insert(&[(0, 2), (1, 2)]).unwrap();
        r.insert(&[(1, 5)]).unwrap();
        let p = r.finalize().unwrap();
        assert_eq!(p.alive.len(), 2);
        assert_eq!(p.residual_rows.len(), 2);
    }

    #[test]
    fn duplicate_and_zero_rows_vanish() {
        let mut r = PresentationReducer::new(2);
        r.insert(&[(0, 1), (1, -1)]).unwrap();
        r.insert(&[(0, 1), (1, -1)]).unwrap();
        r.insert(&[]).unwrap();
        let p = r.finalize().unwrap();
        assert_eq!(p.alive.len(), 1);
        assert!(p.residual_rows.is_empty());
    }

    #[test]
    fn late_solves_propagate_into_substitutions() {
        // Solve x0 in terms of x1, then x1 in terms of x2; encoding x0 must
        // chase through to x2.
        let mut r = PresentationReducer::new(3);
        r.insert(&[(0, 1), (1, 2)]).unwrap();
        r.insert(&[(1, 1), (2, 4)]).unwrap();
        let mut p = r.finalize().unwrap();
        assert_eq!(p.alive, vec![2]);
        assert_eq!(p.encode_column(0).unwrap(), vec![(0, 8)]);
    }
}
