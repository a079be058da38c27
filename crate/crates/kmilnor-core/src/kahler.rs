//! Absolute Kähler differentials of a presented finite ring, the de Rham
//! differential, relative groups for a split extension, and the quotient by
//! exact forms.
//!
//! The working presentation is the conormal one: degree-n generators are
//! `b * dx_{i_1} ^ ... ^ dx_{i_n}` over basis monomials `b` and increasing
//! variable tuples, with relations coming from the characteristic and from
//! the Jacobians of the rewrite rules, wedged with every complementary
//! tuple. An independent all-elements presentation (`brute_omega_*`) serves
//! as the oracle on tiny rings.

use crate::abgroup::reduce::PresentationReducer;
use crate::abgroup::{
    lattice_intersection, row_basis_bigint, smith_diagonal, smith_normal_form, solve_in_lattice,
    subgroup_presentation, subgroup_spans_equal, AbGroupError, AbHom, FPAbGroup, IntMatrix, Smith,
};
use crate::fring::{FiniteRing, FringError, Monomial, RingElement, SplitExtension};
use num_bigint::BigInt;
use num_traits::Zero;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KahlerError {
    #[error("degree mismatch: module has degree {expected}, form has degree {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("too large: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Ring(#[from] FringError),
    #[error(transparent)]
    Group(#[from] AbGroupError),
}

/// A formal sum of terms `coefficient * d(arg_1) ^ ... ^ d(arg_n)`.
#[derive(Clone, Debug)]
pub struct FormalDifferential {
    pub degree: usize,
    pub terms: Vec<(RingElement, Vec<RingElement>)>,
}

impl FormalDifferential {
    pub fn term(coef: RingElement, args: Vec<RingElement>) -> Self {
        FormalDifferential {
            degree: args.len(),
            terms: vec![(coef, args)],
        }
    }
}

pub struct OmegaModule {
    pub ring: Arc<FiniteRing>,
    pub degree: usize,
    /// Strictly increasing variable-index tuples.
    pub tuples: Vec<Vec<usize>>,
    tuple_index: HashMap<Vec<usize>, usize>,
    pub group: Arc<FPAbGroup>,
}

fn increasing_tuples(nvars: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, start: usize, nvars: usize, n: usize) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in start..nvars {
            cur.push(i);
            rec(out, cur, i + 1, nvars, n);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    rec(&mut out, &mut cur, 0, nvars, n);
    out
}

impl OmegaModule {
    pub fn ngens(&self) -> usize {
        self.ring.basis_size() * self.tuples.len()
    }

    pub fn gen_index(&self, basis: usize, tuple: usize) -> usize {
        basis * self.tuples.len() + tuple
    }

    pub fn gen_label(&self, index: usize) -> (usize, usize) {
        (index / self.tuples.len(), index % self.tuples.len())
    }

    pub fn describe_gen(&self, index: usize) -> String {
        let (b, t) = self.gen_label(index);
        let mono = self.ring.format_monomial(&self.ring.basis[b]);
        let coef = if mono.is_empty() { "1".to_string() } else { mono };
        let wedge: Vec<String> = self.tuples[t]
            .iter()
            .map(|&v| format!("d{}", self.ring.spec.vars[v]))
            .collect();
        if wedge.is_empty() {
            coef
        } else {
            format!("{}*{}", coef, wedge.join("^"))
        }
    }

    /// Formal partial derivatives of an element, one per variable.
    fn partials(&self, a: &RingElement) -> Vec<RingElement> {
        let ring = &self.ring;
        let nvars = ring.spec.vars.len();
        let mut out = vec![ring.zero(); nvars];
        for (bi, &c) in a.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mono = &ring.basis[bi];
            for v in 0..nvars {
                let e = mono.0[v];
                if e == 0 {
                    continue;
                }
                let mut lower = mono.clone();
                lower.0[v] -= 1;
                let li = ring
                    .monomial_index(&lower)
                    .expect("basis is divisor-closed");
                let coef = (c * e as u64) % ring.characteristic;
                let mut term = ring.zero();
                term.0[li] = coef;
                out[v] = ring.add(&out[v], &term);
            }
        }
        out
    }

    /// Coordinates of a single term `coef * d(args[0]) ^ ... ^ d(args[n-1])`.
    pub fn encode_term(
        &self,
        coef: &RingElement,
        args: &[RingElement],
    ) -> Result<Vec<i64>, KahlerError> {
        if args.len() != self.degree {
            return Err(KahlerError::DegreeMismatch {
                expected: self.degree,
                got: args.len(),
            });
        }
        let ring = &self.ring;
        let nvars = ring.spec.vars.len();
        let mut coords = vec![0i64; self.ngens()];
        if self.degree == 0 {
            for (bi, &c) in coef.0.iter().enumerate() {
                coords[self.gen_index(bi, 0)] += c as i64;
            }
            return Ok(coords);
        }
        if nvars == 0 {
            return Ok(coords);
        }
        let partials: Vec<Vec<RingElement>> = args.iter().map(|a| self.partials(a)).collect();
        // Multilinear expansion over variable index choices.
        let mut choice = vec![0usize; self.degree];
        'outer: loop {
            let mut sorted: Vec<usize> = choice.clone();
            sorted.sort_unstable();
            let distinct = sorted.windows(2).all(|w| w[0] != w[1]);
            if distinct {
                // Sign of the permutation sorting `choice`.
                let mut sign = 1i64;
                let mut perm = choice.clone();
                for i in 0..perm.len() {
                    for j in (i + 1..perm.len()).rev() {
                        if perm[j - 1] > perm[j] {
                            perm.swap(j - 1, j);
                            sign = -sign;
                        }
                    }
                }
                let mut elem = coef.clone();
                for (k, &i) in choice.iter().enumerate() {
                    elem = ring.mul(&elem, &partials[k][i]);
                    if ring.is_zero(&elem) {
                        break;
                    }
                }
                if !ring.is_zero(&elem) {
                    let ti = *self.tuple_index.get(&sorted).expect("tuple exists");
                    for (bi, &c) in elem.0.iter().enumerate() {
                        if c != 0 {
                            coords[self.gen_index(bi, ti)] += sign * c as i64;
                        }
                    }
                }
            }
            for k in (0..self.degree).rev() {
                choice[k] += 1;
                if choice[k] < nvars {
                    continue 'outer;
                }
                choice[k] = 0;
            }
            break;
        }
        Ok(coords)
    }

    pub fn encode_form(&self, form: &FormalDifferential) -> Result<Vec<BigInt>, KahlerError> {
        if form.degree != self.degree {
            return Err(KahlerError::DegreeMismatch {
                expected: self.degree,
                got: form.degree,
            });
        }
        let mut acc = vec![BigInt::zero(); self.ngens()];
        for (coef, args) in &form.terms {
            let t = self.encode_term(coef, args)?;
            for (a, b) in acc.iter_mut().zip(t.iter()) {
                *a += BigInt::from(*b);
            }
        }
        Ok(acc)
    }

    pub fn is_zero_form(&self, form: &FormalDifferential) -> Result<bool, KahlerError> {
        Ok(self.group.is_zero_element(&self.encode_form(form)?))
    }
}

/// The degree-n absolute Kähler differentials of the presented ring.
pub fn omega_n(ring: Arc<FiniteRing>, n: usize) -> OmegaModule {
    let nvars = ring.spec.vars.len();
    let tuples = if n > nvars {
        Vec::new()
    } else {
        increasing_tuples(nvars, n)
    };
    let tuple_index: HashMap<Vec<usize>, usize> = tuples
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();
    let mut module = OmegaModule {
        ring: ring.clone(),
        degree: n,
        tuples,
        tuple_index,
        group: Arc::new(FPAbGroup::trivial()),
    };
    let ngens = module.ngens();
    let mut rows: Vec<Vec<i64>> = Vec::new();
    for g in 0..ngens {
        let mut r = vec![0i64; ngens];
        r[g] = ring.characteristic as i64;
        rows.push(r);
    }
    if n >= 1 && !module.tuples.is_empty() {
        // Jacobian of each rewrite rule, multiplied by each basis monomial
        // and wedged with each complementary (n-1)-tuple.
        let tails = increasing_tuples(nvars, n - 1);
        for rw in &ring.spec.rewrites {
            let jacobian: Vec<RingElement> = (0..nvars)
                .map(|v| {
                    let mut terms: Vec<(i64, Monomial)> = vec![(1, rw.lhs.clone())];
                    for (c, m) in &rw.rhs {
                        terms.push((-c, m.clone()));
                    }
                    let mut acc = ring.zero();
                    for (c, m) in &terms {
                        if m.0[v] == 0 {
                            continue;
                        }
                        let mut lower = m.clone();
                        lower.0[v] -= 1;
                        let scalar =
                            (c * m.0[v] as i64).rem_euclid(ring.characteristic as i64) as u64;
                        let lower_elem =
                            crate::fring::parse::element_from_poly(&ring, &[(1, lower)]);
                        acc = ring.add(&acc, &ring.scalar_mul(scalar, &lower_elem));
                    }
                    acc
                })
                .collect();
            for b in 0..ring.basis_size() {
                for tail in &tails {
                    let mut row = vec![0i64; ngens];
                    let mut nonzero = false;
                    for (v, part) in jacobian.iter().enumerate() {
                        if tail.contains(&v) || ring.is_zero(part) {
                            continue;
                        }
                        let elem = ring.mul(part, &ring.basis_element(b));
                        if ring.is_zero(&elem) {
                            continue;
                        }
                        let pos = tail.iter().take_while(|&&x| x < v).count();
                        let sign = if (tail.len() - pos) % 2 == 0 { 1i64 } else { -1 };
                        let mut tuple = tail.clone();
                        tuple.insert(pos, v);
                        let ti = module.tuple_index[&tuple];
                        for (bi, &c) in elem.0.iter().enumerate() {
                            if c != 0 {
                                row[module.gen_index(bi, ti)] += sign * c as i64;
                                nonzero = true;
                            }
                        }
                    }
                    if nonzero {
                        rows.push(row);
                    }
                }
            }
        }
    }
    module.group = Arc::new(FPAbGroup::new(ngens, IntMatrix::from_i64_rows(ngens, &rows)));
    module
}

/// The de Rham differential `a dx ^ ... -> da ^ dx ^ ...`.
pub fn de_rham_hom(src: &OmegaModule, dst: &OmegaModule) -> Result<AbHom, KahlerError> {
    assert_eq!(dst.degree, src.degree + 1);
    let ring = &src.ring;
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for g in 0..src.ngens() {
        let (b, t) = src.gen_label(g);
        let args: Vec<RingElement> = std::iter::once(ring.basis_element(b))
            .chain(src.tuples[t].iter().map(|&v| {
                let mono = Monomial::var(ring.spec.vars.len(), v);
                ring.basis_element(ring.monomial_index(&mono).expect("var in basis"))
            }))
            .collect();
        let form = FormalDifferential::term(ring.one(), args);
        rows.push(dst.encode_form(&form)?);
    }
    Ok(AbHom::new(
        src.group.clone(),
        dst.group.clone(),
        IntMatrix::from_rows(dst.ngens(), rows),
    )?)
}

/// Row basis for the image of d: Omega^(n-1) -> Omega^n in the target's
/// coordinates.
pub fn exact_form_rows(src: &OmegaModule, dst: &OmegaModule) -> Result<IntMatrix, KahlerError> {
    let d = de_rham_hom(src, dst)?;
    Ok(row_basis_bigint(
        dst.ngens(),
        (0..src.ngens()).map(|i| d.images().row(i).to_vec()),
    ))
}

pub struct RelativeOmega {
    pub ambient: OmegaModule,
    pub sub_module: OmegaModule,
    pub projection: AbHom,
    pub kernel: Arc<FPAbGroup>,
    pub inclusion: AbHom,
}

/// Kernel of Omega^n(R) -> Omega^n(S) induced by the split projection.
pub fn relative_omega(ext: &SplitExtension, n: usize) -> Result<RelativeOmega, KahlerError> {
    let ambient = omega_n(ext.ring.clone(), n);
    let sub_module = omega_n(ext.subring.clone(), n);
    let rvars = &ext.ring.spec.vars;
    let svars = &ext.subring.spec.vars;
    let var_map: Vec<Option<usize>> = rvars
        .iter()
        .map(|v| svars.iter().position(|s| s == v))
        .collect();
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for g in 0..ambient.ngens() {
        let (b, t) = ambient.gen_label(g);
        let mut image = vec![BigInt::zero(); sub_module.ngens()];
        let proj_basis = ext.project(&ext.ring.basis_element(b));
        let mapped: Option<Vec<usize>> = ambient.tuples[t].iter().map(|&v| var_map[v]).collect();
        if let (Some(tuple), false) = (mapped, ext.subring.is_zero(&proj_basis)) {
            // The projection of a basis monomial is itself or zero, and
            // surviving variables keep their relative order, so no signs.
            let sb = proj_basis
                .0
                .iter()
                .position(|&c| c != 0)
                .expect("nonzero projection");
            if let Some(&ti) = sub_module.tuple_index.get(&tuple) {
                image[sub_module.gen_index(sb, ti)] = BigInt::from(1);
            }
        }
        rows.push(image);
    }
    let projection = AbHom::new(
        ambient.group.clone(),
        sub_module.group.clone(),
        IntMatrix::from_rows(sub_module.ngens(), rows),
    )?;
    let (kernel, inclusion) = projection.kernel();
    Ok(RelativeOmega {
        ambient,
        sub_module,
        projection,
        kernel,
        inclusion,
    })
}

/// A generator of the quotient-side working presentation:
/// `coef * db_1 ^ ... ^ db_n` with `coef` either 1 or an ideal monomial,
/// the `b_k` distinct basis monomials, and at least one ideal ingredient.
#[derive(Clone, Debug)]
pub struct QuotientFamilyGen {
    /// None: coefficient 1. Some(i): R-basis index of an ideal monomial.
    pub coef: Option<usize>,
    /// R-basis indices of the wedge arguments, strictly increasing.
    pub args: Vec<usize>,
}

pub struct OmegaQuotient {
    pub ext: Arc<SplitExtension>,
    pub degree: usize,
    pub ambient: OmegaModule,
    /// Ambient group with the exact-intersection rows adjoined.
    pub ambient_mod: Arc<FPAbGroup>,
    /// Relative kernel generators in ambient coordinates.
    pub kernel_rows: IntMatrix,
    /// Oracle presentation on the kernel generators.
    pub oracle: FPAbGroup,
    pub family: Vec<QuotientFamilyGen>,
    pub family_rows: IntMatrix,
    /// Working presentation on the family generators.
    pub group: Arc<FPAbGroup>,
    /// True when the family generators span the relative subgroup.
    pub family_spans: bool,
    solve_smith: Smith,
}

/// `Omega^n_{R,I} / (d Omega^{n-1}_R  intersected with  Omega^n_{R,I})`.
pub fn omega_quotient(ext: &Arc<SplitExtension>, n: usize) -> Result<OmegaQuotient, KahlerError> {
    assert!(n >= 1, "the exact-form quotient lives in positive degrees");
    let rel = relative_omega(ext, n)?;
    let ambient = rel.ambient;
    let kernel_rows = {
        let incl = rel.inclusion.images();
        row_basis_bigint(ambient.ngens(), (0..incl.rows()).map(|i| incl.row(i).to_vec()))
    };
    let lower = omega_n(ext.ring.clone(), n - 1);
    let d_rows = exact_form_rows(&lower, &ambient)?;
    let relations = ambient.group.relations();
    let exact_lattice = IntMatrix::stack(&d_rows, relations);
    let relative_lattice = IntMatrix::stack(&kernel_rows, relations);
    let intersection = lattice_intersection(&exact_lattice, &relative_lattice);
    let ambient_mod = Arc::new(FPAbGroup::new(
        ambient.ngens(),
        IntMatrix::stack(relations, &intersection),
    ));

    let (oracle, _) = subgroup_presentation(&ambient_mod, &kernel_rows);

    let ring = &ext.ring;
    let ideal_flags: Vec<bool> = {
        let mut f = vec![false; ring.basis_size()];
        for &i in &ext.ideal_monomials {
            f[i] = true;
        }
        f
    };
    let arg_candidates: Vec<usize> = (1..ring.basis_size()).collect();
    let mut combos: Vec<Vec<usize>> = Vec::new();
    {
        fn rec(
            out: &mut Vec<Vec<usize>>,
            cur: &mut Vec<usize>,
            cands: &[usize],
            start: usize,
            n: usize,
        ) {
            if cur.len() == n {
                out.push(cur.clone());
                return;
            }
            for k in start..cands.len() {
                cur.push(cands[k]);
                rec(out, cur, cands, k + 1, n);
                cur.pop();
            }
        }
        let mut cur = Vec::new();
        rec(&mut combos, &mut cur, &arg_candidates, 0, n);
    }
    let mut family = Vec::new();
    for coef in std::iter::once(None).chain(ext.ideal_monomials.iter().map(|&i| Some(i))) {
        for args in &combos {
            if coef.is_some() || args.iter().any(|&a| ideal_flags[a]) {
                family.push(QuotientFamilyGen {
                    coef,
                    args: args.clone(),
                });
            }
        }
    }
    let mut family_rows_vec: Vec<Vec<BigInt>> = Vec::new();
    for g in &family {
        let coef_elem = match g.coef {
            None => ring.one(),
            Some(i) => ring.basis_element(i),
        };
        let args: Vec<RingElement> = g.args.iter().map(|&i| ring.basis_element(i)).collect();
        family_rows_vec.push(ambient.encode_form(&FormalDifferential::term(coef_elem, args))?);
    }
    let family_rows = IntMatrix::from_rows(ambient.ngens(), family_rows_vec);

    // Span comparison happens before quotienting by exact forms.
    let family_spans = subgroup_spans_equal(&ambient.group, &family_rows, &kernel_rows);

    let (group, _) = subgroup_presentation(&ambient_mod, &family_rows);
    let solve_smith = smith_normal_form(&IntMatrix::stack(&family_rows, ambient_mod.relations()));
    Ok(OmegaQuotient {
        ext: ext.clone(),
        degree: n,
        ambient,
        ambient_mod,
        kernel_rows,
        oracle,
        family,
        family_rows,
        group: Arc::new(group),
        family_spans,
        solve_smith,
    })
}

impl OmegaQuotient {
    /// Expresses an ambient coordinate vector in family-generator
    /// coordinates; None when it lies outside the spanned subgroup.
    pub fn solve_family_coords(&self, ambient: &[BigInt]) -> Option<Vec<BigInt>> {
        let x = solve_in_lattice(&self.solve_smith, ambient)?;
        Some(x[..self.family.len()].to_vec())
    }

    pub fn encode_form(
        &self,
        form: &FormalDifferential,
    ) -> Result<Option<Vec<BigInt>>, KahlerError> {
        let v = self.ambient.encode_form(form)?;
        Ok(self.solve_family_coords(&v))
    }

    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.oracle.invariant_factors()
    }

    pub fn describe_family_gen(&self, i: usize) -> String {
        let g = &self.family[i];
        let ring = &self.ext.ring;
        let coef = match g.coef {
            None => "1".to_string(),
            Some(b) => ring.format_monomial(&ring.basis[b]),
        };
        let wedge: Vec<String> = g
            .args
            .iter()
            .map(|&b| format!("d({})", ring.format_monomial(&ring.basis[b])))
            .collect();
        format!("{}*{}", coef, wedge.join("^"))
    }
}

/// Does the literal family `r d(ideal elems) ^ d(units)`, with `r` in {1}
/// or I, span the whole relative module? Exhaustive, capped.
pub fn check_relative_generators(
    ext: &Arc<SplitExtension>,
    n: usize,
    cap: u64,
) -> Result<bool, KahlerError> {
    if n == 0 {
        return Ok(true);
    }
    let rel = relative_omega(ext, n)?;
    let ambient = &rel.ambient;
    let ring = &ext.ring;
    let ideals: Vec<RingElement> = ext.ideal_elements();
    let units: Vec<RingElement> = ring.units_lex().to_vec();
    let mut count: u64 = 0;
    for k in 0..=n {
        let forms = (ideals.len() as u64 + 1)
            .saturating_mul((ideals.len() as u64).pow(k as u32))
            .saturating_mul((units.len() as u64).pow((n - k) as u32));
        count = count.saturating_add(forms);
    }
    if count > cap {
        return Err(KahlerError::TooLarge(format!(
            "{count} candidate generators exceed the cap {cap}"
        )));
    }
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for k in 0..=n {
        let mut coefs: Vec<RingElement> = vec![ring.one()];
        if k == 0 {
            // With no ideal d-entries the coefficient must supply the
            // ideal ingredient.
            coefs = ideals.clone();
        } else {
            coefs.extend(ideals.iter().cloned());
        }
        let radix: Vec<usize> = (0..n)
            .map(|slot| if slot < k { ideals.len() } else { units.len() })
            .collect();
        if radix.iter().any(|&r| r == 0) {
            continue;
        }
        let mut idx = vec![0usize; n];
        loop {
            let args: Vec<RingElement> = idx
                .iter()
                .enumerate()
                .map(|(slot, &i)| {
                    if slot < k {
                        ideals[i].clone()
                    } else {
                        units[i].clone()
                    }
                })
                .collect();
            for coef in &coefs {
                rows.push(
                    ambient.encode_form(&FormalDifferential::term(coef.clone(), args.clone()))?,
                );
            }
            let mut slot = n;
            let mut done = true;
            while slot > 0 {
                slot -= 1;
                idx[slot] += 1;
                if idx[slot] < radix[slot] {
                    done = false;
                    break;
                }
                idx[slot] = 0;
            }
            if done {
                break;
            }
        }
    }
    let incl = rel.inclusion.images();
    let kernel_rows = row_basis_bigint(
        ambient.ngens(),
        (0..incl.rows()).map(|i| incl.row(i).to_vec()),
    );
    let family = row_basis_bigint(ambient.ngens(), rows);
    Ok(subgroup_spans_equal(&ambient.group, &family, &kernel_rows))
}

/// `coords ^ (dr / r)` for a unit r, from ambient degree n into degree n+1.
pub fn wedge_with_dlog(
    src: &OmegaModule,
    coords: &[BigInt],
    r: &RingElement,
    dst: &OmegaModule,
) -> Result<Vec<BigInt>, KahlerError> {
    assert_eq!(dst.degree, src.degree + 1);
    let ring = &src.ring;
    let rinv = ring.invert(r).ok_or_else(|| {
        KahlerError::Ring(FringError::DomainError("wedge_with_dlog needs a unit".into()))
    })?;
    let partials = src.partials(r);
    let q: Vec<RingElement> = partials.iter().map(|p| ring.mul(&rinv, p)).collect();
    let mut out = vec![BigInt::zero(); dst.ngens()];
    for g in 0..src.ngens() {
        if coords[g].is_zero() {
            continue;
        }
        let (b, t) = src.gen_label(g);
        let tail = &src.tuples[t];
        for (v, qv) in q.iter().enumerate() {
            if tail.contains(&v) || ring.is_zero(qv) {
                continue;
            }
            let elem = ring.mul(qv, &ring.basis_element(b));
            if ring.is_zero(&elem) {
                continue;
            }
            // dx_tail ^ dx_v: move dx_v left past tail entries > v.
            let pos = tail.iter().take_while(|&&x| x < v).count();
            let sign: i64 = if (tail.len() - pos) % 2 == 0 { 1 } else { -1 };
            let mut tuple = tail.clone();
            tuple.insert(pos, v);
            let ti = dst.tuple_index[&tuple];
            for (bi, &c) in elem.0.iter().enumerate() {
                if c != 0 {
                    let idx = dst.gen_index(bi, ti);
                    out[idx] += &coords[g] * BigInt::from(sign * c as i64);
                }
            }
        }
    }
    Ok(out)
}

fn invariants_from_diag(diag: Vec<BigInt>, ngens: usize) -> Vec<BigInt> {
    let rank = diag.iter().filter(|d| !d.is_zero()).count();
    let mut out: Vec<BigInt> = diag
        .into_iter()
        .filter(|d| !d.is_zero() && *d != BigInt::from(1))
        .collect();
    out.extend(std::iter::repeat(BigInt::zero()).take(ngens - rank));
    out
}

/// Invariant factors of the literal all-elements presentation of Omega^n:
/// generators are (n+1)-tuples of ring elements, relations are coefficient
/// additivity, d-slot additivity, the Leibniz rule, and the alternating
/// relation. This is the independence oracle for tiny rings.
pub fn brute_omega_invariants(
    ring: &Arc<FiniteRing>,
    n: usize,
    gen_cap: u64,
) -> Result<Vec<BigInt>, KahlerError> {
    let elems: Vec<RingElement> = ring.elements().collect();
    let k = elems.len();
    let ngens_u64 = (k as u64).checked_pow(n as u32 + 1);
    let Some(ngens) = ngens_u64.filter(|&g| g <= gen_cap) else {
        return Err(KahlerError::TooLarge(format!(
            "|R|^{} exceeds the brute-force cap {}",
            n + 1,
            gen_cap
        )));
    };
    let ngens = ngens as usize;
    let pos: HashMap<&RingElement, usize> = elems.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut add_index = vec![0usize; k * k];
    let mut mul_index = vec![0usize; k * k];
    for i in 0..k {
        for j in 0..k {
            add_index[i * k + j] = pos[&ring.add(&elems[i], &elems[j])];
            mul_index[i * k + j] = pos[&ring.mul(&elems[i], &elems[j])];
        }
    }
    let index = |ids: &[usize]| -> usize {
        let mut acc = 0usize;
        for &i in ids {
            acc = acc * k + i;
        }
        acc
    };
    // Every generator is killed by the characteristic (coefficient
    // additivity collapses char * (r0, ..) to (0, ..) which is itself a
    // relation), so the reducer can balance coefficients modulo it.
    let mut reducer = PresentationReducer::new_with_exponent(ngens, ring.characteristic as i128);
    let mut ids = vec![0usize; n + 1];
    loop {
        for slot in 0..=n {
            for a in 0..k {
                for b in 0..=a {
                    let mut t_sum = ids.clone();
                    t_sum[slot] = add_index[a * k + b];
                    let mut t_a = ids.clone();
                    t_a[slot] = a;
                    let mut t_b = ids.clone();
                    t_b[slot] = b;
                    reducer
                        .insert(&[
                            (index(&t_sum) as u32, 1),
                            (index(&t_a) as u32, -1),
                            (index(&t_b) as u32, -1),
                        ])
                        .expect("small coefficients");
                    if slot > 0 {
                        // Leibniz in this d-slot:
                        // r0 d(ab)... = (r0 a) d(b)... + (r0 b) d(a)...
                        let mut t_prod = ids.clone();
                        t_prod[slot] = mul_index[a * k + b];
                        let mut t_coef_a = ids.clone();
                        t_coef_a[0] = mul_index[ids[0] * k + a];
                        t_coef_a[slot] = b;
                        let mut t_coef_b = ids.clone();
                        t_coef_b[0] = mul_index[ids[0] * k + b];
                        t_coef_b[slot] = a;
                        reducer
                            .insert(&[
                                (index(&t_prod) as u32, 1),
                                (index(&t_coef_a) as u32, -1),
                                (index(&t_coef_b) as u32, -1),
                            ])
                            .expect("small coefficients");
                    }
                }
            }
        }
        for slot in 1..n {
            if ids[slot] == ids[slot + 1] {
                reducer
                    .insert(&[(index(&ids) as u32, 1)])
                    .expect("small coefficients");
            }
        }
        let mut slot = n + 1;
        let mut done = true;
        while slot > 0 {
            slot -= 1;
            ids[slot] += 1;
            if ids[slot] < k {
                done = false;
                break;
            }
            ids[slot] = 0;
        }
        if done {
            break;
        }
    }
    let reduced = reducer.finalize().expect("small coefficients");
    let alive = reduced.alive.len();
    let rows = IntMatrix::from_rows(alive, reduced.residual_rows.clone());
    let diag = smith_diagonal(&rows);
    Ok(invariants_from_diag(diag, alive))
}
