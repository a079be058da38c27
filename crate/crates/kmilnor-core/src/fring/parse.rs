//! Text formats: ring specification files (TOML) and the small expression
//! grammars for polynomials, Steinberg symbols, Dennis-Stein symbols and
//! differential forms.

use super::{build_ring, FiniteRing, FringError, Monomial, RingElement, RingSpec, Rewrite};
use serde::Deserialize;
use std::sync::Arc;

#[derive(Deserialize)]
struct RingFile {
    name: Option<String>,
    char: u64,
    #[serde(default)]
    vars: Vec<String>,
    #[serde(default)]
    rewrites: Vec<String>,
    extension: Option<ExtensionSection>,
}

#[derive(Deserialize)]
struct ExtensionSection {
    ideal_gens: Vec<String>,
}

pub struct ParsedRingFile {
    pub spec: RingSpec,
    pub ideal_gens: Vec<String>,
}

/// Parses the ring file format:
///
/// ```toml
/// name = "f7te"
/// char = 7
/// vars = ["t", "e"]
/// rewrites = ["t^2 -> 0", "e^2 -> 0"]
/// [extension]
/// ideal_gens = ["e"]
/// ```
pub fn parse_ring_file(text: &str, default_name: &str) -> Result<ParsedRingFile, FringError> {
    let file: RingFile = toml::from_str(text).map_err(|e| {
        let (line, col) = e
            .span()
            .map(|s| offset_to_line_col(text, s.start))
            .unwrap_or((1, 1));
        FringError::Parse {
            line,
            col,
            msg: e.message().to_string(),
        }
    })?;
    let mut rewrites = Vec::new();
    for (idx, rw) in file.rewrites.iter().enumerate() {
        rewrites.push(parse_rewrite(rw, &file.vars).map_err(|msg| FringError::Parse {
            line: idx + 1,
            col: 1,
            msg: format!("rewrite '{rw}': {msg}"),
        })?);
    }
    Ok(ParsedRingFile {
        spec: RingSpec {
            name: file.name.unwrap_or_else(|| default_name.to_string()),
            characteristic: file.char,
            vars: file.vars,
            rewrites,
        },
        ideal_gens: file.extension.map(|e| e.ideal_gens).unwrap_or_default(),
    })
}

pub fn build_ring_from_file(
    text: &str,
    default_name: &str,
) -> Result<(Arc<FiniteRing>, Vec<RingElement>), FringError> {
    let parsed = parse_ring_file(text, default_name)?;
    let ring = build_ring(parsed.spec)?;
    let mut gens = Vec::new();
    for g in &parsed.ideal_gens {
        gens.push(parse_element(&ring, g)?);
    }
    Ok((ring, gens))
}

fn offset_to_line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in text.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn parse_rewrite(text: &str, vars: &[String]) -> Result<Rewrite, String> {
    let Some((lhs, rhs)) = text.split_once("->") else {
        return Err("missing '->'".into());
    };
    let lhs_poly = parse_poly(lhs.trim(), vars)?;
    if lhs_poly.len() != 1 || lhs_poly[0].0 != 1 {
        return Err("left-hand side must be a single monic monomial".into());
    }
    Ok(Rewrite {
        lhs: lhs_poly.into_iter().next().unwrap().1,
        rhs: parse_poly(rhs.trim(), vars)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str, vars: &[String]) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Int(s.parse().map_err(|_| "integer overflow")?));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                i += 1;
            }
            let run: String = chars[start..i].iter().collect();
            // Either a full variable name, or a juxtaposition of
            // single-character variable names like "te".
            if let Some(v) = vars.iter().position(|v| *v == run) {
                out.push(Tok::Var(v));
            } else {
                for ch in run.chars() {
                    let name = ch.to_string();
                    let v = vars
                        .iter()
                        .position(|v| *v == name)
                        .ok_or_else(|| format!("unknown variable '{run}'"))?;
                    out.push(Tok::Var(v));
                }
            }
        } else {
            out.push(match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => return Err(format!("unexpected character '{c}'")),
            });
            i += 1;
        }
    }
    Ok(out)
}

/// Parses a polynomial with integer coefficients over the given variables:
/// sums of terms, `*` or juxtaposition for products, `^` for powers.
pub fn parse_poly(text: &str, vars: &[String]) -> Result<Vec<(i64, Monomial)>, String> {
    let toks = tokenize(text, vars)?;
    let mut terms = Vec::new();
    let mut i = 0;
    let mut sign = 1i64;
    let mut expect_term = true;
    let nvars = vars.len();
    while i < toks.len() {
        match &toks[i] {
            Tok::Plus if !expect_term => {
                sign = 1;
                expect_term = true;
                i += 1;
            }
            Tok::Minus => {
                if expect_term {
                    sign = -sign;
                } else {
                    sign = -1;
                    expect_term = true;
                }
                i += 1;
            }
            _ if expect_term => {
                let mut coef: i64 = 1;
                let mut mono = Monomial::one(nvars);
                let mut saw_factor = false;
                loop {
                    match toks.get(i) {
                        Some(Tok::Int(n)) => {
                            coef = coef
                                .checked_mul(*n)
                                .ok_or_else(|| "coefficient overflow".to_string())?;
                            saw_factor = true;
                            i += 1;
                        }
                        Some(Tok::Var(v)) => {
                            let mut exp = 1u32;
                            if let Some(Tok::Caret) = toks.get(i + 1) {
                                match toks.get(i + 2) {
                                    Some(Tok::Int(n)) if *n >= 0 => {
                                        exp = *n as u32;
                                        i += 2;
                                    }
                                    _ => return Err("expected exponent after '^'".into()),
                                }
                            }
                            mono.0[*v] += exp;
                            saw_factor = true;
                            i += 1;
                        }
                        Some(Tok::Star) => {
                            i += 1;
                        }
                        _ => break,
                    }
                }
                if !saw_factor {
                    return Err("expected a term".into());
                }
                terms.push((sign * coef, mono));
                sign = 1;
                expect_term = false;
            }
            t => return Err(format!("unexpected token {t:?}")),
        }
    }
    if expect_term && !terms.is_empty() {
        return Err("dangling operator".into());
    }
    if terms.is_empty() {
        return Err("empty polynomial".into());
    }
    Ok(terms)
}

/// Parses a polynomial expression into a ring element, reducing monomials.
pub fn parse_element(ring: &FiniteRing, text: &str) -> Result<RingElement, FringError> {
    let terms = parse_poly(text, &ring.spec.vars).map_err(|msg| FringError::Parse {
        line: 1,
        col: 1,
        msg,
    })?;
    Ok(element_from_poly(ring, &terms))
}

/// Evaluates an integer polynomial in the ring (reducing each monomial).
pub fn element_from_poly(ring: &FiniteRing, terms: &[(i64, Monomial)]) -> RingElement {
    let mut acc = ring.zero();
    for (c, mono) in terms {
        // Build the monomial as a product of variables so reduction happens
        // through the multiplication table.
        let mut elem = ring.from_integer(*c);
        for (v, &e) in mono.0.iter().enumerate() {
            let var = Monomial::var(ring.spec.vars.len(), v);
            let vi = ring
                .monomial_index(&var)
                .expect("variables are basis monomials");
            for _ in 0..e {
                elem = ring.mul(&elem, &ring.basis_element(vi));
            }
        }
        acc = ring.add(&acc, &elem);
    }
    acc
}

/// Steinberg symbol words: `{a, b, c}{d, e, f}^-1 ...`
pub fn parse_symbol_word(
    ring: &FiniteRing,
    text: &str,
) -> Result<Vec<(Vec<RingElement>, i32)>, FringError> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        if !rest.starts_with('{') {
            return Err(FringError::Parse {
                line: 1,
                col: 1,
                msg: "expected '{'".into(),
            });
        }
        let Some(close) = rest.find('}') else {
            return Err(FringError::Parse {
                line: 1,
                col: 1,
                msg: "missing '}'".into(),
            });
        };
        let inner = &rest[1..close];
        let entries: Result<Vec<RingElement>, FringError> = inner
            .split(',')
            .map(|p| parse_element(ring, p.trim()))
            .collect();
        rest = rest[close + 1..].trim_start();
        let mut exp = 1i32;
        if let Some(stripped) = rest.strip_prefix("^-1") {
            exp = -1;
            rest = stripped.trim_start();
        }
        out.push((entries?, exp));
    }
    Ok(out)
}

/// Dennis-Stein symbol: `<a, b>`
pub fn parse_dennis_stein_symbol(
    ring: &FiniteRing,
    text: &str,
) -> Result<(RingElement, RingElement), FringError> {
    let t = text.trim();
    let inner = t
        .strip_prefix('<')
        .and_then(|s| s.strip_suffix('>'))
        .ok_or_else(|| FringError::Parse {
            line: 1,
            col: 1,
            msg: "expected '<a, b>'".into(),
        })?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 2 {
        return Err(FringError::Parse {
            line: 1,
            col: 1,
            msg: "expected exactly two entries".into(),
        });
    }
    Ok((
        parse_element(ring, parts[0].trim())?,
        parse_element(ring, parts[1].trim())?,
    ))
}

/// Differential form expressions: `coef * d(expr) ^ d(expr) ^ ...`.
/// The coefficient is optional (defaults to 1).
pub fn parse_differential(
    ring: &FiniteRing,
    text: &str,
) -> Result<(RingElement, Vec<RingElement>), FringError> {
    let t = text.trim();
    let first_d = t.find("d(").ok_or_else(|| FringError::Parse {
        line: 1,
        col: 1,
        msg: "expected at least one d(...) factor".into(),
    })?;
    let coef_text = t[..first_d].trim().trim_end_matches('*').trim();
    let coef_text = coef_text
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .unwrap_or(coef_text);
    let coef = if coef_text.is_empty() {
        ring.one()
    } else {
        parse_element(ring, coef_text)?
    };
    let mut args = Vec::new();
    let mut rest = &t[first_d..];
    loop {
        let rest2 = rest.trim_start().trim_start_matches('^').trim_start();
        if rest2.is_empty() {
            break;
        }
        if !rest2.starts_with("d(") {
            return Err(FringError::Parse {
                line: 1,
                col: 1,
                msg: "expected 'd('".into(),
            });
        }
        let Some(close) = rest2.find(')') else {
            return Err(FringError::Parse {
                line: 1,
                col: 1,
                msg: "missing ')'".into(),
            });
        };
        args.push(parse_element(ring, &rest2[2..close])?);
        rest = &rest2[close + 1..];
    }
    Ok((coef, args))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f7e() -> Arc<FiniteRing> {
        let (ring, _) = build_ring_from_file(
            "name = \"f7e\"\nchar = 7\nvars = [\"e\"]\nrewrites = [\"e^2 -> 0\"]\n",
            "f7e",
        )
        .unwrap();
        ring
    }

    #[test]
    fn parses_ring_file_with_extension() {
        let text = "char = 7\nvars = [\"t\", \"e\"]\nrewrites = [\"t^2 -> 0\", \"e^2 -> 0\"]\n\
                    [extension]\nideal_gens = [\"e\"]\n";
        let parsed = parse_ring_file(text, "x").unwrap();
        assert_eq!(parsed.spec.characteristic, 7);
        assert_eq!(parsed.spec.vars, vec!["t", "e"]);
        assert_eq!(parsed.ideal_gens, vec!["e"]);
    }

    #[test]
    fn reports_parse_position_on_bad_toml() {
        let err = match parse_ring_file("char = \"seven\"\n", "x") {
            Err(e) => e,
            Ok(_) => panic!("expected parse failure"),
        };
        match err {
            FringError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn polynomial_grammar() {
        let ring = f7e();
        let e = parse_element(&ring, "1 + 3e").unwrap();
        assert_eq!(e.0, vec![1, 3]);
        let e = parse_element(&ring, "2*e + 6 + e").unwrap();
        assert_eq!(e.0, vec![6, 3]);
        let e = parse_element(&ring, "-1").unwrap();
        assert_eq!(e.0, vec![6, 0]);
        // e^2 reduces to zero
        let e = parse_element(&ring, "e^2 + 5").unwrap();
        assert_eq!(e.0, vec![5, 0]);
    }

    #[test]
    fn juxtaposition_of_single_letter_vars() {
        let text = "char = 7\nvars = [\"t\", \"e\"]\nrewrites = [\"t^2 -> 0\", \"e^2 -> 0\"]\n";
        let (ring, _) = build_ring_from_file(text, "x").unwrap();
        let a = parse_element(&ring, "3te").unwrap();
        let b = parse_element(&ring, "3*t*e").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symbol_and_differential_grammars() {
        let ring = f7e();
        let word = parse_symbol_word(&ring, "{1+e, 3}{2, 5}^-1").unwrap();
        assert_eq!(word.len(), 2);
        assert_eq!(word[0].1, 1);
        assert_eq!(word[1].1, -1);
        let (coef, args) = parse_differential(&ring, "e * d(1+e) ^ d(3)").unwrap();
        assert_eq!(coef.0, vec![0, 1]);
        assert_eq!(args.len(), 2);
        let (coef, args) = parse_differential(&ring, "d(e)").unwrap();
        assert!(ring.is_one(&coef));
        assert_eq!(args.len(), 1);
    }
}
