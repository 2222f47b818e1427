//! Symmetry operators written as coordinate triplets, e.g. `-y,x-y,z+1/2`.

use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lattice::wrap_unit;

pub type Rational = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymopError {
    #[error("empty operator")]
    Empty,
    #[error("unexpected {found:?} at position {position} in {text:?}")]
    Token { text: String, position: usize, found: char },
    #[error("coordinate {var:?} is beyond dimension {dim}")]
    Dimension { var: char, dim: usize },
    #[error("malformed term in {0:?}")]
    Malformed(String),
    #[error("rotation part has determinant {0}, expected ±1")]
    Determinant(Rational),
    #[error("operators support at most 3 coordinates, got {0}")]
    TooManyCoordinates(usize),
}

/// An affine map `x ↦ R·x + t` on fractional coordinates with exact entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymmetryOp {
    rotation: Vec<Vec<Rational>>,
    translation: Vec<Rational>,
}

impl SymmetryOp {
    pub fn identity(dim: usize) -> Self {
        let rotation = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                    .collect()
            })
            .collect();
        SymmetryOp { rotation, translation: vec![Rational::zero(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn rotation(&self) -> &[Vec<Rational>] {
        &self.rotation
    }

    /// Translation part, wrapped into `[0,1)`.
    pub fn translation(&self) -> &[Rational] {
        &self.translation
    }

    /// Applies the operator in floating point and wraps the result into `[0,1)`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.rotation
            .iter()
            .zip(&self.translation)
            .map(|(row, t)| {
                let mut s = to_f64(*t);
                for (r, x) in row.iter().zip(p) {
                    if !r.is_zero() {
                        s += to_f64(*r) * x;
                    }
                }
                wrap_unit(s)
            })
            .collect()
    }
}

fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl fmt::Display for SymmetryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const VARS: [char; 3] = ['x', 'y', 'z'];
        let parts: Vec<String> = self
            .rotation
            .iter()
            .zip(&self.translation)
            .map(|(row, t)| {
                let mut s = String::new();
                for (c, r) in row.iter().enumerate() {
                    if r.is_zero() {
                        continue;
                    }
                    let sign = if r.is_negative() { "-" } else if s.is_empty() { "" } else { "+" };
                    let mag = r.abs();
                    if mag.is_one() {
                        s.push_str(&format!("{sign}{}", VARS[c]));
                    } else {
                        s.push_str(&format!("{sign}{mag}*{}", VARS[c]));
                    }
                }
                if !t.is_zero() {
                    s.push_str(&format!("+{t}"));
                }
                if s.is_empty() {
                    s.push('0');
                }
                s
            })
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

fn determinant(m: &[Vec<Rational>]) -> Rational {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("dimension checked by the parser"),
    }
}

/// Parses an operator such as `x+1/2,-y,z`.
pub fn parse_symmetry_op(s: &str) -> Result<SymmetryOp, SymopError> {
    let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let text = text.trim_matches(|c| c == '\'' || c == '"');
    if text.is_empty() {
        return Err(SymopError::Empty);
    }
    let parts: Vec<&str> = text.split(',').collect();
    let dim = parts.len();
    if dim > 3 {
        return Err(SymopError::TooManyCoordinates(dim));
    }
    let mut rotation = Vec::with_capacity(dim);
    let mut translation = Vec::with_capacity(dim);
    for part in parts {
        let (row, t) = parse_expression(part, dim)?;
        rotation.push(row);
        translation.push(wrap_rational(t));
    }
    let det = determinant(&rotation);
    if det.abs() != Rational::one() {
        return Err(SymopError::Determinant(det));
    }
    Ok(SymmetryOp { rotation, translation })
}

fn wrap_rational(t: Rational) -> Rational {
    t - t.floor()
}

fn parse_expression(expr: &str, dim: usize) -> Result<(Vec<Rational>, Rational), SymopError> {
    if expr.is_empty() {
        return Err(SymopError::Empty);
    }
    let chars: Vec<char> = expr.chars().collect();
    let mut row = vec![Rational::zero(); dim];
    let mut constant = Rational::zero();
    let mut pos = 0;
    let token_error = |position: usize| SymopError::Token {
        text: expr.to_string(),
        position,
        found: chars.get(position).copied().unwrap_or('\0'),
    };
    while pos < chars.len() {
        let mut sign = Rational::one();
        if chars[pos] == '+' || chars[pos] == '-' {
            if chars[pos] == '-' {
                sign = -sign;
            }
            pos += 1;
        } else if pos > 0 {
            return Err(token_error(pos));
        }
        let coefficient = match parse_number(&chars, &mut pos) {
            Some(mut value) => {
                if pos < chars.len() && chars[pos] == '/' {
                    pos += 1;
                    let den = parse_number(&chars, &mut pos).ok_or_else(|| token_error(pos))?;
                    if den.is_zero() {
                        return Err(SymopError::Malformed(expr.to_string()));
                    }
                    value /= den;
                }
                if pos < chars.len() && chars[pos] == '*' {
                    pos += 1;
                }
                Some(value)
            }
            None => None,
        };
        let var = match chars.get(pos) {
            Some(c) if c.is_ascii_alphabetic() => {
                let index = match c.to_ascii_lowercase() {
                    'x' => 0,
                    'y' => 1,
                    'z' => 2,
                    _ => return Err(token_error(pos)),
                };
                if index >= dim {
                    return Err(SymopError::Dimension { var: *c, dim });
                }
                pos += 1;
                Some(index)
            }
            _ => None,
        };
        match (coefficient, var) {
            (Some(c), Some(v)) => row[v] += sign * c,
            (None, Some(v)) => row[v] += sign,
            (Some(c), None) => constant += sign * c,
            (None, None) => return Err(token_error(pos)),
        }
        // divisors after a variable, as in "x/2", are not part of the grammar
        if var.is_some() && pos < chars.len() && chars[pos] == '/' {
            return Err(SymopError::Malformed(expr.to_string()));
        }
    }
    Ok((row, constant))
}

/// Parses an unsigned integer or decimal literal as an exact rational.
fn parse_number(chars: &[char], pos: &mut usize) -> Option<Rational> {
    let start = *pos;
    let mut numer: i64 = 0;
    let mut denom: i64 = 1;
    let mut seen_digit = false;
    let mut seen_point = false;
    while *pos < chars.len() {
        let c = chars[*pos];
        if let Some(d) = c.to_digit(10) {
            numer = numer.checked_mul(10)?.checked_add(d as i64)?;
            if seen_point {
                denom = denom.checked_mul(10)?;
            }
            seen_digit = true;
        } else if c == '.' && !seen_point {
            seen_point = true;
        } else {
            break;
        }
        *pos += 1;
    }
    if !seen_digit {
        *pos = start;
        return None;
    }
    Some(Rational::new(numer, denom))
}
