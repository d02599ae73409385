//! Tiny inline polynomial grammar for `--objective`, `--constraint`, and
//! `--barrier` flags: sums of terms like `2x1^3`, `-x2`, `0.5*x1*x2^2`, `7`.
//! Variables are 1-based (`x1`, `x2`, ...).

use optctl::PolyExpr;

#[derive(Debug, PartialEq)]
pub struct ExprError {
    pub position: usize,
    pub message: String,
}

impl std::fmt::Display for ExprError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "expression error at byte {}: {}",
            self.position, self.message
        )
    }
}

impl std::error::Error for ExprError {}

/// Largest variable index mentioned in the expression (0 when none), for
/// inferring the dimension of a standalone expression.
pub fn max_var_index(text: &str) -> Result<usize, ExprError> {
    let terms = tokenize(text)?;
    Ok(terms
        .iter()
        .flat_map(|t| t.factors.iter().map(|f| f.var))
        .max()
        .unwrap_or(0))
}

/// Parse into a polynomial over `num_vars` variables.
pub fn parse_poly(text: &str, num_vars: usize) -> Result<PolyExpr, ExprError> {
    let terms = tokenize(text)?;
    let mut raw: Vec<(f64, Vec<u32>)> = Vec::new();
    for t in &terms {
        let mut powers = vec![0u32; num_vars];
        for f in &t.factors {
            if f.var == 0 || f.var > num_vars {
                return Err(ExprError {
                    position: f.position,
                    message: format!("variable x{} out of range (1..={num_vars})", f.var),
                });
            }
            powers[f.var - 1] += f.power;
        }
        raw.push((t.coeff, powers));
    }
    PolyExpr::new(num_vars, raw).map_err(|e| ExprError {
        position: 0,
        message: e.to_string(),
    })
}

struct Term {
    coeff: f64,
    factors: Vec<Factor>,
}

struct Factor {
    var: usize,
    power: u32,
    position: usize,
}

fn tokenize(text: &str) -> Result<Vec<Term>, ExprError> {
    let b = text.as_bytes();
    let mut i = 0usize;
    let mut terms = Vec::new();
    let skip_ws = |i: &mut usize| {
        while *i < b.len() && (b[*i] as char).is_whitespace() {
            *i += 1;
        }
    };
    skip_ws(&mut i);
    if i == b.len() {
        return Err(ExprError {
            position: 0,
            message: "empty expression".into(),
        });
    }
    while i < b.len() {
        // sign
        let mut sign = 1.0;
        skip_ws(&mut i);
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            if b[i] == b'-' {
                sign = -1.0;
            }
            i += 1;
            skip_ws(&mut i);
        } else if !terms.is_empty() {
            return Err(ExprError {
                position: i,
                message: "expected '+' or '-' between terms".into(),
            });
        }
        // optional coefficient
        let start = i;
        while i < b.len()
            && (b[i].is_ascii_digit()
                || b[i] == b'.'
                || ((b[i] == b'e' || b[i] == b'E')
                    && i > start
                    && i + 1 < b.len()
                    && (b[i + 1].is_ascii_digit() || b[i + 1] == b'-' || b[i + 1] == b'+'))
                || ((b[i] == b'-' || b[i] == b'+')
                    && i > start
                    && (b[i - 1] == b'e' || b[i - 1] == b'E')))
        {
            i += 1;
        }
        let mut coeff = sign;
        let mut have_any = false;
        if i > start {
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| ExprError {
                position: start,
                message: format!("bad number literal '{lit}'"),
            })?;
            coeff *= v;
            have_any = true;
        }
        // factors
        let mut factors = Vec::new();
        loop {
            skip_ws(&mut i);
            if i < b.len() && b[i] == b'*' {
                i += 1;
                skip_ws(&mut i);
            }
            if i >= b.len() || b[i] != b'x' {
                break;
            }
            let fpos = i;
            i += 1;
            let vstart = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i == vstart {
                return Err(ExprError {
                    position: fpos,
                    message: "expected variable index after 'x'".into(),
                });
            }
            let var: usize = text[vstart..i].parse().unwrap();
            let mut power = 1u32;
            if i < b.len() && b[i] == b'^' {
                i += 1;
                let pstart = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if i == pstart {
                    return Err(ExprError {
                        position: pstart,
                        message: "expected exponent after '^'".into(),
                    });
                }
                power = text[pstart..i].parse().map_err(|_| ExprError {
                    position: pstart,
                    message: "exponent out of range".into(),
                })?;
            }
            factors.push(Factor {
                var,
                power,
                position: fpos,
            });
            have_any = true;
        }
        if !have_any {
            return Err(ExprError {
                position: i,
                message: "expected a number or variable".into(),
            });
        }
        terms.push(Term { coeff, factors });
        skip_ws(&mut i);
    }
    Ok(terms)
}
