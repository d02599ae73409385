//! Problem-spec documents: a JSON format for parametric programs.
//!
//! Schema: `name`, dimensions `n`, `m`, `p`, then sparse polynomial entries
//! `Q` (upper triangle, `{row, col, terms}`), `c` (`{row, terms}`), `A`
//! (`{row, col, terms}`), `b` (`{row, terms}`), where each term is
//! `{coeff, powers}` with `powers` of length `n`. Omitted entries are zero.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

use super::{ParametricQp, PolyExpr, MAX_DEGREE};

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    name: String,
    n: usize,
    m: usize,
    p: usize,
    #[serde(rename = "Q", default, skip_serializing_if = "Vec::is_empty")]
    q: Vec<MatrixEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    c: Vec<VectorEntry>,
    #[serde(rename = "A", default, skip_serializing_if = "Vec::is_empty")]
    a: Vec<MatrixEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    b: Vec<VectorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixEntry {
    row: usize,
    col: usize,
    terms: Vec<TermDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VectorEntry {
    row: usize,
    terms: Vec<TermDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TermDoc {
    coeff: f64,
    powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadError {
    /// JSON syntax or type error, with source position.
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    /// Semantic error attributed to a document field.
    Field { field: String, message: String },
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Json {
                line,
                column,
                message,
            } => {
                write!(f, "parse error at line {line}, column {column}: {message}")
            }
            LoadError::Field { field, message } => write!(f, "invalid field {field}: {message}"),
        }
    }
}

impl std::error::Error for LoadError {}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> LoadError {
    LoadError::Field {
        field: field.into(),
        message: message.into(),
    }
}

/// Parse and validate a problem-spec document into canonical form.
pub fn load_problem<T: Real>(text: &str) -> Result<ParametricQp<T>, LoadError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| LoadError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.n == 0 {
        return Err(field_err("n", "state dimension must be positive"));
    }
    if doc.m == 0 {
        return Err(field_err("m", "input dimension must be positive"));
    }
    let mut qp = ParametricQp::new(doc.name.clone(), doc.n, doc.m, doc.p);

    let mut seen_q = std::collections::BTreeSet::new();
    for (k, e) in doc.q.iter().enumerate() {
        let field = format!("Q[{k}]");
        if e.row > e.col {
            return Err(field_err(
                &field,
                format!(
                    "entry ({},{}) lies below the diagonal; Q is given by its upper triangle",
                    e.row, e.col
                ),
            ));
        }
        if e.col >= doc.m {
            return Err(field_err(
                &field,
                format!("column {} out of range for m={}", e.col, doc.m),
            ));
        }
        if !seen_q.insert((e.row, e.col)) {
            return Err(field_err(
                &field,
                format!("duplicate entry ({},{})", e.row, e.col),
            ));
        }
        let p = parse_poly(doc.n, &e.terms, &field)?;
        qp.set_q(e.row, e.col, p)
            .map_err(|m| field_err(&field, m.to_string()))?;
    }

    let mut seen_c = std::collections::BTreeSet::new();
    for (k, e) in doc.c.iter().enumerate() {
        let field = format!("c[{k}]");
        if e.row >= doc.m {
            return Err(field_err(
                &field,
                format!("row {} out of range for m={}", e.row, doc.m),
            ));
        }
        if !seen_c.insert(e.row) {
            return Err(field_err(&field, format!("duplicate entry {}", e.row)));
        }
        let p = parse_poly(doc.n, &e.terms, &field)?;
        qp.set_c(e.row, p)
            .map_err(|m| field_err(&field, m.to_string()))?;
    }

    let mut seen_a = std::collections::BTreeSet::new();
    for (k, e) in doc.a.iter().enumerate() {
        let field = format!("A[{k}]");
        if e.row >= doc.p || e.col >= doc.m {
            return Err(field_err(
                &field,
                format!(
                    "entry ({},{}) out of range for p={}, m={}",
                    e.row, e.col, doc.p, doc.m
                ),
            ));
        }
        if !seen_a.insert((e.row, e.col)) {
            return Err(field_err(
                &field,
                format!("duplicate entry ({},{})", e.row, e.col),
            ));
        }
        let p = parse_poly(doc.n, &e.terms, &field)?;
        qp.set_a(e.row, e.col, p)
            .map_err(|m| field_err(&field, m.to_string()))?;
    }

    let mut seen_b = std::collections::BTreeSet::new();
    for (k, e) in doc.b.iter().enumerate() {
        let field = format!("b[{k}]");
        if e.row >= doc.p {
            return Err(field_err(
                &field,
                format!("row {} out of range for p={}", e.row, doc.p),
            ));
        }
        if !seen_b.insert(e.row) {
            return Err(field_err(&field, format!("duplicate entry {}", e.row)));
        }
        let p = parse_poly(doc.n, &e.terms, &field)?;
        qp.set_b(e.row, p)
            .map_err(|m| field_err(&field, m.to_string()))?;
    }

    Ok(qp)
}

fn parse_poly<T: Real>(n: usize, terms: &[TermDoc], field: &str) -> Result<PolyExpr<T>, LoadError> {
    for (k, t) in terms.iter().enumerate() {
        if !t.coeff.is_finite() {
            return Err(field_err(
                format!("{field}.terms[{k}]"),
                "coefficient must be finite",
            ));
        }
        if t.powers.len() != n {
            return Err(field_err(
                format!("{field}.terms[{k}]"),
                format!("powers has length {}, expected n={}", t.powers.len(), n),
            ));
        }
        let deg: u32 = t.powers.iter().sum();
        if deg > MAX_DEGREE {
            return Err(field_err(
                format!("{field}.terms[{k}]"),
                format!("total degree {deg} exceeds the cap of {MAX_DEGREE}"),
            ));
        }
    }
    PolyExpr::new(
        n,
        terms
            .iter()
            .map(|t| (T::of(t.coeff), t.powers.clone()))
            .collect(),
    )
    .map_err(|m| field_err(field, m.to_string()))
}

/// Serialize to the document format in canonical entry order. Zero entries
/// are omitted, so `load(save(load(text)))` equals `load(text)`.
pub fn save_problem<T: Real>(qp: &ParametricQp<T>) -> String {
    let m = qp.input_dim();
    let p = qp.num_constraints();
    let poly_terms = |poly: &PolyExpr<T>| -> Vec<TermDoc> {
        poly.terms()
            .iter()
            .map(|t| TermDoc {
                coeff: t.coeff.to_f64_lossy(),
                powers: t.powers.clone(),
            })
            .collect()
    };
    let mut doc = Document {
        name: qp.name.clone(),
        n: qp.state_dim(),
        m,
        p,
        q: Vec::new(),
        c: Vec::new(),
        a: Vec::new(),
        b: Vec::new(),
    };
    for i in 0..m {
        for j in i..m {
            if !qp.q_entry(i, j).is_zero() {
                doc.q.push(MatrixEntry {
                    row: i,
                    col: j,
                    terms: poly_terms(qp.q_entry(i, j)),
                });
            }
        }
    }
    for i in 0..m {
        if !qp.c_entry(i).is_zero() {
            doc.c.push(VectorEntry {
                row: i,
                terms: poly_terms(qp.c_entry(i)),
            });
        }
    }
    for i in 0..p {
        for j in 0..m {
            if !qp.a_entry(i, j).is_zero() {
                doc.a.push(MatrixEntry {
                    row: i,
                    col: j,
                    terms: poly_terms(qp.a_entry(i, j)),
                });
            }
        }
    }
    for i in 0..p {
        if !qp.b_entry(i).is_zero() {
            doc.b.push(VectorEntry {
                row: i,
                terms: poly_terms(qp.b_entry(i)),
            });
        }
    }
    serde_json::to_string_pretty(&doc).expect("document serialization cannot fail")
}
