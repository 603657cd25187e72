//! Line-oriented operator documents.
//!
//! ```text
//! # symmetric gradient on the plane
//! name = dsym-r2
//! n = 2
//! k = 1
//! dimV = 2
//! dimE = 3
//! A[1,0] = 1 0; 0 1; 0 0
//! A[0,1] = 0 0; 1 0; 0 1
//! L.k = 2
//! L.dimF = 1
//! L[2,0] = 0 0 1
//! K[1,1] = 1/2*y2^2
//! Ki[1][1,1] = 1/2*y1*y2^2
//! greens = dsym-r2
//! magic = antiderivatives
//! ```
//!
//! `A[α]` is a `dimE × dimV` matrix with rows separated by `;`. `L[α]` is
//! `dimF × dimE`. `K[r,c]` and `Ki[i][r,c]` use 1-based indices and hold
//! polynomials in `y1, …, yn`. Rationals are written `p` or `p/q`.

use std::collections::BTreeMap;
use std::fmt;

use crate::greens::{greens_preset, GreensMatrix};
use crate::linalg::QMatrix;
use crate::opsym::{OperatorSymbol, OpsymError, PolyMatrix};
use crate::poly::{parse_poly, MultiIndex, MultiPoly};
use crate::presets::{Bundle, Expectation, MagicForm};
use crate::rational::{fmt_rational, parse_rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, field `{}`: {}", self.line, self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DocError {
    #[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    Parse(Vec<ParseError>),
    #[error(transparent)]
    Operator(#[from] OpsymError),
    #[error("document is missing `{0}`")]
    Missing(&'static str),
    #[error("Green's preset `{name}` maps R^{rows}x{cols}, operator needs {dim_v}x{dim_e}")]
    GreensShape {
        name: String,
        rows: usize,
        cols: usize,
        dim_v: usize,
        dim_e: usize,
    },
    #[error("unknown Green's preset `{0}`")]
    Greens(String),
}

/// Cocanceling companion `L: E → F` of order `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionL {
    pub k: u32,
    pub dim_f: usize,
    pub blocks: BTreeMap<MultiIndex, QMatrix>,
}

/// Sparse polynomial matrix, 0-based `(row, col)`.
pub type PolyEntries = BTreeMap<(usize, usize), MultiPoly>;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDocument {
    pub name: String,
    pub n: usize,
    pub k: u32,
    pub dim_v: usize,
    pub dim_e: usize,
    pub blocks: BTreeMap<MultiIndex, QMatrix>,
    pub l: Option<CompanionL>,
    pub k_poly: PolyEntries,
    /// `K_i` keyed by 1-based `i`.
    pub ks: BTreeMap<usize, PolyEntries>,
    pub greens: Option<String>,
    pub magic: Option<MagicForm>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Key {
    Scalar(String),
    Indexed(String, Vec<Vec<i64>>),
}

fn parse_key(text: &str) -> Option<Key> {
    let text = text.trim();
    let Some(open) = text.find('[') else {
        return Some(Key::Scalar(text.to_string()));
    };
    let name = text[..open].trim().to_string();
    let mut rest = &text[open..];
    let mut groups = Vec::new();
    while !rest.is_empty() {
        let inner = rest.strip_prefix('[')?;
        let close = inner.find(']')?;
        let group = inner[..close]
            .split(',')
            .map(|s| s.trim().parse::<i64>().ok())
            .collect::<Option<Vec<_>>>()?;
        groups.push(group);
        rest = inner[close + 1..].trim_start();
    }
    Some(Key::Indexed(name, groups))
}

fn parse_matrix(text: &str) -> Result<QMatrix, String> {
    let body = text.trim().trim_start_matches('[').trim_end_matches(']');
    let mut rows = Vec::new();
    for row in body.split(';') {
        let entries = row
            .split_whitespace()
            .map(|e| parse_rational(e).ok_or_else(|| format!("malformed rational `{e}`")))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(entries);
    }
    let width = rows.first().map_or(0, Vec::len);
    if width == 0 || rows.iter().any(|r| r.len() != width) {
        return Err("rows of unequal or zero length".into());
    }
    Ok(QMatrix::from_rows(rows))
}

fn fmt_matrix(m: &QMatrix) -> String {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(fmt_rational).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("; ")
}

fn fmt_alpha(alpha: &MultiIndex) -> String {
    alpha
        .entries()
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Deferred shape checks need the header, which may come later in the file.
#[derive(Debug)]
enum Pending {
    Block { line: usize, field: String, alpha: Vec<i64>, m: QMatrix, companion: bool },
    Poly { line: usize, field: String, index: Option<i64>, rc: Vec<i64>, text: String },
}

pub fn parse_operator_document(text: &str) -> Result<OperatorDocument, Vec<ParseError>> {
    let mut errors = Vec::new();
    let mut scalars: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut pending = Vec::new();
    let err = |line: usize, field: &str, message: String| ParseError {
        line,
        field: field.to_string(),
        message,
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((lhs, rhs)) = content.split_once('=') else {
            errors.push(err(line, content, "expected `key = value`".into()));
            continue;
        };
        let field = lhs.trim().to_string();
        let value = rhs.trim().to_string();
        match parse_key(&field) {
            None => errors.push(err(line, &field, "malformed key".into())),
            Some(Key::Scalar(name)) => {
                if let Some((prev, _)) = scalars.insert(name.clone(), (line, value)) {
                    errors.push(err(line, &field, format!("duplicate key (first on line {prev})")));
                }
            }
            Some(Key::Indexed(name, groups)) => match (name.as_str(), groups.as_slice()) {
                ("A" | "L", [alpha]) => match parse_matrix(&value) {
                    Ok(m) => pending.push(Pending::Block {
                        line,
                        field,
                        alpha: alpha.clone(),
                        m,
                        companion: name == "L",
                    }),
                    Err(e) => errors.push(err(line, &field, e)),
                },
                ("K", [rc]) => pending.push(Pending::Poly { line, field, index: None, rc: rc.clone(), text: value }),
                ("Ki", [idx, rc]) if idx.len() == 1 => pending.push(Pending::Poly {
                    line,
                    field,
                    index: Some(idx[0]),
                    rc: rc.clone(),
                    text: value,
                }),
                _ => errors.push(err(line, &field, "unknown indexed key".into())),
            },
        }
    }

    let known = ["name", "n", "k", "dimV", "dimE", "L.k", "L.dimF", "greens", "magic"];
    for (key, (line, _)) in &scalars {
        if !known.contains(&key.as_str()) {
            errors.push(err(*line, key, "unknown key".into()));
        }
    }
    let mut uint = |key: &str, required: bool| -> Option<usize> {
        match scalars.get(key) {
            Some((line, v)) => match v.parse::<usize>() {
                Ok(x) => Some(x),
                Err(_) => {
                    errors.push(err(*line, key, format!("expected a non-negative integer, got `{v}`")));
                    None
                }
            },
            None => {
                if required {
                    errors.push(err(0, key, "missing".into()));
                }
                None
            }
        }
    };
    let n = uint("n", true);
    let k = uint("k", true);
    let dim_v = uint("dimV", true);
    let dim_e = uint("dimE", true);
    let lk = uint("L.k", false);
    let dim_f = uint("L.dimF", false);
    let name = match scalars.get("name") {
        Some((_, v)) => v.clone(),
        None => {
            errors.push(err(0, "name", "missing".into()));
            String::new()
        }
    };
    if let Some(&(line, _)) = scalars.get("n") {
        if n.is_some_and(|n| n == 0) {
            errors.push(err(line, "n", "dimension must be positive".into()));
        }
    }
    let greens = scalars.get("greens").and_then(|(line, v)| {
        if greens_preset(v).is_err() {
            errors.push(err(*line, "greens", format!("unknown Green's preset `{v}`")));
            return None;
        }
        Some(v.clone())
    });
    let magic = scalars.get("magic").and_then(|(line, v)| {
        let words: Vec<&str> = v.split_whitespace().collect();
        match words.as_slice() {
            ["antiderivatives"] => Some(MagicForm::Antiderivatives),
            ["swapped", a, b] => match (a.parse::<usize>(), b.parse::<usize>()) {
                (Ok(a), Ok(b)) if a >= 1 && b >= 1 && n.is_none_or(|n| a <= n && b <= n) && a != b => {
                    Some(MagicForm::Swapped { a: a - 1, b: b - 1 })
                }
                _ => {
                    errors.push(err(*line, "magic", format!("bad axes in `{v}`")));
                    None
                }
            },
            _ => {
                errors.push(err(*line, "magic", format!("expected `antiderivatives` or `swapped a b`, got `{v}`")));
                None
            }
        }
    });
    if lk.is_some() != dim_f.is_some() {
        errors.push(err(0, "L.k", "`L.k` and `L.dimF` must be given together".into()));
    }

    let mut blocks = BTreeMap::new();
    let mut l_blocks = BTreeMap::new();
    let mut k_poly = PolyEntries::new();
    let mut ks: BTreeMap<usize, PolyEntries> = BTreeMap::new();
    let (Some(n), Some(k), Some(dim_v), Some(dim_e)) = (n, k, dim_v, dim_e) else {
        return Err(errors);
    };
    for p in pending {
        match p {
            Pending::Block { line, field, alpha, m, companion } => {
                if alpha.len() != n {
                    errors.push(err(line, &field, format!("multi-index has {} entries, expected n = {n}", alpha.len())));
                    continue;
                }
                if alpha.iter().any(|&a| a < 0) {
                    errors.push(err(line, &field, "negative multi-index entry".into()));
                    continue;
                }
                let alpha = MultiIndex::new(alpha.iter().map(|&a| a as u32).collect());
                let (order, rows, cols) = if companion {
                    let (Some(lk), Some(df)) = (lk, dim_f) else {
                        errors.push(err(line, &field, "L block without `L.k` and `L.dimF`".into()));
                        continue;
                    };
                    (lk, df, dim_e)
                } else {
                    (k, dim_e, dim_v)
                };
                if alpha.order() as usize != order {
                    errors.push(err(line, &field, format!("|α| = {} but the order is {order}", alpha.order())));
                    continue;
                }
                if (m.rows(), m.cols()) != (rows, cols) {
                    errors.push(err(
                        line,
                        &field,
                        format!("matrix is {}x{}, expected {rows}x{cols}", m.rows(), m.cols()),
                    ));
                    continue;
                }
                let target = if companion { &mut l_blocks } else { &mut blocks };
                if target.insert(alpha, m).is_some() {
                    errors.push(err(line, &field, "duplicate multi-index".into()));
                }
            }
            Pending::Poly { line, field, index, rc, text } => {
                let Some(df) = dim_f else {
                    errors.push(err(line, &field, "K entries need `L.dimF`".into()));
                    continue;
                };
                let (r, c) = match rc.as_slice() {
                    [r, c] if (1..=dim_e as i64).contains(r) && (1..=df as i64).contains(c) => {
                        ((r - 1) as usize, (c - 1) as usize)
                    }
                    _ => {
                        errors.push(err(line, &field, format!("entry outside {dim_e}x{df}")));
                        continue;
                    }
                };
                let poly = match parse_poly(n, &text) {
                    Ok(p) => p,
                    Err(e) => {
                        errors.push(err(line, &field, e));
                        continue;
                    }
                };
                let target = match index {
                    None => &mut k_poly,
                    Some(i) if (1..=n as i64).contains(&i) => ks.entry(i as usize).or_default(),
                    Some(i) => {
                        errors.push(err(line, &field, format!("K_i index {i} outside 1..={n}")));
                        continue;
                    }
                };
                if target.insert((r, c), poly).is_some() {
                    errors.push(err(line, &field, "duplicate entry".into()));
                }
            }
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line);
        return Err(errors);
    }
    Ok(OperatorDocument {
        name,
        n,
        k: k as u32,
        dim_v,
        dim_e,
        blocks,
        l: lk.zip(dim_f).map(|(lk, df)| CompanionL {
            k: lk as u32,
            dim_f: df,
            blocks: l_blocks,
        }),
        k_poly: k_poly.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
        ks: ks
            .into_iter()
            .map(|(i, e)| (i, e.into_iter().filter(|(_, p)| !p.is_zero()).collect()))
            .collect(),
        greens,
        magic,
    })
}

fn dense(n: usize, rows: usize, cols: usize, entries: &PolyEntries) -> PolyMatrix {
    let mut m = vec![vec![MultiPoly::zero(n); cols]; rows];
    for ((r, c), p) in entries {
        m[*r][*c] = p.clone();
    }
    PolyMatrix::new(n, m)
}

fn sparse(m: &PolyMatrix) -> PolyEntries {
    let mut out = PolyEntries::new();
    for (r, row) in m.entries().iter().enumerate() {
        for (c, p) in row.iter().enumerate() {
            if !p.is_zero() {
                out.insert((r, c), p.clone());
            }
        }
    }
    out
}

impl OperatorDocument {
    pub fn operator(&self) -> Result<OperatorSymbol, OpsymError> {
        OperatorSymbol::new(
            self.n,
            self.k,
            self.dim_v,
            self.dim_e,
            self.blocks.iter().map(|(a, m)| (a.clone(), m.clone())),
        )
    }

    pub fn cocanceling(&self) -> Option<Result<OperatorSymbol, OpsymError>> {
        self.l.as_ref().map(|l| {
            OperatorSymbol::new(
                self.n,
                l.k,
                self.dim_e,
                l.dim_f,
                l.blocks.iter().map(|(a, m)| (a.clone(), m.clone())),
            )
        })
    }

    pub fn greens_matrix(&self) -> Result<GreensMatrix, DocError> {
        let name = self.greens.as_ref().ok_or(DocError::Missing("greens"))?;
        let (g, _) = greens_preset(name).map_err(|_| DocError::Greens(name.clone()))?;
        if (g.matrix.rows(), g.matrix.cols()) != (self.dim_v, self.dim_e) || g.matrix.n() != self.n {
            return Err(DocError::GreensShape {
                name: name.clone(),
                rows: g.matrix.rows(),
                cols: g.matrix.cols(),
                dim_v: self.dim_v,
                dim_e: self.dim_e,
            });
        }
        Ok(g)
    }

    /// Bundle for the identity ledger and the solver. Custom bundles expect
    /// every identity to verify.
    pub fn to_bundle(&self) -> Result<Bundle, DocError> {
        let a = self.operator()?;
        let l = self.cocanceling().ok_or(DocError::Missing("L"))??;
        let greens = self.greens_matrix()?;
        let dim_f = l.dim_e();
        let ks = (1..=self.n)
            .map(|i| {
                let e = self.ks.get(&i).cloned().unwrap_or_default();
                dense(self.n, self.dim_e, dim_f, &e)
            })
            .collect();
        Ok(Bundle {
            name: self.name.clone(),
            a,
            l,
            k: dense(self.n, self.dim_e, dim_f, &self.k_poly),
            ks,
            greens,
            magic: self.magic.clone().unwrap_or(MagicForm::Antiderivatives),
            identity_expectations: [Expectation::Verified; 5],
            known_tp: None,
        })
    }

    pub fn from_operator(name: &str, a: &OperatorSymbol) -> Self {
        OperatorDocument {
            name: name.to_string(),
            n: a.n(),
            k: a.order(),
            dim_v: a.dim_v(),
            dim_e: a.dim_e(),
            blocks: a.coeffs().clone(),
            l: None,
            k_poly: PolyEntries::new(),
            ks: BTreeMap::new(),
            greens: None,
            magic: None,
        }
    }

    pub fn from_bundle(b: &Bundle) -> Self {
        let mut doc = OperatorDocument::from_operator(&b.name, &b.a);
        doc.l = Some(CompanionL {
            k: b.l.order(),
            dim_f: b.l.dim_e(),
            blocks: b.l.coeffs().clone(),
        });
        doc.k_poly = sparse(&b.k);
        doc.ks = b
            .ks
            .iter()
            .enumerate()
            .map(|(i, m)| (i + 1, sparse(m)))
            .filter(|(_, e)| !e.is_empty())
            .collect();
        doc.greens = Some(b.greens.name.clone());
        doc.magic = Some(b.magic.clone());
        doc
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("name = {}", self.name));
        line(format!("n = {}", self.n));
        line(format!("k = {}", self.k));
        line(format!("dimV = {}", self.dim_v));
        line(format!("dimE = {}", self.dim_e));
        for (alpha, m) in &self.blocks {
            line(format!("A[{}] = {}", fmt_alpha(alpha), fmt_matrix(m)));
        }
        if let Some(l) = &self.l {
            line(format!("L.k = {}", l.k));
            line(format!("L.dimF = {}", l.dim_f));
            for (alpha, m) in &l.blocks {
                line(format!("L[{}] = {}", fmt_alpha(alpha), fmt_matrix(m)));
            }
        }
        for ((r, c), p) in &self.k_poly {
            line(format!("K[{},{}] = {}", r + 1, c + 1, p));
        }
        for (i, entries) in &self.ks {
            for ((r, c), p) in entries {
                line(format!("Ki[{i}][{},{}] = {}", r + 1, c + 1, p));
            }
        }
        if let Some(g) = &self.greens {
            line(format!("greens = {g}"));
        }
        match &self.magic {
            Some(MagicForm::Antiderivatives) => line("magic = antiderivatives".into()),
            Some(MagicForm::Swapped { a, b }) => line(format!("magic = swapped {} {}", a + 1, b + 1)),
            None => {}
        }
        out
    }
}
