//! DIMACS CNF reader.

use std::io::{self, BufRead};

use super::{Cnf, Lit};

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: malformed header `{text}` (expected `p cnf <vars> <clauses>`)")]
    Header { line: usize, text: String },
    #[error("line {line}: clause data before the `p cnf` header")]
    MissingHeader { line: usize },
    #[error("line {line}: duplicate `p` header")]
    DuplicateHeader { line: usize },
    #[error("line {line}: `{token}` is not an integer literal")]
    BadToken { line: usize, token: String },
    #[error("line {line}: literal {lit} exceeds the {num_vars} declared variables")]
    VarOutOfRange { line: usize, lit: i64, num_vars: u32 },
    #[error("line {line}: last clause is not terminated by 0")]
    Unterminated { line: usize },
    #[error("no `p cnf` header found")]
    NoHeader,
    #[error("read error: {0}")]
    Io(#[from] io::Error),
}

/// Reads a DIMACS CNF stream. Duplicate literals are merged, tautologies
/// dropped, and an empty clause yields the canonical false formula.
pub fn parse_dimacs<R: BufRead>(reader: R) -> Result<Cnf, ParseError> {
    let mut num_vars: Option<u32> = None;
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    let mut open_since = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') || trimmed.starts_with('%') {
            continue;
        }
        if trimmed.starts_with('p') {
            if num_vars.is_some() {
                return Err(ParseError::DuplicateHeader { line: line_no });
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let bad = || ParseError::Header {
                line: line_no,
                text: trimmed.to_string(),
            };
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(bad());
            }
            let nv: u32 = fields[2].parse().map_err(|_| bad())?;
            let _nc: u64 = fields[3].parse().map_err(|_| bad())?;
            num_vars = Some(nv);
            continue;
        }
        let Some(nv) = num_vars else {
            return Err(ParseError::MissingHeader { line: line_no });
        };
        for token in trimmed.split_whitespace() {
            let v: i64 = token.parse().map_err(|_| ParseError::BadToken {
                line: line_no,
                token: token.to_string(),
            })?;
            if v == 0 {
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            if v.unsigned_abs() > u64::from(nv) {
                return Err(ParseError::VarOutOfRange {
                    line: line_no,
                    lit: v,
                    num_vars: nv,
                });
            }
            if current.is_empty() {
                open_since = line_no;
            }
            current.push(Lit::new(v.unsigned_abs() as u32, v > 0));
        }
    }
    if !current.is_empty() {
        return Err(ParseError::Unterminated { line: open_since });
    }
    let nv = num_vars.ok_or(ParseError::NoHeader)?;
    Ok(Cnf::new(nv, clauses))
}
