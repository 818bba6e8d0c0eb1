//! `opmat v1`: a magic line, a one-line JSON header, then little-endian
//! `f64` pairs `(re, im)` in row-major order, raw or base64.

use std::io::{Read, Write};
use std::path::Path;

use base64::Engine;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::matrix::Operator;
use super::window::{Representation, TruncationWindow};
use crate::error::{Error, Result};
use crate::geometry::Rational;

pub const MAGIC: &str = "OPMAT v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Binary,
    Base64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Header {
    pub representation: Representation,
    pub radius: String,
    pub copies: usize,
    pub basis_order: String,
    pub name: String,
    pub dimension: usize,
    pub encoding: Encoding,
}

fn parse_radius(s: &str) -> Result<Rational> {
    let bad = || Error::MalformedHeader(format!("bad radius `{s}`"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

pub fn encode(op: &Operator, encoding: Encoding) -> Result<Vec<u8>> {
    let w = op.window();
    let header = Header {
        representation: w.representation(),
        radius: w.radius().to_string(),
        copies: w.copies(),
        basis_order: w.basis_order().to_string(),
        name: op.name.clone(),
        dimension: op.dim(),
        encoding,
    };
    let mut payload = Vec::with_capacity(16 * op.dim() * op.dim());
    for z in op.entries().iter() {
        payload.extend_from_slice(&z.re.to_le_bytes());
        payload.extend_from_slice(&z.im.to_le_bytes());
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC.as_bytes());
    out.push(b'\n');
    out.extend_from_slice(serde_json::to_string(&header)?.as_bytes());
    out.push(b'\n');
    match encoding {
        Encoding::Binary => out.extend_from_slice(&payload),
        Encoding::Base64 => {
            out.extend_from_slice(base64::engine::general_purpose::STANDARD.encode(&payload).as_bytes());
            out.push(b'\n');
        }
    }
    Ok(out)
}

fn split_line(bytes: &[u8]) -> Option<(&[u8], &[u8])> {
    let i = bytes.iter().position(|b| *b == b'\n')?;
    Some((&bytes[..i], &bytes[i + 1..]))
}

pub fn decode(bytes: &[u8]) -> Result<Operator> {
    let (magic, rest) = split_line(bytes).ok_or_else(|| Error::MalformedHeader("missing magic line".into()))?;
    if magic != MAGIC.as_bytes() {
        return Err(Error::MalformedHeader("bad magic bytes".into()));
    }
    let (head, payload) =
        split_line(rest).ok_or_else(|| Error::MalformedHeader("missing JSON header".into()))?;
    let header: Header =
        serde_json::from_slice(head).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let radius = parse_radius(&header.radius)?;
    let window = TruncationWindow::with_copies(header.representation, radius, header.copies)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    if window.basis_order() != header.basis_order {
        return Err(Error::MalformedHeader(format!("unknown basis order `{}`", header.basis_order)));
    }
    if window.dimension() != header.dimension {
        return Err(Error::DimensionMismatch {
            declared: header.dimension,
            actual: window.dimension(),
        });
    }
    let raw = match header.encoding {
        Encoding::Binary => payload.to_vec(),
        Encoding::Base64 => {
            let text: Vec<u8> = payload.iter().copied().filter(|b| !b.is_ascii_whitespace()).collect();
            base64::engine::general_purpose::STANDARD
                .decode(text)
                .map_err(|_| Error::TruncatedPayload {
                    expected: 16 * header.dimension * header.dimension,
                    found: payload.len() * 3 / 4,
                })?
        }
    };
    let n = header.dimension;
    let expected = 16 * n * n;
    if raw.len() != expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: raw.len(),
        });
    }
    let vals: Vec<C64> = raw
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let entries = ndarray::Array2::from_shape_vec((n, n), vals).map_err(|e| Error::Linalg(e.to_string()))?;
    Ok(Operator::new(window.shared(), entries)?.named(header.name))
}

/// Write an operator to `path`.
pub fn export_operator(op: &Operator, path: &Path, encoding: Encoding) -> Result<()> {
    let bytes = encode(op, encoding)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn import_operator(path: &Path) -> Result<Operator> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::models::laughlin_operator;

    #[test]
    fn identity_round_trip() {
        let w = TruncationWindow::line(4).unwrap().shared();
        let id = Operator::identity(w).named("id");
        for enc in [Encoding::Binary, Encoding::Base64] {
            let back = decode(&encode(&id, enc).unwrap()).unwrap();
            assert_eq!(back, id);
            assert_eq!(back.name, "id");
        }
    }

    #[test]
    fn distinct_errors() {
        let w = TruncationWindow::plane(2).unwrap().shared();
        let l = laughlin_operator(w).unwrap();
        let good = encode(&l, Encoding::Binary).unwrap();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode(&bad_magic), Err(Error::MalformedHeader(_))));

        let truncated = &good[..good.len() - 5];
        assert!(matches!(decode(truncated), Err(Error::TruncatedPayload { .. })));

        let key = b"\"dimension\":13";
        let at = good.windows(key.len()).position(|w| w == key).unwrap();
        let mut wrong_dim = good.clone();
        wrong_dim[at + key.len() - 1] = b'2';
        assert!(matches!(decode(&wrong_dim), Err(Error::DimensionMismatch { .. })));
    }
}
