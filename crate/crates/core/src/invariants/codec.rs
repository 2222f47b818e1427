//! Versioned binary records and CSV tables for PDD and AMD invariants.
//!
//! Binary layout (little endian):
//! `b"PDDB"`, version `u16`, kind `u8` (1 = PDD, 2 = AMD), reserved `u8`,
//! `k: u32`, `rows: u32`, then per row: weight numerator `u64`,
//! weight denominator `u64`, `k` distances as `f64`.

use std::io::{Read, Write};

use thiserror::Error;

use super::{parse_weight, AmdVector, InvariantError, PddMatrix, PddRow, Weight};

pub const MAGIC: &[u8; 4] = b"PDDB";
pub const VERSION: u16 = 1;
const KIND_PDD: u8 = 1;
const KIND_AMD: u8 = 2;
const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("not an invariant record (bad magic)")]
    BadMagic,
    #[error("unsupported record version {0}")]
    Version(u16),
    #[error("unknown record kind {0}")]
    Kind(u8),
    #[error("record truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("zero denominator in row {0}")]
    ZeroDenominator(usize),
    #[error("CSV line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    CsvLib(#[from] csv::Error),
}

/// A decoded binary record.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Pdd(PddMatrix),
    Amd(AmdVector),
}

fn header(kind: u8, k: usize, rows: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind);
    out.push(0);
    out.extend_from_slice(&(k as u32).to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out
}

pub fn encode_pdd(pdd: &PddMatrix) -> Vec<u8> {
    let mut out = header(KIND_PDD, pdd.k(), pdd.len());
    for row in pdd.rows() {
        out.extend_from_slice(&row.weight.numer().to_le_bytes());
        out.extend_from_slice(&row.weight.denom().to_le_bytes());
        for d in &row.distances {
            out.extend_from_slice(&d.to_le_bytes());
        }
    }
    out
}

pub fn encode_amd(amd: &AmdVector) -> Vec<u8> {
    let mut out = header(KIND_AMD, amd.k(), 1);
    out.extend_from_slice(&1u64.to_le_bytes());
    out.extend_from_slice(&1u64.to_le_bytes());
    for d in amd.values() {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out
}

fn u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode_record(bytes: &[u8]) -> Result<Record, CodecError> {
    if bytes.len() < HEADER_LEN {
        return Err(CodecError::Truncated { expected: HEADER_LEN, found: bytes.len() });
    }
    if &bytes[..4] != MAGIC {
        return Err(CodecError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(CodecError::Version(version));
    }
    let kind = bytes[6];
    let k = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let n = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let row_len = 16 + 8 * k;
    let expected = HEADER_LEN + n * row_len;
    if bytes.len() != expected {
        return Err(CodecError::Truncated { expected, found: bytes.len() });
    }
    let mut rows = Vec::with_capacity(n);
    for r in 0..n {
        let at = HEADER_LEN + r * row_len;
        let (num, den) = (u64_at(bytes, at), u64_at(bytes, at + 8));
        if den == 0 {
            return Err(CodecError::ZeroDenominator(r));
        }
        let distances = (0..k)
            .map(|j| f64::from_bits(u64_at(bytes, at + 16 + 8 * j)))
            .collect();
        rows.push(PddRow { weight: Weight::new(num, den), distances });
    }
    match kind {
        KIND_PDD => Ok(Record::Pdd(PddMatrix::new(rows)?)),
        KIND_AMD => {
            let row = rows.pop().ok_or(InvariantError::Empty)?;
            Ok(Record::Amd(AmdVector::new(row.distances)))
        }
        other => Err(CodecError::Kind(other)),
    }
}

fn distance_header(k: usize) -> impl Iterator<Item = String> {
    (1..=k).map(|j| format!("d{j}"))
}

/// Writes `weight,d1,…,dk` with one line per PDD row.
pub fn write_pdd_csv<W: Write>(pdd: &PddMatrix, out: W) -> Result<(), CodecError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("weight".to_string()).chain(distance_header(pdd.k())))?;
    for row in pdd.rows() {
        let weight = *row.weight.numer() as f64 / *row.weight.denom() as f64;
        w.write_record(
            std::iter::once(weight.to_string()).chain(row.distances.iter().map(f64::to_string)),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_amd_csv<W: Write>(amd: &AmdVector, out: W) -> Result<(), CodecError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(distance_header(amd.k()))?;
    w.write_record(amd.values().iter().map(f64::to_string))?;
    w.flush()?;
    Ok(())
}

/// Reads a PDD table; weights may be decimals or `a/b` fractions.
pub fn read_pdd_csv<R: Read>(input: R) -> Result<PddMatrix, CodecError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| CodecError::Csv { line, message };
        let mut fields = record.iter();
        let weight_text = fields.next().ok_or_else(|| bad("empty line".into()))?;
        let weight =
            parse_weight(weight_text).ok_or_else(|| bad(format!("bad weight {weight_text:?}")))?;
        let distances = fields
            .map(|f| f.trim().parse::<f64>().map_err(|e| bad(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(PddRow { weight, distances });
    }
    Ok(PddMatrix::from_weighted_rows(rows)?)
}

pub fn read_amd_csv<R: Read>(input: R) -> Result<AmdVector, CodecError> {
    let mut reader = csv::Reader::from_reader(input);
    let record = reader
        .records()
        .next()
        .ok_or(CodecError::Csv { line: 1, message: "no data row".into() })??;
    let line = record.position().map_or(0, |p| p.line());
    let values = record
        .iter()
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| CodecError::Csv { line, message: format!("{f:?}: {e}") })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AmdVector::new(values))
}
