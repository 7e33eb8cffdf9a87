//! Binary and continuous states, datasets, and their text file formats.
//!
//! States are indexed little-endian: bit `k` of the index is dimension `k`,
//! so flipping dimension `n` of a state toggles bit `n` of its index.
//!
//! File formats (one header line, then one row per line):
//!
//! ```text
//! MPFDATA 1 <d> <n>      rows of exactly d characters from {0,1}
//! MPFWDATA 1 <d> <n>     as above, each row followed by a space and a decimal weight
//! MPFCONT 1 <d> <n>      rows of d whitespace-separated decimals
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, MpfError, Result};
use crate::ENUMERATION_CAP;

/// Largest `d` for which a state fits in an index.
pub const MAX_INDEX_BITS: usize = 30;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A fixed-width vector of bits, each exactly 0 or 1.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinaryState(Vec<u8>);

impl BinaryState {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(MpfError::InvalidArgument(format!(
                "bit {pos} has value {}, expected 0 or 1",
                bits[pos]
            )));
        }
        Ok(Self(bits))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn ones(d: usize) -> Self {
        Self(vec![1; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.0
    }

    /// Little-endian index `sum_k x_k 2^k`.
    pub fn encode(&self) -> Result<usize> {
        if self.dim() > MAX_INDEX_BITS {
            return Err(MpfError::EnumerationCap {
                d: self.dim(),
                cap: MAX_INDEX_BITS,
            });
        }
        Ok(encode_bits(&self.0))
    }

    pub fn decode(index: usize, d: usize) -> Result<Self> {
        if d > MAX_INDEX_BITS {
            return Err(MpfError::EnumerationCap {
                d,
                cap: MAX_INDEX_BITS,
            });
        }
        if index >= 1usize << d {
            return Err(MpfError::IndexOutOfRange {
                index,
                limit: 1usize << d,
            });
        }
        Ok(Self(decode_bits(index, d)))
    }

    /// Copy of `self` with dimension `n` toggled.
    pub fn bit_flip(&self, n: usize) -> Result<Self> {
        if n >= self.dim() {
            return Err(MpfError::IndexOutOfRange {
                index: n,
                limit: self.dim(),
            });
        }
        let mut bits = self.0.clone();
        bits[n] ^= 1;
        Ok(Self(bits))
    }

    /// All bits toggled.
    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|b| b ^ 1).collect())
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub(crate) fn from_bits_unchecked(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self(bits)
    }
}

impl Deref for BinaryState {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for BinaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryState(")?;
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for BinaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

pub(crate) fn encode_bits(bits: &[u8]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0usize, |acc, (k, &b)| acc | ((b as usize) << k))
}

pub(crate) fn decode_bits(index: usize, d: usize) -> Vec<u8> {
    (0..d).map(|k| ((index >> k) & 1) as u8).collect()
}

pub(crate) fn check_enumerable(d: usize) -> Result<()> {
    if d > ENUMERATION_CAP {
        Err(MpfError::EnumerationCap {
            d,
            cap: ENUMERATION_CAP,
        })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rows {
    Binary(Vec<BinaryState>),
    Continuous(Vec<Vec<f64>>),
}

/// Observations over `{0,1}^d` or `R^d`, optionally weighted.
///
/// Without explicit weights each row carries weight `1/len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    rows: Rows,
    weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn binary(d: usize, rows: Vec<BinaryState>) -> Result<Self> {
        for r in &rows {
            check_dim(d, r.dim())?;
        }
        Ok(Self {
            d,
            rows: Rows::Binary(rows),
            weights: None,
        })
    }

    pub fn weighted_binary(d: usize, rows: Vec<BinaryState>, weights: Vec<f64>) -> Result<Self> {
        let mut ds = Self::binary(d, rows)?;
        validate_weights(&weights, ds.len())?;
        ds.weights = Some(weights);
        Ok(ds)
    }

    pub fn continuous(d: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        for r in &rows {
            check_dim(d, r.len())?;
        }
        Ok(Self {
            d,
            rows: Rows::Continuous(rows),
            weights: None,
        })
    }

    /// Weighted dataset holding every state of `dist` with its probability.
    pub fn from_distribution(dist: &TabularDistribution) -> Result<Self> {
        let rows = (0..dist.probs.len())
            .map(|i| BinaryState(decode_bits(i, dist.d)))
            .collect();
        Self::weighted_binary(dist.d, rows, dist.probs.clone())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> DataKind {
        match self.rows {
            Rows::Binary(_) => DataKind::Binary,
            Rows::Continuous(_) => DataKind::Continuous,
        }
    }

    pub fn len(&self) -> usize {
        match &self.rows {
            Rows::Binary(r) => r.len(),
            Rows::Continuous(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> &Rows {
        &self.rows
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.len() as f64,
        }
    }

    pub fn binary_rows(&self) -> Result<&[BinaryState]> {
        match &self.rows {
            Rows::Binary(r) => Ok(r),
            Rows::Continuous(_) => Err(MpfError::InvalidArgument(
                "expected a binary dataset".into(),
            )),
        }
    }

    pub fn continuous_rows(&self) -> Result<&[Vec<f64>]> {
        match &self.rows {
            Rows::Continuous(r) => Ok(r),
            Rows::Binary(_) => Err(MpfError::InvalidArgument(
                "expected a continuous dataset".into(),
            )),
        }
    }

    /// `(row, weight)` pairs of a binary dataset.
    pub fn weighted_binary_rows(&self) -> Result<Vec<(&BinaryState, f64)>> {
        let rows = self.binary_rows()?;
        Ok(rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r, self.weight(i)))
            .collect())
    }

    /// Distinct binary rows.
    pub fn support(&self) -> Result<HashSet<BinaryState>> {
        Ok(self.binary_rows()?.iter().cloned().collect())
    }

    /// Distinct rows in first-seen order, each weighted by its total weight.
    /// Any objective that is a weighted sum over rows is unchanged.
    pub fn compressed(&self) -> Result<Self> {
        let mut index: HashMap<&BinaryState, usize> = HashMap::new();
        let mut rows = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (x, w) in self.weighted_binary_rows()? {
            match index.get(x) {
                Some(&k) => weights[k] += w,
                None => {
                    index.insert(x, rows.len());
                    rows.push(x.clone());
                    weights.push(w);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self::weighted_binary(self.d, rows, weights)
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let weights = self.weights.as_ref().map(|w| {
            let sub: Vec<f64> = idx.iter().map(|&i| w[i]).collect();
            let s: f64 = sub.iter().sum();
            sub.into_iter().map(|v| v / s).collect()
        });
        let rows = match &self.rows {
            Rows::Binary(r) => Rows::Binary(idx.iter().map(|&i| r[i].clone()).collect()),
            Rows::Continuous(r) => Rows::Continuous(idx.iter().map(|&i| r[i].clone()).collect()),
        };
        Ok(Self {
            d: self.d,
            rows,
            weights,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::parse(BufReader::new(f))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = BufWriter::new(f);
        self.serialize(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn serialize<W: Write>(&self, w: &mut W) -> Result<()> {
        let n = self.len();
        match (&self.rows, &self.weights) {
            (Rows::Binary(rows), None) => {
                writeln!(w, "MPFDATA 1 {} {}", self.d, n)?;
                for r in rows {
                    writeln!(w, "{r}")?;
                }
            }
            (Rows::Binary(rows), Some(weights)) => {
                writeln!(w, "MPFWDATA 1 {} {}", self.d, n)?;
                for (r, wt) in rows.iter().zip(weights) {
                    writeln!(w, "{r} {wt:?}")?;
                }
            }
            (Rows::Continuous(rows), _) => {
                writeln!(w, "MPFCONT 1 {} {}", self.d, n)?;
                for r in rows {
                    let line: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
                    writeln!(w, "{}", line.join(" "))?;
                }
            }
        }
        Ok(())
    }

    pub fn parse<R: Read>(reader: BufReader<R>) -> Result<Self> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(l) => l?,
            None => return Err(parse_err(1, "empty file")),
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[1] != "1" {
            return Err(parse_err(1, format!("malformed header `{header}`")));
        }
        let d: usize = fields[2]
            .parse()
            .map_err(|_| parse_err(1, format!("bad dimension `{}`", fields[2])))?;
        let n: usize = fields[3]
            .parse()
            .map_err(|_| parse_err(1, format!("bad row count `{}`", fields[3])))?;

        let mut body = Vec::with_capacity(n);
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            body.push((k + 2, line));
        }
        if body.len() != n {
            return Err(parse_err(
                body.last().map_or(1, |(l, _)| *l),
                format!("header declares {n} rows, found {}", body.len()),
            ));
        }

        match fields[0] {
            "MPFDATA" => {
                let rows = body
                    .iter()
                    .map(|(ln, l)| parse_bits(*ln, l.trim(), d))
                    .collect::<Result<Vec<_>>>()?;
                Self::binary(d, rows)
            }
            "MPFWDATA" => {
                let mut rows = Vec::with_capacity(n);
                let mut weights = Vec::with_capacity(n);
                for (ln, l) in &body {
                    let mut parts = l.split_whitespace();
                    let bits = parts.next().unwrap_or("");
                    let wt = parts
                        .next()
                        .ok_or_else(|| parse_err(*ln, "missing weight"))?;
                    if parts.next().is_some() {
                        return Err(parse_err(*ln, "trailing fields after weight"));
                    }
                    rows.push(parse_bits(*ln, bits, d)?);
                    weights.push(
                        wt.parse::<f64>()
                            .map_err(|_| parse_err(*ln, format!("bad weight `{wt}`")))?,
                    );
                }
                Self::weighted_binary(d, rows, weights)
            }
            "MPFCONT" => {
                let rows = body
                    .iter()
                    .map(|(ln, l)| {
                        let vals = l
                            .split_whitespace()
                            .map(|t| {
                                t.parse::<f64>()
                                    .map_err(|_| parse_err(*ln, format!("bad number `{t}`")))
                            })
                            .collect::<Result<Vec<f64>>>()?;
                        if vals.len() != d {
                            return Err(parse_err(
                                *ln,
                                format!("expected {d} values, found {}", vals.len()),
                            ));
                        }
                        Ok(vals)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::continuous(d, rows)
            }
            other => Err(parse_err(1, format!("unknown format tag `{other}`"))),
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> MpfError {
    MpfError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_bits(line: usize, s: &str, d: usize) -> Result<BinaryState> {
    if s.len() != d {
        return Err(parse_err(
            line,
            format!("expected {d} bits, found {}", s.len()),
        ));
    }
    let bits = s
        .bytes()
        .map(|c| match c {
            b'0' => Ok(0u8),
            b'1' => Ok(1u8),
            _ => Err(parse_err(
                line,
                format!("invalid character `{}`", c as char),
            )),
        })
        .collect::<Result<Vec<u8>>>()?;
    Ok(BinaryState(bits))
}

fn validate_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(MpfError::InvalidWeights(format!(
            "{} weights for {n} rows",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(MpfError::InvalidWeights(format!("weight {w} is not >= 0")));
    }
    let s: f64 = weights.iter().sum();
    if (s - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(MpfError::InvalidWeights(format!(
            "weights sum to {s}, not 1"
        )));
    }
    Ok(())
}

/// A probability vector over all `2^d` states, indexed by [`BinaryState::encode`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDistribution {
    d: usize,
    probs: Vec<f64>,
}

impl TabularDistribution {
    pub fn new(d: usize, probs: Vec<f64>) -> Result<Self> {
        check_enumerable(d)?;
        check_dim(1 << d, probs.len())?;
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(MpfError::InvalidArgument(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(MpfError::InvalidArgument(format!(
                "probabilities sum to {s}, not 1"
            )));
        }
        Ok(Self { d, probs })
    }

    pub fn uniform(d: usize) -> Result<Self> {
        check_enumerable(d)?;
        let n = 1usize << d;
        Ok(Self {
            d,
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub(crate) fn from_probs_unchecked(d: usize, probs: Vec<f64>) -> Self {
        Self { d, probs }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: &BinaryState) -> Result<f64> {
        check_dim(self.d, x.dim())?;
        Ok(self.probs[encode_bits(x)])
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Histogram of a binary dataset: `probs[encode(x)]` is the total weight of rows equal to `x`.
pub fn empirical_distribution(data: &Dataset) -> Result<TabularDistribution> {
    check_enumerable(data.dim())?;
    let rows = data.binary_rows()?;
    let mut probs = vec![0.0; 1 << data.dim()];
    for (i, r) in rows.iter().enumerate() {
        probs[encode_bits(r)] += data.weight(i);
    }
    Ok(TabularDistribution {
        d: data.dim(),
        probs,
    })
}
