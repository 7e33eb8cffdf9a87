use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MpfError, Result};
use crate::hopfield::{mpf_train, mpf_train_config, opr_train, per_train, HopfieldNet};
use crate::rng::{derive_seed, derived, MpfRng};
use crate::statespace::{BinaryState, Dataset};

/// Largest network the experiment drivers accept.
pub const MAX_UNITS: usize = 128;
pub const PER_RATE: f64 = 0.1;
pub const PER_MAX_EPOCHS: usize = 1000;
pub const RECALL_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HopfieldMethod {
    Mpf,
    Opr,
    Per,
}

impl HopfieldMethod {
    pub const ALL: [HopfieldMethod; 3] = [Self::Mpf, Self::Opr, Self::Per];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mpf => "mpf",
            Self::Opr => "opr",
            Self::Per => "per",
        }
    }

    pub fn train(self, patterns: &Dataset) -> Result<HopfieldNet> {
        match self {
            Self::Mpf => Ok(mpf_train(patterns, &mpf_train_config())?.0),
            Self::Opr => opr_train(patterns),
            Self::Per => Ok(per_train(
                &HopfieldNet::zeros(patterns.dim()),
                patterns,
                PER_RATE,
                PER_MAX_EPOCHS,
            )?
            .net),
        }
    }
}

impl fmt::Display for HopfieldMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for HopfieldMethod {
    type Err = MpfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mpf" | "hopfield-mpf" => Ok(Self::Mpf),
            "opr" => Ok(Self::Opr),
            "per" => Ok(Self::Per),
            _ => Err(MpfError::InvalidArgument(format!(
                "unknown Hopfield method '{s}'"
            ))),
        }
    }
}

/// One point of an experiment curve. `x` is the swept variable: the number of
/// patterns for capacity, the number of corrupted bits for denoising.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub method: HopfieldMethod,
    pub n: usize,
    pub m: usize,
    pub x: usize,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorruptedStorage {
    pub n: usize,
    pub m: usize,
    pub copies: usize,
    pub flipped_bits: usize,
    pub templates_fixed: usize,
    pub fraction: f64,
    #[serde(skip)]
    pub templates: Vec<BinaryState>,
    #[serde(skip)]
    pub net: HopfieldNet,
}

pub fn random_patterns(n: usize, m: usize, rng: &mut MpfRng) -> Result<Dataset> {
    let rows = (0..m)
        .map(|_| BinaryState::new((0..n).map(|_| rng.random_range(0..2u8)).collect()))
        .collect::<Result<Vec<_>>>()?;
    Dataset::binary(n, rows)
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_UNITS {
        return Err(MpfError::InvalidArgument(format!(
            "network size must be in 1..={MAX_UNITS}, got {n}"
        )));
    }
    Ok(())
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let t = v.len() as f64;
    let mean = v.iter().sum::<f64>() / t;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0);
    (mean, (var / t).sqrt())
}

fn fixed_fraction(net: &HopfieldNet, data: &Dataset) -> Result<f64> {
    let rows = data.binary_rows()?;
    let mut hits = 0;
    for x in rows {
        hits += usize::from(net.is_fixed_point(x)?);
    }
    Ok(hits as f64 / rows.len() as f64)
}

/// Fraction of `m` uniform random patterns that end up as fixed points, per
/// method and per `m`, averaged over trials.
pub fn capacity_experiment(
    n: usize,
    m_values: &[usize],
    trials: usize,
    methods: &[HopfieldMethod],
    seed: u64,
) -> Result<Vec<CurveRow>> {
    check_size(n)?;
    if trials == 0 || m_values.contains(&0) {
        return Err(MpfError::InvalidArgument(
            "need at least one trial and one pattern".into(),
        ));
    }
    let mut out = Vec::new();
    for &m in m_values {
        let per_trial = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = derived(derive_seed(seed, m as u64), t as u64);
                let data = random_patterns(n, m, &mut rng)?;
                methods
                    .iter()
                    .map(|method| fixed_fraction(&method.train(&data)?, &data))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, &method) in methods.iter().enumerate() {
            let v: Vec<f64> = per_trial.iter().map(|r| r[k]).collect();
            let (mean, stderr) = mean_stderr(&v);
            out.push(CurveRow {
                method,
                n,
                m,
                x: m,
                mean,
                stderr,
                trials,
            });
        }
    }
    Ok(out)
}

/// Exact-recall fraction after corrupting each stored pattern by `b` bit flips
/// for each `b` in `bits_list`. The flipped bits are nested: the first `b`
/// entries of one random permutation per pattern and trial.
pub fn denoise_experiment(
    n: usize,
    m: usize,
    bits_list: &[usize],
    trials: usize,
    methods: &[HopfieldMethod],
    seed: u64,
) -> Result<Vec<CurveRow>> {
    check_size(n)?;
    if let Some(&b) = bits_list.iter().find(|&&b| 2 * b >= n) {
        return Err(MpfError::InvalidArgument(format!(
            "corruption of {b} bits is not below n/2 = {}",
            n as f64 / 2.0
        )));
    }
    if trials == 0 || m == 0 {
        return Err(MpfError::InvalidArgument(
            "need at least one trial and one pattern".into(),
        ));
    }
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = derived(seed, t as u64);
            let data = random_patterns(n, m, &mut rng)?;
            let perms: Vec<Vec<usize>> = (0..m)
                .map(|_| {
                    let mut p: Vec<usize> = (0..n).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect();
            let mut scores = vec![vec![0.0; bits_list.len()]; methods.len()];
            for (k, method) in methods.iter().enumerate() {
                let net = method.train(&data)?;
                for (j, &bits) in bits_list.iter().enumerate() {
                    let mut hits = 0usize;
                    for (x, perm) in data.binary_rows()?.iter().zip(&perms) {
                        let mut probe = x.bits().to_vec();
                        for &i in &perm[..bits] {
                            probe[i] ^= 1;
                        }
                        let fin = net.converge(&probe, RECALL_SWEEPS)?;
                        hits += usize::from(fin.state == x.bits());
                    }
                    scores[k][j] = hits as f64 / m as f64;
                }
            }
            Ok(scores)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (k, &method) in methods.iter().enumerate() {
        for (j, &bits) in bits_list.iter().enumerate() {
            let v: Vec<f64> = per_trial.iter().map(|s| s[k][j]).collect();
            let (mean, stderr) = mean_stderr(&v);
            out.push(CurveRow {
                method,
                n,
                m,
                x: bits,
                mean,
                stderr,
                trials,
            });
        }
    }
    Ok(out)
}

/// Trains with the flow objective on `copies` noisy versions of each of `m`
/// random templates, each copy with `round(frac·n)` distinct bits flipped, and
/// counts how many templates become fixed points.
pub fn corrupted_storage_experiment(
    n: usize,
    m: usize,
    copies: usize,
    frac: f64,
    seed: u64,
) -> Result<CorruptedStorage> {
    check_size(n)?;
    if !(0.0..0.5).contains(&frac) || m == 0 || copies == 0 {
        return Err(MpfError::InvalidArgument(
            "need m, copies ≥ 1 and a corruption fraction in [0, 0.5)".into(),
        ));
    }
    let mut rng = derived(seed, 0);
    let templates = random_patterns(n, m, &mut rng)?;
    let flipped_bits = (frac * n as f64).round() as usize;
    let mut rows = Vec::with_capacity(m * copies);
    let mut idx: Vec<usize> = (0..n).collect();
    for x in templates.binary_rows()? {
        for _ in 0..copies {
            idx.shuffle(&mut rng);
            let mut bits = x.bits().to_vec();
            for &i in &idx[..flipped_bits] {
                bits[i] ^= 1;
            }
            rows.push(BinaryState::new(bits)?);
        }
    }
    let noisy = Dataset::binary(n, rows)?;
    let (net, _) = mpf_train(&noisy, &mpf_train_config())?;
    let mut templates_fixed = 0;
    for x in templates.binary_rows()? {
        templates_fixed += usize::from(net.is_fixed_point(x)?);
    }
    Ok(CorruptedStorage {
        n,
        m,
        copies,
        flipped_bits,
        templates_fixed,
        fraction: templates_fixed as f64 / m as f64,
        templates: templates.binary_rows()?.to_vec(),
        net,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pattern_always_stored() {
        let rows = capacity_experiment(16, &[1], 4, &HopfieldMethod::ALL, 1).unwrap();
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert_eq!(r.mean, 1.0, "{}", r.method);
            assert_eq!(r.stderr, 0.0);
        }
    }

    #[test]
    fn zero_corruption_recalls_stored_patterns() {
        let rows = denoise_experiment(
            16,
            3,
            &[0],
            4,
            &[HopfieldMethod::Mpf, HopfieldMethod::Per],
            2,
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.mean == 1.0));
    }

    #[test]
    fn recall_decreases_with_corruption() {
        let rows =
            denoise_experiment(32, 6, &[0, 2, 4, 8, 12], 8, &[HopfieldMethod::Mpf], 3).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].mean <= w[0].mean + 1e-12);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = capacity_experiment(12, &[4, 8], 3, &HopfieldMethod::ALL, 9).unwrap();
        let b = capacity_experiment(12, &[4, 8], 3, &HopfieldMethod::ALL, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(capacity_experiment(0, &[1], 1, &HopfieldMethod::ALL, 0).is_err());
        assert!(capacity_experiment(200, &[1], 1, &HopfieldMethod::ALL, 0).is_err());
        assert!(denoise_experiment(16, 2, &[8], 1, &HopfieldMethod::ALL, 0).is_err());
        assert!(corrupted_storage_experiment(16, 2, 3, 0.6, 0).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in HopfieldMethod::ALL {
            assert_eq!(m.name().parse::<HopfieldMethod>().unwrap(), m);
        }
    }
}
