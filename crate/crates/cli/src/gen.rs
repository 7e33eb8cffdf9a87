use std::path::Path;

use mpf_core::hopfield::random_patterns;
use mpf_core::models::lattice_ising;
use mpf_core::oracle::model_distribution;
use mpf_core::rng::seeded;
use mpf_core::samplers::{sample_ica, sample_model, SampleMode};
use mpf_core::{Dataset, IcaModel, ModelParams};
use serde::Serialize;

use crate::args::GenCommand;
use crate::output::{ensure_dir, print_json, write_json};

#[derive(Debug, Serialize)]
struct GenSummary {
    command: &'static str,
    generator: &'static str,
    seed: u64,
    d: usize,
    rows: usize,
    data: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampling: Option<SampleMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_column_sum: Option<f64>,
}

pub fn run(cmd: GenCommand, seed: u64, out: &Path) -> anyhow::Result<()> {
    ensure_dir(out)?;
    let mut rng = seeded(seed);
    let data_path = out.join("data.mpf");
    let summary = match cmd {
        GenCommand::Ising {
            lattice,
            sigma2,
            samples,
            weighted,
        } => {
            let truth = lattice_ising(lattice.rows, lattice.cols, sigma2, &mut rng)?;
            let d = lattice.rows * lattice.cols;
            let (data, mode) = if weighted {
                let dist = model_distribution(&truth)?;
                (Dataset::from_distribution(&dist)?, SampleMode::Exact)
            } else {
                let (rows, mode) = sample_model(&truth, samples, &mut rng)?;
                (Dataset::binary(d, rows)?, mode)
            };
            data.write(&data_path)?;
            let full = truth.to_full();
            let max_column_sum = (0..d)
                .map(|b| (0..d).map(|a| full[a * d + b]).sum::<f64>().abs())
                .fold(0.0, f64::max);
            let truth_path = write_json(out, "truth.json", &ModelParams::from_ising(&truth))?;
            GenSummary {
                command: "gen",
                generator: "ising",
                seed,
                d,
                rows: data.len(),
                data: data_path.display().to_string(),
                truth: Some(truth_path.display().to_string()),
                sampling: Some(mode),
                max_column_sum: Some(max_column_sum),
            }
        }
        GenCommand::HopfieldPatterns { n, m } => {
            let data = random_patterns(n, m, &mut rng)?;
            data.write(&data_path)?;
            GenSummary {
                command: "gen",
                generator: "hopfield-patterns",
                seed,
                d: n,
                rows: m,
                data: data_path.display().to_string(),
                truth: None,
                sampling: None,
                max_column_sum: None,
            }
        }
        GenCommand::Ica { k, samples } => {
            let truth = IcaModel::random(k, &mut rng);
            let data = sample_ica(&truth, samples, &mut rng)?;
            data.write(&data_path)?;
            let truth_path = write_json(out, "truth.json", &ModelParams::from_ica(&truth))?;
            GenSummary {
                command: "gen",
                generator: "ica",
                seed,
                d: k,
                rows: samples,
                data: data_path.display().to_string(),
                truth: Some(truth_path.display().to_string()),
                sampling: Some(SampleMode::Exact),
                max_column_sum: None,
            }
        }
    };
    print_json(&summary)
}
