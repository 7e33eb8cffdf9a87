use std::path::Path;

use mpf_core::{Dataset, ModelParams};
use serde::Serialize;

use crate::args::EvalArgs;
use crate::metrics::{compare, Metrics};
use crate::output::{print_json, write_json};

#[derive(Debug, Serialize)]
struct EvalReport<'a> {
    command: &'static str,
    model: &'static str,
    truth: &'a Path,
    estimate: &'a Path,
    data: Option<&'a Path>,
    seed: u64,
    metrics: Metrics,
}

pub fn run(args: &EvalArgs, seed: u64, out: &Path) -> anyhow::Result<()> {
    let truth = ModelParams::read(&args.truth)?;
    let estimate = ModelParams::read(&args.estimate)?;
    let data = match &args.data {
        Some(p) => Some(Dataset::read(p)?),
        None => None,
    };
    let metrics = compare(Some(&truth), &estimate, data.as_ref(), seed)?;
    let report = EvalReport {
        command: "eval",
        model: estimate.kind(),
        truth: &args.truth,
        estimate: &args.estimate,
        data: args.data.as_deref(),
        seed,
        metrics,
    };
    write_json(out, "eval.json", &report)?;
    print_json(&report)
}
