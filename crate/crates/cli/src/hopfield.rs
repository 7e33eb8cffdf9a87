use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use mpf_core::hopfield::{
    capacity_experiment, corrupted_storage_experiment, denoise_experiment, CurveRow, HopfieldMethod,
};

use crate::args::HopfieldCommand;
use crate::output::{ensure_dir, print_text};

fn default_m_values(n: usize) -> Vec<usize> {
    let mut v = vec![1];
    v.extend((1..=8).map(|k| k * n / 8).filter(|&m| m > 1));
    v.dedup();
    v
}

/// CSV with one row per point, sorted by method and then the swept variable.
pub fn to_csv(rows: &[CurveRow], x_name: &str) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.method.name().cmp(b.method.name()).then(a.x.cmp(&b.x)));
    let mut s = format!("method,n,m,{x_name},mean,stderr,trials\n");
    for r in &rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.method, r.n, r.m, r.x, r.mean, r.stderr, r.trials
        );
    }
    s
}

pub fn run(cmd: HopfieldCommand, seed: u64, out: &Path) -> anyhow::Result<()> {
    let (name, csv) = match cmd {
        HopfieldCommand::Capacity {
            n,
            m,
            trials,
            methods,
        } => {
            let m = if m.is_empty() { default_m_values(n) } else { m };
            let rows = capacity_experiment(n, &m, trials, &methods, seed)?;
            ("capacity", to_csv(&rows, "patterns"))
        }
        HopfieldCommand::Denoise {
            n,
            m,
            bits,
            trials,
            methods,
        } => {
            let rows = denoise_experiment(n, m, &bits, trials, &methods, seed)?;
            ("denoise", to_csv(&rows, "corrupted_bits"))
        }
        HopfieldCommand::CorruptedStorage { n, m, copies, frac } => {
            let res = corrupted_storage_experiment(n, m, copies, frac, seed)?;
            let row = CurveRow {
                method: HopfieldMethod::Mpf,
                n,
                m,
                x: res.flipped_bits,
                mean: res.fraction,
                stderr: 0.0,
                trials: 1,
            };
            ("corrupted-storage", to_csv(&[row], "flipped_bits"))
        }
    };
    ensure_dir(out)?;
    let path = out.join(format!("{name}.csv"));
    fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
    print_text(&csv)
}
