use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::bail;
use mpf_core::baselines::{cd_fit, exact_ml_fit, pl_fit};
use mpf_core::flowcore::{fit_ising_mpf, mpf_fit, pmpf_fit};
use mpf_core::hopfield::{mpf_train, opr_train, per_train};
use mpf_core::models::EnergyModel;
use mpf_core::rng::seeded;
use mpf_core::statespace::DataKind;
use mpf_core::{
    ConnectivityScheme, Dataset, HopfieldNet, IcaModel, IsingModel, LbfgsResult, LbfgsStatus,
    ModelParams, MpfOptions,
};
use serde::Serialize;

use crate::args::{FitArgs, Method};
use crate::config::RunConfig;
use crate::metrics::{compare, Metrics};
use crate::output::{print_json, write_json};
use crate::UsageError;

#[derive(Debug, Serialize)]
pub struct OptimizerSummary {
    pub status: LbfgsStatus,
    pub iterations: usize,
    pub evaluations: usize,
    pub objective: f64,
    pub grad_inf: f64,
}

impl From<&LbfgsResult> for OptimizerSummary {
    fn from(r: &LbfgsResult) -> Self {
        Self {
            status: r.status,
            iterations: r.iterations,
            evaluations: r.evaluations,
            objective: r.f,
            grad_inf: r.grad_inf,
        }
    }
}

/// Method-specific diagnostics.
#[derive(Debug, Default, Serialize)]
pub struct FitDiagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSummary>,
    /// Exact ML found no finite maximiser.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diverged: Option<bool>,
    /// Perceptron training reached zero violations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_k: Option<f64>,
}

/// Everything needed to rerun the fit.
#[derive(Debug, Serialize)]
struct ConfigEcho<'a> {
    command: &'static str,
    method: Method,
    data: &'a Path,
    truth: Option<&'a Path>,
    init: Option<&'a Path>,
    seed: u64,
    out: &'a Path,
    settings: &'a RunConfig,
}

#[derive(Debug, Serialize)]
pub struct FitReport<'a> {
    method: &'static str,
    model: &'static str,
    params: PathBuf,
    metrics: Metrics,
    diagnostics: FitDiagnostics,
    wall_seconds: f64,
    seed: u64,
    config: ConfigEcho<'a>,
}

fn load_init(path: Option<&Path>) -> anyhow::Result<Option<ModelParams>> {
    Ok(match path {
        Some(p) => Some(ModelParams::read(p)?),
        None => None,
    })
}

fn ising_init(init: Option<&ModelParams>, d: usize) -> anyhow::Result<IsingModel> {
    match init {
        Some(p) => {
            let m = p.to_ising().map_err(|e| UsageError(e.to_string()))?;
            if m.dim() != d {
                bail!(UsageError(format!(
                    "initial model has d = {}, data has d = {d}",
                    m.dim()
                )));
            }
            Ok(m)
        }
        None => Ok(IsingModel::zeros(d)),
    }
}

fn require_kind(method: Method, data: &Dataset) -> anyhow::Result<()> {
    let continuous = method == Method::Pmpf;
    let ok = match data.kind() {
        DataKind::Continuous => continuous,
        _ => !continuous,
    };
    if !ok {
        bail!(UsageError(format!(
            "method {} needs {} data",
            method.name(),
            if continuous { "continuous" } else { "binary" }
        )));
    }
    Ok(())
}

fn fit_ising(
    method: Method,
    data: &Dataset,
    init: IsingModel,
    cfg: &RunConfig,
    seed: u64,
) -> anyhow::Result<(IsingModel, FitDiagnostics)> {
    let d = data.dim();
    let mut diag = FitDiagnostics::default();
    let model = match method {
        Method::Mpf | Method::MpfAllflip => {
            let allflip = method == Method::MpfAllflip;
            let compact = data.compressed()?;
            let (m, r) = if cfg.mpf == MpfOptions::default() {
                fit_ising_mpf(&init, &compact, allflip, &cfg.optimizer)?
            } else {
                let scheme = if allflip {
                    ConnectivityScheme::SingleFlipPlusComplement
                } else {
                    ConnectivityScheme::SingleBitFlip
                };
                mpf_fit(init, &compact, &scheme, &cfg.mpf, &cfg.optimizer)?
            };
            diag.optimizer = Some((&r).into());
            m
        }
        Method::Pl => {
            let (m, r) = pl_fit(init, &data.compressed()?, &cfg.optimizer)?;
            diag.optimizer = Some((&r).into());
            m
        }
        Method::Cd1 | Method::Cd10 => {
            let k = if method == Method::Cd1 { 1 } else { 10 };
            cd_fit(init, data, &cfg.cd_for(d, k), &mut seeded(seed))?
        }
        Method::MlExact => {
            let fit = exact_ml_fit(init, &data.compressed()?, &cfg.optimizer)?;
            diag.optimizer = Some((&fit.result).into());
            diag.diverged = Some(fit.diverged);
            fit.model
        }
        _ => unreachable!("not an Ising method"),
    };
    Ok((model, diag))
}

fn fit_hopfield(
    method: Method,
    data: &Dataset,
    init: Option<&ModelParams>,
    cfg: &RunConfig,
) -> anyhow::Result<(HopfieldNet, FitDiagnostics)> {
    let n = data.dim();
    let mut diag = FitDiagnostics::default();
    let net = match method {
        Method::HopfieldMpf | Method::Opr if init.is_some() => {
            bail!(UsageError(format!(
                "{} does not take an initial network",
                method.name()
            )))
        }
        Method::HopfieldMpf => {
            let (net, r) = mpf_train(data, &cfg.hopfield_optimizer)?;
            diag.optimizer = Some((&r).into());
            net
        }
        Method::Opr => opr_train(data)?,
        Method::Per => {
            let net0 = match init {
                Some(p) => p.to_hopfield().map_err(|e| UsageError(e.to_string()))?,
                None => HopfieldNet::zeros(n),
            };
            let res = per_train(&net0, data, cfg.per_rate, cfg.per_max_epochs)?;
            diag.converged = Some(res.converged);
            diag.epochs = Some(res.epochs);
            res.net
        }
        _ => unreachable!("not a Hopfield method"),
    };
    Ok((net, diag))
}

pub fn run(args: &FitArgs, cfg: &RunConfig, seed: u64, out: &Path) -> anyhow::Result<()> {
    let data = Dataset::read(&args.data)?;
    require_kind(args.method, &data)?;
    let init = load_init(args.init.as_deref())?;
    let truth = load_init(args.truth.as_deref())?;
    let start = Instant::now();
    let (params, diagnostics) = match args.method.model_kind() {
        "ising" => {
            let init = ising_init(init.as_ref(), data.dim())?;
            let (m, diag) = fit_ising(args.method, &data, init, cfg, seed)?;
            (ModelParams::from_ising(&m), diag)
        }
        "hopfield" => {
            let (net, diag) = fit_hopfield(args.method, &data, init.as_ref(), cfg)?;
            (ModelParams::from_hopfield(&net), diag)
        }
        _ => {
            let model = match &init {
                Some(p) => p.to_ica().map_err(|e| UsageError(e.to_string()))?,
                None => IcaModel::identity(data.dim()),
            };
            let res = pmpf_fit(model, &data, &cfg.pmpf, &mut seeded(seed))?;
            let diag = FitDiagnostics {
                final_k: res.trace.last().map(|s| s.k),
                ..FitDiagnostics::default()
            };
            (ModelParams::from_ica(&res.model), diag)
        }
    };
    let wall_seconds = start.elapsed().as_secs_f64();
    let params_path = write_json(out, "params.json", &params)?;
    let metrics = compare(truth.as_ref(), &params, Some(&data), seed)?;
    let report = FitReport {
        method: args.method.name(),
        model: args.method.model_kind(),
        params: params_path,
        metrics,
        diagnostics,
        wall_seconds,
        seed,
        config: ConfigEcho {
            command: "fit",
            method: args.method,
            data: &args.data,
            truth: args.truth.as_deref(),
            init: args.init.as_deref(),
            seed,
            out,
            settings: cfg,
        },
    };
    write_json(out, "report.json", &report)?;
    print_json(&report)
}
