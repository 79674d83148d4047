use crate::ingest::ingest_dataset;
use crate::Command;
use anyhow::{anyhow, bail, Context, Result};
use gflow_core::certifier::{certify, integral_curve, CertifyConfig, IntegralCurveParams};
use gflow_core::flow::{
    activation, find_critical_point, flow_field, integrate, loss, ActivationProfile, Dataset, FlowState,
    IntegrateOptions, ACTIVATION_NAMES,
};
use gflow_core::kovacic::{classify_with, GaloisVerdict, KovacicOptions, NormalFormODE, Verdict};
use gflow_core::reference::{
    closed_form_field_residual, closed_form_vs_numeric, default_linreg, first_integral_drift, named_system,
    DriftReport,
};
use gflow_core::variational::{
    perturbation_order_test, tail_block_check, NetworkFlow, PerturbationReport, TailBlockReport, VEState,
    DEFAULT_EPSILONS,
};
use log::info;
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const EXIT_ERROR: i32 = 1;

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::CertifiedSL2 => 0,
        Verdict::Inconclusive => 2,
        Verdict::PreconditionFailed => 3,
    }
}

/// Settings shared by the dataset commands.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub activation: String,
    pub rtol: f64,
    pub atol: f64,
    pub r2_threshold: f64,
    pub tspan: (f64, f64),
    pub b2_hat: Option<f64>,
    pub out: Option<PathBuf>,
    pub rationalize: bool,
    pub condition3_literal: bool,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            activation: "silu".into(),
            rtol: 1e-9,
            atol: 1e-12,
            r2_threshold: 1e-8,
            tspan: (0.0, 10.0),
            b2_hat: None,
            out: None,
            rationalize: false,
            condition3_literal: false,
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            bail!("tolerances must be positive (rtol = {}, atol = {})", self.rtol, self.atol);
        }
        if self.r2_threshold.is_nan() || self.r2_threshold < 0.0 {
            bail!("r2 threshold must be nonnegative");
        }
        if !(self.tspan.0.is_finite() && self.tspan.1.is_finite()) || self.tspan.1 < self.tspan.0 {
            bail!("tspan must satisfy T0 <= T1, got {:?}", self.tspan);
        }
        Ok(())
    }

    fn activation(&self) -> Result<ActivationProfile> {
        activation(&self.activation)
            .ok_or_else(|| anyhow!("unknown activation {:?}; available: {}", self.activation, ACTIVATION_NAMES.join(", ")))
    }

    fn integrate_options(&self) -> IntegrateOptions {
        IntegrateOptions::tolerances(self.rtol, self.atol)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("{what}: {v:?} is not a number")))
        .collect()
}

fn certify_one(cfg: &RunConfig, act: &ActivationProfile, data: &Path) -> Result<(Verdict, String)> {
    let ds = ingest_dataset(data)?;
    let c = certify(
        &ds,
        act,
        &CertifyConfig {
            r2_threshold: cfg.r2_threshold,
            b2_hat: cfg.b2_hat,
            rationalize: cfg.rationalize,
            condition3_literal: cfg.condition3_literal,
            ..CertifyConfig::default()
        },
    );
    info!("{}: {:?}", data.display(), c.verdict);
    Ok((c.verdict, c.to_json()))
}

/// Worst verdict wins: PreconditionFailed over Inconclusive over CertifiedSL2.
fn combine(codes: impl Iterator<Item = i32>) -> i32 {
    codes.max_by_key(|&c| match c {
        0 => 0,
        2 => 1,
        3 => 2,
        _ => 3,
    })
    .unwrap_or(0)
}

pub fn cmd_certify(cfg: &RunConfig, data: &Path) -> Result<i32> {
    cfg.validate()?;
    let act = cfg.activation()?;
    if !data.is_dir() {
        let (v, json) = certify_one(cfg, &act, data)?;
        emit(cfg.out.as_deref(), &json)?;
        return Ok(exit_code(v));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(data)
        .with_context(|| format!("listing {}", data.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    let out_dir = cfg.out.clone().unwrap_or_else(|| data.to_path_buf());
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let jobs = cfg.jobs.max(1);
    let results: Vec<Result<i32>> = std::thread::scope(|s| {
        let chunks: Vec<Vec<&PathBuf>> = (0..jobs).map(|k| files.iter().skip(k).step_by(jobs).collect()).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                let (act, out_dir) = (&act, &out_dir);
                s.spawn(move || {
                    chunk
                        .into_iter()
                        .map(|f| {
                            let (v, json) = certify_one(cfg, act, f)?;
                            let stem = f.file_stem().unwrap_or_default().to_string_lossy();
                            emit(Some(&out_dir.join(format!("{stem}.json"))), &json)?;
                            Ok(exit_code(v))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });
    let codes = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(combine(codes.into_iter()))
}

/// Start of the explicit integral curve with `b2_hat = ybar + 1`.
fn curve_start(ds: &Dataset, act: &ActivationProfile) -> Result<(IntegralCurveParams, FlowState)> {
    let crit = find_critical_point(act, (-10.0, 10.0))?;
    let m = ds.moments();
    let p = IntegralCurveParams::new(crit, m.ybar + 1.0, &m)?;
    Ok((p, integral_curve(&p, 0.0)))
}

pub fn cmd_simulate(cfg: &RunConfig, data: &Path, w0: &str, samples: usize) -> Result<i32> {
    cfg.validate()?;
    let act = cfg.activation()?;
    let ds = ingest_dataset(data)?;
    let start = if w0.trim() == "curve" {
        curve_start(&ds, &act)?.1
    } else {
        let v = parse_list(w0, "--w0")?;
        if v.len() != 4 {
            bail!("--w0 needs 4 values w1,b1,w2,b2, got {}", v.len());
        }
        FlowState::from_slice(&v)
    };
    let (t0, t1) = cfg.tspan;
    let times: Vec<f64> = if t0 == t1 || samples < 2 {
        vec![t0]
    } else {
        (0..samples).map(|i| t0 + (t1 - t0) * i as f64 / (samples - 1) as f64).collect()
    };
    let traj = if t0 == t1 {
        None
    } else {
        let field = |_: f64, y: &[f64], dy: &mut [f64]| dy.copy_from_slice(&flow_field(&FlowState::from_slice(y), &ds, &act));
        Some(integrate(field, &start.to_array(), (t0, t1), cfg.integrate_options()).context("integration failed")?)
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "w1", "b1", "w2", "b2", "loss"])?;
    for &t in &times {
        let s = match &traj {
            Some(tr) => FlowState::from_slice(&tr.eval(t).ok_or_else(|| anyhow!("t = {t} outside trajectory"))?),
            None => start,
        };
        let row = [t, s.w1, s.b1, s.w2, s.b2, loss(&s, &ds, &act)];
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?;
    emit(cfg.out.as_deref(), &text)?;
    Ok(0)
}

#[derive(Serialize)]
struct VariationalReport {
    system: String,
    start: Vec<f64>,
    direction: Vec<f64>,
    t_star: f64,
    perturbation: PerturbationReport,
    tail_block: Option<TailBlockReport>,
    tail_block_note: Option<String>,
}

pub fn cmd_variational(
    cfg: &RunConfig,
    data: Option<&Path>,
    control: Option<&str>,
    direction: Option<&str>,
    t_star: f64,
) -> Result<i32> {
    cfg.validate()?;
    let dir = direction.map(|d| parse_list(d, "--direction")).transpose()?;
    let report = if let Some(name) = control {
        let (sys, x0) = named_system(name)?;
        let u = dir.unwrap_or_else(|| (0..x0.len()).map(|i| 0.3 + 0.2 * i as f64).collect());
        if u.len() != x0.len() {
            bail!("--direction needs {} values for {name}", x0.len());
        }
        let perturbation = perturbation_order_test(&sys, &x0, &u, t_star, &DEFAULT_EPSILONS)?;
        VariationalReport {
            system: name.to_string(),
            start: x0,
            direction: u,
            t_star,
            perturbation,
            tail_block: None,
            tail_block_note: None,
        }
    } else {
        let data = data.ok_or_else(|| anyhow!("either --data or --control is required"))?;
        let act = cfg.activation()?;
        let ds = ingest_dataset(data)?;
        let p = vec![0.4, -0.3, 0.8, 0.1];
        let u = dir.unwrap_or_else(|| vec![0.5, 1.0, -0.7, 0.2]);
        if u.len() != 4 {
            bail!("--direction needs 4 values");
        }
        let net = NetworkFlow { ds: &ds, act: &act };
        let perturbation = perturbation_order_test(&net, &p, &u, t_star, &DEFAULT_EPSILONS)?;
        let (tail_block, tail_block_note) = match curve_start(&ds, &act) {
            Ok((params, _)) => {
                let rep = tail_block_check(&params, &ds, &act, VEState::new(0.5, -0.2, 0.7, -0.3), (0.0, 5.0))?;
                (Some(rep), None)
            }
            Err(e) => (None, Some(format!("no integral curve: {e}"))),
        };
        VariationalReport {
            system: format!("network/{}", act.name),
            start: p,
            direction: u,
            t_star,
            perturbation,
            tail_block,
            tail_block_note,
        }
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    emit(cfg.out.as_deref(), &text)?;
    Ok(0)
}

fn render_verdict(v: &GaloisVerdict) -> String {
    let mut s = format!("verdict: {:?}\n", v.verdict);
    for r in &v.reports {
        let status = match (r.structurally_applicable, r.condition_excludes) {
            (false, _) => "ruled out (structurally inapplicable)",
            (true, true) => "ruled out (necessary condition fails)",
            (true, false) => "not ruled out",
        };
        s += &format!("case {}: {status}\n", r.case_id);
        for e in &r.evidence {
            s += &format!("  {e}\n");
        }
    }
    s += &v.narrative;
    s.push('\n');
    s
}

pub fn cmd_kovacic(expr: &str, opts: KovacicOptions, json: bool) -> Result<i32> {
    let ode = NormalFormODE::parse(expr).with_context(|| format!("parsing {expr:?}"))?;
    let v = classify_with(&ode, opts);
    let text = if json { serde_json::to_string_pretty(&v)? + "\n" } else { render_verdict(&v) };
    print!("{text}");
    Ok(exit_code(v.verdict))
}

#[derive(Serialize)]
struct ExampleReport {
    system: String,
    start: Vec<f64>,
    drift: DriftReport,
    closed_form_field_residual: Option<f64>,
    closed_form_vs_numeric: Option<f64>,
    minimizer_gap: Option<f64>,
}

pub fn cmd_examples(name: &str) -> Result<i32> {
    let (sys, x0) = named_system(name)?;
    let opts = IntegrateOptions::default();
    let span = if name == "scaling" { 5.0 } else { 20.0 };
    let drift = first_integral_drift(&sys, &x0, (0.0, span), opts)?;
    let grid: Vec<f64> = (0..=50).map(|i| 0.1 * i as f64).collect();
    let minimizer_gap = match (&sys.closed_form, name == "linreg") {
        (Some(cf), true) => {
            let limit = (cf.state)(&x0, 1e6);
            Some(limit.iter().zip(default_linreg().minimizer().iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
        }
        _ => None,
    };
    let report = ExampleReport {
        system: sys.name.clone(),
        start: x0.clone(),
        drift,
        closed_form_field_residual: closed_form_field_residual(&sys, &x0, &grid),
        closed_form_vs_numeric: closed_form_vs_numeric(&sys, &x0, &[0.1, 1.0, 10.0], opts)?,
        minimizer_gap,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}

pub(crate) fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Certify { activation, data, b2hat, rationalize, condition3_literal, r2_threshold, out, jobs } => {
            let cfg = RunConfig {
                activation,
                b2_hat: b2hat,
                rationalize,
                condition3_literal,
                r2_threshold,
                out,
                jobs,
                ..RunConfig::default()
            };
            cmd_certify(&cfg, &data)
        }
        Command::Simulate { activation, data, w0, tspan, samples, rtol, atol, out } => {
            let t = parse_list(&tspan, "--tspan")?;
            if t.len() != 2 {
                bail!("--tspan needs T0,T1");
            }
            let cfg = RunConfig { activation, rtol, atol, tspan: (t[0], t[1]), out, ..RunConfig::default() };
            cmd_simulate(&cfg, &data, &w0, samples)
        }
        Command::Variational { activation, data, control, direction, t_star, out } => {
            let cfg = RunConfig { activation, out, ..RunConfig::default() };
            cmd_variational(&cfg, data.as_deref(), control.as_deref(), direction.as_deref(), t_star)
        }
        Command::Kovacic { expr, strict_signs, condition3_literal, json } => {
            cmd_kovacic(&expr, KovacicOptions { strict_signs, condition3_literal }, json)
        }
        Command::Examples { name } => cmd_examples(&name),
    }
}
