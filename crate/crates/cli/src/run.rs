use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfinr::evolve::{mean_laplacian, EvolutionEvent};
use cfinr::io::{cloud_mask, crop, load_any, pad_even, random_mask, save_tensor};
use cfinr::metrics::{format_db, psnr, MetricsReport};
use cfinr::noise::{synthesize_noise, NoiseSpec};
use cfinr::optim::HistoryRecord;
use cfinr::synthetic::{smooth_tucker, textured_image};
use cfinr::tasks::{
    denoise_mixed, fit_baseline, fit_conventional, fit_inpainting, fit_regression, AdmmRecord,
    ObservationMask,
};
use cfinr::theory;
use cfinr::wavelet::hwt;
use cfinr::{CfError, DenseTensor3};

use crate::config::{ConfigError, RunConfig, TaskKind};
use crate::{InfoArgs, TaskArgs, VerifyArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Usage,
    Io,
    Numerical,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            kind: FailureKind::Usage,
            message: msg.into(),
        }
    }
}

impl From<CfError> for Failure {
    fn from(e: CfError) -> Self {
        let kind = if e.is_io() {
            FailureKind::Io
        } else if e.is_numerical() {
            FailureKind::Numerical
        } else {
            FailureKind::Usage
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::usage(format!("config {e}"))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            kind: FailureKind::Io,
            message: e.to_string(),
        }
    }
}

/// Prints `error kind=<kind> code=<code> message=<text>` on one line and returns the code.
pub fn report(f: &Failure) -> ExitCode {
    let (name, code) = match f.kind {
        FailureKind::Usage => ("usage", 2),
        FailureKind::Io => ("io", 3),
        FailureKind::Numerical => ("numerical", 4),
    };
    let msg = f.message.replace(['\n', '\r'], " ");
    eprintln!("error kind={name} code={code} message={msg}");
    ExitCode::from(code)
}

fn resolve(kind: TaskKind, args: &TaskArgs) -> Result<RunConfig, Failure> {
    let file_text = match &args.config {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure {
            kind: FailureKind::Io,
            message: format!("{}: {e}", p.display()),
        })?,
        None => String::new(),
    };
    let flags = args.overrides();
    // the synthetic preset sits below both the file and the flags
    let mut probe = RunConfig::new(kind);
    probe.apply_text(&file_text)?;
    for (k, v) in &flags {
        probe.set(k, v)?;
    }
    let mut cfg = RunConfig::new(kind);
    if let Some(name) = &probe.synthetic {
        cfg.apply_preset(name)?;
    }
    cfg.apply_text(&file_text)?;
    for (k, v) in &flags {
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

fn synthetic_tensor(name: &str) -> Result<DenseTensor3, Failure> {
    match name {
        "tucker" => Ok(smooth_tucker([64, 64, 8], [5, 5, 3], 7)?),
        "texture" => Ok(textured_image(128, 128, 3, 0)),
        _ => Err(Failure::usage(format!("unknown synthetic input `{name}`"))),
    }
}

fn load_input(input: Option<&Path>, synthetic: Option<&str>) -> Result<DenseTensor3, Failure> {
    match (input, synthetic) {
        (Some(_), Some(_)) => Err(Failure::usage("give either --input or --synthetic, not both")),
        (Some(p), None) => load_any(p).map_err(|e| {
            let mut f = Failure::from(e);
            f.message = format!("{}: {}", p.display(), f.message);
            f
        }),
        (None, Some(s)) => synthetic_tensor(s),
        (None, None) => Err(Failure::usage("an input is required (--input or --synthetic)")),
    }
}

fn pad_mask(m: &ObservationMask) -> Result<ObservationMask, Failure> {
    let t = DenseTensor3::from_vec(
        m.dims(),
        m.observed().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
    )?;
    let p = pad_even(&t);
    Ok(ObservationMask::new(p.dims(), p.data().iter().map(|&v| v > 0.5).collect())?)
}

/// What a task produced, before cropping and writing.
struct Outcome {
    recovered: DenseTensor3,
    model_name: &'static str,
    params: usize,
    final_loss: f64,
    omegas: Option<[f64; 4]>,
    ranks: Option<[[usize; 2]; 4]>,
    history: Vec<HistoryRecord>,
    events: Vec<EvolutionEvent>,
    admm: Vec<AdmmRecord>,
    checkpoint: Option<cfinr::model::CfModel>,
}

pub fn run_task(kind: TaskKind, args: &TaskArgs) -> Result<ExitCode, Failure> {
    let cfg = resolve(kind, args)?;
    let input = load_input(cfg.input.as_deref(), cfg.synthetic.as_deref())?;
    let dims = input.dims();
    log::info!("{} on {:?}", kind.name(), dims);
    if cfg.baseline && cfg.conventional {
        return Err(Failure::usage("--baseline and --conventional are exclusive"));
    }

    // observations, the tensor fed to the model, and the reference for metrics
    let (observed, mask, reference) = match kind {
        TaskKind::Fit => (input.clone(), None, Some(input.clone())),
        TaskKind::Inpaint | TaskKind::Cloudrm => {
            let mask = match (&cfg.mask, kind) {
                (Some(p), _) => cloud_mask(p, dims)?,
                (None, TaskKind::Cloudrm) => return Err(Failure::usage("cloudrm needs --mask")),
                (None, _) => random_mask(dims, cfg.sr, cfg.seed)?,
            };
            (mask.project(&input)?, Some(mask), Some(input.clone()))
        }
        TaskKind::Denoise => match cfg.noise_case {
            Some(n) => {
                let nd = synthesize_noise(&input, &NoiseSpec::case(n, cfg.seed)?)?;
                let mask = nd.mask.map(|m| ObservationMask::new(dims, m)).transpose()?;
                (nd.noisy, mask, Some(input.clone()))
            }
            None => {
                let mask = match &cfg.mask {
                    Some(p) => Some(cloud_mask(p, dims)?),
                    None => None,
                };
                (input.clone(), mask, None)
            }
        },
    };

    let data = pad_even(&observed);
    let pmask = mask.as_ref().map(pad_mask).transpose()?;
    let pref = reference.as_ref().map(pad_even);
    let tc = cfg.task_config();
    let outcome = match kind {
        TaskKind::Denoise => {
            if cfg.baseline {
                return Err(Failure::usage("baseline mode is available for fit, inpaint and cloudrm"));
            }
            let admm = cfg.admm_config();
            if cfg.conventional {
                let mut c = tc.clone();
                c.iters = admm.outer * admm.inner;
                let r = fit_conventional(&data, &c, pref.as_ref())?;
                cf_outcome("conventional", r.model, r.recovered, r.final_loss, r.history, r.events)
            } else {
                let r = denoise_mixed(&data, pmask.as_ref(), &tc, &admm, pref.as_ref())?;
                let last = r.outer_history.last().map_or(f64::NAN, |a| a.residual);
                let mut o = cf_outcome("cf", r.model, r.recovered, last, r.history, r.events);
                o.admm = r.outer_history;
                o
            }
        }
        _ if cfg.baseline => {
            let (probe, _) = tc.build(data.dims(), data.dims()[2])?;
            let mut bc = tc.clone();
            if let Some(w) = cfg.baseline_omega {
                bc.mu = 4.0 * w;
            }
            let r = fit_baseline(&data, pmask.as_ref(), &bc, probe.num_params(), pref.as_ref())?;
            Outcome {
                params: r.model.num_params(),
                recovered: r.recovered,
                model_name: "baseline",
                final_loss: r.final_loss,
                omegas: None,
                ranks: None,
                history: r.history,
                events: Vec::new(),
                admm: Vec::new(),
                checkpoint: None,
            }
        }
        _ if cfg.conventional => {
            if pmask.is_some() {
                return Err(Failure::usage("conventional mode is available for fit and denoise"));
            }
            let r = fit_conventional(&data, &tc, pref.as_ref())?;
            cf_outcome("conventional", r.model, r.recovered, r.final_loss, r.history, r.events)
        }
        _ => {
            let r = match &pmask {
                Some(m) => fit_inpainting(&data, m, &tc, pref.as_ref())?,
                None => fit_regression(&data, &tc, pref.as_ref())?,
            };
            cf_outcome("cf", r.model, r.recovered, r.final_loss, r.history, r.events)
        }
    };

    let mut recovered = crop(&outcome.recovered, dims)?;
    if let (Some(m), TaskKind::Inpaint | TaskKind::Cloudrm) = (&mask, kind) {
        // the model saw padded data; observed entries stay exactly as given
        recovered = m.compose(&observed, &recovered)?;
    }
    write_bundle(&cfg, kind, &observed, reference.as_ref(), &recovered, &outcome)?;
    println!("{}", cfg.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cf_outcome(
    name: &'static str,
    model: cfinr::model::CfModel,
    recovered: DenseTensor3,
    final_loss: f64,
    history: Vec<HistoryRecord>,
    events: Vec<EvolutionEvent>,
) -> Outcome {
    Outcome {
        params: model.num_params(),
        omegas: Some(model.omegas()),
        ranks: Some(model.ranks()),
        recovered,
        model_name: name,
        final_loss,
        history,
        events,
        admm: Vec::new(),
        checkpoint: Some(model),
    }
}

fn write_bundle(
    cfg: &RunConfig,
    kind: TaskKind,
    observed: &DenseTensor3,
    reference: Option<&DenseTensor3>,
    recovered: &DenseTensor3,
    o: &Outcome,
) -> Result<(), Failure> {
    let out: &PathBuf = &cfg.out;
    fs::create_dir_all(out)?;
    save_tensor(&out.join("recovered.cft"), recovered)?;
    if let Some(m) = &o.checkpoint {
        m.save_checkpoint(&out.join("model.cfnr"))?;
    }

    let [n1, n2, n3] = recovered.dims();
    let mut m = String::new();
    let _ = writeln!(m, "task={}", kind.name());
    let _ = writeln!(m, "model={}", o.model_name);
    let _ = writeln!(m, "dims={n1}x{n2}x{n3}");
    let _ = writeln!(m, "params={}", o.params);
    let _ = writeln!(m, "final_loss={:.12e}", o.final_loss);
    if let Some(r) = reference {
        m.push_str(&MetricsReport::compute(r, recovered)?.to_key_values());
        // observed data as given, missing entries zero
        let _ = writeln!(m, "input_psnr={}", format_db(psnr(r, observed)?));
    }
    if let Some(w) = o.omegas {
        let _ = writeln!(m, "omegas={}", join(w.iter().map(|v| format!("{v:.12}"))));
    }
    if let Some(r) = o.ranks {
        let _ = writeln!(m, "ranks={}", join(r.iter().map(|p| format!("{}:{}", p[0], p[1]))));
    }
    if let Some(a) = o.admm.last() {
        let _ = writeln!(m, "admm_outer={}", a.outer + 1);
        let _ = writeln!(m, "admm_residual={:.12e}", a.residual);
    }
    fs::write(out.join("metrics.txt"), m)?;

    let mut ev = format!("{}\n", EvolutionEvent::csv_header());
    for e in &o.events {
        ev.push_str(&e.csv_row());
        ev.push('\n');
    }
    fs::write(out.join("evolution.csv"), ev)?;

    let mut h = format!("{}\n", HistoryRecord::csv_header());
    for r in &o.history {
        h.push_str(&r.csv_row());
        h.push('\n');
    }
    fs::write(out.join("history.csv"), h)?;

    if !o.admm.is_empty() {
        let mut a = format!("{}\n", AdmmRecord::csv_header());
        for r in &o.admm {
            a.push_str(&r.csv_row());
            a.push('\n');
        }
        fs::write(out.join("admm.csv"), a)?;
    }
    fs::write(out.join("config.txt"), cfg.echo())?;
    Ok(())
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(",")
}

pub fn run_verify(args: &VerifyArgs) -> Result<ExitCode, Failure> {
    let n = |default: usize| args.trials.unwrap_or(default);
    let s = args.seed;
    let campaigns = [
        theory::smoothness_campaign(n(1000), s)?,
        theory::laplacian_campaign(n(1000), s.wrapping_add(1))?,
        theory::rank_campaign(n(200), args.tol, s.wrapping_add(2))?,
        theory::cfinr_campaign(n(200), s.wrapping_add(3))?,
    ];
    let (extremal, _) = theory::extremal_smoothness_ratio()?;
    println!("{:<24} {:>7} {:>8} {:>10} {:>10}  result", "campaign", "trials", "checks", "violations", "tightest");
    for c in &campaigns {
        println!(
            "{:<24} {:>7} {:>8} {:>10} {:>10.6}  {}",
            c.name,
            c.trials,
            c.checks,
            c.violations,
            c.tightest_ratio,
            if c.passed() { "PASS" } else { "FAIL" }
        );
    }
    let tight = extremal >= 0.9;
    println!(
        "{:<24} {:>7} {:>8} {:>10} {:>10.6}  {}",
        "extremal_B1_x",
        1,
        1,
        0,
        extremal,
        if tight { "PASS" } else { "FAIL" }
    );
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let mut csv = String::from("campaign,trial,claim,measured,bound,slack,pass\n");
        for c in &campaigns {
            for (t, r) in c.reports.iter().enumerate() {
                for line in r.csv_rows().lines() {
                    let _ = writeln!(csv, "{},{t},{line}", c.name);
                }
            }
        }
        fs::write(dir.join("verify_slack.csv"), csv)?;
    }
    Ok(if campaigns.iter().all(|c| c.passed()) && tight {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn run_info(args: &InfoArgs) -> Result<ExitCode, Failure> {
    let t = load_input(args.input.as_deref(), args.synthetic.as_deref())?;
    let [n1, n2, n3] = t.dims();
    let d = t.data();
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    println!("dims={n1}x{n2}x{n3}");
    println!("min={min:.6} max={max:.6} mean={mean:.6}");
    if n1 >= 2 && n2 >= 2 {
        let s = theory::smoothness_constants(&t)?;
        println!("L1={:.6} L2={:.6} L3={:.6}", s.l1, s.l2, s.l3);
    }
    let p = pad_even(&t);
    let b = hwt(&p)?;
    let total = b.energy().max(f64::MIN_POSITIVE);
    for (s, blk) in b.blocks.iter().enumerate() {
        let e = blk.frobenius_norm().powi(2) / total;
        let lap = mean_laplacian(blk).map_or("n/a".to_string(), |v| format!("{v:.6}"));
        println!("B{}: energy_fraction={e:.6} mean_laplacian={lap}", s + 1);
    }
    Ok(ExitCode::SUCCESS)
}
