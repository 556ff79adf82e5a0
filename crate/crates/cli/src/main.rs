mod config;
mod run;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::TaskKind;

#[derive(Parser, Debug)]
#[command(name = "cfinr", version, about = "Cross-frequency implicit neural representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the representation to a tensor or image.
    Fit(TaskArgs),
    /// Recover missing entries from a random or file mask.
    Inpaint(TaskArgs),
    /// Remove mixed Gaussian and sparse noise.
    Denoise(TaskArgs),
    /// Inpainting with a cloud mask read from a file.
    Cloudrm(TaskArgs),
    /// Run the bound-check campaigns.
    Verify(VerifyArgs),
    /// Print statistics of an input.
    Info(InfoArgs),
}

/// Task flags; each overrides the matching key of `--config`.
#[derive(Args, Debug, Default)]
pub struct TaskArgs {
    /// Flat key=value file.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Input tensor (.cft) or image (.png).
    #[arg(long)]
    pub input: Option<String>,
    /// Bundled synthetic input: tucker or texture.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Mask file (nonzero = observed).
    #[arg(long)]
    pub mask: Option<String>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub sr: Option<String>,
    /// Synthetic noise case 1-5 added to the input before denoising.
    #[arg(long, allow_hyphen_values = true)]
    pub noise_case: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_y: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega_z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rank_z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub cadence: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub iters: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lr: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lr_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub weight_decay: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub outer: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub inner: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub width: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub depth: Option<String>,
    /// Coordinate grid: unit or normalized.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub history_every: Option<String>,
    /// Keep ranks and frequencies fixed.
    #[arg(long)]
    pub no_evolve: bool,
    /// Single-frequency Tucker baseline at the same parameter budget.
    #[arg(long)]
    pub baseline: bool,
    /// Baseline frequency; defaults to mu/4.
    #[arg(long, allow_hyphen_values = true)]
    pub baseline_omega: Option<String>,
    /// Fit wavelet coefficients directly with one loss per block.
    #[arg(long)]
    pub conventional: bool,
}

impl TaskArgs {
    /// Flag overrides as `(key, value)` pairs.
    pub fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        };
        push("input", &self.input);
        push("synthetic", &self.synthetic);
        push("mask", &self.mask);
        push("out", &self.out);
        push("sr", &self.sr);
        push("noise_case", &self.noise_case);
        push("lambda_x", &self.lambda_x);
        push("lambda_y", &self.lambda_y);
        push("mu", &self.mu);
        push("omega_z", &self.omega_z);
        push("rank_z", &self.rank_z);
        push("k", &self.k);
        push("cadence", &self.cadence);
        push("iters", &self.iters);
        push("lr", &self.lr);
        push("lr_min", &self.lr_min);
        push("weight_decay", &self.weight_decay);
        push("seed", &self.seed);
        push("gamma1", &self.gamma1);
        push("gamma2", &self.gamma2);
        push("rho0", &self.rho0);
        push("kappa", &self.kappa);
        push("outer", &self.outer);
        push("inner", &self.inner);
        push("width", &self.width);
        push("depth", &self.depth);
        push("grid", &self.grid);
        push("history_every", &self.history_every);
        push("baseline_omega", &self.baseline_omega);
        if self.no_evolve {
            out.push(("evolve", "false".into()));
        }
        if self.baseline {
            out.push(("baseline", "true".into()));
        }
        if self.conventional {
            out.push(("conventional", "true".into()));
        }
        out
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Trials per campaign; defaults to 1000/1000/200/200.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative singular-value tolerance for the rank check.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Directory for the slack CSV.
    #[arg(long, short)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct InfoArgs {
    #[arg(long)]
    pub input: Option<std::path::PathBuf>,
    #[arg(long)]
    pub synthetic: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("CFINR_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            return run::report(&run::Failure::usage(first));
        }
    };
    let result = match cli.command {
        Command::Fit(a) => run::run_task(TaskKind::Fit, &a),
        Command::Inpaint(a) => run::run_task(TaskKind::Inpaint, &a),
        Command::Denoise(a) => run::run_task(TaskKind::Denoise, &a),
        Command::Cloudrm(a) => run::run_task(TaskKind::Cloudrm, &a),
        Command::Verify(a) => run::run_verify(&a),
        Command::Info(a) => run::run_info(&a),
    };
    match result {
        Ok(code) => code,
        Err(f) => run::report(&f),
    }
}
