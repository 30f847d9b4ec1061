//! `muskat` command line. Exit codes: 0 success, 1 check failure (or an
//! aborted run), 2 usage error.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Result;
use crate::grid::InterfaceField;
use crate::identities::{run_identity_suite, SuiteConfig};
use crate::norms::{
    besov_seminorm, lipschitz_seminorm, slope_sobolev_constant, smallness_criterion, smallness_threshold,
    sobolev_seminorm, BesovQuadrature,
};
use crate::quadrature::PvQuadrature;
use crate::rhs::{rhs_integrated, rhs_m1, rhs_m2, KernelMode};
use crate::simulation::run;

use super::config::{load_config, save_config, InitialSpec, SimConfig};
use super::ledger_io::{emit_ledger, LedgerFormat};
use super::profiles::{builtin_profile, random_bandlimited};
use super::snapshot::write_snapshot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "muskat", version, about = "Numerical laboratory for the 3D Muskat contour equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve initial data and write the energy ledger and a final snapshot.
    Run(RunArgs),
    /// Check the pointwise identities behind the energy estimate.
    VerifyIdentities(IdentityArgs),
    /// Check the semi-norm implementations against closed forms.
    VerifyNorms(NormArgs),
    /// Evaluate the small-data criterion on initial data.
    CheckCriterion(CriterionArgs),
    /// Compare the three right-hand-side formulations.
    Equivalence(EquivalenceArgs),
}

#[derive(Args, Debug, Clone)]
struct ProfileArgs {
    /// zero | single_mode | gaussian_bump | steep_ridge | random_bandlimited | file
    #[arg(long)]
    profile: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["K1", "K2"], allow_negative_numbers = true)]
    mode: Option<Vec<i64>>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    slope: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    kmax: Option<u32>,
    /// Snapshot to load (profile `file`).
    #[arg(long)]
    file: Option<PathBuf>,
}

impl ProfileArgs {
    fn spec(&self, default: &str) -> Option<InitialSpec> {
        let any = self.profile.is_some()
            || self.amplitude.is_some()
            || self.mode.is_some()
            || self.width.is_some()
            || self.slope.is_some()
            || self.scale.is_some()
            || self.kmax.is_some()
            || self.file.is_some();
        if !any {
            return None;
        }
        let name = match (&self.profile, &self.file) {
            (Some(p), _) => p.clone(),
            (None, Some(_)) => "file".to_string(),
            (None, None) => default.to_string(),
        };
        let mut spec = InitialSpec::named(&name);
        spec.amplitude = self.amplitude;
        spec.mode = self.mode.as_ref().map(|m| [m[0], m[1]]);
        spec.width = self.width;
        spec.slope = self.slope;
        spec.scale = self.scale;
        spec.kmax = self.kmax;
        spec.file = self.file.clone();
        Some(spec)
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
}

#[derive(Args, Debug)]
struct IdentityArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Lipschitz constant of the random test field.
    #[arg(long, default_value_t = 0.05)]
    slope: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args, Debug)]
struct NormArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct CriterionArgs {
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 2.0 * PI)]
    period: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Theorem constant C.
    #[arg(long, default_value_t = 0.125)]
    constant: f64,
    #[command(flatten)]
    profile: ProfileArgs,
}

#[derive(Args, Debug)]
struct EquivalenceArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    slope: f64,
    /// Also check that the integrated-form discrepancy halves under 2x refinement.
    #[arg(long)]
    refine: bool,
}

/// Runs the CLI on `args` (including the program name).
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::VerifyIdentities(a) => cmd_identities(a),
        Command::VerifyNorms(a) => cmd_norms(a),
        Command::CheckCriterion(a) => cmd_criterion(a),
        Command::Equivalence(a) => cmd_equivalence(a),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                crate::Error::Config { .. }
                | crate::Error::ConfigParse(_)
                | crate::Error::UnknownProfile(_)
                | crate::Error::ProfileParam { .. }
                | crate::Error::GridSize(_)
                | crate::Error::InvalidParameter { .. } => EXIT_USAGE,
                _ => EXIT_FAIL,
            }
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_run(a: RunArgs) -> Result<bool> {
    let mut cfg = match &a.config {
        Some(path) => load_config(path)?,
        None => SimConfig::minimal(a.n.unwrap_or(64), a.t_final.unwrap_or(1.0)),
    };
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(t) = a.t_final {
        cfg.t_final = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    if let Some(spec) = a.profile.spec("zero") {
        cfg.initial = spec;
    }
    cfg.validate()?;

    let f0 = builtin_profile(&cfg.initial, cfg.n, cfg.period, cfg.seed)?;
    let stepper = cfg.stepper()?;
    let outcome = run(&stepper, f0, &cfg.run_settings())?;

    let dir = &cfg.output_dir;
    emit_ledger(&outcome.ledger, dir, "ledger", &[LedgerFormat::Csv, LedgerFormat::Json])?;
    save_config(&cfg, &dir.join("config.toml"))?;
    write_snapshot(&dir.join("final.musk"), &outcome.field, outcome.t, &cfg.hash())?;

    let last = outcome.ledger.rows.last().expect("ledger has the initial row");
    println!("steps        {}", outcome.steps);
    println!("t            {}", outcome.t);
    println!("h2           {:.6e}", last.h2);
    println!("lipschitz    {:.6e}", last.lipschitz);
    println!("D(t)         {:.6e}", last.d_of_t);
    println!("C_e fit      {:.6e}", outcome.ledger.energy_c_fit);
    println!("C_s fit      {:.6e}", outcome.ledger.slope_c_fit);
    println!("output       {}", dir.display());
    if let Some(reason) = &outcome.ledger.abort {
        println!("ABORTED      {reason}");
        return Ok(false);
    }
    Ok(true)
}

fn cmd_identities(a: IdentityArgs) -> Result<bool> {
    let period = 2.0 * PI;
    let f = random_bandlimited(a.n, period, 4, a.slope, a.seed)?;
    let mut cfg = SuiteConfig::for_period(period, a.seed);
    cfg.samples = a.samples;
    let entries = run_identity_suite(&f, &cfg);
    println!("{:<28} {:>12} {:>10} {:>7}  result", "identity", "residual", "tolerance", "order");
    let mut all = true;
    for e in &entries {
        let order = e.order.map_or("-".to_string(), |o| format!("{o:.3}"));
        println!(
            "{:<28} {:>12.3e} {:>10.1e} {:>7}  {}",
            e.report.id,
            e.report.max_residual,
            e.report.tolerance,
            order,
            verdict(e.pass)
        );
        all &= e.pass;
    }
    Ok(all)
}

fn cmd_norms(a: NormArgs) -> Result<bool> {
    let period = 2.0 * PI;
    let n = a.n;
    let mut all = true;
    let mut line = |name: &str, err: f64, tol: f64| {
        let pass = err <= tol;
        all &= pass;
        println!("{name:<44} {err:>12.3e} {tol:>10.1e}  {}", verdict(pass));
    };
    println!("{:<44} {:>12} {:>10}  result", "oracle", "error", "tolerance");

    let amp = 0.3;
    for (m, s) in [(1, 2.0), (3, 2.0), (2, 2.5), (5, 1.0), (4, 0.5)] {
        let f = InterfaceField::from_fn(n, period, |x1, x2| amp * (m as f64 * x1 + x2).cos())?;
        let xi = ((m * m + 1) as f64).sqrt();
        let exact = amp * xi.powf(s) * period / 2.0_f64.sqrt();
        line(&format!("sobolev s={s} mode ({m},1)"), (sobolev_seminorm(&f, s) / exact - 1.0).abs(), 1e-12);
        let k = lipschitz_seminorm(&f);
        line(&format!("lipschitz mode ({m},1)"), (k / (amp * xi) - 1.0).abs(), 1e-12);
    }

    let c_n = slope_sobolev_constant(n);
    let worst = (0..10)
        .map(|seed| {
            let f = random_bandlimited(n, period, 6, 1.0, a.seed + seed).expect("valid profile");
            lipschitz_seminorm(&f) / (c_n * sobolev_seminorm(&f, 2.0))
        })
        .fold(0.0_f64, f64::max);
    line("slope bound K / (c_n |f|_H2) - 1 (<= 0)", (worst - 1.0).max(0.0), 0.0);

    let f = InterfaceField::from_fn(n, period, |x1, _| x1.cos())?;
    let g = f.scaled(2.5);
    let quad = BesovQuadrature::default();
    for (s, p, q) in [(0.5, 2.0, 2.0), (1.5, 1.0, 2.0), (1.0, f64::INFINITY, 1.0), (0.75, 2.0, f64::INFINITY)] {
        let bf = besov_seminorm(&f, s, p, q, quad)?;
        let bg = besov_seminorm(&g, s, p, q, quad)?;
        line(&format!("besov ({s},{p},{q}) homogeneity"), (bg / (2.5 * bf) - 1.0).abs(), 1e-12);
        let fine = besov_seminorm(&f, s, p, q, quad.refined(1))?;
        line(&format!("besov ({s},{p},{q}) refinement"), (fine / bf - 1.0).abs(), 0.02);
    }
    Ok(all)
}

fn cmd_criterion(a: CriterionArgs) -> Result<bool> {
    let spec = a.profile.spec("steep_ridge").unwrap_or_else(|| InitialSpec::named("steep_ridge"));
    super::profiles::validate_spec(&spec)?;
    let f = builtin_profile(&spec, a.n, a.period, a.seed)?;
    let r = smallness_criterion(&f, a.constant)?;
    println!("profile          {}", spec.profile);
    println!("C                {}", r.constant);
    println!("|f0|_H2          {:.6e}", r.h2);
    println!("K0               {:.6e}", r.lipschitz);
    for (name, c) in [("first", r.first), ("second", r.second)] {
        println!(
            "{name:<7} lhs {:.6e} rhs {:.6e} margin {:+.6e} ratio {:.4}  {}",
            c.lhs,
            c.rhs,
            c.margin,
            c.ratio,
            verdict(c.pass)
        );
    }
    match smallness_threshold(&f, a.constant, 1e-6) {
        Some(t) => println!("max scale        {t:.6e} (largest multiple of this field that passes)"),
        None => println!("max scale        none (no multiple of this field passes)"),
    }
    println!("result           {}", verdict(r.pass));
    Ok(r.pass)
}

fn rel_l2(a: &InterfaceField, b: &InterfaceField) -> f64 {
    let d = a.sub(b).l2_norm();
    let s = a.l2_norm().max(b.l2_norm());
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

fn cmd_equivalence(a: EquivalenceArgs) -> Result<bool> {
    let period = 2.0 * PI;
    let rho = 2.0 * PI;
    let quad = PvQuadrature::default_for(a.n, period);
    let fine = quad.refined();
    println!("{:<6} {:>14} {:>14} {:>14}  result", "field", "m1 vs m2", "m1 vs integ", "refined");
    let mut all = true;
    for i in 0..a.count {
        let f = random_bandlimited(a.n, period, 6, a.slope, a.seed + i as u64)?;
        let m1 = rhs_m1(&f, rho, &quad)?;
        let m2 = rhs_m2(&f, rho, &quad, KernelMode::Analytic)?;
        let it = rhs_integrated(&f, rho, &quad)?;
        let e2 = rel_l2(&m1, &m2);
        let ei = rel_l2(&m1, &it);
        let mut pass = e2 < 1e-12 && ei < 1e-3;
        let refined = if a.refine {
            let er = rel_l2(&rhs_m1(&f, rho, &fine)?, &rhs_integrated(&f, rho, &fine)?);
            pass &= er <= 0.5 * ei;
            format!("{er:>14.3e}")
        } else {
            format!("{:>14}", "-")
        };
        println!("{i:<6} {e2:>14.3e} {ei:>14.3e} {refined}  {}", verdict(pass));
        all &= pass;
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(cli_main(["muskat"]), EXIT_USAGE);
        assert_eq!(cli_main(["muskat", "frobnicate"]), EXIT_USAGE);
        assert_eq!(cli_main(["muskat", "run", "--bogus"]), EXIT_USAGE);
        assert_eq!(cli_main(["muskat", "run", "--n", "100"]), EXIT_USAGE);
        assert_eq!(cli_main(["muskat", "--help"]), EXIT_OK);
    }

    #[test]
    fn run_zero_data() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o");
        let code = cli_main([
            "muskat",
            "run",
            "--n",
            "16",
            "--t-final",
            "0.2",
            "--profile",
            "zero",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let rows = crate::cli_io::ledger_io::parse_ledger_csv(&std::fs::read_to_string(out.join("ledger.csv")).unwrap()).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.h2 == 0.0 && r.lipschitz == 0.0 && r.d_of_t == 0.0));
        assert!(out.join("final.musk").exists());
        assert!(out.join("final.musk.txt").exists());
        assert!(out.join("config.toml").exists());
    }

    #[test]
    fn criterion_on_small_ridge_passes() {
        let args = ["muskat", "check-criterion", "--n", "64", "--slope", "0.01", "--width", "0.5"];
        assert_eq!(cli_main(args), EXIT_OK);
        let args = ["muskat", "check-criterion", "--n", "64", "--slope", "5", "--width", "0.5"];
        assert_eq!(cli_main(args), EXIT_FAIL);
    }

    #[test]
    fn norms_oracles_pass() {
        assert_eq!(cli_main(["muskat", "verify-norms", "--n", "32"]), EXIT_OK);
    }
}
