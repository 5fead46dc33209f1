use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;

use factoring_spectrum::ensemble::{
    energy_records, records_from_csv, records_to_csv, sample_extended_ensemble, EnergyRecord,
};
use factoring_spectrum::inversion::{invert_levels, invert_spectrum, InversionConfig};
use factoring_spectrum::io::sig17;
use factoring_spectrum::primes::{load_zeros, CountingMode, PrimeCounter, ZetaZeroTable};
use factoring_spectrum::spacing_stats::{build_series, fit_spacings, kde, unfold, SpacingSample, UnfoldConfig};
use factoring_spectrum::spectrum::{scale_spectrum, SimulatorSpectrum};
use factoring_spectrum::trap_sim::{
    center_offset_constant, derive_params, integrate_mathieu, integrate_rotating_frame, mode_frequencies,
    printed_lambda_expression, stability_scan, stroboscopic_lock, TrapInputs, TrapParams,
};

use crate::config::RunConfig;
use crate::error::CliError;

type CliResult<T = ()> = Result<T, CliError>;

fn even_bits(s: &str) -> Result<u32, String> {
    let n: u32 = s.parse().map_err(|e| format!("{e}"))?;
    if n < 6 || n % 2 == 1 {
        return Err(format!("bit size must be even and >= 6, got {n}"));
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Counting {
    /// Sieve up to 48 bits, combinatorial above.
    Auto,
    Sieve,
    Combinatorial,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_parser = even_bits)]
    pub bits: u32,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Counting::Auto)]
    pub counting: Counting,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[arg(long, value_parser = even_bits)]
    pub bits: u32,
    #[arg(long, default_value_t = 200)]
    pub k_max: u32,
    #[arg(long, default_value_t = 64)]
    pub l_modes: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScaleArgs {
    #[arg(long)]
    pub spectrum: PathBuf,
    /// Target bit size.
    #[arg(long)]
    pub bits: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct UnfoldArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long = "L", default_value_t = 1000)]
    #[serde(rename = "L")]
    pub l: usize,
    #[arg(long, default_value_t = 1)]
    pub ell_min: usize,
    #[arg(long, default_value_t = 6)]
    pub ell_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub spacings: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct KdeArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// Kernel bandwidth; Silverman's rule when absent.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct InvertArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: String,
    /// Spectrum JSON; built for the bit size of N when absent.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// Levels tried before (or instead of) the spectrum lines.
    #[arg(long, value_delimiter = ',')]
    pub level: Vec<f64>,
    #[arg(long = "T", default_value_t = 0)]
    #[serde(rename = "T")]
    pub t: usize,
    #[arg(long)]
    pub zeros: Option<PathBuf>,
    #[arg(long)]
    pub exact_pi: bool,
    /// Skip the exact constraint solve and use the grid only.
    #[arg(long)]
    pub grid_only: bool,
    #[arg(long, default_value_t = 512)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 1 << 16)]
    pub window_cap: u64,
    #[arg(long, default_value_t = 0)]
    pub max_levels: usize,
    #[arg(long, default_value_t = 200)]
    pub k_max: u32,
    #[arg(long, default_value_t = 64)]
    pub l_modes: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrapParamArgs {
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub e: f64,
    #[arg(long = "B", default_value_t = 1.0)]
    #[serde(rename = "B")]
    pub b: f64,
    #[arg(long, default_value_t = 0.5)]
    pub omega_z: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub omega_lambda: f64,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Set the wall frequency to the magnetron frequency.
    #[arg(long)]
    pub lock: bool,
}

impl TrapParamArgs {
    fn params(&self) -> CliResult<TrapParams> {
        let p = derive_params(TrapInputs {
            m: self.m,
            e: self.e,
            b: self.b,
            omega_z: self.omega_z,
            lambda: self.lambda,
            omega_lambda: self.omega_lambda,
            radius: self.radius,
        })?;
        Ok(if self.lock { stroboscopic_lock(&p)? } else { p })
    }
}

#[derive(Debug, Subcommand)]
pub enum TrapCommand {
    /// Normal-mode frequencies of the rotating-frame motion.
    #[command(args_override_self = true)]
    Modes {
        #[command(flatten)]
        params: TrapParamArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rotating-frame trajectory.
    #[command(args_override_self = true)]
    Integrate(IntegrateArgs),
    /// Radial breathing equation at one point.
    #[command(args_override_self = true)]
    Mathieu(MathieuArgs),
    /// Stability chart over (mu, phi).
    #[command(args_override_self = true)]
    Scan(ScanArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub params: TrapParamArgs,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// `xi,zeta,xi_dot,zeta_dot`; the pure fast mode when absent.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub init: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MathieuArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 50)]
    pub periods: usize,
    /// `rho,rho_dot` at tau = 0.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.0], allow_negative_numbers = true)]
    pub init: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [4.0, 16.0, 64.0])]
    pub mu_list: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi_min: f64,
    #[arg(long, default_value_t = 40.0)]
    pub phi_max: f64,
    #[arg(long, default_value_t = 81)]
    pub phi_steps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn require_file(path: &Path, what: &str) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{what} {} is not a readable file", path.display())))
    }
}

fn prepare_out(dir: &Path) -> CliResult {
    if dir.exists() && !dir.is_dir() {
        return Err(CliError::Validation(format!("output {} exists and is not a directory", dir.display())));
    }
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", dir.display())))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn write_csv<P: Serialize>(cfg: &RunConfig<P>, dir: &Path, name: &str, body: &str) -> CliResult<PathBuf> {
    write(dir, name, &(cfg.csv_header() + body))
}

fn write_json<P: Serialize, T: Serialize>(cfg: &RunConfig<P>, dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    write(dir, name, &(cfg.embed_json(&text) + "\n"))
}

fn load_records(path: &Path) -> CliResult<(Vec<EnergyRecord>, u32)> {
    let text = read(path)?;
    let records = records_from_csv(Cursor::new(text.as_bytes()), None)?;
    let Some(first) = records.first() else {
        return Err(CliError::Validation(format!("{} holds no records", path.display())));
    };
    let bits = first.semiprime.n_bits;
    if records.iter().any(|r| r.semiprime.n_bits != bits) {
        return Err(CliError::Validation(format!("{} mixes bit sizes", path.display())));
    }
    Ok((records, bits))
}

fn load_spectrum(path: &Path) -> CliResult<SimulatorSpectrum> {
    Ok(SimulatorSpectrum::from_json(&read(path)?)?)
}

pub fn gen(args: &GenArgs) -> CliResult {
    prepare_out(&args.out)?;
    let half = args.bits / 2;
    let root_max = 1u64
        .checked_shl(half)
        .filter(|_| half < 63)
        .ok_or_else(|| CliError::Budget(format!("{} bits needs prime counts beyond 64-bit arguments", args.bits)))?;
    let mode = match args.counting {
        Counting::Auto if args.bits <= 48 => CountingMode::Sieve,
        Counting::Sieve => CountingMode::Sieve,
        _ => CountingMode::Combinatorial,
    };
    let counter = match mode {
        CountingMode::Sieve => PrimeCounter::new(CountingMode::Sieve, root_max, None)?,
        _ => PrimeCounter::exact_for(root_max),
    };
    let batch = sample_extended_ensemble(args.bits, args.count, args.seed)?;
    let records = energy_records(&batch, &counter)?;
    let cfg = RunConfig::new("gen", args.seed, args);
    let path = write_csv(&cfg, &args.out, "records.csv", &records_to_csv(&records))?;
    let (jmin, jmax) = records.iter().fold((u64::MAX, 0), |(a, b), r| (a.min(r.j), b.max(r.j)));
    let (emin, emax) =
        records.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.energy), b.max(r.energy)));
    println!("count={} j=[{jmin},{jmax}] E=[{},{}]", records.len(), sig17(emin), sig17(emax));
    println!("wrote {}", path.display());
    Ok(())
}

pub fn spectrum(args: &SpectrumArgs) -> CliResult {
    prepare_out(&args.out)?;
    let spec = SimulatorSpectrum::build(args.bits, args.k_max, args.l_modes)?;
    let cfg = RunConfig::new("spectrum", 0, args);
    let path = write(&args.out, "spectrum.json", &(cfg.embed_json(&spec.to_json()?) + "\n"))?;
    println!("lines={} total_weight={}", spec.lines.len(), sig17(spec.total_weight()));
    println!("wrote {}", path.display());
    Ok(())
}

pub fn scale(args: &ScaleArgs) -> CliResult {
    require_file(&args.spectrum, "spectrum")?;
    prepare_out(&args.out)?;
    let spec = load_spectrum(&args.spectrum)?;
    let scaled = scale_spectrum(&spec, args.bits)?;
    let cfg = RunConfig::new("scale", 0, args);
    let path = write(&args.out, "spectrum_scaled.json", &(cfg.embed_json(&scaled.to_json()?) + "\n"))?;
    println!("scaled {} -> {} bits, lines={}", spec.n_bits, scaled.n_bits, scaled.lines.len());
    println!("wrote {}", path.display());
    Ok(())
}

pub fn unfold_cmd(args: &UnfoldArgs) -> CliResult {
    require_file(&args.records, "records")?;
    prepare_out(&args.out)?;
    let (records, bits) = load_records(&args.records)?;
    let series = build_series(&records, bits);
    let ucfg = UnfoldConfig { window: args.l, ell_min: args.ell_min, ell_max: args.ell_max, seed: args.seed };
    let sample = unfold(&series, &ucfg)?;
    let cfg = RunConfig::new("unfold", args.seed, args);
    let path = write_csv(&cfg, &args.out, "spacings.csv", &sample.to_csv())?;
    println!("spacings={} mean={}", sample.len(), sig17(sample.mean()));
    println!("wrote {}", path.display());
    Ok(())
}

pub fn fit(args: &FitArgs) -> CliResult {
    require_file(&args.spacings, "spacings")?;
    prepare_out(&args.out)?;
    let sample = SpacingSample::from_csv(&read(&args.spacings)?)?;
    let report = fit_spacings(&sample, args.bins)?;
    let cfg = RunConfig::new("fit", 0, args);
    write_json(&cfg, &args.out, "fit.json", &report)?;
    write_csv(&cfg, &args.out, "histogram.csv", &report.histogram.to_csv())?;
    println!("count={} mean={} best_model={}", report.count, sig17(report.mean), report.best_model.name());
    for f in &report.fits {
        println!("  {:8} loglik={} ks={}", f.model.name(), sig17(f.log_likelihood), sig17(f.ks));
    }
    Ok(())
}

/// `(E - 1)^(-1/2)` normalised on `[max(lo, 0), hi]`; zero outside.
fn pe_density(grid: &[f64]) -> Vec<f64> {
    let lo = grid.first().copied().unwrap_or(0.0).max(0.0);
    let hi = grid.last().copied().unwrap_or(0.0);
    let mass = 2.0 * (hi.max(0.0).sqrt() - lo.sqrt());
    grid.iter().map(|&x| if x > 0.0 && mass > 0.0 { x.powf(-0.5) / mass } else { 0.0 }).collect()
}

pub fn kde_cmd(args: &KdeArgs) -> CliResult {
    require_file(&args.records, "records")?;
    prepare_out(&args.out)?;
    let (records, _) = load_records(&args.records)?;
    let eps: Vec<f64> = records.iter().map(|r| r.energy - 1.0).collect();
    let curve = kde(&eps, args.bandwidth)?;
    let pe = pe_density(&curve.grid);
    let mut body = String::from("grid,kde_density,pe_density\n");
    for ((x, d), p) in curve.grid.iter().zip(&curve.density).zip(&pe) {
        body.push_str(&format!("{},{},{}\n", sig17(*x), sig17(*d), sig17(*p)));
    }
    let cfg = RunConfig::new("kde", 0, args);
    let path = write_csv(&cfg, &args.out, "kde.csv", &body)?;
    println!("points={} bandwidth={}", curve.grid.len(), sig17(curve.bandwidth));
    println!("wrote {}", path.display());
    Ok(())
}

pub fn invert(args: &InvertArgs) -> CliResult {
    let n: BigUint =
        args.n.trim().parse().map_err(|_| CliError::Validation(format!("N = {:?} is not an integer", args.n)))?;
    if let Some(p) = &args.spectrum {
        require_file(p, "spectrum")?;
    }
    if let Some(p) = &args.zeros {
        require_file(p, "zero table")?;
    }
    if !args.exact_pi && args.zeros.is_none() {
        return Err(CliError::Usage("give --exact-pi or a zero table with --zeros".into()));
    }
    prepare_out(&args.out)?;
    let zeros: Option<ZetaZeroTable> = match (&args.zeros, args.exact_pi) {
        (Some(p), false) => Some(load_zeros(p)?),
        _ => None,
    };
    let icfg = InversionConfig {
        t: args.t,
        grid_points: args.grid_points,
        levels: args.level.clone(),
        window_cap: args.window_cap,
        use_exact_pi: args.exact_pi,
        exact_stage: !args.grid_only,
        max_levels: args.max_levels,
    };
    let report = match &args.spectrum {
        Some(p) => invert_spectrum(&n, &load_spectrum(p)?, &icfg, zeros.as_ref())?,
        None => {
            let mut levels = args.level.clone();
            if args.k_max > 0 {
                let bits = (n.bits() as u32).max(6);
                let spec = SimulatorSpectrum::build(bits, args.k_max, args.l_modes)?;
                levels.extend(spec.by_weight().iter().map(|l| l.energy));
            } else if levels.is_empty() {
                return Err(CliError::Usage("no levels: give --level, --spectrum or --k-max > 0".into()));
            }
            invert_levels(&n, &levels, &icfg, zeros.as_ref())?
        }
    };
    let cfg = RunConfig::new("invert", 0, args);
    let path = write_json(&cfg, &args.out, "invert.json", &report)?;
    match (&report.x, &report.y) {
        (Some(x), Some(y)) => {
            println!("success x={x} y={y} steps={} levels_tried={}", report.steps, report.levels_tried)
        }
        _ => println!("failure steps={} levels_tried={}", report.steps, report.levels_tried),
    }
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct PrintedForm {
    #[serde(serialize_with = "factoring_spectrum::io::ser_sig17")]
    plus: f64,
    #[serde(serialize_with = "factoring_spectrum::io::ser_sig17")]
    minus: f64,
}

#[derive(Serialize)]
struct ModesReport<'a> {
    params: &'a TrapParams,
    modes: &'a factoring_spectrum::trap_sim::ModeSolution,
    printed_expression: PrintedForm,
}

#[derive(Serialize)]
struct ModesConfig<'a> {
    #[serde(flatten)]
    params: &'a TrapParamArgs,
    out: &'a Path,
}

#[derive(Serialize)]
struct MathieuSummary {
    mu: f64,
    phi: f64,
    periods: usize,
    stable: bool,
    #[serde(serialize_with = "factoring_spectrum::io::ser_sig17")]
    growth_rate: f64,
}

pub fn trap(cmd: &TrapCommand) -> CliResult {
    match cmd {
        TrapCommand::Modes { params, out } => {
            prepare_out(out)?;
            let p = params.params()?;
            let modes = mode_frequencies(&p)?;
            let (plus, minus) = printed_lambda_expression(&p);
            let cfg = RunConfig::new("trap modes", 0, ModesConfig { params, out });
            let report = ModesReport { params: &p, modes: &modes, printed_expression: PrintedForm { plus, minus } };
            let path = write_json(&cfg, out, "modes.json", &report)?;
            let minus_kind = if modes.minus_inverted { " (inverted)" } else { "" };
            println!("lambda_plus={} lambda_minus={}{minus_kind}", sig17(modes.lambda_plus), sig17(modes.lambda_minus));
            println!("omega_plus={} omega_minus={}", sig17(p.omega_plus), sig17(p.omega_minus));
            match p.a {
                Some(a) => println!("a={}", sig17(a)),
                None => println!("a=unbounded"),
            }
            println!("wrote {}", path.display());
        }
        TrapCommand::Integrate(args) => {
            let init = match args.init.as_deref() {
                Some(&[a, b, c, d]) => Some([a, b, c, d]),
                Some(_) => return Err(CliError::Usage("--init takes four values xi,zeta,xi_dot,zeta_dot".into())),
                None => None,
            };
            prepare_out(&args.out)?;
            let p = args.params.params()?;
            let init = match init {
                Some(v) => v,
                None => mode_frequencies(&p)?.with_amplitudes(1.0, 0.0).initial_state(),
            };
            let traj = integrate_rotating_frame(&p, init, args.dt, args.steps)?;
            let cfg = RunConfig::new("trap integrate", 0, args);
            let path = write_csv(&cfg, &args.out, "trajectory.csv", &traj.to_csv())?;
            println!("samples={}", traj.len());
            println!("wrote {}", path.display());
        }
        TrapCommand::Mathieu(args) => {
            if args.init.len() != 2 {
                return Err(CliError::Usage("--init takes two values rho,rho_dot".into()));
            }
            prepare_out(&args.out)?;
            let span = args.periods as f64 * std::f64::consts::PI;
            let sol = integrate_mathieu(args.mu, args.phi, span, (args.init[0], args.init[1]))?;
            let mut body = String::from("tau,rho,rho_dot\n");
            for i in 0..sol.tau_grid.len() {
                body.push_str(&format!("{},{},{}\n", sig17(sol.tau_grid[i]), sig17(sol.rho[i]), sig17(sol.rho_dot[i])));
            }
            let cfg = RunConfig::new("trap mathieu", 0, args);
            let path = write_csv(&cfg, &args.out, "mathieu.csv", &body)?;
            let summary = MathieuSummary {
                mu: args.mu,
                phi: args.phi,
                periods: args.periods,
                stable: sol.stable,
                growth_rate: sol.growth_rate,
            };
            write_json(&cfg, &args.out, "mathieu.json", &summary)?;
            println!("stable={} growth_rate={}", sol.stable, sig17(sol.growth_rate));
            println!("wrote {}", path.display());
        }
        TrapCommand::Scan(args) => {
            if args.phi_steps < 2 || !(args.phi_max > args.phi_min) {
                return Err(CliError::Validation("need phi_max > phi_min and phi_steps >= 2".into()));
            }
            prepare_out(&args.out)?;
            let step = (args.phi_max - args.phi_min) / (args.phi_steps - 1) as f64;
            let grid: Vec<f64> = (0..args.phi_steps).map(|i| args.phi_min + i as f64 * step).collect();
            let scan = stability_scan(&args.mu_list, &grid)?;
            let cfg = RunConfig::new("trap scan", 0, args);
            write_csv(&cfg, &args.out, "stability.csv", &scan.to_csv())?;
            write_csv(&cfg, &args.out, "bands.csv", &scan.bands_csv())?;
            println!("cells={} bands={} agreement={}", scan.cells.len(), scan.bands.len(), sig17(scan.agreement()));
            if let Some(c) = center_offset_constant(&scan, &args.mu_list) {
                println!("center_offset_c={}", sig17(c));
            }
        }
    }
    Ok(())
}
