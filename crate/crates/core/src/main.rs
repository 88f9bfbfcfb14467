use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use modspace::field::{gaussian_window, random_bandlimited};
use modspace::io::{load_field, save_field, save_norm_records, save_tf, write_json};
use modspace::multiplier::{
    apply_multiplier, default_max_order, hormander_study, mihlin_study, ConditionStudy, MultiplierSymbol,
};
use modspace::norms::{field_amalgam_norm, luxemburg, modulation_norm, mixed_norm, NormRecord, PhaseField, Weights};
use modspace::tfa::{stft_t, stft_with, StftOptions};
use modspace::verify::{run_suite, summary_table, write_reports, CheckKind, Probe, SuiteConfig};
use modspace::{Error, Grid, NormSpec, OrderFlag, QuasiYoungFunction, Result, SampledField};

#[derive(Parser)]
#[command(name = "modspace", version, about = "Orlicz modulation space norms, Fourier multipliers and their numerical checks")]
struct Cli {
    /// Output directory for records, fields and reports.
    #[arg(long, global = true, env = "MODSPACE_OUT_DIR", default_value = "modspace_out")]
    out: PathBuf,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Norm of a generated or loaded field.
    Norm(NormArgs),
    /// Short-time Fourier transform of a field, written to a file.
    Stft(StftArgs),
    /// Apply a Fourier multiplier, or tabulate its Mihlin/Hörmander functionals.
    Multiplier(MultiplierArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

// The argument structs double as JSON config schemas: a `--config` file
// supplies any field by its long name and command-line flags win.

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct NormArgs {
    /// M (modulation), W (Wiener type), L (Orlicz on positions) or amalgam.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    space: Option<String>,
    /// Inner quasi-Young function, e.g. power:2, power_log:1,1, expm1.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<String>,
    /// Outer quasi-Young function.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    psi: Option<String>,
    /// Local exponent of the amalgam.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceArgs,
    /// Record path (.json or .csv); defaults to <out>/norm.json.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    /// JSON file with defaults for any of these options.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct SourceArgs {
    /// gaussian:σ, zero, delta, bandlimited:seed[,fraction], chirp:c, two_bump:offset.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    signal: Option<String>,
    /// Field file (.csv or binary); overrides --signal and the grid options.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dx: Option<f64>,
    /// Width of the Gaussian window.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    window_sigma: Option<f64>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct StftArgs {
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceArgs,
    /// Zero-padding factor of the windowed product.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    oversample: Option<usize>,
    /// v (plain) or t (phase-shifted) convention.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    convention: Option<String>,
    /// Output path; .csv for text, anything else binary. Defaults to <out>/stft.bin.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct MultiplierArgs {
    /// Symbol, e.g. identity, homogeneous_chirp:1,2, rational_mihlin, cutoff_low:1,1.5.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    symbol: Option<String>,
    /// mihlin or hormander: condition tables across domain doublings instead of applying.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    doublings: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_order: Option<usize>,
    /// Number of annulus radii for the Hörmander functional.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    radii: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceArgs,
    /// Output path for the filtered field or the condition study.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite manifest (JSON); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run only these checks (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ensemble_size: Option<usize>,
    /// Skip the two-dimensional checks.
    #[arg(long)]
    no_2d: bool,
    /// Also write one trend CSV per report.
    #[arg(long)]
    emit_plots: bool,
}

/// Config file values overlaid by the flags that were actually given.
fn merged<T: Serialize + DeserializeOwned>(cli: &T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else {
        return serde_json::from_value(serde_json::to_value(cli)?).map_err(Error::from);
    };
    let text = std::fs::read_to_string(path)?;
    let mut base: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let serde_json::Value::Object(map) = &mut base else {
        return Err(Error::Config(format!("{}: expected a JSON object", path.display())));
    };
    if let serde_json::Value::Object(flags) = serde_json::to_value(cli)? {
        map.extend(flags);
    }
    serde_json::from_value(base).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn parse_numbers(args: &str) -> Result<Vec<f64>> {
    if args.is_empty() {
        return Ok(Vec::new());
    }
    args.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{s}` in signal spec")))
        })
        .collect()
}

impl SourceArgs {
    fn grid(&self) -> Result<Grid> {
        let d = self.d.unwrap_or(1);
        let default = if d == 2 { Grid::default_2d() } else { Grid::default_1d() };
        Grid::new(d, self.n.unwrap_or(default.n), self.dx.unwrap_or(default.dx))
    }

    fn field(&self) -> Result<SampledField> {
        if let Some(path) = &self.input {
            return load_field(path);
        }
        let grid = self.grid()?;
        let spec = self.signal.as_deref().unwrap_or("gaussian:1");
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums = parse_numbers(args)?;
        let arity = |lo: usize, hi: usize| -> Result<()> {
            if (lo..=hi).contains(&nums.len()) {
                Ok(())
            } else {
                Err(Error::Config(format!("signal `{name}` takes {lo}..={hi} parameters, got {}", nums.len())))
            }
        };
        match name {
            "gaussian" => {
                arity(0, 1)?;
                gaussian_window(nums.first().copied().unwrap_or(1.0), grid)
            }
            "zero" => {
                arity(0, 0)?;
                Ok(SampledField::zeros(grid))
            }
            "delta" => {
                arity(0, 0)?;
                Ok(SampledField::delta(grid))
            }
            "bandlimited" => {
                arity(1, 2)?;
                if nums[0] < 0.0 || nums[0].fract() != 0.0 {
                    return Err(Error::Config(format!("seed {} is not a non-negative integer", nums[0])));
                }
                random_bandlimited(grid, nums.get(1).copied().unwrap_or(0.5), nums[0] as u64)
            }
            "chirp" => {
                arity(1, 1)?;
                Probe::ChirpedGaussian { c: nums[0] }.sample(&grid, 0)
            }
            "two_bump" => {
                arity(1, 1)?;
                Probe::TwoBump { offset: nums[0] }.sample(&grid, 0)
            }
            other => Err(Error::Config(format!("unknown signal `{other}`"))),
        }
    }

    fn window(&self, grid: Grid) -> Result<SampledField> {
        gaussian_window(self.window_sigma.unwrap_or(1.0), grid)
    }
}

fn parent_dir(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn cmd_norm(out: &Path, args: NormArgs) -> Result<bool> {
    let args = merged(&args, args.config.as_deref())?;
    let f = args.source.field()?;
    let phi = QuasiYoungFunction::parse(args.phi.as_deref().unwrap_or("power:2"))?;
    let psi = QuasiYoungFunction::parse(args.psi.as_deref().unwrap_or("power:2"))?;
    let space = args.space.as_deref().unwrap_or("M").to_ascii_lowercase();
    let (name, spec, value) = match space.as_str() {
        "m" | "modulation" => {
            let spec = NormSpec::modulation(phi, psi);
            let v = modulation_norm(&f, &args.source.window(f.grid)?, &spec)?;
            ("M", spec.label(), v)
        }
        "w" | "wiener" => {
            let spec = NormSpec::new(phi, psi, OrderFlag::OuterFirst);
            let v = modulation_norm(&f, &args.source.window(f.grid)?, &spec)?;
            ("W", spec.label(), v)
        }
        "l" | "orlicz" => {
            if f.grid.d == 1 {
                let v = luxemburg(&f.abs(), Weights::Uniform(f.grid.cell()), &phi)?;
                ("L", phi.label(), v)
            } else {
                // mixed over the two axes, first axis inner
                let axis = Grid::new(1, f.grid.n, f.grid.dx)?;
                let spec = NormSpec::modulation(phi, psi);
                let v = mixed_norm(&PhaseField::new(axis, axis, f.abs())?, &spec)?;
                ("L", spec.label(), v)
            }
        }
        "amalgam" => {
            let r = args.r.unwrap_or(1.0);
            let v = field_amalgam_norm(&f, r, &phi)?;
            ("amalgam", format!("W^{r}({})", phi.label()), v)
        }
        other => return Err(Error::Config(format!("unknown space `{other}` (M, W, L, amalgam)"))),
    };
    let record = NormRecord {
        norm_name: name.to_string(),
        spec,
        value,
        grid: f.grid.describe(),
        boundary_mass: f.boundary_mass(),
    };
    if record.boundary_mass > modspace::field::BOUNDARY_MASS_FLAG {
        log::warn!("boundary mass {:.2e}: the field is not well contained in the box", record.boundary_mass);
    }
    let path = args.output.unwrap_or_else(|| out.join("norm.json"));
    parent_dir(&path)?;
    save_norm_records(&path, std::slice::from_ref(&record))?;
    println!("{} {} = {:.15e}  ({})", record.norm_name, record.spec, record.value, record.grid);
    Ok(true)
}

fn cmd_stft(out: &Path, args: StftArgs) -> Result<bool> {
    let args = merged(&args, args.config.as_deref())?;
    let f = args.source.field()?;
    let w = args.source.window(f.grid)?;
    let oversample = args.oversample.unwrap_or(1);
    let tf = match args.convention.as_deref().unwrap_or("v") {
        "v" | "V" => stft_with(&f, &w, StftOptions { oversample })?,
        "t" | "T" if oversample == 1 => stft_t(&f, &w)?,
        "t" | "T" => return Err(Error::Config("the t convention has no oversampling".into())),
        other => return Err(Error::Config(format!("unknown convention `{other}` (v, t)"))),
    };
    let path = args.output.unwrap_or_else(|| out.join("stft.bin"));
    parent_dir(&path)?;
    save_tf(&path, &tf)?;
    println!(
        "stft {} x {}  L2 = {:.15e}  -> {}",
        tf.position_grid.describe(),
        tf.frequency_grid.describe(),
        tf.l2_norm(),
        path.display()
    );
    Ok(true)
}

fn print_study(study: &ConditionStudy) {
    println!("{} functional of {}", study.functional, study.symbol);
    let head: Vec<String> = study.extents.iter().map(|e| format!("{:>14}", format!("Ξ={e:.4}"))).collect();
    println!("{:<8} {}  class", "alpha", head.join(" "));
    for (alpha, values, class) in &study.rows {
        let cells: Vec<String> = values.iter().map(|v| format!("{v:>14.6e}")).collect();
        println!("{:<8} {}  {class:?}", format!("({},{})", alpha[0], alpha[1]), cells.join(" "));
    }
}

fn cmd_multiplier(out: &Path, args: MultiplierArgs) -> Result<bool> {
    let args = merged(&args, args.config.as_deref())?;
    let text = args
        .symbol
        .as_deref()
        .ok_or_else(|| Error::Config("--symbol is required".into()))?;
    let symbol = MultiplierSymbol::parse(text)?;
    let Some(check) = args.check.as_deref() else {
        let f = args.source.field()?;
        let g = apply_multiplier(&symbol, &f)?;
        let path = args.output.unwrap_or_else(|| out.join("multiplied.csv"));
        parent_dir(&path)?;
        save_field(&path, &g)?;
        println!(
            "{}: ‖f‖ = {:.15e}, ‖m(D)f‖ = {:.15e} -> {}",
            symbol.label(),
            f.l2_norm(),
            g.l2_norm(),
            path.display()
        );
        return Ok(true);
    };
    let MultiplierSymbol::Parametric(p) = &symbol else {
        return Err(Error::Config("condition studies need a parametric symbol".into()));
    };
    let grid = args.source.grid()?;
    let doublings = args.doublings.unwrap_or(2);
    let order = args.max_order.unwrap_or_else(|| default_max_order(grid.d));
    let study = match check {
        "mihlin" => mihlin_study(p, &grid, doublings, order)?,
        "hormander" => hormander_study(p, &grid, doublings, order, args.radii.unwrap_or(8))?,
        other => return Err(Error::Config(format!("unknown check `{other}` (mihlin, hormander)"))),
    };
    print_study(&study);
    let path = args.output.unwrap_or_else(|| out.join(format!("{check}_study.json")));
    parent_dir(&path)?;
    write_json(std::io::BufWriter::new(std::fs::File::create(&path)?), &study)?;
    Ok(true)
}

fn cmd_verify(out: &Path, args: VerifyArgs) -> Result<bool> {
    let mut cfg = match &args.config {
        Some(path) => SuiteConfig::load(path)?,
        None => SuiteConfig::default(),
    };
    if !args.only.is_empty() {
        cfg.checks = Some(args.only.iter().map(|s| CheckKind::parse(s.trim())).collect::<Result<_>>()?);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(size) = args.ensemble_size {
        cfg.ensemble_size = size;
    }
    if args.no_2d {
        cfg.include_2d = false;
    }
    let reports = run_suite(&cfg)?;
    write_reports(out, &reports, args.emit_plots)?;
    print!("{}", summary_table(&reports));
    let failed: Vec<&str> = reports.iter().filter(|r| r.failed()).map(|r| r.check_name.as_str()).collect();
    if failed.is_empty() {
        println!("all {} reports passed -> {}", reports.len(), out.display());
        Ok(true)
    } else {
        println!("failed: {}", failed.join(", "));
        Ok(false)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match cli.command {
        Command::Norm(a) => cmd_norm(&cli.out, a),
        Command::Stft(a) => cmd_stft(&cli.out, a),
        Command::Multiplier(a) => cmd_multiplier(&cli.out, a),
        Command::Verify(a) => cmd_verify(&cli.out, a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
