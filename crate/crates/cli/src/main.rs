use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use qdo_core::geometry::LatticeKind;
use qdo_core::scan::{
    run_boundary_scan, run_chain_scan, run_lattice_curve, run_qubit_trimer_scan, run_three_mode_scan,
    run_trimer_scan, BoundaryMode, BoundaryTarget, Range, ScanKind, ScanOutput, ScanSpec,
};
use qdo_core::QdoError;

const EXIT_CONFIG: u8 = 2;
const EXIT_ALL_INVALID: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "qdo", version, about = "Dispersion energy and entanglement scans of quantum Drude oscillator assemblies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Isosceles trimer heatmap over (rho, theta).
    Trimer(Common),
    /// Linear-zigzag chain heatmap over (rho, theta).
    Chain {
        #[command(flatten)]
        common: Common,
        /// Number of QDOs in the chain.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Lattice curve over rho, with central-site EDI written alongside.
    Lattice {
        #[command(flatten)]
        common: Common,
        /// CSV for the per-neighbour EDI rows (default: <out stem>.edi.csv).
        #[arg(long)]
        edi_out: Option<PathBuf>,
    },
    /// Three-mode model over (kappa, beta).
    ThreeMode {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        kappa_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        kappa_max: Option<f64>,
        #[arg(long)]
        kappa_steps: Option<usize>,
        #[arg(long)]
        beta_min: Option<f64>,
        #[arg(long)]
        beta_max: Option<f64>,
        #[arg(long)]
        beta_steps: Option<usize>,
    },
    /// Two-level qubit comparator on the trimer grid.
    QubitTrimer(Common),
    /// Root search for a boundary line.
    Boundary {
        #[command(flatten)]
        common: Common,
        /// mb_zero, edi_one, at_zero or d3_eq_neg_d4.
        #[arg(long)]
        mode: Option<String>,
        /// trimer, chain or lattice.
        #[arg(long)]
        target: Option<String>,
        /// Chain length for the chain target.
        #[arg(long)]
        n: Option<usize>,
        /// Fixed rho values for theta searches (default: the rho grid).
        #[arg(long, value_delimiter = ',')]
        fixed: Option<Vec<f64>>,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run metadata as JSON.
    #[arg(long)]
    json_meta: Option<PathBuf>,
    /// Flat key=value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rho_min: Option<f64>,
    #[arg(long)]
    rho_max: Option<f64>,
    #[arg(long)]
    rho_steps: Option<usize>,
    #[arg(long)]
    theta_min: Option<f64>,
    #[arg(long)]
    theta_max: Option<f64>,
    #[arg(long)]
    theta_steps: Option<usize>,
    /// Lattice kind: square, triangular, honeycomb, cubic, pyrochlore.
    #[arg(long)]
    kind: Option<String>,
    /// Lattice extents, e.g. 11,11 or 7,7,7.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Matrix budget in modes.
    #[arg(long)]
    mode_budget: Option<usize>,
}

/// Flat key=value configuration. Keys use the long flag names, with either
/// dashes or underscores.
struct Config(HashMap<String, String>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self, String> {
        let mut map = HashMap::new();
        let Some(path) = path else { return Ok(Config(map)) };
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), n + 1))?;
            map.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(Config(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| format!("config: bad value '{v}' for {key}")),
        }
    }

    /// Flag value if given, else the config entry.
    fn pick<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str) -> Result<Option<T>, String> {
        match flag {
            Some(v) => Ok(Some(v.clone())),
            None => self.get(key),
        }
    }
}

fn parse_dims(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad --dims entry '{t}'")))
        .collect()
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad list entry '{t}'")))
        .collect()
}

fn range(cfg: &Config, base: Range, prefix: &str, min: Option<f64>, max: Option<f64>, steps: Option<usize>) -> Result<Range, String> {
    Ok(Range {
        min: cfg.pick(&min, &format!("{prefix}-min"))?.unwrap_or(base.min),
        max: cfg.pick(&max, &format!("{prefix}-max"))?.unwrap_or(base.max),
        steps: cfg.pick(&steps, &format!("{prefix}-steps"))?.unwrap_or(base.steps),
    })
}

struct Resolved {
    spec: ScanSpec,
    out: Option<PathBuf>,
    json_meta: Option<PathBuf>,
    threads: Option<usize>,
    cfg: Config,
}

fn resolve(kind: ScanKind, c: &Common) -> Result<Resolved, String> {
    let cfg = Config::load(c.config.as_deref())?;
    let mut spec = ScanSpec::new(kind);
    spec.rho = range(&cfg, spec.rho, "rho", c.rho_min, c.rho_max, c.rho_steps)?;
    spec.theta = range(&cfg, spec.theta, "theta", c.theta_min, c.theta_max, c.theta_steps)?;
    if let Some(k) = cfg.pick(&c.kind, "kind")? {
        spec.lattice = k.parse::<LatticeKind>().map_err(|e| e.to_string())?;
    }
    if let Some(d) = cfg.pick(&c.dims, "dims")? {
        spec.dims = parse_dims(&d)?;
    }
    if let Some(k) = cfg.pick(&c.kmax, "kmax")? {
        spec.k_max = k;
    }
    if let Some(b) = cfg.pick(&c.mode_budget, "mode-budget")? {
        spec.mode_budget = b;
    }
    let out = cfg.pick(&c.out, "out")?;
    let json_meta = cfg.pick(&c.json_meta, "json-meta")?;
    let threads = cfg.pick(&c.threads, "threads")?;
    Ok(Resolved { spec, out, json_meta, threads, cfg })
}

enum Failure {
    Config(String),
    Budget(String),
    Run(String),
}

impl From<QdoError> for Failure {
    fn from(e: QdoError) -> Self {
        match e {
            QdoError::TooLarge { .. } => Failure::Budget(e.to_string()),
            QdoError::Io(_) => Failure::Run(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn write_output(out: &ScanOutput, path: Option<&Path>, meta_path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => out.table.write_csv(p).map_err(|e| Failure::Run(e.to_string()))?,
        None => print!("{}", out.table.to_csv()),
    }
    if let Some(m) = meta_path {
        let text = serde_json::to_string_pretty(&out.meta).map_err(|e| Failure::Run(e.to_string()))?;
        fs::write(m, text + "\n").map_err(|e| Failure::Run(format!("cannot write {}: {e}", m.display())))?;
    }
    Ok(())
}

fn cfg_ok<T>(r: Result<T, String>) -> Result<T, Failure> {
    r.map_err(Failure::Config)
}

fn default_edi_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("lattice");
    out.with_file_name(format!("{stem}.edi.csv"))
}

fn run(cli: Cli) -> Result<ScanOutput, Failure> {
    let (common, kind) = match &cli.command {
        Command::Trimer(c) => (c, ScanKind::Trimer),
        Command::Chain { common, .. } => (common, ScanKind::Chain),
        Command::Lattice { common, .. } => (common, ScanKind::LatticeCurve),
        Command::ThreeMode { common, .. } => (common, ScanKind::ThreeMode),
        Command::QubitTrimer(c) => (c, ScanKind::QubitTrimer),
        Command::Boundary { common, .. } => (common, ScanKind::Boundary),
    };
    let Resolved { mut spec, out, json_meta, threads, cfg } = resolve(kind, common).map_err(Failure::Config)?;
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        // the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }

    let output = match &cli.command {
        Command::Trimer(_) => run_trimer_scan(&spec)?,
        Command::Chain { n, .. } => {
            if let Some(n) = cfg_ok(cfg.pick(n, "n"))? {
                spec.chain_len = n;
            }
            run_chain_scan(&spec)?
        }
        Command::Lattice { edi_out, .. } => {
            let curve = run_lattice_curve(&spec)?;
            let edi_path = cfg_ok(cfg.pick(edi_out, "edi-out"))?.or_else(|| out.as_deref().map(default_edi_path));
            let mut output = curve.output;
            if let Some(p) = edi_path {
                curve.edi_table.write_csv(&p).map_err(|e| Failure::Run(e.to_string()))?;
                output.meta["edi_csv"] = p.display().to_string().into();
            }
            output
        }
        Command::ThreeMode { kappa_min, kappa_max, kappa_steps, beta_min, beta_max, beta_steps, .. } => {
            spec.kappa = cfg_ok(range(&cfg, spec.kappa, "kappa", *kappa_min, *kappa_max, *kappa_steps))?;
            spec.beta = cfg_ok(range(&cfg, spec.beta, "beta", *beta_min, *beta_max, *beta_steps))?;
            run_three_mode_scan(&spec)?
        }
        Command::QubitTrimer(_) => run_qubit_trimer_scan(&spec)?,
        Command::Boundary { mode, target, n, fixed, .. } => {
            if let Some(m) = cfg_ok(cfg.pick(mode, "mode"))? {
                spec.boundary_mode = m.parse::<BoundaryMode>()?;
            }
            let target = cfg_ok(cfg.pick(target, "target"))?.unwrap_or_else(|| "trimer".into());
            spec.boundary_target = match target.trim().to_ascii_lowercase().as_str() {
                "trimer" => BoundaryTarget::Trimer,
                "chain" => BoundaryTarget::Chain { n: cfg_ok(cfg.pick(n, "n"))?.unwrap_or(spec.chain_len) },
                "lattice" => BoundaryTarget::Lattice { kind: spec.lattice, dims: spec.dims.clone() },
                other => return Err(Failure::Config(format!("unknown boundary target '{other}'"))),
            };
            spec.fixed = match fixed {
                Some(v) => v.clone(),
                None => match cfg.0.get("fixed") {
                    Some(s) => parse_list(s).map_err(Failure::Config)?,
                    None => Vec::new(),
                },
            };
            run_boundary_scan(&spec)?
        }
    };
    write_output(&output, out.as_deref(), json_meta.as_deref())?;
    Ok(output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) if output.all_invalid() => {
            eprintln!("qdo: every row is invalid");
            ExitCode::from(EXIT_ALL_INVALID)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("qdo: invalid configuration: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("qdo: {msg}");
            ExitCode::from(EXIT_BUDGET)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("qdo: {msg}");
            ExitCode::FAILURE
        }
    }
}
