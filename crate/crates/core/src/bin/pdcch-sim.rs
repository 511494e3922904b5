//! Command-line front end for the PDCCH blocking simulator.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pdcch_blocking::hash::UeIdentity;
use pdcch_blocking::io::{
    self, emit_results, load_source, parse_plan, parse_scenario, render_plan, IoError, OutputFormat, PlanRecord,
    ResultRecord, ScenarioFile, BUNDLED_SCENARIOS,
};
use pdcch_blocking::planner::plan_min_coreset;
use pdcch_blocking::scheduler::{validate_limits, MonitoringLimits, SubcarrierSpacing};

#[derive(Parser)]
#[command(name = "pdcch-sim", version, about = "PDCCH blocking-probability simulator and CORESET planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the base configuration of a scenario.
    Simulate(RunArgs),
    /// Run every point of a scenario's sweep.
    Sweep(RunArgs),
    /// Find the smallest CORESET meeting each blocking target of a plan file.
    Plan(RunArgs),
    /// Check a scenario's search space against per-slot monitoring limits.
    ValidateLimits {
        scenario: String,
        /// Subcarrier spacing in kHz (15, 30, 60 or 120).
        #[arg(long, default_value_t = 15)]
        scs: u32,
        /// C-RNTI whose candidates are counted.
        #[arg(long, default_value_t = 1)]
        rnti: u32,
    },
    /// List the bundled scenarios.
    Scenarios,
    /// Print a scenario file with every default filled in.
    Show { scenario: String },
}

#[derive(Args)]
struct RunArgs {
    /// Path to a scenario file, or the name of a bundled scenario.
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<u32>,
    /// Output file. Defaults to `<name>.<format>` under the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output directory when `--out` is not given.
    #[arg(long, env = io::OUT_DIR_ENV, default_value = io::DEFAULT_OUT_DIR)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

enum Failure {
    User(String),
    Runtime(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        if e.is_user_error() {
            Failure::User(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl RunArgs {
    fn out_path(&self, name: &str) -> PathBuf {
        let format = OutputFormat::from(self.format);
        self.out.clone().unwrap_or_else(|| self.out_dir.join(format!("{name}.{}", format.extension())))
    }

    fn init_threads(&self) -> Result<(), Failure> {
        if self.threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.threads)
                .build_global()
                .map_err(|e| Failure::Runtime(e.to_string()))?;
        }
        Ok(())
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn simulate(args: &RunArgs) -> Result<(), Failure> {
    args.init_threads()?;
    let mut scenario = parse_scenario(&args.scenario)?;
    scenario.override_run(args.seed, args.iterations);
    let result = scenario.simulate().map_err(|e| Failure::User(e.to_string()))?;
    let record = ResultRecord::new(&scenario.name, &result.ue_count.to_string(), &result);
    let path = args.out_path(&scenario.name);
    emit_results(&[record], args.format.into(), &path)?;
    println!(
        "{}: B = {:.6} ± {:.6} ({} blocked of {}) -> {}",
        scenario.name,
        result.blocking_probability,
        result.stderr,
        result.blocked_total,
        result.trials(),
        path.display()
    );
    Ok(())
}

fn sweep(args: &RunArgs) -> Result<(), Failure> {
    args.init_threads()?;
    let mut scenario = parse_scenario(&args.scenario)?;
    if !scenario.is_sweep() {
        return Err(Failure::User(format!("{} has no [sweep] table", scenario.name)));
    }
    scenario.override_run(args.seed, args.iterations);
    let (records, failures) = scenario.sweep_records();
    for (point, err) in &failures {
        eprintln!("skipped {point}: {err}");
    }
    let path = args.out_path(&scenario.name);
    emit_results(&records, args.format.into(), &path)?;
    println!("{}: {} points -> {}", scenario.name, records.len(), path.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::User(format!("{} sweep points were invalid", failures.len())))
    }
}

fn plan(args: &RunArgs) -> Result<(), Failure> {
    args.init_threads()?;
    let (file, mut requests) = parse_plan(&args.scenario)?;
    let mut records = Vec::new();
    for req in &mut requests {
        if let Some(s) = args.seed {
            req.master_seed = s;
        }
        if let Some(i) = args.iterations {
            req.iterations = i;
        }
        let res = plan_min_coreset(req).map_err(|e| Failure::User(e.to_string()))?;
        let min = res.min_cces.map_or("none".to_string(), |c| c.to_string());
        println!(
            "U = {:>3}, target {:.3}: min CCEs {min} (B = {:.6})",
            req.ue_count, req.target_blocking, res.achieved_blocking
        );
        records.push(PlanRecord::new(&file.name, req, &res));
    }
    let path = args.out_path(&file.name);
    write_text(&path, &render_plan(&records, args.format.into())?)?;
    println!("{}: {} requests -> {}", file.name, records.len(), path.display());
    Ok(())
}

fn limits(scenario: &str, scs: u32, rnti: u32) -> Result<(), Failure> {
    let scenario = parse_scenario(scenario)?;
    let scs = SubcarrierSpacing::from_khz(scs).ok_or_else(|| Failure::User(format!("unsupported SCS {scs} kHz")))?;
    let ue = UeIdentity::new(rnti).map_err(|e| Failure::User(e.to_string()))?;
    let report = validate_limits(
        &scenario.base.search_space,
        &scenario.base.coreset,
        ue,
        &MonitoringLimits::for_scs(scs),
    );
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?);
    Ok(())
}

fn show(source: &str) -> Result<(), Failure> {
    let (origin, text) = load_source(source)?;
    let file = ScenarioFile::from_toml(&text, &origin)?;
    file.build().map_err(|source| IoError::Validation { origin, source })?;
    print!("{}", file.normalized().to_toml());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Plan(a) => plan(a),
        Command::ValidateLimits { scenario, scs, rnti } => limits(scenario, *scs, *rnti),
        Command::Scenarios => {
            for (name, text) in BUNDLED_SCENARIOS {
                let description = text
                    .lines()
                    .find_map(|l| l.strip_prefix("description = "))
                    .map(|d| d.trim_matches('"'))
                    .unwrap_or("");
                println!("{name:<22} {description}");
            }
            Ok(())
        }
        Command::Show { scenario } => show(scenario),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
