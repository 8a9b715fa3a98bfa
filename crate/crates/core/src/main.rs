use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use optomech::analytic::{x2_closed_form, x2_with_conversion, xw_closed_form, AppendixParams};
use optomech::dressed::{tune_resonance, Scan};
use optomech::fockspace::ModeLabel;
use optomech::observables::Observable;
use optomech::scenarios::{self, emit_csv, parse_config, preset, RunOptions, ScenarioConfig, ScenarioResult};
use optomech::{Error, Result};

#[derive(Parser)]
#[command(name = "optomech", version, about = "Driven-dissipative optomechanical cavity simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset experiment and write its trajectory as CSV.
    Simulate(SimulateArgs),
    /// Find the mode-1 frequency minimizing the conversion anticrossing.
    Tune {
        #[arg(long)]
        epsilon: f64,
        /// Scan range as lo:hi:step.
        #[arg(long)]
        scan: Option<String>,
    },
    /// Tabulate a closed-form coherence estimate as CSV (columns t, value).
    Analytic(AnalyticArgs),
}

#[derive(Parser)]
struct SimulateArgs {
    #[arg(long)]
    preset: Option<String>,
    /// key = value file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// key=value setting, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Skip the rerun at larger truncation.
    #[arg(long)]
    no_converge_check: bool,
    #[arg(long)]
    omega2: Option<String>,
    #[arg(long)]
    omega_wall: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    cutoff_mode1: Option<String>,
    #[arg(long)]
    cutoff_mode2: Option<String>,
    #[arg(long)]
    cutoff_wall: Option<String>,
    #[arg(long)]
    t_cavity: Option<String>,
    #[arg(long)]
    t_wall: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    drive_amplitude: Option<String>,
    /// Value or "auto".
    #[arg(long)]
    tuned_omega1: Option<String>,
    #[arg(long)]
    t_max_kappa_units: Option<String>,
    #[arg(long)]
    kappa_ref: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    record_every: Option<String>,
    #[arg(long)]
    dressed_m: Option<String>,
}

impl SimulateArgs {
    fn flag_settings(&self) -> Vec<(&'static str, &String)> {
        [
            ("omega2", &self.omega2),
            ("omega_wall", &self.omega_wall),
            ("epsilon", &self.epsilon),
            ("cutoff_mode1", &self.cutoff_mode1),
            ("cutoff_mode2", &self.cutoff_mode2),
            ("cutoff_wall", &self.cutoff_wall),
            ("t_cavity", &self.t_cavity),
            ("t_wall", &self.t_wall),
            ("kappa", &self.kappa),
            ("gamma", &self.gamma),
            ("drive_amplitude", &self.drive_amplitude),
            ("tuned_omega1", &self.tuned_omega1),
            ("t_max_kappa_units", &self.t_max_kappa_units),
            ("kappa_ref", &self.kappa_ref),
            ("dt", &self.dt),
            ("record_every", &self.record_every),
            ("dressed_m", &self.dressed_m),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
        .collect()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Formula {
    Xw,
    X2,
    X2conv,
}

#[derive(Parser)]
struct AnalyticArgs {
    #[arg(long, value_enum)]
    formula: Formula,
    #[arg(long)]
    t_max: f64,
    /// Sampling interval.
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    #[arg(long, default_value_t = 0.5)]
    omega1: f64,
    #[arg(long, default_value_t = 1.3)]
    omega2: f64,
    #[arg(long, default_value_t = 1.0)]
    omega_wall: f64,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Coherent amplitude of mode 1.
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Write to a file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn build_config(args: &SimulateArgs) -> Result<ScenarioConfig> {
    let mut file_pairs = Vec::new();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
        file_pairs = parse_config(&text)?;
    }
    let file_preset = file_pairs.iter().find(|(k, _)| k == "preset").map(|(_, v)| v.clone());
    let name = args
        .preset
        .clone()
        .or(file_preset)
        .ok_or_else(|| Error::Config("no preset given (use --preset or a 'preset' key in the config file)".into()))?;
    let mut config = preset(&name)?;
    for (k, v) in file_pairs.iter().filter(|(k, _)| k != "preset") {
        config.set(k, v)?;
    }
    for item in &args.overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{item}' is not key=value")))?;
        config.set(k, v)?;
    }
    for (k, v) in args.flag_settings() {
        config.set(k, v)?;
    }
    if let Some(out) = &args.output {
        config.output_path = Some(out.clone());
    }
    Ok(config)
}

fn report(result: &ScenarioResult, path: &std::path::Path) {
    let s = &result.steady;
    println!("preset          {}", result.config.preset.as_deref().unwrap_or("-"));
    println!("omega1_tuned    {:.6}", result.omega1);
    println!("steady window   [{:.1}, {:.1}]", s.from, s.to);
    for obs in [Observable::N1, Observable::N2, Observable::Nw, Observable::Jc, Observable::Jw, Observable::P] {
        println!("{:<15} {:.6e}", obs.name(), s.mean(obs));
    }
    for label in ModeLabel::ALL {
        println!("amp_{:<11} {:.6e}", Observable::quadrature(label).name(), s.amplitude(label));
    }
    match result.t_f {
        Some(t) => println!("t_f             {t:.1} (kappa_t {:.3})", t * result.config.kappa_ref),
        None => println!("t_f             not reached"),
    }
    println!("trace_drift     {:.3e}", result.max_trace_drift);
    println!("min_eigenvalue  {:.3e}", result.min_eigenvalue);
    println!("dropped_pairs   {}", result.dropped_degenerate);
    if let Some(c) = &result.convergence {
        println!(
            "convergence     {} (max drift {:.3}% at cutoffs ({},{},{}), M={})",
            if c.converged { "ok" } else { "FAILED" },
            100.0 * c.max_drift(),
            c.cutoffs.mode1,
            c.cutoffs.mode2,
            c.cutoffs.wall,
            c.dressed_m
        );
    } else {
        println!("convergence     skipped");
    }
    println!("csv             {}", path.display());
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
}

fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let config = build_config(args)?;
    let opts = RunOptions { converge_check: !args.no_converge_check, ..RunOptions::default() };
    let result = scenarios::run(&config, &opts)?;
    let path = config.resolved_output_path();
    emit_csv(&result, &path)?;
    report(&result, &path);
    Ok(if result.converged() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn parse_scan(text: &str) -> Result<Scan> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(Error::Config(format!("scan '{text}' is not lo:hi:step")));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("scan value '{s}' is not a number")));
    Ok(Scan { lo: num(lo)?, hi: num(hi)?, step: num(step)? })
}

fn tune(epsilon: f64, scan: Option<&str>) -> Result<ExitCode> {
    let scan = scan.map(parse_scan).transpose()?.unwrap_or_default();
    let mut system = ScenarioConfig::default().system;
    system.epsilon = epsilon;
    println!("{:.6}", tune_resonance(&system, scan)?);
    Ok(ExitCode::SUCCESS)
}

fn analytic(args: &AnalyticArgs) -> Result<ExitCode> {
    if !(args.t_max > 0.0 && args.dt > 0.0) {
        return Err(Error::InvalidArgument("t-max and dt must be positive".into()));
    }
    let p = AppendixParams {
        omega1: args.omega1,
        omega2: args.omega2,
        omega_wall: args.omega_wall,
        epsilon: args.epsilon,
        amplitude: args.amplitude,
    };
    p.validate()?;
    let n = (args.t_max / args.dt).round() as usize;
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * args.dt;
        let v = match args.formula {
            Formula::Xw => xw_closed_form(t, &p),
            Formula::X2 => x2_closed_form(t, &p)?,
            Formula::X2conv => x2_with_conversion(t, &p)?,
        };
        rows.push((t, v));
    }
    let sink: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(std::fs::File::create(path).map_err(|source| Error::Io { path: path.clone(), source })?),
        None => Box::new(std::io::stdout().lock()),
    };
    let csv_err = |source| Error::Csv { path: args.output.clone().unwrap_or_else(|| "-".into()), source };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["t", "value"]).map_err(csv_err)?;
    for (t, v) in rows {
        w.write_record([format!("{t:.16e}"), format!("{:.16e}", v + 0.0)]).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io { path: args.output.clone().unwrap_or_else(|| "-".into()), source })?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Tune { epsilon, scan } => tune(*epsilon, scan.as_deref()),
        Command::Analytic(args) => analytic(args),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
