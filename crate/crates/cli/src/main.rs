use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::FalseyValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use spinq_core::constants::{energy_to_frequency, MICRO_EV};
use spinq_core::device::{larmor_frequency, polarization_condition_met, thermal_up_probability, zeeman_splitting};
use spinq_core::esr::{cw_saturation_probability, min_observable_f1, rabi_frequency};
use spinq_core::exchange::{swap_demo_experiment_with, swap_time, SwapDemoOptions};
use spinq_core::harness::{
    error_per_gate_budget, records_csv, run_protocol_with, run_sweep, sweep_csv, CompiledProtocol, ExperimentConfig,
    ProtocolStep, RunOptions, RunResult, SweepSpec,
};
use spinq_core::harness::sweep::sweep_point_config;
use spinq_core::microwave::{
    cavity_power_estimate, near_field_check_with, ohmic_power, required_current, thermal_budget_check,
    total_wire_power, wire_field, ThermalBudget, WireGeometry, CALIBRATED_WIRE_RESISTANCE,
    DEFAULT_LOSS_OVERHEAD, DEFAULT_NEAR_FIELD_RATIO, GAAS_SURFACE_PERMITTIVITY,
};
use spinq_core::readout::{analytic_fidelity, DetectorModel, ReadoutConfig};
use spinq_core::units::{parse_quantity, Dimension};
use spinq_core::{Error, Qubit};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "spinq", version, about = "Spin-qubit initialization, control and readout simulator")]
struct Cli {
    /// CI mode: stochastic commands refuse to run without --seed.
    #[arg(long, global = true, env = "CI", value_parser = FalseyValueParser::new())]
    ci: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol in a config file and write a RunResult.
    Run(RunArgs),
    /// Run the config's sweep (or one given on the command line) and write a CSV.
    Sweep(SweepArgs),
    /// Before/after marginals of the two-qubit SWAP demonstration.
    DemoSwap(DemoArgs),
    /// Closed-form calculators.
    Calc {
        /// Print JSON instead of a table.
        #[arg(long, global = true)]
        json: bool,
        #[command(subcommand)]
        calc: Calc,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Master seed; overrides the config's run.seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for result files.
    #[arg(long, env = "SPINQ_OUTPUT_DIR", default_value = "spinq-output")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Override run.shots.
    #[arg(long)]
    shots: Option<u64>,
    /// Also write shots.csv with one row per measurement.
    #[arg(long)]
    per_shot_csv: bool,
    /// Print the RunResult JSON instead of a summary table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    config: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Parameter path, e.g. `protocol[2].esr_burst.duration`.
    #[arg(long, requires = "values")]
    parameter: Option<String>,
    /// Comma-separated values, e.g. `0ns,20ns,40ns`.
    #[arg(long, value_delimiter = ',', requires = "parameter")]
    values: Option<Vec<String>>,
    /// Shots per point.
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReadoutChoice {
    Ideal,
    Reference,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 0.5)]
    p_up_q2: f64,
    #[arg(long, default_value_t = 10_000)]
    shots: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "ideal")]
    readout: ReadoutChoice,
    /// Exchange coupling as an energy or frequency.
    #[arg(long = "j", default_value = "20GHz", value_parser = energy_or_frequency)]
    j: f64,
    #[arg(long, default_value_t = 1)]
    n_swaps: u32,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Calc {
    /// Zeeman splitting and Larmor frequency.
    Zeeman {
        #[arg(long, default_value_t = 0.44)]
        g: f64,
        #[arg(long, value_parser = field)]
        field: f64,
    },
    /// Thermal spin populations and the 5 k_B T condition.
    Thermal {
        #[arg(long, default_value_t = 0.44)]
        g: f64,
        #[arg(long, value_parser = field)]
        field: f64,
        #[arg(long, value_parser = temperature)]
        temperature: f64,
    },
    /// Rabi frequency and π-pulse length for a drive amplitude.
    Rabi {
        #[arg(long, default_value_t = 0.44)]
        g: f64,
        #[arg(long, value_parser = field)]
        b1: f64,
    },
    /// Steady-state Pr[↑] under continuous resonant drive.
    CwSaturation {
        #[arg(long, value_parser = frequency)]
        f1: f64,
        #[arg(long, value_parser = time)]
        t1: f64,
        #[arg(long, value_parser = time)]
        t2: f64,
    },
    /// Smallest Rabi frequency giving a visible saturation dip.
    MinF1 {
        #[arg(long, value_parser = time)]
        t1: f64,
        #[arg(long, value_parser = time)]
        t2: f64,
    },
    /// Near-field B1 of a straight wire.
    WireField {
        #[arg(long, value_parser = current)]
        current: f64,
        #[arg(long, value_parser = length)]
        distance: f64,
        #[arg(long, default_value_t = 1.0)]
        mu_r: f64,
    },
    /// Wire current for a target B1.
    RequiredCurrent {
        #[arg(long, value_parser = field)]
        b1: f64,
        #[arg(long, value_parser = length)]
        distance: f64,
        #[arg(long, default_value_t = 1.0)]
        mu_r: f64,
    },
    /// Ohmic and total loss of the drive wire.
    OhmicPower {
        #[arg(long, value_parser = current)]
        current: f64,
        #[arg(long, value_parser = resistance, default_value_t = CALIBRATED_WIRE_RESISTANCE)]
        resistance: f64,
        #[arg(long, default_value_t = DEFAULT_LOSS_OVERHEAD)]
        overhead: f64,
    },
    /// Order-of-magnitude cavity dissipation.
    CavityPower {
        #[arg(long, value_parser = field)]
        b1: f64,
    },
    /// Wavelength and near-field criterion.
    NearField {
        #[arg(long, value_parser = length)]
        distance: f64,
        #[arg(long, value_parser = frequency)]
        frequency: f64,
        #[arg(long, default_value_t = GAAS_SURFACE_PERMITTIVITY)]
        permittivity: f64,
        #[arg(long, default_value_t = DEFAULT_NEAR_FIELD_RATIO)]
        threshold: f64,
    },
    /// Dissipation against the refrigerator's cooling power.
    ThermalBudget {
        #[arg(long, value_parser = power)]
        power: f64,
        #[arg(long, value_parser = power)]
        available: f64,
        #[arg(long, default_value_t = 1.0)]
        duty_cycle: f64,
    },
    /// Exchange pulse length for a SWAP.
    SwapTime {
        #[arg(long = "j", value_parser = energy_or_frequency)]
        j: f64,
    },
    /// First-order dephasing error per gate.
    ErrorBudget {
        #[arg(long, value_parser = time)]
        gate: f64,
        #[arg(long, value_parser = time)]
        t2: f64,
    },
    /// Closed-form fidelities of rate-selective readout.
    ReadoutFidelity {
        #[arg(long, value_parser = frequency)]
        gamma_up: f64,
        #[arg(long, value_parser = frequency)]
        gamma_down: f64,
        #[arg(long, value_parser = time)]
        window: f64,
        /// Detector noise of the window average for a 1 μs window.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
}

fn quantity(dim: Dimension) -> impl Fn(&str) -> Result<f64, String> {
    move |s| parse_quantity(s, dim).map_err(|e| e.to_string())
}

fn field(s: &str) -> Result<f64, String> {
    quantity(Dimension::Field)(s)
}
fn temperature(s: &str) -> Result<f64, String> {
    quantity(Dimension::Temperature)(s)
}
fn frequency(s: &str) -> Result<f64, String> {
    quantity(Dimension::Frequency)(s)
}
fn time(s: &str) -> Result<f64, String> {
    quantity(Dimension::Time)(s)
}
fn current(s: &str) -> Result<f64, String> {
    quantity(Dimension::Current)(s)
}
fn length(s: &str) -> Result<f64, String> {
    quantity(Dimension::Length)(s)
}
fn resistance(s: &str) -> Result<f64, String> {
    quantity(Dimension::Resistance)(s)
}
fn power(s: &str) -> Result<f64, String> {
    quantity(Dimension::Power)(s)
}
fn energy_or_frequency(s: &str) -> Result<f64, String> {
    quantity(Dimension::EnergyOrFrequency)(s)
}

enum Failure {
    Core(Error),
    Io(String),
    /// Usage problem detected after argument parsing.
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) if e.is_numeric() => EXIT_NUMERIC,
            Failure::Core(_) | Failure::Usage(_) => EXIT_CONFIG,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn report(&self) -> ExitCode {
        match self {
            Failure::Core(e) => eprintln!("error: {e}"),
            Failure::Io(msg) | Failure::Usage(msg) => eprintln!("error: {msg}"),
        }
        ExitCode::from(self.exit_code())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args, cli.ci),
        Command::Sweep(args) => cmd_sweep(args, cli.ci),
        Command::DemoSwap(args) => cmd_demo(args, cli.ci),
        Command::Calc { json, calc } => cmd_calc(calc, json),
        Command::Validate { config } => cmd_validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}

fn read_config(path: &Path) -> Result<(Value, ExperimentConfig), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
    let config = ExperimentConfig::from_value(raw.clone())?;
    Ok((raw, config))
}

fn resolve_seed(flag: Option<u64>, config: Option<u64>, ci: bool) -> Result<u64, Failure> {
    if ci && flag.is_none() {
        return Err(Failure::Usage("--seed is required in CI mode".into()));
    }
    if let Some(seed) = flag.or(config) {
        return Ok(seed);
    }
    let seed = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    eprintln!("no seed given; using {seed}");
    Ok(seed)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn print_warnings(config: &ExperimentConfig) {
    for w in config.device.warnings() {
        eprintln!("warning: {w}");
    }
}

fn cmd_run(args: RunArgs, ci: bool) -> Outcome {
    let (_, config) = read_config(&args.config)?;
    let steps = config.validate()?;
    print_warnings(&config);
    let seed = resolve_seed(args.common.seed, config.run.seed, ci)?;
    let shots = args.shots.unwrap_or(config.run.shots);
    let options = RunOptions {
        workers: args.common.workers.or(config.run.workers),
        collect_records: args.per_shot_csv,
    };
    let (result, records) = run_protocol_with(&steps, &config.device, shots, seed, &options)?;
    let json = result.to_json();
    let out = write_file(&args.common.output_dir, "run_result.json", &json)?;
    eprintln!("wrote {}", out.display());
    if args.per_shot_csv {
        let out = write_file(&args.common.output_dir, "shots.csv", &records_csv(&records))?;
        eprintln!("wrote {}", out.display());
    }
    if args.json {
        println!("{json}");
    } else {
        print_run_table(&result);
    }
    Ok(())
}

fn print_run_table(result: &RunResult) {
    println!("shots {}  seed {}", result.shots, result.metadata.master_seed);
    println!("{:<6} {:<6} {:>10} {:>22}", "step", "qubit", "Pr[up]", "95% CI");
    for m in &result.measurements {
        println!(
            "{:<6} {:<6} {:>10.5} {:>22}",
            m.step,
            format!("q{}", m.qubit.label()),
            m.up.p,
            format!("[{:.5}, {:.5}]", m.up.ci_low, m.up.ci_high)
        );
    }
    println!("outcome counts:");
    for (k, v) in &result.outcome_counts {
        println!("  {k:<24} {v}");
    }
}

fn cmd_sweep(args: SweepArgs, ci: bool) -> Outcome {
    let (raw, config) = read_config(&args.config)?;
    print_warnings(&config);
    let mut spec = match (args.parameter, args.values, config.sweep.clone()) {
        (Some(parameter), Some(values), base) => SweepSpec {
            parameter,
            values: values.into_iter().map(Value::String).collect(),
            shots: base.as_ref().and_then(|s| s.shots),
            observe: base.map(|s| s.observe).unwrap_or_default(),
        },
        (_, _, Some(spec)) => spec,
        _ => return Err(Error::Config("no sweep in the config and no --parameter/--values given".into()).into()),
    };
    if args.shots.is_some() {
        spec.shots = args.shots;
    }
    let seed = resolve_seed(args.common.seed, config.run.seed, ci)?;
    let options = RunOptions {
        workers: args.common.workers.or(config.run.workers),
        collect_records: false,
    };
    let points = run_sweep(&raw, &spec, seed, &options)?;
    let csv = sweep_csv(&spec.parameter, &points);
    let out = write_file(&args.common.output_dir, "sweep.csv", &csv)?;
    eprintln!("wrote {}", out.display());
    print!("{csv}");
    Ok(())
}

fn cmd_demo(args: DemoArgs, ci: bool) -> Outcome {
    let seed = resolve_seed(args.seed, None, ci)?;
    let readout = match args.readout {
        ReadoutChoice::Ideal => ReadoutConfig::ideal(),
        ReadoutChoice::Reference => ReadoutConfig::reference_rate_selective(),
    };
    let options = SwapDemoOptions {
        j: args.j,
        n_swaps: args.n_swaps,
        run: RunOptions {
            workers: args.workers,
            collect_records: false,
        },
        ..SwapDemoOptions::default()
    };
    let demo = swap_demo_experiment_with(args.p_up_q2, args.shots, readout, seed, &options)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&demo).expect("serializable"));
        return Ok(());
    }
    println!("SWAP demo: q1 = |up>, q2 mixed with Pr[up] = {}, {} shots, seed {seed}", args.p_up_q2, args.shots);
    println!("{:<8} {:>26} {:>26}", "", "q1 Pr[up] (95% CI)", "q2 Pr[up] (95% CI)");
    for (label, r) in [("before", &demo.before), ("after", &demo.after)] {
        let cell = |q: Qubit| {
            let m = r.measurement(q, 0).expect("both qubits are measured");
            format!("{:.4} [{:.4}, {:.4}]", m.up.p, m.up.ci_low, m.up.ci_high)
        };
        println!("{:<8} {:>26} {:>26}", label, cell(Qubit::First), cell(Qubit::Second));
    }
    Ok(())
}

fn cmd_validate(path: &Path) -> Outcome {
    let (raw, config) = read_config(path)?;
    let steps = config.validate()?;
    CompiledProtocol::new(&steps, &config.device)?;
    print_warnings(&config);
    let measures = steps.iter().filter(|s| matches!(s, ProtocolStep::Measure { .. })).count();
    println!("ok: {} steps, {} measurements", steps.len(), measures);
    if let Some(sweep) = &config.sweep {
        if sweep.values.is_empty() {
            return Err(Error::Config("sweep values must be non-empty".into()).into());
        }
        for v in &sweep.values {
            sweep_point_config(&raw, &sweep.parameter, v)?.validate()?;
        }
        println!("sweep: {} over {} values", sweep.parameter, sweep.values.len());
    }
    Ok(())
}

struct Table {
    name: &'static str,
    rows: Vec<(&'static str, Value, &'static str)>,
}

impl Table {
    fn new(name: &'static str) -> Self {
        Table { name, rows: Vec::new() }
    }

    fn row(mut self, key: &'static str, value: impl Into<Value>, unit: &'static str) -> Self {
        self.rows.push((key, value.into(), unit));
        self
    }

    fn print(&self, json: bool) {
        if json {
            let mut results = Map::new();
            for (k, v, _) in &self.rows {
                results.insert((*k).to_string(), v.clone());
            }
            let units: Map<String, Value> = self
                .rows
                .iter()
                .filter(|(_, _, u)| !u.is_empty())
                .map(|(k, _, u)| ((*k).to_string(), json!(u)))
                .collect();
            let doc = json!({ "calculator": self.name, "results": results, "units": units });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        } else {
            for (k, v, u) in &self.rows {
                let shown = match v {
                    Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), |x| format!("{x:.6e}")),
                    other => other.to_string(),
                };
                println!("{k:<24} {shown:>16} {u}");
            }
        }
    }
}

fn wire(distance: f64, mu_r: f64, resistance: f64) -> Result<WireGeometry, Failure> {
    let g = WireGeometry {
        distance_to_dot: distance,
        relative_permeability: mu_r,
        resistance,
    };
    g.validate()?;
    Ok(g)
}

fn cmd_calc(calc: Calc, json: bool) -> Outcome {
    let table = match calc {
        Calc::Zeeman { g, field } => {
            let e = zeeman_splitting(g, field)?;
            Table::new("zeeman")
                .row("zeeman_splitting", e, "eV")
                .row("zeeman_splitting_ueV", e / MICRO_EV, "μeV")
                .row("larmor_frequency", larmor_frequency(g, field)?, "Hz")
        }
        Calc::Thermal { g, field, temperature } => {
            let p = thermal_up_probability(g, field, temperature)?;
            Table::new("thermal")
                .row("p_up", p, "")
                .row("p_down", 1.0 - p, "")
                .row("polarization_condition_met", polarization_condition_met(g, field, temperature)?, "")
        }
        Calc::Rabi { g, b1 } => {
            let f1 = rabi_frequency(g, b1)?;
            let pi = if f1 > 0.0 { 0.5 / f1 } else { f64::INFINITY };
            Table::new("rabi").row("rabi_frequency", f1, "Hz").row("pi_pulse_time", finite(pi), "s")
        }
        Calc::CwSaturation { f1, t1, t2 } => {
            Table::new("cw_saturation").row("p_up", cw_saturation_probability(f1, t1, t2)?, "")
        }
        Calc::MinF1 { t1, t2 } => Table::new("min_f1").row("min_observable_f1", min_observable_f1(t1, t2)?, "Hz"),
        Calc::WireField { current, distance, mu_r } => {
            Table::new("wire_field").row("b1", wire_field(current, &wire(distance, mu_r, 0.0)?)?, "T")
        }
        Calc::RequiredCurrent { b1, distance, mu_r } => {
            Table::new("required_current").row("current", required_current(b1, &wire(distance, mu_r, 0.0)?)?, "A")
        }
        Calc::OhmicPower {
            current,
            resistance,
            overhead,
        } => {
            let g = wire(1.0, 1.0, resistance)?;
            Table::new("ohmic_power")
                .row("ohmic_power", ohmic_power(current, &g)?, "W")
                .row("total_power", total_wire_power(current, &g, overhead)?, "W")
        }
        Calc::CavityPower { b1 } => Table::new("cavity_power").row("power", cavity_power_estimate(b1)?, "W"),
        Calc::NearField {
            distance,
            frequency,
            permittivity,
            threshold,
        } => {
            let r = near_field_check_with(&wire(distance, 1.0, 0.0)?, frequency, permittivity, threshold)?;
            Table::new("near_field")
                .row("wavelength", r.wavelength, "m")
                .row("ratio", r.ratio, "")
                .row("threshold", r.threshold, "")
                .row("passed", r.passed, "")
        }
        Calc::ThermalBudget {
            power,
            available,
            duty_cycle,
        } => {
            let r = thermal_budget_check(power, &ThermalBudget::new(available, duty_cycle)?)?;
            Table::new("thermal_budget")
                .row("effective_power", r.effective_power, "W")
                .row("available_power", r.available_power, "W")
                .row("margin", finite(r.margin), "")
                .row("passed", r.passed, "")
        }
        Calc::SwapTime { j } => Table::new("swap_time")
            .row("swap_time", swap_time(j)?, "s")
            .row("j_over_h", energy_to_frequency(j), "Hz"),
        Calc::ErrorBudget { gate, t2 } => {
            Table::new("error_budget").row("error_per_gate", error_per_gate_budget(gate, t2)?, "")
        }
        Calc::ReadoutFidelity {
            gamma_up,
            gamma_down,
            window,
            noise,
        } => {
            let config = ReadoutConfig::rate_selective(gamma_up, gamma_down, window)?;
            let (up, down) = analytic_fidelity(&config, &DetectorModel::with_noise(noise))?;
            Table::new("readout_fidelity").row("fidelity_up", up, "").row("fidelity_down", down, "")
        }
    };
    table.print(json);
    Ok(())
}

/// JSON has no infinity; report it as null.
fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}
