use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cohsim::catalog::{self, ExperimentSpec, PointResult};
use cohsim::output::{channel_metrics, write_run};
use cohsim::report::{Format, RunReport};
use cohsim::scenario_io::{apply_override, load_scenario, split_assignment};
use cohsim::CliError;
use cohsim_core::engine::{RunResult, RunStatus};
use cohsim_core::scenario::Scenario;

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILED: u8 = 3;
const EXIT_ASSERTION: u8 = 4;
const EXIT_UNSTABLE: u8 = 5;

#[derive(Parser)]
#[command(name = "cohsim", version, about = "Phasor-domain transient simulation with complex-frequency coherency control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Human,
    Machine,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Human => Format::Human,
            FormatArg::Machine => Format::Machine,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Report format.
    #[arg(long, value_enum, default_value = "human")]
    format: FormatArg,
    /// Channels to render as an SVG plot (comma separated).
    #[arg(long, value_delimiter = ',')]
    plot: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (a built-in system or a file) and write CSV and metrics.
    Run {
        /// Built-in system name (kundur2a, ieee39) or scenario file path.
        source: String,
        /// Catalog experiment whose setup is applied; pick the sweep point with --set <axis>=<value>.
        #[arg(long)]
        experiment: Option<String>,
        /// `none` removes all events.
        #[arg(long)]
        event: Option<String>,
        /// Dotted-path override, e.g. solver.t_end=5 or devices.G1.coherency.share=0.5.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Integration step (s).
        #[arg(long = "solver.h", value_name = "SECONDS")]
        solver_h: Option<f64>,
        /// Seed of every noise source.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every point of a catalog experiment and check its expectations.
    Sweep {
        experiment: String,
        /// Write CSV and metrics for every point.
        #[arg(long)]
        write: bool,
        #[command(flatten)]
        common: Common,
    },
    /// List the catalog experiments.
    List {
        /// Only experiments on this system.
        #[arg(long)]
        system: Option<String>,
        #[arg(long, value_enum, default_value = "human")]
        format: FormatArg,
    },
    /// Run the whole catalog, writing CSV, metrics and plots for every point.
    Figures {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { source, experiment, event, set, solver_h, seed, common } => {
            cmd_run(&source, experiment.as_deref(), event.as_deref(), &set, solver_h, seed, &common)
        }
        Command::Sweep { experiment, write, common } => cmd_sweep(&experiment, write, &common),
        Command::List { system, format } => cmd_list(system.as_deref(), format.into()),
        Command::Figures { common } => cmd_figures(&common),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn find_experiment(name: &str) -> cohsim::Result<ExperimentSpec> {
    catalog::find(name).ok_or_else(|| {
        let names: Vec<&str> = catalog::catalog().iter().map(|e| e.name).collect();
        CliError::Config(format!("unknown experiment '{name}' (known: {})", names.join(", ")))
    })
}

fn status_code(status: &RunStatus) -> u8 {
    match status {
        RunStatus::Stable => 0,
        RunStatus::Unstable { .. } => EXIT_UNSTABLE,
        RunStatus::Failed { .. } => EXIT_FAILED,
    }
}

fn cmd_run(
    source: &str,
    experiment: Option<&str>,
    event: Option<&str>,
    set: &[String],
    solver_h: Option<f64>,
    seed: Option<u64>,
    common: &Common,
) -> cohsim::Result<u8> {
    let mut header = Vec::new();
    let mut overrides = Vec::new();
    for a in set {
        overrides.push(split_assignment(a)?);
    }
    let (mut scenario, spec) = match experiment {
        Some(name) => {
            let spec = find_experiment(name)?;
            if spec.system != source && source != spec.name {
                return Err(CliError::Config(format!("{} runs on {}, not {source}", spec.name, spec.system)));
            }
            let pos = overrides.iter().position(|(k, _)| k.eq_ignore_ascii_case(spec.axis));
            let value = match pos {
                Some(p) => spec.parse_value(&overrides.remove(p).1)?,
                None => spec.values[0],
            };
            header.push(format!("experiment: {} {}", spec.name, spec.label(&value)));
            (spec.scenario(&value)?, Some(spec))
        }
        None => (load_scenario(source)?, None),
    };
    for (k, v) in &overrides {
        scenario = apply_override(&scenario, k, v)?;
        header.push(format!("override {k} = {v}"));
    }
    if let Some(h) = solver_h {
        scenario = apply_override(&scenario, "solver.h", &h.to_string())?;
        header.push(format!("override solver.h = {h}"));
    }
    if let Some(seed) = seed {
        for m in &mut scenario.measurements {
            if let Some(n) = &mut m.noise {
                n.seed = seed;
            }
        }
        header.push(format!("seed = {seed}"));
    }
    match event {
        Some("none") => {
            scenario.events.clear();
            header.push("events removed".into());
        }
        Some(other) => return Err(CliError::Config(format!("--event accepts only 'none', got '{other}'"))),
        None => {}
    }

    let result = cohsim_core::engine::run(&scenario)?;
    let (channels, t_event) = metric_setup(&scenario, spec.as_ref(), &result);
    let metrics = channel_metrics(&result, &channels, t_event);
    let name = scenario.system.name.clone();
    let files = write_run(&common.out, &name, &result, &metrics, &header, &common.plot)?;
    let text = cohsim::output::metrics_text(&name, &result, &metrics, &header);
    match common.format {
        FormatArg::Human => {
            print!("{text}");
            println!("wrote {}", files.csv.display());
            println!("wrote {}", files.metrics.display());
            if let Some(svg) = &files.svg {
                println!("wrote {}", svg.display());
            }
        }
        FormatArg::Machine => {
            println!("status\t{}", result.status.label());
            println!("csv\t{}", files.csv.display());
            println!("metrics\t{}", files.metrics.display());
        }
    }
    Ok(status_code(&result.status))
}

/// Channels summarized for a run and the time metrics are measured from.
fn metric_setup(s: &Scenario, spec: Option<&ExperimentSpec>, r: &RunResult) -> (Vec<String>, f64) {
    if let Some(spec) = spec {
        if !s.events.is_empty() || spec.event_time == 0.0 {
            return (spec.metric_channels.iter().map(|c| c.to_string()).collect(), spec.event_time);
        }
    }
    let mut channels = vec!["coi.freq".to_string()];
    channels.extend(
        r.series
            .channels()
            .iter()
            .filter(|c| c.name.ends_with(".speed"))
            .map(|c| c.name.clone()),
    );
    let t_event = s.events.iter().map(|e| e.time()).fold(f64::INFINITY, f64::min);
    (channels, if t_event.is_finite() { t_event } else { 0.0 })
}

fn write_points(dir: &Path, spec: &ExperimentSpec, points: &[PointResult], plot: &[String], report: &mut RunReport) -> cohsim::Result<()> {
    for (p, row) in points.iter().zip(report.rows.iter_mut()) {
        if let Ok(r) = &p.run {
            let name = format!("{}_{}", spec.name, p.label).replace(['=', '.'], "_");
            let header = vec![format!("experiment: {} {}", spec.name, p.label)];
            let files = write_run(dir, &name, r, &p.metrics, &header, plot)?;
            row.files.push(files.csv);
            row.files.push(files.metrics);
            row.files.extend(files.svg);
        }
    }
    Ok(())
}

fn sweep_code(report: &RunReport) -> u8 {
    if report.any_failed_run() {
        EXIT_FAILED
    } else if !report.all_passed() {
        EXIT_ASSERTION
    } else {
        0
    }
}

fn cmd_sweep(name: &str, write: bool, common: &Common) -> cohsim::Result<u8> {
    let spec = find_experiment(name)?;
    let (points, checks) = catalog::sweep(&spec)?;
    let mut report = RunReport::new(&spec, &points, checks);
    if write {
        write_points(&common.out, &spec, &points, &common.plot, &mut report)?;
    }
    print!("{}", report.render(common.format.into()));
    Ok(sweep_code(&report))
}

fn cmd_list(system: Option<&str>, format: Format) -> cohsim::Result<u8> {
    let entries: Vec<ExperimentSpec> = catalog::catalog()
        .into_iter()
        .filter(|e| system.is_none_or(|s| e.system == s))
        .collect();
    for e in &entries {
        match format {
            Format::Machine => println!("{}", e.name),
            Format::Human => {
                let values: Vec<String> = e.values.iter().map(|v| v.to_string()).collect();
                println!("{:<14} {:<9} {} in {{{}}}", e.name, e.system, e.axis, values.join(", "));
                println!("               {}", e.description);
            }
        }
    }
    Ok(0)
}

fn cmd_figures(common: &Common) -> cohsim::Result<u8> {
    let mut worst = 0;
    for spec in catalog::catalog() {
        let (points, checks) = catalog::sweep(&spec)?;
        let mut report = RunReport::new(&spec, &points, checks);
        let plot: Vec<String> = if common.plot.is_empty() {
            spec.metric_channels.iter().map(|c| c.to_string()).collect()
        } else {
            common.plot.clone()
        };
        write_points(&common.out, &spec, &points, &plot, &mut report)?;
        print!("{}", report.render(common.format.into()));
        let code = sweep_code(&report);
        if code == EXIT_FAILED || worst == 0 {
            worst = worst.max(code);
        }
    }
    Ok(worst)
}
