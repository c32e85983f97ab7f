use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use lethargy::scenario::{
    build, bundled, emit, load_scenario, parse_spec, run, Expect, Format, LoadedScenario, Mode, Report, RunOptions,
    Verdict,
};
use lethargy::Error;

#[derive(Parser)]
#[command(name = "lethargy", version, about = "Build vectors with prescribed distances to a chain of subspaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the tail-sum condition (and the sampled step-span condition, if configured).
    Check {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the scenario's finite or prefix construction and re-measure every distance.
    Construct {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Build the truncations x_1..x_N and tabulate ||x_N - x_M||.
    Sequence {
        scenario: PathBuf,
        /// Overrides the scenario's n_max.
        #[arg(long)]
        n_max: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the bundled scenario library; exits 0 iff every verdict is the expected one.
    Demo {
        /// Write one JSON report per scenario into this directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Print every full report, not just the summary.
        #[arg(long)]
        verbose: bool,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Overrides the scenario tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Also write the JSON report to this path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall time in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Format {
        match f {
            OutputFormat::Text => Format::Text,
            OutputFormat::Json => Format::Json,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(input_error_code(&e))
        }
    }
}

fn input_error_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(inner) => Verdict::from_error(inner).exit_code() as u8,
        None => 2,
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<u8> {
    match cmd {
        Command::Check { scenario, common } => {
            let mut s = load(&scenario, &common)?;
            s.spec.mode = Mode::CheckOnly;
            finish_one(&s, &common)
        }
        Command::Construct { scenario, common } => {
            let s = load(&scenario, &common)?;
            if !matches!(s.spec.mode, Mode::Finite | Mode::Prefix) {
                anyhow::bail!(Error::Scenario(format!(
                    "{}: construct needs mode \"finite\" or \"prefix\"",
                    scenario.display()
                )));
            }
            finish_one(&s, &common)
        }
        Command::Sequence {
            scenario,
            n_max,
            common,
        } => {
            let mut s = load(&scenario, &common)?;
            let n = n_max
                .or(s.spec.n_max)
                .or(s.spec.n)
                .ok_or_else(|| Error::Scenario(format!("{}: sequence needs n_max", scenario.display())))?;
            s.spec.mode = Mode::Sequence;
            s.spec.n_max = Some(n);
            finish_one(&s, &common)
        }
        Command::Demo {
            output,
            verbose,
            format,
            timing,
        } => demo(output.as_deref(), verbose, format.into(), timing),
    }
}

fn load(path: &Path, common: &Common) -> anyhow::Result<LoadedScenario> {
    let mut s = load_scenario(path)?;
    if let Some(tol) = common.tol {
        s.set_tolerance(tol)?;
    }
    if let Some(seed) = common.seed {
        s.spec.seed = seed;
    }
    Ok(s)
}

fn write_json(path: &Path, report: &Report) -> anyhow::Result<()> {
    std::fs::write(path, report.to_json() + "\n").with_context(|| format!("writing {}", path.display()))
}

fn finish_one(s: &LoadedScenario, common: &Common) -> anyhow::Result<u8> {
    let report = run(s, &RunOptions { timing: common.timing });
    print!("{}", emit(&report, common.format.into()));
    if matches!(common.format, OutputFormat::Json) {
        println!();
    }
    if let Some(path) = &common.output {
        write_json(path, &report)?;
    }
    Ok(report.exit_code as u8)
}

fn expected_verdict(e: Expect) -> Verdict {
    match e {
        Expect::Pass => Verdict::Pass,
        Expect::Fail => Verdict::Fail,
        Expect::InputError => Verdict::InputError,
        Expect::SolverFailure => Verdict::SolverFailure,
    }
}

fn demo(output: Option<&Path>, verbose: bool, format: Format, timing: bool) -> anyhow::Result<u8> {
    if let Some(dir) = output {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut mismatches = 0;
    for (file, text) in bundled() {
        let spec = parse_spec(text).with_context(|| format!("bundled scenario {file}"))?;
        let expected = spec.expect.map(expected_verdict).unwrap_or(Verdict::Pass);
        let name = spec.name.clone();
        let (verdict, note) = match build(spec) {
            Ok(s) => {
                let report = run(&s, &RunOptions { timing });
                if verbose {
                    print!("{}", emit(&report, format));
                    println!();
                }
                if let Some(dir) = output {
                    write_json(&dir.join(format!("{name}.json")), &report)?;
                }
                (report.verdict, report.first_failure.unwrap_or_default())
            }
            Err(e) => (Verdict::from_error(&e), e.to_string()),
        };
        let matched = verdict == expected;
        if !matched {
            mismatches += 1;
        }
        println!(
            "{:<24} {:<16} expected {:<16} {}{}",
            name,
            format!("{verdict:?}"),
            format!("{expected:?}"),
            if matched { "ok" } else { "MISMATCH" },
            if note.is_empty() { String::new() } else { format!("  ({note})") }
        );
    }
    println!("{} scenario(s), {} mismatch(es)", bundled().len(), mismatches);
    Ok(if mismatches == 0 { 0 } else { 1 })
}
