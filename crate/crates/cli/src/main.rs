use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctlab::suites::Suite;
use ctlab_cli::spec::preset_names;
use ctlab_cli::{run_experiments, run_verify, CliError, ExperimentKind, ExperimentSpec, Format, RunOptions};

#[derive(Parser)]
#[command(name = "ctlab", version, about = "Limit sets and Cannon-Thurston map diagnostics for Kleinian groups")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArgs {
    /// Spec file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    spec: Option<PathBuf>,
    /// Shipped preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the seed in the spec file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `out_dir` from the spec file, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact formats, comma separated (default: csv,json,ppm).
    #[arg(long, value_delimiter = ',')]
    format: Vec<Format>,
}

impl SpecArgs {
    fn load(&self) -> Result<(ExperimentSpec, RunOptions), CliError> {
        let mut spec = match (&self.spec, &self.preset) {
            (Some(path), _) => ExperimentSpec::from_path(path)?,
            (None, Some(name)) => ExperimentSpec::preset(name)?,
            (None, None) => return Err(CliError::Spec("give --spec or --preset".into())),
        };
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        let out = self.out.clone().or_else(|| spec.out_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| "out".into());
        Ok((spec, RunOptions { out_dir: out, formats: self.format.clone() }))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Render the limit set.
    Render(SpecArgs),
    /// Compare CT maps along the sequence with the limit's; prints the verdict.
    Converge(SpecArgs),
    /// Run every experiment listed in the spec file.
    Run(SpecArgs),
    /// Run the property-verification suites.
    Verify {
        #[arg(default_value = "all", value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        format: Vec<Format>,
    },
    /// List the shipped presets, or print one.
    Presets { name: Option<String> },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: ctlab::Error| e.to_string())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Spec(format!("--jobs: {e}")))?;
    }
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Render(args) => {
            let (spec, opts) = args.load()?;
            run_experiments(&spec, Some(&[ExperimentKind::Render]), &opts, &mut stdout)?;
        }
        Command::Converge(args) => {
            let (spec, opts) = args.load()?;
            run_experiments(&spec, Some(&[ExperimentKind::CtConverge]), &opts, &mut stdout)?;
        }
        Command::Run(args) => {
            let (spec, opts) = args.load()?;
            run_experiments(&spec, None, &opts, &mut stdout)?;
        }
        Command::Verify { suite, seed, trials, out, format } => {
            let opts = out.map(|dir| RunOptions { out_dir: dir, formats: format });
            run_verify(suite, seed, trials, opts.as_ref(), &mut stdout)?;
        }
        Command::Presets { name: None } => {
            use std::io::Write;
            for n in preset_names() {
                writeln!(stdout, "{n}")?;
            }
        }
        Command::Presets { name: Some(name) } => {
            use std::io::Write;
            let text = ctlab_cli::spec::PRESETS
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, t)| *t)
                .ok_or_else(|| CliError::Spec(format!("unknown preset {name:?}")))?;
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
