// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fastoqc_cli::config::OutputFormat;
use fastoqc_cli::plot::{self, PlotKind};
use fastoqc_cli::runner::{self, RunOptions};
use fastoqc_cli::{diagnostic, exit_code};
use fastoqc_core::pulses::{self, BeamGeometry, EmitterRadiative, WaveNumberConvention};
use fastoqc_core::species::{self, SpeciesRegistry};
use fastoqc_core::{Error, Result};

#[derive(Parser)]
#[command(name = "fastoqc", version, about = "Fast optical-qubit scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Angular,
    Spectroscopic,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write outputs plus manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: config [output] dir, then $FASTOQC_OUT_DIR/<stem>, then out/<stem>).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// π-pulse intensity, energy and peak field for one transition.
    PulseCalc {
        /// Carrier wavenumber, cm⁻¹.
        #[arg(long)]
        carrier_cm: f64,
        /// Radiative lifetime 1/γ₀, s.
        #[arg(long)]
        lifetime: f64,
        /// Spectral width Γ_L, 1/s.
        #[arg(long)]
        width: f64,
        /// Beam cross-section, cm².
        #[arg(long, default_value_t = 1e-7)]
        area: f64,
        #[arg(long, default_value_t = 1.0)]
        index: f64,
        #[arg(long, value_enum, default_value = "angular")]
        convention: Convention,
        /// Extra intensities (W/cm²) for the field table.
        #[arg(long = "field", num_args = 1..)]
        field: Vec<f64>,
    },
    /// Species registry commands.
    Species {
        #[command(subcommand)]
        command: SpeciesCommand,
    },
    /// Long-format CSV plot series from a results directory.
    EmitPlot {
        /// Results directory of a previous run.
        #[arg(long)]
        input: PathBuf,
        /// fidelity-vs-shift, population-vs-time or spectrum.
        #[arg(long)]
        kind: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SpeciesCommand {
    /// List built-in (and optionally user-supplied) species.
    List {
        /// Additional species data file (TOML).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

fn io(e: std::io::Error, what: &str) -> Error {
    Error::Resource(format!("{what}: {e}"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out, jobs, format } => {
            if let Some(j) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(j.max(1))
                    .build_global()
                    .map_err(|e| Error::Resource(e.to_string()))?;
            }
            let plan = runner::load_plan(&config, seed)?;
            let out_dir = runner::resolve_out_dir(out.as_deref(), &plan, &config);
            let format = format.map(OutputFormat::from).or(plan.config.output.format).unwrap_or_default();
            let res = runner::execute(&plan, &RunOptions { out_dir, format })?;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {} files to {}", res.files.len() + 1, res.out_dir.display());
        }
        Command::Validate { config, seed } => {
            let plan = runner::load_plan(&config, seed)?;
            for w in &plan.warnings {
                eprintln!("warning: {w}");
            }
            println!("ok");
        }
        Command::PulseCalc { carrier_cm, lifetime, width, area, index, convention, field } => {
            let convention = match convention {
                Convention::Angular => WaveNumberConvention::Angular,
                Convention::Spectroscopic => WaveNumberConvention::Spectroscopic,
            };
            let budget =
                pulses::pulse_budget(carrier_cm, EmitterRadiative::new(lifetime)?, width, BeamGeometry::new(area, index)?, convention)?;
            let table = field
                .iter()
                .map(|&i| Ok(serde_json::json!({ "intensity_w_cm2": i, "peak_field_v_cm": pulses::peak_field(i)? })))
                .collect::<Result<Vec<_>>>()?;
            let v = serde_json::json!({ "budget": budget, "field_table": table });
            println!("{}", serde_json::to_string_pretty(&v).expect("plain JSON values"));
        }
        Command::Species { command: SpeciesCommand::List { data, format } } => {
            let registry = match data {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                    species::load_registry(&text)?
                }
                None => SpeciesRegistry::builtin(),
            };
            match format {
                Format::Json => {
                    let all: Vec<_> = registry.iter().collect();
                    println!("{}", serde_json::to_string_pretty(&all).expect("plain JSON values"));
                }
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(std::io::stdout());
                    let err = |e: csv::Error| Error::Resource(e.to_string());
                    w.write_record(["species", "host", "term", "energy_cm", "lifetime_s", "u2_diag_sq", "role"]).map_err(err)?;
                    for s in registry.iter() {
                        for l in &s.levels {
                            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                            w.write_record([
                                s.name.clone(),
                                s.host.clone(),
                                l.term.clone(),
                                l.energy_cm.to_string(),
                                opt(l.lifetime_s),
                                opt(l.u2_diag_sq),
                                format!("{:?}", l.role).to_lowercase(),
                            ])
                            .map_err(err)?;
                        }
                    }
                    w.flush().map_err(|e| io(e, "stdout"))?;
                }
            }
        }
        Command::EmitPlot { input, kind, out } => {
            let kind: PlotKind = kind.parse()?;
            let rows = plot::plot_series(&input, kind)?;
            let bytes = plot::to_csv(&rows)?;
            match out {
                Some(p) => std::fs::write(&p, bytes).map_err(|e| io(e, &p.display().to_string()))?,
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&bytes).map_err(|e| io(e, "stdout"))?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", diagnostic(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
