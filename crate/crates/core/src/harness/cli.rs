//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::output;
use super::{run_comparison, run_scenarios, ComparisonReport, ScenarioSpec, DEFAULT_LOAD_FACTOR, SCENARIO_GENERATION_SETTINGS};
use crate::cpnsga::run_cp_nsga;
use crate::error::{Error, Result};
use crate::instance::{self, generate_instance, generate_preferences, Instance};
use crate::moea::{run_nsga2, Algorithm, EvolutionConfig, DEFAULT_P_CROSSOVER};
use crate::scp::ScpStructure;

#[derive(Debug, Parser)]
#[command(name = "cpvmp", version, about = "Multiobjective VM placement with NSGA-II and CP-NSGA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random instance and preference file.
    Generate(GenerateArgs),
    /// Run one algorithm on one instance.
    Run(RunArgs),
    /// Compare NSGA-II and CP-NSGA over generation settings and paired seeds.
    Compare(CompareArgs),
    /// Run the built-in PRF1 (3 preferences) and PRF2 (6 preferences) scenarios.
    PaperScenarios(ScenarioArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Nsga2,
    Cpnsga,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Nsga2 => Algorithm::Nsga2,
            AlgorithmArg::Cpnsga => Algorithm::Cpnsga,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 8)]
    vms: usize,
    #[arg(long, default_value_t = 6)]
    pms: usize,
    /// Number of annotated VMs (VMs 0..N get preferences).
    #[arg(long, default_value_t = 0)]
    prefs: usize,
    #[arg(long, default_value_t = DEFAULT_LOAD_FACTOR)]
    load_factor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 100)]
    pop_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_P_CROSSOVER)]
    p_crossover: f64,
    /// Per-gene mutation probability [default: 1/number of VMs].
    #[arg(long)]
    p_mutation: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    prefs: Option<PathBuf>,
    #[arg(long, value_enum)]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 16)]
    generations: usize,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Instance file; generated from --vms/--pms/--load-factor/--seed when omitted.
    #[arg(long, requires = "prefs")]
    instance: Option<PathBuf>,
    #[arg(long, requires = "instance")]
    prefs: Option<PathBuf>,
    #[arg(long, default_value = "custom")]
    name: String,
    #[arg(long, default_value_t = 8)]
    vms: usize,
    #[arg(long, default_value_t = 6)]
    pms: usize,
    /// Annotated VM count when generating.
    #[arg(long, default_value_t = 3)]
    pref_count: usize,
    #[arg(long, default_value_t = DEFAULT_LOAD_FACTOR)]
    load_factor: f64,
    /// Comma-separated generation counts.
    #[arg(long, value_delimiter = ',', default_values_t = SCENARIO_GENERATION_SETTINGS)]
    generations: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long, default_value_t = DEFAULT_LOAD_FACTOR)]
    load_factor: f64,
    #[arg(long, value_delimiter = ',', default_values_t = SCENARIO_GENERATION_SETTINGS)]
    generations: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[command(flatten)]
    search: SearchArgs,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
        Command::PaperScenarios(args) => builtin_scenarios(args),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    if args.prefs > args.vms {
        return Err(Error::argument(format!("{} preferences requested for {} vms", args.prefs, args.vms)));
    }
    let inst = generate_instance(args.vms, args.pms, args.load_factor, args.seed)?;
    let annotated: Vec<usize> = (0..args.prefs).collect();
    let scp = generate_preferences(&inst, &annotated, args.seed.wrapping_add(1))?;
    fs::create_dir_all(&args.out)?;
    instance::save_instance(&inst, BufWriter::new(File::create(args.out.join("instance.json"))?))?;
    instance::save_preferences(&scp, BufWriter::new(File::create(args.out.join("preferences.json"))?))?;
    for w in inst.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn load_problem(instance_path: &Path, prefs_path: Option<&Path>) -> Result<(Instance, ScpStructure)> {
    let inst = instance::load_instance(BufReader::new(File::open(instance_path)?))?;
    let scp = match prefs_path {
        Some(p) => instance::load_preferences(BufReader::new(File::open(p)?), &inst)?,
        None => ScpStructure::empty(inst.m_pms()),
    };
    Ok((inst, scp))
}

fn run(args: RunArgs) -> Result<()> {
    let (inst, scp) = load_problem(&args.instance, args.prefs.as_deref())?;
    let s = &args.search;
    let cfg = EvolutionConfig {
        pop_size: s.pop_size,
        generations: args.generations,
        p_crossover: s.p_crossover,
        p_mutation_per_gene: s.p_mutation,
        seed: s.seed,
    };
    let algorithm: Algorithm = args.algorithm.into();
    let logged = (!scp.is_empty()).then_some(&scp);
    let record = match algorithm {
        Algorithm::Nsga2 => run_nsga2(&inst, &cfg, logged)?,
        Algorithm::Cpnsga => run_cp_nsga(&inst, &cfg, &scp)?,
    };

    let run_id = format!("{}-seed{}-gen{}", algorithm.name(), cfg.seed, cfg.generations);
    let rows = output::front_rows(&run_id, &record, logged);
    fs::create_dir_all(&s.out)?;
    match s.format {
        Format::Csv => write_file(&s.out, "front.csv", &output::front_csv(&rows))?,
        Format::Json => write_file(&s.out, "front.json", &output::front_json(&rows))?,
    }
    write_file(&s.out, "metrics.json", &output::run_metrics_json(&run_id, &cfg, &record))?;
    write_file(&s.out, "timings.csv", &output::run_timings_csv(&record))?;
    Ok(())
}

fn write_report(out: &Path, format: Format, report: &ComparisonReport) -> Result<()> {
    fs::create_dir_all(out)?;
    match format {
        Format::Csv => write_file(out, "comparison.csv", &output::comparison_csv(report))?,
        Format::Json => write_file(out, "comparison.json", &output::comparison_json(report))?,
    }
    write_file(out, "metrics.json", &output::comparison_metrics_json(report))?;
    write_file(out, "timings.csv", &output::timings_csv(report))?;
    Ok(())
}

fn spec_from(name: String, n_vms: usize, m_pms: usize, pref_count: usize, load_factor: f64, generations: Vec<usize>, repetitions: usize, s: &SearchArgs) -> ScenarioSpec {
    ScenarioSpec {
        name,
        n_vms,
        m_pms,
        pref_count,
        pop_size: s.pop_size,
        generation_settings: generations,
        repetitions,
        base_seed: s.seed,
        load_factor,
        p_crossover: s.p_crossover,
        p_mutation_per_gene: s.p_mutation,
    }
}

fn compare(args: CompareArgs) -> Result<()> {
    let report = match (&args.instance, &args.prefs) {
        (Some(inst_path), Some(prefs_path)) => {
            let (inst, scp) = load_problem(inst_path, Some(prefs_path))?;
            let spec = spec_from(args.name, inst.n_vms(), inst.m_pms(), scp.k(), args.load_factor, args.generations, args.repetitions, &args.search);
            run_comparison(&spec, &inst, &scp)?
        }
        _ => {
            let spec = spec_from(args.name, args.vms, args.pms, args.pref_count, args.load_factor, args.generations, args.repetitions, &args.search);
            run_scenarios(&[spec])?
        }
    };
    write_report(&args.search.out, args.search.format, &report)
}

fn builtin_scenarios(args: ScenarioArgs) -> Result<()> {
    let specs: Vec<ScenarioSpec> = [ScenarioSpec::prf1(args.search.seed), ScenarioSpec::prf2(args.search.seed)]
        .into_iter()
        .map(|spec| ScenarioSpec {
            generation_settings: args.generations.clone(),
            repetitions: args.repetitions,
            load_factor: args.load_factor,
            pop_size: args.search.pop_size,
            p_crossover: args.search.p_crossover,
            p_mutation_per_gene: args.search.p_mutation,
            ..spec
        })
        .collect();
    let report = run_scenarios(&specs)?;
    write_report(&args.search.out, args.search.format, &report)?;
    print!("{}", summary_table(&specs, &report));
    Ok(())
}

/// Mean weighted flips and CPR fraction per scenario and setting.
fn summary_table(specs: &[ScenarioSpec], report: &ComparisonReport) -> String {
    let mut out = String::from("scenario  generations  wflips_nsga2  wflips_cpnsga  cpr_fraction\n");
    for spec in specs {
        for &g in &spec.generation_settings {
            let mean = |alg| {
                let v: Vec<f64> = report.cells_for(&spec.name, g, alg).map(|c| c.mean_weighted_flips).collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            let fractions: Vec<f64> = report
                .cells_for(&spec.name, g, Algorithm::Cpnsga)
                .filter_map(|c| c.cpr_fraction)
                .collect();
            let fraction = fractions.iter().sum::<f64>() / fractions.len().max(1) as f64;
            out.push_str(&format!(
                "{:<8}  {:>11}  {:>12.3}  {:>13.3}  {:>12.3}\n",
                spec.name,
                g,
                mean(Algorithm::Nsga2),
                mean(Algorithm::Cpnsga),
                fraction
            ));
        }
    }
    out
}
