use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use detforest::config::{self, ConfigFile, PRESETS};
use detforest::experiment::run_trials;
use detforest::io::{load_forest, save_forest, tree_to_dot, tree_to_json};
use detforest::{
    forest_divergence, generate_synthetic_formulas, train_test_split, Aggregation,
    AggregationChoice, Dataset, Forest, TieBreak,
};

#[derive(Parser)]
#[command(name = "detforest", version, about = "Deterministic random forests and reproducibility checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic compositional dataset as CSV.
    Gen {
        #[arg(long, default_value_t = 4598)]
        n: usize,
        #[arg(long, default_value_t = 87)]
        p: usize,
        #[arg(long, env = "DETFOREST_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shuffle a CSV into train.csv and test.csv.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "label")]
        label_column: String,
        #[arg(long, default_value_t = 0.8)]
        train_frac: f64,
        #[arg(long, env = "DETFOREST_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train repeated trials of one configuration and check its expectations.
    Run(RunArgs),
    /// Write one tree of a saved forest as DOT or JSON.
    ExportTree {
        forest: PathBuf,
        #[arg(long, default_value_t = 0)]
        tree: usize,
        #[arg(long, value_enum, default_value_t = TreeFormat::Dot)]
        format: TreeFormat,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count test rows on which saved forests disagree.
    Diff {
        #[arg(required = true, num_args = 2..)]
        forests: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "label")]
        label_column: String,
        /// Predict every forest with this rule instead of its own.
        #[arg(long, value_enum)]
        aggregation: Option<AggArg>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// List reproducibility hazards in a config file.
    AuditConfig { config: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, default_value = "default", value_parser = preset_names())]
    preset: String,
    /// key = value file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV to train on. Without it a synthetic dataset is generated.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value_t = 4598)]
    n: usize,
    #[arg(long, default_value_t = 87)]
    p: usize,
    /// Seeds data generation, the train/test split and trial 0.
    #[arg(long, env = "DETFOREST_SEED")]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, value_enum)]
    tie_break: Option<TieArg>,
    #[arg(long, value_enum)]
    aggregation: Option<AggArg>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeFormat {
    Dot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    FirstInDraw,
    LowestFeatureIndex,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggArg {
    MajorityVote,
    MeanProbability,
}

impl From<TieArg> for TieBreak {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::FirstInDraw => TieBreak::FirstInDrawOrder,
            TieArg::LowestFeatureIndex => TieBreak::LowestFeatureIndex,
        }
    }
}

impl From<AggArg> for Aggregation {
    fn from(a: AggArg) -> Self {
        match a {
            AggArg::MajorityVote => Aggregation::MajorityVote,
            AggArg::MeanProbability => Aggregation::MeanProbability,
        }
    }
}

fn preset_names() -> clap::builder::PossibleValuesParser {
    clap::builder::PossibleValuesParser::new(PRESETS.iter().map(|p| p.name))
}

/// Exit 1 means the command ran but found divergence or a failed expectation.
enum Outcome {
    Ok,
    Failed,
}

type CliResult = Result<Outcome, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen { n, p, seed, out } => gen(n, p, seed, &out),
        Command::Split { data, label_column, train_frac, seed, out_dir } => {
            split(&data, &label_column, train_frac, seed, &out_dir)
        }
        Command::Run(args) => run(&args),
        Command::ExportTree { forest, tree, format, out } => export_tree(&forest, tree, format, out.as_deref()),
        Command::Diff { forests, data, label_column, aggregation, json } => {
            diff(&forests, &data, &label_column, aggregation, json.as_deref())
        }
        Command::AuditConfig { config } => audit(&config),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn gen(n: usize, p: usize, seed: u64, out: &Path) -> CliResult {
    let ds = generate_synthetic_formulas(n, p, seed)?;
    ds.save_csv(out, "label")?;
    println!("wrote {} rows x {} features to {}", n, p, out.display());
    Ok(Outcome::Ok)
}

fn split(data: &Path, label: &str, frac: f64, seed: u64, out_dir: &Path) -> CliResult {
    let ds = Dataset::load_csv(data, label)?;
    let s = train_test_split(ds.n_rows(), frac, seed)?;
    fs::create_dir_all(out_dir)?;
    ds.subset(&s.train).save_csv(out_dir.join("train.csv"), label)?;
    ds.subset(&s.test).save_csv(out_dir.join("test.csv"), label)?;
    println!("train {} rows, test {} rows", s.train.len(), s.test.len());
    Ok(Outcome::Ok)
}

fn run(args: &RunArgs) -> CliResult {
    let mut cfg = config::preset_config(&args.preset)?;
    if let Some(path) = &args.config {
        cfg = ConfigFile::load(path)?.apply(&cfg)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(t) = args.tie_break {
        cfg.tie_break = t.into();
    }
    if let Some(a) = args.aggregation {
        cfg.aggregation = a.into();
    }
    if let Some(n) = args.trees {
        cfg.n_trees = n;
    }
    cfg.validate()?;

    let ds = match &args.data {
        Some(path) => Dataset::load_csv(path, &args.label_column)?,
        None => generate_synthetic_formulas(args.n, args.p, cfg.seed)?,
    };
    let split = train_test_split(ds.n_rows(), args.train_frac, cfg.seed)?;
    let test = ds.subset(&split.test);
    let expectations = config::expectations_for(&cfg, ds.n_features(), Some(&args.preset));
    let outcome = run_trials(&ds, &split.train, &test, &cfg, args.trials, args.workers, &expectations)?;

    let dir = &args.out_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), config::render_config(&cfg))?;
    test.save_csv(dir.join("test.csv"), &args.label_column)?;
    for (t, f) in outcome.forests.iter().enumerate() {
        save_forest(f, dir.join(format!("forest_{t}.json")))?;
    }
    fs::write(dir.join("tree_0.dot"), tree_to_dot(&outcome.forests[0].trees[0]))?;
    if let Some(report) = &outcome.divergence {
        fs::write(dir.join("divergence.txt"), report.render_table())?;
        fs::write(dir.join("divergence.json"), serde_json::to_string_pretty(report)? + "\n")?;
    }
    let accuracy = outcome.forests[0].accuracy(&test)?;
    let verdict = format!("{}test accuracy (trial 0): {accuracy:.4}\n", outcome.verdict());
    fs::write(dir.join("verdict.txt"), &verdict)?;
    print!("{verdict}");
    Ok(if outcome.all_hold() { Outcome::Ok } else { Outcome::Failed })
}

fn export_tree(path: &Path, index: usize, format: TreeFormat, out: Option<&Path>) -> CliResult {
    let forest = load_forest(path)?;
    let tree = forest.trees.get(index).ok_or_else(|| {
        format!("tree {index} out of range: forest has {} trees", forest.trees.len())
    })?;
    let text = match format {
        TreeFormat::Dot => tree_to_dot(tree),
        TreeFormat::Json => tree_to_json(tree)?,
    };
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(Outcome::Ok)
}

fn diff(
    paths: &[PathBuf],
    data: &Path,
    label: &str,
    aggregation: Option<AggArg>,
    json: Option<&Path>,
) -> CliResult {
    let forests: Vec<Forest> = paths.iter().map(load_forest).collect::<Result<_, _>>()?;
    let test = Dataset::load_csv(data, label)?;
    for (p, f) in paths.iter().zip(&forests) {
        if f.n_features != test.n_features() {
            return Err(format!(
                "{} expects {} features but {} has {}",
                p.display(),
                f.n_features,
                data.display(),
                test.n_features()
            )
            .into());
        }
    }
    let mut labels: Vec<String> = paths
        .iter()
        .map(|p| p.file_stem().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    let mut seen = labels.clone();
    seen.sort();
    seen.dedup();
    if seen.len() < labels.len() {
        labels = paths.iter().map(|p| p.display().to_string()).collect();
    }
    let labelled: Vec<(String, &Forest)> = labels.into_iter().zip(&forests).collect();
    let mode = match aggregation {
        Some(a) => AggregationChoice::Override(a.into()),
        None => AggregationChoice::PerForest,
    };
    let report = forest_divergence(&labelled, &test, mode)?;
    print!("{}", report.render_table());
    if let Some(p) = json {
        fs::write(p, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(if report.total_divergent() == 0 { Outcome::Ok } else { Outcome::Failed })
}

fn audit(path: &Path) -> CliResult {
    let file = ConfigFile::load(path)?;
    let warnings = config::audit(&file)?;
    if warnings.is_empty() {
        println!("no reproducibility hazards found");
    }
    for w in &warnings {
        println!("warning [{:?}]: {}", w.hazard, w.message);
    }
    Ok(Outcome::Ok)
}
