use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qupt::compile::{compile, parse_config, DeviceConfig};
use qupt::harness::mnist::{find_mnist_files, write_synthetic_mnist};
use qupt::harness::{
    load_mnist_idx, load_model_file, render_report, run_experiment, save_model_file, BackendSpec, DatasetSplit,
    EvalReport, ModelFile, ReportFormat, Scenario, SplitOptions,
};
use qupt::noise::NoiseSpec;
use qupt::sim::Circuit;
use qupt::train::{train_with, init_params, TrainConfig};
use qupt::trojan::TrojanClass;
use qupt::{Error, Result};

#[derive(Parser)]
#[command(name = "qupt", version, about = "Trojan attacks on a simulated quanvolutional classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on two MNIST classes.
    Train(TrainArgs),
    /// Evaluate a model under an attack scenario.
    Eval(EvalArgs),
    /// Lower a circuit file against a device configuration.
    Compile(CompileArgs),
    /// Tabulate saved evaluation reports.
    Report(ReportArgs),
    /// Write a synthetic 0/1 digit set in IDX format.
    Synth(SynthArgs),
    /// Write a device configuration, optionally with a trigger.
    InitConfig(InitConfigArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Desk,
    Full,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, env = "QUPT_DATA_DIR")]
    data_dir: PathBuf,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    /// Seed for the train/test split.
    #[arg(long)]
    data_seed: Option<u64>,
    /// Take each split half from each class.
    #[arg(long)]
    balanced: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Preset for sizes, epochs and learning rate.
    #[arg(long, value_enum, default_value = "desk")]
    scale: Scale,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch CSV (epoch,loss,accuracy,lr).
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    None,
    A,
    B,
    C,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Ideal,
    Noisy,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, env = "QUPT_DATA_DIR")]
    data_dir: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    attack: AttackArg,
    #[arg(long, value_enum, default_value = "ideal")]
    backend: BackendArg,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    trajectories: usize,
    /// Shots per trajectory; exact expectations when omitted.
    #[arg(long)]
    shots: Option<u64>,
    /// Trajectory seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed for the Trojan's rotation angles.
    #[arg(long, default_value_t = 0)]
    trojan_seed: u64,
    /// Test-set size; defaults to the split stored with the model.
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    optimize: bool,
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InitConfigArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "aria-1-sim")]
    device_name: String,
    #[arg(long, default_value_t = 9)]
    num_qubits: usize,
    #[arg(long, default_value_t = NoiseSpec::ARIA_1.r1q)]
    r1q: f64,
    #[arg(long, default_value_t = NoiseSpec::ARIA_1.r2q)]
    r2q: f64,
    /// Add an X on this qubit to the prelude.
    #[arg(long)]
    trigger: Option<usize>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn load_split(data_dir: &Path, opts: &SplitOptions) -> Result<DatasetSplit> {
    let (images, labels) = find_mnist_files(data_dir)?;
    let split = load_mnist_idx(&images, &labels, opts)?;
    eprintln!(
        "data: train {} (classes {:?}), test {} (classes {:?})",
        split.train.len(),
        split.train_counts(),
        split.test.len(),
        split.test_counts()
    );
    Ok(split)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let (mut config, n_train, n_test) = match args.scale {
        Scale::Desk => (TrainConfig::desk_scale(args.seed), 200, 100),
        Scale::Full => (
            TrainConfig {
                seed: args.seed,
                ..TrainConfig::default()
            },
            2000,
            200,
        ),
    };
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    if let Some(b) = args.batch_size {
        config.batch_size = b;
    }
    if let Some(lr) = args.lr {
        config.lr0 = lr;
    }
    let split_opts = SplitOptions {
        n_train: args.data.n_train.unwrap_or(n_train),
        n_test: args.data.n_test.unwrap_or(n_test),
        seed: args.data.data_seed.unwrap_or(args.seed),
        balanced: args.data.balanced,
        ..SplitOptions::default()
    };
    let split = load_split(&args.data.data_dir, &split_opts)?;
    let (params, history) = train_with(&split.train, &config, init_params(config.seed, config.init_scale), |e| {
        eprintln!(
            "epoch {:>3}  loss {:.5}  acc {:.3}  lr {:.3e}",
            e.epoch, e.loss, e.accuracy, e.lr
        )
    })?;
    if let Some(f) = history.non_increasing_fraction() {
        eprintln!("loss non-increasing in {:.0}% of epoch transitions", 100.0 * f);
    }
    let mut file = ModelFile::new(&params, Some(config));
    file.split = Some(split_opts);
    save_model_file(&args.out, &file)?;
    if let Some(h) = args.history {
        write_text(&h, &history.to_csv()?)?;
    }
    eprintln!("model written to {}", args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let file = load_model_file(&args.model)?;
    let params = file.params()?;
    let mut split_opts = file.split.unwrap_or(SplitOptions {
        n_train: 200,
        n_test: 100,
        ..SplitOptions::default()
    });
    if let Some(n) = args.n_test {
        split_opts.n_test = n;
    }
    let split = load_split(&args.data_dir, &split_opts)?;

    let config = match &args.config {
        Some(path) => Some(parse_config(read_text(path)?.as_bytes())?),
        None => None,
    };
    let backend = match args.backend {
        BackendArg::Ideal => BackendSpec::Ideal,
        BackendArg::Noisy => BackendSpec::Noisy {
            noise: config.as_ref().map_or(NoiseSpec::ARIA_1, |c| c.noise),
            trajectories: args.trajectories,
            shots: args.shots,
            seed: args.seed,
        },
    };
    let mut scenario = Scenario::new(backend);
    let class = match args.attack {
        AttackArg::None => None,
        AttackArg::A => Some(TrojanClass::A),
        AttackArg::B => Some(TrojanClass::B),
        AttackArg::C => Some(TrojanClass::C),
    };
    if let Some(c) = class {
        scenario = scenario.with_attack(c, args.trojan_seed);
    }
    if let Some(c) = config {
        scenario = scenario.with_config(c, args.config.as_ref().map(|p| p.display().to_string()));
    }
    scenario.model_path = Some(args.model.display().to_string());
    scenario.data_seed = Some(split_opts.seed);

    let report = run_experiment(&scenario, &params, &split.test)?;
    print!("{}", render_report(std::slice::from_ref(&report), ReportFormat::Table)?);
    if let Some(out) = args.out {
        write_text(&out, &report.to_json())?;
    }
    Ok(())
}

fn cmd_compile(args: CompileArgs) -> Result<()> {
    let circuit = Circuit::from_json(&read_text(&args.circuit)?)?;
    let config = parse_config(read_text(&args.config)?.as_bytes())?;
    let program = compile(&circuit.into(), &config, args.optimize)?;
    let removed = program.qubit_map.removed();
    eprintln!(
        "{} instructions on {} qubits ({} prelude); idle qubits removed: {:?}",
        program.instructions.len(),
        program.num_qubits,
        program.count(qupt::trojan::Provenance::Prelude),
        removed
    );
    let json = program.to_json();
    match args.emit {
        Some(path) => write_text(&path, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let reports: Vec<EvalReport> = args
        .inputs
        .iter()
        .map(|p| EvalReport::from_json(&read_text(p)?))
        .collect::<Result<_>>()?;
    let format = match args.format {
        FormatArg::Table => ReportFormat::Table,
        FormatArg::Csv => ReportFormat::Csv,
    };
    print!("{}", render_report(&reports, format)?);
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let (images, labels) = write_synthetic_mnist(&args.out_dir, args.count, args.seed)?;
    eprintln!("wrote {} and {}", images.display(), labels.display());
    Ok(())
}

fn cmd_init_config(args: InitConfigArgs) -> Result<()> {
    let mut config = DeviceConfig::benign(&args.device_name, args.num_qubits, NoiseSpec::new(args.r1q, args.r2q)?);
    if let Some(t) = args.trigger {
        config = config.with_trigger(t)?;
    }
    config.validate()?;
    write_text(&args.out, &config.to_json())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Report(a) => cmd_report(a),
        Command::Synth(a) => cmd_synth(a),
        Command::InitConfig(a) => cmd_init_config(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 3 })
        }
    }
}
