use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ealm::classify::{fixture, orbit_vote, BINARY_VOTES};
use ealm::io::{load_dataset, load_model, load_state, save_dataset, save_model, write_atomic};
use ealm::nn::{build_hybrid_net, build_relu_net, init_default, NadamConfig};
use ealm::sampling::{build_dataset, substream, Dataset, Recipe, SplitSizes};
use ealm::tensor::{det2x2, hyperdet222, multilinear_rank};
use ealm::training::{
    evaluate, find_experiment, report_csv_row, run_experiment_with, train, TrainConfig,
    INIT_STREAM, REPORT_CSV_HEADER,
};
use ealm::{Error, QuditState, Shape};

const TRAIN_FILE: &str = "train.ealm";
const VAL_FILE: &str = "val.ealm";
const TEST_FILE: &str = "test.ealm";

const PREDICT_STREAM: u64 = 0x5052_4544;

#[derive(Parser)]
#[command(name = "ealm", version, about = "Entanglement classification by algebraic oracles and trained networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Master seed; falls back to EALM_SEED, then 0.
    #[arg(long, env = "EALM_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum NetKind {
    Hybrid,
    Relu,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/val/test datasets for a recipe.
    Gen {
        #[arg(long)]
        recipe: Recipe,
        /// Local dimension and particle count, e.g. 2x3.
        #[arg(long)]
        shape: Shape,
        /// Train, validation and test sizes, e.g. 1000,200,200.
        #[arg(long, value_parser = parse_sizes)]
        sizes: SplitSizes,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network on a generated dataset directory.
    Train {
        #[arg(long, value_enum)]
        net: NetKind,
        /// Layer widths ending in the output width, e.g. 21,8,1.
        #[arg(long, value_parser = parse_widths)]
        arch: Widths,
        /// Exponent of the power layer (hybrid nets).
        #[arg(long, default_value_t = 2)]
        power: u32,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 128)]
        batch: usize,
        #[arg(long, default_value_t = NadamConfig::default().learning_rate)]
        lr: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy and loss of a model on a dataset file (or a directory's test split).
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Orbit-vote prediction for a named state or a state file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = BINARY_VOTES)]
        votes: usize,
        /// Also write the histogram as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Exact invariants: multilinear rank, and det2x2 or the 2x2x2 hyperdeterminant.
    Oracle {
        #[arg(long)]
        state: String,
    },
    /// Run one row of the experiment registry at a fraction of its sizes.
    Experiment {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
}

fn parse_sizes(s: &str) -> Result<SplitSizes, String> {
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad size {p:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    match parts[..] {
        [a, b, c] => Ok(SplitSizes::new(a, b, c)),
        _ => Err("expected three sizes: train,val,test".into()),
    }
}

#[derive(Clone)]
struct Widths(Vec<usize>);

fn parse_widths(s: &str) -> Result<Widths, String> {
    let widths = s
        .split(',')
        .map(|p| match p.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(format!("bad layer width {p:?}")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if widths.len() < 2 {
        return Err("need at least one hidden width and the output width".into());
    }
    Ok(Widths(widths))
}

fn load_state_arg(spec: &str) -> ealm::Result<QuditState> {
    if Path::new(spec).is_file() {
        load_state(spec)
    } else {
        fixture(spec)
    }
}

fn data_file(path: &Path, default: &str) -> PathBuf {
    if path.is_dir() {
        path.join(default)
    } else {
        path.to_path_buf()
    }
}

fn run(command: Command) -> ealm::Result<()> {
    match command {
        Command::Gen {
            recipe,
            shape,
            sizes,
            seed,
            out,
        } => {
            let (tr, va, te) = build_dataset(recipe, shape, sizes, seed.seed)?;
            fs::create_dir_all(&out)?;
            for (name, data) in [(TRAIN_FILE, &tr), (VAL_FILE, &va), (TEST_FILE, &te)] {
                save_dataset(out.join(name), data)?;
            }
            println!(
                "wrote {} / {} / {} samples of {recipe} {shape} to {}",
                tr.len(),
                va.len(),
                te.len(),
                out.display()
            );
        }
        Command::Train {
            net,
            arch,
            power,
            data,
            epochs,
            batch,
            lr,
            seed,
            out,
        } => {
            let train_set = load_dataset(data.join(TRAIN_FILE))?;
            let val_set = load_dataset(data.join(VAL_FILE))?;
            let inputs = train_set.shape().len();
            let (hidden, outputs) = arch.0.split_at(arch.0.len() - 1);
            let mut model = match net {
                NetKind::Hybrid => match hidden {
                    [p1, p2] => build_hybrid_net(inputs, power, *p1, *p2, outputs[0])?,
                    _ => return Err(Error::Argument("hybrid --arch is p1,p2,k".into())),
                },
                NetKind::Relu => build_relu_net(inputs, hidden, outputs[0])?,
            };
            init_default(&mut model, &mut substream(seed.seed, INIT_STREAM, 0))?;
            let config = TrainConfig {
                epochs,
                batch_size: batch,
                nadam: NadamConfig::default().with_learning_rate(lr),
                seed: seed.seed,
                ..TrainConfig::default()
            };
            let (model, report) = train(model, &train_set, &val_set, &config)?;
            save_model(&out, &model)?;
            println!(
                "train_acc={:.6} val_acc={:.6} loss={:.6}",
                report.train_acc, report.val_acc, report.final_loss
            );
            let test_path = data.join(TEST_FILE);
            if test_path.is_file() {
                let (acc, _) = evaluate(&model, &load_dataset(test_path)?)?;
                println!("test_acc={acc:.6}");
            }
        }
        Command::Eval { model, data } => {
            let net = load_model(model)?;
            let set: Dataset = load_dataset(data_file(&data, TEST_FILE))?;
            let (acc, loss) = evaluate(&net, &set)?;
            println!("samples={} accuracy={acc:.6} loss={loss:.6}", set.len());
        }
        Command::Predict {
            model,
            state,
            votes,
            csv,
            seed,
        } => {
            let net = load_model(model)?;
            let st = load_state_arg(&state)?;
            let hist = orbit_vote(&net, &st, votes, &mut substream(seed.seed, PREDICT_STREAM, 0))?;
            println!("{hist}");
            println!("majority_class={}", hist.majority_class);
            if let Some(path) = csv {
                write_atomic(&path, &hist.to_csv())?;
            }
        }
        Command::Oracle { state } => {
            let st = load_state_arg(&state)?;
            let shape = st.shape();
            println!("shape={shape}");
            println!("rank={}", multilinear_rank(&st)?);
            if (shape.d(), shape.n()) == (2, 2) {
                println!("det2x2={}", det2x2(&st)?);
            }
            if (shape.d(), shape.n()) == (2, 3) {
                println!("delta222={}", hyperdet222(&st)?);
            }
        }
        Command::Experiment {
            name,
            scale,
            epochs,
            seed,
        } => {
            let exp = find_experiment(&name)?;
            if !(scale > 0.0 && scale <= 1.0) {
                return Err(Error::Argument(format!("scale {scale} outside (0,1]")));
            }
            let config = TrainConfig {
                epochs,
                seed: seed.seed,
                ..TrainConfig::default()
            };
            let outcome = run_experiment_with(exp, exp.sizes.scaled(scale), &config)?;
            println!("{REPORT_CSV_HEADER}");
            println!("{}", report_csv_row(exp, &outcome.report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ealm: {e}");
            match e {
                Error::Argument(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
