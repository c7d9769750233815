use clap::{Args, Parser, Subcommand};
use fsynth::cegis::{Outcome, SolverConfig};
use fsynth::frontends::TaskKind;
use fsynth::harness::{self, CheckOutcome, Instance, RunRecord};
use fsynth::lvm::{print_program, print_programs};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "fsynth", version, about = "Finite-state program synthesis over bitvectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a specification (.spec), loop system (.loop) or superoptimisation reference (.sopt).
    Solve {
        file: PathBuf,
        /// Only re-verify this witness instead of solving.
        #[arg(long, value_name = "WITNESS")]
        check_only: Option<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Prove safety, termination or non-termination of a loop system.
    Analyze {
        file: PathBuf,
        #[arg(long, env = "FSYNTH_TASK")]
        task: Option<TaskKind>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Solve every instance in a directory and print a summary table.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Re-verify a witness against an instance.
    Check {
        file: PathBuf,
        witness: PathBuf,
        #[arg(long, env = "FSYNTH_TASK")]
        task: Option<TaskKind>,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
struct Opts {
    /// key=value configuration file, applied before the flags.
    #[arg(long, env = "FSYNTH_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "FSYNTH_TARGET_WIDTH")]
    target_width: Option<String>,
    #[arg(long, env = "FSYNTH_INITIAL_WIDTH")]
    initial_width: Option<String>,
    #[arg(long, env = "FSYNTH_MAX_LENGTH")]
    max_length: Option<String>,
    /// e.g. `30s`, `500ms`, `none`.
    #[arg(long, env = "FSYNTH_TIMEOUT")]
    timeout: Option<String>,
    #[arg(long, env = "FSYNTH_SEED")]
    seed: Option<String>,
    /// Comma-separated: explicit, symbolic, gp.
    #[arg(long, env = "FSYNTH_STRATEGIES")]
    strategies: Option<String>,
    /// Comma-separated mnemonics, or `all`.
    #[arg(long, env = "FSYNTH_OPCODES")]
    opcodes: Option<String>,
    #[arg(long, env = "FSYNTH_EXHAUSTIVE_CAP")]
    exhaustive_cap: Option<String>,
    /// Append run records here, one per line (`-` for standard output).
    #[arg(long, env = "FSYNTH_STATS_OUT")]
    stats_out: Option<PathBuf>,
    /// Write a SAT witness here, in the form `check` reads.
    #[arg(long)]
    witness_out: Option<PathBuf>,
}

struct Usage(String);

impl Opts {
    fn config(&self) -> Result<SolverConfig, Usage> {
        let mut cfg = SolverConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
        }
        let flags = [
            ("target_width", &self.target_width),
            ("initial_width", &self.initial_width),
            ("max_length", &self.max_length),
            ("timeout", &self.timeout),
            ("seed", &self.seed),
            ("strategies", &self.strategies),
            ("opcodes", &self.opcodes),
            ("exhaustive_cap", &self.exhaustive_cap),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|e| Usage(e.to_string()))?;
            }
        }
        Ok(cfg)
    }

    fn write_records(&self, records: &[RunRecord]) -> Result<(), Usage> {
        let Some(path) = &self.stats_out else { return Ok(()) };
        let text: String = records.iter().map(|r| r.to_line() + "\n").collect();
        if path == Path::new("-") {
            print!("{text}");
            return Ok(());
        }
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Usage(format!("{}: {e}", path.display())))?;
        f.write_all(text.as_bytes()).map_err(|e| Usage(format!("{}: {e}", path.display())))
    }
}

fn load(path: &Path, task: Option<TaskKind>) -> Result<Instance, Usage> {
    harness::load_instance(path, task).map_err(|e| Usage(e.to_string()))
}

fn solve(inst: &Instance, opts: &Opts) -> Result<u8, Usage> {
    let cfg = opts.config()?;
    let run = harness::solve_instance(inst, &cfg);
    let r = &run.record;
    match &run.result.outcome {
        Outcome::Sat { witness, .. } => {
            match r.detail.as_str() {
                "" => println!("SAT"),
                d => println!("SAT ({d})"),
            }
            for (name, p) in witness {
                match harness::role_of(&inst.encoded.roles, name) {
                    Some(role) => println!("\nprogram {name}  # {role}"),
                    None => println!("\nprogram {name}"),
                }
                print!("{}", print_program(p, None));
            }
            if let Some(path) = &opts.witness_out {
                let text = print_programs(witness.iter().map(|(n, p)| (n.as_str(), p)), None);
                std::fs::write(path, text).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
            }
        }
        Outcome::Unsat => println!("UNSAT"),
        Outcome::BoundExhausted(reason) => println!("BOUND_EXHAUSTED ({})", reason.name()),
    }
    opts.write_records(std::slice::from_ref(r))?;
    Ok(match run.result.outcome {
        Outcome::Sat { .. } => 0,
        Outcome::Unsat => 1,
        Outcome::BoundExhausted(_) => 2,
    })
}

fn check(inst: &Instance, witness: &Path, opts: &Opts) -> Result<u8, Usage> {
    let cfg = opts.config()?;
    let text = std::fs::read_to_string(witness).map_err(|e| Usage(format!("{}: {e}", witness.display())))?;
    let programs = harness::parse_witness(&text).map_err(|e| Usage(format!("{}: {e}", witness.display())))?;
    match harness::check_witness(inst, &programs, &cfg).map_err(|e| Usage(e.to_string()))? {
        CheckOutcome::Valid => {
            println!("VALID");
            Ok(0)
        }
        CheckOutcome::Counterexample(cex) => {
            let at: Vec<String> = cex.iter().map(|(n, v)| format!("{n}={v}")).collect();
            println!("INVALID {}", at.join(" "));
            Ok(1)
        }
        CheckOutcome::Incomplete => {
            println!("UNKNOWN");
            Ok(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Usage> {
    match cli.command {
        Command::Solve { file, check_only, opts } => {
            let inst = load(&file, None)?;
            match check_only {
                Some(w) => check(&inst, &w, &opts),
                None => solve(&inst, &opts),
            }
        }
        Command::Analyze { file, task, opts } => {
            if file.extension().is_none_or(|e| e != "loop") {
                return Err(Usage(format!("{}: analyze expects a .loop file", file.display())));
            }
            solve(&load(&file, task)?, &opts)
        }
        Command::Bench { dir, opts } => {
            let cfg = opts.config()?;
            let records = harness::bench(&dir, &cfg).map_err(|e| Usage(format!("{}: {e}", dir.display())))?;
            for r in &records {
                let extra = if r.detail.is_empty() { String::new() } else { format!(" ({})", r.detail) };
                eprintln!("{:<32} {}{extra}", r.instance, r.verdict);
            }
            print!("{}", harness::report(&records));
            opts.write_records(&records)?;
            Ok(0)
        }
        Command::Check { file, witness, task, opts } => check(&load(&file, task)?, &witness, &opts),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Usage(msg)) => {
            eprintln!("fsynth: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
