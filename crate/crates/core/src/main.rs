use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use loomc::codegen::Options;
use loomc::driver::{compile, CompileConfig, Dumps};
use loomc::scheduler::policies;

#[derive(Parser)]
#[command(name = "loomc", version, about = "Ahead-of-time optimizer for annotated Python array kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile one Python file into an optimized one.
    Compile(CompileArgs),
}

#[derive(Args)]
struct CompileArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Knowledge base JSON (falls back to $LOOMC_KB, then the built-in one).
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Fixed number of tasks per parallel band (default: runtime workers).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    ntasks: Option<u64>,
    /// Minimum trip count for running a band as tasks.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    tpar: u64,
    #[arg(long)]
    enable_gpu: bool,
    #[arg(long, group = "dump")]
    dump_types: bool,
    #[arg(long, group = "dump")]
    dump_scop: bool,
    #[arg(long, group = "dump")]
    dump_schedule: bool,
    /// Schedule policy name.
    #[arg(long)]
    policy: Option<String>,
    /// Exit with status 1 when nothing was optimized.
    #[arg(long)]
    fail_on_no_opt: bool,
}

fn main() -> ExitCode {
    // Usage errors are diagnostics (1); 2 is kept for internal failures.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let Command::Compile(a) = cli.command;
    if let Some(p) = &a.policy {
        if !policies().iter().any(|x| x.name() == p) {
            let names: Vec<&str> = policies().iter().map(|x| x.name()).collect();
            eprintln!("loomc: unknown policy `{p}` (known: {})", names.join(", "));
            return ExitCode::from(1);
        }
    }
    let cfg = CompileConfig {
        input: a.input,
        output: a.output,
        kb: a.kb,
        options: Options {
            ntasks: a.ntasks.map(|n| n as usize),
            tpar: a.tpar as usize,
            enable_gpu: a.enable_gpu,
            policy: a.policy,
        },
        dumps: Dumps {
            types: a.dump_types,
            scop: a.dump_scop,
            schedule: a.dump_schedule,
        },
        fail_on_no_opt: a.fail_on_no_opt,
    };
    let out = compile(&cfg);
    print!("{}", out.dump);
    for m in &out.messages {
        eprintln!("{m}");
    }
    ExitCode::from(out.code as u8)
}
