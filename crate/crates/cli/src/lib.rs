//! Library backing the `sirstbench` binary: dataset I/O, scene synthesis,
//! and the subcommand implementations.

pub mod args;
pub mod commands;
pub mod dataset;
pub mod detections;
pub mod errors;
pub mod synth;

use clap::Parser;

use args::{Cli, Command};

/// Parses argv and runs the selected command, returning the process exit
/// code: 0 success, 1 invalid input, 2 internal failure.
pub fn run_main() -> i32 {
    let _ = env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("SIRSTBENCH_LOG", "warn"),
    )
    .format_timestamp(None)
    .try_init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };

    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    match run(&cli.cmd) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            errors::exit_code(&err)
        }
    }
}

pub fn run(cmd: &Command) -> anyhow::Result<()> {
    match cmd {
        Command::NocoGen(a) => commands::noco_gen(a),
        Command::Detect(a) => commands::detect(a),
        Command::Eval(a) => commands::eval(a),
        Command::AssignStats(a) => commands::assign_stats(a),
        Command::LossEval(a) => commands::loss_eval(a),
        Command::Synth(a) => commands::synth(a),
        Command::IouDemo(a) => commands::iou_demo(a),
    }
}
