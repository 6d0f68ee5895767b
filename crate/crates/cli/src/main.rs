//! `sirstbench` binary entry point.

fn main() {
    std::process::exit(sirstbench_cli::run_main());
}
