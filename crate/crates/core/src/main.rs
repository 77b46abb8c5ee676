use std::process::ExitCode;

fn main() -> ExitCode {
    entropy_tree::cli::main()
}
