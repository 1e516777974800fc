fn main() -> std::process::ExitCode {
    cruisesim::cli::main()
}
