fn main() -> std::process::ExitCode {
    radiomap::cli::main()
}
