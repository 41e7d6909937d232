fn main() -> std::process::ExitCode {
    govroom::cli::main()
}
