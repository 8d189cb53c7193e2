fn main() -> std::process::ExitCode {
    lobatto::cli::main()
}
