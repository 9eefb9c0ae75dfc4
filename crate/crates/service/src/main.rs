fn main() -> std::process::ExitCode {
    ermcda_service::cli::main()
}
