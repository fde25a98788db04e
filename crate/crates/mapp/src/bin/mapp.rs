fn main() -> std::process::ExitCode {
    mapp::cli::main()
}
