fn main() {
    std::process::exit(strocchi::cli::main_exit_code());
}
