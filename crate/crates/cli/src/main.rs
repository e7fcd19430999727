fn main() {
    std::process::exit(effdim_cli::main_with_exit_code());
}
