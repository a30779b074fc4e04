fn main() {
    std::process::exit(dicke_ising_cli::main_with_args(std::env::args_os()));
}
