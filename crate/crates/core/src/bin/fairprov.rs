fn main() {
    std::process::exit(fairprov::cli::main());
}
