fn main() {
    std::process::exit(spo_core::cli::main());
}
