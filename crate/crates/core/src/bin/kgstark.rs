fn main() {
    std::process::exit(kg_stark::cli::main());
}
