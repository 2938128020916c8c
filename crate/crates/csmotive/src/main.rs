fn main() {
    std::process::exit(csmotive::cli::main());
}
