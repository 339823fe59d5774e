fn main() {
    std::process::exit(toxprep::cli::main());
}
