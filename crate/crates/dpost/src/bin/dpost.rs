fn main() {
    std::process::exit(dpost::cli::main_entry());
}
