fn main() {
    std::process::exit(bagforge_cli::main_with(std::env::args_os()));
}
