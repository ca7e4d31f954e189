fn main() {
    std::process::exit(frog_harness::cli::main_with(std::env::args_os()));
}
