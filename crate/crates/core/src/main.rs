fn main() {
    std::process::exit(dialogue_discourse::cli::run(std::env::args_os()));
}
