fn main() {
    std::process::exit(persona_dialogue::cli::main_with_args(std::env::args_os()));
}
