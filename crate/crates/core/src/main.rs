fn main() {
    std::process::exit(expert_minimax::cli::run());
}
