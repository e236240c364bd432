fn main() { std::process::exit(deae::cli::main_exit_code()); }
