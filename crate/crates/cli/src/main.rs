fn main() {
    std::process::exit(grokbench::main_with_args(std::env::args_os()));
}
