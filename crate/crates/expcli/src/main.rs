fn main() {
    std::process::exit(ignlab::main_with(std::env::args_os()));
}
