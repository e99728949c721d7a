fn main() {
    std::process::exit(shrinklab::run::run(std::env::args_os()));
}
