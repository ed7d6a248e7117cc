fn main() {
    std::process::exit(fracbif::run(std::env::args_os()));
}
