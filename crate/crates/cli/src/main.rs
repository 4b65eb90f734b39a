fn main() {
    std::process::exit(reapkit::run(std::env::args_os()));
}
