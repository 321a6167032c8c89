fn main() {
    std::process::exit(mvdyn::run(std::env::args_os()));
}
