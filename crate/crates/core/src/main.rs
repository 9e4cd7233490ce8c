fn main() {
    std::process::exit(planar_walk::cli::run(std::env::args_os()));
}
