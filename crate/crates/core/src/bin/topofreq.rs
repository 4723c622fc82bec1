fn main() {
    std::process::exit(topofreq::cli::run(std::env::args_os()));
}
