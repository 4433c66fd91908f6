fn main() {
    std::process::exit(waveguide_bic::cli::run(std::env::args_os()));
}
