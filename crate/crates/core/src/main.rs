fn main() {
    std::process::exit(vortex_spectra::cli::main());
}
