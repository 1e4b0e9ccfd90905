fn main() {
    std::process::exit(orbit_transport::cli::dispatch(std::env::args_os()));
}
