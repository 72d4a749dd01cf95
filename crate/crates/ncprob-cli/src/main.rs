fn main() {
    std::process::exit(ncprob_cli::dispatch(std::env::args_os()));
}
