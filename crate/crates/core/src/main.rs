fn main() {
    std::process::exit(shaml::cli::cli_dispatch(std::env::args_os()));
}
