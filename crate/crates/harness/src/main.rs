fn main() {
    let code = arcs_harness::cli::cli(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
