fn main() {
    std::process::exit(mirrorspec::cli::run_main(std::env::args_os()));
}
