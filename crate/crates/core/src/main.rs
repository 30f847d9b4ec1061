fn main() {
    std::process::exit(muskat::cli_io::cli_main(std::env::args_os()));
}
