fn main() {
    std::process::exit(ripstab_cli::run(std::env::args_os()));
}
