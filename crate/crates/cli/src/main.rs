fn main() {
    std::process::exit(ckstab_cli::run(std::env::args_os()));
}
