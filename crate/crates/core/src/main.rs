fn main() {
    std::process::exit(permstab::cli::main_with(std::env::args_os()));
}
