fn main() {
    std::process::exit(prandtl_lab::run(std::env::args_os()));
}
