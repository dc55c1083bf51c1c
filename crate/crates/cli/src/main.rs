fn main() {
    std::process::exit(vulnlabel_cli::main_with_args(std::env::args_os()));
}
