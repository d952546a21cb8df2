fn main() {
    std::process::exit(flownet::cli::main());
}
