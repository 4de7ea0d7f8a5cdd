fn main() {
    if let Err(e) = robext::cli::run(std::env::args().collect()) {
        eprintln!("robext: {e}");
        std::process::exit(1);
    }
}
