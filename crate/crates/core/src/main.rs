use std::io;

fn main() {
    let code = klm_teleport::cli::run(std::env::args(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
