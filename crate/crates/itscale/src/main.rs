fn main() {
    let argv = std::env::args_os().map(|a| a.to_string_lossy().into_owned()).collect();
    std::process::exit(itscale::run(argv));
}
