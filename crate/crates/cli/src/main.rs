fn main() {
    eprintln!("peribem: not wired up yet");
    std::process::exit(3);
}
