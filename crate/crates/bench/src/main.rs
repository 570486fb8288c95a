fn main() {
    std::process::exit(sem_bench::cli::main(std::env::args_os()));
}
