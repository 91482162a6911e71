fn main() {
    std::process::exit(robust_gan_bench::cli::cli_main(std::env::args_os()));
}
