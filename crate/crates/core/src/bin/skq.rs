fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SKQ_LOG", "warn")).init();
    let code = skq::cli::main_with(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
