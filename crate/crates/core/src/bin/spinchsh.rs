use std::io::Write;

use spinchsh::cli::{run, SEED_ENV};

fn main() {
    let env_seed = std::env::var(SEED_ENV).ok();
    let out = run(std::env::args_os(), env_seed.as_deref());
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    std::process::exit(out.code);
}
