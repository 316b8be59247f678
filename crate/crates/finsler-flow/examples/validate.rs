//! Run a validation suite and print one line per check.
//!
//!     cargo run --release --example validate -- kernel
//!     cargo run --release --example validate -- kernel flip-cartan

use finsler_flow::validate::{run_suite, Mutation, Suite};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let suite: Suite = args.first().map(String::as_str).unwrap_or("kernel").parse().expect("suite");
    let mutation = match args.get(1).map(String::as_str) {
        Some("flip-cartan") => Mutation::FlipCartan,
        _ => Mutation::None,
    };
    let report = run_suite(suite, mutation);
    println!("{report}");
    std::process::exit(if report.passed() { 0 } else { 1 });
}
