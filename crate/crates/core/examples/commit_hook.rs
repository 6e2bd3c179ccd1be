//! The commit-msg hook check against a models directory:
//! `cargo run --example commit_hook -- MESSAGE_FILE [MODELS_DIR]`.
//!
//! Install the real hook with
//! `printf '#!/bin/sh\nexec cql hook "$1" --models /path/to/models\n' > .git/hooks/commit-msg`.

use std::path::PathBuf;
use std::process::ExitCode;

use commit_quality::report::{hook_check, strip_comments};

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let text = match args.next() {
        Some(file) => std::fs::read_to_string(file).unwrap_or_default(),
        None => "Tweak config\n\n# Please enter the commit message for your changes.\n".to_string(),
    };
    let models = PathBuf::from(args.next().unwrap_or_else(|| "models".into()));
    println!("checking: {:?}", strip_comments(&text));
    let verdict = hook_check(&text, &models);
    for line in &verdict.lines {
        println!("{line}");
    }
    ExitCode::from(verdict.exit_code as u8)
}
