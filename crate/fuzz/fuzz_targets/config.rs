#![no_main]

use std::path::Path;

use hypercurv::cli::{Mode, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::parse(text, Mode::Solve, Path::new(".")) {
        cfg.validate().expect("parsed configs validate");
    }
});
