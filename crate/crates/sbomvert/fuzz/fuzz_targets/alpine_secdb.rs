//! Fuzz the Alpine secdb loader.
//!
//! ```bash
//! cargo fuzz run alpine_secdb
//! ```

#![no_main]

use libfuzzer_sys::fuzz_target;
use sbomvert::tracker::load_alpine_secdb;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = load_alpine_secdb(text);
});
