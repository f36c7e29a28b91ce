//! Fuzz the Debian security tracker loader.
//!
//! ```bash
//! cargo fuzz run debian_tracker
//! ```

#![no_main]

use libfuzzer_sys::fuzz_target;
use sbomvert::tracker::load_debian_tracker;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = load_debian_tracker(text);
});
