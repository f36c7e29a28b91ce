//! Fuzz the pURL parser and the parse/serialize round trip.
//!
//! ```bash
//! cargo fuzz run purl_parse -- -only_ascii=1
//! ```

#![no_main]

use libfuzzer_sys::fuzz_target;
use sbomvert::purl::{parse_purl, serialize_purl, validate_purl_text, Ecosystem};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = validate_purl_text(text, Ecosystem::Debian);
    let Ok(purl) = parse_purl(text) else {
        return;
    };
    // Canonical form must survive a second pass unchanged.
    let canonical = serialize_purl(&purl);
    let reparsed = parse_purl(&canonical).expect("canonical purl must reparse");
    assert_eq!(purl, reparsed);
    assert_eq!(canonical, serialize_purl(&reparsed));
});
