//! Fuzz the SPDX document parser, dialect detection, and normalization.
//!
//! ```bash
//! cargo fuzz run spdx_parse
//! ```

#![no_main]

use libfuzzer_sys::fuzz_target;
use sbomvert::dialect::{detect_dialect, normalize};
use sbomvert::spdx::{parse_spdx, serialize_spdx};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(doc) = parse_spdx(text) else {
        return;
    };
    // Accepted documents must survive a serialize/parse round trip.
    let reparsed = parse_spdx(&serialize_spdx(&doc)).expect("serialized spdx must reparse");
    assert_eq!(doc, reparsed);
    // Detection and normalization must not panic on any accepted document.
    let dialect = detect_dialect(&doc);
    let _ = normalize(&doc, dialect);
});
