//! Fuzz both version comparators for order-relation consistency.
//!
//! Input is two version strings separated by the first newline.
//!
//! ```bash
//! cargo fuzz run version_compare -- -only_ascii=1
//! ```

#![no_main]

use std::cmp::Ordering;

use libfuzzer_sys::fuzz_target;
use sbomvert::verscmp::{compare_alpine, compare_debian};

fn check(cmp: fn(&str, &str) -> Result<Ordering, sbomvert::verscmp::VersionError>, a: &str, b: &str) {
    // Comparison is a partial function; where defined it must be reflexive
    // and antisymmetric.
    if cmp(a, a).is_ok_and(|o| o != Ordering::Equal) {
        panic!("{a:?} != itself");
    }
    if let (Ok(ab), Ok(ba)) = (cmp(a, b), cmp(b, a)) {
        assert_eq!(ab, ba.reverse(), "antisymmetry violated for {a:?} vs {b:?}");
    }
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (a, b) = match text.split_once('\n') {
        Some(pair) => pair,
        None => (text, text),
    };
    check(compare_debian, a, b);
    check(compare_alpine, a, b);
});
