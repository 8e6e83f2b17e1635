#![no_main]

use hocirc::{parse_term, parse_typed_term, Signature};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(t) = parse_term(data) {
        // printing must reparse to the same term
        let printed = t.to_string();
        assert_eq!(parse_term(&printed).ok(), Some(t));
    }
    let _ = parse_typed_term(data, &Signature::demo());
});
