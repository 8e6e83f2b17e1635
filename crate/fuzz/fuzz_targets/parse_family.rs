#![no_main]

use hocirc::holes::parse_family;
use hocirc::Signature;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = parse_family(data, &Signature::demo());
});
