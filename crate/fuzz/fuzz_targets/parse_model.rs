#![no_main]

use hocirc::matmodel::parse_model;
use hocirc::Signature;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = parse_model(data, &Signature::demo());
});
