#![no_main]

use hocirc::parse_signature;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(sig) = parse_signature(data) {
        let again = parse_signature(&sig.to_string()).expect("printed signature reparses");
        assert_eq!(again.to_string(), sig.to_string());
    }
});
