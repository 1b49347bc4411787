//! The key=value model configuration parser must reject arbitrary text with
//! an error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = sarn::models::parse_model_config(text);
    }
});
