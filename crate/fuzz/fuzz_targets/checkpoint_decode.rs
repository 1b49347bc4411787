//! The checkpoint decoder must reject arbitrary bytes with an error, never a
//! panic, out-of-bounds read, or runaway allocation.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = sarn::tensor::checkpoint_from_bytes(data);
});
