#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|source: &str| {
    let _ = assay_core::math::to_unicode(source);
});
