#![no_main]
use assay_core::diff::{compute_diff, Granularity};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|pair: (&str, &str)| {
    let (a, b) = pair;
    for g in [Granularity::InlineWordDiff, Granularity::SideBySide] {
        let d = compute_diff(a, b, g);
        assert_eq!(d.original(), a);
        assert_eq!(d.revised(), b);
    }
});
