#![no_main]
use assay_core::spans::detect_spans;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let spans = detect_spans(text);
    let mut at = 0;
    for s in &spans {
        assert_eq!(s.range.start, at);
        assert!(s.range.end > s.range.start);
        at = s.range.end;
    }
    assert_eq!(at, text.len());
});
