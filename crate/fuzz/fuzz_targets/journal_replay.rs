#![no_main]
use assay_core::store::{parse_journal, State};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|bytes: &[u8]| {
    if let Ok((batches, good)) = parse_journal(bytes) {
        assert!(good <= bytes.len());
        let mut state = State::default();
        for b in &batches {
            for r in &b.records {
                if state.apply(r).is_err() {
                    return;
                }
            }
        }
    }
});
