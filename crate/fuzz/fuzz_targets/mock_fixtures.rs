#![no_main]
use assay_core::llm::FixtureStore;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(store) = FixtureStore::parse(text) {
        let again = FixtureStore::parse(&store.to_json()).expect("serialized store parses");
        assert_eq!(again.len(), store.len());
    }
});
