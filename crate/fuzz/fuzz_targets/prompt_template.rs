#![no_main]
use assay_core::llm::PromptTemplate;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|source: &str| {
    let _ = PromptTemplate::parse(source);
});
