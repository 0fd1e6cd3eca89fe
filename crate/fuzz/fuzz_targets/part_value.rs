#![no_main]
use assay_core::model::{PartValue, QuestionPart};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let Ok(value) = serde_json::from_str::<serde_json::Value>(text) else { return };
    for part in QuestionPart::ALL {
        let _ = PartValue::from_json(part, value.clone());
    }
});
