#![no_main]
use assay_core::export::AssessmentDocument;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(doc) = AssessmentDocument::parse(text) {
        let json = doc.to_json();
        let again = AssessmentDocument::parse(&json).expect("canonical output parses");
        assert_eq!(again, doc);
        assert_eq!(again.to_json(), json);
    }
});
