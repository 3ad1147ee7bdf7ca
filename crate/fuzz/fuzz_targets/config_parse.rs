#![no_main]

use hbf_core::harness::ExperimentSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = ExperimentSpec::from_toml_str(text) {
        // an accepted file must resolve every sweep point
        spec.validate().expect("parsed spec fails validation");
        for v in &spec.values {
            spec.point(*v).expect("parsed spec has an unusable sweep value");
        }
    }
});
