#![no_main]

use hbf_core::channel::{parse_channel, render_channel};
use libfuzzer_sys::fuzz_target;

// Input: matrix CSV, a NUL byte, then the path CSV.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Some((matrix, paths)) = text.split_once('\0') else {
        return;
    };
    if let Ok(ch) = parse_channel(matrix, paths) {
        let (m, p) = render_channel(&ch);
        let again = parse_channel(&m, &p).expect("rendered channel does not parse");
        assert_eq!(again.h, ch.h);
        assert_eq!(again.paths, ch.paths);
    }
});
