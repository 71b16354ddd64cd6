#![no_main]

use chronoline::store::{parse_embeddings, write_embeddings};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for normalize in [false, true] {
        let Ok(set) = parse_embeddings(text, normalize) else {
            continue;
        };
        // whatever parses must survive a write/read cycle unchanged
        let mut buf = Vec::new();
        write_embeddings(&mut buf, &set).unwrap();
        let again = parse_embeddings(std::str::from_utf8(&buf).unwrap(), false).unwrap();
        assert_eq!(set, again);
    }
});
