#![no_main]

use chronoline::timeline::{read_model, write_model};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(model) = read_model(data) else {
        return;
    };
    let mut buf = Vec::new();
    write_model(&mut buf, &model).unwrap();
    let again = read_model(buf.as_slice()).unwrap();
    assert_eq!(model, again);
});
