#![no_main]

use chronoline::metrics::read_predictions;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_predictions(data);
});
