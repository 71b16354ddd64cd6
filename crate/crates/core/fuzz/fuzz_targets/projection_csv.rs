#![no_main]

use chronoline::store::read_projection_1d;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = read_projection_1d(data) {
        assert!(!p.is_empty());
        assert_eq!(p.years().count(), p.values().len());
        assert!(p.values().iter().all(|v| v.is_finite()));
    }
});
