#![no_main]

use libfuzzer_sys::fuzz_target;
use offload_kernel::harness::replay;
use offload_kernel::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let config = Config::default();
    if let Ok(first) = replay(text, &config) {
        let second = replay(text, &config).expect("parsed once already");
        assert_eq!(first.to_jsonl(), second.to_jsonl());
    }
});
