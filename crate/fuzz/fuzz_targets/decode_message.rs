#![no_main]

use libfuzzer_sys::fuzz_target;
use offload_kernel::protocol::{decode_client_message, Role};
use offload_kernel::session::SessionKernel;
use offload_kernel::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = decode_client_message(text);
    // The kernel must reject anything malformed with an error frame.
    let mut kernel = SessionKernel::new("fuzz", Config::default());
    let (phone, _) = kernel.join(Role::Phone, 0).unwrap();
    let (ar, _) = kernel.join(Role::Ar, 0).unwrap();
    kernel.route_text(phone, 1, text, None);
    kernel.route_text(ar, 2, text, None);
});
