#![no_main]

use libfuzzer_sys::fuzz_target;
use offload_kernel::protocol::ImageMeta;
use offload_kernel::session::{png_dimensions, validate_image};

fuzz_target!(|data: &[u8]| {
    let dims = png_dimensions(data);
    let (w, h) = dims.as_ref().map_or((1, 1), |&(w, h)| (w, h));
    let meta = ImageMeta {
        image_id: "fuzz".into(),
        selection_hash: "fuzz".into(),
        width_px: w,
        height_px: h,
        byte_len: Some(data.len() as u64),
        payload_b64: None,
    };
    let verdict = validate_image(&meta, data, 1 << 20);
    if verdict.is_ok() {
        assert!(dims.is_ok());
    }
});
