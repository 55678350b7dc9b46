//! Runs the checked-in fuzz seeds through the fuzz entry points on stable,
//! with the verdict each seed is expected to get.

use std::fs;
use std::path::PathBuf;

use offload_kernel::document::ingest_snapshot_json;
use offload_kernel::harness::{parse_trace, replay};
use offload_kernel::protocol::{decode_client_message, ImageMeta, Role};
use offload_kernel::session::{png_dimensions, validate_image, SessionKernel};
use offload_kernel::Config;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(b: &[u8]) -> &str {
    std::str::from_utf8(b).unwrap()
}

#[test]
fn ingest_snapshot_seeds() {
    for (name, data) in seeds("ingest_snapshot") {
        let r = ingest_snapshot_json(&data);
        assert_eq!(r.is_ok(), !name.contains("cycle"), "{name}: {:?}", r.err());
    }
}

#[test]
fn parse_trace_seeds() {
    for (name, data) in seeds("parse_trace") {
        let r = parse_trace(text(&data));
        assert_eq!(r.is_ok(), !name.contains("backwards"), "{name}");
    }
}

#[test]
fn decode_message_seeds() {
    for (name, data) in seeds("decode_message") {
        assert!(decode_client_message(text(&data)).is_ok(), "{name}");
        let mut kernel = SessionKernel::new("fuzz", Config::default());
        let (phone, _) = kernel.join(Role::Phone, 0).unwrap();
        let (ar, _) = kernel.join(Role::Ar, 0).unwrap();
        kernel.route_text(phone, 1, text(&data), None);
        kernel.route_text(ar, 2, text(&data), None);
    }
}

#[test]
fn snapshot_image_seeds() {
    for (name, data) in seeds("snapshot_image") {
        let dims = png_dimensions(&data);
        assert_eq!(dims.is_ok(), !name.contains("truncated"), "{name}");
        let (w, h) = dims.clone().unwrap_or((1, 1));
        let meta = ImageMeta {
            image_id: "seed".into(),
            selection_hash: "seed".into(),
            width_px: w,
            height_px: h,
            byte_len: Some(data.len() as u64),
            payload_b64: None,
        };
        assert_eq!(validate_image(&meta, &data, 1 << 20).is_ok(), dims.is_ok(), "{name}");
    }
}

#[test]
fn config_seeds() {
    for (name, data) in seeds("config") {
        assert!(Config::from_toml_str(text(&data)).is_ok(), "{name}");
    }
}

#[test]
fn replay_seeds() {
    let config = Config::default();
    for (name, data) in seeds("replay") {
        let a = replay(text(&data), &config).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!a.entries.is_empty(), "{name}");
        assert_eq!(a.to_jsonl(), replay(text(&data), &config).unwrap().to_jsonl());
    }
}
