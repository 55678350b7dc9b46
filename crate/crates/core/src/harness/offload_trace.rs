//! Randomized offload traces: select, maybe pre-transmit, then offload by
//! flick or pinch-carry. The generator plays the phone client against a
//! live session, so it uploads images for exactly what the server
//! highlighted.

use base64::Engine as _;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gen::gen_dom;
use super::replay::Replayer;
use super::trace::{TraceRecord, TraceSource};
use crate::config::Config;
use crate::document::Point;
use crate::gesture::{HandSample, TouchPhase, TouchSample};
use crate::protocol::{ClientBody, ImageMeta};
use crate::session::{default_phone_pose, selection_extent, selection_hash, solid_png};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffloadTrace {
    pub text: String,
    /// Offload attempts made with the image in place.
    pub with_image: usize,
    /// Offload attempts made without a matching image.
    pub without_image: usize,
}

struct Builder {
    replayer: Replayer,
    lines: Vec<String>,
    t: u64,
}

impl Builder {
    fn push(&mut self, source: TraceSource, body: ClientBody) {
        let rec = TraceRecord {
            t: self.t,
            source,
            body,
        };
        self.lines.push(serde_json::to_string(&rec).expect("records serialize"));
        self.replayer.step(&rec);
    }

    fn touch(&mut self, id: u64, phase: TouchPhase, x: f64, y: f64) {
        let body = ClientBody::TouchSample(TouchSample {
            t: self.t,
            touch_id: id,
            phase,
            pos: Point::new(x, y),
            in_side_zone: x < 24.0,
        });
        self.push(TraceSource::Phone, body);
    }

    fn hand(&mut self, pos: Vector3<f64>, pinch: bool) {
        let body = ClientBody::HandSample(HandSample {
            t: self.t,
            pos,
            pinch,
            velocity: None,
        });
        self.push(TraceSource::Ar, body);
    }
}

pub fn gen_offload_trace(seed: u64, config: &Config) -> OffloadTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = gen_dom(seed, 60);
    let mut b = Builder {
        replayer: Replayer::new(config.clone()),
        lines: Vec::new(),
        t: 0,
    };
    let (mut with_image, mut without_image) = (0, 0);
    b.push(TraceSource::Phone, ClientBody::DocSnapshot(raw));
    b.t = 10;
    b.touch(1, TouchPhase::Down, 4.0, 320.0);

    let attempts = rng.random_range(1..=4);
    for n in 0..attempts {
        let touch_id = 10 + 2 * n as u64;
        b.t += 100;
        let (x, y) = (rng.random_range(30..780) as f64, rng.random_range(0..640) as f64);
        b.touch(touch_id, TouchPhase::Down, x, y);
        b.t += 40;
        b.touch(touch_id, TouchPhase::Up, x, y);
        let Some(sel) = b.replayer.kernel().selection().cloned() else {
            continue;
        };
        let hash = selection_hash(&sel);
        let roll: f64 = rng.random();
        let fresh = roll < 0.6;
        if roll < 0.8 {
            let doc = b.replayer.kernel().document().expect("loaded");
            let extent = selection_extent(doc, &sel);
            let (w, h) = ((extent.w.ceil() as u32).max(1), (extent.h.ceil() as u32).max(1));
            let png = solid_png(w, h, [rng.random(), rng.random(), rng.random(), 255]);
            b.t += 20;
            let meta = ImageMeta {
                image_id: format!("img-{seed}-{n}"),
                selection_hash: if fresh { hash.clone() } else { format!("{hash}-stale") },
                width_px: w,
                height_px: h,
                byte_len: Some(png.len() as u64),
                payload_b64: Some(base64::engine::general_purpose::STANDARD.encode(&png)),
            };
            b.push(TraceSource::Phone, ClientBody::SnapshotImageMeta(meta));
        }
        // An earlier attempt may already have uploaded this selection.
        if b.replayer.kernel().images().get(&hash).is_some() {
            with_image += 1;
        } else {
            without_image += 1;
        }
        b.t += 60;
        if rng.random_bool(0.5) {
            let flick_id = touch_id + 1;
            b.touch(flick_id, TouchPhase::Down, 200.0, 300.0);
            b.t += 20;
            b.touch(flick_id, TouchPhase::Move, 240.0, 300.0);
            b.t += 20;
            b.touch(flick_id, TouchPhase::Up, 300.0, 300.0);
        } else {
            let phone = default_phone_pose();
            let near = phone.to_world(&Vector3::new(0.0, 0.0, 0.05));
            let away = Vector3::new(rng.random_range(-0.8..0.8), rng.random_range(0.3..1.2), -1.2);
            b.hand(near, false);
            b.t += 20;
            b.hand(near, true);
            b.t += 400;
            b.hand(away, true);
            b.t += 600;
            b.hand(away, false);
        }
    }
    b.t += 100;
    b.touch(1, TouchPhase::Up, 4.0, 320.0);
    let mut text = b.lines.join("\n");
    text.push('\n');
    OffloadTrace {
        text,
        with_image,
        without_image,
    }
}
