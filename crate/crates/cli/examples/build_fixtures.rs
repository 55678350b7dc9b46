//! Regenerates the bundled pages and the scenario trace under `fixtures/`.
//!
//! ```text
//! cargo run -p offload-cli --example build_fixtures            # pages + trace
//! cargo run -p offload-cli --example build_fixtures -- --freeze # also the golden log
//! ```
//!
//! The scenario plays three walkthroughs back to back:
//! a trail map carried onto the table, all twelve section headers of a long
//! article flicked beside the phone (then tapped to scroll back), and a ride
//! status area pinned in view. Two items are then thrown away, one outward
//! and one back toward the phone.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use base64::Engine as _;
use nalgebra::{UnitQuaternion, Vector3};

use offload_kernel::anchoring::{anchor_world_pose, HorizontalExtent, ItemId, Pose, SurfacePlane};
use offload_kernel::document::{LayoutRect, Point, RawNode, RawSnapshot, RawViewport, ScrollState};
use offload_kernel::gesture::{HandSample, TouchPhase, TouchSample};
use offload_kernel::harness::{replay, Replayer, TraceRecord, TraceSource};
use offload_kernel::protocol::{ClientBody, ImageMeta, PoseTarget};
use offload_kernel::session::{selection_extent, selection_hash, solid_png};
use offload_kernel::Config;

const VIEWPORT: RawViewport = RawViewport { w: 390.0, h: 844.0 };

struct Page {
    nodes: Vec<RawNode>,
}

impl Page {
    fn new(page_height: f64) -> Self {
        let mut p = Page { nodes: Vec::new() };
        p.add(None, "html", &[], true, [0.0, 0.0, 390.0, page_height]);
        p
    }

    fn add(&mut self, parent: Option<u64>, tag: &str, classes: &[&str], block: bool, b: [f64; 4]) -> u64 {
        let id = self.nodes.len() as u64;
        if let Some(p) = parent {
            self.nodes[p as usize].children.push(id);
        }
        self.nodes.push(RawNode {
            id,
            tag: tag.into(),
            classes: classes.iter().map(|c| c.to_string()).collect(),
            parent,
            children: Vec::new(),
            is_block: Some(block),
            bbox: LayoutRect::new(b[0], b[1], b[2], b[3]),
            text_digest: None,
        });
        id
    }

    fn finish(self, doc_id: &str, url: &str) -> RawSnapshot {
        RawSnapshot {
            doc_id: doc_id.into(),
            url: url.into(),
            viewport: VIEWPORT,
            page_height: self.nodes[0].bbox.h,
            nodes: self.nodes,
        }
    }
}

fn hiking() -> RawSnapshot {
    let mut p = Page::new(2400.0);
    let body = p.add(Some(0), "body", &[], true, [0.0, 0.0, 390.0, 2400.0]);
    let header = p.add(Some(body), "header", &["site"], true, [0.0, 0.0, 390.0, 72.0]);
    p.add(Some(header), "h1", &["title"], true, [16.0, 12.0, 300.0, 48.0]);
    let main = p.add(Some(body), "main", &[], true, [0.0, 72.0, 390.0, 2228.0]);
    p.add(Some(main), "p", &["intro"], true, [16.0, 88.0, 358.0, 96.0]);
    let figure = p.add(Some(main), "figure", &["map"], true, [16.0, 200.0, 358.0, 320.0]);
    p.add(Some(figure), "img", &["map"], false, [16.0, 200.0, 358.0, 280.0]);
    p.add(Some(figure), "figcaption", &[], true, [16.0, 484.0, 358.0, 36.0]);
    p.add(Some(main), "h2", &["section"], true, [16.0, 540.0, 358.0, 40.0]);
    p.add(Some(main), "p", &[], true, [16.0, 596.0, 358.0, 180.0]);
    p.add(Some(main), "h2", &["section"], true, [16.0, 792.0, 358.0, 40.0]);
    p.add(Some(main), "p", &[], true, [16.0, 848.0, 358.0, 180.0]);
    let ul = p.add(Some(main), "ul", &["facts"], true, [16.0, 1044.0, 358.0, 180.0]);
    for i in 0..3 {
        p.add(Some(ul), "li", &[], true, [16.0, 1044.0 + 60.0 * i as f64, 358.0, 60.0]);
    }
    p.add(Some(body), "footer", &[], true, [0.0, 2300.0, 390.0, 100.0]);
    p.finish("hiking", "https://trails.example/eagle-peak-loop")
}

/// Section `i` of the article starts at this page y.
fn article_section_y(i: usize) -> f64 {
    140.0 + 560.0 * i as f64
}

fn article() -> RawSnapshot {
    let mut p = Page::new(6960.0);
    let body = p.add(Some(0), "body", &[], true, [0.0, 0.0, 390.0, 6960.0]);
    let header = p.add(Some(body), "header", &[], true, [0.0, 0.0, 390.0, 120.0]);
    p.add(Some(header), "h1", &[], true, [16.0, 24.0, 358.0, 72.0]);
    let article = p.add(Some(body), "article", &[], true, [0.0, 120.0, 390.0, 6740.0]);
    for i in 0..12 {
        let y = article_section_y(i);
        let section = p.add(Some(article), "section", &[], true, [0.0, y, 390.0, 540.0]);
        p.add(Some(section), "h2", &["section-title"], true, [16.0, y, 358.0, 44.0]);
        p.add(Some(section), "p", &[], true, [16.0, y + 56.0, 358.0, 220.0]);
        p.add(Some(section), "p", &[], true, [16.0, y + 288.0, 358.0, 220.0]);
    }
    p.add(Some(body), "footer", &[], true, [0.0, 6860.0, 390.0, 100.0]);
    p.finish("article", "https://news.example/long-read/city-rivers")
}

fn ride() -> RawSnapshot {
    let mut p = Page::new(844.0);
    let body = p.add(Some(0), "body", &[], true, [0.0, 0.0, 390.0, 844.0]);
    let map = p.add(Some(body), "div", &["map"], true, [0.0, 0.0, 390.0, 420.0]);
    p.add(Some(map), "img", &["map-tile"], false, [0.0, 0.0, 390.0, 420.0]);
    let status = p.add(Some(body), "section", &["status"], true, [0.0, 420.0, 390.0, 424.0]);
    p.add(Some(status), "h2", &["eta"], true, [16.0, 436.0, 358.0, 48.0]);
    p.add(Some(status), "p", &["eta-detail"], true, [16.0, 492.0, 358.0, 40.0]);
    let driver = p.add(Some(status), "div", &["driver"], true, [16.0, 548.0, 358.0, 120.0]);
    p.add(Some(driver), "img", &["avatar"], false, [28.0, 560.0, 96.0, 96.0]);
    p.add(Some(driver), "p", &["driver-name"], true, [136.0, 572.0, 226.0, 32.0]);
    p.add(Some(driver), "p", &["plate"], true, [136.0, 612.0, 226.0, 32.0]);
    p.add(Some(status), "button", &["cancel"], true, [16.0, 700.0, 358.0, 56.0]);
    p.finish("ride", "https://rides.example/trip/7Q4K")
}

pub fn head_pose() -> Pose {
    Pose::at(0.0, 1.6, 0.0)
}

/// Phone held below the eyes, screen tilted 30 degrees toward the face.
pub fn phone_pose() -> Pose {
    Pose::new(
        Vector3::new(0.0, 1.15, -0.3),
        UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 30f64.to_radians()),
    )
}

fn table() -> SurfacePlane {
    SurfacePlane {
        plane_id: "table".into(),
        height_y: 0.72,
        extent: HorizontalExtent {
            min_x: -0.6,
            min_z: -1.2,
            max_x: 0.6,
            max_z: -0.6,
        },
    }
}

fn shelf() -> SurfacePlane {
    SurfacePlane {
        plane_id: "shelf".into(),
        height_y: 1.4,
        extent: HorizontalExtent {
            min_x: 0.9,
            min_z: -1.5,
            max_x: 1.5,
            max_z: -1.1,
        },
    }
}

struct Script {
    replayer: Replayer,
    lines: Vec<String>,
    t: u64,
    colors: u8,
}

impl Script {
    fn push(&mut self, source: TraceSource, body: ClientBody) {
        let rec = TraceRecord {
            t: self.t,
            source,
            body,
        };
        self.lines.push(serde_json::to_string(&rec).unwrap());
        self.replayer.step(&rec);
    }

    fn wait(&mut self, ms: u64) {
        self.t += ms;
    }

    fn touch(&mut self, id: u64, phase: TouchPhase, x: f64, y: f64) {
        let body = ClientBody::TouchSample(TouchSample {
            t: self.t,
            touch_id: id,
            phase,
            pos: Point::new(x, y),
            in_side_zone: !(24.0..=366.0).contains(&x),
        });
        self.push(TraceSource::Phone, body);
    }

    fn tap(&mut self, id: u64, x: f64, y: f64) {
        self.touch(id, TouchPhase::Down, x, y);
        self.wait(90);
        self.touch(id, TouchPhase::Up, x, y);
    }

    fn flick(&mut self, id: u64, x: f64, y: f64) {
        self.touch(id, TouchPhase::Down, x, y);
        self.wait(30);
        self.touch(id, TouchPhase::Move, x, y - 40.0);
        self.wait(30);
        self.touch(id, TouchPhase::Up, x, y - 110.0);
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

    /// Rasterize the current selection (solid color, exact extent) and
    /// pre-transmit it inline.
    fn pretransmit(&mut self, image_id: &str) {
        let kernel = self.replayer.kernel();
        let sel = kernel.selection().expect("something is highlighted").clone();
        let extent = selection_extent(kernel.document().unwrap(), &sel);
        let (w, h) = (extent.w.round() as u32, extent.h.round() as u32);
        self.colors = self.colors.wrapping_add(67);
        let png = solid_png(w, h, [self.colors, 120, 255 - self.colors, 255]);
        let meta = ImageMeta {
            image_id: image_id.into(),
            selection_hash: selection_hash(&sel),
            width_px: w,
            height_px: h,
            byte_len: Some(png.len() as u64),
            payload_b64: Some(base64::engine::general_purpose::STANDARD.encode(&png)),
        };
        self.push(TraceSource::Phone, ClientBody::SnapshotImageMeta(meta));
    }

    fn item_position(&self, id: ItemId) -> Vector3<f64> {
        let item = self.replayer.kernel().board().get(id).unwrap();
        anchor_world_pose(&item.anchor, &phone_pose(), &head_pose()).position
    }
}

fn build_trace(config: &Config) -> String {
    let mut s = Script {
        replayer: Replayer::new(config.clone()),
        lines: Vec::new(),
        t: 0,
        colors: 0,
    };
    let phone = phone_pose();
    let head = head_pose();
    let near_phone = phone.to_world(&Vector3::new(0.0, 0.0, 0.06));

    s.push(
        TraceSource::Env,
        ClientBody::PoseUpdate {
            target: PoseTarget::Head,
            pose: head,
        },
    );
    s.push(
        TraceSource::Env,
        ClientBody::PoseUpdate {
            target: PoseTarget::Phone,
            pose: phone,
        },
    );
    s.push(
        TraceSource::Env,
        ClientBody::SurfaceSet {
            surfaces: vec![table(), shelf()],
        },
    );

    // Trail map: tap the map image, tap again to widen to the figure, carry
    // it out with a pinch and set it down on the table.
    s.wait(1000);
    s.push(TraceSource::Phone, ClientBody::DocSnapshot(hiking()));
    s.wait(500);
    s.touch(1, TouchPhase::Down, 6.0, 420.0);
    s.wait(200);
    s.tap(2, 150.0, 300.0);
    s.wait(300);
    s.tap(3, 150.0, 300.0);
    s.wait(50);
    s.pretransmit("img-trail-map");
    s.wait(400);
    s.hand(near_phone, false);
    s.wait(30);
    s.hand(near_phone, true);
    for (dt, p) in [
        (150, [0.1, 1.1, -0.45]),
        (150, [0.2, 1.05, -0.7]),
        (150, [0.25, 1.0, -0.9]),
        (150, [0.25, 0.95, -0.95]),
    ] {
        s.wait(dt);
        s.hand(Vector3::from(p), true);
    }
    s.wait(400);
    s.hand(Vector3::new(0.25, 0.95, -0.95), false);
    s.wait(300);
    s.touch(1, TouchPhase::Up, 6.0, 420.0);

    // Long article: long-press a section header to take all twelve, flick
    // them off as one panel, read on, then tap the panel to jump back.
    s.wait(2000);
    s.push(TraceSource::Phone, ClientBody::DocSnapshot(article()));
    s.wait(500);
    s.touch(1, TouchPhase::Down, 384.0, 500.0);
    s.wait(200);
    let header_y = article_section_y(0) + 20.0;
    s.touch(4, TouchPhase::Down, 100.0, header_y);
    s.wait(300);
    s.touch(4, TouchPhase::Move, 101.0, header_y);
    s.wait(250);
    s.touch(4, TouchPhase::Move, 102.0, header_y + 1.0);
    s.wait(200);
    s.touch(4, TouchPhase::Up, 102.0, header_y + 1.0);
    s.wait(50);
    s.pretransmit("img-article-headers");
    s.wait(300);
    s.flick(5, 200.0, 600.0);
    s.wait(200);
    s.touch(1, TouchPhase::Up, 384.0, 500.0);
    s.wait(3000);
    s.push(
        TraceSource::Phone,
        ClientBody::Scroll(ScrollState {
            doc_id: "article".into(),
            scroll_y: 3120.0,
        }),
    );
    s.wait(1500);
    s.push(TraceSource::Ar, ClientBody::ItemTap { item_id: ItemId(2) });

    // Ride status: rubberband the ETA and driver card, pinch it out and
    // release it in front of the face.
    s.wait(2000);
    s.push(TraceSource::Phone, ClientBody::DocSnapshot(ride()));
    s.wait(500);
    s.touch(1, TouchPhase::Down, 4.0, 300.0);
    s.wait(200);
    s.touch(6, TouchPhase::Down, 30.0, 430.0);
    s.wait(60);
    s.touch(6, TouchPhase::Move, 120.0, 520.0);
    s.wait(60);
    s.touch(6, TouchPhase::Move, 240.0, 620.0);
    s.wait(60);
    s.touch(6, TouchPhase::Move, 300.0, 672.0);
    s.wait(250);
    s.touch(6, TouchPhase::Up, 300.0, 672.0);
    s.wait(50);
    s.pretransmit("img-ride-status");
    s.wait(400);
    s.hand(near_phone, false);
    s.wait(30);
    s.hand(near_phone, true);
    let in_view = head.to_world(&Vector3::new(0.04, -0.06, -0.26));
    for p in [
        phone.to_world(&Vector3::new(0.0, 0.1, 0.12)),
        Vector3::new(0.03, 1.42, -0.22),
        in_view,
    ] {
        s.wait(150);
        s.hand(p, true);
    }
    s.wait(500);
    s.hand(in_view, false);
    s.wait(300);
    s.touch(1, TouchPhase::Up, 4.0, 300.0);

    // Clean up: throw the trail map away, push the article panel back
    // into the phone.
    s.wait(2000);
    let map = s.item_position(ItemId(1));
    s.hand(map + Vector3::new(0.0, 0.1, 0.1), false);
    s.wait(200);
    s.hand(map, false);
    s.wait(30);
    s.hand(map, true);
    s.wait(50);
    s.hand(map + Vector3::new(0.02, 0.03, -0.12), false);

    s.wait(1500);
    let panel = s.item_position(ItemId(2));
    s.hand(panel + Vector3::new(0.05, 0.0, 0.1), false);
    s.wait(200);
    s.hand(panel, false);
    s.wait(30);
    s.hand(panel, true);
    s.wait(50);
    let toward = (phone.position - panel).normalize() * 0.1;
    s.hand(panel + toward, false);

    let mut text = s.lines.join("\n");
    text.push('\n');
    text
}

fn write(path: &Path, text: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, text).unwrap();
    println!("wrote {}", path.display());
}

fn main() {
    let freeze = std::env::args().any(|a| a == "--freeze");
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let config = Config::from_toml_str(&std::fs::read_to_string(root.join("config.toml")).unwrap()).unwrap();

    for (name, page) in [("hiking", hiking()), ("article", article()), ("ride", ride())] {
        write(
            &root.join(format!("pages/{name}.json")),
            &(serde_json::to_string_pretty(&page).unwrap() + "\n"),
        );
    }
    let trace = build_trace(&config);
    write(&root.join("scenario/trace.jsonl"), &trace);

    let log = replay(&trace, &config).unwrap().to_jsonl();
    let out = if freeze {
        "scenario/golden.jsonl"
    } else {
        "scenario/candidate.jsonl"
    };
    write(&root.join(out), &log);

    let classes: BTreeSet<&str> = log
        .lines()
        .map(|l| l.split("\"body_type\":\"").nth(1).unwrap().split('"').next().unwrap())
        .collect();
    println!("{} log lines; body types: {classes:?}", log.lines().count());
}
