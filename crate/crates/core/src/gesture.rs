//! Gesture recognition for the offloading quasimode.
//!
//! Touches come from the phone in viewport pixels; hand samples come from
//! the AR side in world meters. A thumb held on the side strip keeps the
//! recognizer in offloading mode; lifting it drops back to browsing and
//! cancels any half-finished selection gesture.

use std::collections::{HashSet, VecDeque};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anchoring::RegionId;
use crate::config::GestureConfig;
use crate::document::{LayoutRect, Point};

pub type TouchId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TouchPhase {
    Down,
    Move,
    Up,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchSample {
    pub t: u64,
    pub touch_id: TouchId,
    pub phase: TouchPhase,
    pub pos: Point,
    pub in_side_zone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandSample {
    pub t: u64,
    pub pos: Vector3<f64>,
    pub pinch: bool,
    /// Derived from consecutive positions when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vector3<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Browsing,
    Offloading,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModeState {
    pub mode: Mode,
    pub activation_touch: Option<TouchId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum GestureEvent {
    QuasimodeEnter,
    QuasimodeExit,
    Tap {
        pos: Point,
    },
    LongPress {
        pos: Point,
    },
    DragStart {
        rect: LayoutRect,
    },
    DragUpdate {
        rect: LayoutRect,
    },
    DragEnd {
        rect: LayoutRect,
    },
    FlickOffload {
        start_pos: Point,
        velocity: Point,
    },
    PinchGrab {
        pos: Vector3<f64>,
    },
    PinchMove {
        pos: Vector3<f64>,
        region: RegionId,
    },
    PinchRelease {
        pos: Vector3<f64>,
        velocity: Vector3<f64>,
        region: RegionId,
    },
    ThrowDiscard {
        pos: Vector3<f64>,
        direction: Vector3<f64>,
    },
}

impl GestureEvent {
    /// Events that select or offload phone content. These must only ever
    /// appear while the quasimode is held.
    pub fn is_selection_gesture(&self) -> bool {
        matches!(
            self,
            GestureEvent::Tap { .. }
                | GestureEvent::LongPress { .. }
                | GestureEvent::DragStart { .. }
                | GestureEvent::DragUpdate { .. }
                | GestureEvent::DragEnd { .. }
                | GestureEvent::FlickOffload { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GestureError {
    #[error("sample at t={t} is older than the previous sample at t={last}")]
    OutOfOrder { t: u64, last: u64 },
    #[error("touch {touch_id}: {phase:?} without a matching down")]
    UnknownTouch { touch_id: TouchId, phase: TouchPhase },
    #[error("touch {0}: down while already down")]
    DuplicateDown(TouchId),
    #[error("sample has non-finite coordinates")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ActionPhase {
    Pending,
    Dragging,
    LongPressed,
}

#[derive(Debug, Clone)]
struct ActionTouch {
    id: TouchId,
    start_t: u64,
    start_pos: Point,
    phase: ActionPhase,
    /// Recent (t, pos) samples for release-velocity estimation.
    history: VecDeque<(u64, Point)>,
}

impl ActionTouch {
    fn displacement(&self, p: Point) -> f64 {
        (p.x - self.start_pos.x).hypot(p.y - self.start_pos.y)
    }

    fn rect_to(&self, p: Point) -> LayoutRect {
        LayoutRect::from_corners(self.start_pos, p)
    }

    fn record(&mut self, t: u64, p: Point, window: u64) {
        self.history.push_back((t, p));
        while self.history.len() >= 2 && self.history[1].0 + window < t {
            self.history.pop_front();
        }
    }

    /// Finite-difference velocity between the release sample and the oldest
    /// earlier sample inside the look-back window (or the newest earlier
    /// sample if none is that recent).
    fn release_velocity(&self, t: u64, p: Point, window: u64) -> Point {
        let mut earlier = self.history.iter().filter(|(ts, _)| *ts < t);
        let reference = earlier
            .clone()
            .find(|(ts, _)| ts + window >= t)
            .or_else(|| earlier.next_back());
        match reference {
            Some(&(t0, p0)) => {
                let dt = (t - t0) as f64 / 1000.0;
                Point::new((p.x - p0.x) / dt, (p.y - p0.y) / dt)
            }
            None => Point::new(0.0, 0.0),
        }
    }
}

/// Per-session gesture state machine.
#[derive(Debug, Clone)]
pub struct GestureEngine {
    config: GestureConfig,
    mode: ModeState,
    live_touches: HashSet<TouchId>,
    action: Option<ActionTouch>,
    last_touch_t: Option<u64>,
    last_hand: Option<(u64, Vector3<f64>)>,
    pinched: bool,
    grabbing: bool,
}

impl GestureEngine {
    pub fn new(config: GestureConfig) -> Self {
        Self {
            config,
            mode: ModeState::default(),
            live_touches: HashSet::new(),
            action: None,
            last_touch_t: None,
            last_hand: None,
            pinched: false,
            grabbing: false,
        }
    }

    pub fn mode(&self) -> ModeState {
        self.mode
    }

    pub fn is_offloading(&self) -> bool {
        self.mode.mode == Mode::Offloading
    }

    /// Whether a pinch is currently holding something.
    pub fn is_grabbing(&self) -> bool {
        self.grabbing
    }

    pub fn feed_touch(&mut self, s: &TouchSample) -> Result<Vec<GestureEvent>, GestureError> {
        if !(s.pos.x.is_finite() && s.pos.y.is_finite()) {
            return Err(GestureError::NonFinite);
        }
        if let Some(last) = self.last_touch_t {
            if s.t < last {
                return Err(GestureError::OutOfOrder { t: s.t, last });
            }
        }
        match s.phase {
            TouchPhase::Down if self.live_touches.contains(&s.touch_id) => {
                return Err(GestureError::DuplicateDown(s.touch_id));
            }
            TouchPhase::Move | TouchPhase::Up if !self.live_touches.contains(&s.touch_id) => {
                return Err(GestureError::UnknownTouch {
                    touch_id: s.touch_id,
                    phase: s.phase,
                });
            }
            _ => {}
        }
        self.last_touch_t = Some(s.t);

        let mut out = Vec::new();
        match s.phase {
            TouchPhase::Down => {
                self.live_touches.insert(s.touch_id);
                if !self.is_offloading() && s.in_side_zone {
                    self.mode = ModeState {
                        mode: Mode::Offloading,
                        activation_touch: Some(s.touch_id),
                    };
                    out.push(GestureEvent::QuasimodeEnter);
                } else if self.is_offloading() && self.action.is_none() {
                    let mut action = ActionTouch {
                        id: s.touch_id,
                        start_t: s.t,
                        start_pos: s.pos,
                        phase: ActionPhase::Pending,
                        history: VecDeque::new(),
                    };
                    action.record(s.t, s.pos, self.config.velocity_window_ms);
                    self.action = Some(action);
                }
            }
            TouchPhase::Move => self.action_move(s, &mut out),
            TouchPhase::Up => {
                self.live_touches.remove(&s.touch_id);
                if self.mode.activation_touch == Some(s.touch_id) {
                    self.mode = ModeState::default();
                    self.action = None;
                    out.push(GestureEvent::QuasimodeExit);
                } else {
                    self.action_up(s, &mut out);
                }
            }
        }
        Ok(out)
    }

    fn action_move(&mut self, s: &TouchSample, out: &mut Vec<GestureEvent>) {
        let cfg = &self.config;
        let Some(action) = self.action.as_mut().filter(|a| a.id == s.touch_id) else {
            return;
        };
        action.record(s.t, s.pos, cfg.velocity_window_ms);
        match action.phase {
            ActionPhase::Pending => {
                if action.displacement(s.pos) > cfg.slop_px {
                    action.phase = ActionPhase::Dragging;
                    out.push(GestureEvent::DragStart {
                        rect: action.rect_to(s.pos),
                    });
                } else if s.t - action.start_t >= cfg.long_press_ms {
                    action.phase = ActionPhase::LongPressed;
                    out.push(GestureEvent::LongPress { pos: action.start_pos });
                }
            }
            ActionPhase::Dragging => out.push(GestureEvent::DragUpdate {
                rect: action.rect_to(s.pos),
            }),
            ActionPhase::LongPressed => {}
        }
    }

    fn action_up(&mut self, s: &TouchSample, out: &mut Vec<GestureEvent>) {
        let cfg = &self.config;
        let Some(mut action) = self.action.take_if(|a| a.id == s.touch_id) else {
            return;
        };
        let held = s.t - action.start_t;
        if action.phase == ActionPhase::Pending && action.displacement(s.pos) > cfg.slop_px {
            action.phase = ActionPhase::Dragging;
            out.push(GestureEvent::DragStart {
                rect: action.rect_to(s.pos),
            });
        }
        match action.phase {
            ActionPhase::Pending => {
                if held <= cfg.tap_max_ms {
                    out.push(GestureEvent::Tap { pos: action.start_pos });
                } else if held >= cfg.long_press_ms {
                    out.push(GestureEvent::LongPress { pos: action.start_pos });
                }
                // Between the tap and long-press thresholds nothing fires.
            }
            ActionPhase::Dragging => {
                let v = action.release_velocity(s.t, s.pos, cfg.velocity_window_ms);
                if v.x.hypot(v.y) >= cfg.flick_min_px_per_s {
                    out.push(GestureEvent::FlickOffload {
                        start_pos: action.start_pos,
                        velocity: v,
                    });
                } else {
                    out.push(GestureEvent::DragEnd {
                        rect: action.rect_to(s.pos),
                    });
                }
            }
            ActionPhase::LongPressed => {}
        }
    }

    /// Feed one hand sample. `over_item` tells whether the hand is on an
    /// offloaded item, which makes a pinch grab it even while browsing.
    pub fn feed_hand(
        &mut self,
        s: &HandSample,
        region: RegionId,
        over_item: bool,
    ) -> Result<Vec<GestureEvent>, GestureError> {
        let finite = |v: &Vector3<f64>| v.iter().all(|c| c.is_finite());
        if !finite(&s.pos) || s.velocity.as_ref().is_some_and(|v| !finite(v)) {
            return Err(GestureError::NonFinite);
        }
        if let Some((last, _)) = self.last_hand {
            if s.t < last {
                return Err(GestureError::OutOfOrder { t: s.t, last });
            }
        }
        let velocity = s.velocity.unwrap_or_else(|| match self.last_hand {
            Some((t0, p0)) if s.t > t0 => (s.pos - p0) / ((s.t - t0) as f64 / 1000.0),
            _ => Vector3::zeros(),
        });
        let moved = self.last_hand.is_none_or(|(_, p)| p != s.pos);
        self.last_hand = Some((s.t, s.pos));

        let mut out = Vec::new();
        match (self.pinched, s.pinch) {
            (false, true) => {
                if self.is_offloading() || over_item {
                    self.grabbing = true;
                    out.push(GestureEvent::PinchGrab { pos: s.pos });
                }
            }
            (true, true) if self.grabbing && moved => {
                out.push(GestureEvent::PinchMove { pos: s.pos, region });
            }
            (true, false) if self.grabbing => {
                self.grabbing = false;
                let speed = velocity.norm();
                if speed >= self.config.throw_min_m_per_s {
                    out.push(GestureEvent::ThrowDiscard {
                        pos: s.pos,
                        direction: velocity / speed,
                    });
                } else {
                    out.push(GestureEvent::PinchRelease {
                        pos: s.pos,
                        velocity,
                        region,
                    });
                }
            }
            _ => {}
        }
        self.pinched = s.pinch;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn touch(t: u64, id: TouchId, phase: TouchPhase, x: f64, y: f64, side: bool) -> TouchSample {
        TouchSample {
            t,
            touch_id: id,
            phase,
            pos: Point::new(x, y),
            in_side_zone: side,
        }
    }

    fn engine() -> GestureEngine {
        GestureEngine::new(GestureConfig::default())
    }

    fn offloading() -> GestureEngine {
        let mut g = engine();
        g.feed_touch(&touch(0, 1, TouchPhase::Down, 2.0, 300.0, true)).unwrap();
        g
    }

    fn feed_all(g: &mut GestureEngine, samples: &[TouchSample]) -> Vec<GestureEvent> {
        samples.iter().flat_map(|s| g.feed_touch(s).unwrap()).collect()
    }

    #[test]
    fn initial_mode_is_browsing() {
        assert_eq!(engine().mode(), ModeState::default());
        assert_eq!(engine().mode().mode, Mode::Browsing);
    }

    #[test]
    fn quasimode_enter_exit() {
        let mut g = engine();
        let ev = g.feed_touch(&touch(0, 1, TouchPhase::Down, 2.0, 300.0, true)).unwrap();
        assert_eq!(ev, vec![GestureEvent::QuasimodeEnter]);
        assert_eq!(g.mode().mode, Mode::Offloading);
        assert_eq!(g.mode().activation_touch, Some(1));
        let ev = g.feed_touch(&touch(2000, 1, TouchPhase::Up, 2.0, 300.0, true)).unwrap();
        assert_eq!(ev, vec![GestureEvent::QuasimodeExit]);
        assert_eq!(g.mode().mode, Mode::Browsing);
    }

    #[test]
    fn tap_under_thresholds() {
        let mut g = offloading();
        let ev = feed_all(
            &mut g,
            &[
                touch(0, 2, TouchPhase::Down, 100.0, 100.0, false),
                touch(250, 2, TouchPhase::Up, 103.0, 101.0, false),
            ],
        );
        assert_eq!(
            ev,
            vec![GestureEvent::Tap {
                pos: Point::new(100.0, 100.0)
            }]
        );
    }

    #[test]
    fn long_press_fires_at_threshold_crossing() {
        let mut g = offloading();
        let ev = feed_all(
            &mut g,
            &[
                touch(0, 2, TouchPhase::Down, 100.0, 100.0, false),
                touch(400, 2, TouchPhase::Move, 101.0, 100.0, false),
                touch(520, 2, TouchPhase::Move, 102.0, 100.0, false),
            ],
        );
        assert_eq!(
            ev,
            vec![GestureEvent::LongPress {
                pos: Point::new(100.0, 100.0)
            }]
        );
        let ev = g
            .feed_touch(&touch(900, 2, TouchPhase::Up, 102.0, 100.0, false))
            .unwrap();
        assert!(ev.is_empty());
    }

    #[test]
    fn long_press_observed_only_at_release() {
        let mut g = offloading();
        let ev = feed_all(
            &mut g,
            &[
                touch(0, 2, TouchPhase::Down, 100.0, 100.0, false),
                touch(700, 2, TouchPhase::Up, 100.0, 100.0, false),
            ],
        );
        assert_eq!(
            ev,
            vec![GestureEvent::LongPress {
                pos: Point::new(100.0, 100.0)
            }]
        );
    }

    /// Independent finite-difference release speed for the flick example.
    #[test]
    fn flick_release_speed_matches_finite_difference() {
        let samples = [
            touch(0, 2, TouchPhase::Down, 100.0, 100.0, false),
            touch(50, 2, TouchPhase::Move, 100.0, 580.0, false),
            touch(150, 2, TouchPhase::Up, 100.0, 700.0, false),
        ];
        // Oldest sample within 100 ms of release is t=50.
        let oracle_speed = (700.0f64 - 580.0) / ((150.0 - 50.0) / 1000.0);
        assert_eq!(oracle_speed, 1200.0);

        let mut g = offloading();
        let ev = feed_all(&mut g, &samples);
        assert!(matches!(ev[0], GestureEvent::DragStart { .. }));
        match ev.last().unwrap() {
            GestureEvent::FlickOffload { start_pos, velocity } => {
                assert_eq!(*start_pos, Point::new(100.0, 100.0));
                assert!((velocity.x.hypot(velocity.y) - oracle_speed).abs() < 1e-9);
            }
            other => panic!("expected flick, got {other:?}"),
        }
        assert_eq!(ev.len(), 2);
    }

    #[test]
    fn drag_with_updates_then_slow_release() {
        let mut g = offloading();
        let ev = feed_all(
            &mut g,
            &[
                touch(0, 2, TouchPhase::Down, 100.0, 100.0, false),
                touch(100, 2, TouchPhase::Move, 100.0, 130.0, false),
                touch(200, 2, TouchPhase::Move, 150.0, 200.0, false),
                touch(400, 2, TouchPhase::Move, 150.0, 210.0, false),
                touch(600, 2, TouchPhase::Up, 150.0, 210.0, false),
            ],
        );
        assert_eq!(
            ev,
            vec![
                GestureEvent::DragStart {
                    rect: LayoutRect::new(100.0, 100.0, 0.0, 30.0)
                },
                GestureEvent::DragUpdate {
                    rect: LayoutRect::new(100.0, 100.0, 50.0, 100.0)
                },
                GestureEvent::DragUpdate {
                    rect: LayoutRect::new(100.0, 100.0, 50.0, 110.0)
                },
                GestureEvent::DragEnd {
                    rect: LayoutRect::new(100.0, 100.0, 50.0, 110.0)
                },
            ]
        );
    }

    #[test]
    fn browsing_touches_pass_through() {
        let mut g = engine();
        let ev = feed_all(
            &mut g,
            &[
                touch(0, 2, TouchPhase::Down, 100.0, 100.0, false),
                touch(50, 2, TouchPhase::Move, 100.0, 400.0, false),
                touch(60, 2, TouchPhase::Up, 100.0, 700.0, false),
            ],
        );
        assert!(ev.is_empty());
    }

    #[test]
    fn exiting_quasimode_cancels_action() {
        let mut g = offloading();
        let ev = feed_all(
            &mut g,
            &[
                touch(10, 2, TouchPhase::Down, 100.0, 100.0, false),
                touch(20, 2, TouchPhase::Move, 100.0, 150.0, false),
                touch(30, 1, TouchPhase::Up, 2.0, 300.0, true),
                touch(40, 2, TouchPhase::Up, 100.0, 700.0, false),
            ],
        );
        assert!(matches!(ev[0], GestureEvent::DragStart { .. }));
        assert_eq!(ev[1..], [GestureEvent::QuasimodeExit]);
    }

    #[test]
    fn rejects_bad_streams() {
        let mut g = engine();
        g.feed_touch(&touch(10, 1, TouchPhase::Down, 0.0, 0.0, false)).unwrap();
        assert_eq!(
            g.feed_touch(&touch(5, 1, TouchPhase::Up, 0.0, 0.0, false)),
            Err(GestureError::OutOfOrder { t: 5, last: 10 })
        );
        assert!(matches!(
            g.feed_touch(&touch(20, 9, TouchPhase::Move, 0.0, 0.0, false)),
            Err(GestureError::UnknownTouch { touch_id: 9, .. })
        ));
        assert_eq!(
            g.feed_touch(&touch(20, 1, TouchPhase::Down, 0.0, 0.0, false)),
            Err(GestureError::DuplicateDown(1))
        );
        // Rejected samples leave state untouched.
        assert!(g
            .feed_touch(&touch(30, 1, TouchPhase::Up, 0.0, 0.0, false))
            .unwrap()
            .is_empty());
    }

    fn hand(t: u64, pos: [f64; 3], pinch: bool, vel: Option<[f64; 3]>) -> HandSample {
        HandSample {
            t,
            pos: Vector3::from(pos),
            pinch,
            velocity: vel.map(Vector3::from),
        }
    }

    #[test]
    fn pinch_carry_below_throw_threshold() {
        let mut g = offloading();
        let r = RegionId::Phone;
        let mut ev = Vec::new();
        ev.extend(g.feed_hand(&hand(0, [0.1, 1.2, -0.3], true, None), r, false).unwrap());
        ev.extend(g.feed_hand(&hand(500, [0.3, 1.2, -0.3], true, None), r, false).unwrap());
        ev.extend(
            g.feed_hand(&hand(1000, [0.5, 1.2, -0.3], true, None), r, false)
                .unwrap(),
        );
        ev.extend(
            g.feed_hand(&hand(1100, [0.5, 1.2, -0.3], false, Some([0.2, 0.0, 0.0])), r, false)
                .unwrap(),
        );
        assert!(matches!(ev[0], GestureEvent::PinchGrab { .. }));
        assert!(matches!(ev[1], GestureEvent::PinchMove { .. }));
        assert!(matches!(ev[2], GestureEvent::PinchMove { .. }));
        assert!(matches!(ev[3], GestureEvent::PinchRelease { .. }));
    }

    #[test]
    fn throw_threshold_inclusive_and_direction() {
        for (vel, throws) in [
            ([0.0, 0.0, -2.0], true),
            ([0.0, 1.2, 0.0], true),
            ([0.0, 0.0, 1.19], false),
        ] {
            let mut g = offloading();
            g.feed_hand(&hand(0, [0.0, 1.0, 0.0], true, None), RegionId::World, false)
                .unwrap();
            let ev = g
                .feed_hand(&hand(10, [0.0, 1.0, 0.0], false, Some(vel)), RegionId::World, false)
                .unwrap();
            match (&ev[0], throws) {
                (GestureEvent::ThrowDiscard { direction, .. }, true) => {
                    let expect = Vector3::from(vel).normalize();
                    assert!((direction - expect).norm() < 1e-12);
                }
                (GestureEvent::PinchRelease { .. }, false) => {}
                (other, _) => panic!("unexpected {other:?} for {vel:?}"),
            }
        }
    }

    #[test]
    fn pinch_over_item_grabs_while_browsing() {
        let mut g = engine();
        let ev = g
            .feed_hand(&hand(0, [0.0, 1.0, 0.0], true, None), RegionId::World, false)
            .unwrap();
        assert!(ev.is_empty());
        g.feed_hand(&hand(10, [0.0, 1.0, 0.0], false, None), RegionId::World, false)
            .unwrap();
        let ev = g
            .feed_hand(&hand(20, [0.0, 1.0, 0.0], true, None), RegionId::World, true)
            .unwrap();
        assert_eq!(
            ev,
            vec![GestureEvent::PinchGrab {
                pos: Vector3::new(0.0, 1.0, 0.0)
            }]
        );
    }

    #[test]
    fn derived_hand_velocity() {
        let mut g = offloading();
        g.feed_hand(&hand(0, [0.0, 1.0, 0.0], true, None), RegionId::World, false)
            .unwrap();
        let ev = g
            .feed_hand(&hand(100, [0.0, 1.0, -0.2], false, None), RegionId::World, false)
            .unwrap();
        // 0.2 m in 0.1 s = 2 m/s, above the throw threshold.
        assert!(matches!(ev[0], GestureEvent::ThrowDiscard { .. }));
    }

    #[derive(Debug, Clone)]
    enum Step {
        Down { side: bool },
        Move { dx: f64, dy: f64 },
        Up,
    }

    fn step() -> impl Strategy<Value = (u8, u64, Step)> {
        (
            0u8..3,
            0u64..400,
            prop_oneof![
                any::<bool>().prop_map(|side| Step::Down { side }),
                (-50.0..50.0f64, -300.0..300.0f64).prop_map(|(dx, dy)| Step::Move { dx, dy }),
                Just(Step::Up),
            ],
        )
    }

    proptest! {
        #[test]
        fn quasimode_safety_and_alternation(steps in proptest::collection::vec(step(), 0..80)) {
            let mut g = engine();
            let mut t = 0;
            let mut live: std::collections::HashMap<u64, Point> = Default::default();
            let mut offloading = false;
            for (id, dt, st) in steps {
                let id = id as u64;
                t += dt;
                let sample = match st {
                    Step::Down { side } if !live.contains_key(&id) => {
                        let p = Point::new(if side { 4.0 } else { 200.0 }, 300.0);
                        live.insert(id, p);
                        touch(t, id, TouchPhase::Down, p.x, p.y, side)
                    }
                    Step::Move { dx, dy } if live.contains_key(&id) => {
                        let p = live.get_mut(&id).unwrap();
                        *p = Point::new(p.x + dx, p.y + dy);
                        touch(t, id, TouchPhase::Move, p.x, p.y, false)
                    }
                    Step::Up if live.contains_key(&id) => {
                        let p = live.remove(&id).unwrap();
                        touch(t, id, TouchPhase::Up, p.x, p.y, false)
                    }
                    _ => continue,
                };
                for ev in g.feed_touch(&sample).unwrap() {
                    match ev {
                        GestureEvent::QuasimodeEnter => { prop_assert!(!offloading); offloading = true; }
                        GestureEvent::QuasimodeExit => { prop_assert!(offloading); offloading = false; }
                        e => prop_assert!(!e.is_selection_gesture() || offloading, "{e:?} while browsing"),
                    }
                }
                prop_assert_eq!(offloading, g.is_offloading());
            }
        }
    }
}
