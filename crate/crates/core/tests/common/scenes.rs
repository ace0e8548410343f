//! Random scenes, guard programs, and a brute-force model of the trigger
//! lifecycle to check replays against.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use snapscript::detector::TraceFrame;
use snapscript::replay::{replay, Anchor, ReplayOptions};
use snapscript::{make_bbox, Detection, EventMsg, SceneTrace};

use super::oracle::{dist2_x4, in_by_raster, on_by_integers, IBox};

pub const CATEGORIES: &[&str] = &["mouse", "book", "cup"];
const SIZE: i64 = 200;

#[derive(Debug, Clone)]
pub enum Guard {
    Lit(bool),
    Visible(usize),
    /// On(a, b) with theta = q / 4; `None` keeps the default.
    On(usize, usize, Option<i64>),
    In(usize, usize, i64),
    /// Distance(a, b) < n + 0.25
    Near(usize, usize, i64),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

fn st(i: usize) -> String {
    format!("@state(\"{}\")", CATEGORIES[i])
}

impl Guard {
    pub fn source(&self) -> String {
        match self {
            Guard::Lit(b) => if *b { "True" } else { "False" }.into(),
            Guard::Visible(a) => format!("Visible({})", st(*a)),
            Guard::On(a, b, None) => format!("On({}, {})", st(*a), st(*b)),
            Guard::On(a, b, Some(q)) => format!("On({}, {}, {})", st(*a), st(*b), *q as f64 / 4.0),
            Guard::In(a, b, e) => format!("In({}, {}, {e})", st(*a), st(*b)),
            Guard::Near(a, b, n) => format!("Distance({}, {}) < {n}.25", st(*a), st(*b)),
            Guard::Not(g) => format!("not ({})", g.source()),
            Guard::And(l, r) => format!("({}) and ({})", l.source(), r.source()),
            Guard::Or(l, r) => format!("({}) or ({})", l.source(), r.source()),
        }
    }

    /// `Err` where the runtime must raise (distance to an unseen object).
    pub fn eval(&self, scene: &[Option<IBox>]) -> Result<bool, ()> {
        Ok(match self {
            Guard::Lit(b) => *b,
            Guard::Visible(a) => scene[*a].is_some(),
            Guard::On(a, b, q) => match (scene[*a], scene[*b]) {
                (Some(x), Some(y)) => on_by_integers(x, y, q.unwrap_or(2), 4),
                _ => false,
            },
            Guard::In(a, b, e) => match (scene[*a], scene[*b]) {
                (Some(x), Some(y)) => in_by_raster(x, y, *e),
                _ => false,
            },
            Guard::Near(a, b, n) => match (scene[*a], scene[*b]) {
                // d < n + 1/4  <=>  16 d^2 < (4n + 1)^2
                (Some(x), Some(y)) => 4 * dist2_x4(x, y) < (4 * n + 1).pow(2),
                _ => return Err(()),
            },
            Guard::Not(g) => !g.eval(scene)?,
            Guard::And(l, r) => l.eval(scene)? && r.eval(scene)?,
            Guard::Or(l, r) => l.eval(scene)? || r.eval(scene)?,
        })
    }

    pub fn program(&self) -> String {
        format!("if {}:\n    play(\"chime\")\n", self.source())
    }
}

fn random_guard(rng: &mut ChaCha8Rng, depth: u32) -> Guard {
    let n = CATEGORIES.len();
    if depth == 0 || rng.random_bool(0.4) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        return match rng.random_range(0..10) {
            0 => Guard::Lit(rng.random_bool(0.5)),
            1 | 2 => Guard::Visible(a),
            3..=5 => Guard::On(a, b, rng.random_bool(0.5).then(|| rng.random_range(1..=4))),
            6 | 7 => Guard::In(a, b, rng.random_range(0..6)),
            _ => Guard::Near(a, b, rng.random_range(10..150)),
        };
    }
    match rng.random_range(0..3) {
        0 => Guard::Not(Box::new(random_guard(rng, depth - 1))),
        1 => Guard::And(Box::new(random_guard(rng, depth - 1)), Box::new(random_guard(rng, depth - 1))),
        _ => Guard::Or(Box::new(random_guard(rng, depth - 1)), Box::new(random_guard(rng, depth - 1))),
    }
}

fn random_box(rng: &mut ChaCha8Rng) -> IBox {
    let (w, h) = (rng.random_range(4..80), rng.random_range(4..80));
    let (x, y) = (rng.random_range(0..=SIZE - w), rng.random_range(0..=SIZE - h));
    [x, y, x + w, y + h]
}

/// A box that usually rests on `base`.
fn box_on(rng: &mut ChaCha8Rng, base: IBox) -> IBox {
    let w = rng.random_range(2..=(base[2] - base[0]).max(2));
    let h = rng.random_range(2..=(base[3] - base[1]).max(2));
    let x = rng.random_range(base[0]..=base[2] - 1).min(SIZE - w);
    let bottom = rng.random_range(base[1]..=base[3]).max(h);
    [x, bottom - h, x + w, bottom]
}

/// A random trace whose per-category boxes persist for a few frames at a
/// time. Some frames hold a second, lower-confidence detection per category.
pub fn random_trace(rng: &mut ChaCha8Rng) -> SceneTrace {
    let mut scene: Vec<Option<IBox>> = vec![None; CATEGORIES.len()];
    let mut frames = Vec::new();
    let mut t = rng.random_range(0..500u64);
    for frame_id in 0..rng.random_range(20..80u64) {
        for i in 0..scene.len() {
            if rng.random_bool(0.3) {
                scene[i] = if rng.random_bool(0.25) {
                    None
                } else if i != 1 && rng.random_bool(0.4) && scene[1].is_some() {
                    Some(box_on(rng, scene[1].unwrap()))
                } else {
                    Some(random_box(rng))
                };
            }
        }
        let mut detections = Vec::new();
        for (i, b) in scene.iter().enumerate() {
            let Some(b) = b else { continue };
            let conf = *[0.9, 0.6].choose(rng).unwrap();
            detections.push(det(CATEGORIES[i], *b, conf));
            if rng.random_bool(0.15) {
                let decoy = random_box(rng);
                let decoy_conf = if rng.random_bool(0.5) { conf } else { 0.3 };
                let at = if rng.random_bool(0.5) { detections.len() } else { detections.len() - 1 };
                detections.insert(at, det(CATEGORIES[i], decoy, decoy_conf));
            }
        }
        frames.push(TraceFrame { frame_id, t_ms: t, detections });
        t += rng.random_range(50..3000);
    }
    SceneTrace {
        width: SIZE as u32,
        height: SIZE as u32,
        frames,
    }
}

pub fn det(category: &str, b: IBox, confidence: f64) -> Detection {
    Detection::new(category, make_bbox(b[0] as f64, b[1] as f64, b[2] as f64, b[3] as f64).unwrap())
        .with_confidence(confidence)
}

/// Highest-confidence detection per category, the earliest one on ties.
pub fn resolve_scene(detections: &[Detection]) -> Vec<Option<IBox>> {
    CATEGORIES
        .iter()
        .map(|cat| {
            let mut best: Option<&Detection> = None;
            for d in detections.iter().filter(|d| d.category == *cat) {
                if best.is_none_or(|b| d.confidence > b.confidence) {
                    best = Some(d);
                }
            }
            best.map(|d| {
                let c = d.bbox.corners();
                [c[0] as i64, c[1] as i64, c[2] as i64, c[3] as i64]
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Case {
    pub trace: SceneTrace,
    pub guard: Guard,
    pub anchor: usize,
    pub lifespan_min: f64,
    pub max_executions: u32,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    Case {
        trace: random_trace(rng),
        guard: random_guard(rng, 3),
        anchor: rng.random_range(0..CATEGORIES.len()),
        lifespan_min: *[0.25, 0.5, 1.0, 60.0].choose(rng).unwrap(),
        max_executions: rng.random_range(1..=5),
    }
}

/// What the brute-force model predicts for one case.
#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    /// (event type, t_ms) in emission order, attach event excluded.
    pub events: Vec<(&'static str, u64)>,
    /// Rising edges of the guard over anchor-visible frames, counting from
    /// an initial false, ignoring budget and lifespan.
    pub rising_edges: usize,
}

pub fn brute_force(case: &Case) -> Expected {
    let expires_at = (case.lifespan_min * 60_000.0).ceil() as u64;
    let mut events = Vec::new();
    let (mut armed, mut used, mut alive) = (true, 0, true);
    let (mut prev, mut rising_edges) = (false, 0);
    for f in &case.trace.frames {
        if alive && f.t_ms >= expires_at {
            events.push(("expired", f.t_ms));
            alive = false;
        }
        let scene = resolve_scene(&f.detections);
        if scene[case.anchor].is_none() {
            continue;
        }
        let signal = case.guard.eval(&scene);
        if let Ok(s) = signal {
            if s && !prev {
                rising_edges += 1;
            }
            prev = s;
        }
        if !alive {
            continue;
        }
        match signal {
            Err(()) => events.push(("console", f.t_ms)),
            Ok(true) if armed => {
                events.push(("triggered", f.t_ms));
                used += 1;
                armed = false;
                if used == case.max_executions {
                    events.push(("exhausted", f.t_ms));
                    alive = false;
                }
            }
            Ok(true) => {}
            Ok(false) => armed = true,
        }
    }
    Expected { events, rising_edges }
}

pub fn run_case(case: &Case) -> Vec<EventMsg> {
    let opts = ReplayOptions::new(
        Anchor::Category(CATEGORIES[case.anchor].into()),
        case.lifespan_min,
        case.max_executions,
    );
    replay(&case.trace, &case.guard.program(), &opts).expect("replay")
}

pub fn summarize(events: &[EventMsg]) -> Vec<(&'static str, u64)> {
    events
        .iter()
        .filter(|e| !matches!(e, EventMsg::AttachmentChanged { .. }))
        .map(|e| (e.type_name(), e.t_ms()))
        .collect()
}

/// One grid cell: the anchor (`book`) is always in view and `cup` blinks,
/// visible for `period` frames then hidden for `period` frames.
#[derive(Debug, Clone, Copy)]
pub struct GridCell {
    pub lifespan_min: u32,
    pub budget: u32,
    pub period: usize,
    pub dt_ms: u64,
}

pub const GRID_LIFESPANS: [u32; 3] = [1, 5, 60];
pub const GRID_PERIODS: [usize; 4] = [1, 2, 5, 40];
pub const GRID_STEPS_MS: [u64; 3] = [1_000, 7_000, 60_000];

pub fn grid() -> Vec<GridCell> {
    let mut out = Vec::new();
    for lifespan_min in GRID_LIFESPANS {
        for budget in 1..=5 {
            for period in GRID_PERIODS {
                for dt_ms in GRID_STEPS_MS {
                    out.push(GridCell { lifespan_min, budget, period, dt_ms });
                }
            }
        }
    }
    out
}

pub fn blink_trace(cell: GridCell) -> SceneTrace {
    let horizon = cell.lifespan_min as u64 * 60_000 + 3 * cell.dt_ms;
    let frames = (0..=horizon / cell.dt_ms)
        .map(|k| {
            let mut detections = vec![det("book", [20, 100, 180, 160], 0.9)];
            if (k as usize / cell.period) % 2 == 0 {
                detections.push(det("cup", [60, 60, 90, 100], 0.9));
            }
            TraceFrame { frame_id: k, t_ms: k * cell.dt_ms, detections }
        })
        .collect();
    SceneTrace { width: SIZE as u32, height: SIZE as u32, frames }
}

/// Closed-form expectation for a grid cell: one trigger per appearance of
/// the cup before the deadline, cut off by the budget.
pub fn grid_expected(cell: GridCell) -> Vec<(&'static str, u64)> {
    let deadline = cell.lifespan_min as u64 * 60_000;
    let expiry = deadline.div_ceil(cell.dt_ms) * cell.dt_ms;
    let rises: Vec<u64> = (0..)
        .map(|k: u64| k * 2 * cell.period as u64 * cell.dt_ms)
        .take_while(|t| *t < expiry)
        .collect();
    let budget = cell.budget as usize;
    let mut out: Vec<_> = rises.iter().take(budget).map(|t| ("triggered", *t)).collect();
    if rises.len() >= budget {
        out.push(("exhausted", rises[budget - 1]));
    } else {
        out.push(("expired", expiry));
    }
    out
}

pub fn run_grid_cell(cell: GridCell) -> Vec<EventMsg> {
    let opts = ReplayOptions::new(Anchor::StateId("book".into()), cell.lifespan_min as f64, cell.budget);
    replay(&blink_trace(cell), "if Visible(@state(\"cup\")):\n    play(\"x\")\n", &opts).expect("replay")
}

pub const WORKFLOW_PROGRAM: &str = "if not On(@state(\"mouse\"), @state(\"book\")):\n    play(\"music\")\n";
pub const WORKFLOW_FRAME_MS: u64 = 100;

/// Frames 0 to 100, 100 ms apart. The mouse rests on the book through frame
/// 50 and sits off to the side afterwards.
pub fn workflow_trace() -> SceneTrace {
    let frames = (0..=100u64)
        .map(|k| {
            let mouse = if k <= 50 { [80, 80, 110, 100] } else { [10, 10, 40, 30] };
            TraceFrame {
                frame_id: k,
                t_ms: k * WORKFLOW_FRAME_MS,
                detections: vec![det("book", [40, 100, 160, 160], 0.95), det("mouse", mouse, 0.9)],
            }
        })
        .collect();
    SceneTrace { width: SIZE as u32, height: SIZE as u32, frames }
}

pub fn run_workflow() -> Vec<EventMsg> {
    let opts = ReplayOptions::new(Anchor::Category("book".into()), 60.0, 1);
    replay(&workflow_trace(), WORKFLOW_PROGRAM, &opts).expect("replay")
}
