//! Random create/read/update/delete sequences against a session, checked
//! after every operation against a plain model of what must exist.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use snapscript::store::ImageUpload;
use snapscript::{make_bbox, AttachSpec, CaptureSource, Detection, EventMsg, Frame, Session, Store};

const CATS: &[&str] = &["mouse", "book", "cup", "lamp"];

#[derive(Default)]
struct Model {
    states: BTreeMap<String, Option<String>>,
    programs: BTreeSet<String>,
    attachments: BTreeMap<String, (String, String)>,
}

impl Model {
    fn drop_attachments(&mut self, pred: impl Fn(&(String, String)) -> bool) {
        self.attachments.retain(|_, v| !pred(v));
    }

    fn blobs(&self) -> BTreeSet<String> {
        self.states.values().flatten().cloned().collect()
    }
}

#[derive(Debug, Default)]
pub struct CrudReport {
    pub ops: usize,
    pub by_kind: BTreeMap<&'static str, usize>,
    pub violations: Vec<String>,
    pub max_blobs: usize,
}

fn pick_or_bogus(rng: &mut ChaCha8Rng, ids: Vec<String>) -> String {
    if ids.is_empty() || rng.random_bool(0.05) {
        "no-such-id".into()
    } else {
        ids.choose(rng).unwrap().clone()
    }
}

fn blob_files(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir.join("blobs"))
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| !n.starts_with('.'))
                .collect()
        })
        .unwrap_or_default()
}

fn verify(session: &Session, model: &Model, dir: Option<&Path>) -> Result<(), String> {
    let store = session.store();
    let states: BTreeSet<_> = store.list_states().into_iter().map(|s| s.id).collect();
    let programs: BTreeSet<_> = store.list_programs().into_iter().map(|p| p.id).collect();
    let attachments: BTreeMap<_, _> = store
        .list_attachments()
        .into_iter()
        .map(|a| (a.id, (a.program_id, a.anchor_state_id)))
        .collect();
    if states != model.states.keys().cloned().collect() {
        return Err(format!("states {states:?} vs model {:?}", model.states.keys()));
    }
    if programs != model.programs {
        return Err("program set differs from model".into());
    }
    if attachments != model.attachments {
        return Err(format!("attachments {attachments:?} vs model {:?}", model.attachments));
    }
    for (id, (p, s)) in &attachments {
        if !programs.contains(p) || !states.contains(s) {
            return Err(format!("dangling attachment {id}"));
        }
    }
    let live: BTreeSet<_> = session.engine().attachments().map(|a| a.id.clone()).collect();
    if live != attachments.keys().cloned().collect() {
        return Err("engine and store disagree on attachments".into());
    }
    let stored_blobs = match dir {
        Some(d) => blob_files(d),
        None => store.blob_ids().map_err(|e| e.to_string())?,
    };
    if stored_blobs != model.blobs() {
        return Err(format!("blobs {stored_blobs:?} vs referenced {:?}", model.blobs()));
    }
    store.check_integrity()
}

/// Runs `ops` random operations. With a `dir` the store lives on disk and
/// is reopened every `reopen_every` operations.
pub fn run_crud(seed: u64, ops: usize, dir: Option<&Path>, reopen_every: usize) -> CrudReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let open = || match dir {
        Some(d) => Session::new(Store::open(d).expect("open store")).expect("session"),
        None => Session::new(Store::in_memory()).expect("session"),
    };
    let mut session = open();
    let mut model = Model::default();
    let mut report = CrudReport::default();
    let images: Vec<Vec<u8>> = (0..6u8).map(|i| vec![0x89, b'P', b'N', b'G', i, i.wrapping_mul(31)]).collect();
    let (mut t, mut frame_id) = (0u64, 0u64);

    for op in 0..ops {
        let mut roll = rng.random_range(0..100);
        // keep populations small so deletes keep hitting live records
        if roll < 30 && model.states.len() >= 40 {
            roll = 30;
        } else if (42..52).contains(&roll) && model.programs.len() >= 12 {
            roll = 57;
        } else if (63..83).contains(&roll) && model.attachments.len() >= 30 {
            roll = 83;
        }
        let kind: &'static str = match roll {
            0..=29 => {
                let cat = *CATS.choose(&mut rng).unwrap();
                let img = rng.random_bool(0.6).then(|| images.choose(&mut rng).unwrap().clone());
                let hash = img.as_ref().map(|b| hex::encode(Sha256::digest(b)));
                let upload = img.map(|bytes| ImageUpload { bytes, media_type: "image/png".into() });
                let (s, _) = session.create_state(cat, None, upload, CaptureSource::Webcam).expect("create state");
                model.states.insert(s.id, hash);
                "create_state"
            }
            30..=41 => {
                let id = pick_or_bogus(&mut rng, model.states.keys().cloned().collect());
                match session.delete_state(&id) {
                    Ok(_) => {
                        model.states.remove(&id);
                        model.drop_attachments(|(_, s)| *s == id);
                    }
                    Err(_) if !model.states.contains_key(&id) => {}
                    Err(e) => report.violations.push(format!("op {op}: delete_state failed: {e}")),
                }
                "delete_state"
            }
            42..=51 => {
                let src = if rng.random_bool(0.1) { "if (" } else { "play(\"x\")" };
                match session.create_program("p", src) {
                    Ok(p) => {
                        model.programs.insert(p.id);
                    }
                    Err(_) if src == "if (" => {}
                    Err(e) => report.violations.push(format!("op {op}: create_program failed: {e}")),
                }
                "create_program"
            }
            52..=56 => {
                let id = pick_or_bogus(&mut rng, model.programs.iter().cloned().collect());
                let src = "if Visible(@state(\"x\")):\n    play(\"y\")";
                if session.update_program(&id, Some("q"), src).is_ok() != model.programs.contains(&id) {
                    report.violations.push(format!("op {op}: update_program outcome wrong for {id}"));
                }
                "update_program"
            }
            57..=62 => {
                let id = pick_or_bogus(&mut rng, model.programs.iter().cloned().collect());
                match session.delete_program(&id) {
                    Ok(_) => {
                        model.programs.remove(&id);
                        model.drop_attachments(|(p, _)| *p == id);
                    }
                    Err(_) if !model.programs.contains(&id) => {}
                    Err(e) => report.violations.push(format!("op {op}: delete_program failed: {e}")),
                }
                "delete_program"
            }
            63..=82 => {
                let p = pick_or_bogus(&mut rng, model.programs.iter().cloned().collect());
                let s = pick_or_bogus(&mut rng, model.states.keys().cloned().collect());
                let spec = AttachSpec {
                    program_id: p.clone(),
                    anchor_state_id: s.clone(),
                    name: "a".into(),
                    lifespan_min: *[0.01, 1.0, 60.0].choose(&mut rng).unwrap(),
                    max_executions: rng.random_range(1..=3),
                };
                let valid = model.programs.contains(&p) && model.states.contains_key(&s);
                match session.attach(&spec) {
                    Ok((a, _)) if valid => {
                        model.attachments.insert(a.id, (p, s));
                    }
                    Err(_) if !valid => {}
                    other => report.violations.push(format!("op {op}: attach({p}, {s}) gave {:?}", other.map(|x| x.0.id))),
                }
                "attach"
            }
            83..=89 => {
                let id = pick_or_bogus(&mut rng, model.attachments.keys().cloned().collect());
                if session.detach(&id).is_ok() {
                    model.attachments.remove(&id);
                } else if model.attachments.contains_key(&id) {
                    report.violations.push(format!("op {op}: detach failed for {id}"));
                }
                "detach"
            }
            _ => {
                t += rng.random_range(100..800);
                let detections = CATS
                    .iter()
                    .filter(|_| rng.random_bool(0.6))
                    .map(|c| Detection::new(*c, make_bbox(10., 10., 50., 50.).unwrap()))
                    .collect();
                let frame = Frame { frame_id, t_ms: t, detections, width: 100, height: 100 };
                frame_id += 1;
                let out = session.ingest(&frame).expect("ingest");
                for ev in out.events {
                    if let EventMsg::Expired { attachment_id, .. } | EventMsg::Exhausted { attachment_id, .. } = ev {
                        model.attachments.remove(&attachment_id);
                    }
                }
                "ingest"
            }
        };
        *report.by_kind.entry(kind).or_default() += 1;
        report.ops += 1;
        report.max_blobs = report.max_blobs.max(model.blobs().len());
        if dir.is_some() && reopen_every > 0 && (op + 1) % reopen_every == 0 {
            drop(session);
            session = open();
            // a fresh session restarts the scene clock
            t = 0;
            frame_id = 0;
        }
        if let Err(e) = verify(&session, &model, dir) {
            report.violations.push(format!("op {op} ({kind}): {e}"));
            break;
        }
    }
    report
}
