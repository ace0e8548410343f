//! Sequenced fan-out of wire events with a bounded buffer for resuming.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use snapscript::EventMsg;
use tokio::sync::broadcast;

/// One published event. Sequence numbers start at 1 and have no gaps.
#[derive(Debug)]
pub struct Sequenced {
    pub seq: u64,
    pub kind: &'static str,
    pub json: String,
}

#[derive(Debug)]
struct Ring {
    last: u64,
    buf: VecDeque<Arc<Sequenced>>,
}

#[derive(Debug)]
pub struct EventHub {
    ring: Mutex<Ring>,
    capacity: usize,
    tx: broadcast::Sender<Arc<Sequenced>>,
}

impl EventHub {
    pub fn new(capacity: usize) -> Self {
        let (tx, _) = broadcast::channel(1024);
        Self {
            ring: Mutex::new(Ring {
                last: 0,
                buf: VecDeque::with_capacity(capacity.min(4096)),
            }),
            capacity: capacity.max(1),
            tx,
        }
    }

    pub fn publish(&self, events: impl IntoIterator<Item = EventMsg>) {
        let mut ring = self.ring.lock().unwrap();
        for e in events {
            ring.last += 1;
            let item = Arc::new(Sequenced {
                seq: ring.last,
                kind: e.type_name(),
                json: e.to_json(),
            });
            if ring.buf.len() == self.capacity {
                ring.buf.pop_front();
            }
            ring.buf.push_back(item.clone());
            // no receivers is fine
            let _ = self.tx.send(item);
        }
    }

    /// Buffered events after `seq`, oldest first.
    pub fn since(&self, seq: u64) -> Vec<Arc<Sequenced>> {
        let ring = self.ring.lock().unwrap();
        ring.buf.iter().filter(|e| e.seq > seq).cloned().collect()
    }

    /// A receiver for future events, the buffered events after `since` (none
    /// when absent), and the last sequence number published so far. Taken
    /// under one lock so nothing falls in between.
    pub fn subscribe(&self, since: Option<u64>) -> (Vec<Arc<Sequenced>>, broadcast::Receiver<Arc<Sequenced>>, u64) {
        let ring = self.ring.lock().unwrap();
        let backlog = match since {
            Some(s) => ring.buf.iter().filter(|e| e.seq > s).cloned().collect(),
            None => Vec::new(),
        };
        (backlog, self.tx.subscribe(), ring.last)
    }

    pub fn last_seq(&self) -> u64 {
        self.ring.lock().unwrap().last
    }
}
