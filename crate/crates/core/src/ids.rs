//! UUID-format record ids.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdKind {
    State = 0,
    Program = 1,
    Attachment = 2,
}

/// Produces record ids. The seeded form draws each record kind from its own
/// stream, so the n-th attachment id depends only on the seed and n.
#[derive(Debug, Clone)]
pub enum IdGenerator {
    Random,
    Seeded(Box<[ChaCha8Rng; 3]>),
}

impl Default for IdGenerator {
    fn default() -> Self {
        IdGenerator::Random
    }
}

impl IdGenerator {
    pub fn seeded(seed: u64) -> Self {
        let stream = |kind: IdKind| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(kind as u64);
            rng
        };
        IdGenerator::Seeded(Box::new([
            stream(IdKind::State),
            stream(IdKind::Program),
            stream(IdKind::Attachment),
        ]))
    }

    pub fn next_id(&mut self, kind: IdKind) -> String {
        match self {
            IdGenerator::Random => uuid::Uuid::new_v4().to_string(),
            IdGenerator::Seeded(rngs) => {
                let mut bytes = [0u8; 16];
                rngs[kind as usize].fill_bytes(&mut bytes);
                uuid::Builder::from_random_bytes(bytes).into_uuid().to_string()
            }
        }
    }
}
