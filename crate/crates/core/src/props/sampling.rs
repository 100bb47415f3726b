//! Scaling series for the complexity and storage checks.
//!
//! For each level n the source initial state is seeded with n atoms per
//! sort, mapped, and then driven by short seeded random walks. Every
//! visited (source, target) pair is a sample.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::MappingError;
use crate::explore::seed_state;
use crate::mapping::MappingDef;
use crate::state::State;

pub const LEVELS: std::ops::RangeInclusive<usize> = 1..=6;
/// Levels used to fit constants; the rest only test them.
pub const FIT_LEVELS: [usize; 2] = [1, 2];
const WALKS: u64 = 4;

#[derive(Clone, Debug)]
pub struct SeriesPair {
    pub level: usize,
    pub source: State,
    pub target: State,
}

pub fn walk_length(level: usize) -> usize {
    2 * level + 2
}

pub fn scaling_series(m: &MappingDef) -> Result<Vec<SeriesPair>, MappingError> {
    let (src, tgt) = (m.source(), m.target());
    let mut out = Vec::new();
    for level in LEVELS {
        let s0 = seed_state(src, src.init(), level);
        let t0 = m.map_state(&s0)?;
        for w in 0..WALKS {
            let mut rng = ChaCha8Rng::seed_from_u64((level as u64) << 8 | w);
            let (mut s, mut t) = (s0.clone(), t0.clone());
            out.push(SeriesPair { level, source: s.clone(), target: t.clone() });
            for _ in 0..walk_length(level) {
                let cmds = src.ground_commands(&s);
                let Some(gc) = cmds.choose(&mut rng) else { break };
                let mapped = m.map_command(gc, &t)?;
                t = tgt.run_trace(&t, &mapped.commands)?.0;
                s = src.step_ground(&s, gc)?;
                out.push(SeriesPair { level, source: s.clone(), target: t.clone() });
            }
        }
    }
    Ok(out)
}
