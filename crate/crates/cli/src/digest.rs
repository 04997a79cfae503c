//! SHA-256 over a canonical byte encoding of a trajectory: sample times,
//! every agent's id, position and velocity, the static agents and the event
//! log. Floats enter as their IEEE bit patterns, so equal digests mean
//! bit-identical trajectories.

use ftmp_core::sim::TrajectoryRecord;
use ftmp_core::AgentState;
use sha2::{Digest, Sha256};

/// One event as it appears in `events.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub time: f64,
    pub kind: String,
    pub agent: usize,
    pub detail: String,
}

pub fn event_rows(rec: &TrajectoryRecord) -> Vec<EventRow> {
    rec.events
        .iter()
        .map(|e| EventRow {
            time: e.time,
            kind: e.kind.name().to_string(),
            agent: e.kind.agent(),
            detail: e.kind.detail(),
        })
        .collect()
}

pub fn record_digest(rec: &TrajectoryRecord) -> String {
    digest_parts(&rec.times, &rec.frames, &rec.statics, &event_rows(rec))
}

pub fn digest_parts(times: &[f64], frames: &[Vec<AgentState>], statics: &[AgentState], events: &[EventRow]) -> String {
    let mut h = Sha256::new();
    h.update(b"ftmp-record-v1");
    h.update((times.len() as u64).to_le_bytes());
    for (t, frame) in times.iter().zip(frames) {
        h.update(t.to_bits().to_le_bytes());
        h.update((frame.len() as u64).to_le_bytes());
        for a in frame {
            agent(&mut h, a);
        }
    }
    h.update((statics.len() as u64).to_le_bytes());
    for a in statics {
        agent(&mut h, a);
    }
    h.update((events.len() as u64).to_le_bytes());
    for e in events {
        h.update(e.time.to_bits().to_le_bytes());
        text(&mut h, &e.kind);
        h.update((e.agent as u64).to_le_bytes());
        text(&mut h, &e.detail);
    }
    format!("{:x}", h.finalize())
}

fn agent(h: &mut Sha256, a: &AgentState) {
    h.update((a.id as u64).to_le_bytes());
    text(h, a.kind.as_str());
    for v in [&a.position, &a.velocity] {
        h.update((v.dim() as u64).to_le_bytes());
        for c in v.iter() {
            h.update(c.to_bits().to_le_bytes());
        }
    }
}

fn text(h: &mut Sha256, s: &str) {
    h.update((s.len() as u64).to_le_bytes());
    h.update(s.as_bytes());
}

#[cfg(test)]
mod tests {
    use ftmp_core::RealVec;

    use super::*;

    #[test]
    fn digest_sees_single_bit_changes() {
        let frame = vec![AgentState::kinetic(0, RealVec::xy(1.0, 2.0), RealVec::xy(0.0, 0.0))];
        let statics = vec![AgentState::fixed(1, RealVec::xy(5.0, 5.0))];
        let base = digest_parts(&[0.0], std::slice::from_ref(&frame), &statics, &[]);
        assert_eq!(base.len(), 64);
        assert_eq!(base, digest_parts(&[0.0], std::slice::from_ref(&frame), &statics, &[]));

        let mut nudged = frame.clone();
        nudged[0].position = RealVec::xy(f64::from_bits(1.0f64.to_bits() + 1), 2.0);
        assert_ne!(base, digest_parts(&[0.0], &[nudged], &statics, &[]));

        let event = EventRow {
            time: 0.0,
            kind: "converged".into(),
            agent: 0,
            detail: String::new(),
        };
        assert_ne!(base, digest_parts(&[0.0], &[frame], &statics, &[event]));
    }
}
