//! Cross-frame association of sign hypotheses and confidence-based
//! validation.
//!
//! Each track keeps one running confidence sum and hit count per speed
//! value, so a track that mostly reads 90 with an occasional 80 still
//! validates 90. A track emits at most one validated sign.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::odr::SignHypothesis;
use crate::shape::ShapeKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub min_hits: u32,
    pub confidence_threshold: f64,
    /// Frames a track may go unmatched before it is dropped.
    pub max_gap: u64,
    /// Association radius as a fraction of the larger box side.
    pub gate_factor: f64,
    /// Largest size ratio between consecutive matches, either direction.
    pub max_scale_growth: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            min_hits: 2,
            confidence_threshold: 1.2,
            max_gap: 3,
            gate_factor: 0.6,
            max_scale_growth: 1.5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_hits < 1 {
            return Err(Error::Config("tracker.min_hits must be >= 1".into()));
        }
        if !(self.confidence_threshold >= 0.0) || !(self.gate_factor > 0.0) || !(self.max_scale_growth >= 1.0) {
            return Err(Error::Config(
                "tracker thresholds must be non-negative, gate positive, scale growth >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ValueEvidence {
    pub cumulative: f64,
    pub hits: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub track_id: u64,
    pub kind: ShapeKind,
    pub last_bbox: Rect,
    pub last_seen_frame: u64,
    pub evidence: BTreeMap<u32, ValueEvidence>,
    pub validated_value: Option<u32>,
}

impl Track {
    pub fn validated(&self) -> bool {
        self.validated_value.is_some()
    }

    pub fn total_hits(&self) -> u32 {
        self.evidence.values().map(|e| e.hits).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidatedSign {
    pub track_id: u64,
    pub value: u32,
    pub frame_of_validation: u64,
    pub bbox: Rect,
    /// Mean confidence of the validated value's readings.
    pub confidence: f64,
    pub kind: ShapeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Association {
    /// `(track index, hypothesis index)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched: Vec<usize>,
}

fn size(r: &Rect) -> f64 {
    f64::from(r.w.max(r.h).max(1))
}

/// Center distance when `hyp` falls inside `track`'s association gate.
/// Both limits are per frame, so a hypothesis arriving after a gap of `k`
/// frames may have moved `k` times as far and grown by `growth^k`.
pub fn gate_distance(track: &Track, hyp: &SignHypothesis, cfg: &TrackerConfig) -> Option<f64> {
    if track.kind != hyp.kind {
        return None;
    }
    let k = hyp.frame_index.saturating_sub(track.last_seen_frame).max(1) as f64;
    let (tx, ty) = track.last_bbox.center();
    let (hx, hy) = hyp.bbox.center();
    let d = (tx - hx).hypot(ty - hy);
    let (st, sh) = (size(&track.last_bbox), size(&hyp.bbox));
    let ratio = st.max(sh) / st.min(sh);
    (d <= k * cfg.gate_factor * st.max(sh) && ratio <= cfg.max_scale_growth.powf(k)).then_some(d)
}

/// Greedy best-first matching by ascending center distance inside the gate.
pub fn associate(tracks: &[Track], hyps: &[SignHypothesis], cfg: &TrackerConfig) -> Association {
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in tracks.iter().enumerate() {
        for (hi, h) in hyps.iter().enumerate() {
            if let Some(d) = gate_distance(t, h, cfg) {
                edges.push((d, ti, hi));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut track_used = vec![false; tracks.len()];
    let mut hyp_used = vec![false; hyps.len()];
    let mut pairs = Vec::new();
    for (_, ti, hi) in edges {
        if !track_used[ti] && !hyp_used[hi] {
            track_used[ti] = true;
            hyp_used[hi] = true;
            pairs.push((ti, hi));
        }
    }
    let unmatched = (0..hyps.len()).filter(|&i| !hyp_used[i]).collect();
    Association { pairs, unmatched }
}

/// Single-owner tracker state, advanced one frame at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracker {
    cfg: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        Tracker {
            cfg,
            tracks: Vec::new(),
            next_id: 0,
            last_frame: None,
        }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn last_frame(&self) -> Option<u64> {
        self.last_frame
    }

    /// Feed one frame's hypotheses; returns the signs validated on this frame.
    pub fn step(&mut self, hyps: &[SignHypothesis], frame_index: u64) -> Result<Vec<ValidatedSign>> {
        if let Some(previous) = self.last_frame {
            if frame_index <= previous {
                return Err(Error::Sequencing {
                    previous,
                    got: frame_index,
                });
            }
        }
        self.last_frame = Some(frame_index);
        let max_gap = self.cfg.max_gap;
        self.tracks
            .retain(|t| frame_index - t.last_seen_frame <= max_gap + 1);

        let assoc = associate(&self.tracks, hyps, &self.cfg);
        let mut events = Vec::new();
        for &(ti, hi) in &assoc.pairs {
            let h = &hyps[hi];
            let t = &mut self.tracks[ti];
            t.last_bbox = h.bbox;
            t.last_seen_frame = frame_index;
            let e = t.evidence.entry(h.value).or_default();
            e.cumulative += h.confidence;
            e.hits += 1;
            if let Some(ev) = try_validate(t, &self.cfg, frame_index) {
                events.push(ev);
            }
        }
        for &hi in &assoc.unmatched {
            let h = &hyps[hi];
            let mut t = Track {
                track_id: self.next_id,
                kind: h.kind,
                last_bbox: h.bbox,
                last_seen_frame: frame_index,
                evidence: BTreeMap::new(),
                validated_value: None,
            };
            self.next_id += 1;
            t.evidence.insert(
                h.value,
                ValueEvidence {
                    cumulative: h.confidence,
                    hits: 1,
                },
            );
            if let Some(ev) = try_validate(&mut t, &self.cfg, frame_index) {
                events.push(ev);
            }
            self.tracks.push(t);
        }
        events.sort_by_key(|e| e.track_id);
        Ok(events)
    }
}

/// Validate once: the qualifying value with the largest cumulative
/// confidence wins, ties going to the lower speed.
fn try_validate(t: &mut Track, cfg: &TrackerConfig, frame_index: u64) -> Option<ValidatedSign> {
    if t.validated() {
        return None;
    }
    let (value, ev) = t
        .evidence
        .iter()
        .filter(|(_, e)| e.hits >= cfg.min_hits && e.cumulative >= cfg.confidence_threshold)
        // BTreeMap iterates ascending, so max_by keeping the earlier on ties
        // selects the lower value
        .fold(None::<(u32, ValueEvidence)>, |best, (&v, &e)| match best {
            Some((_, b)) if b.cumulative >= e.cumulative => best,
            _ => Some((v, e)),
        })?;
    t.validated_value = Some(value);
    Some(ValidatedSign {
        track_id: t.track_id,
        value,
        frame_of_validation: frame_index,
        bbox: t.last_bbox,
        confidence: (ev.cumulative / f64::from(ev.hits)).clamp(0.0, 1.0),
        kind: t.kind,
    })
}
