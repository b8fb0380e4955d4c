//! Seeded random streams.
//!
//! Every consumer of randomness (a lane's variable, a CC group slot, the
//! initializer, the regrouping schedule) owns its own ChaCha stream keyed by
//! `(seed, stream id)`. Draw sequences therefore never depend on which
//! worker thread executes a task or in which order tasks finish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};

/// Source of the three draw kinds used by the search kernel.
pub trait Draws {
    /// Uniform on `[0, 1)`.
    fn uniform(&mut self) -> f64;
    fn normal(&mut self) -> f64;
    /// Standard Cauchy (location 0, scale 1).
    fn cauchy(&mut self) -> f64;
}

/// Purpose tags folded into the stream id so that independent consumers never collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamKind {
    Problem = 1,
    Init = 2,
    Grouping = 3,
    GroupSlot = 4,
    LaneVariable = 5,
    Analysis = 6,
}

/// Packs `(kind, major, minor)` into a ChaCha stream id. `major` and `minor`
/// get 28 bits each, which covers any realistic lane count and dimension.
pub fn stream_id(kind: StreamKind, major: u64, minor: u64) -> u64 {
    debug_assert!(major < (1 << 28) && minor < (1 << 28));
    ((kind as u64) << 56) | (major << 28) | minor
}

/// An independently seeded pseudorandom stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    cauchy: Cauchy<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            cauchy: Cauchy::new(0.0, 1.0).expect("unit Cauchy is valid"),
        }
    }

    pub fn for_kind(seed: u64, kind: StreamKind, major: u64, minor: u64) -> Self {
        Self::new(seed, stream_id(kind, major, minor))
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl Draws for RngStream {
    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    fn cauchy(&mut self) -> f64 {
        self.cauchy.sample(&mut self.rng)
    }
}

/// Replays a fixed script of draws. Used to hand-trace the engines.
#[derive(Debug, Clone, Default)]
pub struct ScriptedDraws {
    uniforms: std::collections::VecDeque<f64>,
    normals: std::collections::VecDeque<f64>,
    cauchys: std::collections::VecDeque<f64>,
}

impl ScriptedDraws {
    pub fn new(uniforms: &[f64], normals: &[f64], cauchys: &[f64]) -> Self {
        Self {
            uniforms: uniforms.iter().copied().collect(),
            normals: normals.iter().copied().collect(),
            cauchys: cauchys.iter().copied().collect(),
        }
    }

    pub fn is_drained(&self) -> bool {
        self.uniforms.is_empty() && self.normals.is_empty() && self.cauchys.is_empty()
    }
}

impl Draws for ScriptedDraws {
    fn uniform(&mut self) -> f64 {
        self.uniforms.pop_front().expect("script ran out of uniform draws")
    }

    fn normal(&mut self) -> f64 {
        self.normals.pop_front().expect("script ran out of normal draws")
    }

    fn cauchy(&mut self) -> f64 {
        self.cauchys.pop_front().expect("script ran out of Cauchy draws")
    }
}
