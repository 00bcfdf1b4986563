//! Policy diagnostics over a fixed measurement set, and success-rate
//! statistics.

mod info;
mod welch;

use std::path::Path;

use rand::Rng as _;

pub use info::{mean_entropy, mutual_informations, MetricReport, PolicyTable};
pub use welch::{mean, sem, variance, welch_t_test, WelchResult};

use crate::builder::BuilderAgent;
use crate::error::{Error, Result};
use crate::seed;
use crate::world::{reset, step, Action, Block, Cell, GridConfig, GridState, TaskSpec};

const MAGIC: &[u8; 8] = b"ABIGMSET";
const VERSION: u32 = 1;

/// States on which every policy of a run is probed, each crossed with all
/// messages.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub grid: GridConfig,
    pub seed: u64,
    pub states: Vec<GridState>,
}

impl MeasurementSet {
    /// Each state is a fresh reset followed by `k ~ U[0, episode_len)`
    /// uniformly random builder actions.
    pub fn build(grid: &GridConfig, size: usize, seed: u64) -> Result<Self> {
        grid.validate()?;
        let spec = TaskSpec::grasp();
        let states = (0..size as u64)
            .map(|i| {
                let mut rng = seed::rng(seed, &[seed::stream::MEASUREMENT, i]);
                let (mut s, _) = reset(grid, &spec, &mut rng);
                for _ in 0..rng.random_range(0..grid.episode_len) {
                    s = step(grid, &s, Action::ALL[rng.random_range(0..Action::COUNT)]);
                }
                s
            })
            .collect();
        Ok(Self { grid: grid.clone(), seed, states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn report(&self, builder: &BuilderAgent) -> Result<MetricReport> {
        Ok(PolicyTable::from_builder(builder, &self.states)?.report())
    }

    /// Layout: magic, version (u32), width, height (u8), n_blocks,
    /// episode_len (u32), seed (u64), count (u32), then per state agent x, y,
    /// gripper and per block x, y, grasped, one byte each. Integers are
    /// little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.states.len() * (3 + 3 * self.grid.n_blocks));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.grid.width);
        out.push(self.grid.height);
        out.extend_from_slice(&(self.grid.n_blocks as u32).to_le_bytes());
        out.extend_from_slice(&(self.grid.episode_len as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.states.len() as u32).to_le_bytes());
        for s in &self.states {
            out.extend_from_slice(&[s.agent.x, s.agent.y, u8::from(s.gripper_closed)]);
            for b in &s.blocks {
                out.extend_from_slice(&[b.cell.x, b.cell.y, u8::from(b.grasped)]);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |detail: &str| Error::parse("measurement set", detail);
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8).ok_or_else(|| bad("truncated header"))? != MAGIC {
            return Err(bad("bad magic"));
        }
        if r.u32().ok_or_else(|| bad("truncated header"))? != VERSION {
            return Err(bad("unsupported version"));
        }
        let header = (|| Some((r.u8()?, r.u8()?, r.u32()?, r.u32()?, r.u64()?, r.u32()?)))();
        let (width, height, n_blocks, episode_len, seed, count) = header.ok_or_else(|| bad("truncated header"))?;
        let grid = GridConfig::new(width, height, n_blocks as usize, episode_len as usize);
        grid.validate()?;
        let mut states = Vec::with_capacity(count as usize);
        for i in 0..count {
            let mut state = || {
                let agent = Cell::new(r.u8()?, r.u8()?);
                let gripper_closed = r.u8()? != 0;
                let blocks = (0..grid.n_blocks)
                    .map(|_| Some(Block { cell: Cell::new(r.u8()?, r.u8()?), grasped: r.u8()? != 0 }))
                    .collect::<Option<Vec<_>>>()?;
                Some(GridState { agent, gripper_closed, blocks })
            };
            let s = state().ok_or_else(|| bad("truncated state"))?;
            s.check(&grid).map_err(|e| bad(&format!("state {i}: {e}")))?;
            states.push(s);
        }
        if r.pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(Self { grid, seed, states })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Option<&[u8]> {
        let s = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}
