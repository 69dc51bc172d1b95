//! ILDS: a seekable little-endian container for episodic datasets.
//!
//! ```text
//! magic "ILDS" | version u16 | flags u16 (bit0: discrete) | obs_dim u32 | act_dim u32
//! n_steps u64 | n_episodes u64 | metadata_len u32 | metadata (UTF-8 JSON)
//! states f32[n_steps * obs_dim] | actions u32[n_steps] or f32[n_steps * act_dim]
//! rewards f64[n_steps] | accumulated_rewards f64[n_steps] | episode_starts u8[n_steps]
//! sha256 of all preceding bytes (32 bytes)
//! ```

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::envs::EnvDescriptor;
use crate::{ActionSpace, Error, Result};

pub const ILDS_MAGIC: &[u8; 4] = b"ILDS";
pub const ILDS_VERSION: u16 = 1;

const FLAG_DISCRETE: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 4 + 4 + 8 + 8 + 4;
const TRAILER_LEN: usize = 32;
const PREFIX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ActionColumn {
    Discrete(Vec<u32>),
    /// Row-major `[n_steps, act_dim]`.
    Continuous(Vec<f32>),
}

impl ActionColumn {
    fn len_values(&self) -> usize {
        match self {
            ActionColumn::Discrete(v) => v.len(),
            ActionColumn::Continuous(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMetadata {
    pub env_id: String,
    pub expert_id: String,
    pub expert_aer: f64,
    pub random_aer: Option<f64>,
    pub master_seed: u64,
    /// `None` means every episode is accepted.
    pub acceptance_threshold: Option<f64>,
    pub max_retries: u32,
    pub rejected_count: u64,
    /// Seed of each accepted episode, by episode index.
    pub episode_seeds: Vec<u64>,
    pub created_unix: u64,
    pub tool_version: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetadataBlock {
    descriptor: EnvDescriptor,
    metadata: DatasetMetadata,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub descriptor: EnvDescriptor,
    /// Row-major `[n_steps, obs_dim]`.
    pub states: Vec<f32>,
    pub actions: ActionColumn,
    pub rewards: Vec<f64>,
    pub accumulated_rewards: Vec<f64>,
    pub episode_starts: Vec<bool>,
    pub metadata: DatasetMetadata,
}

impl DatasetFile {
    pub fn n_steps(&self) -> usize {
        self.rewards.len()
    }

    pub fn n_episodes(&self) -> usize {
        self.episode_starts.iter().filter(|&&s| s).count()
    }

    pub fn obs_dim(&self) -> usize {
        self.descriptor.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.descriptor.action_space.act_dim()
    }

    pub fn state(&self, step: usize) -> &[f32] {
        let d = self.obs_dim();
        &self.states[step * d..(step + 1) * d]
    }

    /// Step ranges of each episode in file order.
    pub fn episode_ranges(&self) -> Vec<Range<usize>> {
        let mut out = Vec::with_capacity(self.n_episodes());
        let mut start = 0;
        for i in 1..=self.n_steps() {
            if i == self.n_steps() || self.episode_starts[i] {
                out.push(start..i);
                start = i;
            }
        }
        if self.n_steps() == 0 {
            out.clear();
        }
        out
    }

    pub fn episode_returns(&self) -> Vec<f64> {
        self.episode_ranges()
            .into_iter()
            .map(|r| self.accumulated_rewards[r.end - 1])
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDataset(msg));
        self.descriptor
            .validate()
            .map_err(|e| Error::InvalidDataset(e.to_string()))?;
        if self.metadata.env_id != self.descriptor.env_id {
            return bad(format!(
                "metadata env_id {} != descriptor env_id {}",
                self.metadata.env_id, self.descriptor.env_id
            ));
        }
        let n = self.n_steps();
        let (obs_dim, act_dim) = (self.obs_dim(), self.act_dim());
        if self.states.len() != n * obs_dim
            || self.actions.len_values() != n * act_dim
            || self.accumulated_rewards.len() != n
            || self.episode_starts.len() != n
        {
            return bad(format!("column lengths disagree with n_steps = {n}"));
        }
        match (&self.actions, &self.descriptor.action_space) {
            (ActionColumn::Discrete(a), ActionSpace::Discrete { n: k }) => {
                if let Some(i) = a.iter().position(|x| x >= k) {
                    return bad(format!("step {i}: action {} >= {k}", a[i]));
                }
            }
            (ActionColumn::Continuous(a), ActionSpace::Continuous { low, high }) => {
                for (i, x) in a.iter().enumerate() {
                    let d = i % act_dim;
                    if !(x.is_finite() && low[d] as f32 <= *x && *x <= high[d] as f32) {
                        return bad(format!("step {}: action {x} out of bounds", i / act_dim));
                    }
                }
            }
            _ => return bad("action column kind does not match the action space".into()),
        }
        if let Some(i) = self.states.iter().position(|x| !x.is_finite()) {
            return bad(format!("non-finite state value at {i}"));
        }
        if n > 0 && !self.episode_starts[0] {
            return bad("first step is not an episode start".into());
        }
        let mut running = 0.0;
        for i in 0..n {
            let r = self.rewards[i];
            if !r.is_finite() || !self.accumulated_rewards[i].is_finite() {
                return bad(format!("step {i}: non-finite reward"));
            }
            running = if self.episode_starts[i] { r } else { running + r };
            if (running - self.accumulated_rewards[i]).abs() > PREFIX_TOLERANCE {
                return bad(format!(
                    "step {i}: accumulated reward {} != running sum {running}",
                    self.accumulated_rewards[i]
                ));
            }
        }
        if self.metadata.episode_seeds.len() != self.n_episodes() {
            return bad(format!(
                "{} episode seeds for {} episodes",
                self.metadata.episode_seeds.len(),
                self.n_episodes()
            ));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let block = MetadataBlock {
            descriptor: self.descriptor.clone(),
            metadata: self.metadata.clone(),
        };
        let meta = serde_json::to_vec(&block)?;
        let n = self.n_steps();
        let discrete = matches!(self.actions, ActionColumn::Discrete(_));

        let body = n * (4 * self.obs_dim() + 4 * self.act_dim() + 8 + 8 + 1);
        let mut out = Vec::with_capacity(HEADER_LEN + meta.len() + body + TRAILER_LEN);
        out.extend_from_slice(ILDS_MAGIC);
        out.extend_from_slice(&ILDS_VERSION.to_le_bytes());
        out.extend_from_slice(&(if discrete { FLAG_DISCRETE } else { 0 }).to_le_bytes());
        out.extend_from_slice(&(self.obs_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.act_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&(self.n_episodes() as u64).to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        self.states.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        match &self.actions {
            ActionColumn::Discrete(a) => a.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            ActionColumn::Continuous(a) => a.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        self.rewards.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        self.accumulated_rewards
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        out.extend(self.episode_starts.iter().map(|&b| b as u8));
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    /// Parse and fully validate ILDS bytes. `origin` only labels errors.
    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != ILDS_MAGIC {
            return Err(Error::NotAnIldsFile {
                path: origin.to_path_buf(),
            });
        }
        let corrupt = |msg: String| Error::CorruptFile(format!("{}: {msg}", origin.display()));
        if bytes.len() < HEADER_LEN {
            return Err(corrupt(format!("header truncated at {} bytes", bytes.len())));
        }
        let mut r = Reader { buf: bytes, pos: 4 };
        let version = r.u16();
        if version != ILDS_VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let flags = r.u16();
        if flags & !FLAG_DISCRETE != 0 {
            return Err(corrupt(format!("unknown flags {flags:#06x}")));
        }
        let discrete = flags & FLAG_DISCRETE != 0;
        let obs_dim = r.u32() as usize;
        let act_dim = r.u32() as usize;
        let n_steps = r.u64();
        let n_episodes = r.u64();
        let meta_len = r.u32() as usize;

        let per_step = (4 * obs_dim as u128) + (4 * act_dim as u128) + 8 + 8 + 1;
        let expected = HEADER_LEN as u128 + meta_len as u128 + per_step * n_steps as u128 + TRAILER_LEN as u128;
        if expected != bytes.len() as u128 {
            return Err(corrupt(format!("expected {expected} bytes, found {}", bytes.len())));
        }
        let n = n_steps as usize;
        let payload_end = bytes.len() - TRAILER_LEN;
        if Sha256::digest(&bytes[..payload_end]).as_slice() != &bytes[payload_end..] {
            return Err(corrupt("trailer checksum does not match contents".into()));
        }

        let meta_bytes = r.take(meta_len);
        let block: MetadataBlock = serde_json::from_slice(meta_bytes)
            .map_err(|e| Error::InvalidDataset(format!("metadata: {e}")))?;
        if serde_json::to_vec(&block)? != meta_bytes {
            return Err(Error::InvalidDataset("metadata is not in canonical form".into()));
        }
        let states = (0..n * obs_dim).map(|_| r.f32()).collect();
        let actions = if discrete {
            ActionColumn::Discrete((0..n).map(|_| r.u32()).collect())
        } else {
            ActionColumn::Continuous((0..n * act_dim).map(|_| r.f32()).collect())
        };
        let rewards = (0..n).map(|_| r.f64()).collect();
        let accumulated_rewards = (0..n).map(|_| r.f64()).collect();
        let raw_starts = r.take(n);
        if let Some(b) = raw_starts.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidDataset(format!("episode_start byte {b} is not 0/1")));
        }
        let file = DatasetFile {
            descriptor: block.descriptor,
            states,
            actions,
            rewards,
            accumulated_rewards,
            episode_starts: raw_starts.iter().map(|&b| b == 1).collect(),
            metadata: block.metadata,
        };
        let header_mismatch = file.obs_dim() != obs_dim
            || file.act_dim() != act_dim
            || file.descriptor.action_space.is_discrete() != discrete;
        if header_mismatch {
            return Err(Error::InvalidDataset("header disagrees with descriptor".into()));
        }
        file.validate()?;
        if file.n_episodes() as u64 != n_episodes {
            return Err(Error::InvalidDataset(format!(
                "header says {n_episodes} episodes, episode_starts has {}",
                file.n_episodes()
            )));
        }
        Ok(file)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> &'a [u8] {
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        out
    }

    fn array<const N: usize>(&mut self) -> [u8; N] {
        self.take(N).try_into().expect("length checked")
    }

    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.array())
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.array())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.array())
    }

    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.array())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.array())
    }
}

pub fn write_ilds(file: &DatasetFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = file.to_bytes()?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_ilds(path: impl AsRef<Path>) -> Result<DatasetFile> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    DatasetFile::from_bytes(&bytes, path)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::envs::{descriptor, GRIDWORLD_ID, LINEREACHER_ID};

    pub(crate) fn metadata(env_id: &str, seeds: Vec<u64>) -> DatasetMetadata {
        DatasetMetadata {
            env_id: env_id.to_string(),
            expert_id: "test".into(),
            expert_aer: -1.5,
            random_aer: Some(-30.0),
            master_seed: 1,
            acceptance_threshold: None,
            max_retries: 5,
            rejected_count: 0,
            episode_seeds: seeds,
            created_unix: 0,
            tool_version: "test".into(),
        }
    }

    /// Two GridWorld episodes of lengths 3 and 2.
    pub(crate) fn tiny_grid() -> DatasetFile {
        DatasetFile {
            descriptor: descriptor(GRIDWORLD_ID).unwrap(),
            states: vec![2.0, 4.0, 3.0, 4.0, 3.0, 4.0, 4.0, 2.0, 4.0, 3.0],
            actions: ActionColumn::Discrete(vec![1, 0, 1, 3, 3]),
            rewards: vec![-1.0; 5],
            accumulated_rewards: vec![-1.0, -2.0, -3.0, -1.0, -2.0],
            episode_starts: vec![true, false, false, true, false],
            metadata: metadata(GRIDWORLD_ID, vec![10, 11]),
        }
    }

    #[test]
    fn roundtrip_and_determinism() {
        let d = tiny_grid();
        let a = d.to_bytes().unwrap();
        let b = d.to_bytes().unwrap();
        assert_eq!(a, b);
        let back = DatasetFile::from_bytes(&a, Path::new("mem")).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.to_bytes().unwrap(), a);
        assert_eq!(back.episode_ranges(), vec![0..3, 3..5]);
        assert_eq!(back.episode_returns(), vec![-3.0, -2.0]);
    }

    #[test]
    fn layout_offsets_follow_header() {
        let d = tiny_grid();
        let bytes = d.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"ILDS");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 5);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 2);
        let meta_len = u32::from_le_bytes(bytes[32..36].try_into().unwrap()) as usize;
        let states_at = 36 + meta_len;
        assert_eq!(f32::from_le_bytes(bytes[states_at..states_at + 4].try_into().unwrap()), 2.0);
        let starts_at = states_at + 5 * 8 + 5 * 4 + 5 * 8 * 2;
        assert_eq!(&bytes[starts_at..starts_at + 5], &[1, 0, 0, 1, 0]);
        assert_eq!(bytes.len(), starts_at + 5 + 32);
    }

    #[test]
    fn rejects_invalid_before_write() {
        let mut d = tiny_grid();
        d.episode_starts[0] = false;
        d.metadata.episode_seeds = vec![11];
        assert!(matches!(d.to_bytes(), Err(Error::InvalidDataset(_))));

        let mut d = tiny_grid();
        d.accumulated_rewards[1] = -2.5;
        assert!(matches!(d.to_bytes(), Err(Error::InvalidDataset(_))));

        let mut d = tiny_grid();
        d.actions = ActionColumn::Discrete(vec![1, 0, 4, 3, 3]);
        assert!(matches!(d.to_bytes(), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn corruption_cases() {
        let bytes = tiny_grid().to_bytes().unwrap();
        let p = Path::new("mem");

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(DatasetFile::from_bytes(&bad, p), Err(Error::NotAnIldsFile { .. })));

        // Drop 8 bytes from the rewards column, keeping the trailer in place.
        let meta_len = u32::from_le_bytes(bytes[32..36].try_into().unwrap()) as usize;
        let rewards_at = 36 + meta_len + 5 * 8 + 5 * 4;
        let mut bad = bytes[..rewards_at + 8].to_vec();
        bad.extend_from_slice(&bytes[rewards_at + 16..]);
        assert!(matches!(DatasetFile::from_bytes(&bad, p), Err(Error::CorruptFile(_))));

        let mut bad = bytes.clone();
        let last = bad.len() - 1;
        bad[last] ^= 0xFF;
        assert!(matches!(DatasetFile::from_bytes(&bad, p), Err(Error::CorruptFile(_))));

        let mut bad = bytes.clone();
        bad[rewards_at] ^= 0x01;
        assert!(matches!(DatasetFile::from_bytes(&bad, p), Err(Error::CorruptFile(_))));

        assert!(matches!(DatasetFile::from_bytes(&bytes[..20], p), Err(Error::CorruptFile(_))));
    }

    #[test]
    fn continuous_roundtrip() {
        let d = DatasetFile {
            descriptor: descriptor(LINEREACHER_ID).unwrap(),
            states: vec![0.5, 0.3, 0.1],
            actions: ActionColumn::Continuous(vec![-0.2, -0.2, -0.1]),
            rewards: vec![-0.3, -0.1, 0.0],
            accumulated_rewards: vec![-0.3, -0.4, -0.4],
            episode_starts: vec![true, false, false],
            metadata: metadata(LINEREACHER_ID, vec![3]),
        };
        let bytes = d.to_bytes().unwrap();
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 0);
        assert_eq!(DatasetFile::from_bytes(&bytes, Path::new("mem")).unwrap(), d);
    }

    #[test]
    fn empty_dataset_roundtrips() {
        let mut d = tiny_grid();
        d.states.clear();
        d.actions = ActionColumn::Discrete(vec![]);
        d.rewards.clear();
        d.accumulated_rewards.clear();
        d.episode_starts.clear();
        d.metadata.episode_seeds.clear();
        let bytes = d.to_bytes().unwrap();
        let back = DatasetFile::from_bytes(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back.n_episodes(), 0);
        assert!(back.episode_ranges().is_empty());
    }
}
