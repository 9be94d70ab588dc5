//! MPS checkpoints: a short text header followed by the core byte layout.
//!
//! ```text
//! varanneal-mps 1\n
//! <key>=<value> lines\n
//! \n
//! <MpsState::to_bytes payload>
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{ensure, Context};
use varanneal_core::mps::MpsState;

const MAGIC: &str = "varanneal-mps 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub state: MpsState,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("{MAGIC}\n");
        for (k, v) in &self.meta {
            out.push_str(&format!("{k}={v}\n"));
        }
        out.push('\n');
        let mut bytes = out.into_bytes();
        bytes.extend(self.state.to_bytes());
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> anyhow::Result<Self> {
        let end = bytes
            .windows(2)
            .position(|w| w == b"\n\n")
            .context("checkpoint header is not terminated")?;
        let header = std::str::from_utf8(&bytes[..end]).context("checkpoint header is not text")?;
        let mut lines = header.lines();
        ensure!(lines.next() == Some(MAGIC), "not a varanneal checkpoint");
        let mut meta = BTreeMap::new();
        for l in lines {
            let (k, v) = l.split_once('=').context("bad checkpoint header line")?;
            meta.insert(k.to_string(), v.to_string());
        }
        let state = MpsState::from_bytes(&bytes[end + 2..])?;
        Ok(Checkpoint { meta, state })
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        // write then rename, so an interrupted run never leaves a torn file
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_bytes(&bytes).with_context(|| format!("parsing {}", path.display()))
    }
}
