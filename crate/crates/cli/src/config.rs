//! Run configuration: defaults, optional JSON file, flag overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stov_core::entangled::EntangledStateSpec;
use stov_core::{GridSpec, Mode, StovParams};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_u: usize,
    pub n_w: usize,
    pub u_half: f64,
    pub w_half: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_u: 256,
            n_w: 256,
            u_half: 4.0,
            w_half: 4.0,
        }
    }
}

pub const DEFAULT_OUTPUT_DIR: &str = "stov_out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub mode: Mode,
    pub eta: f64,
    pub output_dir: PathBuf,
    /// Optional vector state used by `entangle`, `polscan` and `spectrometer`
    /// when `--terms` is not given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<EntangledStateSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            mode: Mode::Canonical,
            eta: 1.0,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            state: None,
        }
    }
}

/// The part of a config that determines results; written into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSummary {
    pub grid: GridConfig,
    pub mode: Mode,
    pub eta: f64,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = self.grid;
        Ok(GridSpec::new(g.n_u, g.n_w, g.u_half, g.w_half)?)
    }

    pub fn params(&self, q: i32) -> StovParams {
        StovParams {
            q,
            eta: self.eta,
            mode: self.mode,
            ..StovParams::default()
        }
    }

    /// Checks everything that can be checked before any computation starts.
    pub fn validate(&self) -> Result<GridSpec> {
        let grid = self.grid_spec()?;
        self.params(0).validate()?;
        if self.output_dir.as_os_str().is_empty() {
            return Err(CliError::Config("output_dir is empty".into()));
        }
        if let Some(state) = &self.state {
            state.validate()?;
        }
        Ok(grid)
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            grid: self.grid,
            mode: self.mode,
            eta: self.eta,
        }
    }

    /// Creates `<output_dir>/<name>` and returns it.
    pub fn command_dir(&self, name: &str) -> Result<PathBuf> {
        let dir = self.output_dir.join(name);
        fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(dir)
    }
}

/// `NxM` grid sizes.
pub fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got '{s}'"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    Ok((n(a)?, n(b)?))
}

/// `U:W` half-extents.
pub fn parse_extent(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected U:W, got '{s}'"))?;
    let x = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    Ok((x(a)?, x(b)?))
}

/// Accepts `-1`, `+1` and the typographic minus sign.
pub fn parse_charge(s: &str) -> std::result::Result<i32, String> {
    let t = s.trim().replace('\u{2212}', "-");
    let t = t.strip_prefix('+').unwrap_or(&t);
    t.parse::<i32>()
        .map_err(|e| format!("bad charge '{s}': {e}"))
}
