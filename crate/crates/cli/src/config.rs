//! Run configuration: parsing, preset expansion and validation.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{bail, Context};
use mdi_spdc::presets::{self, Curve, Figure};
use mdi_spdc::protocol::{ModelOptions, SystemParams};
use serde::{Deserialize, Serialize};

/// Published JSON schema of [`RunConfig`].
pub const SCHEMA: &str = include_str!("../schema/run-config.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Expands to the figure's curves; `curves` must then be empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Figure>,
    #[serde(default = "SystemParams::reference")]
    pub system: SystemParams,
    #[serde(default)]
    pub options: ModelOptions,
    #[serde(default)]
    pub curves: Vec<Curve>,
    /// Photon-number comparison table; `n_top` is the largest n listed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub n_top: usize,
}

impl RunConfig {
    pub fn from_preset(fig: Figure) -> Self {
        Self {
            preset: Some(fig),
            system: presets::system(),
            options: ModelOptions::default(),
            curves: Vec::new(),
            distribution: None,
            out_dir: None,
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Replaces the preset tag by the curves and tables it stands for.
    pub fn resolve(mut self) -> anyhow::Result<Self> {
        if let Some(fig) = self.preset {
            if !self.curves.is_empty() {
                bail!("`preset` and `curves` are mutually exclusive");
            }
            self.curves = presets::curves(fig);
            if fig == Figure::Fig3 && self.distribution.is_none() {
                self.distribution = Some(DistributionSpec {
                    n_top: presets::DISTRIBUTION_N_TOP,
                });
            }
        }
        Ok(self)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.system.validate().context("system")?;
        self.options.validate().context("options")?;
        if self.curves.is_empty() && self.distribution.is_none() {
            bail!("nothing to compute: no curves and no distribution table");
        }
        let mut names = BTreeSet::new();
        for c in &self.curves {
            if c.name.is_empty()
                || !c
                    .name
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || matches!(ch, '_' | '-' | '.' | '+'))
            {
                bail!("curve name {:?} is not a plain file stem", c.name);
            }
            if !names.insert(c.name.as_str()) {
                bail!("duplicate curve name {:?}", c.name);
            }
            c.spec
                .validate()
                .with_context(|| format!("curve {}", c.name))?;
        }
        Ok(())
    }
}
