//! Config files are flat TOML tables. Flags given on the command line are
//! merged over the file before the whole table is deserialized, so both
//! sources share one set of keys and one validation path.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::UsageError;

/// Reads `path` (if any), overlays every flag that was set, and
/// deserializes the result. Unknown keys are rejected by the target type.
pub fn resolve<C: DeserializeOwned>(path: Option<&Path>, overrides: &impl Serialize) -> Result<C> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| UsageError(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text).map_err(|e| UsageError(format!("config {}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    let flags = toml::Table::try_from(overrides).context("serializing flag overrides")?;
    table.extend(flags);
    C::deserialize(table).map_err(|e| UsageError(format!("invalid configuration: {e}")).into())
}
