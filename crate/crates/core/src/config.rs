//! Chain configuration and the genesis file format.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::Address;
use crate::gas::{GasKey, GasMode, GasTable, BLOCK_GAS_LIMIT};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("config names no genesis: set genesis_path or pass a genesis inline")]
    MissingGenesis,
}

/// Top-level simulator configuration (JSON file).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub block_gas_limit: u64,
    pub block_interval_seconds: u64,
    pub gas_mode: GasMode,
    /// Per-method overrides of the measured gas table.
    pub gas_table: BTreeMap<GasKey, u64>,
    /// Overrides the genesis coinbase when set.
    pub coinbase: Option<Address>,
    pub genesis_path: Option<String>,
    /// Default gas price attached to harness-built transactions, in wei.
    pub default_gas_price_wei: u128,
}

impl Default for ChainConfig {
    fn default() -> ChainConfig {
        ChainConfig {
            block_gas_limit: BLOCK_GAS_LIMIT,
            block_interval_seconds: 20,
            gas_mode: GasMode::Measured,
            gas_table: BTreeMap::new(),
            coinbase: None,
            genesis_path: None,
            default_gas_price_wei: 20_000_000_000,
        }
    }
}

impl ChainConfig {
    pub fn load(path: &Path) -> Result<ChainConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn gas_table(&self) -> GasTable {
        GasTable::with_overrides(self.gas_table.clone())
    }

    /// Load the genesis file referenced by `genesis_path`, resolved relative
    /// to `base` when the path is relative.
    pub fn load_genesis(&self, base: Option<&Path>) -> Result<Genesis, ConfigError> {
        let raw = self.genesis_path.as_ref().ok_or(ConfigError::MissingGenesis)?;
        let mut path = std::path::PathBuf::from(raw);
        if path.is_relative() {
            if let Some(base) = base {
                path = base.join(path);
            }
        }
        Genesis::load(&path)
    }
}

/// One pre-funded account in the genesis file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenesisAccount {
    pub address: Address,
    #[serde(with = "decimal_u128")]
    pub balance_wei: u128,
}

/// Genesis state: funded accounts, the fee recipient, and the bootstrap
/// authority seeded into the governance contract.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Genesis {
    pub coinbase: Address,
    pub bootstrap_authority: Address,
    pub accounts: Vec<GenesisAccount>,
    /// Timestamp of block 0; later blocks add the block interval.
    #[serde(default)]
    pub genesis_timestamp: u64,
}

impl Genesis {
    pub fn load(path: &Path) -> Result<Genesis, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn total_supply(&self) -> u128 {
        self.accounts.iter().map(|a| a.balance_wei).sum()
    }
}

/// Serialize u128 wei amounts as decimal strings; they exceed 64-bit JSON
/// number range.
pub mod decimal_u128 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &u128, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<u128, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
