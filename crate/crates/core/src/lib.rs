//! A deterministic single-node Ethereum-style ledger with the healthcare
//! trust protocol (governance, licensing, treatments, patient evaluations)
//! built in as native contract state machines.
//!
//! The crate is organized around the protocol layers:
//!
//! - [`crypto`]: Keccak-256, secp256k1 recoverable signatures, RLP, and
//!   address derivation.
//! - [`state`]: the world state, snapshots, and deterministic state roots.
//! - [`gas`], [`tx`], [`mempool`], [`ledger`]: transactions, admission,
//!   gas metering, execution, and block production.
//! - [`trust`]: the five contracts enforcing role-based access control.
//! - [`harness`]: declarative scenario replay and gas/USD cost reports.
//!
//! The `parallel` feature (on by default) fans leaf hashing and batch
//! signature recovery out over rayon; disabling it yields a fully
//! sequential build with identical outputs.

pub mod config;
pub mod crypto;
pub mod gas;
pub mod harness;
pub mod ledger;
pub mod mempool;
pub mod state;
pub mod trust;
pub mod tx;

pub use config::{ChainConfig, Genesis, GenesisAccount};
pub use crypto::{Address, Digest, PrivateKey, PublicKey, Signature};
pub use gas::{GasKey, GasMode, GasTable};
pub use ledger::{Block, BlockRecord, Chain, Receipt, TxStatus};
pub use mempool::{Mempool, RejectReason};
pub use state::{compute_state_root, StateRoot, WorldState};
pub use trust::{ContractCall, ContractId, Method, TrustKind, TrustState};
pub use tx::{SignedTransaction, UnsignedTransaction};
