//! Mempool admission and block-packing order.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::crypto::{Address, Digest};
use crate::gas::INTRINSIC_GAS;
use crate::state::WorldState;
use crate::tx::SignedTransaction;

/// Distinct rejection reasons for failed admission checks.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RejectReason {
    #[error("signature does not recover a sender: {0}")]
    InvalidSignature(String),
    #[error("nonce too low: expected {expected}, got {got}")]
    NonceTooLow { expected: u64, got: u64 },
    #[error("nonce gap: expected {expected}, got {got}")]
    NonceGap { expected: u64, got: u64 },
    #[error("insufficient balance for gas: minimum {required} wei, balance {balance}")]
    InsufficientBalanceForGas { required: u128, balance: u128 },
    #[error("gas limit {got} below intrinsic cost {intrinsic}")]
    GasLimitBelowIntrinsic { got: u64, intrinsic: u64 },
    #[error("replacement for (sender, nonce) must raise the gas price")]
    ReplacementUnderpriced,
    #[error("contract creation is not supported; transactions need a recipient")]
    CreationUnsupported,
}

#[derive(Clone, Debug)]
pub struct PoolEntry {
    pub tx: SignedTransaction,
    pub sender: Address,
    pub hash: Digest,
}

/// Pending transactions keyed by (sender, nonce). Admission enforces the
/// minimum-balance rule and per-sender gapless nonces against state plus the
/// pool's own contents.
#[derive(Clone, Debug, Default)]
pub struct Mempool {
    entries: BTreeMap<(Address, u64), PoolEntry>,
}

impl Mempool {
    pub fn new() -> Mempool {
        Mempool::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Validate a transaction against current state and pool, then admit it.
    /// Returns the recovered sender on acceptance.
    pub fn submit(
        &mut self,
        state: &WorldState,
        tx: SignedTransaction,
    ) -> Result<Address, RejectReason> {
        let sender = validate_stateless(&tx)?;
        let expected_next = state.nonce(&sender) + 1;
        if tx.nonce < expected_next {
            return Err(RejectReason::NonceTooLow {
                expected: expected_next,
                got: tx.nonce,
            });
        }
        // A replacement slot is exempt from the gap check.
        if let Some(existing) = self.entries.get(&(sender, tx.nonce)) {
            if tx.gas_price <= existing.tx.gas_price {
                return Err(RejectReason::ReplacementUnderpriced);
            }
        } else {
            let next_free = (expected_next..)
                .find(|n| !self.entries.contains_key(&(sender, *n)))
                .expect("nonce space is unbounded");
            if tx.nonce != next_free {
                return Err(RejectReason::NonceGap {
                    expected: next_free,
                    got: tx.nonce,
                });
            }
        }
        check_min_balance(state, &sender, &tx)?;
        let hash = tx.hash();
        self.entries
            .insert((sender, tx.nonce), PoolEntry { tx, sender, hash });
        Ok(sender)
    }

    /// Highest-priority executable transaction: gas price descending, ties by
    /// lower sender address then lower nonce. Only nonces that directly
    /// follow the sender's state nonce are candidates.
    pub fn next_ready(&self, state: &WorldState) -> Option<&PoolEntry> {
        self.entries
            .values()
            .filter(|e| e.tx.nonce == state.nonce(&e.sender) + 1)
            .max_by(|a, b| {
                a.tx.gas_price
                    .cmp(&b.tx.gas_price)
                    .then_with(|| b.sender.cmp(&a.sender))
                    .then_with(|| b.tx.nonce.cmp(&a.tx.nonce))
            })
    }

    pub fn remove(&mut self, sender: &Address, nonce: u64) -> Option<PoolEntry> {
        self.entries.remove(&(*sender, nonce))
    }

    /// Put back an entry that was pulled for a block but not included.
    pub fn reinsert(&mut self, entry: PoolEntry) {
        self.entries.insert((entry.sender, entry.tx.nonce), entry);
    }

    /// Drop entries whose nonce can no longer be used.
    pub fn prune_stale(&mut self, state: &WorldState) {
        self.entries
            .retain(|(sender, nonce), _| *nonce > state.nonce(sender));
    }

    pub fn entries(&self) -> impl Iterator<Item = &PoolEntry> {
        self.entries.values()
    }
}

/// Signature, shape, and intrinsic-gas checks that need no state.
fn validate_stateless(tx: &SignedTransaction) -> Result<Address, RejectReason> {
    let sender = tx
        .sender()
        .map_err(|e| RejectReason::InvalidSignature(e.to_string()))?;
    if tx.to.is_none() {
        return Err(RejectReason::CreationUnsupported);
    }
    if tx.gas_limit < INTRINSIC_GAS {
        return Err(RejectReason::GasLimitBelowIntrinsic {
            got: tx.gas_limit,
            intrinsic: INTRINSIC_GAS,
        });
    }
    Ok(sender)
}

/// The minimum-balance rule: gas_price * gas_limit must be covered.
pub fn check_min_balance(
    state: &WorldState,
    sender: &Address,
    tx: &SignedTransaction,
) -> Result<(), RejectReason> {
    let required = tx.gas_price * tx.gas_limit as u128;
    let balance = state.balance(sender);
    if required > balance {
        return Err(RejectReason::InsufficientBalanceForGas { required, balance });
    }
    Ok(())
}

/// Full admission validation without inserting; used by inclusion-time
/// re-checks and the HTTP submit path.
pub fn validate_for_mempool(
    state: &WorldState,
    pool: &Mempool,
    tx: &SignedTransaction,
) -> Result<Address, RejectReason> {
    let mut scratch = pool.clone();
    scratch.submit(state, tx.clone())
}
