//! World state: per-address accounts, contract storage, snapshot/revert, and
//! the deterministic state root.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{keccak256, rlp_encode, Address, Digest, RlpItem};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateError {
    #[error("insufficient balance: account {account} holds {balance} wei, needs {required}")]
    InsufficientBalance {
        account: Address,
        balance: u128,
        required: u128,
    },
    #[error("stale or unknown snapshot handle")]
    StaleSnapshot,
}

/// Per-address record: latest used nonce and balance in wei.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountState {
    pub nonce: u64,
    pub balance: u128,
}

/// Identifier for a snapshot taken on a particular state lineage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SnapshotHandle(u64);

type Storage = BTreeMap<[u8; 32], [u8; 32]>;

/// The world state: a union of account states plus contract storage.
/// Absent addresses read as zero-valued accounts.
#[derive(Clone, Debug, Default)]
pub struct WorldState {
    accounts: BTreeMap<Address, AccountState>,
    contract_storage: BTreeMap<Address, Storage>,
    snapshots: Vec<SnapshotEntry>,
    next_snapshot_id: u64,
}

#[derive(Clone, Debug)]
struct SnapshotEntry {
    id: u64,
    accounts: BTreeMap<Address, AccountState>,
    contract_storage: BTreeMap<Address, Storage>,
}

/// Deterministic commitment over the full world state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateRoot(pub Digest);

impl WorldState {
    pub fn new() -> WorldState {
        WorldState::default()
    }

    pub fn account(&self, address: &Address) -> AccountState {
        self.accounts.get(address).copied().unwrap_or_default()
    }

    pub fn balance(&self, address: &Address) -> u128 {
        self.account(address).balance
    }

    pub fn nonce(&self, address: &Address) -> u64 {
        self.account(address).nonce
    }

    pub fn credit(&mut self, address: &Address, amount: u128) {
        if amount == 0 {
            return;
        }
        self.accounts.entry(*address).or_default().balance += amount;
    }

    pub fn debit(&mut self, address: &Address, amount: u128) -> Result<(), StateError> {
        let entry = self.accounts.entry(*address).or_default();
        if entry.balance < amount {
            return Err(StateError::InsufficientBalance {
                account: *address,
                balance: entry.balance,
                required: amount,
            });
        }
        entry.balance -= amount;
        Ok(())
    }

    /// Record a consumed nonce. Nonces never decrease.
    pub fn set_nonce(&mut self, address: &Address, nonce: u64) {
        let entry = self.accounts.entry(*address).or_default();
        debug_assert!(nonce >= entry.nonce, "nonce must not decrease");
        entry.nonce = nonce;
    }

    /// Move `amount` wei between accounts; no mutation on failure.
    pub fn apply_transfer(
        &mut self,
        from: &Address,
        to: &Address,
        amount: u128,
    ) -> Result<(), StateError> {
        let from_balance = self.balance(from);
        if from_balance < amount {
            return Err(StateError::InsufficientBalance {
                account: *from,
                balance: from_balance,
                required: amount,
            });
        }
        if amount == 0 {
            return Ok(());
        }
        self.accounts.entry(*from).or_default().balance -= amount;
        self.accounts.entry(*to).or_default().balance += amount;
        Ok(())
    }

    pub fn storage_value(&self, contract: &Address, key: &[u8; 32]) -> [u8; 32] {
        self.contract_storage
            .get(contract)
            .and_then(|s| s.get(key))
            .copied()
            .unwrap_or([0u8; 32])
    }

    pub fn set_storage(&mut self, contract: &Address, key: [u8; 32], value: [u8; 32]) {
        self.contract_storage
            .entry(*contract)
            .or_default()
            .insert(key, value);
    }

    pub fn total_balance(&self) -> u128 {
        self.accounts.values().map(|a| a.balance).sum()
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&Address, &AccountState)> {
        self.accounts.iter()
    }

    /// Capture the current contents; handles revert in LIFO order.
    pub fn snapshot(&mut self) -> SnapshotHandle {
        let id = self.next_snapshot_id;
        self.next_snapshot_id += 1;
        self.snapshots.push(SnapshotEntry {
            id,
            accounts: self.accounts.clone(),
            contract_storage: self.contract_storage.clone(),
        });
        SnapshotHandle(id)
    }

    /// Restore the contents captured by `handle`. Any snapshots taken after it
    /// become stale.
    pub fn revert(&mut self, handle: SnapshotHandle) -> Result<(), StateError> {
        let pos = self
            .snapshots
            .iter()
            .position(|e| e.id == handle.0)
            .ok_or(StateError::StaleSnapshot)?;
        let entry = self.snapshots.drain(pos..).next().expect("position exists");
        self.accounts = entry.accounts;
        self.contract_storage = entry.contract_storage;
        Ok(())
    }

    /// Drop the innermost snapshot without restoring it.
    pub fn discard_snapshot(&mut self, handle: SnapshotHandle) -> Result<(), StateError> {
        match self.snapshots.last() {
            Some(entry) if entry.id == handle.0 => {
                self.snapshots.pop();
                Ok(())
            }
            _ => Err(StateError::StaleSnapshot),
        }
    }
}

/// Binary Merkle root over an ordered leaf list. Odd nodes are promoted
/// unchanged; the empty list hashes to keccak256("").
pub fn merkle_root(mut level: Vec<Digest>) -> Digest {
    if level.is_empty() {
        return keccak256(b"");
    }
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        for pair in level.chunks(2) {
            if pair.len() == 2 {
                let mut buf = [0u8; 64];
                buf[..32].copy_from_slice(pair[0].as_bytes());
                buf[32..].copy_from_slice(pair[1].as_bytes());
                next.push(keccak256(&buf));
            } else {
                next.push(pair[0]);
            }
        }
        level = next;
    }
    level[0]
}

fn storage_root(storage: Option<&Storage>) -> Digest {
    let leaves: Vec<Digest> = storage
        .map(|entries| {
            entries
                .iter()
                .map(|(k, v)| {
                    keccak256(&rlp_encode(&RlpItem::List(vec![
                        RlpItem::bytes(k),
                        RlpItem::bytes(v),
                    ])))
                })
                .collect()
        })
        .unwrap_or_default();
    merkle_root(leaves)
}

fn account_leaf(address: &Address, account: &AccountState, storage: Option<&Storage>) -> Digest {
    let account_hash = keccak256(&rlp_encode(&RlpItem::List(vec![
        RlpItem::uint(account.nonce as u128),
        RlpItem::uint(account.balance),
        RlpItem::bytes(storage_root(storage).as_bytes()),
    ])));
    keccak256(&rlp_encode(&RlpItem::List(vec![
        RlpItem::bytes(address.as_bytes()),
        RlpItem::bytes(account_hash.as_bytes()),
    ])))
}

fn leaf_inputs(state: &WorldState) -> Vec<(Address, AccountState)> {
    // Addresses holding only storage still contribute a leaf; zero-valued
    // accounts without storage are indistinguishable from absent ones.
    let mut combined: BTreeMap<Address, AccountState> = state.accounts.clone();
    for address in state.contract_storage.keys() {
        combined.entry(*address).or_default();
    }
    combined.retain(|address, account| {
        *account != AccountState::default() || state.contract_storage.contains_key(address)
    });
    combined.into_iter().collect()
}

/// State root over lexicographically sorted account leaves (sequential path).
pub fn compute_state_root_sequential(state: &WorldState) -> StateRoot {
    let leaves = leaf_inputs(state)
        .iter()
        .map(|(addr, account)| account_leaf(addr, account, state.contract_storage.get(addr)))
        .collect();
    StateRoot(merkle_root(leaves))
}

/// State root with leaf hashing fanned out across the rayon pool.
#[cfg(feature = "parallel")]
pub fn compute_state_root_parallel(state: &WorldState) -> StateRoot {
    use rayon::prelude::*;
    let inputs = leaf_inputs(state);
    let leaves = inputs
        .par_iter()
        .map(|(addr, account)| account_leaf(addr, account, state.contract_storage.get(addr)))
        .collect();
    StateRoot(merkle_root(leaves))
}

/// Deterministic commitment over the state contents; identical contents give
/// identical roots regardless of insertion order.
pub fn compute_state_root(state: &WorldState) -> StateRoot {
    #[cfg(feature = "parallel")]
    {
        compute_state_root_parallel(state)
    }
    #[cfg(not(feature = "parallel"))]
    {
        compute_state_root_sequential(state)
    }
}
