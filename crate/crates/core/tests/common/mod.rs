//! Shared test support: independent oracles (Keccak, RLP, Merkle) and
//! chain fixtures. The oracles deliberately avoid the crate's own
//! implementations so cross-checks mean something.

#![allow(dead_code)]

pub mod fuzz;

use caretrust_core::config::{ChainConfig, Genesis, GenesisAccount};
use caretrust_core::crypto::{Address, PrivateKey};
use caretrust_core::Chain;

pub const ETH: u128 = 1_000_000_000_000_000_000;

/// Deterministic test key from a small integer.
pub fn key(v: u64) -> PrivateKey {
    let mut bytes = [0u8; 32];
    bytes[24..].copy_from_slice(&v.to_be_bytes());
    PrivateKey::from_bytes(bytes).expect("small scalars are valid")
}

pub fn addr(v: u64) -> Address {
    key(v).address()
}

pub fn genesis_with(accounts: &[(u64, u128)]) -> Genesis {
    Genesis {
        coinbase: addr(900),
        bootstrap_authority: addr(1),
        accounts: accounts
            .iter()
            .map(|(k, balance_wei)| GenesisAccount {
                address: addr(*k),
                balance_wei: *balance_wei,
            })
            .collect(),
        genesis_timestamp: 0,
    }
}

pub fn chain_with(accounts: &[(u64, u128)]) -> Chain {
    Chain::new(ChainConfig::default(), &genesis_with(accounts))
}

// ---------------------------------------------------------------------------
// Independent Keccak-256 oracle (matrix-form implementation).
// ---------------------------------------------------------------------------

const ORACLE_RC: [u64; 24] = [
    0x0000000000000001,
    0x0000000000008082,
    0x800000000000808A,
    0x8000000080008000,
    0x000000000000808B,
    0x0000000080000001,
    0x8000000080008081,
    0x8000000000008009,
    0x000000000000008A,
    0x0000000000000088,
    0x0000000080008009,
    0x000000008000000A,
    0x000000008000808B,
    0x800000000000008B,
    0x8000000000008089,
    0x8000000000008003,
    0x8000000000008002,
    0x8000000000000080,
    0x000000000000800A,
    0x800000008000000A,
    0x8000000080008081,
    0x8000000000008080,
    0x0000000080000001,
    0x8000000080008008,
];

const ORACLE_ROT: [[u32; 5]; 5] = [
    [0, 36, 3, 41, 18],
    [1, 44, 10, 45, 2],
    [62, 6, 43, 15, 61],
    [28, 55, 25, 21, 56],
    [27, 20, 39, 8, 14],
];

fn oracle_permutation(state: &mut [[u64; 5]; 5]) {
    for rc in ORACLE_RC {
        let mut c = [0u64; 5];
        for (x, cx) in c.iter_mut().enumerate() {
            *cx = state[x][0] ^ state[x][1] ^ state[x][2] ^ state[x][3] ^ state[x][4];
        }
        for x in 0..5 {
            let d = c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1);
            for y in 0..5 {
                state[x][y] ^= d;
            }
        }
        let mut b = [[0u64; 5]; 5];
        for x in 0..5 {
            for y in 0..5 {
                b[y][(2 * x + 3 * y) % 5] = state[x][y].rotate_left(ORACLE_ROT[x][y]);
            }
        }
        for x in 0..5 {
            for y in 0..5 {
                state[x][y] = b[x][y] ^ (!b[(x + 1) % 5][y] & b[(x + 2) % 5][y]);
            }
        }
        state[0][0] ^= rc;
    }
}

/// Reference Keccak-256 with original padding.
pub fn keccak_oracle(data: &[u8]) -> [u8; 32] {
    const RATE: usize = 136;
    let mut padded = data.to_vec();
    let pad_len = RATE - padded.len() % RATE;
    padded.push(0x01);
    padded.extend(std::iter::repeat_n(0u8, pad_len.saturating_sub(2)));
    if pad_len >= 2 {
        padded.push(0x80);
    } else {
        // pad_len == 1: single byte 0x81 covers both markers.
        *padded.last_mut().expect("nonempty") = 0x81;
    }
    let mut state = [[0u64; 5]; 5];
    for block in padded.chunks(RATE) {
        for (i, lane) in block.chunks(8).enumerate() {
            let mut bytes = [0u8; 8];
            bytes.copy_from_slice(lane);
            state[i % 5][i / 5] ^= u64::from_le_bytes(bytes);
        }
        oracle_permutation(&mut state);
    }
    let mut out = [0u8; 32];
    for i in 0..4 {
        out[i * 8..(i + 1) * 8].copy_from_slice(&state[i % 5][i / 5].to_le_bytes());
    }
    out
}

// ---------------------------------------------------------------------------
// Independent RLP + Merkle + state-root oracle.
// ---------------------------------------------------------------------------

pub fn rlp_oracle_bytes(data: &[u8]) -> Vec<u8> {
    if data.len() == 1 && data[0] <= 0x7F {
        return data.to_vec();
    }
    let mut out = rlp_oracle_len(data.len(), 0x80);
    out.extend_from_slice(data);
    out
}

pub fn rlp_oracle_uint(value: u128) -> Vec<u8> {
    let bytes = value.to_be_bytes();
    let start = bytes.iter().position(|&b| b != 0).unwrap_or(16);
    rlp_oracle_bytes(&bytes[start..])
}

pub fn rlp_oracle_list(items: &[Vec<u8>]) -> Vec<u8> {
    let payload: Vec<u8> = items.concat();
    let mut out = rlp_oracle_len(payload.len(), 0xC0);
    out.extend_from_slice(&payload);
    out
}

fn rlp_oracle_len(len: usize, base: u8) -> Vec<u8> {
    if len < 56 {
        vec![base + len as u8]
    } else {
        let be = (len as u64).to_be_bytes();
        let start = be.iter().position(|&b| b != 0).expect("len >= 56");
        let mut out = vec![base + 55 + (8 - start) as u8];
        out.extend_from_slice(&be[start..]);
        out
    }
}

/// Recursive pairwise Merkle root, odd node promoted.
pub fn merkle_oracle(level: &[[u8; 32]]) -> [u8; 32] {
    match level.len() {
        0 => keccak_oracle(b""),
        1 => level[0],
        _ => {
            let next: Vec<[u8; 32]> = level
                .chunks(2)
                .map(|pair| {
                    if pair.len() == 2 {
                        let mut buf = [0u8; 64];
                        buf[..32].copy_from_slice(&pair[0]);
                        buf[32..].copy_from_slice(&pair[1]);
                        keccak_oracle(&buf)
                    } else {
                        pair[0]
                    }
                })
                .collect();
            merkle_oracle(&next)
        }
    }
}

/// Recompute a world-state root from raw account data, entirely through
/// the oracle code path.
pub fn state_root_oracle(
    accounts: &[(Address, u64, u128)],
    storage: &[(Address, Vec<([u8; 32], [u8; 32])>)],
) -> [u8; 32] {
    let mut rows: std::collections::BTreeMap<Address, (u64, u128)> = accounts
        .iter()
        .map(|(a, nonce, balance)| (*a, (*nonce, *balance)))
        .collect();
    for (address, _) in storage {
        rows.entry(*address).or_insert((0, 0));
    }
    rows.retain(|address, (nonce, balance)| {
        *nonce != 0 || *balance != 0 || storage.iter().any(|(a, s)| a == address && !s.is_empty())
    });
    let leaves: Vec<[u8; 32]> = rows
        .iter()
        .map(|(address, (nonce, balance))| {
            let storage_entries = storage
                .iter()
                .find(|(a, _)| a == address)
                .map(|(_, entries)| entries.clone())
                .unwrap_or_default();
            let mut sorted = storage_entries;
            sorted.sort_by_key(|(k, _)| *k);
            let storage_leaves: Vec<[u8; 32]> = sorted
                .iter()
                .map(|(k, v)| {
                    keccak_oracle(&rlp_oracle_list(&[
                        rlp_oracle_bytes(k),
                        rlp_oracle_bytes(v),
                    ]))
                })
                .collect();
            let storage_root = merkle_oracle(&storage_leaves);
            let account_hash = keccak_oracle(&rlp_oracle_list(&[
                rlp_oracle_uint(*nonce as u128),
                rlp_oracle_uint(*balance),
                rlp_oracle_bytes(&storage_root),
            ]));
            keccak_oracle(&rlp_oracle_list(&[
                rlp_oracle_bytes(address.as_bytes()),
                rlp_oracle_bytes(&account_hash),
            ]))
        })
        .collect();
    merkle_oracle(&leaves)
}
