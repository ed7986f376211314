//! Transaction execution and block production: the state-transition and
//! block-transition machinery, with revert-but-charge semantics.

use serde::{Deserialize, Serialize};

use crate::config::{ChainConfig, Genesis};
use crate::crypto::{keccak256, rlp_encode, Address, Digest, RlpItem};
use crate::gas::{micro_gas_cost, GasMode, GasTable, INTRINSIC_GAS};
use crate::mempool::{check_min_balance, Mempool, PoolEntry, RejectReason};
use crate::state::{compute_state_root, merkle_root, StateRoot, WorldState};
use crate::trust::{ContractId, Event, TrustState};
use crate::tx::SignedTransaction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxStatus {
    Succeeded,
    Failed,
}

/// Execution record for one transaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_hash: Digest,
    pub status: TxStatus,
    pub gas_used: u64,
    /// Gas used in the block up to and including this transaction.
    pub cumulative_gas: u64,
    pub logs: Vec<Event>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub return_value: Option<serde_json::Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Block {
    pub number: u64,
    pub timestamp: u64,
    pub parent_hash: Digest,
    pub tx_root: Digest,
    pub state_root: StateRoot,
    pub receipt_root: Digest,
    pub hash: Digest,
    pub transactions: Vec<SignedTransaction>,
}

impl Block {
    fn header_hash(
        number: u64,
        timestamp: u64,
        parent_hash: &Digest,
        tx_root: &Digest,
        state_root: &StateRoot,
        receipt_root: &Digest,
    ) -> Digest {
        keccak256(&rlp_encode(&RlpItem::List(vec![
            RlpItem::uint(number as u128),
            RlpItem::uint(timestamp as u128),
            RlpItem::bytes(parent_hash.as_bytes()),
            RlpItem::bytes(tx_root.as_bytes()),
            RlpItem::bytes(state_root.0.as_bytes()),
            RlpItem::bytes(receipt_root.as_bytes()),
        ])))
    }

    pub fn gas_used(&self, receipts: &[Receipt]) -> u64 {
        receipts.iter().map(|r| r.gas_used).sum()
    }
}

/// A block together with its receipts, as dumped to JSON lines.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockRecord {
    pub block: Block,
    pub receipts: Vec<Receipt>,
}

/// The single-sequencer chain: world state, trust contracts, mempool, and
/// the block list.
#[derive(Clone, Debug)]
pub struct Chain {
    config: ChainConfig,
    gas_table: GasTable,
    state: WorldState,
    trust: TrustState,
    pool: Mempool,
    blocks: Vec<BlockRecord>,
    coinbase: Address,
    genesis_supply: u128,
}

impl Chain {
    pub fn new(config: ChainConfig, genesis: &Genesis) -> Chain {
        let mut state = WorldState::new();
        for account in &genesis.accounts {
            state.credit(&account.address, account.balance_wei);
        }
        let trust = TrustState::genesis(genesis.bootstrap_authority);
        let coinbase = config.coinbase.unwrap_or(genesis.coinbase);
        let gas_table = config.gas_table();
        let mut chain = Chain {
            config,
            gas_table,
            state,
            trust,
            pool: Mempool::new(),
            blocks: Vec::new(),
            coinbase,
            genesis_supply: genesis.total_supply(),
        };
        chain.anchor_trust_state();
        let empty = merkle_root(Vec::new());
        let state_root = compute_state_root(&chain.state);
        let hash = Block::header_hash(
            0,
            genesis.genesis_timestamp,
            &Digest([0; 32]),
            &empty,
            &state_root,
            &empty,
        );
        chain.blocks.push(BlockRecord {
            block: Block {
                number: 0,
                timestamp: genesis.genesis_timestamp,
                parent_hash: Digest([0; 32]),
                tx_root: empty,
                state_root,
                receipt_root: empty,
                hash,
                transactions: Vec::new(),
            },
            receipts: Vec::new(),
        });
        chain
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn trust(&self) -> &TrustState {
        &self.trust
    }

    pub fn coinbase(&self) -> Address {
        self.coinbase
    }

    pub fn genesis_supply(&self) -> u128 {
        self.genesis_supply
    }

    pub fn mempool(&self) -> &Mempool {
        &self.pool
    }

    pub fn blocks(&self) -> &[BlockRecord] {
        &self.blocks
    }

    pub fn block(&self, number: u64) -> Option<&BlockRecord> {
        self.blocks.get(number as usize)
    }

    pub fn latest_block(&self) -> &BlockRecord {
        self.blocks.last().expect("genesis block always exists")
    }

    pub fn latest_state_root(&self) -> StateRoot {
        self.latest_block().block.state_root
    }

    pub fn find_receipt(&self, tx_hash: &Digest) -> Option<(u64, &Receipt)> {
        for record in self.blocks.iter().rev() {
            if let Some(receipt) = record.receipts.iter().find(|r| r.tx_hash == *tx_hash) {
                return Some((record.block.number, receipt));
            }
        }
        None
    }

    /// Mempool admission; returns the transaction hash on acceptance.
    pub fn submit_transaction(&mut self, tx: SignedTransaction) -> Result<Digest, RejectReason> {
        let hash = tx.hash();
        self.pool.submit(&self.state, tx)?;
        Ok(hash)
    }

    /// Write each contract's state digest into its storage, anchoring the
    /// trust state into the world-state root.
    fn anchor_trust_state(&mut self) {
        for (contract, digest) in self.trust.contract_digests() {
            self.state
                .set_storage(&contract.address(), [0u8; 32], digest.0);
        }
    }

    /// Apply one validated transaction. The sender's nonce and the gas charge
    /// survive failure; every other effect is rolled back.
    fn execute_transaction(&mut self, tx: &SignedTransaction, sender: Address) -> Receipt {
        debug_assert_eq!(tx.nonce, self.state.nonce(&sender) + 1, "gapless inclusion");
        self.state.set_nonce(&sender, tx.nonce);
        // Reserve the worst-case fee up front; the unused part is refunded
        // after execution.
        let reservation = tx.gas_price * tx.gas_limit as u128;
        self.state
            .debit(&sender, reservation)
            .expect("inclusion-time validation covers the reservation");

        let snapshot = self.state.snapshot();
        let trust_backup = self.trust.clone();

        let mut outcome = self.run_payload(tx, sender);
        if outcome.gas_used > tx.gas_limit {
            outcome = ExecOutcome {
                gas_used: tx.gas_limit,
                result: Err(format!(
                    "out of gas: needs {} of {} provided",
                    outcome.gas_used, tx.gas_limit
                )),
                events: Vec::new(),
                return_value: None,
            };
        }

        match &outcome.result {
            Ok(()) => {
                self.anchor_trust_state();
                self.state
                    .discard_snapshot(snapshot)
                    .expect("snapshot is innermost");
            }
            Err(_) => {
                self.state.revert(snapshot).expect("snapshot is live");
                self.trust = trust_backup;
            }
        }

        let fee = tx.gas_price * outcome.gas_used as u128;
        self.state.credit(&sender, reservation - fee);
        self.state.credit(&self.coinbase, fee);

        Receipt {
            tx_hash: tx.hash(),
            status: if outcome.result.is_ok() {
                TxStatus::Succeeded
            } else {
                TxStatus::Failed
            },
            gas_used: outcome.gas_used,
            cumulative_gas: 0, // filled during block assembly
            logs: outcome.events,
            failure: outcome.result.err(),
            return_value: outcome.return_value,
        }
    }

    fn run_payload(&mut self, tx: &SignedTransaction, sender: Address) -> ExecOutcome {
        let to = match tx.to {
            Some(to) => to,
            None => {
                return ExecOutcome::failed(INTRINSIC_GAS, "contract creation unsupported".into())
            }
        };
        if let Err(e) = self.state.apply_transfer(&sender, &to, tx.value) {
            return ExecOutcome::failed(INTRINSIC_GAS, e.to_string());
        }
        if tx.is_transfer() {
            return ExecOutcome {
                gas_used: INTRINSIC_GAS,
                result: Ok(()),
                events: Vec::new(),
                return_value: None,
            };
        }
        let call = match tx.contract_call() {
            Ok(Some(call)) => call,
            Ok(None) => unreachable!("non-empty payload"),
            Err(e) => return ExecOutcome::failed(INTRINSIC_GAS, e.to_string()),
        };
        if ContractId::by_address(&to) != Some(call.target) {
            return ExecOutcome::failed(
                INTRINSIC_GAS,
                format!("transaction recipient {to} is not the {:?} contract", call.target),
            );
        }
        let result = self.trust.execute(sender, &call);
        let gas_used = match self.config.gas_mode {
            GasMode::Measured => self.gas_table.cost(result.gas_key),
            GasMode::Micro => micro_gas_cost(&result.trace),
        };
        match result.result {
            Ok(value) => ExecOutcome {
                gas_used,
                result: Ok(()),
                events: result.events,
                return_value: Some(value),
            },
            Err(e) => ExecOutcome::failed(gas_used, e.to_string()),
        }
    }

    /// Assemble and apply the next block: pick transactions by descending gas
    /// price (ties: lower sender address, then lower nonce) until the next
    /// one would exceed the block gas limit.
    pub fn produce_block(&mut self) -> &BlockRecord {
        let (parent_number, parent_timestamp, parent_hash) = {
            let parent = &self.latest_block().block;
            (parent.number, parent.timestamp, parent.hash)
        };
        let mut receipts: Vec<Receipt> = Vec::new();
        let mut transactions = Vec::new();
        let mut gas_in_block = 0u64;
        let mut set_aside: Vec<PoolEntry> = Vec::new();

        loop {
            let Some(candidate) = self.pool.next_ready(&self.state) else {
                break;
            };
            if gas_in_block + candidate.tx.gas_limit > self.config.block_gas_limit {
                break;
            }
            let entry = candidate.clone();
            self.pool.remove(&entry.sender, entry.tx.nonce);
            // Re-validate the minimum balance against the evolving state.
            if check_min_balance(&self.state, &entry.sender, &entry.tx).is_err() {
                set_aside.push(entry);
                continue;
            }
            let receipt = self.execute_transaction(&entry.tx, entry.sender);
            gas_in_block += receipt.gas_used;
            receipts.push(receipt);
            transactions.push(entry.tx);
        }
        for entry in set_aside {
            self.pool.reinsert(entry);
        }

        let mut cumulative = 0u64;
        for receipt in &mut receipts {
            cumulative += receipt.gas_used;
            receipt.cumulative_gas = cumulative;
        }
        debug_assert!(cumulative <= self.config.block_gas_limit);
        debug_assert_eq!(
            self.state.total_balance(),
            self.genesis_supply,
            "conservation of supply"
        );

        let tx_root = merkle_root(
            transactions
                .iter()
                .map(|tx| keccak256(&tx.to_wire()))
                .collect(),
        );
        let receipt_root = merkle_root(
            receipts
                .iter()
                .map(|r| keccak256(&serde_json::to_vec(r).expect("receipt serializes")))
                .collect(),
        );
        let state_root = compute_state_root(&self.state);
        let number = parent_number + 1;
        let timestamp = parent_timestamp + self.config.block_interval_seconds;
        let hash = Block::header_hash(
            number,
            timestamp,
            &parent_hash,
            &tx_root,
            &state_root,
            &receipt_root,
        );
        self.pool.prune_stale(&self.state);
        self.blocks.push(BlockRecord {
            block: Block {
                number,
                timestamp,
                parent_hash,
                tx_root,
                state_root,
                receipt_root,
                hash,
                transactions,
            },
            receipts,
        });
        self.latest_block()
    }

    /// Serialize every block as one JSON line.
    pub fn dump_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.blocks {
            out.push_str(&serde_json::to_string(record).expect("block serializes"));
            out.push('\n');
        }
        out
    }
}

struct ExecOutcome {
    gas_used: u64,
    result: Result<(), String>,
    events: Vec<Event>,
    return_value: Option<serde_json::Value>,
}

impl ExecOutcome {
    fn failed(gas_used: u64, reason: String) -> ExecOutcome {
        ExecOutcome {
            gas_used,
            result: Err(reason),
            events: Vec::new(),
            return_value: None,
        }
    }
}
