//! Transactions: canonical signing digest, the RLP wire format, and sender
//! recovery.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{
    keccak256, recover, rlp_decode, rlp_encode, sign, Address, CryptoError, Digest, PrivateKey,
    RlpItem, Signature,
};
use crate::trust::ContractCall;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TxError {
    #[error("{0}")]
    Crypto(#[from] CryptoError),
    #[error("malformed transaction wire format: {0}")]
    Wire(&'static str),
    #[error("payload is not a contract call: {0}")]
    Payload(String),
}

/// A signed transaction. `to == None` marks a (rejected) creation attempt;
/// an empty payload is a plain value transfer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedTransaction {
    pub nonce: u64,
    pub gas_price: u128,
    pub gas_limit: u64,
    pub to: Option<Address>,
    pub value: u128,
    #[serde(with = "hex_bytes")]
    pub payload: Vec<u8>,
    pub signature: Signature,
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("0x{}", hex::encode(bytes)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(deserializer)?;
        hex::decode(s.strip_prefix("0x").unwrap_or(&s)).map_err(serde::de::Error::custom)
    }
}

/// Unsigned transaction fields, for building and signing.
#[derive(Clone, Debug)]
pub struct UnsignedTransaction {
    pub nonce: u64,
    pub gas_price: u128,
    pub gas_limit: u64,
    pub to: Option<Address>,
    pub value: u128,
    pub payload: Vec<u8>,
}

impl UnsignedTransaction {
    pub fn transfer(nonce: u64, gas_price: u128, gas_limit: u64, to: Address, value: u128) -> Self {
        UnsignedTransaction {
            nonce,
            gas_price,
            gas_limit,
            to: Some(to),
            value,
            payload: Vec::new(),
        }
    }

    pub fn contract_call(
        nonce: u64,
        gas_price: u128,
        gas_limit: u64,
        call: &ContractCall,
    ) -> Self {
        UnsignedTransaction {
            nonce,
            gas_price,
            gas_limit,
            to: Some(call.target.address()),
            value: 0,
            payload: serde_json::to_vec(call).expect("contract call serializes"),
        }
    }

    /// Digest signed by the sender: keccak256 of the canonical unsigned RLP.
    pub fn signing_digest(&self) -> Digest {
        keccak256(&rlp_encode(&unsigned_rlp(
            self.nonce,
            self.gas_price,
            self.gas_limit,
            &self.to,
            self.value,
            &self.payload,
        )))
    }

    pub fn sign(self, key: &PrivateKey) -> Result<SignedTransaction, CryptoError> {
        let signature = sign(&self.signing_digest(), key)?;
        Ok(SignedTransaction {
            nonce: self.nonce,
            gas_price: self.gas_price,
            gas_limit: self.gas_limit,
            to: self.to,
            value: self.value,
            payload: self.payload,
            signature,
        })
    }
}

fn unsigned_rlp(
    nonce: u64,
    gas_price: u128,
    gas_limit: u64,
    to: &Option<Address>,
    value: u128,
    payload: &[u8],
) -> RlpItem {
    RlpItem::List(vec![
        RlpItem::uint(nonce as u128),
        RlpItem::uint(gas_price),
        RlpItem::uint(gas_limit as u128),
        match to {
            Some(addr) => RlpItem::bytes(addr.as_bytes()),
            None => RlpItem::bytes([]),
        },
        RlpItem::uint(value),
        RlpItem::bytes(payload),
    ])
}

impl SignedTransaction {
    pub fn signing_digest(&self) -> Digest {
        keccak256(&rlp_encode(&unsigned_rlp(
            self.nonce,
            self.gas_price,
            self.gas_limit,
            &self.to,
            self.value,
            &self.payload,
        )))
    }

    /// Recover the sender address from the signature.
    pub fn sender(&self) -> Result<Address, CryptoError> {
        recover(&self.signing_digest(), &self.signature)
    }

    /// Canonical wire bytes: rlp([nonce, gas_price, gas_limit, to, value,
    /// payload, 27+v, r, s]).
    pub fn to_wire(&self) -> Vec<u8> {
        let mut fields = match unsigned_rlp(
            self.nonce,
            self.gas_price,
            self.gas_limit,
            &self.to,
            self.value,
            &self.payload,
        ) {
            RlpItem::List(fields) => fields,
            RlpItem::Bytes(_) => unreachable!("unsigned encoding is a list"),
        };
        fields.push(RlpItem::uint((27 + self.signature.v) as u128));
        fields.push(RlpItem::bytes(strip_leading_zeros(&self.signature.r)));
        fields.push(RlpItem::bytes(strip_leading_zeros(&self.signature.s)));
        rlp_encode(&RlpItem::List(fields))
    }

    pub fn from_wire(bytes: &[u8]) -> Result<SignedTransaction, TxError> {
        let item = rlp_decode(bytes)?;
        let fields = item.as_list()?;
        if fields.len() != 9 {
            return Err(TxError::Wire("expected 9 fields"));
        }
        let nonce = fields[0].as_uint()? as u64;
        let gas_price = fields[1].as_uint()?;
        let gas_limit = fields[2].as_uint()? as u64;
        let to_bytes = fields[3].as_bytes()?;
        let to = match to_bytes.len() {
            0 => None,
            20 => {
                let mut addr = [0u8; 20];
                addr.copy_from_slice(to_bytes);
                Some(Address(addr))
            }
            _ => return Err(TxError::Wire("to field must be empty or 20 bytes")),
        };
        let value = fields[4].as_uint()?;
        let payload = fields[5].as_bytes()?.to_vec();
        let v_wire = fields[6].as_uint()?;
        let v = match v_wire {
            27 => 0u8,
            28 => 1u8,
            _ => return Err(TxError::Wire("v must be 27 or 28")),
        };
        let r = pad_to_32(fields[7].as_bytes()?).ok_or(TxError::Wire("r wider than 32 bytes"))?;
        let s = pad_to_32(fields[8].as_bytes()?).ok_or(TxError::Wire("s wider than 32 bytes"))?;
        Ok(SignedTransaction {
            nonce,
            gas_price,
            gas_limit,
            to,
            value,
            payload,
            signature: Signature { r, s, v },
        })
    }

    /// Transaction hash: keccak256 over the wire bytes.
    pub fn hash(&self) -> Digest {
        keccak256(&self.to_wire())
    }

    pub fn is_transfer(&self) -> bool {
        self.payload.is_empty()
    }

    /// Decode the payload as a contract call; empty payloads return None.
    pub fn contract_call(&self) -> Result<Option<ContractCall>, TxError> {
        if self.payload.is_empty() {
            return Ok(None);
        }
        serde_json::from_slice(&self.payload)
            .map(Some)
            .map_err(|e| TxError::Payload(e.to_string()))
    }
}

fn strip_leading_zeros(bytes: &[u8; 32]) -> &[u8] {
    let start = bytes.iter().position(|&b| b != 0).unwrap_or(32);
    &bytes[start..]
}

fn pad_to_32(bytes: &[u8]) -> Option<[u8; 32]> {
    if bytes.len() > 32 {
        return None;
    }
    let mut out = [0u8; 32];
    out[32 - bytes.len()..].copy_from_slice(bytes);
    Some(out)
}

/// Recover senders for a batch of transactions, sequentially.
pub fn recover_senders_sequential(
    txs: &[SignedTransaction],
) -> Vec<Result<Address, CryptoError>> {
    txs.iter().map(|tx| tx.sender()).collect()
}

/// Recover senders for a batch of transactions across the rayon pool.
#[cfg(feature = "parallel")]
pub fn recover_senders_parallel(txs: &[SignedTransaction]) -> Vec<Result<Address, CryptoError>> {
    use rayon::prelude::*;
    txs.par_iter().map(|tx| tx.sender()).collect()
}

/// Batch sender recovery; identical output to the sequential path.
pub fn recover_senders(txs: &[SignedTransaction]) -> Vec<Result<Address, CryptoError>> {
    #[cfg(feature = "parallel")]
    {
        recover_senders_parallel(txs)
    }
    #[cfg(not(feature = "parallel"))]
    {
        recover_senders_sequential(txs)
    }
}
