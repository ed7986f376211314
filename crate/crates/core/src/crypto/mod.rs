//! Ethereum-compatible primitives: Keccak-256 hashing, secp256k1 keys and
//! recoverable signatures, personal-message encoding, RLP, and address
//! derivation.

mod keccak;
pub mod rlp;
mod secp256k1;
mod u256;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rlp::{rlp_decode, rlp_encode, RlpItem};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("private key scalar outside [1, n-1]")]
    InvalidPrivateKey,
    #[error("invalid signature: {0}")]
    InvalidSignature(&'static str),
    #[error("invalid address encoding: {0}")]
    InvalidAddress(String),
    #[error("invalid digest encoding: {0}")]
    InvalidDigest(String),
    #[error("rlp: {0}")]
    Rlp(&'static str),
}

/// 32-byte Keccak-256 digest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        format!("0x{}", hex::encode(self.0))
    }

    pub fn from_hex(s: &str) -> Result<Digest, CryptoError> {
        let raw = s.strip_prefix("0x").unwrap_or(s);
        let bytes = hex::decode(raw).map_err(|e| CryptoError::InvalidDigest(e.to_string()))?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| CryptoError::InvalidDigest(format!("expected 32 bytes in {s}")))?;
        Ok(Digest(arr))
    }
}

impl std::fmt::Debug for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl std::fmt::Display for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Digest, D::Error> {
        let s = String::deserialize(deserializer)?;
        Digest::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Keccak-256 (original padding, not FIPS SHA-3) over arbitrary bytes.
pub fn keccak256(data: &[u8]) -> Digest {
    Digest(keccak::keccak256(data))
}

/// secp256k1 private scalar, big-endian.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PrivateKey([u8; 32]);

impl PrivateKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Result<PrivateKey, CryptoError> {
        if secp256k1::scalar_in_range(&bytes) {
            Ok(PrivateKey(bytes))
        } else {
            Err(CryptoError::InvalidPrivateKey)
        }
    }

    pub fn from_hex(s: &str) -> Result<PrivateKey, CryptoError> {
        let raw = s.strip_prefix("0x").unwrap_or(s);
        let bytes = hex::decode(raw).map_err(|_| CryptoError::InvalidPrivateKey)?;
        let arr: [u8; 32] = bytes.try_into().map_err(|_| CryptoError::InvalidPrivateKey)?;
        PrivateKey::from_bytes(arr)
    }

    /// Deterministic key from a seed label; used by scenario replay.
    pub fn from_seed(seed: &[u8]) -> PrivateKey {
        let mut material = seed.to_vec();
        loop {
            let candidate = keccak256(&material).0;
            if let Ok(key) = PrivateKey::from_bytes(candidate) {
                return key;
            }
            material.push(0x00);
        }
    }

    pub fn to_bytes(self) -> [u8; 32] {
        self.0
    }

    pub fn to_hex(self) -> String {
        format!("0x{}", hex::encode(self.0))
    }

    pub fn public_key(&self) -> PublicKey {
        // Scalar range is checked on construction.
        PublicKey(secp256k1::public_key(&self.0).expect("valid scalar"))
    }

    pub fn address(&self) -> Address {
        derive_address(&self.public_key())
    }
}

impl std::fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("PrivateKey(..)")
    }
}

/// Uncompressed 64-byte public key (x || y, no 0x04 prefix).
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PublicKey([u8; 64]);

impl PublicKey {
    pub fn as_bytes(&self) -> &[u8; 64] {
        &self.0
    }
}

impl std::fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PublicKey(0x{})", hex::encode(self.0))
    }
}

/// Recoverable ECDSA signature; `v` is 0 or 1 internally, 27+v on the wire.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Signature {
    pub r: [u8; 32],
    pub s: [u8; 32],
    pub v: u8,
}

impl Signature {
    /// 65-byte wire form r || s || (27 + v).
    pub fn to_wire(&self) -> [u8; 65] {
        let mut out = [0u8; 65];
        out[..32].copy_from_slice(&self.r);
        out[32..64].copy_from_slice(&self.s);
        out[64] = 27 + self.v;
        out
    }

    pub fn from_wire(bytes: &[u8]) -> Result<Signature, CryptoError> {
        if bytes.len() != 65 {
            return Err(CryptoError::InvalidSignature("expected 65 bytes"));
        }
        let v = match bytes[64] {
            27 => 0,
            28 => 1,
            _ => return Err(CryptoError::InvalidSignature("v byte must be 27 or 28")),
        };
        let mut r = [0u8; 32];
        let mut s = [0u8; 32];
        r.copy_from_slice(&bytes[..32]);
        s.copy_from_slice(&bytes[32..64]);
        Ok(Signature { r, s, v })
    }

    pub fn to_hex(&self) -> String {
        format!("0x{}", hex::encode(self.to_wire()))
    }

    /// Whether `s` lies in the lower half of the group; all signatures this
    /// crate produces do, and recovery rejects the rest.
    pub fn is_low_s(&self) -> bool {
        secp256k1::is_low_s(&self.s)
    }

    pub fn from_hex(text: &str) -> Result<Signature, CryptoError> {
        let raw = text.strip_prefix("0x").unwrap_or(text);
        let bytes = hex::decode(raw)
            .map_err(|_| CryptoError::InvalidSignature("signature hex undecodable"))?;
        Signature::from_wire(&bytes)
    }
}

impl Serialize for Signature {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Signature, D::Error> {
        let s = String::deserialize(deserializer)?;
        Signature::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// 20-byte account address: the low 160 bits of keccak256 over the public key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0; 20]);

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    /// Lowercase 0x-prefixed hex.
    pub fn to_hex(&self) -> String {
        format!("0x{}", hex::encode(self.0))
    }

    /// EIP-55 mixed-case checksum form.
    pub fn to_checksum_hex(&self) -> String {
        let lower = hex::encode(self.0);
        let digest = keccak256(lower.as_bytes());
        let mut out = String::with_capacity(42);
        out.push_str("0x");
        for (i, c) in lower.chars().enumerate() {
            let nibble = (digest.0[i / 2] >> (if i % 2 == 0 { 4 } else { 0 })) & 0x0F;
            if c.is_ascii_alphabetic() && nibble >= 8 {
                out.push(c.to_ascii_uppercase());
            } else {
                out.push(c);
            }
        }
        out
    }

    /// Accepts 40 hex chars, optional 0x prefix, any casing.
    pub fn from_hex(s: &str) -> Result<Address, CryptoError> {
        let raw = s.strip_prefix("0x").unwrap_or(s);
        if raw.len() != 40 {
            return Err(CryptoError::InvalidAddress(format!(
                "expected 40 hex chars, got {}",
                raw.len()
            )));
        }
        let bytes = hex::decode(raw).map_err(|e| CryptoError::InvalidAddress(e.to_string()))?;
        let mut out = [0u8; 20];
        out.copy_from_slice(&bytes);
        Ok(Address(out))
    }
}

impl std::fmt::Debug for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl std::fmt::Display for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Address, D::Error> {
        let s = String::deserialize(deserializer)?;
        Address::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Public key for a private scalar (scalar * G, uncompressed).
pub fn derive_public(key: &PrivateKey) -> PublicKey {
    key.public_key()
}

/// Last 20 bytes of keccak256 over the 64-byte point encoding.
pub fn derive_address(public: &PublicKey) -> Address {
    let digest = keccak256(public.as_bytes());
    let mut out = [0u8; 20];
    out.copy_from_slice(&digest.0[12..]);
    Address(out)
}

/// Deterministic low-s signature over a 32-byte digest.
pub fn sign(digest: &Digest, key: &PrivateKey) -> Result<Signature, CryptoError> {
    let (r, s, v) = secp256k1::sign(digest.as_bytes(), &key.to_bytes())?;
    Ok(Signature { r, s, v })
}

/// Recover the signer's address; verification is equality with the expected
/// address.
pub fn recover(digest: &Digest, sig: &Signature) -> Result<Address, CryptoError> {
    let pub_bytes = secp256k1::recover(digest.as_bytes(), &sig.r, &sig.s, sig.v)?;
    Ok(derive_address(&PublicKey(pub_bytes)))
}

/// `"\x19Ethereum Signed Message:\n" || len(body) || body` for signing
/// non-transactional data.
pub fn encode_personal_message(body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(body.len() + 30);
    out.extend_from_slice(b"\x19Ethereum Signed Message:\n");
    out.extend_from_slice(body.len().to_string().as_bytes());
    out.extend_from_slice(body);
    out
}

/// Contract address: last 20 bytes of keccak256(rlp([sender, nonce - 1])),
/// where `nonce` is the sender's account nonce after the creating send.
pub fn contract_address(sender: &Address, account_nonce_after_send: u64) -> Address {
    assert!(
        account_nonce_after_send >= 1,
        "creating transaction must have consumed a nonce"
    );
    let encoded = rlp_encode(&RlpItem::List(vec![
        RlpItem::bytes(sender.as_bytes()),
        RlpItem::uint((account_nonce_after_send - 1) as u128),
    ]));
    let digest = keccak256(&encoded);
    let mut out = [0u8; 20];
    out.copy_from_slice(&digest.0[12..]);
    Address(out)
}
