//! Recursive Length Prefix encoding, covering byte strings and nested lists.
//! The decoder exists for the transaction wire format.

use super::CryptoError;

/// An RLP item: a byte string or a list of items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RlpItem {
    Bytes(Vec<u8>),
    List(Vec<RlpItem>),
}

impl RlpItem {
    pub fn bytes(data: impl AsRef<[u8]>) -> RlpItem {
        RlpItem::Bytes(data.as_ref().to_vec())
    }

    /// Minimal big-endian integer encoding; zero is the empty string.
    pub fn uint(value: u128) -> RlpItem {
        let bytes = value.to_be_bytes();
        let start = bytes.iter().position(|&b| b != 0).unwrap_or(16);
        RlpItem::Bytes(bytes[start..].to_vec())
    }

    pub fn as_bytes(&self) -> Result<&[u8], CryptoError> {
        match self {
            RlpItem::Bytes(b) => Ok(b),
            RlpItem::List(_) => Err(CryptoError::Rlp("expected byte string, found list")),
        }
    }

    pub fn as_list(&self) -> Result<&[RlpItem], CryptoError> {
        match self {
            RlpItem::List(items) => Ok(items),
            RlpItem::Bytes(_) => Err(CryptoError::Rlp("expected list, found byte string")),
        }
    }

    pub fn as_uint(&self) -> Result<u128, CryptoError> {
        let bytes = self.as_bytes()?;
        if bytes.len() > 16 {
            return Err(CryptoError::Rlp("integer wider than 128 bits"));
        }
        if bytes.first() == Some(&0) {
            return Err(CryptoError::Rlp("integer has leading zero"));
        }
        let mut buf = [0u8; 16];
        buf[16 - bytes.len()..].copy_from_slice(bytes);
        Ok(u128::from_be_bytes(buf))
    }
}

/// Canonical RLP encoding of an item.
pub fn rlp_encode(item: &RlpItem) -> Vec<u8> {
    match item {
        RlpItem::Bytes(data) => {
            if data.len() == 1 && data[0] <= 0x7F {
                data.clone()
            } else {
                let mut out = length_prefix(data.len(), 0x80);
                out.extend_from_slice(data);
                out
            }
        }
        RlpItem::List(items) => {
            let payload: Vec<u8> = items.iter().flat_map(|i| rlp_encode(i)).collect();
            let mut out = length_prefix(payload.len(), 0xC0);
            out.extend_from_slice(&payload);
            out
        }
    }
}

fn length_prefix(len: usize, base: u8) -> Vec<u8> {
    if len < 56 {
        vec![base + len as u8]
    } else {
        let be = (len as u64).to_be_bytes();
        let start = be.iter().position(|&b| b != 0).unwrap_or(7);
        let mut out = vec![base + 55 + (8 - start) as u8];
        out.extend_from_slice(&be[start..]);
        out
    }
}

/// Decode a single RLP item; trailing bytes are an error.
pub fn rlp_decode(data: &[u8]) -> Result<RlpItem, CryptoError> {
    let (item, rest) = decode_item(data)?;
    if !rest.is_empty() {
        return Err(CryptoError::Rlp("trailing bytes after item"));
    }
    Ok(item)
}

fn decode_item(data: &[u8]) -> Result<(RlpItem, &[u8]), CryptoError> {
    let (&prefix, rest) = data
        .split_first()
        .ok_or(CryptoError::Rlp("empty input"))?;
    match prefix {
        0x00..=0x7F => Ok((RlpItem::Bytes(vec![prefix]), rest)),
        0x80..=0xBF => {
            let (payload, rest) = take_payload(prefix, 0x80, rest)?;
            if payload.len() == 1 && payload[0] <= 0x7F {
                return Err(CryptoError::Rlp("non-canonical single byte"));
            }
            Ok((RlpItem::Bytes(payload.to_vec()), rest))
        }
        0xC0..=0xFF => {
            let (mut payload, rest) = take_payload(prefix, 0xC0, rest)?;
            let mut items = Vec::new();
            while !payload.is_empty() {
                let (item, tail) = decode_item(payload)?;
                items.push(item);
                payload = tail;
            }
            Ok((RlpItem::List(items), rest))
        }
    }
}

fn take_payload(prefix: u8, base: u8, rest: &[u8]) -> Result<(&[u8], &[u8]), CryptoError> {
    let marker = (prefix - base) as usize;
    let (len, rest) = if marker < 56 {
        (marker, rest)
    } else {
        let len_len = marker - 55;
        if rest.len() < len_len {
            return Err(CryptoError::Rlp("truncated length"));
        }
        let (len_bytes, tail) = rest.split_at(len_len);
        if len_bytes.first() == Some(&0) {
            return Err(CryptoError::Rlp("length has leading zero"));
        }
        let mut len = 0usize;
        for &b in len_bytes {
            len = len
                .checked_mul(256)
                .and_then(|l| l.checked_add(b as usize))
                .ok_or(CryptoError::Rlp("length overflow"))?;
        }
        if len < 56 {
            return Err(CryptoError::Rlp("non-canonical long length"));
        }
        (len, tail)
    };
    if rest.len() < len {
        return Err(CryptoError::Rlp("truncated payload"));
    }
    Ok(rest.split_at(len))
}
