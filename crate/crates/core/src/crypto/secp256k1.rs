//! secp256k1 ECDSA with public-key recovery.
//!
//! Signing uses RFC 6979 deterministic nonces (HMAC-SHA-256) and normalizes
//! to the low-s half of the group, so a given (digest, key) pair always
//! yields the same bytes. Recovery rejects high-s and malformed points.

use sha2::{Digest as _, Sha256};

use super::u256::{Modulus, U256};
use super::CryptoError;

/// Field prime 2^256 - 2^32 - 977.
fn field() -> Modulus {
    Modulus {
        m: U256([
            0xFFFF_FFFE_FFFF_FC2F,
            0xFFFF_FFFF_FFFF_FFFF,
            0xFFFF_FFFF_FFFF_FFFF,
            0xFFFF_FFFF_FFFF_FFFF,
        ]),
        d: [0x1_0000_03D1, 0, 0],
    }
}

/// Group order n.
fn order() -> Modulus {
    Modulus {
        m: U256([
            0xBFD2_5E8C_D036_4141,
            0xBAAE_DCE6_AF48_A03B,
            0xFFFF_FFFF_FFFF_FFFE,
            0xFFFF_FFFF_FFFF_FFFF,
        ]),
        // 2^256 - n
        d: [0x402D_A173_2FC9_BEBF, 0x4551_2319_50B7_5FC4, 0x1],
    }
}

const GENERATOR_X: U256 = U256([
    0x59F2_815B_16F8_1798,
    0x029B_FCDB_2DCE_28D9,
    0x55A0_6295_CE87_0B07,
    0x79BE_667E_F9DC_BBAC,
]);
const GENERATOR_Y: U256 = U256([
    0x9C47_D08F_FB10_D4B8,
    0xFD17_B448_A685_5419,
    0x5DA4_FBFC_0E11_08A8,
    0x483A_DA77_26A3_C465,
]);

/// Curve point in Jacobian coordinates; `z == 0` encodes infinity.
#[derive(Clone, Copy)]
struct Point {
    x: U256,
    y: U256,
    z: U256,
}

impl Point {
    const INFINITY: Point = Point {
        x: U256::ZERO,
        y: U256::ZERO,
        z: U256::ZERO,
    };

    fn generator() -> Point {
        Point {
            x: GENERATOR_X,
            y: GENERATOR_Y,
            z: U256::ONE,
        }
    }

    fn from_affine(x: U256, y: U256) -> Point {
        Point { x, y, z: U256::ONE }
    }

    fn is_infinity(&self) -> bool {
        self.z.is_zero()
    }

    fn double(&self, f: &Modulus) -> Point {
        if self.is_infinity() || self.y.is_zero() {
            return Point::INFINITY;
        }
        let a = f.sqr(&self.x);
        let b = f.sqr(&self.y);
        let c = f.sqr(&b);
        let t = f.sqr(&f.add(&self.x, &b));
        let d = {
            let inner = f.sub(&f.sub(&t, &a), &c);
            f.add(&inner, &inner)
        };
        let e = f.add(&f.add(&a, &a), &a);
        let ff = f.sqr(&e);
        let x3 = f.sub(&ff, &f.add(&d, &d));
        let c8 = {
            let c2 = f.add(&c, &c);
            let c4 = f.add(&c2, &c2);
            f.add(&c4, &c4)
        };
        let y3 = f.sub(&f.mul(&e, &f.sub(&d, &x3)), &c8);
        let z3 = {
            let yz = f.mul(&self.y, &self.z);
            f.add(&yz, &yz)
        };
        Point {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    fn add(&self, other: &Point, f: &Modulus) -> Point {
        if self.is_infinity() {
            return *other;
        }
        if other.is_infinity() {
            return *self;
        }
        let z1z1 = f.sqr(&self.z);
        let z2z2 = f.sqr(&other.z);
        let u1 = f.mul(&self.x, &z2z2);
        let u2 = f.mul(&other.x, &z1z1);
        let s1 = f.mul(&f.mul(&self.y, &other.z), &z2z2);
        let s2 = f.mul(&f.mul(&other.y, &self.z), &z1z1);
        let h = f.sub(&u2, &u1);
        let r = f.sub(&s2, &s1);
        if h.is_zero() {
            if r.is_zero() {
                return self.double(f);
            }
            return Point::INFINITY;
        }
        let hh = f.sqr(&h);
        let hhh = f.mul(&h, &hh);
        let v = f.mul(&u1, &hh);
        let x3 = f.sub(&f.sub(&f.sqr(&r), &hhh), &f.add(&v, &v));
        let y3 = f.sub(&f.mul(&r, &f.sub(&v, &x3)), &f.mul(&s1, &hhh));
        let z3 = f.mul(&f.mul(&self.z, &other.z), &h);
        Point {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    fn mul(&self, scalar: &U256, f: &Modulus) -> Point {
        let mut acc = Point::INFINITY;
        for i in (0..256).rev() {
            acc = acc.double(f);
            if scalar.bit(i) {
                acc = acc.add(self, f);
            }
        }
        acc
    }

    /// Simultaneous a*self + b*other (Shamir's trick).
    fn mul2(&self, a: &U256, other: &Point, b: &U256, f: &Modulus) -> Point {
        let both = self.add(other, f);
        let mut acc = Point::INFINITY;
        for i in (0..256).rev() {
            acc = acc.double(f);
            match (a.bit(i), b.bit(i)) {
                (true, true) => acc = acc.add(&both, f),
                (true, false) => acc = acc.add(self, f),
                (false, true) => acc = acc.add(other, f),
                (false, false) => {}
            }
        }
        acc
    }

    fn to_affine(self, f: &Modulus) -> Option<(U256, U256)> {
        if self.is_infinity() {
            return None;
        }
        let zinv = f.inv(&self.z);
        let zinv2 = f.sqr(&zinv);
        let zinv3 = f.mul(&zinv2, &zinv);
        Some((f.mul(&self.x, &zinv2), f.mul(&self.y, &zinv3)))
    }
}

/// Checks `1 <= scalar < n`.
pub(crate) fn scalar_in_range(scalar: &[u8; 32]) -> bool {
    let s = U256::from_be_bytes(scalar);
    !s.is_zero() && s.lt(&order().m)
}

/// Uncompressed 64-byte public key (x || y, no prefix) for a private scalar.
pub(crate) fn public_key(scalar: &[u8; 32]) -> Result<[u8; 64], CryptoError> {
    if !scalar_in_range(scalar) {
        return Err(CryptoError::InvalidPrivateKey);
    }
    let f = field();
    let k = U256::from_be_bytes(scalar);
    let q = Point::generator().mul(&k, &f);
    let (x, y) = q.to_affine(&f).ok_or(CryptoError::InvalidPrivateKey)?;
    Ok(encode_point(&x, &y))
}

fn encode_point(x: &U256, y: &U256) -> [u8; 64] {
    let mut out = [0u8; 64];
    out[..32].copy_from_slice(&x.to_be_bytes());
    out[32..].copy_from_slice(&y.to_be_bytes());
    out
}

/// Half the group order, for low-s normalization.
fn half_order() -> U256 {
    // (n - 1) / 2
    U256([
        0xDFE9_2F46_681B_20A0,
        0x5D57_6E73_57A4_501D,
        0xFFFF_FFFF_FFFF_FFFF,
        0x7FFF_FFFF_FFFF_FFFF,
    ])
}

pub(crate) fn is_low_s(s: &[u8; 32]) -> bool {
    let v = U256::from_be_bytes(s);
    !v.is_zero() && !half_order().lt(&v)
}

struct HmacDrbg {
    k: [u8; 32],
    v: [u8; 32],
}

fn hmac_sha256(key: &[u8; 32], parts: &[&[u8]]) -> [u8; 32] {
    let mut ipad = [0x36u8; 64];
    let mut opad = [0x5Cu8; 64];
    for i in 0..32 {
        ipad[i] ^= key[i];
        opad[i] ^= key[i];
    }
    let mut inner = Sha256::new();
    inner.update(ipad);
    for p in parts {
        inner.update(p);
    }
    let digest = inner.finalize();
    let mut outer = Sha256::new();
    outer.update(opad);
    outer.update(digest);
    outer.finalize().into()
}

impl HmacDrbg {
    /// RFC 6979 §3.2 steps b-g with SHA-256.
    fn new(key: &[u8; 32], h1: &[u8; 32]) -> HmacDrbg {
        let mut drbg = HmacDrbg {
            k: [0u8; 32],
            v: [1u8; 32],
        };
        drbg.k = hmac_sha256(&drbg.k, &[&drbg.v, &[0x00], key, h1]);
        drbg.v = hmac_sha256(&drbg.k, &[&drbg.v]);
        drbg.k = hmac_sha256(&drbg.k, &[&drbg.v, &[0x01], key, h1]);
        drbg.v = hmac_sha256(&drbg.k, &[&drbg.v]);
        drbg
    }

    fn next(&mut self) -> [u8; 32] {
        self.v = hmac_sha256(&self.k, &[&self.v]);
        self.v
    }

    fn retry(&mut self) {
        self.k = hmac_sha256(&self.k, &[&self.v, &[0x00]]);
        self.v = hmac_sha256(&self.k, &[&self.v]);
    }
}

/// Deterministic ECDSA signature (r, s, recovery id) over a 32-byte digest.
pub(crate) fn sign(digest: &[u8; 32], scalar: &[u8; 32]) -> Result<([u8; 32], [u8; 32], u8), CryptoError> {
    if !scalar_in_range(scalar) {
        return Err(CryptoError::InvalidPrivateKey);
    }
    let f = field();
    let n = order();
    let priv_key = U256::from_be_bytes(scalar);
    let z = n.normalize(&U256::from_be_bytes(digest));
    // bits2octets(h1): the digest reduced mod n, per RFC 6979 §2.3.4.
    let mut drbg = HmacDrbg::new(scalar, &z.to_be_bytes());
    loop {
        let k_bytes = drbg.next();
        let k = U256::from_be_bytes(&k_bytes);
        if k.is_zero() || !k.lt(&n.m) {
            drbg.retry();
            continue;
        }
        let rp = Point::generator().mul(&k, &f);
        let (rx, ry) = match rp.to_affine(&f) {
            Some(p) => p,
            None => {
                drbg.retry();
                continue;
            }
        };
        // Keep the recovery id in {0, 1}: retry the (negligible) rx >= n case.
        if !rx.lt(&n.m) {
            drbg.retry();
            continue;
        }
        let r = rx;
        if r.is_zero() {
            drbg.retry();
            continue;
        }
        let k_inv = n.inv(&k);
        let s = n.mul(&k_inv, &n.add(&z, &n.mul(&r, &priv_key)));
        if s.is_zero() {
            drbg.retry();
            continue;
        }
        let mut v = if ry.is_odd() { 1u8 } else { 0u8 };
        let s = if half_order().lt(&s) {
            v ^= 1;
            n.neg(&s)
        } else {
            s
        };
        return Ok((r.to_be_bytes(), s.to_be_bytes(), v));
    }
}

/// Recover the uncompressed public key from a signature.
pub(crate) fn recover(
    digest: &[u8; 32],
    r: &[u8; 32],
    s: &[u8; 32],
    v: u8,
) -> Result<[u8; 64], CryptoError> {
    if v > 1 {
        return Err(CryptoError::InvalidSignature("recovery id out of range"));
    }
    let f = field();
    let n = order();
    let r_val = U256::from_be_bytes(r);
    if r_val.is_zero() || !r_val.lt(&n.m) {
        return Err(CryptoError::InvalidSignature("r out of range"));
    }
    let s_val = U256::from_be_bytes(s);
    if s_val.is_zero() {
        return Err(CryptoError::InvalidSignature("s out of range"));
    }
    if half_order().lt(&s_val) {
        return Err(CryptoError::InvalidSignature("high-s rejected"));
    }
    // Rebuild the ephemeral point from its x coordinate and parity.
    let x = r_val;
    let seven = U256::from_u64(7);
    let y_sq = f.add(&f.mul(&f.sqr(&x), &x), &seven);
    // sqrt via (p+1)/4; p = 3 mod 4.
    let sqrt_exp = U256([
        0xFFFF_FFFF_BFFF_FF0C,
        0xFFFF_FFFF_FFFF_FFFF,
        0xFFFF_FFFF_FFFF_FFFF,
        0x3FFF_FFFF_FFFF_FFFF,
    ]);
    let mut y = f.pow(&y_sq, &sqrt_exp);
    if f.sqr(&y) != y_sq {
        return Err(CryptoError::InvalidSignature("r not on curve"));
    }
    if y.is_odd() != (v == 1) {
        y = f.neg(&y);
    }
    let rp = Point::from_affine(x, y);
    let z = n.normalize(&U256::from_be_bytes(digest));
    let r_inv = n.inv(&r_val);
    let u1 = n.mul(&n.neg(&z), &r_inv);
    let u2 = n.mul(&s_val, &r_inv);
    let q = Point::generator().mul2(&u1, &rp, &u2, &f);
    let (qx, qy) = q
        .to_affine(&f)
        .ok_or(CryptoError::InvalidSignature("recovered point at infinity"))?;
    Ok(encode_point(&qx, &qy))
}
