//! Fixed-width 256-bit unsigned arithmetic for the curve implementation.
//!
//! Both secp256k1 moduli have the shape `2^256 - d` with a small `d`, so a
//! wide product can be reduced by repeatedly folding the high half times `d`
//! back into the low half.

/// 256-bit unsigned integer, little-endian limbs.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub(crate) struct U256(pub [u64; 4]);

impl U256 {
    pub const ZERO: U256 = U256([0; 4]);
    pub const ONE: U256 = U256([1, 0, 0, 0]);

    pub fn from_be_bytes(bytes: &[u8; 32]) -> U256 {
        let mut limbs = [0u64; 4];
        for (i, limb) in limbs.iter_mut().enumerate() {
            let off = 32 - 8 * (i + 1);
            let mut chunk = [0u8; 8];
            chunk.copy_from_slice(&bytes[off..off + 8]);
            *limb = u64::from_be_bytes(chunk);
        }
        U256(limbs)
    }

    pub fn to_be_bytes(self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (i, limb) in self.0.iter().enumerate() {
            let off = 32 - 8 * (i + 1);
            out[off..off + 8].copy_from_slice(&limb.to_be_bytes());
        }
        out
    }

    pub fn from_u64(v: u64) -> U256 {
        U256([v, 0, 0, 0])
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 4]
    }

    pub fn is_odd(&self) -> bool {
        self.0[0] & 1 == 1
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn cmp_limbs(&self, other: &U256) -> core::cmp::Ordering {
        for i in (0..4).rev() {
            match self.0[i].cmp(&other.0[i]) {
                core::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        core::cmp::Ordering::Equal
    }

    pub fn lt(&self, other: &U256) -> bool {
        self.cmp_limbs(other) == core::cmp::Ordering::Less
    }

    /// Wrapping addition, returning the carry bit.
    pub fn add_carry(&self, other: &U256) -> (U256, bool) {
        let mut out = [0u64; 4];
        let mut carry = 0u128;
        for i in 0..4 {
            let sum = self.0[i] as u128 + other.0[i] as u128 + carry;
            out[i] = sum as u64;
            carry = sum >> 64;
        }
        (U256(out), carry != 0)
    }

    /// Wrapping subtraction, returning the borrow bit.
    pub fn sub_borrow(&self, other: &U256) -> (U256, bool) {
        let mut out = [0u64; 4];
        let mut borrow = 0i128;
        for i in 0..4 {
            let diff = self.0[i] as i128 - other.0[i] as i128 - borrow;
            if diff < 0 {
                out[i] = (diff + (1i128 << 64)) as u64;
                borrow = 1;
            } else {
                out[i] = diff as u64;
                borrow = 0;
            }
        }
        (U256(out), borrow != 0)
    }

    /// Full 256x256 -> 512-bit schoolbook product.
    pub fn mul_wide(&self, other: &U256) -> [u64; 8] {
        let mut out = [0u64; 8];
        for i in 0..4 {
            let mut carry = 0u128;
            for j in 0..4 {
                let acc = out[i + j] as u128 + self.0[i] as u128 * other.0[j] as u128 + carry;
                out[i + j] = acc as u64;
                carry = acc >> 64;
            }
            out[i + 4] = carry as u64;
        }
        out
    }
}

/// Modulus context for `m = 2^256 - d`.
pub(crate) struct Modulus {
    pub m: U256,
    /// `d = 2^256 - m`, little-endian limbs (at most 3 significant).
    pub d: [u64; 3],
}

impl Modulus {
    /// Reduce a 512-bit product modulo `m` by high-half folding.
    pub fn reduce_wide(&self, wide: [u64; 8]) -> U256 {
        // Working buffer sized for the worst intermediate (hi * d + lo).
        let mut buf = [0u64; 12];
        buf[..8].copy_from_slice(&wide);
        let mut len = 8;
        while len > 4 {
            let mut next = [0u64; 12];
            next[..4].copy_from_slice(&buf[..4]);
            let hi = &buf[4..len];
            // next += hi * d
            for (i, &h) in hi.iter().enumerate() {
                if h == 0 {
                    continue;
                }
                let mut carry = 0u128;
                for (j, &dj) in self.d.iter().enumerate() {
                    let idx = i + j;
                    let acc = next[idx] as u128 + h as u128 * dj as u128 + carry;
                    next[idx] = acc as u64;
                    carry = acc >> 64;
                }
                let mut idx = i + self.d.len();
                while carry != 0 {
                    let acc = next[idx] as u128 + carry;
                    next[idx] = acc as u64;
                    carry = acc >> 64;
                    idx += 1;
                }
            }
            buf = next;
            len = 12;
            while len > 4 && buf[len - 1] == 0 {
                len -= 1;
            }
        }
        let mut r = U256([buf[0], buf[1], buf[2], buf[3]]);
        while !r.lt(&self.m) {
            r = r.sub_borrow(&self.m).0;
        }
        r
    }

    pub fn add(&self, a: &U256, b: &U256) -> U256 {
        let (sum, carry) = a.add_carry(b);
        if carry || !sum.lt(&self.m) {
            sum.sub_borrow(&self.m).0
        } else {
            sum
        }
    }

    pub fn sub(&self, a: &U256, b: &U256) -> U256 {
        let (diff, borrow) = a.sub_borrow(b);
        if borrow {
            diff.add_carry(&self.m).0
        } else {
            diff
        }
    }

    pub fn mul(&self, a: &U256, b: &U256) -> U256 {
        self.reduce_wide(a.mul_wide(b))
    }

    pub fn sqr(&self, a: &U256) -> U256 {
        self.mul(a, a)
    }

    pub fn neg(&self, a: &U256) -> U256 {
        if a.is_zero() {
            U256::ZERO
        } else {
            self.m.sub_borrow(a).0
        }
    }

    /// Reduce an arbitrary 256-bit value into the field.
    pub fn normalize(&self, a: &U256) -> U256 {
        let mut r = *a;
        while !r.lt(&self.m) {
            r = r.sub_borrow(&self.m).0;
        }
        r
    }

    pub fn pow(&self, base: &U256, exp: &U256) -> U256 {
        let mut acc = U256::ONE;
        let mut started = false;
        for i in (0..256).rev() {
            if started {
                acc = self.sqr(&acc);
            }
            if exp.bit(i) {
                if started {
                    acc = self.mul(&acc, base);
                } else {
                    acc = *base;
                    started = true;
                }
            }
        }
        if started {
            acc
        } else {
            U256::ONE
        }
    }

    /// Modular inverse via Fermat's little theorem (modulus is prime).
    pub fn inv(&self, a: &U256) -> U256 {
        let two = U256::from_u64(2);
        let (exp, _) = self.m.sub_borrow(&two);
        self.pow(a, &exp)
    }
}
