//! Composite-field arithmetic for the AES S-box.
//!
//! GF(2^8) is built as a tower GF(2^8)/GF(2^4)/GF(2^2) using normal bases at
//! every level: (W^2, W) for GF(2^2), (Z^4, Z) for GF(2^4) and (Y^16, Y) for
//! GF(2^8). In every level the high half of the bit pattern is the
//! coefficient of the first basis element, so the multiplicative unity is
//! all-ones (`0b11`, `0xF`, `0xFF`).
//!
//! The plain functions here are the reference arithmetic. The datapath
//! models re-implement the same formulas node by node so that every
//! intermediate can be faulted or recorded; tests tie the two together.

use std::fmt;
use std::ops::{BitXor, BitXorAssign, Mul};

/// AES reduction polynomial x^8 + x^4 + x^3 + x + 1.
pub const AES_POLY: u16 = 0x11B;

/// Constant added by the AES affine transformation.
pub const AFFINE_CONST: u8 = 0x63;

/// Scaling constant of GF(2^8) over GF(2^4): Y^2 + Y + NU = 0.
#[cfg(not(feature = "corrupt-nu"))]
pub const NU: Gf16 = Gf16(0x1);
#[cfg(feature = "corrupt-nu")]
pub const NU: Gf16 = Gf16(0x2);

/// Element of GF(2^2) in normal basis (W^2, W).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Gf4(u8);

/// Element of GF(2^4) as a pair of [`Gf4`] coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Gf16(u8);

/// Element of GF(2^8) in the tower normal basis, `hi || lo`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct TowerElement {
    pub hi: Gf16,
    pub lo: Gf16,
}

impl Gf4 {
    pub const ZERO: Gf4 = Gf4(0);
    pub const ONE: Gf4 = Gf4(0b11);

    pub const fn new(bits: u8) -> Gf4 {
        Gf4(bits & 0b11)
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Gf4> {
        (0..4).map(Gf4)
    }
}

impl Gf16 {
    pub const ZERO: Gf16 = Gf16(0);
    pub const ONE: Gf16 = Gf16(0xF);

    pub const fn new(bits: u8) -> Gf16 {
        Gf16(bits & 0xF)
    }

    pub const fn from_parts(hi: Gf4, lo: Gf4) -> Gf16 {
        Gf16((hi.0 << 2) | lo.0)
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub const fn hi(self) -> Gf4 {
        Gf4(self.0 >> 2)
    }

    pub const fn lo(self) -> Gf4 {
        Gf4(self.0 & 0b11)
    }

    pub fn all() -> impl Iterator<Item = Gf16> {
        (0..16).map(Gf16)
    }
}

impl TowerElement {
    pub const ZERO: TowerElement = TowerElement {
        hi: Gf16::ZERO,
        lo: Gf16::ZERO,
    };
    pub const ONE: TowerElement = TowerElement {
        hi: Gf16::ONE,
        lo: Gf16::ONE,
    };

    pub const fn from_byte(b: u8) -> TowerElement {
        TowerElement {
            hi: Gf16(b >> 4),
            lo: Gf16(b & 0xF),
        }
    }

    pub const fn to_byte(self) -> u8 {
        (self.hi.0 << 4) | self.lo.0
    }
}

impl fmt::Display for TowerElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02x}", self.to_byte())
    }
}

macro_rules! xor_ops {
    ($t:ty) => {
        impl BitXor for $t {
            type Output = $t;
            fn bitxor(self, rhs: $t) -> $t {
                Self(self.0 ^ rhs.0)
            }
        }
        impl BitXorAssign for $t {
            fn bitxor_assign(&mut self, rhs: $t) {
                self.0 ^= rhs.0;
            }
        }
    };
}
xor_ops!(Gf4);
xor_ops!(Gf16);

impl BitXor for TowerElement {
    type Output = TowerElement;
    fn bitxor(self, rhs: TowerElement) -> TowerElement {
        TowerElement {
            hi: self.hi ^ rhs.hi,
            lo: self.lo ^ rhs.lo,
        }
    }
}

impl Mul for Gf4 {
    type Output = Gf4;
    fn mul(self, rhs: Gf4) -> Gf4 {
        Gf4(raw::mul4(self.0, rhs.0))
    }
}

impl Mul for Gf16 {
    type Output = Gf16;
    fn mul(self, rhs: Gf16) -> Gf16 {
        Gf16(raw::mul16(self.0, rhs.0))
    }
}

impl Mul for TowerElement {
    type Output = TowerElement;
    fn mul(self, rhs: TowerElement) -> TowerElement {
        TowerElement::from_byte(raw::mul256(self.to_byte(), rhs.to_byte()))
    }
}

/// Bit-level formulas on raw `u8` carriers. Shared by the typed API above
/// and by the datapath models, which work on share arrays of raw values.
pub mod raw {
    use super::NU;

    /// GF(2^2) product (the two-AND, three-XOR normal-basis multiplier).
    #[inline(always)]
    pub const fn mul4(x: u8, y: u8) -> u8 {
        let (a, b) = (x >> 1 & 1, x & 1);
        let (c, d) = (y >> 1 & 1, y & 1);
        let e = (a ^ b) & (c ^ d);
        let p = (a & c) ^ e;
        let q = (b & d) ^ e;
        (p << 1) | q
    }

    /// Squaring in GF(2^2); in a normal basis this is a bit swap and it is
    /// also the inverse.
    #[inline(always)]
    pub const fn sq4(x: u8) -> u8 {
        ((x & 1) << 1) | (x >> 1 & 1)
    }

    /// Multiplication by N = W^2.
    #[inline(always)]
    pub const fn scl_n4(x: u8) -> u8 {
        let (a, b) = (x >> 1 & 1, x & 1);
        (b << 1) | (a ^ b)
    }

    #[inline(always)]
    pub const fn mul16(x: u8, y: u8) -> u8 {
        let (a, b) = (x >> 2, x & 3);
        let (c, d) = (y >> 2, y & 3);
        let e = scl_n4(mul4(a ^ b, c ^ d));
        let p = mul4(a, c) ^ e;
        let q = mul4(b, d) ^ e;
        (p << 2) | q
    }

    #[inline(always)]
    pub const fn inv16(x: u8) -> u8 {
        let (a, b) = (x >> 2, x & 3);
        let c = scl_n4(sq4(a ^ b));
        let d = mul4(a, b);
        let e = sq4(c ^ d);
        let p = mul4(e, b);
        let q = mul4(e, a);
        (p << 2) | q
    }

    pub const SQ16: [u8; 16] = {
        let mut t = [0u8; 16];
        let mut i = 0;
        while i < 16 {
            t[i] = mul16(i as u8, i as u8);
            i += 1;
        }
        t
    };

    /// `nu * a^2` for the given scaling constant.
    #[inline(always)]
    pub const fn sq_scale_with(a: u8, nu: u8) -> u8 {
        mul16(nu, SQ16[a as usize & 0xF])
    }

    pub const SQ_SCALE16: [u8; 16] = {
        let mut t = [0u8; 16];
        let mut i = 0;
        while i < 16 {
            t[i] = sq_scale_with(i as u8, NU.0);
            i += 1;
        }
        t
    };

    #[inline(always)]
    pub const fn sq_scale16(a: u8) -> u8 {
        SQ_SCALE16[a as usize & 0xF]
    }

    /// GF(2^8) inversion in the tower basis with an explicit scaling
    /// constant. `inv256` is this with [`NU`].
    #[inline(always)]
    pub const fn inv256_with(x: u8, nu: u8) -> u8 {
        let (a, b) = (x >> 4, x & 0xF);
        let c = sq_scale_with(a ^ b, nu);
        let d = mul16(a, b);
        let e = inv16(c ^ d);
        let p = mul16(e, b);
        let q = mul16(e, a);
        (p << 4) | q
    }

    #[inline(always)]
    pub const fn inv256(x: u8) -> u8 {
        inv256_with(x, NU.0)
    }

    #[inline(always)]
    pub const fn mul256(x: u8, y: u8) -> u8 {
        let (a, b) = (x >> 4, x & 0xF);
        let (c, d) = (y >> 4, y & 0xF);
        let e = mul16(NU.0, mul16(a ^ b, c ^ d));
        let p = mul16(a, c) ^ e;
        let q = mul16(b, d) ^ e;
        (p << 4) | q
    }
}

pub fn gf4_mul(s: Gf4, t: Gf4) -> Gf4 {
    s * t
}

pub fn gf16_mul(a: Gf16, b: Gf16) -> Gf16 {
    a * b
}

pub fn gf16_inv(a: Gf16) -> Gf16 {
    Gf16(raw::inv16(a.0))
}

/// `NU * a^2`, the first term of the GF(2^4) inverter input.
pub fn gf16_sq_scale_nu(a: Gf16) -> Gf16 {
    Gf16(raw::sq_scale16(a.0))
}

pub fn gf256_inv(x: TowerElement) -> TowerElement {
    TowerElement::from_byte(raw::inv256(x.to_byte()))
}

/// Product in the AES polynomial basis, by shift-and-reduce.
pub const fn gf256_mul_poly(a: u8, b: u8) -> u8 {
    let mut acc: u16 = 0;
    let mut a = a as u16;
    let mut b = b;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        a <<= 1;
        if a & 0x100 != 0 {
            a ^= AES_POLY;
        }
        b >>= 1;
    }
    acc as u8
}

/// An invertible 8x8 matrix over GF(2), stored by columns: `cols[j]` is the
/// image of bit `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisMatrix {
    cols: [u8; 8],
}

impl BasisMatrix {
    /// Builds a matrix from Canright-style row tables, where `table[i]` is
    /// the image of bit `7 - i`.
    pub const fn from_msb_table(table: [u8; 8]) -> BasisMatrix {
        let mut cols = [0u8; 8];
        let mut j = 0;
        while j < 8 {
            cols[j] = table[7 - j];
            j += 1;
        }
        BasisMatrix { cols }
    }

    #[inline(always)]
    pub const fn apply(&self, x: u8) -> u8 {
        let mut y = 0;
        let mut j = 0;
        while j < 8 {
            if x >> j & 1 != 0 {
                y ^= self.cols[j];
            }
            j += 1;
        }
        y
    }

    pub const fn compose(&self, inner: &BasisMatrix) -> BasisMatrix {
        let mut cols = [0u8; 8];
        let mut j = 0;
        while j < 8 {
            cols[j] = self.apply(inner.cols[j]);
            j += 1;
        }
        BasisMatrix { cols }
    }

    pub fn is_invertible(&self) -> bool {
        let mut seen = [false; 256];
        (0..=255u8).all(|x| !std::mem::replace(&mut seen[self.apply(x) as usize], true))
    }

    /// Inverse by enumeration; `None` if the matrix is singular.
    pub fn inverse(&self) -> Option<BasisMatrix> {
        let mut pre = [None; 256];
        for x in 0..=255u8 {
            let y = self.apply(x) as usize;
            if pre[y].is_some() {
                return None;
            }
            pre[y] = Some(x);
        }
        let mut cols = [0u8; 8];
        for (j, c) in cols.iter_mut().enumerate() {
            *c = pre[1 << j]?;
        }
        Some(BasisMatrix { cols })
    }

    pub const IDENTITY: BasisMatrix = BasisMatrix {
        cols: [1, 2, 4, 8, 16, 32, 64, 128],
    };
}

/// Polynomial basis -> tower normal basis.
pub const POLY_TO_TOWER: BasisMatrix =
    BasisMatrix::from_msb_table([0x98, 0xF3, 0xF2, 0x48, 0x09, 0x81, 0xA9, 0xFF]);
/// Tower normal basis -> polynomial basis.
pub const TOWER_TO_POLY: BasisMatrix =
    BasisMatrix::from_msb_table([0x64, 0x78, 0x6E, 0x8C, 0x68, 0x29, 0xDE, 0x60]);
/// Tower basis -> AES affine matrix output (without the 0x63 constant).
pub const TOWER_TO_SBOX: BasisMatrix =
    BasisMatrix::from_msb_table([0x58, 0x2D, 0x9E, 0x0B, 0xDC, 0x04, 0x03, 0x24]);
/// Inverse of [`TOWER_TO_SBOX`], used by the inverse S-box.
pub const SBOX_TO_TOWER: BasisMatrix =
    BasisMatrix::from_msb_table([0x8C, 0x79, 0x05, 0xEB, 0x12, 0x04, 0x51, 0x53]);

#[inline(always)]
pub const fn to_tower(b: u8) -> u8 {
    POLY_TO_TOWER.apply(b)
}

#[inline(always)]
pub const fn from_tower(t: u8) -> u8 {
    TOWER_TO_POLY.apply(t)
}

/// Linear part of the S-box output stage applied to one share.
#[inline(always)]
pub const fn output_linear(t: u8) -> u8 {
    TOWER_TO_SBOX.apply(t)
}

/// S-box computed through the tower inverter.
pub const fn sbox_tower(x: u8) -> u8 {
    output_linear(raw::inv256(to_tower(x))) ^ AFFINE_CONST
}

pub const fn inv_sbox_tower(y: u8) -> u8 {
    from_tower(raw::inv256(SBOX_TO_TOWER.apply(y ^ AFFINE_CONST)))
}

/// Forward S-box table derived from the tower inverter.
pub const SBOX: [u8; 256] = {
    let mut t = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        t[i] = sbox_tower(i as u8);
        i += 1;
    }
    t
};

pub const INV_SBOX: [u8; 256] = {
    let mut t = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        t[SBOX[i] as usize] = i as u8;
        i += 1;
    }
    t
};
