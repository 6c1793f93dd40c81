//! File bytes to field symbols and back. Each symbol carries
//! `floor(log2 q)` bits of the file, least significant bit first, so every
//! bit pattern is a valid symbol.

use mdsa::gf::Elem;

/// Bits of payload per symbol of `GF(q)`.
pub fn bits_per_symbol(q: u32) -> u32 {
    31 - q.leading_zeros()
}

/// Splits `bytes` into exactly `count` symbols of `bits` bits, padding with
/// zeros.
pub fn pack(bytes: &[u8], bits: u32, count: usize) -> Vec<Elem> {
    assert!((1..=16).contains(&bits));
    let mask = (1u32 << bits) - 1;
    let mut out = Vec::with_capacity(count);
    let (mut acc, mut have) = (0u32, 0u32);
    let mut src = bytes.iter();
    while out.len() < count {
        while have < bits {
            acc |= (*src.next().unwrap_or(&0) as u32) << have;
            have += 8;
        }
        out.push(Elem((acc & mask) as u16));
        acc >>= bits;
        have -= bits;
    }
    out
}

/// Inverse of [`pack`]: the first `len` bytes carried by `symbols`.
pub fn unpack(symbols: &[Elem], bits: u32, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    let (mut acc, mut have) = (0u32, 0u32);
    let mut src = symbols.iter();
    while out.len() < len {
        while have < 8 {
            let Some(s) = src.next() else { return out };
            acc |= (s.0 as u32) << have;
            have += bits;
        }
        out.push(acc as u8);
        acc >>= 8;
        have -= 8;
    }
    out
}

/// Symbols needed for `len` bytes.
pub fn symbols_for(len: usize, bits: u32) -> usize {
    (len * 8).div_ceil(bits as usize)
}
