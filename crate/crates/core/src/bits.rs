//! Bit packing of q-bit symbols and a bounds-checked byte reader shared by
//! the on-disk and wire codecs.

use crate::{Error, Result};

/// Packs `symbols` MSB-first, `q` bits each. The final byte is zero-filled.
pub fn pack_symbols(symbols: &[u16], q: u8) -> Vec<u8> {
    let q = u32::from(q);
    let total_bits = symbols.len() * q as usize;
    let mut out = Vec::with_capacity(total_bits.div_ceil(8));
    let mut acc: u32 = 0;
    let mut acc_bits: u32 = 0;
    for &s in symbols {
        acc = (acc << q) | u32::from(s);
        acc_bits += q;
        while acc_bits >= 8 {
            acc_bits -= 8;
            out.push((acc >> acc_bits) as u8);
        }
        acc &= (1 << acc_bits) - 1;
    }
    if acc_bits > 0 {
        out.push((acc << (8 - acc_bits)) as u8);
    }
    out
}

/// Inverse of [`pack_symbols`]. Reads `count` symbols; bytes past the end of
/// `bytes` read as zero bits.
pub fn unpack_symbols(bytes: &[u8], count: usize, q: u8) -> Vec<u16> {
    let q = u32::from(q);
    let mask = (1u32 << q) - 1;
    let mut out = Vec::with_capacity(count);
    let mut acc: u32 = 0;
    let mut acc_bits: u32 = 0;
    let mut iter = bytes.iter();
    while out.len() < count {
        while acc_bits < q {
            acc = (acc << 8) | u32::from(iter.next().copied().unwrap_or(0));
            acc_bits += 8;
        }
        acc_bits -= q;
        out.push(((acc >> acc_bits) & mask) as u16);
        acc &= (1 << acc_bits) - 1;
    }
    out
}

/// Number of bytes needed for `count` symbols of `q` bits.
pub fn packed_len(count: usize, q: u8) -> usize {
    (count * usize::from(q)).div_ceil(8)
}

/// Cursor over a byte slice whose reads fail with [`Error::Malformed`]
/// instead of panicking.
#[derive(Debug)]
pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::malformed(format!(
                "need {n} bytes at offset {}, only {} left",
                self.pos,
                self.remaining()
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16_le(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u16_be(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    pub fn u32_le(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64_le(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::malformed(format!(
                "{} trailing bytes",
                self.remaining()
            )));
        }
        Ok(())
    }
}
