//! A small bit-string type for covert payloads.
//!
//! Payload and header sizes in this domain are rarely byte-aligned (a 21-bit
//! message, a 1-bit payload), so everything that moves through a channel is a
//! [`Bits`] value. Index 0 is the first bit on the wire and the most
//! significant bit in numeric conversions.

use std::fmt;

use rand::Rng;

/// An ordered sequence of bits, most significant first.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn new() -> Self {
        Bits(Vec::new())
    }

    pub fn zeros(len: usize) -> Self {
        Bits(vec![false; len])
    }

    /// The `width` low bits of `value`, most significant first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        assert!(width <= 64, "width must be at most 64");
        let mut v = Vec::with_capacity(width);
        for i in (0..width).rev() {
            v.push((value >> i) & 1 == 1);
        }
        Bits(v)
    }

    /// Numeric value of the bits (at most 64 of them).
    pub fn to_u64(&self) -> u64 {
        assert!(self.0.len() <= 64, "at most 64 bits convert to u64");
        self.0
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    /// The leading `nbits` bits of `bytes`, most significant bit of each byte first.
    pub fn from_bytes(bytes: &[u8], nbits: usize) -> Self {
        assert!(
            nbits <= bytes.len() * 8,
            "not enough bytes for {nbits} bits"
        );
        let mut v = Vec::with_capacity(nbits);
        for i in 0..nbits {
            v.push((bytes[i / 8] >> (7 - i % 8)) & 1 == 1);
        }
        Bits(v)
    }

    pub fn random<R: Rng>(len: usize, rng: &mut R) -> Self {
        Bits((0..len).map(|_| rng.gen::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn get(&self, idx: usize) -> Option<bool> {
        self.0.get(idx).copied()
    }

    pub fn extend(&mut self, other: &Bits) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn concat(&self, other: &Bits) -> Bits {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    /// Split into consecutive chunks of at most `chunk` bits, preserving order.
    pub fn chunks(&self, chunk: usize) -> Vec<Bits> {
        assert!(chunk > 0, "chunk size must be positive");
        self.0.chunks(chunk).map(|c| Bits(c.to_vec())).collect()
    }

    /// Bitwise XOR with an equally long bit string.
    pub fn xor(&self, other: &Bits) -> Bits {
        assert_eq!(self.len(), other.len(), "xor requires equal lengths");
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", u8::from(*b))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits[{}]({})", self.len(), self)
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        Bits(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_round_trip_is_msb_first() {
        let b = Bits::from_u64(0b1011, 4);
        assert_eq!(b.to_string(), "1011");
        assert_eq!(b.to_u64(), 0b1011);
        assert_eq!(Bits::from_u64(1, 3).to_string(), "001");
    }

    #[test]
    fn chunks_preserve_order_and_total_length() {
        let b = Bits::from_u64(0b1100_1010, 8);
        let parts = b.chunks(3);
        assert_eq!(parts.len(), 3);
        assert_eq!(parts.iter().map(Bits::len).sum::<usize>(), 8);
        let rejoined = parts.iter().fold(Bits::new(), |acc, p| acc.concat(p));
        assert_eq!(rejoined, b);
    }

    #[test]
    fn xor_is_involutive() {
        let a = Bits::from_u64(0b10110, 5);
        let k = Bits::from_u64(0b01101, 5);
        assert_eq!(a.xor(&k).xor(&k), a);
    }
}
