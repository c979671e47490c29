//! Dense arrays of fixed-width unsigned integers, stored as little-endian
//! 64-bit limbs, for the degeneracy DP. Widths are chosen so that `m^N` fits;
//! a carry out of the top limb is reported, never dropped.

use num_bigint::BigUint;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct WideCounts {
    limbs: usize,
    len: usize,
    data: Vec<u64>,
}

impl WideCounts {
    pub fn zeros(len: usize, limbs: usize) -> Self {
        assert!(limbs >= 1);
        WideCounts { limbs, len, data: vec![0; len * limbs] }
    }

    /// Limb count needed to hold any value up to `bound` inclusive.
    pub fn limbs_for(bound: &BigUint) -> usize {
        (bound.bits() as usize).div_ceil(64).max(1)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn set_small(&mut self, idx: usize, value: u64) {
        let slot = &mut self.data[idx * self.limbs..(idx + 1) * self.limbs];
        slot.fill(0);
        slot[0] = value;
    }

    pub fn clear_prefix(&mut self, len: usize) {
        self.data[..len * self.limbs].fill(0);
    }

    /// `self[e + shift] += src[e]` for `e < count`.
    pub fn add_shifted(&mut self, src: &WideCounts, count: usize, shift: usize) -> Result<()> {
        debug_assert_eq!(self.limbs, src.limbs);
        debug_assert!(count + shift <= self.len);
        let l = self.limbs;
        if l == 1 {
            let dst = &mut self.data[shift..shift + count];
            for (d, &s) in dst.iter_mut().zip(&src.data[..count]) {
                let (v, carry) = d.overflowing_add(s);
                if carry {
                    return Err(Error::Overflow("degeneracy DP"));
                }
                *d = v;
            }
            return Ok(());
        }
        let src_words = &src.data[..count * l];
        let dst_words = &mut self.data[shift * l..(shift + count) * l];
        for (d, s) in dst_words.chunks_exact_mut(l).zip(src_words.chunks_exact(l)) {
            let mut carry = false;
            for (dw, &sw) in d.iter_mut().zip(s) {
                let (v1, c1) = dw.overflowing_add(sw);
                let (v2, c2) = v1.overflowing_add(carry as u64);
                *dw = v2;
                carry = c1 | c2;
            }
            if carry {
                return Err(Error::Overflow("degeneracy DP"));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self, idx: usize) -> bool {
        self.data[idx * self.limbs..(idx + 1) * self.limbs].iter().all(|&w| w == 0)
    }

    pub fn get(&self, idx: usize) -> BigUint {
        let words = &self.data[idx * self.limbs..(idx + 1) * self.limbs];
        let digits: Vec<u32> = words.iter().flat_map(|&w| [w as u32, (w >> 32) as u32]).collect();
        BigUint::new(digits)
    }
}
