//! Echelon bases keyed by the highest set coordinate.
//!
//! A basis where every vector has a distinct top coordinate answers
//! `dim(V ∩ E_j)` directly: a combination lies in `E_j` (support within the
//! first `j` coordinates) exactly when every vector it uses has its top
//! coordinate below `j`. So `dim(V ∩ E_j)` is the number of pivots below `j`.

use super::bitvec::BitVec;

/// Single-word basis for vectors of length at most 64.
///
/// Each slot optionally remembers which input vectors were combined to form
/// it (`combo`), which is what the decoder needs to solve for a symbol.
#[derive(Clone, Debug)]
pub struct WordBasis {
    slots: [u64; 64],
    combos: [u64; 64],
    pivots: u64,
}

impl Default for WordBasis {
    fn default() -> Self {
        WordBasis { slots: [0; 64], combos: [0; 64], pivots: 0 }
    }
}

impl WordBasis {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bit `t` set iff some basis vector has top coordinate `t`.
    #[inline]
    pub fn pivots(&self) -> u64 {
        self.pivots
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.pivots.count_ones() as usize
    }

    /// Inserts `v`; returns the pivot slot it occupied, or `None` if `v` was
    /// already in the span.
    #[inline]
    pub fn insert(&mut self, v: u64) -> Option<usize> {
        self.insert_tagged(v, 0)
    }

    /// Like [`insert`](Self::insert) but tracks `tag` (a bitmask naming the
    /// input vector) through the reduction.
    #[inline]
    pub fn insert_tagged(&mut self, mut v: u64, mut tag: u64) -> Option<usize> {
        while v != 0 {
            let t = 63 - v.leading_zeros() as usize;
            if self.pivots >> t & 1 == 1 {
                v ^= self.slots[t];
                tag ^= self.combos[t];
            } else {
                self.slots[t] = v;
                self.combos[t] = tag;
                self.pivots |= 1 << t;
                return Some(t);
            }
        }
        None
    }

    /// Undo an insertion that landed in slot `t`. Only valid for the most
    /// recent insertions in LIFO order.
    #[inline]
    pub fn remove_slot(&mut self, t: usize) {
        self.pivots &= !(1u64 << t);
    }

    #[inline]
    pub fn slot(&self, t: usize) -> Option<(u64, u64)> {
        (self.pivots >> t & 1 == 1).then(|| (self.slots[t], self.combos[t]))
    }

    pub fn contains(&self, mut v: u64) -> bool {
        while v != 0 {
            let t = 63 - v.leading_zeros() as usize;
            if self.pivots >> t & 1 == 0 {
                return false;
            }
            v ^= self.slots[t];
        }
        true
    }
}

/// Multi-word variant used for tall matrices.
#[derive(Clone, Debug)]
pub struct ColumnBasis {
    dim_ambient: usize,
    slots: Vec<Option<BitVec>>,
}

impl ColumnBasis {
    pub fn new(dim_ambient: usize) -> Self {
        ColumnBasis { dim_ambient, slots: vec![None; dim_ambient] }
    }

    pub fn insert(&mut self, mut v: BitVec) -> Option<usize> {
        debug_assert_eq!(v.len(), self.dim_ambient);
        while let Some(t) = v.top_bit() {
            match &self.slots[t] {
                Some(b) => v.xor_assign(b),
                None => {
                    self.slots[t] = Some(v);
                    return Some(t);
                }
            }
        }
        None
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        let mut v = v.clone();
        while let Some(t) = v.top_bit() {
            match &self.slots[t] {
                Some(b) => v.xor_assign(b),
                None => return false,
            }
        }
        true
    }

    pub fn is_pivot(&self, t: usize) -> bool {
        self.slots[t].is_some()
    }

    pub fn dim(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}
