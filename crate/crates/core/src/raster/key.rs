//! 64-bit sort keys: tile index in the high 32 bits, depth in the low 32.

use crate::error::{Error, Result};

/// Packed (tile, depth) key. Ordering the raw `u64` orders instances by tile
/// first and by depth within a tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SortKey(pub u64);

impl SortKey {
    #[inline]
    pub fn new(tile: u32, depth: f32) -> Self {
        SortKey(((tile as u64) << 32) | encode_depth(depth) as u64)
    }

    #[inline]
    pub fn tile(self) -> u32 {
        (self.0 >> 32) as u32
    }

    #[inline]
    pub fn depth(self) -> f32 {
        f32::from_bits(self.0 as u32)
    }
}

/// Order-preserving integer encoding of a non-negative depth: the IEEE-754
/// bit pattern of a non-negative float is monotone in its value.
#[inline]
pub fn encode_depth(depth: f32) -> u32 {
    debug_assert!(!(depth < 0.0), "negative depth {depth}");
    // Folds -0.0 (and NaN, which culling never lets through) onto zero.
    if depth > 0.0 {
        depth.to_bits()
    } else {
        0
    }
}

/// Bits needed to store tile indices `0..num_tiles`.
pub fn tile_index_bits(num_tiles: u64) -> Result<u32> {
    if num_tiles > u32::MAX as u64 {
        return Err(Error::ResourceLimit(format!(
            "{num_tiles} tiles do not fit a 32-bit tile index"
        )));
    }
    Ok(64 - num_tiles.saturating_sub(1).leading_zeros())
}

const RADIX_BITS: u32 = 8;
const BUCKETS: usize = 1 << RADIX_BITS;

/// Stable LSD radix sort of `keys`, permuting `values` alongside. Only the
/// low `significant_bits` of each key are examined.
pub fn radix_sort_pairs(keys: &mut Vec<u64>, values: &mut Vec<u32>, significant_bits: u32) {
    assert_eq!(keys.len(), values.len());
    let n = keys.len();
    if n < 2 {
        return;
    }
    let mut keys_tmp = vec![0u64; n];
    let mut values_tmp = vec![0u32; n];
    let passes = significant_bits.min(64).div_ceil(RADIX_BITS);
    for pass in 0..passes {
        let shift = pass * RADIX_BITS;
        let mut counts = [0usize; BUCKETS];
        for &k in keys.iter() {
            counts[((k >> shift) as usize) & (BUCKETS - 1)] += 1;
        }
        if counts.contains(&n) {
            continue;
        }
        let mut offsets = [0usize; BUCKETS];
        let mut sum = 0;
        for (o, c) in offsets.iter_mut().zip(counts) {
            *o = sum;
            sum += c;
        }
        for (&k, &v) in keys.iter().zip(values.iter()) {
            let b = ((k >> shift) as usize) & (BUCKETS - 1);
            keys_tmp[offsets[b]] = k;
            values_tmp[offsets[b]] = v;
            offsets[b] += 1;
        }
        std::mem::swap(keys, &mut keys_tmp);
        std::mem::swap(values, &mut values_tmp);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tile_bits() {
        assert_eq!(tile_index_bits(1).unwrap(), 0);
        assert_eq!(tile_index_bits(2).unwrap(), 1);
        assert_eq!(tile_index_bits(16).unwrap(), 4);
        assert_eq!(tile_index_bits(17).unwrap(), 5);
        assert_eq!(tile_index_bits(u32::MAX as u64).unwrap(), 32);
        assert!(tile_index_bits(u32::MAX as u64 + 1).is_err());
    }

    #[test]
    fn key_fields_round_trip() {
        let k = SortKey::new(77, 3.25);
        assert_eq!(k.tile(), 77);
        assert_eq!(k.depth(), 3.25);
        assert_eq!(SortKey::new(0, -0.0).depth(), 0.0);
    }

    proptest! {
        #[test]
        fn key_order_matches_tile_then_depth(
            t1 in 0u32..1000, t2 in 0u32..1000,
            d1 in prop_oneof![0.0f32..1e6, Just(f32::MIN_POSITIVE / 4.0), Just(0.0), Just(1.0)],
            d2 in prop_oneof![0.0f32..1e6, Just(f32::MIN_POSITIVE / 8.0), Just(0.0), Just(1.0)],
        ) {
            let (a, b) = (SortKey::new(t1, d1), SortKey::new(t2, d2));
            let lex = (t1, d1).partial_cmp(&(t2, d2)).unwrap();
            prop_assert_eq!(a.cmp(&b), lex);
        }

        #[test]
        fn radix_sort_is_a_stable_sort(keys in proptest::collection::vec(0u64..(1 << 40), 0..300)) {
            let mut k = keys.clone();
            let mut v: Vec<u32> = (0..keys.len() as u32).collect();
            radix_sort_pairs(&mut k, &mut v, 40);
            let mut want: Vec<(u64, u32)> = keys.iter().copied().zip(0..).collect();
            want.sort();
            let got: Vec<(u64, u32)> = k.into_iter().zip(v).collect();
            prop_assert_eq!(got, want);
        }
    }
}
