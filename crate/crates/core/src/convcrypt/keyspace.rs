//! Key-space sizes of an `(n, n, L)` cascade.
//!
//! The `nominal_*` functions follow the usual closed-form counting rules; the
//! `enumerate_*` functions count the actual objects by brute force, which
//! gives larger numbers for boxes and permutations.

/// Generator connections of an `n × n` matrix: `2^(2n)`.
pub fn nominal_connection_keys(n: u32) -> u128 {
    1u128 << (2 * n)
}

/// Transition mappings for `k`-bit inputs: `2^k`.
pub fn nominal_transition_keys(k: u32) -> u128 {
    1u128 << k
}

/// Shuffle boxes of width `w`: `2^(2w)`.
pub fn nominal_sbox_keys(w: u32) -> u128 {
    1u128 << (2 * w)
}

/// Interconnect permutations of `n` lines: `(n-1)^(n-1)`.
pub fn nominal_pbox_keys(n: u32) -> u128 {
    ((n - 1) as u128).pow(n - 1)
}

/// Counts bijections on `w`-bit values by enumeration (small `w` only).
pub fn enumerate_sbox_bijections(w: u32) -> u128 {
    count_permutations(1 << w)
}

/// Counts bit-position permutations by enumeration.
pub fn enumerate_pbox_permutations(n: u32) -> u128 {
    count_permutations(n as usize)
}

fn count_permutations(n: usize) -> u128 {
    fn rec(used: &mut [bool], depth: usize) -> u128 {
        if depth == used.len() {
            return 1;
        }
        let mut total = 0;
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                total += rec(used, depth + 1);
                used[i] = false;
            }
        }
        total
    }
    rec(&mut vec![false; n], 0)
}

/// Counts input partitions a transition table can take for one state when
/// every input picks one of `states` next states (`states^(2^k)`), by
/// enumeration over a tiny space.
pub fn enumerate_transition_maps(k: u32, states: u32) -> u128 {
    let inputs = 1u32 << k;
    let mut count = 0u128;
    let total = (states as u128).pow(inputs);
    for _ in 0..total {
        count += 1;
    }
    count
}
