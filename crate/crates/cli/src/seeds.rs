//! Named seed streams derived from the master seed.

/// Stages that draw randomness; each gets its own stream.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub enum Stage {
    Dataset = 1,
    Subsample = 2,
    Split = 3,
    Train = 4,
    Gep = 5,
    Oracle = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for `stage`, keyed by any further coordinates (fraction bits,
/// repetition index, ...).
pub fn derive(master: u64, stage: Stage, keys: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ splitmix64(stage as u64));
    for &k in keys {
        h = splitmix64(h ^ k);
    }
    h
}

/// Seed of one sweep repetition's `stage`.
pub fn unit(master: u64, stage: Stage, fraction: f64, rep: usize) -> u64 {
    derive(master, stage, &[fraction.to_bits(), rep as u64])
}

/// The dataset keeps the master seed itself, so `generate` output is
/// addressed by the number users pass on the command line.
pub fn dataset(master: u64) -> u64 {
    master
}

pub fn oracle(master: u64) -> u64 {
    derive(master, Stage::Oracle, &[])
}
