//! Outer tree code.
//!
//! The payload is cut into `L` data blocks of `b_l = J - p_l` bits. Block `l`
//! is extended to a `J`-bit sub-message index by appending `p_l` parity bits,
//! each a GF(2) linear combination of the data bits of *all* earlier blocks.
//!
//! Bit conventions (fixed, relied upon by the tests):
//! - payload bits are numbered in transmission order; block `l` holds the next
//!   `b_l` of them, the first one being the most significant bit of the block
//!   integer;
//! - within an index, data bits occupy the most significant `b_l` positions and
//!   parity the least significant `p_l`: `index = (data << p_l) | parity`;
//! - matrix entry `(i, j)` of `M_{l,l'}` multiplies data bit `j` (0 = MSB) of
//!   block `l'` into parity bit `i` (0 = MSB) of block `l`.
//!
//! Parity matrices come from ChaCha20 seeded with `seed_from_u64(parity_seed)`
//! on stream `(l << 32) | l'` (1-based block numbers). Entries are filled in
//! row-major order, entry `(i, j)` being the least significant bit of the
//! `(i * b_l' + j)`-th `next_u32()` output.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::error::TreeCodeError;

/// A `b`-bit user message, bits in transmission order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Payload(Vec<bool>);

impl Payload {
    pub fn new(bits: Vec<bool>) -> Self {
        Payload(bits)
    }

    pub fn random<R: Rng + ?Sized>(bits: usize, rng: &mut R) -> Self {
        Payload((0..bits).map(|_| rng.random::<bool>()).collect())
    }

    /// Builds a payload from an integer, most significant of `bits` bits first.
    pub fn from_u128(value: u128, bits: usize) -> Self {
        assert!(bits <= 128);
        Payload((0..bits).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Splits into data-block integers of the given sizes.
    pub fn to_blocks(&self, sizes: &[usize]) -> Vec<u64> {
        let mut out = Vec::with_capacity(sizes.len());
        let mut pos = 0;
        for &s in sizes {
            let mut v = 0u64;
            for &bit in &self.0[pos..pos + s] {
                v = (v << 1) | bit as u64;
            }
            out.push(v);
            pos += s;
        }
        out
    }

    pub fn from_blocks(blocks: &[u64], sizes: &[usize]) -> Self {
        let mut bits = Vec::with_capacity(sizes.iter().sum());
        for (&v, &s) in blocks.iter().zip(sizes) {
            bits.extend((0..s).rev().map(|i| (v >> i) & 1 == 1));
        }
        Payload(bits)
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for Payload {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// The pseudo-random GF(2) matrices `M_{l,l'}` for all `l' < l`, shared by
/// every user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityMatrices {
    parity_bits: Vec<usize>,
    data_bits: Vec<usize>,
    /// `rows[l][l']` holds `p_l` row masks over the `b_l'` data bits of block
    /// `l'` (0-based block numbers, `l' < l`).
    rows: Vec<Vec<Vec<u64>>>,
}

impl ParityMatrices {
    /// Draws the matrices for a parity profile (`p_1` must be 0).
    pub fn generate(profile: &[usize], index_bits: u32, seed: u64) -> Self {
        let data_bits: Vec<usize> = profile.iter().map(|&p| index_bits as usize - p).collect();
        let mut rows = Vec::with_capacity(profile.len());
        for (l, &p) in profile.iter().enumerate() {
            let mut per_block = Vec::with_capacity(l);
            for (lp, &bp) in data_bits.iter().enumerate().take(l) {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream((((l + 1) as u64) << 32) | (lp + 1) as u64);
                let mut masks = Vec::with_capacity(p);
                for _ in 0..p {
                    let mut mask = 0u64;
                    for j in 0..bp {
                        if rng.next_u32() & 1 == 1 {
                            mask |= 1 << (bp - 1 - j);
                        }
                    }
                    masks.push(mask);
                }
                per_block.push(masks);
            }
            rows.push(per_block);
        }
        ParityMatrices {
            parity_bits: profile.to_vec(),
            data_bits,
            rows,
        }
    }

    /// Builds matrices from explicit 0/1 entries. `entries(l, l', i, j)` is
    /// queried with 0-based block numbers.
    pub fn from_fn(
        profile: &[usize],
        index_bits: u32,
        mut entries: impl FnMut(usize, usize, usize, usize) -> bool,
    ) -> Self {
        let data_bits: Vec<usize> = profile.iter().map(|&p| index_bits as usize - p).collect();
        let rows = profile
            .iter()
            .enumerate()
            .map(|(l, &p)| {
                (0..l)
                    .map(|lp| {
                        let bp = data_bits[lp];
                        (0..p)
                            .map(|i| {
                                (0..bp).fold(0u64, |m, j| {
                                    if entries(l, lp, i, j) {
                                        m | 1 << (bp - 1 - j)
                                    } else {
                                        m
                                    }
                                })
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ParityMatrices {
            parity_bits: profile.to_vec(),
            data_bits,
            rows,
        }
    }

    pub fn parity_bits(&self) -> &[usize] {
        &self.parity_bits
    }

    pub fn data_bits(&self) -> &[usize] {
        &self.data_bits
    }

    pub fn num_blocks(&self) -> usize {
        self.parity_bits.len()
    }

    /// Number of stored matrices, `sum_l l` over blocks with parity.
    pub fn num_matrices(&self) -> usize {
        self.rows
            .iter()
            .enumerate()
            .filter(|(l, _)| self.parity_bits[*l] > 0)
            .map(|(_, r)| r.len())
            .sum()
    }

    /// Entry `(i, j)` of `M_{l,l'}` (0-based block numbers).
    pub fn entry(&self, l: usize, lp: usize, i: usize, j: usize) -> bool {
        let bp = self.data_bits[lp];
        (self.rows[l][lp][i] >> (bp - 1 - j)) & 1 == 1
    }

    /// Parity section of block `l` given the data blocks `0..l`.
    pub fn parity(&self, l: usize, prefix: &[u64]) -> u64 {
        let p = self.parity_bits[l];
        let mut out = 0u64;
        for i in 0..p {
            let mut bit = 0u32;
            for (lp, &d) in prefix.iter().enumerate().take(l) {
                bit ^= (self.rows[l][lp][i] & d).count_ones();
            }
            out |= ((bit & 1) as u64) << (p - 1 - i);
        }
        out
    }
}

/// A payload together with its `L` sub-message indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessagePath {
    pub payload: Payload,
    pub indices: Vec<u32>,
}

pub fn tree_encode(payload: &Payload, matrices: &ParityMatrices) -> Result<MessagePath, TreeCodeError> {
    let expected: usize = matrices.data_bits.iter().sum();
    if payload.len() != expected {
        return Err(TreeCodeError::PayloadLength {
            expected,
            got: payload.len(),
        });
    }
    let blocks = payload.to_blocks(&matrices.data_bits);
    let indices = (0..matrices.num_blocks())
        .map(|l| {
            let p = matrices.parity_bits[l];
            ((blocks[l] << p) | matrices.parity(l, &blocks)) as u32
        })
        .collect();
    Ok(MessagePath {
        payload: payload.clone(),
        indices,
    })
}

/// Per-subslot candidate index lists `S_1..S_L`, each sorted and
/// duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubslotLists(Vec<Vec<u32>>);

impl SubslotLists {
    pub fn new(lists: Vec<Vec<u32>>) -> Self {
        SubslotLists(
            lists
                .into_iter()
                .map(|mut s| {
                    s.sort_unstable();
                    s.dedup();
                    s
                })
                .collect(),
        )
    }

    /// The singleton lists `{i(l)}` of one path.
    pub fn from_path(path: &MessagePath) -> Self {
        SubslotLists(path.indices.iter().map(|&i| vec![i]).collect())
    }

    /// Union of several paths' indices per subslot.
    pub fn from_paths<'a>(paths: impl IntoIterator<Item = &'a MessagePath>, subslots: usize) -> Self {
        let mut lists = vec![Vec::new(); subslots];
        for p in paths {
            for (s, &i) in lists.iter_mut().zip(&p.indices) {
                s.push(i);
            }
        }
        SubslotLists::new(lists)
    }

    pub fn lists(&self) -> &[Vec<u32>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.0.iter().map(Vec::len).collect()
    }

    pub fn contains(&self, l: usize, index: u32) -> bool {
        self.0[l].binary_search(&index).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct DecodeStats {
    /// Surviving partial paths after each completed stage.
    pub surviving: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    /// Distinct decoded payloads in ascending order.
    pub payloads: Vec<Payload>,
    pub stats: DecodeStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeDecodeError {
    #[error(transparent)]
    Input(#[from] TreeCodeError),
    #[error("PATH_OVERFLOW: {paths} surviving paths at stage {stage} exceed the cap")]
    PathOverflow {
        /// 1-based stage at which the cap was exceeded.
        stage: usize,
        paths: usize,
        stats: DecodeStats,
    },
}

/// Stitches the subslot lists into complete parity-consistent paths,
/// breadth-first, stage by stage.
pub fn tree_decode(
    lists: &SubslotLists,
    matrices: &ParityMatrices,
    max_paths: usize,
) -> Result<Decoded, TreeDecodeError> {
    let num_blocks = matrices.num_blocks();
    if lists.len() != num_blocks {
        return Err(TreeCodeError::ListCount {
            expected: num_blocks,
            got: lists.len(),
        }
        .into());
    }
    let j = matrices.data_bits[0] as u32;
    for (l, s) in lists.lists().iter().enumerate() {
        if let Some(&bad) = s.iter().find(|&&i| j < 32 && (i >> j) != 0) {
            return Err(TreeCodeError::IndexRange {
                subslot: l + 1,
                index: bad,
                index_bits: j,
            }
            .into());
        }
    }

    let mut stats = DecodeStats::default();
    let mut paths: Vec<Vec<u64>> = Vec::new();
    for (l, candidates) in lists.lists().iter().enumerate() {
        let p = matrices.parity_bits[l];
        if l == 0 {
            paths = candidates.iter().map(|&i| vec![(i as u64) >> p]).collect();
        } else {
            let mut by_parity: HashMap<u64, Vec<u64>> = HashMap::new();
            let mask = (1u64 << p) - 1;
            for &i in candidates {
                let i = i as u64;
                by_parity.entry(i & mask).or_default().push(i >> p);
            }
            let mut next = Vec::new();
            for path in &paths {
                if let Some(data) = by_parity.get(&matrices.parity(l, path)) {
                    for &d in data {
                        let mut ext = Vec::with_capacity(num_blocks);
                        ext.extend_from_slice(path);
                        ext.push(d);
                        next.push(ext);
                    }
                }
            }
            paths = next;
        }
        stats.surviving.push(paths.len());
        if paths.len() > max_paths {
            return Err(TreeDecodeError::PathOverflow {
                stage: l + 1,
                paths: paths.len(),
                stats,
            });
        }
        if paths.is_empty() {
            stats.surviving.resize(num_blocks, 0);
            break;
        }
    }

    let payloads: BTreeSet<Payload> = paths
        .iter()
        .map(|blocks| Payload::from_blocks(blocks, &matrices.data_bits))
        .collect();
    Ok(Decoded {
        payloads: payloads.into_iter().collect(),
        stats,
    })
}
