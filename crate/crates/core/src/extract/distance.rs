//! Character-level Levenshtein distance.
//!
//! [`PatternDistances`] runs Myers' bit-vector recurrence (block form, with
//! the top boundary row fixed at `D[0][j] = j`) so that one pass over a text
//! yields the distance from the pattern to every prefix of that text. The
//! grounding search uses it to score all windows sharing a start offset in
//! `O(len * ceil(m / 64))`.

use std::collections::HashMap;

pub struct PatternDistances {
    peq: HashMap<char, Vec<u64>>,
    zeros: Vec<u64>,
    len: usize,
    last_high: u64,
}

impl PatternDistances {
    pub fn new(pattern: &[char]) -> Self {
        let blocks = pattern.len().div_ceil(64).max(1);
        let mut peq: HashMap<char, Vec<u64>> = HashMap::new();
        for (i, &c) in pattern.iter().enumerate() {
            peq.entry(c).or_insert_with(|| vec![0; blocks])[i / 64] |= 1u64 << (i % 64);
        }
        let last_bits = match pattern.len() % 64 {
            0 => 64,
            r => r,
        };
        PatternDistances {
            peq,
            zeros: vec![0; blocks],
            len: pattern.len(),
            last_high: 1u64 << (last_bits - 1),
        }
    }

    pub fn pattern_len(&self) -> usize {
        self.len
    }

    /// Writes `distance(pattern, text[..k])` into `out[k]` for `k` in `0..=text.len()`.
    pub fn prefix_distances(&self, text: &[char], out: &mut Vec<usize>) {
        out.clear();
        out.push(self.len);
        if self.len == 0 {
            out.extend(1..=text.len());
            return;
        }
        let blocks = self.zeros.len();
        let mut pv = vec![u64::MAX; blocks];
        let mut mv = vec![0u64; blocks];
        let mut score = self.len as isize;
        for &c in text {
            let eq = self.peq.get(&c).unwrap_or(&self.zeros);
            // the top boundary row grows by one per text character
            let mut carry: i32 = 1;
            for b in 0..blocks {
                let high = if b + 1 == blocks { self.last_high } else { 1u64 << 63 };
                carry = advance_block(&mut pv[b], &mut mv[b], eq[b], carry, high);
            }
            score += carry as isize;
            out.push(score as usize);
        }
    }
}

fn advance_block(pv: &mut u64, mv: &mut u64, eq: u64, hin: i32, high: u64) -> i32 {
    let mut eq = eq;
    let xv = eq | *mv;
    if hin < 0 {
        eq |= 1;
    }
    let xh = ((eq & *pv).wrapping_add(*pv) ^ *pv) | eq;
    let mut ph = *mv | !(xh | *pv);
    let mut mh = *pv & xh;
    let hout = if ph & high != 0 {
        1
    } else if mh & high != 0 {
        -1
    } else {
        0
    };
    ph <<= 1;
    mh <<= 1;
    if hin < 0 {
        mh |= 1;
    } else if hin > 0 {
        ph |= 1;
    }
    *pv = mh | !(xv | ph);
    *mv = ph & xv;
    hout
}

/// Levenshtein distance between two character sequences.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let (pattern, text) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if text.is_empty() {
        return pattern.len();
    }
    let mut out = Vec::with_capacity(text.len() + 1);
    PatternDistances::new(pattern).prefix_distances(text, &mut out);
    out[text.len()]
}
