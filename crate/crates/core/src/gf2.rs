//! Dense GF(2) row vectors and the few linear-algebra routines the crate needs.

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitRow {
    bits: Vec<u64>,
    len: usize,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow {
            bits: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_indices(len: usize, idx: &[usize]) -> Self {
        let mut r = BitRow::zeros(len);
        for &i in idx {
            r.toggle(i);
        }
        r
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.bits[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        if self.get(i) != v {
            self.toggle(i);
        }
    }

    pub fn toggle(&mut self, i: usize) {
        self.bits[i / 64] ^= 1 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= b;
        }
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        self.bits
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn last_one(&self) -> Option<usize> {
        self.bits
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    pub fn ones(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    fn xor_weight(&self, other: &BitRow) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }
}

/// Reduced row echelon basis of the span (pivot = first set bit).
pub fn echelon(rows: &[BitRow]) -> Vec<BitRow> {
    let mut basis: Vec<BitRow> = Vec::new();
    for r in rows {
        let mut r = r.clone();
        for b in &basis {
            let p = b.first_one().unwrap();
            if r.get(p) {
                r.xor_assign(b);
            }
        }
        if let Some(p) = r.first_one() {
            for b in basis.iter_mut() {
                if b.get(p) {
                    b.xor_assign(&r);
                }
            }
            basis.push(r);
        }
    }
    basis.sort_by_key(|b| b.first_one());
    basis
}

pub fn rank(rows: &[BitRow]) -> usize {
    echelon(rows).len()
}

pub fn spans_equal(a: &[BitRow], b: &[BitRow]) -> bool {
    echelon(a) == echelon(b)
}

pub fn in_span(basis: &[BitRow], v: &BitRow) -> bool {
    let mut all = basis.to_vec();
    let r = rank(&all);
    all.push(v.clone());
    rank(&all) == r
}

/// Greedily lowers row weights by adding other rows until nothing improves.
/// The span is unchanged.
pub fn sparsify(rows: &mut [BitRow]) {
    loop {
        let mut changed = false;
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                if i == j {
                    continue;
                }
                let w = rows[i].weight();
                if rows[i].xor_weight(&rows[j]) < w {
                    let rj = rows[j].clone();
                    rows[i].xor_assign(&rj);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}
