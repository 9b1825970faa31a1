use crate::circuit::Basis;
use std::fmt;
use std::str::FromStr;

/// Dense Pauli string with a ±1 sign. Bit `q` of `xs`/`zs` encodes the letter
/// on qubit `q`: (0,0)=I, (1,0)=X, (1,1)=Y, (0,1)=Z.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    num_qubits: usize,
    pub(crate) xs: Vec<u64>,
    pub(crate) zs: Vec<u64>,
    pub negative: bool,
}

pub(crate) fn words(n: usize) -> usize {
    n.div_ceil(64)
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> Self {
        PauliString {
            num_qubits,
            xs: vec![0; words(num_qubits)],
            zs: vec![0; words(num_qubits)],
            negative: false,
        }
    }

    /// Builds a string from `(qubit, basis)` pairs on `num_qubits` qubits.
    pub fn from_sparse(num_qubits: usize, terms: &[(usize, Basis)]) -> Self {
        let mut p = PauliString::identity(num_qubits);
        for &(q, b) in terms {
            p.set(q, Some(b));
        }
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn get(&self, q: usize) -> Option<Basis> {
        let x = (self.xs[q / 64] >> (q % 64)) & 1 == 1;
        let z = (self.zs[q / 64] >> (q % 64)) & 1 == 1;
        match (x, z) {
            (false, false) => None,
            (true, false) => Some(Basis::X),
            (true, true) => Some(Basis::Y),
            (false, true) => Some(Basis::Z),
        }
    }

    pub fn set(&mut self, q: usize, letter: Option<Basis>) {
        let (x, z) = match letter {
            None => (false, false),
            Some(Basis::X) => (true, false),
            Some(Basis::Y) => (true, true),
            Some(Basis::Z) => (false, true),
        };
        let m = 1u64 << (q % 64);
        self.xs[q / 64] = (self.xs[q / 64] & !m) | if x { m } else { 0 };
        self.zs[q / 64] = (self.zs[q / 64] & !m) | if z { m } else { 0 };
    }

    pub fn weight(&self) -> usize {
        self.xs
            .iter()
            .zip(&self.zs)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn support(&self) -> Vec<(usize, Basis)> {
        (0..self.num_qubits)
            .filter_map(|q| self.get(q).map(|b| (q, b)))
            .collect()
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        let mut acc = 0u32;
        for w in 0..self.xs.len().min(other.xs.len()) {
            acc ^= ((self.xs[w] & other.zs[w]) ^ (self.zs[w] & other.xs[w])).count_ones();
        }
        acc & 1 == 0
    }

    /// The transpose: Y picks up a sign, X and Z do not.
    pub fn transpose(&self) -> PauliString {
        let ys: u32 = self
            .xs
            .iter()
            .zip(&self.zs)
            .map(|(x, z)| (x & z).count_ones())
            .sum();
        let mut t = self.clone();
        t.negative ^= ys & 1 == 1;
        t
    }

    /// Copy padded (or truncated, if the extra qubits are identity) to `n` qubits.
    pub fn resized(&self, n: usize) -> PauliString {
        let mut p = PauliString::identity(n);
        for (q, b) in self.support() {
            p.set(q, Some(b));
        }
        p.negative = self.negative;
        p
    }
}

/// Exponent of `i` picked up when multiplying single-qubit Paulis bitwise:
/// returns (count of +i factors, count of -i factors) across a word.
#[inline]
pub(crate) fn phase_counts(x1: u64, z1: u64, x2: u64, z2: u64) -> (u32, u32) {
    let pos = (x1 & z1 & !x2 & z2) | (x1 & !z1 & x2 & z2) | (!x1 & z1 & x2 & !z2);
    let neg = (x1 & z1 & x2 & !z2) | (x1 & !z1 & !x2 & z2) | (!x1 & z1 & x2 & z2);
    (pos.count_ones(), neg.count_ones())
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.negative { "-" } else { "+" })?;
        for q in 0..self.num_qubits {
            let c = match self.get(q) {
                None => '_',
                Some(Basis::X) => 'X',
                Some(Basis::Y) => 'Y',
                Some(Basis::Z) => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PauliString {
    type Err = String;

    /// Parses `[+-]?[IXYZ_]*`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let mut p = PauliString::identity(body.len());
        p.negative = negative;
        for (q, c) in body.chars().enumerate() {
            let letter = match c {
                'I' | '_' => None,
                'X' => Some(Basis::X),
                'Y' => Some(Basis::Y),
                'Z' => Some(Basis::Z),
                other => return Err(format!("bad Pauli letter '{other}'")),
            };
            p.set(q, letter);
        }
        Ok(p)
    }
}
