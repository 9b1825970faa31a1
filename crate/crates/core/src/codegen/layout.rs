//! Rotated surface code patch with two ancillas per weight-4 plaquette.
//!
//! Data qubit (r, c) sits at (4c, 4r) and has index `r * d + c`; ancillas
//! follow in plaquette order. Plaquette (r, c) covers rows r..=r+1 and
//! columns c..=c+1 and is X-type when r + c is even. The X ancillas sit above
//! and below the plaquette centre, the Z ancillas left and right of it, so
//! the two gadget orientations differ by a quarter turn.

use crate::circuit::Basis;
use std::collections::{BTreeMap, HashMap};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("width must be odd and at least 3, got {0}")]
    BadWidth(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plaquette {
    pub basis: Basis,
    pub row: i32,
    pub col: i32,
    /// Weight-4: gadget roles (a, b, c, d); `a`,`b` hang off the first
    /// ancilla and `d`,`c` off the second. Weight-2: the two data qubits.
    pub data: Vec<u32>,
    pub ancillas: Option<[u32; 2]>,
    pub center: (f64, f64),
}

impl Plaquette {
    pub fn weight(&self) -> usize {
        self.data.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
    pub basis: Basis,
}

#[derive(Clone, Debug)]
pub struct Layout {
    pub d: usize,
    pub plaquettes: Vec<Plaquette>,
    /// Position of every qubit, indexed by qubit.
    pub coords: Vec<(f64, f64)>,
}

impl Layout {
    pub fn new(d: usize) -> Result<Layout, LayoutError> {
        if d < 3 || d % 2 == 0 {
            return Err(LayoutError::BadWidth(d));
        }
        let di = d as i32;
        let mut coords: Vec<(f64, f64)> = (0..d * d)
            .map(|q| (4.0 * (q % d) as f64, 4.0 * (q / d) as f64))
            .collect();
        let dq = |r: i32, c: i32| (r * di + c) as u32;
        let mut plaquettes = Vec::new();
        for r in -1..di {
            for c in -1..di {
                let basis = if (r + c).rem_euclid(2) == 0 { Basis::X } else { Basis::Z };
                let center = (4.0 * c as f64 + 2.0, 4.0 * r as f64 + 2.0);
                let bulk = (0..di - 1).contains(&r) && (0..di - 1).contains(&c);
                let (tl, tr, bl, br) = (dq(r, c), dq(r, c + 1), dq(r + 1, c), dq(r + 1, c + 1));
                if bulk {
                    let m1 = coords.len() as u32;
                    let (data, offset) = match basis {
                        Basis::X => (vec![tl, tr, br, bl], (0.0, 1.0)),
                        _ => (vec![tl, bl, br, tr], (1.0, 0.0)),
                    };
                    coords.push((center.0 - offset.0, center.1 - offset.1));
                    coords.push((center.0 + offset.0, center.1 + offset.1));
                    plaquettes.push(Plaquette {
                        basis,
                        row: r,
                        col: c,
                        data,
                        ancillas: Some([m1, m1 + 1]),
                        center,
                    });
                    continue;
                }
                let data = match (r, c) {
                    (-1, c) if basis == Basis::X && (0..di - 1).contains(&c) => vec![dq(0, c), dq(0, c + 1)],
                    (r, c) if r == di - 1 && basis == Basis::X && (0..di - 1).contains(&c) => {
                        vec![dq(r, c), dq(r, c + 1)]
                    }
                    (r, -1) if basis == Basis::Z && (0..di - 1).contains(&r) => vec![dq(r, 0), dq(r + 1, 0)],
                    (r, c) if c == di - 1 && basis == Basis::Z && (0..di - 1).contains(&r) => {
                        vec![dq(r, c), dq(r + 1, c)]
                    }
                    _ => continue,
                };
                plaquettes.push(Plaquette {
                    basis,
                    row: r,
                    col: c,
                    data,
                    ancillas: None,
                    center,
                });
            }
        }
        Ok(Layout { d, plaquettes, coords })
    }

    pub fn num_qubits(&self) -> usize {
        self.coords.len()
    }

    pub fn num_data(&self) -> usize {
        self.d * self.d
    }

    pub fn data_qubit(&self, row: usize, col: usize) -> u32 {
        (row * self.d + col) as u32
    }

    pub fn is_data(&self, q: u32) -> bool {
        (q as usize) < self.num_data()
    }

    pub fn weight4(&self) -> impl Iterator<Item = &Plaquette> {
        self.plaquettes.iter().filter(|p| p.weight() == 4)
    }

    /// Support of the logical operator of `basis`: Z along the top row, X
    /// down the left column.
    pub fn logical(&self, basis: Basis) -> Vec<u32> {
        match basis {
            Basis::Z => (0..self.d).map(|c| self.data_qubit(0, c)).collect(),
            _ => (0..self.d).map(|r| self.data_qubit(r, 0)).collect(),
        }
    }

    /// Pair-measurement edges: four limbs and a core per weight-4 plaquette,
    /// one direct edge per weight-2 plaquette.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for p in &self.plaquettes {
            match p.ancillas {
                Some([m1, m2]) => {
                    let [a, b, c, d] = [p.data[0], p.data[1], p.data[2], p.data[3]];
                    for (x, y) in [(a, m1), (b, m1), (d, m2), (c, m2)] {
                        out.push(Edge { a: x, b: y, basis: p.basis });
                    }
                    out.push(Edge { a: m1, b: m2, basis: p.basis.dual() });
                }
                None => out.push(Edge { a: p.data[0], b: p.data[1], basis: p.basis }),
            }
        }
        out
    }

    /// Faces of the straight-line drawing of the edge graph, outer face
    /// included, as vertex cycles.
    pub fn faces(&self) -> Vec<Vec<u32>> {
        let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for e in self.edges() {
            adj.entry(e.a).or_default().push(e.b);
            adj.entry(e.b).or_default().push(e.a);
        }
        let angle = |from: u32, to: u32| {
            let (x0, y0) = self.coords[from as usize];
            let (x1, y1) = self.coords[to as usize];
            (y1 - y0).atan2(x1 - x0)
        };
        for (&v, ns) in adj.iter_mut() {
            ns.sort_by(|&p, &q| angle(v, p).total_cmp(&angle(v, q)));
        }
        let mut used: HashMap<(u32, u32), bool> = HashMap::new();
        let mut faces = Vec::new();
        for (&v, ns) in &adj {
            for &w in ns {
                if used.contains_key(&(v, w)) {
                    continue;
                }
                let mut face = Vec::new();
                let (mut a, mut b) = (v, w);
                while used.insert((a, b), true).is_none() {
                    face.push(a);
                    // Next edge: the neighbour of b just before a in angular order.
                    let nb = &adj[&b];
                    let i = nb.iter().position(|&x| x == a).unwrap();
                    let next = nb[(i + nb.len() - 1) % nb.len()];
                    a = b;
                    b = next;
                }
                faces.push(face);
            }
        }
        faces
    }

    /// True if no two edges of the drawing cross.
    pub fn is_plane_drawing(&self) -> bool {
        let edges = self.edges();
        let p = |q: u32| self.coords[q as usize];
        let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
            (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
        };
        for (i, e) in edges.iter().enumerate() {
            for f in &edges[i + 1..] {
                if e.a == f.a || e.a == f.b || e.b == f.a || e.b == f.b {
                    continue;
                }
                let (a, b, c, d) = (p(e.a), p(e.b), p(f.a), p(f.b));
                let d1 = cross(a, b, c);
                let d2 = cross(a, b, d);
                let d3 = cross(c, d, a);
                let d4 = cross(c, d, b);
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn counts() {
        for (d, qubits) in [(3, 17), (5, 57), (7, 121)] {
            let l = Layout::new(d).unwrap();
            assert_eq!(l.num_qubits(), qubits);
            assert_eq!(l.num_qubits(), d * d + 2 * (d - 1) * (d - 1));
            assert_eq!(l.plaquettes.len(), d * d - 1);
            assert_eq!(l.weight4().count(), (d - 1) * (d - 1));
            let xs = l.plaquettes.iter().filter(|p| p.basis == Basis::X).count();
            assert_eq!(xs, (d * d - 1) / 2);
        }
    }

    #[test]
    fn rejects_bad_widths() {
        for d in [0, 1, 2, 4, 6] {
            assert_eq!(Layout::new(d).unwrap_err(), LayoutError::BadWidth(d));
        }
    }

    /// Independent enumeration: build the stabilizers from the checkerboard
    /// rule and compare supports as sets.
    #[test]
    fn supports_match_checkerboard() {
        for d in [3usize, 5] {
            let l = Layout::new(d).unwrap();
            let mut expected = HashSet::new();
            let di = d as i32;
            for r in -1..di {
                for c in -1..di {
                    let mut s: Vec<u32> = Vec::new();
                    for (rr, cc) in [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)] {
                        if (0..di).contains(&rr) && (0..di).contains(&cc) {
                            s.push((rr * di + cc) as u32);
                        }
                    }
                    let x = (r + c).rem_euclid(2) == 0;
                    let keep = match s.len() {
                        4 => true,
                        2 => (x && (r == -1 || r == di - 1)) || (!x && (c == -1 || c == di - 1)),
                        _ => false,
                    };
                    if keep {
                        s.sort();
                        expected.insert((x, s));
                    }
                }
            }
            let got: HashSet<(bool, Vec<u32>)> = l
                .plaquettes
                .iter()
                .map(|p| {
                    let mut s = p.data.clone();
                    s.sort();
                    (p.basis == Basis::X, s)
                })
                .collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn stabilizers_commute_and_logicals_anticommute() {
        let l = Layout::new(5).unwrap();
        let overlap = |a: &[u32], b: &[u32]| a.iter().filter(|q| b.contains(q)).count();
        for p in &l.plaquettes {
            for q in &l.plaquettes {
                if p.basis != q.basis {
                    assert_eq!(overlap(&p.data, &q.data) % 2, 0);
                }
            }
            let other = l.logical(p.basis.dual());
            assert_eq!(overlap(&p.data, &other) % 2, 0);
        }
        assert_eq!(overlap(&l.logical(Basis::X), &l.logical(Basis::Z)), 1);
    }

    #[test]
    fn puckered_h_edges() {
        let l = Layout::new(5).unwrap();
        let edges = l.edges();
        assert_eq!(edges.len(), 5 * 16 + 8);
        for p in l.weight4() {
            let [m1, m2] = p.ancillas.unwrap();
            let limbs = edges
                .iter()
                .filter(|e| (e.b == m1 || e.b == m2) && l.is_data(e.a))
                .collect::<Vec<_>>();
            assert_eq!(limbs.len(), 4);
            assert!(limbs.iter().all(|e| e.basis == p.basis));
            let core = edges.iter().filter(|e| e.a == m1 && e.b == m2).collect::<Vec<_>>();
            assert_eq!(core.len(), 1);
            assert_eq!(core[0].basis, p.basis.dual());
        }
    }

    #[test]
    fn orientations_differ_by_quarter_turn() {
        let l = Layout::new(3).unwrap();
        for p in l.weight4() {
            let [m1, m2] = p.ancillas.unwrap();
            let (a, b) = (l.coords[m1 as usize], l.coords[m2 as usize]);
            let vertical = a.0 == b.0;
            assert_eq!(vertical, p.basis == Basis::X);
        }
    }

    #[test]
    fn cairo_tiling() {
        for d in [3usize, 5, 7] {
            let l = Layout::new(d).unwrap();
            assert!(l.is_plane_drawing());
            let faces = l.faces();
            let v = l.num_qubits() as i64;
            let e = l.edges().len() as i64;
            assert_eq!(v - e + faces.len() as i64, 2, "Euler");
            let mut sizes: Vec<usize> = faces.iter().map(|f| f.len()).collect();
            sizes.sort();
            let outer = sizes.pop().unwrap();
            assert!(outer > 5);
            let pentagons = sizes.iter().filter(|&&s| s == 5).count();
            let quads = sizes.iter().filter(|&&s| s == 4).count();
            assert_eq!(pentagons, 2 * (d - 1) * (d - 2));
            assert_eq!(quads, 2 * (d - 1));
            assert_eq!(pentagons + quads, sizes.len());
        }
    }
}
