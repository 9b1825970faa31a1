//! Minimum-weight perfect matching decoder.
//!
//! The error model is first made graphlike: mechanisms flipping more than
//! two detectors are rewritten as XORs of existing one- and two-detector
//! mechanisms. Each graphlike symptom becomes one edge with weight
//! `ln((1 - q) / q)`. Shortest paths from every detector are precomputed, so
//! decoding a syndrome is a matching on the flagged detectors alone.
//!
//! Ties between equal-weight matchings are broken by the fixed order in
//! which candidate pairs are handed to the blossom solver (flagged detectors
//! in increasing index order, pairs `(i, j)` with `i < j` lexicographically,
//! boundary pairs last).

mod blossom;

pub use blossom::max_weight_matching;

use crate::dem::{xor_probability, DetectorErrorModel, ErrorMechanism};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};

/// Probabilities at or above one half are clamped to this.
pub const MAX_EDGE_PROBABILITY: f64 = 0.5 - 1e-12;

/// Flagged-detector count above which candidate pairs are pruned to each
/// detector's nearest neighbours.
pub const DENSE_LIMIT: usize = 24;
/// Neighbours kept per flagged detector when pruning.
pub const NEAREST: usize = 12;

const WEIGHT_SCALE: f64 = 16777216.0;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("undecomposable hyperedge: mechanism {mechanism} flipping detectors {detectors:?} observables {observables:?}")]
    Undecomposable {
        mechanism: usize,
        detectors: Vec<usize>,
        observables: Vec<usize>,
    },
    #[error("{0} observables exceed the 64 supported")]
    TooManyObservables(usize),
    #[error("detector {detector} out of range for {num_detectors} detectors")]
    DetectorOutOfRange { detector: usize, num_detectors: usize },
}

type Part = (Vec<usize>, u64);

fn mask_to_list(mask: u64) -> Vec<usize> {
    (0..64).filter(|o| mask >> o & 1 == 1).collect()
}

/// Splits every mechanism into graphlike parts. Mechanisms that are
/// already graphlike map to themselves.
fn split_mechanisms(dem: &DetectorErrorModel) -> Result<Vec<Vec<Part>>, DecodeError> {
    if dem.num_observables > 64 {
        return Err(DecodeError::TooManyObservables(dem.num_observables));
    }
    let mut graphlike: HashMap<Vec<usize>, Vec<u64>> = HashMap::new();
    for m in &dem.mechanisms {
        if m.detectors.len() <= 2 && !m.detectors.is_empty() {
            let masks = graphlike.entry(sorted(&m.detectors)).or_default();
            let o = m.observable_mask();
            if !masks.contains(&o) {
                masks.push(o);
                masks.sort_unstable();
            }
        }
    }
    let mut out = Vec::with_capacity(dem.mechanisms.len());
    for (i, m) in dem.mechanisms.iter().enumerate() {
        let dets = sorted(&m.detectors);
        if dets.len() <= 2 {
            out.push(vec![(dets, m.observable_mask())]);
            continue;
        }
        let mut parts = Vec::new();
        if !split(&dets, m.observable_mask(), &graphlike, &mut parts) {
            return Err(DecodeError::Undecomposable {
                mechanism: i,
                detectors: m.detectors.clone(),
                observables: m.observables.clone(),
            });
        }
        out.push(parts);
    }
    Ok(out)
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Depth-first search for a partition of `rem` into known graphlike
/// symptoms whose observable masks XOR to `obs`. Pairs are tried before
/// singletons.
fn split(rem: &[usize], obs: u64, g: &HashMap<Vec<usize>, Vec<u64>>, out: &mut Vec<Part>) -> bool {
    let Some((&s, rest)) = rem.split_first() else {
        return obs == 0;
    };
    for (k, &t) in rest.iter().enumerate() {
        if let Some(masks) = g.get(&vec![s, t]) {
            let remaining: Vec<usize> = rest.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x).collect();
            for &m in masks {
                out.push((vec![s, t], m));
                if split(&remaining, obs ^ m, g, out) {
                    return true;
                }
                out.pop();
            }
        }
    }
    if let Some(masks) = g.get(&vec![s]) {
        for &m in masks {
            out.push((vec![s], m));
            if split(rest, obs ^ m, g, out) {
                return true;
            }
            out.pop();
        }
    }
    false
}

/// Merged graphlike parts: symptom -> (probability, source mechanisms).
fn merge_parts(dem: &DetectorErrorModel, parts: &[Vec<Part>]) -> BTreeMap<Part, (f64, Vec<usize>)> {
    let mut merged: BTreeMap<Part, (f64, Vec<usize>)> = BTreeMap::new();
    for (i, (m, ps)) in dem.mechanisms.iter().zip(parts).enumerate() {
        for p in ps {
            let e = merged.entry(p.clone()).or_insert((0.0, Vec::new()));
            e.0 = xor_probability(e.0, m.probability);
            e.1.push(i);
        }
    }
    merged
}

/// Rewrites every mechanism as graphlike components, folding the
/// probability of each hyperedge into all of its components.
pub fn decompose_hyperedges(dem: &DetectorErrorModel) -> Result<DetectorErrorModel, DecodeError> {
    let parts = split_mechanisms(dem)?;
    let merged = merge_parts(dem, &parts);
    Ok(DetectorErrorModel {
        num_detectors: dem.num_detectors,
        num_observables: dem.num_observables,
        mechanisms: merged
            .into_iter()
            .map(|((detectors, mask), (probability, _))| ErrorMechanism {
                probability,
                detectors,
                observables: mask_to_list(mask),
            })
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphEdge {
    pub u: usize,
    /// Second endpoint; `num_detectors` is the boundary.
    pub v: usize,
    pub probability: f64,
    pub weight: f64,
    pub observables: u64,
    pub sources: Vec<usize>,
}

/// Edge weight for a flip probability, with the clamp applied.
pub fn edge_weight(q: f64) -> f64 {
    let q = q.min(MAX_EDGE_PROBABILITY);
    ((1.0 - q) / q).ln()
}

#[derive(Clone, Debug)]
pub struct MatchingGraph {
    pub num_detectors: usize,
    pub num_observables: usize,
    pub edges: Vec<GraphEdge>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MatchingGraph {
    /// Builds the matching graph. When two graphlike symptoms touch the
    /// same detectors with different observable masks, the more likely one
    /// is kept.
    pub fn from_dem(dem: &DetectorErrorModel) -> Result<MatchingGraph, DecodeError> {
        let parts = split_mechanisms(dem)?;
        let merged = merge_parts(dem, &parts);
        let boundary = dem.num_detectors;
        let mut best: BTreeMap<(usize, usize), GraphEdge> = BTreeMap::new();
        for ((dets, mask), (q, sources)) in merged {
            let (u, v) = match dets[..] {
                [a] => (a, boundary),
                [a, b] => (a, b),
                _ => continue,
            };
            if u >= boundary || v > boundary {
                return Err(DecodeError::DetectorOutOfRange {
                    detector: u.max(v),
                    num_detectors: boundary,
                });
            }
            if q <= 0.0 {
                continue;
            }
            if q >= 0.5 {
                log::warn!("edge {u}-{v} has probability {q}; clamping below 1/2");
            }
            let e = GraphEdge {
                u,
                v,
                probability: q,
                weight: edge_weight(q),
                observables: mask,
                sources,
            };
            match best.get(&(u, v)) {
                Some(old) if old.probability >= q => {}
                _ => {
                    best.insert((u, v), e);
                }
            }
        }
        let edges: Vec<GraphEdge> = best.into_values().collect();
        let mut adjacency = vec![Vec::new(); boundary + 1];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, k));
            adjacency[e.v].push((e.u, k));
        }
        Ok(MatchingGraph {
            num_detectors: dem.num_detectors,
            num_observables: dem.num_observables,
            edges,
            adjacency,
        })
    }

    pub fn boundary(&self) -> usize {
        self.num_detectors
    }

    /// Single-source shortest paths: distance and observable mask of the
    /// path found.
    fn dijkstra(&self, src: usize) -> (Vec<f64>, Vec<u64>) {
        let n = self.num_detectors + 1;
        let mut dist = vec![f64::INFINITY; n];
        let mut mask = vec![0u64; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapItem(0.0, src));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            // Paths do not continue through the boundary.
            if u == self.boundary() && u != src {
                continue;
            }
            for &(v, k) in &self.adjacency[u] {
                let nd = d + self.edges[k].weight;
                if nd < dist[v] {
                    dist[v] = nd;
                    mask[v] = mask[u] ^ self.edges[k].observables;
                    heap.push(HeapItem(nd, v));
                }
            }
        }
        (dist, mask)
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of matching one syndrome.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// Matched detector pairs; `None` means matched to the boundary.
    pub pairs: Vec<(usize, Option<usize>)>,
    pub cost: f64,
    pub observables: u64,
}

/// Matching decoder with all-pairs shortest paths precomputed.
pub struct Decoder {
    graph: MatchingGraph,
    dist: Vec<f64>,
    mask: Vec<u64>,
    relevant: Vec<bool>,
}

impl Decoder {
    pub fn new(graph: MatchingGraph) -> Decoder {
        let n = graph.num_detectors + 1;
        let mut dist = vec![f64::INFINITY; graph.num_detectors * n];
        let mut mask = vec![0u64; graph.num_detectors * n];
        for s in 0..graph.num_detectors {
            let (d, m) = graph.dijkstra(s);
            dist[s * n..(s + 1) * n].copy_from_slice(&d);
            mask[s * n..(s + 1) * n].copy_from_slice(&m);
        }
        let relevant = observable_components(&graph);
        Decoder {
            graph,
            dist,
            mask,
            relevant,
        }
    }

    pub fn from_dem(dem: &DetectorErrorModel) -> Result<Decoder, DecodeError> {
        Ok(Decoder::new(MatchingGraph::from_dem(dem)?))
    }

    pub fn graph(&self) -> &MatchingGraph {
        &self.graph
    }

    /// Shortest-path distance between two nodes (the boundary allowed as
    /// the second).
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a * (self.graph.num_detectors + 1) + b]
    }

    fn path_mask(&self, a: usize, b: usize) -> u64 {
        self.mask[a * (self.graph.num_detectors + 1) + b]
    }

    /// Predicted observable flips for the fired detectors.
    pub fn decode(&self, fired: &[usize]) -> u64 {
        let flagged: Vec<usize> = fired.iter().copied().filter(|&d| self.relevant[d]).collect();
        self.match_flagged(&flagged).observables
    }

    /// Full minimum-weight matching of the fired detectors.
    pub fn decode_matching(&self, fired: &[usize]) -> Matching {
        self.match_flagged(fired)
    }

    /// Reduced cost and mask of pairing flagged detectors `a` and `b`,
    /// either directly or through the boundary separately.
    fn pair_cost(&self, a: usize, b: usize) -> Option<(f64, u64, bool)> {
        let bd = self.graph.boundary();
        let direct = self.distance(a, b);
        let via = self.distance(a, bd) + self.distance(b, bd);
        if !direct.is_finite() && !via.is_finite() {
            return None;
        }
        Some(if direct <= via {
            (direct, self.path_mask(a, b), false)
        } else {
            (via, self.path_mask(a, bd) ^ self.path_mask(b, bd), true)
        })
    }

    fn match_flagged(&self, flagged: &[usize]) -> Matching {
        let k = flagged.len();
        let mut out = Matching {
            pairs: vec![],
            cost: 0.0,
            observables: 0,
        };
        if k == 0 {
            return out;
        }
        let bd = self.graph.boundary();
        let to_boundary: Vec<f64> = flagged.iter().map(|&d| self.distance(d, bd)).collect();
        let mut cost = vec![f64::INFINITY; k * k];
        for i in 0..k {
            let row = flagged[i] * (bd + 1);
            for j in i + 1..k {
                let c = self.dist[row + flagged[j]].min(to_boundary[i] + to_boundary[j]);
                cost[i * k + j] = c;
                cost[j * k + i] = c;
            }
        }
        let all_pairs = || {
            let mut v = Vec::with_capacity(k * (k - 1) / 2 + k);
            for i in 0..k {
                for j in i + 1..k {
                    if cost[i * k + j].is_finite() {
                        v.push((i, j, cost[i * k + j]));
                    }
                }
            }
            v
        };
        let mut cands = if k <= DENSE_LIMIT {
            all_pairs()
        } else {
            let mut keep = vec![false; k * k];
            let mut near: Vec<usize> = Vec::with_capacity(k);
            for i in 0..k {
                near.clear();
                near.extend((0..k).filter(|&j| j != i && cost[i * k + j].is_finite()));
                let row = &cost[i * k..(i + 1) * k];
                let m = NEAREST.min(near.len());
                if m < near.len() {
                    near.select_nth_unstable_by(m, |&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
                }
                for &j in &near[..m] {
                    keep[i.min(j) * k + i.max(j)] = true;
                }
            }
            let mut v = Vec::new();
            for i in 0..k {
                for j in i + 1..k {
                    if keep[i * k + j] {
                        v.push((i, j, cost[i * k + j]));
                    }
                }
            }
            v
        };
        let boundary_cands: Vec<(usize, usize, f64)> = if k % 2 == 1 {
            (0..k).filter(|&i| to_boundary[i].is_finite()).map(|i| (i, k, to_boundary[i])).collect()
        } else {
            vec![]
        };
        cands.extend(&boundary_cands);
        let nodes = k + k % 2;
        let mate = match solve(nodes, &cands) {
            Some(m) => m,
            None if k > DENSE_LIMIT => {
                // Pruning lost every perfect matching; fall back to all pairs.
                let mut all = all_pairs();
                all.extend(&boundary_cands);
                solve(nodes, &all).expect("syndrome has no perfect matching")
            }
            None => panic!("syndrome has no perfect matching"),
        };
        for i in 0..k {
            let j = mate[i];
            if j < i {
                continue;
            }
            if j == k {
                out.pairs.push((flagged[i], None));
                out.cost += to_boundary[i];
                out.observables ^= self.path_mask(flagged[i], bd);
                continue;
            }
            let (c, m, via) = self.pair_cost(flagged[i], flagged[j]).unwrap();
            if via {
                out.pairs.push((flagged[i], None));
                out.pairs.push((flagged[j], None));
            } else {
                out.pairs.push((flagged[i], Some(flagged[j])));
            }
            out.cost += c;
            out.observables ^= m;
        }
        out
    }
}

/// Minimum-weight perfect matching on `n` nodes; `None` if none exists.
fn solve(n: usize, cands: &[(usize, usize, f64)]) -> Option<Vec<usize>> {
    let ints: Vec<i64> = cands.iter().map(|c| (c.2 * WEIGHT_SCALE).round() as i64).collect();
    let top = ints.iter().copied().max().unwrap_or(0) + 1;
    let edges: Vec<(usize, usize, i64)> = cands.iter().zip(&ints).map(|(c, &w)| (c.0, c.1, top - w)).collect();
    let mate = max_weight_matching(n, &edges, true);
    mate.into_iter().collect()
}

/// Marks detectors whose connected component (ignoring the boundary)
/// touches an edge with a nonzero observable mask. Other components never
/// change the prediction and are skipped.
fn observable_components(g: &MatchingGraph) -> Vec<bool> {
    let n = g.num_detectors;
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(v, _) in &g.adjacency[u] {
                if v < n && comp[v] == usize::MAX {
                    comp[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    let mut has = vec![false; next];
    for e in &g.edges {
        if e.observables != 0 {
            has[comp[e.u]] = true;
        }
    }
    comp.iter().map(|&c| has[c]).collect()
}

/// Smallest number of graphlike mechanisms whose symptoms cancel on every
/// detector while flipping some observable. `None` when no such set exists.
/// Hyperedges are decomposed first.
pub fn estimate_circuit_distance(dem: &DetectorErrorModel) -> Result<Option<usize>, DecodeError> {
    let g = decompose_hyperedges(dem)?;
    if g.mechanisms.iter().any(|m| m.detectors.is_empty() && m.observable_mask() != 0) {
        return Ok(Some(1));
    }
    let n = g.num_detectors + 1;
    let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    for m in &g.mechanisms {
        let (u, v) = match m.detectors[..] {
            [a] => (a, g.num_detectors),
            [a, b] => (a, b),
            _ => continue,
        };
        adj[u].push((v, m.observable_mask()));
        adj[v].push((u, m.observable_mask()));
    }
    // Closed walks from each node over (node, accumulated mask) states.
    let mut best: Option<usize> = None;
    let mut seen: HashMap<(usize, u64), usize> = HashMap::new();
    for s in (0..n).rev() {
        if adj[s].is_empty() {
            continue;
        }
        seen.clear();
        let mut queue = VecDeque::new();
        seen.insert((s, 0), 0);
        queue.push_back((s, 0u64, 0usize));
        while let Some((u, m, d)) = queue.pop_front() {
            if best.is_some_and(|b| d + 1 >= b) {
                break;
            }
            for &(v, em) in &adj[u] {
                let st = (v, m ^ em);
                if seen.contains_key(&st) {
                    continue;
                }
                if v == s && st.1 != 0 {
                    best = Some(d + 1);
                    break;
                }
                seen.insert(st, d + 1);
                queue.push_back((v, st.1, d + 1));
            }
        }
    }
    Ok(best)
}
