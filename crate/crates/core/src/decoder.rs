//! Spacetime minimum-weight perfect matching of detection events.
//!
//! Detections live on a layered graph: one plaquette layer per measurement
//! round, space edges between adjacent faces, time edges between rounds,
//! and two virtual vertices absorbing matches at the y=0 and y=L rough
//! boundaries. Edge weights follow the log-likelihood convention
//! `w = ln((1-p)/p)` and are normalised by the space weight into even
//! integers, so rescaling every weight by a positive constant produces an
//! identical matching problem.
//!
//! A small deterministic perturbation (an even hash of the edge endpoints)
//! is added to every integer weight so that the optimum is unique with
//! overwhelming probability. Blossom output and the exhaustive reference
//! decoder therefore agree on the inferred logical class, not just the
//! total weight. Two moduli are used: lattice edges get a narrow jitter
//! (wide ranges multiply distinct blossom tightness events and slow the
//! solver badly, while a matching traverses many lattice edges so even a
//! narrow range breaks ties), and the complete defect-pair graph gets a
//! wide jitter (its matchings use few edges, and its solver instances are
//! tiny so the extra event count costs nothing).

use crate::error::{Error, Result};
use crate::geometry::CodeGeometry;
use crate::noise::{ErrorTruth, NoiseParams, SyndromeHistory};
use fusion_blossom::dual_module::DualNodeClass;
use fusion_blossom::mwpm_solver::{PrimalDualSolver, SolverSerial};
use fusion_blossom::util::{SolverInitializer, SyndromePattern};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Integer weight of one space step after normalisation.
pub const SPACE_WEIGHT_UNITS: isize = 1 << 24;

/// Largest defect count the exhaustive reference decoder accepts.
pub const EXHAUSTIVE_DEFECT_CAP: usize = 20;

/// Probabilities are clamped away from 0 before taking log-likelihoods so
/// quiet channels still produce finite (huge) weights.
const P_FLOOR: f64 = 1e-12;

/// Log-likelihood weight `ln((1-p)/p)` with the probability floored.
pub fn log_likelihood_weight(p: f64) -> f64 {
    let p = p.max(P_FLOOR);
    ((1.0 - p) / p).ln()
}

/// One detection event, with its plaquette coordinates spelled out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectNode {
    pub plaquette: usize,
    pub round: usize,
    pub x: usize,
    pub y: usize,
}

/// Which rough boundary a defect-boundary match terminates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundarySide {
    /// y = 0 side; a correction reaching it crosses the reference row.
    Bottom,
    /// y = L side.
    Top,
}

/// Matching problem extracted from one syndrome history: defect nodes,
/// their cheapest boundary connections, and the pairwise shortest-path
/// metric of the layered lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodingGraph {
    pub defect_nodes: Vec<DefectNode>,
    /// Cheapest boundary-connection weight per defect.
    pub boundary_weights: Vec<f64>,
    /// Side realising that cheapest connection (bottom wins ties).
    pub boundary_sides: Vec<BoundarySide>,
    /// Symmetric shortest-path weights between defects.
    pub pair_weights: Vec<Vec<f64>>,
    /// `ln((1-p)/p)` per space step.
    pub space_weight: f64,
    /// `ln((1-q_m)/q_m)` per round step.
    pub time_weight: f64,
}

/// One element of a perfect matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchPair {
    /// Two defects (by index into `defect_nodes`) matched to each other.
    Defects(usize, usize),
    /// A defect matched into a rough boundary.
    Boundary(usize, BoundarySide),
}

/// Decoder output: the matching itself, its weight, and the logical class
/// of the implied correction (parity of reference-row crossings).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<MatchPair>,
    pub total_weight: f64,
    /// Same weight in normalised integer units (exact, comparable).
    pub total_weight_units: isize,
    pub inferred_logical_flip: bool,
}

impl Matching {
    fn empty() -> Self {
        Matching { pairs: Vec::new(), total_weight: 0.0, total_weight_units: 0, inferred_logical_flip: false }
    }
}

fn endpoint_hash(a: usize, b: usize) -> u64 {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let mut h: u64 = 0xcbf29ce484222325;
    for byte in (a as u64).to_le_bytes().into_iter().chain((b as u64).to_le_bytes()) {
        h ^= byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Deterministic even perturbation for lattice edges, FNV-1a over the
/// (ordered) endpoint ids. The modulus is kept small on purpose: blossom
/// runtime grows with the number of distinct tightness events, and a
/// matching on the lattice traverses enough edges that even a few jitter
/// classes make equal-weight optima vanishingly rare.
fn weight_jitter(a: usize, b: usize) -> isize {
    2 * (endpoint_hash(a, b) % 16) as isize
}

/// Perturbation for the complete defect graph. One matching there uses
/// only a handful of edges, so tie entropy must come from a much wider
/// jitter range; its solver instances are tiny, so the extra tightness
/// events cost nothing.
fn pair_jitter(a: usize, b: usize) -> isize {
    2 * (endpoint_hash(a, b) % 65536) as isize
}

/// Even integer units for a float weight, normalised so one space step
/// maps to [`SPACE_WEIGHT_UNITS`].
fn to_units(w: f64, space_weight: f64) -> isize {
    2 * ((w / space_weight) * (SPACE_WEIGHT_UNITS as f64 / 2.0)).round() as isize
}

fn units_to_weight(units: isize, space_weight: f64) -> f64 {
    units as f64 / SPACE_WEIGHT_UNITS as f64 * space_weight
}

fn check_history(geom: &CodeGeometry, history: &SyndromeHistory) -> Result<()> {
    if history.n_plaquettes != geom.n_plaquettes() {
        return Err(Error::invalid("history", "plaquette count does not match geometry"));
    }
    if history.rounds == 0 || history.outcomes.len() != history.rounds * history.n_plaquettes {
        return Err(Error::invalid("history", "inconsistent round/outcome dimensions"));
    }
    for &(p, r) in &history.detections {
        if p >= history.n_plaquettes || r >= history.rounds {
            return Err(Error::invalid("history", "detection coordinate out of range"));
        }
    }
    Ok(())
}

/// Extract the matching problem for one history: defects, boundary
/// weights, and the closed-form layered-lattice metric
/// `w_s (|dx| + |dy|) + w_t |dr|`.
pub fn build_decoding_graph(
    geom: &CodeGeometry,
    noise: &NoiseParams,
    history: &SyndromeHistory,
) -> Result<DecodingGraph> {
    noise.validate()?;
    check_history(geom, history)?;
    let space_weight = log_likelihood_weight(noise.p);
    let time_weight = log_likelihood_weight(noise.meas_p());
    let l = geom.distance;

    let defect_nodes: Vec<DefectNode> = history
        .detections
        .iter()
        .map(|&(p, r)| {
            let (x, y) = geom.plaquette_coord(p);
            DefectNode { plaquette: p, round: r, x, y }
        })
        .collect();

    let mut boundary_weights = Vec::with_capacity(defect_nodes.len());
    let mut boundary_sides = Vec::with_capacity(defect_nodes.len());
    for d in &defect_nodes {
        let bottom = (d.y + 1) as f64 * space_weight;
        let top = (l - d.y) as f64 * space_weight;
        if bottom <= top {
            boundary_weights.push(bottom);
            boundary_sides.push(BoundarySide::Bottom);
        } else {
            boundary_weights.push(top);
            boundary_sides.push(BoundarySide::Top);
        }
    }

    let k = defect_nodes.len();
    let mut pair_weights = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let (a, b) = (&defect_nodes[i], &defect_nodes[j]);
            let dx = a.x.abs_diff(b.x) as f64;
            let dy = a.y.abs_diff(b.y) as f64;
            let dr = a.round.abs_diff(b.round) as f64;
            let w = space_weight * (dx + dy) + time_weight * dr;
            pair_weights[i][j] = w;
            pair_weights[j][i] = w;
        }
    }

    Ok(DecodingGraph {
        defect_nodes,
        boundary_weights,
        boundary_sides,
        pair_weights,
        space_weight,
        time_weight,
    })
}

/// Minimum-weight perfect matching of a [`DecodingGraph`] on the complete
/// defect graph plus one virtual boundary vertex.
pub fn mwpm_decode(graph: &DecodingGraph) -> Result<Matching> {
    let k = graph.defect_nodes.len();
    if k == 0 {
        return Ok(Matching::empty());
    }
    let virtual_vertex = k;
    let mut edges: Vec<(usize, usize, isize)> = Vec::with_capacity(k * (k + 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            edges.push((i, j, to_units(graph.pair_weights[i][j], graph.space_weight) + pair_jitter(i, j)));
        }
        edges.push((
            i,
            virtual_vertex,
            to_units(graph.boundary_weights[i], graph.space_weight) + pair_jitter(i, virtual_vertex),
        ));
    }
    let initializer = SolverInitializer::new(k + 1, edges.clone(), vec![virtual_vertex]);
    let mut solver = SolverSerial::new(&initializer);
    solver.solve(&SyndromePattern::new_vertices((0..k).collect()));
    let matching = extract_matching(
        &mut solver,
        &edges,
        graph.space_weight,
        |vertex| vertex,
        |vertex| vertex == virtual_vertex,
        |_vertex, defect| graph.boundary_sides[defect],
    );
    Ok(matching)
}

/// Convenience wrapper: decode one history and compare the inferred class
/// against ground truth.
pub fn decode_success(
    geom: &CodeGeometry,
    noise: &NoiseParams,
    history: &SyndromeHistory,
    truth: &ErrorTruth,
) -> Result<bool> {
    let mut decoder = Decoder::new(geom, noise, history.rounds)?;
    Ok(decoder.decode(history)?.inferred_logical_flip == truth.true_logical_flip)
}

/// Pull pairs, total weight, and crossing parity out of a solved blossom
/// instance. `boundary_side` maps (virtual vertex id, defect index) to the
/// side that match terminates on.
fn extract_matching(
    solver: &mut SolverSerial,
    edges: &[(usize, usize, isize)],
    space_weight: f64,
    vertex_to_defect: impl Fn(usize) -> usize,
    is_virtual: impl Fn(usize) -> bool,
    boundary_side: impl Fn(usize, usize) -> BoundarySide,
) -> Matching {
    // Weight and crossing parity come from the correction subgraph
    // itself: the solver may realise a pairing through intermediate
    // vertices, so the reported matchings alone do not determine which
    // boundary edges the correction actually uses.
    let mut total_weight_units: isize = 0;
    let mut bottom_crossings = 0usize;
    for &e in solver.subgraph().iter() {
        let (u, v, w) = edges[e];
        total_weight_units += w;
        for (a, b) in [(u, v), (v, u)] {
            if is_virtual(a)
                && !is_virtual(b)
                && boundary_side(a, b) == BoundarySide::Bottom
            {
                bottom_crossings += 1;
            }
        }
    }
    let pm = solver.perfect_matching();
    let mut pairs = Vec::new();
    let defect_of = |ptr: &fusion_blossom::dual_module::DualNodePtr| -> usize {
        let node = ptr.read_recursive();
        match &node.class {
            DualNodeClass::DefectVertex { defect_index } => vertex_to_defect(*defect_index),
            _ => unreachable!("matched nodes are defects"),
        }
    };
    for (a, b) in &pm.peer_matchings {
        pairs.push(MatchPair::Defects(defect_of(a), defect_of(b)));
    }
    for (a, virtual_vertex) in &pm.virtual_matchings {
        let defect = defect_of(a);
        pairs.push(MatchPair::Boundary(defect, boundary_side(*virtual_vertex, defect)));
    }
    solver.clear();
    Matching {
        pairs,
        total_weight: units_to_weight(total_weight_units, space_weight),
        total_weight_units,
        inferred_logical_flip: bottom_crossings % 2 == 1,
    }
}

/// Reusable layered-graph decoder for one `(geometry, noise, rounds)`
/// configuration. The blossom solver and its graph are built once and
/// cleared between shots, which is what the shot loops rely on.
pub struct Decoder {
    n_plaquettes: usize,
    rounds: usize,
    space_weight: f64,
    edges: Vec<(usize, usize, isize)>,
    /// Adjacency over real (face, round) vertices only; virtual vertices
    /// appear as sinks so reference shortest paths cannot tunnel through
    /// a boundary.
    adjacency: Vec<Vec<(usize, isize)>>,
    bottom_virtual: usize,
    top_virtual: usize,
    solver: SolverSerial,
}

impl Decoder {
    pub fn new(geom: &CodeGeometry, noise: &NoiseParams, rounds: usize) -> Result<Self> {
        noise.validate()?;
        if rounds == 0 {
            return Err(Error::invalid("rounds", "must be >= 1"));
        }
        let n = geom.n_cols;
        let l = geom.distance;
        let n_p = geom.n_plaquettes();
        let space_weight = log_likelihood_weight(noise.p);
        let time_weight = log_likelihood_weight(noise.meas_p());
        let time_units = to_units(time_weight, space_weight).max(2);

        let bottom_virtual = rounds * n_p;
        let top_virtual = bottom_virtual + 1;
        let vertex = |p: usize, r: usize| r * n_p + p;

        let mut edges: Vec<(usize, usize, isize)> = Vec::new();
        for r in 0..rounds {
            for y in 0..l {
                for x in 0..n {
                    let here = vertex(geom.plaquette(x, y), r);
                    if x + 1 < n {
                        let right = vertex(geom.plaquette(x + 1, y), r);
                        edges.push((here, right, SPACE_WEIGHT_UNITS + weight_jitter(here, right)));
                    }
                    if y + 1 < l {
                        let up = vertex(geom.plaquette(x, y + 1), r);
                        edges.push((here, up, SPACE_WEIGHT_UNITS + weight_jitter(here, up)));
                    }
                    if y == 0 {
                        edges.push((here, bottom_virtual, SPACE_WEIGHT_UNITS + weight_jitter(here, bottom_virtual)));
                    }
                    if y + 1 == l {
                        edges.push((here, top_virtual, SPACE_WEIGHT_UNITS + weight_jitter(here, top_virtual)));
                    }
                }
            }
            if r + 1 < rounds {
                for p in 0..n_p {
                    let (here, next) = (vertex(p, r), vertex(p, r + 1));
                    edges.push((here, next, time_units + weight_jitter(here, next)));
                }
            }
        }

        let mut adjacency = vec![Vec::new(); top_virtual + 1];
        for &(u, v, w) in &edges {
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        for virt in [bottom_virtual, top_virtual] {
            adjacency[virt].clear();
        }

        let initializer =
            SolverInitializer::new(top_virtual + 1, edges.clone(), vec![bottom_virtual, top_virtual]);
        let solver = SolverSerial::new(&initializer);
        Ok(Decoder {
            n_plaquettes: n_p,
            rounds,
            space_weight,
            edges,
            adjacency,
            bottom_virtual,
            top_virtual,
            solver,
        })
    }

    fn defect_vertices(&self, history: &SyndromeHistory) -> Result<Vec<usize>> {
        if history.n_plaquettes != self.n_plaquettes || history.rounds != self.rounds {
            return Err(Error::invalid("history", "dimensions do not match decoder configuration"));
        }
        Ok(history.detections.iter().map(|&(p, r)| r * self.n_plaquettes + p).collect())
    }

    /// Decode one history via blossom matching on the layered graph.
    pub fn decode(&mut self, history: &SyndromeHistory) -> Result<Matching> {
        let defects = self.defect_vertices(history)?;
        if defects.is_empty() {
            return Ok(Matching::empty());
        }
        let index_of: HashMap<usize, usize> =
            defects.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        self.solver.solve(&SyndromePattern::new_vertices(defects));
        let (bottom_virtual, top_virtual) = (self.bottom_virtual, self.top_virtual);
        let matching = extract_matching(
            &mut self.solver,
            &self.edges,
            self.space_weight,
            |vertex| index_of[&vertex],
            |vertex| vertex == bottom_virtual || vertex == top_virtual,
            |virtual_vertex, _defect| {
                if virtual_vertex == bottom_virtual {
                    BoundarySide::Bottom
                } else {
                    debug_assert_eq!(virtual_vertex, top_virtual);
                    BoundarySide::Top
                }
            },
        );
        Ok(matching)
    }

    /// Decode and compare against ground truth.
    pub fn success(&mut self, history: &SyndromeHistory, truth: &ErrorTruth) -> Result<bool> {
        Ok(self.decode(history)?.inferred_logical_flip == truth.true_logical_flip)
    }

    /// Shortest-path distances from one real vertex to every vertex,
    /// refusing to leave virtual vertices. Dijkstra on the same jittered
    /// integer weights the blossom solver sees.
    fn distances_from(&self, source: usize) -> Vec<isize> {
        let mut dist = vec![isize::MAX; self.adjacency.len()];
        let mut heap = std::collections::BinaryHeap::new();
        dist[source] = 0;
        heap.push(std::cmp::Reverse((0isize, source)));
        while let Some(std::cmp::Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(std::cmp::Reverse((nd, v)));
                }
            }
        }
        dist
    }

    /// Exhaustive reference decode: dynamic program over all defect
    /// pairings on shortest-path weights, independent of the blossom
    /// machinery. Rejects histories with more than
    /// [`EXHAUSTIVE_DEFECT_CAP`] defects.
    pub fn exhaustive_decode(&self, history: &SyndromeHistory) -> Result<(isize, Option<bool>)> {
        let defects = self.defect_vertices(history)?;
        let k = defects.len();
        let dist: Vec<Vec<isize>> = defects.iter().map(|&v| self.distances_from(v)).collect();
        exhaustive_min_matching(
            k,
            &|i, j| dist[i][defects[j]],
            &|i| {
                let bottom = dist[i][self.bottom_virtual];
                let top = dist[i][self.top_virtual];
                if bottom <= top {
                    (bottom, true)
                } else {
                    (top, false)
                }
            },
        )
    }
}

/// Minimum-weight perfect matching by exhaustive dynamic programming over
/// defect subsets. `boundary(i)` returns the boundary weight and whether
/// that match crosses the reference row. Tracks the minimum total weight
/// separately for each crossing parity; returns the overall minimum and
/// `Some(parity)` when one parity is strictly cheaper, or `None` when the
/// two parity classes tie exactly (either decode is then optimal).
pub fn exhaustive_min_matching(
    n: usize,
    pair: &dyn Fn(usize, usize) -> isize,
    boundary: &dyn Fn(usize) -> (isize, bool),
) -> Result<(isize, Option<bool>)> {
    if n > EXHAUSTIVE_DEFECT_CAP {
        return Err(Error::CapacityExceeded {
            what: "exhaustive matching",
            message: format!("{} defects exceed the cap of {}", n, EXHAUSTIVE_DEFECT_CAP),
        });
    }
    let full = 1usize << n;
    // dp[mask][parity] = min weight matching the defects in mask with the
    // given crossing parity.
    let mut dp: Vec<[isize; 2]> = vec![[isize::MAX, isize::MAX]; full];
    dp[0] = [0, isize::MAX];
    for mask in 1..full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1usize << i);
        let (bw, crosses) = boundary(i);
        let mut best = [isize::MAX, isize::MAX];
        for parity in 0..2 {
            let target = parity ^ usize::from(crosses);
            best[target] = dp[rest][parity].saturating_add(bw);
        }
        let mut others = rest;
        while others != 0 {
            let j = others.trailing_zeros() as usize;
            others &= others - 1;
            let sub = rest & !(1usize << j);
            let pw = pair(i, j);
            for parity in 0..2 {
                let cand = dp[sub][parity].saturating_add(pw);
                if cand < best[parity] {
                    best[parity] = cand;
                }
            }
        }
        dp[mask] = best;
    }
    let [even, odd] = dp[full - 1];
    let weight = even.min(odd);
    let flip = if even == odd { None } else { Some(odd < even) };
    Ok((weight, flip))
}

/// Exhaustive reference decode of a [`DecodingGraph`], using exactly the
/// integer weights [`mwpm_decode`] hands to the blossom solver.
pub fn exhaustive_decode_graph(graph: &DecodingGraph) -> Result<(isize, Option<bool>)> {
    let k = graph.defect_nodes.len();
    // The jitter breaks the triangle inequality on the complete graph,
    // so the solver may realise a pairing through intermediate defects
    // more cheaply than the direct edge. Price the metric closure over
    // defect intermediates instead of the direct edges, and close the
    // boundary weights the same way (keeping the side of the boundary
    // edge actually used).
    let mut dist = vec![vec![0isize; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let w = to_units(graph.pair_weights[i][j], graph.space_weight) + pair_jitter(i, j);
            dist[i][j] = w;
            dist[j][i] = w;
        }
    }
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                let via = dist[i][m].saturating_add(dist[m][j]);
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    let direct: Vec<(isize, bool)> = (0..k)
        .map(|i| {
            (
                to_units(graph.boundary_weights[i], graph.space_weight) + pair_jitter(i, k),
                graph.boundary_sides[i] == BoundarySide::Bottom,
            )
        })
        .collect();
    let closed: Vec<(isize, bool)> = (0..k)
        .map(|i| {
            let mut best = direct[i];
            for j in 0..k {
                let via = dist[i][j].saturating_add(direct[j].0);
                if via < best.0 {
                    best = (via, direct[j].1);
                }
            }
            best
        })
        .collect();
    exhaustive_min_matching(k, &|i, j| dist[i][j], &|i| closed[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;
    use crate::noise::sample_history;
    use crate::rngstream::shot_rng;

    fn history_with(geom: &CodeGeometry, rounds: usize, detections: Vec<(usize, usize)>) -> SyndromeHistory {
        // Outcome rows consistent with the given detection set.
        let n_p = geom.n_plaquettes();
        let mut outcomes = vec![0u8; rounds * n_p];
        for &(p, r) in &detections {
            for rr in r..rounds {
                outcomes[rr * n_p + p] ^= 1;
            }
        }
        SyndromeHistory { rounds, n_plaquettes: n_p, outcomes, detections }
    }

    #[test]
    fn empty_history_decodes_trivially() {
        let geom = build_geometry(3, 3).unwrap();
        let noise = NoiseParams::new(0.05).unwrap();
        let hist = history_with(&geom, 2, vec![]);
        let graph = build_decoding_graph(&geom, &noise, &hist).unwrap();
        assert!(graph.defect_nodes.is_empty());
        let m = mwpm_decode(&graph).unwrap();
        assert_eq!(m, Matching::empty());
        let mut dec = Decoder::new(&geom, &noise, 2).unwrap();
        assert_eq!(dec.decode(&hist).unwrap(), Matching::empty());
    }

    #[test]
    fn adjacent_same_round_pair_weight_is_one_space_step() {
        let geom = build_geometry(4, 3).unwrap();
        let noise = NoiseParams::new(0.03).unwrap();
        let hist = history_with(&geom, 1, vec![(geom.plaquette(1, 1), 0), (geom.plaquette(2, 1), 0)]);
        let graph = build_decoding_graph(&geom, &noise, &hist).unwrap();
        assert!((graph.pair_weights[0][1] - graph.space_weight).abs() < 1e-12);
        // Both defects sit one step apart and two steps from any
        // boundary, so they match each other.
        let m = mwpm_decode(&graph).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert!(matches!(m.pairs[0], MatchPair::Defects(_, _)));
        assert!(!m.inferred_logical_flip);
    }

    #[test]
    fn single_bottom_defect_matches_bottom_and_flips() {
        let geom = build_geometry(4, 3).unwrap();
        let noise = NoiseParams::new(0.03).unwrap();
        let hist = history_with(&geom, 1, vec![(geom.plaquette(2, 0), 0)]);
        let graph = build_decoding_graph(&geom, &noise, &hist).unwrap();
        assert_eq!(graph.boundary_sides[0], BoundarySide::Bottom);
        let m = mwpm_decode(&graph).unwrap();
        assert_eq!(m.pairs, vec![MatchPair::Boundary(0, BoundarySide::Bottom)]);
        assert!(m.inferred_logical_flip);
        let mut dec = Decoder::new(&geom, &noise, 1).unwrap();
        let lm = dec.decode(&hist).unwrap();
        assert_eq!(lm.pairs, vec![MatchPair::Boundary(0, BoundarySide::Bottom)]);
        assert!(lm.inferred_logical_flip);
    }

    #[test]
    fn pair_weights_match_dijkstra_on_float_graph() {
        // Independent reference: Dijkstra over the unperturbed layered
        // graph with float weights, no virtual vertices.
        let geom = build_geometry(3, 3).unwrap();
        let noise = NoiseParams::new(0.04).unwrap();
        let rounds = 2;
        let (hist, _) = sample_history(&geom, &noise, rounds, &mut shot_rng(7, 0, 3)).unwrap();
        let graph = build_decoding_graph(&geom, &noise, &hist).unwrap();
        let n_p = geom.n_plaquettes();
        let vertex = |p: usize, r: usize| r * n_p + p;
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rounds * n_p];
        for r in 0..rounds {
            for y in 0..geom.distance {
                for x in 0..geom.n_cols {
                    let here = vertex(geom.plaquette(x, y), r);
                    if x + 1 < geom.n_cols {
                        let o = vertex(geom.plaquette(x + 1, y), r);
                        adj[here].push((o, graph.space_weight));
                        adj[o].push((here, graph.space_weight));
                    }
                    if y + 1 < geom.distance {
                        let o = vertex(geom.plaquette(x, y + 1), r);
                        adj[here].push((o, graph.space_weight));
                        adj[o].push((here, graph.space_weight));
                    }
                }
            }
            if r + 1 < rounds {
                for p in 0..n_p {
                    adj[vertex(p, r)].push((vertex(p, r + 1), graph.time_weight));
                    adj[vertex(p, r + 1)].push((vertex(p, r), graph.time_weight));
                }
            }
        }
        let dijkstra = |src: usize| -> Vec<f64> {
            let mut dist = vec![f64::INFINITY; adj.len()];
            dist[src] = 0.0;
            let mut todo: Vec<usize> = (0..adj.len()).collect();
            while !todo.is_empty() {
                let (pos, &u) = todo
                    .iter()
                    .enumerate()
                    .min_by(|a, b| dist[*a.1].partial_cmp(&dist[*b.1]).unwrap())
                    .unwrap();
                todo.swap_remove(pos);
                for &(v, w) in &adj[u] {
                    if dist[u] + w < dist[v] {
                        dist[v] = dist[u] + w;
                    }
                }
            }
            dist
        };
        for (i, a) in graph.defect_nodes.iter().enumerate() {
            let dist = dijkstra(vertex(a.plaquette, a.round));
            for (j, b) in graph.defect_nodes.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = dist[vertex(b.plaquette, b.round)];
                assert!((d - graph.pair_weights[i][j]).abs() < 1e-9, "{} vs {}", d, graph.pair_weights[i][j]);
            }
        }
        // Triangle inequality comes with the shortest-path metric.
        let k = graph.defect_nodes.len();
        for i in 0..k {
            for j in 0..k {
                for m in 0..k {
                    if i != j && j != m && i != m {
                        assert!(graph.pair_weights[i][j] <= graph.pair_weights[i][m] + graph.pair_weights[m][j] + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn complete_graph_decode_matches_exhaustive_reference() {
        let geom = build_geometry(4, 3).unwrap();
        let noise = NoiseParams::new(0.05).unwrap();
        let mut checked = 0u32;
        let mut shot = 0u32;
        while checked < 200 {
            let (hist, _) =
                sample_history(&geom, &noise, 3, &mut shot_rng(1001, 0, shot)).unwrap();
            shot += 1;
            if hist.detections.is_empty() || hist.detections.len() > 8 {
                continue;
            }
            let graph = build_decoding_graph(&geom, &noise, &hist).unwrap();
            let m = mwpm_decode(&graph).unwrap();
            let (ref_units, ref_flip) = exhaustive_decode_graph(&graph).unwrap();
            assert_eq!(m.total_weight_units, ref_units, "shot {}", shot);
            if let Some(flip) = ref_flip {
                assert_eq!(m.inferred_logical_flip, flip, "shot {}", shot);
            }
            checked += 1;
        }
    }

    #[test]
    fn layered_decode_matches_exhaustive_reference() {
        let geom = build_geometry(4, 3).unwrap();
        let noise = NoiseParams::new(0.06).unwrap();
        let mut dec = Decoder::new(&geom, &noise, 3).unwrap();
        let mut checked = 0u32;
        let mut shot = 0u32;
        while checked < 500 {
            let (hist, _) =
                sample_history(&geom, &noise, 3, &mut shot_rng(2002, 0, shot)).unwrap();
            shot += 1;
            if hist.detections.len() > 10 {
                continue;
            }
            let m = dec.decode(&hist).unwrap();
            let (ref_units, ref_flip) = dec.exhaustive_decode(&hist).unwrap();
            assert_eq!(m.total_weight_units, ref_units, "shot {}", shot);
            if let Some(flip) = ref_flip {
                assert_eq!(m.inferred_logical_flip, flip, "shot {}", shot);
            }
            checked += 1;
        }
    }

    #[test]
    fn rescaled_weights_give_identical_matching() {
        let geom = build_geometry(4, 3).unwrap();
        let noise = NoiseParams::new(0.04).unwrap();
        for shot in 0..50 {
            let (hist, _) = sample_history(&geom, &noise, 2, &mut shot_rng(3003, 0, shot)).unwrap();
            let graph = build_decoding_graph(&geom, &noise, &hist).unwrap();
            for c in [0.5, 3.7] {
                let mut scaled = graph.clone();
                scaled.space_weight *= c;
                scaled.time_weight *= c;
                for row in &mut scaled.pair_weights {
                    for w in row.iter_mut() {
                        *w *= c;
                    }
                }
                for w in &mut scaled.boundary_weights {
                    *w *= c;
                }
                let a = mwpm_decode(&graph).unwrap();
                let b = mwpm_decode(&scaled).unwrap();
                assert_eq!(a.pairs, b.pairs);
                assert_eq!(a.inferred_logical_flip, b.inferred_logical_flip);
                assert_eq!(a.total_weight_units, b.total_weight_units);
            }
        }
    }

    #[test]
    fn quiet_and_undetectable_cases() {
        let geom = build_geometry(3, 3).unwrap();
        let quiet = NoiseParams::new(0.0).unwrap();
        let (hist, truth) = sample_history(&geom, &quiet, 3, &mut shot_rng(5, 0, 0)).unwrap();
        assert!(decode_success(&geom, &NoiseParams::new(0.05).unwrap(), &hist, &truth).unwrap());

        // A full vertical logical chain produces no detections, so the
        // decoder keeps the identity and misses the flip.
        let hist = history_with(&geom, 1, vec![]);
        let truth = ErrorTruth {
            accumulated_x_errors: {
                let mut frame = vec![false; geom.n_edges()];
                for y in 0..=geom.distance {
                    frame[geom.h_edge(1, y)] = true;
                }
                frame
            },
            true_logical_flip: true,
        };
        assert!(!decode_success(&geom, &NoiseParams::new(0.05).unwrap(), &hist, &truth).unwrap());
    }

    #[test]
    fn layered_success_rate_tracks_exhaustive_reference() {
        let geom = build_geometry(3, 3).unwrap();
        let noise = NoiseParams::new(0.05).unwrap();
        let mut dec = Decoder::new(&geom, &noise, 3).unwrap();
        let shots = 2000u32;
        let mut compared = 0u32;
        let mut mwpm_ok = 0u32;
        let mut reference_ok = 0u32;
        let mut flip_mismatch = 0u32;
        for shot in 0..shots {
            let (hist, truth) = sample_history(&geom, &noise, 3, &mut shot_rng(4004, 0, shot)).unwrap();
            if hist.detections.len() > EXHAUSTIVE_DEFECT_CAP {
                continue;
            }
            let m = dec.decode(&hist).unwrap();
            let (ref_units, ref_flip) = dec.exhaustive_decode(&hist).unwrap();
            assert_eq!(m.total_weight_units, ref_units);
            compared += 1;
            if ref_flip.is_some_and(|flip| m.inferred_logical_flip != flip) {
                flip_mismatch += 1;
            }
            if m.inferred_logical_flip == truth.true_logical_flip {
                mwpm_ok += 1;
            }
            if ref_flip.unwrap_or(m.inferred_logical_flip) == truth.true_logical_flip {
                reference_ok += 1;
            }
        }
        assert!(compared > shots * 9 / 10);
        // Perturbed weights make the optimum unique, so class agreement
        // should be essentially exact; allow a whisker for residual ties.
        assert!(flip_mismatch <= 2, "flip mismatches: {}", flip_mismatch);
        let p1 = mwpm_ok as f64 / compared as f64;
        let p2 = reference_ok as f64 / compared as f64;
        let sigma = (p2 * (1.0 - p2) / compared as f64).sqrt();
        assert!((p1 - p2).abs() <= 2.0 * sigma.max(1e-3), "{} vs {}", p1, p2);
    }

    #[test]
    fn rejects_mismatched_history() {
        let geom = build_geometry(3, 3).unwrap();
        let noise = NoiseParams::new(0.05).unwrap();
        let other = build_geometry(5, 4).unwrap();
        let hist = history_with(&other, 2, vec![]);
        assert!(build_decoding_graph(&geom, &noise, &hist).is_err());
        let mut dec = Decoder::new(&geom, &noise, 3).unwrap();
        assert!(dec.decode(&hist).is_err());
    }
}
