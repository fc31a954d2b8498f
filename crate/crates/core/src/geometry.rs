//! Planar surface-code strip with qubits on edges.
//!
//! The strip spans `0 <= x <= N` (Alice at `x = 0`, Bob at `x = N`) and
//! `0 <= y <= L`. Edge indexing is row-major with horizontal edges first:
//!
//! * horizontal edge `(x,y)-(x+1,y)`: index `y*N + x`
//! * vertical edge `(x,y)-(x,y+1)`: index `N*(L+1) + y*(N+1) + x`
//!
//! Boundary convention: plaquettes bordering the short sides (`x = 0`,
//! `x = N`) drop the vertical edge lying on that side, and vertex stars on
//! the short sides drop their horizontal edges. Horizontal Z-strings then
//! terminate on the short sides and vertical X dual paths terminate on the
//! long sides, which leaves exactly `|V| + |P| - 2` independent stabilizer
//! generators and one encoded logical qubit.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    Horizontal,
    Vertical,
}

/// A single lattice edge with its lower-left endpoint coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub kind: EdgeKind,
    pub x: usize,
    pub y: usize,
}

impl Edge {
    /// Endpoint coordinates `((x0,y0), (x1,y1))`.
    pub fn endpoints(&self) -> ((usize, usize), (usize, usize)) {
        match self.kind {
            EdgeKind::Horizontal => ((self.x, self.y), (self.x + 1, self.y)),
            EdgeKind::Vertical => ((self.x, self.y), (self.x, self.y + 1)),
        }
    }
}

/// Which logical string terminates on a given boundary side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryClass {
    /// Short sides `x = 0` and `x = N`: horizontal logical-Z strings end here.
    ZTerminating,
    /// Long sides `y = 0` and `y = L`: vertical logical-X dual paths end here.
    XTerminating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilizerRef {
    /// X-type check on a vertex (index into `vertex_stabilizers`).
    Vertex(usize),
    /// Z-type check on a plaquette (index into `plaquette_stabilizers`).
    Plaquette(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogicalKind {
    ZLogical,
    XLogical,
}

/// A logical operator representative: an edge set plus its path parameter
/// (row `y` for the horizontal Z string, column `x` for the X dual path).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalOperator {
    pub kind: LogicalKind,
    pub support: Vec<usize>,
    pub row_or_col: usize,
}

/// Immutable strip geometry: edges, stabilizer supports, boundaries and
/// logical representatives. Safe to share across worker threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeGeometry {
    pub n_cols: usize,
    pub distance: usize,
    pub edges: Vec<Edge>,
    /// Per vertex, the edge-index set of its (possibly truncated) X check.
    pub vertex_stabilizers: Vec<Vec<usize>>,
    /// Per plaquette, the edge-index set of its (possibly truncated) Z check.
    pub plaquette_stabilizers: Vec<Vec<usize>>,
    /// `(west, east, south, north)` boundary classes.
    pub boundary_class: [BoundaryClass; 4],
    /// The `2L` checks Alice measures on her `x = 0` column: `L` X-type
    /// then `L` Z-type.
    pub alice_boundary_stabilizers: Vec<StabilizerRef>,
    /// Per edge, the plaquettes whose truncated support contains it
    /// (0, 1 or 2 entries).
    pub edge_plaquettes: Vec<Vec<usize>>,
}

impl CodeGeometry {
    pub fn n_rows(&self) -> usize {
        self.distance
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_vertices(&self) -> usize {
        (self.n_cols + 1) * (self.distance + 1)
    }

    pub fn n_plaquettes(&self) -> usize {
        self.n_cols * self.distance
    }

    pub fn h_edge(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.n_cols && y <= self.distance);
        y * self.n_cols + x
    }

    pub fn v_edge(&self, x: usize, y: usize) -> usize {
        debug_assert!(x <= self.n_cols && y < self.distance);
        self.n_cols * (self.distance + 1) + y * (self.n_cols + 1) + x
    }

    pub fn vertex(&self, x: usize, y: usize) -> usize {
        y * (self.n_cols + 1) + x
    }

    pub fn plaquette(&self, x: usize, y: usize) -> usize {
        y * self.n_cols + x
    }

    /// `(x, y)` coordinate of a plaquette index.
    pub fn plaquette_coord(&self, p: usize) -> (usize, usize) {
        (p % self.n_cols, p / self.n_cols)
    }
}

/// Build and validate the strip geometry.
///
/// Rejects `n_cols == 0` or `distance == 0`; otherwise every structural
/// invariant (edge count `2NL + N + L`, Euler identity, pairwise even
/// stabilizer overlap) is checked before returning.
pub fn build_geometry(n_cols: usize, distance: usize) -> Result<CodeGeometry> {
    if n_cols == 0 {
        return Err(Error::invalid("n_cols", "must be >= 1"));
    }
    if distance == 0 {
        return Err(Error::invalid("distance", "must be >= 1"));
    }
    let (n, l) = (n_cols, distance);

    let mut edges = Vec::with_capacity(2 * n * l + n + l);
    for y in 0..=l {
        for x in 0..n {
            edges.push(Edge { kind: EdgeKind::Horizontal, x, y });
        }
    }
    for y in 0..l {
        for x in 0..=n {
            edges.push(Edge { kind: EdgeKind::Vertical, x, y });
        }
    }

    let mut geom = CodeGeometry {
        n_cols: n,
        distance: l,
        edges,
        vertex_stabilizers: Vec::new(),
        plaquette_stabilizers: Vec::new(),
        boundary_class: [
            BoundaryClass::ZTerminating, // west, x = 0
            BoundaryClass::ZTerminating, // east, x = N
            BoundaryClass::XTerminating, // south, y = 0
            BoundaryClass::XTerminating, // north, y = L
        ],
        alice_boundary_stabilizers: Vec::new(),
        edge_plaquettes: Vec::new(),
    };

    // Z checks: face edges, minus the vertical edge lying on a short side.
    let mut plaq = Vec::with_capacity(n * l);
    for y in 0..l {
        for x in 0..n {
            let mut s = vec![geom.h_edge(x, y), geom.h_edge(x, y + 1)];
            if x > 0 {
                s.push(geom.v_edge(x, y));
            }
            if x + 1 < n {
                s.push(geom.v_edge(x + 1, y));
            }
            s.sort_unstable();
            plaq.push(s);
        }
    }
    geom.plaquette_stabilizers = plaq;

    // X checks: incident edges, minus horizontal edges on the short sides.
    let mut stars = Vec::with_capacity((n + 1) * (l + 1));
    for y in 0..=l {
        for x in 0..=n {
            let mut s = Vec::with_capacity(4);
            if x != 0 && x != n {
                if x > 0 {
                    s.push(geom.h_edge(x - 1, y));
                }
                if x < n {
                    s.push(geom.h_edge(x, y));
                }
            }
            if y > 0 {
                s.push(geom.v_edge(x, y - 1));
            }
            if y < l {
                s.push(geom.v_edge(x, y));
            }
            s.sort_unstable();
            stars.push(s);
        }
    }
    geom.vertex_stabilizers = stars;

    // Alice's 2L boundary checks: vertex stars (0, 0..L) and plaquettes (0, 0..L).
    let mut alice = Vec::with_capacity(2 * l);
    for y in 0..l {
        alice.push(StabilizerRef::Vertex(geom.vertex(0, y)));
    }
    for y in 0..l {
        alice.push(StabilizerRef::Plaquette(geom.plaquette(0, y)));
    }
    geom.alice_boundary_stabilizers = alice;

    // Edge -> plaquette adjacency, derived from the truncated supports.
    let mut edge_plaquettes = vec![Vec::new(); geom.n_edges()];
    for (p, support) in geom.plaquette_stabilizers.iter().enumerate() {
        for &e in support {
            edge_plaquettes[e].push(p);
        }
    }
    geom.edge_plaquettes = edge_plaquettes;

    validate(&geom)?;
    Ok(geom)
}

fn validate(geom: &CodeGeometry) -> Result<()> {
    let (n, l) = (geom.n_cols, geom.distance);
    let e = geom.n_edges();
    let v = geom.n_vertices();
    let p = geom.n_plaquettes();
    if e != 2 * n * l + n + l {
        return Err(Error::invalid("edges", format!("count {} != 2NL+N+L", e)));
    }
    if e as i64 - v as i64 - p as i64 != -1 {
        return Err(Error::invalid("edges", "Euler identity |E|-|V|-|P| = -1 violated"));
    }
    // Commutation: every star/plaquette pair must share an even edge count.
    for star in &geom.vertex_stabilizers {
        for plaq in &geom.plaquette_stabilizers {
            let overlap = star.iter().filter(|e| plaq.contains(e)).count();
            if overlap % 2 != 0 {
                return Err(Error::invalid("stabilizers", "odd star/plaquette overlap"));
            }
        }
    }
    if geom.alice_boundary_stabilizers.len() != 2 * l {
        return Err(Error::invalid("alice_boundary_stabilizers", "must have 2L members"));
    }
    Ok(())
}

/// The horizontal logical-Z representative along row `row`: the `N`
/// horizontal edges at height `y = row`.
pub fn logical_z(geom: &CodeGeometry, row: usize) -> Result<LogicalOperator> {
    if row > geom.distance {
        return Err(Error::invalid("row", format!("must be <= {}", geom.distance)));
    }
    let support = (0..geom.n_cols).map(|x| geom.h_edge(x, row)).collect();
    Ok(LogicalOperator { kind: LogicalKind::ZLogical, support, row_or_col: row })
}

/// The logical-X representative at column `col`: the vertical dual path of
/// horizontal edges `h(col, 0..=L)` crossing the strip from the south to
/// the north boundary (`L + 1` edges).
pub fn logical_x(geom: &CodeGeometry, col: usize) -> Result<LogicalOperator> {
    if col >= geom.n_cols {
        return Err(Error::invalid("col", format!("must be < {}", geom.n_cols)));
    }
    let support = (0..=geom.distance).map(|y| geom.h_edge(col, y)).collect();
    Ok(LogicalOperator { kind: LogicalKind::XLogical, support, row_or_col: col })
}

/// Check the region identity behind path independence: the symmetric
/// difference of the plaquette supports over all faces between `row_a` and
/// `row_b` must equal the symmetric difference of the two Z-string supports.
pub fn verify_path_independence(geom: &CodeGeometry, row_a: usize, row_b: usize) -> Result<bool> {
    if row_a > row_b || row_b > geom.distance {
        return Err(Error::invalid("row_a/row_b", "need 0 <= row_a <= row_b <= L"));
    }
    let mut region = vec![false; geom.n_edges()];
    for y in row_a..row_b {
        for x in 0..geom.n_cols {
            for &e in &geom.plaquette_stabilizers[geom.plaquette(x, y)] {
                region[e] = !region[e];
            }
        }
    }
    let mut paths = vec![false; geom.n_edges()];
    for &e in &logical_z(geom, row_a)?.support {
        paths[e] = !paths[e];
    }
    for &e in &logical_z(geom, row_b)?.support {
        paths[e] = !paths[e];
    }
    Ok(region == paths)
}

/// Exhaustive search bound for [`min_logical_weight`].
pub const MIN_LOGICAL_WEIGHT_EDGE_CAP: usize = 24;

/// Minimum Hamming weight over all X-error edge subsets with empty
/// plaquette syndrome and odd overlap with the logical-Z string, found by
/// Gray-code enumeration of all `2^|E|` subsets.
///
/// For this strip the minimum is `L + 1`: a zero-syndrome set that flips
/// every Z row must contain at least one horizontal edge per row, and the
/// column dual path `h(x, 0..=L)` attains that bound.
pub fn min_logical_weight(geom: &CodeGeometry) -> Result<usize> {
    let e = geom.n_edges();
    if e > MIN_LOGICAL_WEIGHT_EDGE_CAP {
        return Err(Error::CapacityExceeded {
            what: "min_logical_weight",
            message: format!("|E| = {} exceeds the exhaustive bound {}", e, MIN_LOGICAL_WEIGHT_EDGE_CAP),
        });
    }
    let p = geom.n_plaquettes();
    debug_assert!(p <= 64);
    // Per-edge syndrome mask and logical-Z membership (row 0 representative).
    let mut syndrome_mask = vec![0u64; e];
    for (pi, support) in geom.plaquette_stabilizers.iter().enumerate() {
        for &ei in support {
            syndrome_mask[ei] |= 1 << pi;
        }
    }
    let mut z_member = vec![false; e];
    for &ei in &logical_z(geom, 0)?.support {
        z_member[ei] = true;
    }

    // Gray-code walk over all subsets: one edge toggles per step.
    let mut best = usize::MAX;
    let mut syndrome = 0u64;
    let mut z_parity = false;
    let mut weight = 0usize;
    let mut members = vec![false; e];
    for step in 1u64..(1u64 << e) {
        let ei = step.trailing_zeros() as usize;
        syndrome ^= syndrome_mask[ei];
        if z_member[ei] {
            z_parity = !z_parity;
        }
        if members[ei] {
            weight -= 1;
        } else {
            weight += 1;
        }
        members[ei] = !members[ei];
        if syndrome == 0 && z_parity && weight < best {
            best = weight;
        }
    }
    Ok(best)
}
