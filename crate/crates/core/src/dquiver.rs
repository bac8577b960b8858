//! Double representations of a simply-laced graph with the preprojective
//! relation over `F_q`: orbit catalogs of isomorphism classes and counts of
//! subrepresentations with prescribed sub and quotient.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chartab::AffineType;
use crate::error::{Error, Result};
use crate::ffla::{enumerate_subspaces, FpMatrix, PrimeField, Subspace};

/// Largest relation variety scanned by a catalog, in points of `F_q^entries`.
pub const DEFAULT_VARIETY_CAP: u64 = 1 << 24;
/// Largest base-change group searched by [`are_isomorphic`].
pub const DEFAULT_GROUP_CAP: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationCaps {
    pub variety: u64,
    pub group: u64,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        Self {
            variety: DEFAULT_VARIETY_CAP,
            group: DEFAULT_GROUP_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SimplyLacedGraph {
    vertices: usize,
    /// Edges `(a, b)` with `a < b`, sorted.
    edges: Vec<(usize, usize)>,
}

impl SimplyLacedGraph {
    pub fn new(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::Quiver(format!("loop at vertex {a}")));
            }
            if a.max(b) >= vertices {
                return Err(Error::Quiver(format!("edge ({a},{b}) leaves the vertex set")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        let before = norm.len();
        norm.dedup();
        if norm.len() != before {
            return Err(Error::Quiver("repeated edge".into()));
        }
        Ok(Self {
            vertices,
            edges: norm,
        })
    }

    /// The path `0 - 1 - ... - (n-1)`, i.e. the finite diagram `A_n`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::new(n, &edges).expect("paths are simple")
    }

    pub fn from_adjacency(adj: &[Vec<u32>]) -> Result<Self> {
        let n = adj.len();
        let mut edges = Vec::new();
        for a in 0..n {
            if adj[a][a] != 0 {
                return Err(Error::Quiver(format!("loop at vertex {a}")));
            }
            for b in a + 1..n {
                match adj[a][b] {
                    0 => {}
                    1 => edges.push((a, b)),
                    k => {
                        return Err(Error::Quiver(format!(
                            "{k} edges join {a} and {b}; graphs with multiple edges are excluded"
                        )))
                    }
                }
            }
        }
        Self::new(n, &edges)
    }

    pub fn affine(ty: AffineType) -> Result<Self> {
        Self::from_adjacency(&ty.adjacency())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| match () {
                _ if a == v => Some(b),
                _ if b == v => Some(a),
                _ => None,
            })
            .collect()
    }

    pub fn arrow_count(&self) -> usize {
        2 * self.edges.len()
    }

    /// Arrow `2e` is `x_{ab}: V_b -> V_a` and arrow `2e+1` is `x_{ba}` for
    /// edge `e = (a, b)`. Returns `(target, source)`.
    pub fn arrow(&self, k: usize) -> (usize, usize) {
        let (a, b) = self.edges[k / 2];
        if k.is_multiple_of(2) {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Cartan matrix `2 I - adjacency`.
    pub fn cartan(&self) -> Vec<Vec<i64>> {
        let n = self.vertices;
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| match () {
                        _ if a == b => 2,
                        _ if self.adjacent(a, b) => -1,
                        _ => 0,
                    })
                    .collect()
            })
            .collect()
    }

    /// Induced subgraph on `keep`, relabeled in the given order.
    pub fn induced(&self, keep: &[usize]) -> Self {
        let pos = |v: usize| keep.iter().position(|&k| k == v);
        let edges: Vec<_> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| Some((pos(a)?, pos(b)?)))
            .collect();
        Self::new(keep.len(), &edges).expect("induced subgraphs stay simple")
    }

    pub fn has_cycle(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(parent: &mut [usize], v: usize) -> usize {
            let mut r = v;
            while parent[r] != r {
                r = parent[r];
            }
            parent[v] = r;
            r
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return true;
            }
            parent[ra] = rb;
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DimVector(pub Vec<u32>);

impl DimVector {
    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        Self(v)
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
    pub fn get(&self, i: usize) -> usize {
        self.0[i] as usize
    }
    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
    pub fn scaled(&self, k: u32) -> Self {
        Self(self.0.iter().map(|a| a * k).collect())
    }
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.0[i] > 0).collect()
    }
}

impl fmt::Display for DimVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// A double representation: one matrix per arrow, `x_k` of shape
/// `dim(target) x dim(source)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleRep {
    dims: DimVector,
    maps: Vec<FpMatrix>,
}

impl DoubleRep {
    pub fn zero(graph: &SimplyLacedGraph, dims: &DimVector, p: u32) -> Self {
        let maps = (0..graph.arrow_count())
            .map(|k| {
                let (t, s) = graph.arrow(k);
                FpMatrix::zeros(p, dims.get(t), dims.get(s))
            })
            .collect();
        Self {
            dims: dims.clone(),
            maps,
        }
    }

    pub fn from_maps(graph: &SimplyLacedGraph, dims: &DimVector, maps: Vec<FpMatrix>) -> Result<Self> {
        if maps.len() != graph.arrow_count() || dims.len() != graph.vertex_count() {
            return Err(Error::Quiver("arrow or vertex count mismatch".into()));
        }
        for (k, m) in maps.iter().enumerate() {
            let (t, s) = graph.arrow(k);
            if m.rows() != dims.get(t) || m.cols() != dims.get(s) {
                return Err(Error::Quiver(format!("map {k} has the wrong shape")));
            }
        }
        Ok(Self {
            dims: dims.clone(),
            maps,
        })
    }

    pub fn dims(&self) -> &DimVector {
        &self.dims
    }
    pub fn maps(&self) -> &[FpMatrix] {
        &self.maps
    }
    pub fn map(&self, k: usize) -> &FpMatrix {
        &self.maps[k]
    }

    /// `Σ_j x_{ij} x_{ji} = 0` at every vertex.
    pub fn satisfies_relation(&self, graph: &SimplyLacedGraph) -> bool {
        let p = self.field_p();
        (0..graph.vertex_count()).all(|i| {
            let d = self.dims.get(i);
            let mut acc = FpMatrix::zeros(p, d, d);
            for (e, &(a, b)) in graph.edges().iter().enumerate() {
                let (out, back) = match () {
                    _ if a == i => (2 * e, 2 * e + 1),
                    _ if b == i => (2 * e + 1, 2 * e),
                    _ => continue,
                };
                acc = acc.add(&self.maps[out].mul(&self.maps[back]));
            }
            acc.is_zero()
        })
    }

    fn field_p(&self) -> u32 {
        self.maps.first().map_or(2, FpMatrix::p)
    }

    /// Ranks of every arrow, of every composable pair `x_a x_b`, then of the
/// joint incoming and outgoing map at each vertex.
    pub fn stable_key(&self, graph: &SimplyLacedGraph) -> Vec<u32> {
        let arrows = graph.arrow_count();
        let mut key: Vec<u32> = self.maps.iter().map(|m| m.rank() as u32).collect();
        for a in 0..arrows {
            for b in 0..arrows {
                if graph.arrow(a).1 == graph.arrow(b).0 {
                    key.push(self.maps[a].mul(&self.maps[b]).rank() as u32);
                }
            }
        }
        // joint maps at each vertex: all arrows in, stacked side by side; all arrows out, stacked
        let p = self.field_p();
        for v in 0..graph.vertex_count() {
            let dv = self.dims.get(v);
            let mut incoming = FpMatrix::zeros(p, 0, dv);
            let mut outgoing = FpMatrix::zeros(p, 0, dv);
            for k in 0..arrows {
                let (t, s) = graph.arrow(k);
                if t == v {
                    incoming = incoming.vstack(&self.maps[k].transpose());
                }
                if s == v {
                    outgoing = outgoing.vstack(&self.maps[k]);
                }
            }
            key.push(incoming.rank() as u32);
            key.push(outgoing.rank() as u32);
        }
        key
    }

    /// `g_i x_{ij} g_j^{-1}` for a tuple of invertible matrices.
    pub fn transformed(&self, graph: &SimplyLacedGraph, g: &[FpMatrix], g_inv: &[FpMatrix]) -> Self {
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let (t, s) = graph.arrow(k);
                g[t].mul(m).mul(&g_inv[s])
            })
            .collect();
        Self {
            dims: self.dims.clone(),
            maps,
        }
    }
}

/// Entry layout of a dimension vector: arrows in order, matrices row-major.
#[derive(Clone, Debug)]
struct Layout {
    shapes: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    entries: usize,
}

impl Layout {
    fn new(graph: &SimplyLacedGraph, dims: &DimVector) -> Self {
        let shapes: Vec<(usize, usize)> = (0..graph.arrow_count())
            .map(|k| {
                let (t, s) = graph.arrow(k);
                (dims.get(t), dims.get(s))
            })
            .collect();
        let mut offsets = Vec::with_capacity(shapes.len() + 1);
        let mut acc = 0;
        for &(r, c) in &shapes {
            offsets.push(acc);
            acc += r * c;
        }
        offsets.push(acc);
        Self {
            shapes,
            offsets,
            entries: acc,
        }
    }

    /// Base-`q` integer with the first entry most significant, so numeric
    /// order is lexicographic order on entry tuples.
    fn encode(&self, rep: &DoubleRep, q: u64) -> u64 {
        rep.maps
            .iter()
            .flat_map(|m| m.entries().iter())
            .fold(0u64, |acc, &e| acc * q + e as u64)
    }

    fn encode_entries(&self, entries: &[u32], q: u64) -> u64 {
        entries.iter().fold(0u64, |acc, &e| acc * q + e as u64)
    }

    fn decode_entries(&self, mut code: u64, q: u64) -> Vec<u32> {
        let mut out = vec![0u32; self.entries];
        for slot in out.iter_mut().rev() {
            *slot = (code % q) as u32;
            code /= q;
        }
        out
    }

    fn decode(&self, code: u64, q: u64, dims: &DimVector) -> DoubleRep {
        let entries = self.decode_entries(code, q);
        let maps = self
            .shapes
            .iter()
            .enumerate()
            .map(|(k, &(r, c))| {
                FpMatrix::from_residues(q as u32, r, c, entries[self.offsets[k]..self.offsets[k + 1]].to_vec())
            })
            .collect();
        DoubleRep {
            dims: dims.clone(),
            maps,
        }
    }
}

/// Order of `GL_d(F_q)`.
pub fn gl_order(d: usize, q: u64) -> u128 {
    let qd = (q as u128).pow(d as u32);
    (0..d).map(|i| qd - (q as u128).pow(i as u32)).product()
}

/// One isomorphism class in a catalog.
#[derive(Clone, Debug)]
pub struct IsoClass {
    pub id: usize,
    pub dims: DimVector,
    pub q: u32,
    pub representative: DoubleRep,
    pub orbit_size: u64,
    pub stable_key: Vec<u32>,
}

/// Every isomorphism class of one dimension vector over one field, with a
/// lookup from encoded representations to class ids.
#[derive(Clone, Debug)]
pub struct ClassCatalog {
    graph: SimplyLacedGraph,
    dims: DimVector,
    field: PrimeField,
    layout: Layout,
    class_of: HashMap<u64, u32>,
    classes: Vec<IsoClass>,
    variety_size: u64,
}

/// Relation points, enumerated as (forward maps) x (linear solution space of
/// the backward maps). Returned sorted.
fn relation_points(graph: &SimplyLacedGraph, dims: &DimVector, layout: &Layout, field: &PrimeField) -> Vec<u64> {
    let p = field.p();
    let q = p as u64;
    let forward: Vec<usize> = (0..graph.arrow_count()).step_by(2).collect();
    let fwd_entries: usize = forward.iter().map(|&k| layout.shapes[k].0 * layout.shapes[k].1).sum();
    // unknowns: backward entries in layout order
    let backward: Vec<usize> = (1..graph.arrow_count()).step_by(2).collect();
    let mut unknown_offset = vec![0usize; graph.arrow_count()];
    let mut unknowns = 0;
    for &k in &backward {
        unknown_offset[k] = unknowns;
        unknowns += layout.shapes[k].0 * layout.shapes[k].1;
    }
    let mut out = Vec::new();
    let total_fwd = q.pow(fwd_entries as u32);
    let mut entries = vec![0u32; layout.entries];
    for fcode in 0..total_fwd {
        // decode forward entries
        let mut c = fcode;
        let mut fwd_vals = vec![0u32; fwd_entries];
        for slot in fwd_vals.iter_mut().rev() {
            *slot = (c % q) as u32;
            c /= q;
        }
        let mut cursor = 0;
        let mut fwd_maps: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for &k in &forward {
            let n = layout.shapes[k].0 * layout.shapes[k].1;
            fwd_maps.insert(k, fwd_vals[cursor..cursor + n].to_vec());
            cursor += n;
        }
        // linear system in the backward entries
        let mut rows: Vec<Vec<u32>> = Vec::new();
        for i in 0..graph.vertex_count() {
            let d = dims.get(i);
            if d == 0 {
                continue;
            }
            for r in 0..d {
                for col in 0..d {
                    let mut eq = vec![0u32; unknowns];
                    for (e, &(a, b)) in graph.edges().iter().enumerate() {
                        if a == i {
                            // x_{ab} (forward, d_a x d_b) times x_{ba} (unknown, d_b x d_a)
                            let f = &fwd_maps[&(2 * e)];
                            let db = dims.get(b);
                            for k in 0..db {
                                let coef = f[r * db + k];
                                let idx = unknown_offset[2 * e + 1] + k * d + col;
                                eq[idx] = field.add(eq[idx], coef);
                            }
                        } else if b == i {
                            // x_{ba} (unknown, d_b x d_a) times x_{ab} (forward, d_a x d_b)
                            let f = &fwd_maps[&(2 * e)];
                            let da = dims.get(a);
                            for k in 0..da {
                                let coef = f[k * d + col];
                                let idx = unknown_offset[2 * e + 1] + r * da + k;
                                eq[idx] = field.add(eq[idx], coef);
                            }
                        }
                    }
                    rows.push(eq);
                }
            }
        }
        let basis = if unknowns == 0 {
            FpMatrix::zeros(p, 0, 0)
        } else if rows.is_empty() {
            FpMatrix::identity(p, unknowns)
        } else {
            FpMatrix::from_row_vecs(p, unknowns, &rows).nullspace()
        };
        let k = basis.rows();
        for scode in 0..q.pow(k as u32) {
            let mut s = scode;
            let mut coeffs = vec![0u32; k];
            for slot in coeffs.iter_mut().rev() {
                *slot = (s % q) as u32;
                s /= q;
            }
            let sol = if unknowns == 0 {
                Vec::new()
            } else {
                crate::ffla::combine(p, &basis, &coeffs)
            };
            for &kf in &forward {
                let (lo, hi) = (layout.offsets[kf], layout.offsets[kf + 1]);
                entries[lo..hi].copy_from_slice(&fwd_maps[&kf]);
            }
            for &kb in &backward {
                let (lo, hi) = (layout.offsets[kb], layout.offsets[kb + 1]);
                let u = unknown_offset[kb];
                entries[lo..hi].copy_from_slice(&sol[u..u + (hi - lo)]);
            }
            out.push(layout.encode_entries(&entries, q));
        }
    }
    out.sort_unstable();
    out
}

/// Generators of `Π GL(V_i)`: a primitive-root scaling of the first basis
/// vector and all elementary transvections, at every vertex.
fn gl_generators(dims: &DimVector, field: &PrimeField) -> Vec<(usize, FpMatrix, FpMatrix)> {
    let p = field.p();
    let mut gens = Vec::new();
    for (v, &d) in dims.0.iter().enumerate() {
        let d = d as usize;
        if d == 0 {
            continue;
        }
        if p > 2 {
            let w = field.primitive_root();
            let mut g = FpMatrix::identity(p, d);
            g.set(0, 0, w);
            let mut gi = FpMatrix::identity(p, d);
            gi.set(0, 0, field.inv(w));
            gens.push((v, g, gi));
        }
        for a in 0..d {
            for b in 0..d {
                if a == b {
                    continue;
                }
                let mut g = FpMatrix::identity(p, d);
                g.set(a, b, 1);
                let mut gi = FpMatrix::identity(p, d);
                gi.set(a, b, p - 1);
                gens.push((v, g, gi));
            }
        }
    }
    gens
}

impl ClassCatalog {
    pub fn build(graph: &SimplyLacedGraph, dims: &DimVector, field: &PrimeField, caps: &EnumerationCaps) -> Result<Self> {
        if dims.len() != graph.vertex_count() {
            return Err(Error::Quiver("dimension vector length differs from vertex count".into()));
        }
        let q = field.p() as u64;
        let layout = Layout::new(graph, dims);
        let size = (q as f64).powi(layout.entries as i32);
        if size > caps.variety as f64 {
            return Err(Error::Budget(format!(
                "dimension vector {dims} over F_{q} spans {q}^{} matrix tuples, above the cap {}",
                layout.entries, caps.variety
            )));
        }
        let points = relation_points(graph, dims, &layout, field);
        let gens = gl_generators(dims, field);
        let mut class_of: HashMap<u64, u32> = HashMap::with_capacity(points.len());
        let mut classes = Vec::new();
        for &start in &points {
            if class_of.contains_key(&start) {
                continue;
            }
            let id = classes.len() as u32;
            class_of.insert(start, id);
            let mut queue = VecDeque::from([start]);
            let mut orbit = 1u64;
            while let Some(code) = queue.pop_front() {
                let rep = layout.decode(code, q, dims);
                for (v, g, gi) in &gens {
                    let maps = rep
                        .maps
                        .iter()
                        .enumerate()
                        .map(|(k, m)| {
                            let (t, s) = graph.arrow(k);
                            let mut out = m.clone();
                            if t == *v {
                                out = g.mul(&out);
                            }
                            if s == *v {
                                out = out.mul(gi);
                            }
                            out
                        })
                        .collect();
                    let next = layout.encode(
                        &DoubleRep {
                            dims: dims.clone(),
                            maps,
                        },
                        q,
                    );
                    if let std::collections::hash_map::Entry::Vacant(slot) = class_of.entry(next) {
                        slot.insert(id);
                        orbit += 1;
                        queue.push_back(next);
                    }
                }
            }
            let representative = layout.decode(start, q, dims);
            classes.push(IsoClass {
                id: id as usize,
                dims: dims.clone(),
                q: field.p(),
                stable_key: representative.stable_key(graph),
                representative,
                orbit_size: orbit,
            });
        }
        Ok(Self {
            graph: graph.clone(),
            dims: dims.clone(),
            field: field.clone(),
            layout,
            class_of,
            classes,
            variety_size: points.len() as u64,
        })
    }

    pub fn graph(&self) -> &SimplyLacedGraph {
        &self.graph
    }
    pub fn dims(&self) -> &DimVector {
        &self.dims
    }
    pub fn field(&self) -> &PrimeField {
        &self.field
    }
    pub fn classes(&self) -> &[IsoClass] {
        &self.classes
    }
    /// Number of relation-satisfying tuples.
    pub fn variety_size(&self) -> u64 {
        self.variety_size
    }

    /// Class id of an arbitrary relation-satisfying representation.
    pub fn classify(&self, rep: &DoubleRep) -> Option<usize> {
        let code = self.layout.encode(rep, self.field.p() as u64);
        self.class_of.get(&code).map(|&c| c as usize)
    }

    /// Order of the base-change group `Π GL(V_i)`.
    pub fn group_order(&self) -> u128 {
        self.dims.0.iter().map(|&d| gl_order(d as usize, self.field.p() as u64)).product()
    }
}

/// Catalogs of one graph over one field, built on demand.
#[derive(Debug)]
pub struct CatalogCache {
    graph: SimplyLacedGraph,
    field: PrimeField,
    caps: EnumerationCaps,
    catalogs: BTreeMap<DimVector, ClassCatalog>,
}

impl CatalogCache {
    pub fn new(graph: &SimplyLacedGraph, field: &PrimeField, caps: EnumerationCaps) -> Self {
        Self {
            graph: graph.clone(),
            field: field.clone(),
            caps,
            catalogs: BTreeMap::new(),
        }
    }

    pub fn graph(&self) -> &SimplyLacedGraph {
        &self.graph
    }
    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn catalog(&mut self, dims: &DimVector) -> Result<&ClassCatalog> {
        if !self.catalogs.contains_key(dims) {
            let c = ClassCatalog::build(&self.graph, dims, &self.field, &self.caps)?;
            self.catalogs.insert(dims.clone(), c);
        }
        Ok(&self.catalogs[dims])
    }
}

pub fn enumerate_iso_classes(graph: &SimplyLacedGraph, dims: &DimVector, field: &PrimeField, caps: &EnumerationCaps) -> Result<Vec<IsoClass>> {
    Ok(ClassCatalog::build(graph, dims, field, caps)?.classes)
}

fn all_invertible(d: usize, field: &PrimeField) -> Vec<FpMatrix> {
    let p = field.p();
    let n = d * d;
    let total = (p as u64).pow(n as u32);
    (0..total)
        .filter_map(|mut code| {
            let mut data = vec![0u32; n];
            for slot in data.iter_mut().rev() {
                *slot = (code % p as u64) as u32;
                code /= p as u64;
            }
            let m = FpMatrix::from_residues(p, d, d, data);
            (m.det() != 0).then_some(m)
        })
        .collect()
}

fn inverse(m: &FpMatrix) -> FpMatrix {
    let n = m.rows();
    let p = m.p();
    let aug = FpMatrix::from_fn(p, n, 2 * n, |r, c| {
        if c < n {
            m.get(r, c) as i64
        } else {
            i64::from(c - n == r)
        }
    });
    let red = aug.rref().matrix;
    FpMatrix::from_fn(p, n, n, |r, c| red.get(r, n + c) as i64)
}

/// Brute-force isomorphism test. Returns a base change `g` with
/// `g_i a_{ij} g_j^{-1} = b_{ij}` when one exists.
pub fn are_isomorphic(graph: &SimplyLacedGraph, a: &DoubleRep, b: &DoubleRep, field: &PrimeField, caps: &EnumerationCaps) -> Result<Option<Vec<FpMatrix>>> {
    if a.dims != b.dims {
        return Err(Error::Quiver("dimension vectors differ".into()));
    }
    if a.stable_key(graph) != b.stable_key(graph) {
        return Ok(None);
    }
    let q = field.p() as u64;
    let order: u128 = a.dims.0.iter().map(|&d| gl_order(d as usize, q)).product();
    if order > caps.group as u128 {
        return Err(Error::Budget(format!(
            "base-change group of order {order} exceeds the cap {}",
            caps.group
        )));
    }
    let choices: Vec<Vec<FpMatrix>> = a.dims.0.iter().map(|&d| all_invertible(d as usize, field)).collect();
    let inverses: Vec<Vec<FpMatrix>> = choices.iter().map(|cs| cs.iter().map(inverse).collect()).collect();
    let n = choices.len();
    let mut idx = vec![0usize; n];
    loop {
        let g: Vec<FpMatrix> = (0..n).map(|v| choices[v][idx[v]].clone()).collect();
        let gi: Vec<FpMatrix> = (0..n).map(|v| inverses[v][idx[v]].clone()).collect();
        if a.transformed(graph, &g, &gi) == *b {
            return Ok(Some(g));
        }
        let mut v = 0;
        loop {
            if v == n {
                return Ok(None);
            }
            idx[v] += 1;
            if idx[v] < choices[v].len() {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
    }
}

/// Restrict a representation to a stable tuple of subspaces and pass to the
/// quotient, both in the RREF-adapted bases.
pub fn sub_and_quotient(graph: &SimplyLacedGraph, rep: &DoubleRep, subspaces: &[Subspace]) -> Option<(DoubleRep, DoubleRep)> {
    let p = rep.field_p();
    let n = graph.vertex_count();
    let sub_dims = DimVector(subspaces.iter().map(|s| s.dim() as u32).collect());
    let quo_dims = DimVector((0..n).map(|v| (rep.dims.get(v) - subspaces[v].dim()) as u32).collect());
    let mut sub_maps = Vec::with_capacity(graph.arrow_count());
    let mut quo_maps = Vec::with_capacity(graph.arrow_count());
    for k in 0..graph.arrow_count() {
        let (t, s) = graph.arrow(k);
        let m = rep.map(k);
        let (wt, ws) = (&subspaces[t], &subspaces[s]);
        let mut sub = FpMatrix::zeros(p, wt.dim(), ws.dim());
        for j in 0..ws.dim() {
            let image = m.apply(ws.basis().row(j));
            let coords = wt.coordinates(&image)?;
            for (i, c) in coords.into_iter().enumerate() {
                sub.set(i, j, c);
            }
        }
        let (ft, fs) = (wt.free_columns(), ws.free_columns());
        let mut quo = FpMatrix::zeros(p, ft.len(), fs.len());
        for (j, &c) in fs.iter().enumerate() {
            let column: Vec<u32> = (0..m.rows()).map(|r| m.get(r, c)).collect();
            let red = wt.reduce(&column);
            for (i, &f) in ft.iter().enumerate() {
                quo.set(i, j, red[f]);
            }
        }
        sub_maps.push(sub);
        quo_maps.push(quo);
    }
    Some((
        DoubleRep {
            dims: sub_dims,
            maps: sub_maps,
        },
        DoubleRep {
            dims: quo_dims,
            maps: quo_maps,
        },
    ))
}

/// For every `G`-stable subspace tuple of `c` with dimension `sub_dims`,
/// the classes `(sub, quotient)`; returns counts per pair of class ids.
pub fn subobject_profile(cache: &mut CatalogCache, c: &DoubleRep, sub_dims: &DimVector) -> Result<BTreeMap<(usize, usize), u64>> {
    let graph = cache.graph().clone();
    let field = cache.field().clone();
    let quo_dims = c
        .dims()
        .checked_sub(sub_dims)
        .ok_or_else(|| Error::Quiver(format!("{sub_dims} does not fit inside {}", c.dims())))?;
    cache.catalog(sub_dims)?;
    cache.catalog(&quo_dims)?;
    let n = graph.vertex_count();
    let per_vertex: Vec<Vec<Subspace>> = (0..n)
        .map(|v| {
            Ok(enumerate_subspaces(c.dims().get(v), sub_dims.get(v), &field)?
                .map(|b| Subspace::span(&b))
                .collect())
        })
        .collect::<Result<_>>()?;
    let sub_cat = &cache.catalogs[sub_dims];
    let quo_cat = &cache.catalogs[&quo_dims];
    let mut counts = BTreeMap::new();
    let mut idx = vec![0usize; n];
    if per_vertex.iter().any(Vec::is_empty) {
        return Ok(counts);
    }
    loop {
        let tuple: Vec<Subspace> = (0..n).map(|v| per_vertex[v][idx[v]].clone()).collect();
        if let Some((sub, quo)) = sub_and_quotient(&graph, c, &tuple) {
            let a = sub_cat
                .classify(&sub)
                .ok_or_else(|| Error::Quiver("subrepresentation missing from its catalog".into()))?;
            let b = quo_cat
                .classify(&quo)
                .ok_or_else(|| Error::Quiver("quotient missing from its catalog".into()))?;
            *counts.entry((a, b)).or_insert(0) += 1;
        }
        let mut v = 0;
        loop {
            if v == n {
                return Ok(counts);
            }
            idx[v] += 1;
            if idx[v] < per_vertex[v].len() {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
    }
}

/// `#{A′ ⊆ C : A′ ≅ A, C/A′ ≅ B}` over `F_q`.
pub fn hall_count(cache: &mut CatalogCache, a: &IsoClass, b: &IsoClass, c: &IsoClass) -> Result<u64> {
    if a.dims.add(&b.dims) != c.dims {
        return Err(Error::Quiver(format!(
            "dimension mismatch: {} + {} != {}",
            a.dims, b.dims, c.dims
        )));
    }
    let profile = subobject_profile(cache, &c.representative, &a.dims)?;
    Ok(profile.get(&(a.id, b.id)).copied().unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffla::gaussian_binomial;

    fn edge() -> SimplyLacedGraph {
        SimplyLacedGraph::path(2)
    }

    fn field(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn graph_validation() {
        assert!(SimplyLacedGraph::new(2, &[(0, 0)]).is_err());
        assert!(SimplyLacedGraph::new(2, &[(0, 1), (1, 0)]).is_err());
        assert!(SimplyLacedGraph::affine(AffineType::A(1)).is_err());
        assert_eq!(SimplyLacedGraph::affine(AffineType::A(2)).unwrap().edges().len(), 3);
    }

    #[test]
    fn edge_graph_one_one_has_three_classes() {
        for p in [2, 3, 5] {
            let classes = enumerate_iso_classes(&edge(), &DimVector(vec![1, 1]), &field(p), &EnumerationCaps::default()).unwrap();
            assert_eq!(classes.len(), 3, "q = {p}");
            let total: u64 = classes.iter().map(|c| c.orbit_size).sum();
            // xy = yx = 0 with scalars: x = 0 or y = 0
            assert_eq!(total, 2 * p as u64 - 1);
        }
    }

    #[test]
    fn edge_graph_two_one_has_three_classes() {
        let classes = enumerate_iso_classes(&edge(), &DimVector(vec![2, 1]), &field(3), &EnumerationCaps::default()).unwrap();
        assert_eq!(classes.len(), 3);
    }

    #[test]
    fn unit_vector_has_one_class() {
        let g = SimplyLacedGraph::path(3);
        let classes = enumerate_iso_classes(&g, &DimVector::unit(3, 1), &field(5), &EnumerationCaps::default()).unwrap();
        assert_eq!(classes.len(), 1);
        assert!(classes[0].representative.maps().iter().all(FpMatrix::is_zero));
    }

    #[test]
    fn isomorphism_witnesses() {
        let g = edge();
        let k = field(5);
        let caps = EnumerationCaps::default();
        let d = DimVector(vec![1, 1]);
        let rep = |x: i64, y: i64| {
            DoubleRep::from_maps(&g, &d, vec![FpMatrix::from_rows(5, &[vec![x]]), FpMatrix::from_rows(5, &[vec![y]])]).unwrap()
        };
        let a = rep(2, 0);
        let w = are_isomorphic(&g, &a, &a, &k, &caps).unwrap().unwrap();
        assert_eq!(a.transformed(&g, &w, &w.iter().map(inverse).collect::<Vec<_>>()), a);
        assert!(are_isomorphic(&g, &rep(1, 0), &rep(0, 1), &k, &caps).unwrap().is_none());
        assert!(are_isomorphic(&g, &rep(1, 0), &rep(3, 0), &k, &caps).unwrap().is_some());
    }

    #[test]
    fn hall_counts_on_the_edge() {
        let g = edge();
        for p in [2, 3, 5] {
            let k = field(p);
            let mut cache = CatalogCache::new(&g, &k, EnumerationCaps::default());
            let s0 = cache.catalog(&DimVector::unit(2, 0)).unwrap().classes()[0].clone();
            let s1 = cache.catalog(&DimVector::unit(2, 1)).unwrap().classes()[0].clone();
            let two = cache.catalog(&DimVector(vec![2, 0])).unwrap().classes()[0].clone();
            assert_eq!(hall_count(&mut cache, &s0, &s0, &two).unwrap(), p as u64 + 1);
            let mixed = cache.catalog(&DimVector(vec![1, 1])).unwrap().classes().to_vec();
            let semisimple = mixed.iter().find(|c| c.stable_key.iter().all(|&r| r == 0)).unwrap();
            assert_eq!(hall_count(&mut cache, &s0, &s1, semisimple).unwrap(), 1);
            // x = x_{01}: V_1 -> V_0 nonzero
            let x_rank_one = mixed.iter().find(|c| c.stable_key[0] == 1).unwrap();
            assert_eq!(hall_count(&mut cache, &s1, &s0, x_rank_one).unwrap(), 0);
            assert_eq!(hall_count(&mut cache, &s0, &s1, x_rank_one).unwrap(), 1);
        }
    }

    #[test]
    fn single_vertex_counts_are_gaussian_binomials() {
        let g = SimplyLacedGraph::path(1);
        let k = field(3);
        let mut cache = CatalogCache::new(&g, &k, EnumerationCaps::default());
        let c = cache.catalog(&DimVector(vec![3])).unwrap().classes()[0].clone();
        let a = cache.catalog(&DimVector(vec![1])).unwrap().classes()[0].clone();
        let b = cache.catalog(&DimVector(vec![2])).unwrap().classes()[0].clone();
        assert_eq!(hall_count(&mut cache, &a, &b, &c).unwrap() as u128, gaussian_binomial(3, 1, 3));
    }
}
