//! Irreducible characters mod `p` by Burnside-Dixon eigenspace splitting,
//! tensor multiplicities against the defining representation, and the McKay
//! graph with its affine and finite Cartan matrices.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::binpoly::{ConjugacyClasses, FiniteMatrixGroup, GroupSpec};
use crate::error::{Error, Result};
use crate::ffla::{integer_det, rational_rank, FpMatrix, PrimeField, Subspace};

/// Retry budget for finding a separating random combination of class matrices.
const SPLIT_RETRIES: usize = 200;

#[derive(Clone, Debug)]
pub struct CharacterTable {
    field: PrimeField,
    classes: ConjugacyClasses,
    group_order: usize,
    seed: u64,
    degrees: Vec<u32>,
    /// `values[chi][class]`, residues mod p.
    values: Vec<Vec<u32>>,
    trivial: usize,
    defining: Option<usize>,
    /// Trace of the defining 2-dimensional representation on each class.
    tau: Vec<u32>,
}

impl CharacterTable {
    pub fn field(&self) -> &PrimeField {
        &self.field
    }
    pub fn classes(&self) -> &ConjugacyClasses {
        &self.classes
    }
    pub fn group_order(&self) -> usize {
        self.group_order
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn len(&self) -> usize {
        self.degrees.len()
    }
    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }
    pub fn degree(&self, chi: usize) -> u32 {
        self.degrees[chi]
    }
    pub fn values(&self) -> &[Vec<u32>] {
        &self.values
    }
    pub fn value(&self, chi: usize, class: usize) -> u32 {
        self.values[chi][class]
    }
    pub fn trivial(&self) -> usize {
        self.trivial
    }
    /// Index of the defining character when it is irreducible (D and E types).
    pub fn defining(&self) -> Option<usize> {
        self.defining
    }
    pub fn tau(&self) -> &[u32] {
        &self.tau
    }

    pub fn sorted_degrees(&self) -> Vec<u32> {
        let mut d = self.degrees.clone();
        d.sort_unstable();
        d
    }

    /// `<f, chi>` for a class function `f` given by its values on classes,
    /// as a residue mod p.
    pub fn inner_product(&self, f: &[u32], chi: usize) -> u32 {
        let k = &self.field;
        let mut acc = 0;
        for c in 0..self.classes.count() {
            let term = k.mul(
                k.from_u64(self.classes.size(c) as u64),
                k.mul(f[c], self.values[chi][self.classes.inverse_class(c)]),
            );
            acc = k.add(acc, term);
        }
        k.div(acc, k.from_u64(self.group_order as u64))
    }

    /// Multiplicity vector of a class function, each entry lifted to `[0, p)`.
    pub fn decompose(&self, f: &[u32]) -> Vec<u32> {
        (0..self.len()).map(|chi| self.inner_product(f, chi)).collect()
    }

    /// The table with characters reordered so that new index `i` is old
    /// index `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len());
        let pos = |old: usize| perm.iter().position(|&x| x == old).unwrap();
        Self {
            degrees: perm.iter().map(|&o| self.degrees[o]).collect(),
            values: perm.iter().map(|&o| self.values[o].clone()).collect(),
            trivial: pos(self.trivial),
            defining: self.defining.map(pos),
            ..self.clone()
        }
    }

    /// Row orthogonality mod p.
    pub fn check_row_orthogonality(&self) -> bool {
        let k = &self.field;
        let g = k.from_u64(self.group_order as u64);
        (0..self.len()).all(|a| {
            (0..self.len()).all(|b| {
                let ip = self.inner_product(&self.values[a], b);
                ip == if a == b { 1 } else { 0 } || (a == b && g == 0)
            })
        })
    }

    /// Column orthogonality mod p:
    /// `Σ_χ χ(g_j) χ(g_k^{-1}) = δ_{jk} |G| / |C_j|`.
    pub fn check_column_orthogonality(&self) -> bool {
        let k = &self.field;
        let r = self.classes.count();
        (0..r).all(|j| {
            (0..r).all(|c| {
                let inv = self.classes.inverse_class(c);
                let s = (0..self.len()).fold(0, |acc, chi| {
                    k.add(acc, k.mul(self.values[chi][j], self.values[chi][inv]))
                });
                let expect = if j == c {
                    k.from_u64((self.group_order / self.classes.size(j)) as u64)
                } else {
                    0
                };
                s == expect
            })
        })
    }
}

/// Class multiplication coefficients `a[i][j][k] = #{(x, y) in C_i x C_j : xy = g_k}`.
pub fn class_structure_constants(g: &FiniteMatrixGroup, classes: &ConjugacyClasses) -> Vec<Vec<Vec<u64>>> {
    let r = classes.count();
    let mut a = vec![vec![vec![0u64; r]; r]; r];
    for k in 0..r {
        let gk = classes.representative(k);
        for x in 0..g.order() {
            let y = g.mul(g.inverse(x), gk);
            a[classes.class_of(x)][classes.class_of(y)][k] += 1;
        }
    }
    a
}

fn eigen_split(
    space: &Subspace,
    m: &FpMatrix,
    field: &PrimeField,
) -> Result<Option<Vec<Subspace>>> {
    let k = space.dim();
    let restricted = space.restricted_matrix(m);
    let p = field.p();
    let mut parts = Vec::new();
    let mut total = 0;
    for lambda in 0..p {
        let shifted = restricted.sub(&FpMatrix::identity(p, k).scale(lambda));
        let ns = shifted.nullspace();
        if ns.rows() == 0 {
            continue;
        }
        total += ns.rows();
        let vecs: Vec<Vec<u32>> = (0..ns.rows())
            .map(|r| crate::ffla::combine(p, space.basis(), ns.row(r)))
            .collect();
        parts.push(Subspace::span_vecs(p, space.ambient_dim(), &vecs));
    }
    if total != k {
        return Err(Error::CharacterTable(format!(
            "class algebra not split over F_{p}: eigenspaces cover {total} of {k} dimensions"
        )));
    }
    Ok((parts.len() > 1).then_some(parts))
}

/// Burnside-Dixon: split the common eigenspaces of the class matrices over
/// `F_p` using seeded random combinations, then recover degrees and values.
pub fn character_table(g: &FiniteMatrixGroup, classes: &ConjugacyClasses, seed: u64) -> Result<CharacterTable> {
    let field = g.field().clone();
    let p = field.p();
    let r = classes.count();
    let n = g.order();
    if (n as u32).is_multiple_of(p) || !(p - 1).is_multiple_of(g.spec().exponent()) {
        return Err(Error::CharacterTable(format!(
            "modulus {p} unsuitable for group of order {n}"
        )));
    }
    let a = class_structure_constants(g, classes);
    let class_mats: Vec<FpMatrix> = (0..r)
        .map(|i| FpMatrix::from_fn(p, r, r, |j, k| a[i][j][k] as i64))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pending = vec![Subspace::full(p, r)];
    let mut lines = Vec::new();
    while let Some(space) = pending.pop() {
        if space.dim() == 1 {
            lines.push(space);
            continue;
        }
        let mut split = None;
        for _ in 0..SPLIT_RETRIES {
            let mut comb = FpMatrix::zeros(p, r, r);
            for m in &class_mats {
                comb = comb.add(&m.scale(rng.gen_range(0..p)));
            }
            if let Some(parts) = eigen_split(&space, &comb, &field)? {
                split = Some(parts);
                break;
            }
        }
        let parts = split.ok_or_else(|| {
            Error::CharacterTable(format!(
                "eigenspace of dimension {} did not split within {SPLIT_RETRIES} attempts",
                space.dim()
            ))
        })?;
        // keep discovery order stable: process the first part next
        pending.extend(parts.into_iter().rev());
    }

    let order_res = field.from_u64(n as u64);
    let max_degree = (n as f64).sqrt().floor() as u32;
    let mut degrees = Vec::with_capacity(r);
    let mut values = Vec::with_capacity(r);
    for line in &lines {
        let v = line.basis().row(0);
        if v[0] == 0 {
            return Err(Error::CharacterTable("eigenvector vanishes at identity".into()));
        }
        let scale = field.inv(v[0]);
        let omega: Vec<u32> = v.iter().map(|&x| field.mul(x, scale)).collect();
        let mut s = 0;
        for j in 0..r {
            let term = field.div(
                field.mul(omega[j], omega[classes.inverse_class(j)]),
                field.from_u64(classes.size(j) as u64),
            );
            s = field.add(s, term);
        }
        if s == 0 {
            return Err(Error::CharacterTable("degenerate central character".into()));
        }
        let d_sq = field.div(order_res, s);
        let lifts: Vec<u32> = (1..=max_degree)
            .filter(|&d| field.from_u64((d * d) as u64) == d_sq)
            .collect();
        let [d] = lifts[..] else {
            return Err(Error::CharacterTable(format!(
                "degree lift ambiguous or missing (candidates {lifts:?})"
            )));
        };
        let chi: Vec<u32> = (0..r)
            .map(|j| {
                field.div(
                    field.mul(field.from_u64(d as u64), omega[j]),
                    field.from_u64(classes.size(j) as u64),
                )
            })
            .collect();
        degrees.push(d);
        values.push(chi);
    }

    // trivial first, then by degree; ties keep discovery order
    let mut order: Vec<usize> = (0..r).collect();
    let is_trivial = |c: usize| values[c].iter().all(|&x| x == 1);
    order.sort_by_key(|&c| (!is_trivial(c), degrees[c]));
    let degrees: Vec<u32> = order.iter().map(|&c| degrees[c]).collect();
    let values: Vec<Vec<u32>> = order.iter().map(|&c| values[c].clone()).collect();
    if !values[0].iter().all(|&x| x == 1) {
        return Err(Error::CharacterTable("trivial character not found".into()));
    }

    let tau: Vec<u32> = (0..r)
        .map(|c| g.element(classes.representative(c)).trace(&field))
        .collect();
    let defining = values.iter().position(|row| *row == tau);

    let table = CharacterTable {
        field,
        classes: classes.clone(),
        group_order: n,
        seed,
        degrees,
        values,
        trivial: 0,
        defining,
        tau,
    };
    let sum_sq: u64 = table.degrees.iter().map(|&d| (d * d) as u64).sum();
    if sum_sq != n as u64 {
        return Err(Error::CharacterTable(format!(
            "sum of squared degrees is {sum_sq}, expected {n}"
        )));
    }
    if !table.check_row_orthogonality() || !table.check_column_orthogonality() {
        return Err(Error::CharacterTable("orthogonality relations fail".into()));
    }
    Ok(table)
}

/// `m[π][ρ]` = multiplicity of `π` in `ρ ⊗ τ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TensorMultiplicities(pub Vec<Vec<u32>>);

impl TensorMultiplicities {
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn get(&self, a: usize, b: usize) -> u32 {
        self.0[a][b]
    }
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self(
            perm.iter()
                .map(|&a| perm.iter().map(|&b| self.0[a][b]).collect())
                .collect(),
        )
    }
}

pub fn tensor_multiplicities(t: &CharacterTable) -> Result<TensorMultiplicities> {
    let k = t.field();
    let n = t.len();
    let mut m = vec![vec![0u32; n]; n];
    for (pi, row) in m.iter_mut().enumerate() {
        for (rho, slot) in row.iter_mut().enumerate() {
            let product: Vec<u32> = (0..t.classes().count())
                .map(|c| k.mul(t.value(rho, c), t.tau()[c]))
                .collect();
            let v = t.inner_product(&product, pi);
            if v > 2 {
                return Err(Error::McKay(format!(
                    "multiplicity m[{pi}][{rho}] lifts to {v}, outside {{0,1,2}}"
                )));
            }
            *slot = v;
        }
    }
    Ok(TensorMultiplicities(m))
}

/// Lexicographically least relabeling of the McKay graph among orderings
/// that put the trivial character first and sort the rest by degree.
/// Returns `perm` with new index `i` = old index `perm[i]`.
pub fn canonical_relabeling(m: &TensorMultiplicities, degrees: &[u32], trivial: usize) -> Vec<usize> {
    let n = m.len();
    let mut slots: Vec<usize> = (0..n).filter(|&v| v != trivial).collect();
    slots.sort_by_key(|&v| degrees[v]);
    let slot_degrees: Vec<u32> = std::iter::once(degrees[trivial])
        .chain(slots.iter().map(|&v| degrees[v]))
        .collect();

    struct Search<'a> {
        m: &'a TensorMultiplicities,
        degrees: &'a [u32],
        slot_degrees: Vec<u32>,
        best: Option<(Vec<u32>, Vec<usize>)>,
    }
    impl Search<'_> {
        fn go(&mut self, perm: &mut Vec<usize>, used: &mut Vec<bool>, seq: &mut Vec<u32>) {
            let k = perm.len();
            if let Some((best_seq, _)) = &self.best {
                if seq.as_slice() > &best_seq[..seq.len()] {
                    return;
                }
            }
            if k == self.m.len() {
                let better = match &self.best {
                    None => true,
                    Some((b, _)) => seq.as_slice() < b.as_slice(),
                };
                if better {
                    self.best = Some((seq.clone(), perm.clone()));
                }
                return;
            }
            for v in 0..self.m.len() {
                if used[v] || self.degrees[v] != self.slot_degrees[k] {
                    continue;
                }
                let before = seq.len();
                seq.extend(perm.iter().map(|&u| self.m.get(v, u)));
                perm.push(v);
                used[v] = true;
                self.go(perm, used, seq);
                used[v] = false;
                perm.pop();
                seq.truncate(before);
            }
        }
    }
    let mut search = Search {
        m,
        degrees,
        slot_degrees,
        best: None,
    };
    let mut used = vec![false; n];
    used[trivial] = true;
    let mut perm = vec![trivial];
    let mut seq = Vec::new();
    search.go(&mut perm, &mut used, &mut seq);
    search.best.expect("some labeling exists").1
}

/// Relabel a table into canonical McKay order and return it with its
/// multiplicity matrix. Labels then agree across different moduli.
pub fn canonicalize(t: &CharacterTable) -> Result<(CharacterTable, TensorMultiplicities)> {
    let m = tensor_multiplicities(t)?;
    let perm = canonical_relabeling(&m, t.degrees(), t.trivial());
    Ok((t.permuted(&perm), m.permuted(&perm)))
}

/// Affine Dynkin types realized by McKay graphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AffineType {
    A(usize),
    D(usize),
    E6,
    E7,
    E8,
}

impl AffineType {
    pub fn of_group(spec: &GroupSpec) -> Self {
        match *spec {
            GroupSpec::Cyclic(n) => Self::A(n as usize - 1),
            GroupSpec::BinaryDihedral(n) => Self::D(n as usize + 2),
            GroupSpec::BinaryTetrahedral => Self::E6,
            GroupSpec::BinaryOctahedral => Self::E7,
            GroupSpec::BinaryIcosahedral => Self::E8,
        }
    }

    pub fn vertex_count(&self) -> usize {
        match *self {
            Self::A(l) | Self::D(l) => l + 1,
            Self::E6 => 7,
            Self::E7 => 8,
            Self::E8 => 9,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::A(l) => format!("affine A{l}"),
            Self::D(l) => format!("affine D{l}"),
            Self::E6 => "affine E6".into(),
            Self::E7 => "affine E7".into(),
            Self::E8 => "affine E8".into(),
        }
    }

    /// Adjacency matrix (edge multiplicities) of the diagram.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let n = self.vertex_count();
        let mut adj = vec![vec![0u32; n]; n];
        let mut edge = |a: usize, b: usize| {
            adj[a][b] += 1;
            adj[b][a] += 1;
        };
        match *self {
            Self::A(1) => {}
            Self::A(_) => {
                for v in 0..n {
                    edge(v, (v + 1) % n);
                }
            }
            Self::D(l) => {
                // path 0..=l-2 of centers, leaves attached at both ends
                let centers = l - 3;
                for v in 0..centers.saturating_sub(1) {
                    edge(v, v + 1);
                }
                let last = centers - 1;
                edge(0, centers);
                edge(0, centers + 1);
                edge(last, centers + 2);
                edge(last, centers + 3);
            }
            Self::E6 | Self::E7 | Self::E8 => {
                let arms: &[usize] = match self {
                    Self::E6 => &[2, 2, 2],
                    Self::E7 => &[3, 3, 1],
                    _ => &[5, 2, 1],
                };
                let mut next = 1;
                for &len in arms {
                    let mut prev = 0;
                    for _ in 0..len {
                        edge(prev, next);
                        prev = next;
                        next += 1;
                    }
                }
            }
        }
        if let Self::A(1) = self {
            adj[0][1] = 2;
            adj[1][0] = 2;
        }
        adj
    }
}

/// Search for a vertex bijection `f` with `a[i][j] == b[f(i)][f(j)]`.
pub fn find_isomorphism(a: &[Vec<u32>], b: &[Vec<u32>]) -> Option<Vec<usize>> {
    let n = a.len();
    if b.len() != n {
        return None;
    }
    let deg = |m: &[Vec<u32>], v: usize| m[v].iter().sum::<u32>();
    let mut da: Vec<u32> = (0..n).map(|v| deg(a, v)).collect();
    let mut db: Vec<u32> = (0..n).map(|v| deg(b, v)).collect();
    let (sa, sb) = (da.clone(), db.clone());
    da.sort_unstable();
    db.sort_unstable();
    if da != db {
        return None;
    }
    fn extend(a: &[Vec<u32>], b: &[Vec<u32>], sa: &[u32], sb: &[u32], map: &mut Vec<usize>, used: &mut [bool]) -> bool {
        let i = map.len();
        if i == a.len() {
            return true;
        }
        for t in 0..b.len() {
            if used[t] || sa[i] != sb[t] || a[i][i] != b[t][t] {
                continue;
            }
            if (0..i).any(|j| a[i][j] != b[t][map[j]]) {
                continue;
            }
            map.push(t);
            used[t] = true;
            if extend(a, b, sa, sb, map, used) {
                return true;
            }
            used[t] = false;
            map.pop();
        }
        false
    }
    let mut map = Vec::with_capacity(n);
    let mut used = vec![false; n];
    extend(a, b, &sa, &sb, &mut map, &mut used).then_some(map)
}

/// Shape of a connected simply-laced tree or cycle read off its degree
/// sequence and arm lengths.
pub fn classify_shape(adj: &[Vec<u32>]) -> Option<AffineType> {
    let n = adj.len();
    if n == 2 && adj[0][1] == 2 {
        return Some(AffineType::A(1));
    }
    if adj.iter().flatten().any(|&x| x > 1) {
        return None;
    }
    let deg: Vec<usize> = (0..n).map(|v| adj[v].iter().sum::<u32>() as usize).collect();
    let edges: usize = deg.iter().sum::<usize>() / 2;
    if deg.iter().all(|&d| d == 2) && edges == n {
        return Some(AffineType::A(n - 1));
    }
    if edges + 1 != n {
        return None;
    }
    let branch: Vec<usize> = (0..n).filter(|&v| deg[v] >= 3).collect();
    match branch.as_slice() {
        [c] if deg[*c] == 4 && n == 5 => Some(AffineType::D(4)),
        [c] if deg[*c] == 3 => {
            let mut arms: Vec<usize> = (0..n)
                .filter(|&v| adj[*c][v] > 0)
                .map(|start| {
                    let (mut prev, mut cur, mut len) = (*c, start, 1);
                    while deg[cur] == 2 {
                        let nxt = (0..n).find(|&w| adj[cur][w] > 0 && w != prev).unwrap();
                        prev = cur;
                        cur = nxt;
                        len += 1;
                    }
                    len
                })
                .collect();
            arms.sort_unstable();
            match arms.as_slice() {
                [2, 2, 2] => Some(AffineType::E6),
                [1, 3, 3] => Some(AffineType::E7),
                [1, 2, 5] => Some(AffineType::E8),
                _ => None,
            }
        }
        [a, b] if deg[*a] == 3 && deg[*b] == 3 => {
            let leaves = deg.iter().filter(|&&d| d == 1).count();
            (leaves == 4).then_some(AffineType::D(n - 1))
        }
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct McKayGraphData {
    pub vertex_count: usize,
    pub trivial: usize,
    pub dims: Vec<u32>,
    /// Edges `(i, j, multiplicity)` with `i < j`.
    pub edges: Vec<(usize, usize, u32)>,
    pub affine_cartan: Vec<Vec<i64>>,
    /// Vertices kept in the finite Cartan matrix (trivial removed), in order.
    pub finite_vertices: Vec<usize>,
    pub finite_cartan: Vec<Vec<i64>>,
    pub leading_minors: Vec<String>,
    pub affine_det: String,
    pub kernel_dim: usize,
    pub shape: AffineType,
    /// Image of each vertex in the reference diagram of `shape`.
    pub isomorphism: Vec<usize>,
}

impl McKayGraphData {
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let n = self.vertex_count;
        let mut adj = vec![vec![0u32; n]; n];
        for &(a, b, w) in &self.edges {
            adj[a][b] = w;
            adj[b][a] = w;
        }
        adj
    }
}

/// Build the McKay graph and certify every structural invariant, including
/// isomorphism with the affine diagram expected for `spec`.
pub fn mckay_graph(spec: &GroupSpec, m: &TensorMultiplicities, t: &CharacterTable) -> Result<McKayGraphData> {
    let n = m.len();
    let fail = |msg: String| Err(Error::McKay(msg));
    for a in 0..n {
        for b in 0..n {
            if m.get(a, b) != m.get(b, a) {
                return fail(format!("m not symmetric at ({a},{b})"));
            }
        }
        if t.group_order() >= 3 && m.get(a, a) != 0 {
            return fail(format!("nonzero diagonal at {a}"));
        }
        let row: u64 = (0..n).map(|b| (m.get(a, b) * t.degree(b)) as u64).sum();
        if row != 2 * t.degree(a) as u64 {
            return fail(format!("dimension count fails at vertex {a}"));
        }
    }
    let dims: Vec<u32> = t.degrees().to_vec();
    let affine: Vec<Vec<i64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| if a == b { 2 } else { 0 } - m.get(a, b) as i64)
                .collect()
        })
        .collect();
    if affine.iter().enumerate().any(|(a, r)| r[a] != 2) {
        return fail("affine Cartan diagonal is not 2".into());
    }
    for (a, row) in affine.iter().enumerate() {
        let s: i64 = row.iter().zip(&dims).map(|(&x, &d)| x * d as i64).sum();
        if s != 0 {
            return fail(format!("affine Cartan times dimension vector nonzero at {a}"));
        }
    }
    let det = integer_det(&affine);
    if !det.is_zero() {
        return fail(format!("affine Cartan determinant is {det}"));
    }
    let as_rational: Vec<Vec<_>> = affine
        .iter()
        .map(|r| r.iter().map(|&x| num_rational::BigRational::from_integer(x.into())).collect())
        .collect();
    let kernel_dim = n - rational_rank(&as_rational);
    if kernel_dim != 1 {
        return fail(format!("affine Cartan kernel has dimension {kernel_dim}"));
    }
    let trivial = t.trivial();
    let finite_vertices: Vec<usize> = (0..n).filter(|&v| v != trivial).collect();
    let finite: Vec<Vec<i64>> = finite_vertices
        .iter()
        .map(|&a| finite_vertices.iter().map(|&b| affine[a][b]).collect())
        .collect();
    let mut minors = Vec::new();
    for k in 1..=finite.len() {
        let sub: Vec<Vec<i64>> = finite[..k].iter().map(|r| r[..k].to_vec()).collect();
        let d = integer_det(&sub);
        if d <= BigInt::zero() {
            return fail(format!("finite Cartan leading minor {k} is {d}"));
        }
        minors.push(d.to_string());
    }
    let edges: Vec<(usize, usize, u32)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| m.get(a, b) > 0)
        .map(|(a, b)| (a, b, m.get(a, b)))
        .collect();
    let adj: Vec<Vec<u32>> = m.0.clone();
    let expected = AffineType::of_group(spec);
    match classify_shape(&adj) {
        Some(s) if s == expected => {}
        other => {
            return fail(format!(
                "graph shape {other:?} does not match expected {}",
                expected.label()
            ))
        }
    }
    let isomorphism = find_isomorphism(&adj, &expected.adjacency())
        .ok_or_else(|| Error::McKay(format!("no isomorphism with {}", expected.label())))?;
    Ok(McKayGraphData {
        vertex_count: n,
        trivial,
        dims,
        edges,
        affine_cartan: affine,
        finite_vertices,
        finite_cartan: finite,
        leading_minors: minors,
        affine_det: det.to_string(),
        kernel_dim,
        shape: expected,
        isomorphism,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binpoly::{build_group, choose_modulus, conjugacy_classes};

    fn table(spec: GroupSpec) -> CharacterTable {
        let g = build_group(&spec, &choose_modulus(&spec)).unwrap();
        let c = conjugacy_classes(&g);
        character_table(&g, &c, 7).unwrap()
    }

    #[test]
    fn cyclic_three_degrees_and_triangle() {
        let t = table(GroupSpec::Cyclic(3));
        assert_eq!(t.field().p(), 7);
        assert_eq!(t.degrees(), &[1, 1, 1]);
        let m = tensor_multiplicities(&t).unwrap();
        assert_eq!(m.0, vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
        let g = mckay_graph(&GroupSpec::Cyclic(3), &m, &t).unwrap();
        assert_eq!(
            g.affine_cartan,
            vec![vec![2, -1, -1], vec![-1, 2, -1], vec![-1, -1, 2]]
        );
        assert_eq!(g.finite_cartan, vec![vec![2, -1], vec![-1, 2]]);
        assert_eq!(g.leading_minors, vec!["2", "3"]);
        assert_eq!(g.kernel_dim, 1);
    }

    #[test]
    fn quaternion_group_degrees() {
        let t = table(GroupSpec::BinaryDihedral(2));
        assert_eq!(t.sorted_degrees(), vec![1, 1, 1, 1, 2]);
        assert!(t.defining().is_some());
    }

    #[test]
    fn binary_tetrahedral_degrees_and_null_vector() {
        let spec = GroupSpec::BinaryTetrahedral;
        let t = table(spec);
        assert_eq!(t.sorted_degrees(), vec![1, 1, 1, 2, 2, 2, 3]);
        let m = tensor_multiplicities(&t).unwrap();
        let g = mckay_graph(&spec, &m, &t).unwrap();
        assert_eq!(g.shape, AffineType::E6);
        let mut d = g.dims.clone();
        d.sort_unstable();
        assert_eq!(d, vec![1, 1, 1, 2, 2, 2, 3]);
    }

    #[test]
    fn order_two_has_double_edge() {
        let spec = GroupSpec::Cyclic(2);
        let t = table(spec);
        let m = tensor_multiplicities(&t).unwrap();
        assert_eq!(m.0, vec![vec![0, 2], vec![2, 0]]);
        let g = mckay_graph(&spec, &m, &t).unwrap();
        assert_eq!(g.shape, AffineType::A(1));
    }

    #[test]
    fn reference_diagrams_classify_as_themselves() {
        for ty in [
            AffineType::A(2),
            AffineType::A(5),
            AffineType::D(4),
            AffineType::D(5),
            AffineType::D(7),
            AffineType::E6,
            AffineType::E7,
            AffineType::E8,
        ] {
            assert_eq!(classify_shape(&ty.adjacency()), Some(ty), "{ty:?}");
        }
    }

    #[test]
    fn isomorphism_search_respects_structure() {
        let a = AffineType::E6.adjacency();
        let perm = [3, 0, 6, 1, 5, 2, 4];
        let b: Vec<Vec<u32>> = (0..7)
            .map(|i| (0..7).map(|j| a[perm[i]][perm[j]]).collect())
            .collect();
        let f = find_isomorphism(&b, &a).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(b[i][j], a[f[i]][f[j]]);
            }
        }
        assert!(find_isomorphism(&AffineType::E7.adjacency(), &AffineType::D(7).adjacency()).is_none());
    }

    #[test]
    fn canonical_labels_agree_across_moduli() {
        for spec in [GroupSpec::Cyclic(4), GroupSpec::BinaryTetrahedral] {
            let mut seen = Vec::new();
            for p in spec.admissible_moduli().take(2) {
                let g = build_group(&spec, &PrimeField::new(p).unwrap()).unwrap();
                let c = conjugacy_classes(&g);
                let t = character_table(&g, &c, 11).unwrap();
                let (t, m) = canonicalize(&t).unwrap();
                seen.push((t.degrees().to_vec(), m));
            }
            assert_eq!(seen[0], seen[1]);
        }
    }

    #[test]
    fn every_family_gives_its_affine_diagram() {
        let specs = (2..=8)
            .map(GroupSpec::Cyclic)
            .chain((2..=6).map(GroupSpec::BinaryDihedral))
            .chain([
                GroupSpec::BinaryTetrahedral,
                GroupSpec::BinaryOctahedral,
                GroupSpec::BinaryIcosahedral,
            ]);
        for spec in specs {
            let t = table(spec);
            let (t, m) = canonicalize(&t).unwrap();
            let g = mckay_graph(&spec, &m, &t).unwrap();
            assert_eq!(g.shape, AffineType::of_group(&spec));
            assert_eq!(g.vertex_count, spec.affine_vertex_count());
        }
    }
}
