//! The polynomial algebra `A = F_p[x, y]` with its `G`-action, the ideal `n`
//! generated by positive-degree invariants, isotypic copies inside `m/n`,
//! point ideals `I(W)` and equivariant Tor via the Koszul complex.
//!
//! `n` contains every monomial of large degree, so `A/n` is finite
//! dimensional and all module computations below happen exactly inside it.

use serde::Serialize;

use crate::binpoly::{FiniteMatrixGroup, GroupElement};
use crate::chartab::{CharacterTable, TensorMultiplicities};
use crate::check::{all_passed, Check};
use crate::error::{Error, Result};
use crate::ffla::{FpMatrix, IncrementalSpan, PrimeField, Subspace};

/// Homogeneous polynomials of degree `d` are coefficient vectors of length
/// `d + 1`, index `i` holding the coefficient of `x^(d-i) y^i`.
pub fn monomial_label(d: usize, i: usize) -> String {
    let factor = |var: &str, e: usize| match e {
        0 => String::new(),
        1 => var.to_string(),
        _ => format!("{var}^{e}"),
    };
    let parts: Vec<String> = [factor("x", d - i), factor("y", i)]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

fn format_terms(terms: impl IntoIterator<Item = (u32, String)>, field: &PrimeField) -> String {
    let mut out = String::new();
    for (c, mono) in terms {
        if c == 0 {
            continue;
        }
        let signed = field.signed_lift(c);
        let (neg, mag) = (signed < 0, signed.unsigned_abs());
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if mag != 1 || mono == "1" {
            out.push_str(&mag.to_string());
            if mono != "1" {
                out.push('*');
            }
        }
        if mono != "1" {
            out.push_str(&mono);
        }
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

/// Render a homogeneous polynomial with signed coefficients.
pub fn format_homogeneous(d: usize, coeffs: &[u32], field: &PrimeField) -> String {
    format_terms(
        coeffs.iter().enumerate().map(|(i, &c)| (c, monomial_label(d, i))),
        field,
    )
}

/// `A = F_p[x, y]` with `G` acting by `(g f)(v) = f(g^{-1} v)`.
#[derive(Clone, Debug)]
pub struct EquivariantPolyAlgebra {
    group: FiniteMatrixGroup,
    cap: usize,
}

impl EquivariantPolyAlgebra {
    pub fn new(group: FiniteMatrixGroup, cap: usize) -> Result<Self> {
        if cap < 2 * group.order() {
            return Err(Error::Kleinian(format!(
                "degree cap {cap} is below 2|G| = {}",
                2 * group.order()
            )));
        }
        Ok(Self { group, cap })
    }

    pub fn group(&self) -> &FiniteMatrixGroup {
        &self.group
    }
    pub fn field(&self) -> &PrimeField {
        self.group.field()
    }
    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Substitution matrix of `g` on degree `d`: column `j` is `g` applied
    /// to the `j`-th monomial.
    pub fn action_matrix(&self, g: usize, d: usize) -> FpMatrix {
        let k = self.field();
        let GroupElement([a, b, c, e]) = *self.group.element(self.group.inverse(g));
        // x -> a x + b y, y -> c x + e y
        let powers = |u: u32, v: u32| {
            let mut out = vec![vec![1u32]];
            for n in 1..=d {
                let prev: &Vec<u32> = &out[n - 1];
                let mut next = vec![0u32; n + 1];
                for (i, &coef) in prev.iter().enumerate() {
                    next[i] = k.add(next[i], k.mul(coef, u));
                    next[i + 1] = k.add(next[i + 1], k.mul(coef, v));
                }
                out.push(next);
            }
            out
        };
        let px = powers(a, b);
        let py = powers(c, e);
        let mut m = FpMatrix::zeros(k.p(), d + 1, d + 1);
        for j in 0..=d {
            let (f, h) = (&px[d - j], &py[j]);
            for (s, &fs) in f.iter().enumerate() {
                if fs == 0 {
                    continue;
                }
                for (t, &ht) in h.iter().enumerate() {
                    let cur = m.get(s + t, j);
                    m.set(s + t, j, k.add(cur, k.mul(fs, ht)));
                }
            }
        }
        m
    }

    /// Image of the Reynolds operator on degree `d`.
    pub fn invariants(&self, d: usize) -> Subspace {
        let p = self.field().p();
        let mut sum = FpMatrix::zeros(p, d + 1, d + 1);
        for g in 0..self.group.order() {
            sum = sum.add(&self.action_matrix(g, d));
        }
        Subspace::span(&sum.transpose())
    }
}

fn shift(v: &[u32], by_y: bool) -> Vec<u32> {
    let mut out = vec![0; v.len() + 1];
    let off = usize::from(by_y);
    out[off..off + v.len()].copy_from_slice(v);
    out
}

/// The ideal `n` generated by the invariants of positive degree.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantIdealN {
    /// Minimal homogeneous generators as `(degree, coefficients)`.
    pub generators: Vec<(usize, Vec<u32>)>,
    /// `spans[d]` is the degree-`d` piece of `n`, up to the first degree
    /// where `n` contains every monomial.
    #[serde(skip)]
    pub spans: Vec<Subspace>,
    /// Largest degree in which `n` is a proper subspace.
    pub top_degree: usize,
}

impl InvariantIdealN {
    pub fn generator_strings(&self, field: &PrimeField) -> Vec<String> {
        self.generators
            .iter()
            .map(|(d, c)| format_homogeneous(*d, c, field))
            .collect()
    }

    pub fn span(&self, d: usize) -> Option<&Subspace> {
        self.spans.get(d)
    }

    pub fn contains(&self, d: usize, f: &[u32]) -> bool {
        match self.spans.get(d) {
            Some(s) => s.contains(f),
            None => true,
        }
    }
}

pub fn invariant_ideal(alg: &EquivariantPolyAlgebra) -> Result<InvariantIdealN> {
    let p = alg.field().p();
    let mut spans = vec![Subspace::zero(p, 1)];
    let mut generators = Vec::new();
    for d in 1..=alg.cap() {
        let prev = &spans[d - 1];
        let mut span = IncrementalSpan::new(p, d + 1);
        for r in 0..prev.dim() {
            let row = prev.basis().row(r);
            span.insert(&shift(row, false));
            span.insert(&shift(row, true));
        }
        let inv = alg.invariants(d);
        for r in 0..inv.dim() {
            let f = inv.basis().row(r);
            if span.insert(f).is_some() {
                generators.push((d, f.to_vec()));
            }
        }
        let full = span.dim() == d + 1;
        spans.push(span.to_subspace());
        if full {
            return Ok(InvariantIdealN {
                generators,
                spans,
                top_degree: d - 1,
            });
        }
    }
    Err(Error::Kleinian(format!(
        "invariant ideal does not contain all monomials of degree <= {}; raise the degree cap",
        alg.cap()
    )))
}

/// `A/n` with its grading, the two coordinate multiplications and the group
/// action, in the basis of standard monomials (non-pivot columns of `n_d`).
#[derive(Clone, Debug)]
pub struct QuotientRing {
    field: PrimeField,
    offsets: Vec<usize>,
    standard: Vec<Vec<usize>>,
    dim: usize,
    mult_x: FpMatrix,
    mult_y: FpMatrix,
    action: Vec<FpMatrix>,
    /// Entries of `g^{-1}`; they give the action on the span of `x, y`.
    inverse_entries: Vec<[u32; 4]>,
}

impl QuotientRing {
    pub fn new(alg: &EquivariantPolyAlgebra, n: &InvariantIdealN) -> Self {
        let field = alg.field().clone();
        let p = field.p();
        let top = n.top_degree;
        let standard: Vec<Vec<usize>> = (0..=top).map(|d| n.spans[d].free_columns()).collect();
        let mut offsets = Vec::with_capacity(top + 2);
        let mut acc = 0;
        for s in &standard {
            offsets.push(acc);
            acc += s.len();
        }
        offsets.push(acc);
        let dim = acc;
        // coordinates of a degree-d polynomial in the standard basis
        let coords = |d: usize, f: &[u32]| -> Vec<(usize, u32)> {
            if d > top {
                return Vec::new();
            }
            let r = n.spans[d].reduce(f);
            standard[d]
                .iter()
                .enumerate()
                .filter(|(_, &c)| r[c] != 0)
                .map(|(k, &c)| (offsets[d] + k, r[c]))
                .collect()
        };
        let mut mult_x = FpMatrix::zeros(p, dim, dim);
        let mut mult_y = FpMatrix::zeros(p, dim, dim);
        for d in 0..=top {
            for (k, &c) in standard[d].iter().enumerate() {
                let col = offsets[d] + k;
                let mut mono = vec![0; d + 1];
                mono[c] = 1;
                for (target, by_y) in [(&mut mult_x, false), (&mut mult_y, true)] {
                    for (row, v) in coords(d + 1, &shift(&mono, by_y)) {
                        target.set(row, col, v);
                    }
                }
            }
        }
        let g = alg.group();
        let mut action = Vec::with_capacity(g.order());
        for e in 0..g.order() {
            let mut m = FpMatrix::zeros(p, dim, dim);
            for d in 0..=top {
                let full = alg.action_matrix(e, d);
                for (k, &c) in standard[d].iter().enumerate() {
                    let image: Vec<u32> = (0..=d).map(|r| full.get(r, c)).collect();
                    for (row, v) in coords(d, &image) {
                        m.set(row, offsets[d] + k, v);
                    }
                }
            }
            action.push(m);
        }
        let inverse_entries = (0..g.order())
            .map(|e| g.element(g.inverse(e)).0)
            .collect();
        Self {
            field,
            offsets,
            standard,
            dim,
            mult_x,
            mult_y,
            action,
            inverse_entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn top_degree(&self) -> usize {
        self.standard.len() - 1
    }
    pub fn degree_dim(&self, d: usize) -> usize {
        self.standard.get(d).map_or(0, Vec::len)
    }
    /// Global coordinate range of degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.offsets[d]..self.offsets[d + 1]
    }
    pub fn degree_of(&self, index: usize) -> usize {
        self.offsets.partition_point(|&o| o <= index) - 1
    }
    pub fn mult_x(&self) -> &FpMatrix {
        &self.mult_x
    }
    pub fn mult_y(&self) -> &FpMatrix {
        &self.mult_y
    }
    pub fn action(&self, g: usize) -> &FpMatrix {
        &self.action[g]
    }
    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    /// Hilbert function of `A/n`.
    pub fn hilbert_function(&self) -> Vec<usize> {
        self.standard.iter().map(Vec::len).collect()
    }

    /// Nonzero terms of a vector as `(degree, monomial index, coefficient)`.
    pub fn terms(&self, v: &[u32]) -> Vec<(usize, usize, u32)> {
        (0..self.dim)
            .filter(|&i| v[i] != 0)
            .map(|i| {
                let d = self.degree_of(i);
                (d, self.standard[d][i - self.offsets[d]], v[i])
            })
            .collect()
    }

    pub fn format(&self, v: &[u32]) -> String {
        let terms = (0..self.dim).map(|i| {
            let d = self.degree_of(i);
            let c = self.standard[d][i - self.offsets[d]];
            (v[i], monomial_label(d, c))
        });
        format_terms(terms, &self.field)
    }

    /// Character of the degree-`d` piece on class representatives.
    pub fn degree_character(&self, d: usize, t: &CharacterTable) -> Vec<u32> {
        let range = self.degree_range(d);
        let k = &self.field;
        t.classes()
            .representatives()
            .iter()
            .map(|&g| range.clone().fold(0, |acc, i| k.add(acc, self.action[g].get(i, i))))
            .collect()
    }

    /// Smallest `A`-submodule containing the given vectors.
    pub fn submodule(&self, gens: &[Vec<u32>]) -> Subspace {
        let mut span = IncrementalSpan::new(self.field.p(), self.dim);
        let mut queue: Vec<Vec<u32>> = gens.to_vec();
        while let Some(v) = queue.pop() {
            if let Some(row) = span.insert(&v) {
                let row = row.to_vec();
                queue.push(self.mult_x.apply(&row));
                queue.push(self.mult_y.apply(&row));
            }
        }
        span.to_subspace()
    }

    /// Smallest `G`-stable subspace containing the given vectors.
    pub fn g_span(&self, gens: &[Vec<u32>]) -> Subspace {
        let mut span = IncrementalSpan::new(self.field.p(), self.dim);
        for v in gens {
            for m in &self.action {
                span.insert(&m.apply(v));
            }
        }
        span.to_subspace()
    }
}

/// Isotypic projector `e_π = (d_π/|G|) Σ_g χ_π(g^{-1}) g` on `A/n`.
pub fn isotypic_projector(q: &QuotientRing, t: &CharacterTable, pi: usize, order: usize, group: &FiniteMatrixGroup) -> FpMatrix {
    let k = q.field();
    let mut sum = FpMatrix::zeros(k.p(), q.dim(), q.dim());
    for g in 0..order {
        let class = t.classes().class_of(group.inverse(g));
        let c = t.value(pi, class);
        if c != 0 {
            sum = sum.add(&q.action(g).scale(c));
        }
    }
    let scale = k.div(k.from_u64(t.degree(pi) as u64), k.from_u64(order as u64));
    sum.scale(scale)
}

/// Degree-`d` block of `A/n` projected to the `π`-isotypic part.
fn isotypic_block(q: &QuotientRing, projector: &FpMatrix, d: usize) -> Subspace {
    let cols: Vec<Vec<u32>> = q
        .degree_range(d)
        .map(|c| (0..q.dim()).map(|r| projector.get(r, c)).collect())
        .collect();
    Subspace::span_vecs(q.field().p(), q.dim(), &cols)
}

/// The pair of copies `π′, π″ ⊆ m/n` spanning the pencil of point ideals
/// along the exceptional curve of `π`.
///
/// Copies are addressed through a fixed eigenline: for an element `h` with a
/// simple eigenvalue `λ` on `π`, `Hom_G(π, M)` is identified with the
/// `λ`-eigenspace of `h` on `M`, and a copy is the `G`-span of such a vector.
#[derive(Clone, Debug, Serialize)]
pub struct IsotypicPair {
    pub pi: usize,
    pub dim: u32,
    /// `(degree, multiplicity)` of `π` in each graded piece of `m/n`.
    pub degree_multiplicities: Vec<(usize, usize)>,
    pub total_multiplicity: usize,
    pub degrees: (usize, usize),
    /// Group element and eigenvalue used to address copies.
    pub eigen_element: usize,
    pub eigenvalue: u32,
    /// Eigenvectors generating `π′` and `π″`, in `A/n` coordinates.
    #[serde(skip)]
    pub generator_prime: Vec<u32>,
    #[serde(skip)]
    pub generator_double: Vec<u32>,
    pub prime_basis: Vec<String>,
    pub double_basis: Vec<String>,
}

impl IsotypicPair {
    /// Generator of the graph copy `{λ v′ + μ v″}`.
    pub fn graph_vector(&self, lambda: u32, mu: u32, field: &PrimeField) -> Vec<u32> {
        self.generator_prime
            .iter()
            .zip(&self.generator_double)
            .map(|(&a, &b)| field.add(field.mul(lambda, a), field.mul(mu, b)))
            .collect()
    }
}

fn eigen_choice(q: &QuotientRing, group: &FiniteMatrixGroup, image: &Subspace, copies: usize) -> Option<(usize, u32)> {
    let p = q.field().p();
    for h in 0..group.order() {
        let r = image.restricted_matrix(q.action(h));
        let n = r.rows();
        for lambda in 0..p {
            let shifted = r.sub(&FpMatrix::identity(p, n).scale(lambda));
            if n - shifted.rank() == copies {
                return Some((h, lambda));
            }
        }
    }
    None
}

/// Locate `π′, π″` for every nontrivial `π`. The copies of `π` in `m/n` sit
/// in degrees symmetric about the middle; the pencil is formed by the two
/// middle copies.
pub fn isotypic_pairs(q: &QuotientRing, group: &FiniteMatrixGroup, t: &CharacterTable) -> Result<Vec<IsotypicPair>> {
    let p = q.field().p();
    let mut out = Vec::new();
    for pi in 0..t.len() {
        let mut degree_multiplicities = Vec::new();
        let mut total = 0;
        for d in 0..=q.top_degree() {
            let mult = t.inner_product(&q.degree_character(d, t), pi) as usize;
            if d == 0 && mult != 0 && pi != t.trivial() {
                return Err(Error::Kleinian("constant term carries a nontrivial character".into()));
            }
            if d > 0 && mult > 0 {
                degree_multiplicities.push((d, mult));
                total += mult;
            }
        }
        if pi == t.trivial() {
            if total != 0 {
                return Err(Error::Kleinian(format!(
                    "trivial character occurs {total} times in m/n"
                )));
            }
            continue;
        }
        let dim = t.degree(pi);
        if total != 2 * dim as usize {
            return Err(Error::Kleinian(format!(
                "character {pi} occurs {total} times in m/n, expected {}; raise the degree cap",
                2 * dim
            )));
        }
        let projector = isotypic_projector(q, t, pi, group.order(), group);
        let image = Subspace::span(&projector.transpose());
        let (h, lambda) = eigen_choice(q, group, &image, total).ok_or_else(|| {
            Error::Kleinian(format!("no group element has a simple eigenvalue on character {pi}"))
        })?;
        let mut slots: Vec<usize> = degree_multiplicities
            .iter()
            .flat_map(|&(d, m)| std::iter::repeat_n(d, m))
            .collect();
        slots.sort_unstable();
        let mid = dim as usize;
        let (a, b) = (slots[mid - 1], slots[mid]);
        let eigen_in = |d: usize| -> Vec<Vec<u32>> {
            let block = isotypic_block(q, &projector, d);
            let r = block.restricted_matrix(q.action(h));
            let k = r.rows();
            let ns = r.sub(&FpMatrix::identity(p, k).scale(lambda)).nullspace();
            (0..ns.rows())
                .map(|i| crate::ffla::combine(p, block.basis(), ns.row(i)))
                .collect()
        };
        let (gp, gd) = if a == b {
            let v = eigen_in(a);
            if v.len() != 2 {
                return Err(Error::Kleinian(format!(
                    "middle degree {a} holds {} copies of character {pi}",
                    v.len()
                )));
            }
            (v[0].clone(), v[1].clone())
        } else {
            let (va, vb) = (eigen_in(a), eigen_in(b));
            if va.len() != 1 || vb.len() != 1 {
                return Err(Error::Kleinian(format!(
                    "middle degrees {a}, {b} of character {pi} do not hold single copies"
                )));
            }
            (va[0].clone(), vb[0].clone())
        };
        let describe = |v: &[u32]| {
            let s = q.g_span(&[v.to_vec()]);
            (0..s.dim()).map(|r| q.format(s.basis().row(r))).collect()
        };
        out.push(IsotypicPair {
            pi,
            dim,
            degree_multiplicities,
            total_multiplicity: total,
            degrees: (a, b),
            eigen_element: h,
            eigenvalue: lambda,
            prime_basis: describe(&gp),
            double_basis: describe(&gd),
            generator_prime: gp,
            generator_double: gd,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointKind {
    /// `I(W)` for the graph `W = {λ v′ + μ v″}` on the pencil of `π`.
    Pencil { lambda: u32, mu: u32 },
    /// `I(W_π ⊕ W_ρ)` for points of the pencils of `π` and `ρ`.
    Intersection {
        rho: usize,
        pi_point: (u32, u32),
        rho_point: (u32, u32),
    },
}

/// A `G`-stable ideal `I ⊇ n`, held as `I/n ⊆ A/n`, with its quotient data.
#[derive(Clone, Debug, Serialize)]
pub struct PointIdeal {
    pub pi: usize,
    pub kind: PointKind,
    /// Generators of `W` as polynomials.
    pub generators: Vec<String>,
    #[serde(skip)]
    pub ideal: Subspace,
    pub quotient_dim: usize,
    /// Character of `A/I` on class representatives (residues mod p).
    pub character: Vec<u32>,
    pub regular: bool,
}

impl PointIdeal {
    /// Colength `|G|` with the regular character.
    pub fn is_cluster(&self) -> bool {
        self.regular
    }
}

/// `I(W)` for the `G`-span `W` of the given vectors.
pub fn ideal_from_vectors(q: &QuotientRing, t: &CharacterTable, pi: usize, kind: PointKind, vectors: &[Vec<u32>]) -> PointIdeal {
    let k = q.field();
    let w = q.g_span(vectors);
    let gens: Vec<Vec<u32>> = (0..w.dim()).map(|r| w.basis().row(r).to_vec()).collect();
    let ideal = q.submodule(&gens);
    let character: Vec<u32> = t
        .classes()
        .representatives()
        .iter()
        .map(|&g| ideal.quotient_trace(q.action(g)))
        .collect();
    let quotient_dim = q.dim() - ideal.dim();
    let order = t.group_order();
    let regular = quotient_dim == order
        && character
            .iter()
            .enumerate()
            .all(|(c, &v)| v == if c == 0 { k.from_u64(order as u64) } else { 0 });
    PointIdeal {
        pi,
        kind,
        generators: gens.iter().map(|v| q.format(v)).collect(),
        ideal,
        quotient_dim,
        character,
        regular,
    }
}

pub fn point_ideal(q: &QuotientRing, t: &CharacterTable, pair: &IsotypicPair, lambda: u32, mu: u32) -> Result<PointIdeal> {
    if lambda == 0 && mu == 0 {
        return Err(Error::Kleinian("(0:0) is not a point of the projective line".into()));
    }
    let v = pair.graph_vector(lambda, mu, q.field());
    Ok(ideal_from_vectors(q, t, pair.pi, PointKind::Pencil { lambda, mu }, &[v]))
}

/// `I(W_π ⊕ W_ρ)` for chosen points on the pencils of two adjacent vertices.
pub fn intersection_ideal(
    q: &QuotientRing,
    t: &CharacterTable,
    pi: &IsotypicPair,
    rho: &IsotypicPair,
    pi_point: (u32, u32),
    rho_point: (u32, u32),
) -> PointIdeal {
    let k = q.field();
    let a = pi.graph_vector(pi_point.0, pi_point.1, k);
    let b = rho.graph_vector(rho_point.0, rho_point.1, k);
    ideal_from_vectors(
        q,
        t,
        pi.pi,
        PointKind::Intersection {
            rho: rho.pi,
            pi_point,
            rho_point,
        },
        &[a, b],
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct TorTriple {
    pub dims: [usize; 3],
    /// Characters of `Tor_0, Tor_1, Tor_2` on class representatives.
    pub characters: [Vec<u32>; 3],
    pub multiplicities: [Vec<u32>; 3],
    pub complex_closes: bool,
    pub euler_vanishes: bool,
}

/// Koszul complex `B → B ⊗ V → B` for `B = A/I`, where `V = span(x, y)`.
pub fn koszul_tor(q: &QuotientRing, t: &CharacterTable, ideal: &PointIdeal) -> TorTriple {
    let k = q.field();
    let p = k.p();
    let j = &ideal.ideal;
    let free = j.free_columns();
    let b = free.len();
    let on_quotient = |m: &FpMatrix| -> FpMatrix {
        let mut out = FpMatrix::zeros(p, b, b);
        for (col, &c) in free.iter().enumerate() {
            let v: Vec<u32> = (0..q.dim()).map(|r| m.get(r, c)).collect();
            let r = j.reduce(&v);
            for (row, &f) in free.iter().enumerate() {
                out.set(row, col, r[f]);
            }
        }
        out
    };
    let bx = on_quotient(q.mult_x());
    let by = on_quotient(q.mult_y());
    // d2: v -> (y v, -x v); d1: (v, w) -> x v + y w
    let d2 = by.vstack(&bx.scale(p - 1));
    let d1 = FpMatrix::from_fn(p, b, 2 * b, |r, c| {
        if c < b {
            bx.get(r, c) as i64
        } else {
            by.get(r, c - b) as i64
        }
    });
    let complex_closes = d1.mul(&d2).is_zero();
    let ker_d2 = Subspace::span(&d2.nullspace());
    let im_d2 = Subspace::span(&d2.transpose());
    let ker_d1 = Subspace::span(&d1.nullspace());
    let im_d1 = Subspace::span(&d1.transpose());
    let full = Subspace::full(p, b);
    let reps = t.classes().representatives();
    let mut chars: [Vec<u32>; 3] = Default::default();
    for &g in reps {
        let gb = on_quotient(q.action(g));
        let [a, bb, c, d] = q.inverse_entries[g];
        let middle = FpMatrix::from_fn(p, 2 * b, 2 * b, |r, col| {
            let coef = match (r < b, col < b) {
                (true, true) => a,
                (true, false) => c,
                (false, true) => bb,
                (false, false) => d,
            };
            k.mul(coef, gb.get(r % b, col % b)) as i64
        });
        chars[0].push(k.sub(full.restricted_trace(&gb), im_d1.restricted_trace(&gb)));
        chars[1].push(k.sub(ker_d1.restricted_trace(&middle), im_d2.restricted_trace(&middle)));
        chars[2].push(ker_d2.restricted_trace(&gb));
    }
    let euler_vanishes = (0..reps.len()).all(|c| k.add(k.sub(chars[0][c], chars[1][c]), chars[2][c]) == 0);
    let dims = [
        b - im_d1.dim(),
        ker_d1.dim() - im_d2.dim(),
        ker_d2.dim(),
    ];
    let multiplicities = [t.decompose(&chars[0]), t.decompose(&chars[1]), t.decompose(&chars[2])];
    TorTriple {
        dims,
        characters: chars,
        multiplicities,
        complex_closes,
        euler_vanishes,
    }
}

/// Parameters of the Tor suite.
#[derive(Clone, Debug, Serialize)]
pub struct TorConfig {
    /// Truncation safety bound for the invariant ideal; defaults to `2|G|`.
    pub degree_cap: Option<usize>,
    /// Explicit pencil parameters; when empty, interior points `(1:t)` are
    /// taken in order until `sample_count` clusters are found.
    pub samples: Vec<(u32, u32)>,
    pub sample_count: usize,
}

impl Default for TorConfig {
    fn default() -> Self {
        Self {
            degree_cap: None,
            samples: Vec::new(),
            sample_count: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRole {
    Interior,
    Boundary,
    Intersection,
}

#[derive(Clone, Debug, Serialize)]
pub struct TorRow {
    pub pi: usize,
    pub role: PointRole,
    pub point: PointIdeal,
    pub tor: Option<TorTriple>,
    /// Empty for rows that are reported but not asserted.
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TorSuite {
    pub generators: Vec<String>,
    pub hilbert_function: Vec<usize>,
    pub pairs: Vec<IsotypicPair>,
    pub rows: Vec<TorRow>,
    pub checks: Vec<Check>,
}

impl TorSuite {
    pub fn passed(&self) -> bool {
        all_passed(&self.checks) && self.rows.iter().all(|r| all_passed(&r.checks))
    }
}

fn unit(n: usize, at: &[usize]) -> Vec<u32> {
    let mut v = vec![0; n];
    for &i in at {
        v[i] += 1;
    }
    v
}

fn tor_checks(t: &CharacterTable, tor: &TorTriple, ideal: &PointIdeal, expected: &[usize]) -> Vec<Check> {
    let n = t.len();
    let dsum: usize = expected.iter().map(|&e| t.degree(e) as usize).sum();
    let want = [unit(n, &[t.trivial()]), unit(n, &[&[t.trivial()], expected].concat()), unit(n, expected)];
    let mut checks = vec![
        Check::new(
            "quotient dimension is |G|",
            ideal.quotient_dim == t.group_order(),
            format!("{}", ideal.quotient_dim),
        ),
        Check::new("quotient is the regular representation", ideal.regular, format!("{:?}", ideal.character)),
        Check::new("d1 d2 = 0", tor.complex_closes, ""),
        Check::new("alternating character sum vanishes", tor.euler_vanishes, ""),
        Check::new(
            "Tor dimensions",
            tor.dims == [1, 1 + dsum, dsum],
            format!("{:?}", tor.dims),
        ),
    ];
    for (i, w) in want.iter().enumerate() {
        checks.push(Check::new(
            format!("Tor{i} multiplicities"),
            &tor.multiplicities[i] == w,
            format!("{:?}", tor.multiplicities[i]),
        ));
    }
    checks.push(Check::new(
        "Tor2 has no invariants",
        tor.multiplicities[2][t.trivial()] == 0,
        "",
    ));
    checks
}

fn projective_points(p: u32) -> impl Iterator<Item = (u32, u32)> {
    [(1, 0), (0, 1)].into_iter().chain((1..p).map(|t| (1, t)))
}

/// Put the first two non-cluster points of a same-degree pencil at `(1:0)`
/// and `(0:1)`, so interior parameters avoid them where possible.
fn normalize_pencil(q: &QuotientRing, t: &CharacterTable, pair: &mut IsotypicPair) -> Result<()> {
    let k = q.field();
    let mut bad = Vec::new();
    for (l, m) in projective_points(k.p()) {
        if !point_ideal(q, t, pair, l, m)?.is_cluster() {
            bad.push(pair.graph_vector(l, m, k));
            if bad.len() == 2 {
                break;
            }
        }
    }
    match bad.len() {
        2 => {
            pair.generator_prime = bad[0].clone();
            pair.generator_double = bad[1].clone();
        }
        1 => {
            let other = if bad[0] == pair.generator_prime {
                pair.generator_double.clone()
            } else {
                pair.generator_prime.clone()
            };
            pair.generator_prime = bad[0].clone();
            pair.generator_double = other;
        }
        _ => {}
    }
    let describe = |v: &[u32]| {
        let s = q.g_span(&[v.to_vec()]);
        (0..s.dim()).map(|r| q.format(s.basis().row(r))).collect()
    };
    pair.prime_basis = describe(&pair.generator_prime);
    pair.double_basis = describe(&pair.generator_double);
    Ok(())
}

/// Everything the Tor suite needs about `A/n`.
pub struct KleinianData {
    pub algebra: EquivariantPolyAlgebra,
    pub ideal: InvariantIdealN,
    pub quotient: QuotientRing,
    pub pairs: Vec<IsotypicPair>,
}

impl KleinianData {
    pub fn new(group: &FiniteMatrixGroup, t: &CharacterTable, degree_cap: Option<usize>) -> Result<Self> {
        if group.order() <= 2 {
            return Err(Error::Kleinian(
                "the group of order 2 gives a McKay graph with a double edge and is excluded".into(),
            ));
        }
        let cap = degree_cap.unwrap_or(2 * group.order());
        let algebra = EquivariantPolyAlgebra::new(group.clone(), cap)?;
        let ideal = invariant_ideal(&algebra)?;
        for (d, f) in &ideal.generators {
            for g in 0..group.order() {
                if algebra.action_matrix(g, *d).apply(f) != *f {
                    return Err(Error::Kleinian(format!("generator of degree {d} is not invariant")));
                }
            }
        }
        let quotient = QuotientRing::new(&algebra, &ideal);
        let mut pairs = isotypic_pairs(&quotient, group, t)?;
        for pair in pairs.iter_mut() {
            if pair.degrees.0 == pair.degrees.1 {
                normalize_pencil(&quotient, t, pair)?;
            }
        }
        Ok(Self {
            algebra,
            ideal,
            quotient,
            pairs,
        })
    }
}

/// Point ideals and Tor along every exceptional curve and at every
/// intersection of adjacent curves.
pub fn tor_suite(group: &FiniteMatrixGroup, t: &CharacterTable, m: &TensorMultiplicities, config: &TorConfig) -> Result<TorSuite> {
    let data = KleinianData::new(group, t, config.degree_cap)?;
    let q = &data.quotient;
    let k = q.field();
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut special: Vec<Vec<(u32, u32)>> = vec![Vec::new(); t.len()];
    for pair in &data.pairs {
        let pi = pair.pi;
        let prime = q.g_span(std::slice::from_ref(&pair.generator_prime));
        let double = q.g_span(std::slice::from_ref(&pair.generator_double));
        checks.push(Check::new(
            format!("pi{pi}: copies are distinct irreducible submodules"),
            prime != double && prime.dim() == pair.dim as usize && double.dim() == pair.dim as usize,
            format!("degrees {:?}", pair.degrees),
        ));
        // interior points of a pencil across two degrees are related by the
        // scaling action, so only a same-degree pencil needs a full scan
        let scan: Vec<(u32, u32)> = if pair.degrees.0 == pair.degrees.1 {
            projective_points(k.p()).collect()
        } else {
            vec![(1, 0), (0, 1), (1, 1)]
        };
        for (l, mu) in scan {
            if !point_ideal(q, t, pair, l, mu)?.is_cluster() {
                special[pi].push((l, mu));
            }
        }
        for (l, mu) in [(1, 0), (0, 1)] {
            let point = point_ideal(q, t, pair, l, mu)?;
            let tor = point.is_cluster().then(|| koszul_tor(q, t, &point));
            rows.push(TorRow {
                pi,
                role: PointRole::Boundary,
                point,
                tor,
                checks: Vec::new(),
            });
        }
        let candidates: Vec<(u32, u32)> = if config.samples.is_empty() {
            (1..k.p()).map(|s| (1, s)).collect()
        } else {
            config.samples.clone()
        };
        let mut found = 0;
        for (l, mu) in candidates {
            if config.samples.is_empty() && found == config.sample_count {
                break;
            }
            let point = point_ideal(q, t, pair, l, mu)?;
            let interior = l != 0 && mu != 0;
            if point.is_cluster() && interior {
                let tor = koszul_tor(q, t, &point);
                let row_checks = tor_checks(t, &tor, &point, &[pi]);
                found += 1;
                rows.push(TorRow {
                    pi,
                    role: PointRole::Interior,
                    point,
                    tor: Some(tor),
                    checks: row_checks,
                });
            } else {
                let tor = point.is_cluster().then(|| koszul_tor(q, t, &point));
                rows.push(TorRow {
                    pi,
                    role: if interior { PointRole::Interior } else { PointRole::Boundary },
                    point,
                    tor,
                    checks: Vec::new(),
                });
            }
        }
        checks.push(Check::new(
            format!("pi{pi}: interior cluster samples"),
            found >= config.sample_count,
            format!("{found} of {} required", config.sample_count),
        ));
    }
    let by_index = |i: usize| data.pairs.iter().find(|p| p.pi == i);
    for a in 0..t.len() {
        for b in a + 1..t.len() {
            if a == t.trivial() || b == t.trivial() || m.get(a, b) == 0 {
                continue;
            }
            let (pa, pb) = (by_index(a).unwrap(), by_index(b).unwrap());
            let mut hit = None;
            'search: for &u in &special[a] {
                for &v in &special[b] {
                    let ideal = intersection_ideal(q, t, pa, pb, u, v);
                    if ideal.is_cluster() {
                        hit = Some(ideal);
                        break 'search;
                    }
                }
            }
            checks.push(Check::new(
                format!("pi{a}/pi{b}: intersection ideal found"),
                hit.is_some(),
                "",
            ));
            if let Some(point) = hit {
                let tor = koszul_tor(q, t, &point);
                let row_checks = tor_checks(t, &tor, &point, &[a, b]);
                rows.push(TorRow {
                    pi: a,
                    role: PointRole::Intersection,
                    point,
                    tor: Some(tor),
                    checks: row_checks,
                });
            }
        }
    }
    Ok(TorSuite {
        generators: data.ideal.generator_strings(k),
        hilbert_function: q.hilbert_function(),
        pairs: data.pairs,
        rows,
        checks,
    })
}
