//! Euler-characteristic Hall algebra of double representations, restricted
//! to functions constant on rank strata, with structure constants obtained
//! by counting over several primes and evaluating the interpolated counting
//! polynomial at `q = 1`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::dquiver::{subobject_profile, CatalogCache, DimVector, EnumerationCaps, SimplyLacedGraph};
use crate::error::{Error, Result};
use crate::ffla::{as_integer, interpolate_counts, rational_rank, rational_to_string, PrimeField, RationalPolynomial};

/// A rank stratum: dimension vector plus the rank profile of all arrows and
/// composable pairs. Outside cyclic supports a stratum is a single class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Stratum {
    pub dims: DimVector,
    pub key: Vec<u32>,
}

impl fmt::Display for Stratum {
    /// Dimension vector followed by the nonzero entries of the rank key as
    /// `index:rank`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.dims)?;
        let mut first = true;
        for (i, k) in self.key.iter().enumerate().filter(|(_, &k)| k > 0) {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{i}:{k}")?;
        }
        write!(f, "]")
    }
}

/// Finitely supported function on strata with exact rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HallElement {
    terms: BTreeMap<Stratum, BigRational>,
}

impl HallElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(s: Stratum) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(s, BigRational::one());
        Self { terms }
    }

    pub fn terms(&self) -> &BTreeMap<Stratum, BigRational> {
        &self.terms
    }

    pub fn coefficient(&self, s: &Stratum) -> BigRational {
        self.terms.get(s).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, s: Stratum, c: BigRational) {
        let entry = self.terms.entry(s).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(s.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(s, v)| (s.clone(), v * c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    /// Dimension vectors present in the support.
    pub fn degrees(&self) -> BTreeSet<DimVector> {
        self.terms.keys().map(|s| s.dims.clone()).collect()
    }

    pub fn to_strings(&self) -> Vec<(String, String)> {
        self.terms
            .iter()
            .map(|(s, c)| (s.to_string(), rational_to_string(c)))
            .collect()
    }
}

/// Structure constant `χ(G_{AB}^C)` for one triple of strata.
#[derive(Clone, Debug, Serialize)]
pub struct EulerConstantRecord {
    pub sub: Stratum,
    pub quotient: Stratum,
    pub target: Stratum,
    pub primes: Vec<u32>,
    pub counts: Vec<u64>,
    pub polynomial: RationalPolynomial,
    pub held_out: u32,
    pub held_out_count: u64,
    pub held_out_ok: bool,
    pub value_at_one: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrimeSchedule {
    pub primes: Vec<u32>,
    pub held_out: u32,
    /// Larger sample set used when the held-out prime disagrees.
    pub escalation: Option<(Vec<u32>, u32)>,
}

impl Default for PrimeSchedule {
    fn default() -> Self {
        Self {
            primes: vec![2, 3, 5],
            held_out: 7,
            escalation: Some((vec![2, 3, 5, 7, 11], 13)),
        }
    }
}

impl PrimeSchedule {
    pub fn validate(&self) -> Result<()> {
        let check = |primes: &[u32], held: u32| -> Result<()> {
            if primes.len() < 3 {
                return Err(Error::Config("at least three sample primes are required".into()));
            }
            let set: BTreeSet<_> = primes.iter().collect();
            if set.len() != primes.len() {
                return Err(Error::Config("sample primes must be distinct".into()));
            }
            if set.contains(&held) {
                return Err(Error::Config(format!("held-out prime {held} is also a sample prime")));
            }
            for &p in primes.iter().chain([&held]) {
                PrimeField::new(p)?;
            }
            Ok(())
        };
        check(&self.primes, self.held_out)?;
        if let Some((p, h)) = &self.escalation {
            check(p, *h)?;
        }
        Ok(())
    }
}

/// Counts for one (sub dims, target dims) pair at one prime, keyed by strata.
type PrimeCounts = BTreeMap<(Stratum, Stratum, Stratum), u64>;

pub struct HallAlgebra {
    graph: SimplyLacedGraph,
    schedule: PrimeSchedule,
    caps: EnumerationCaps,
    caches: BTreeMap<u32, CatalogCache>,
    constants: HashMap<(DimVector, DimVector), Vec<EulerConstantRecord>>,
    strata: HashMap<DimVector, Vec<Stratum>>,
}

impl HallAlgebra {
    pub fn new(graph: &SimplyLacedGraph, schedule: PrimeSchedule, caps: EnumerationCaps) -> Result<Self> {
        schedule.validate()?;
        Ok(Self {
            graph: graph.clone(),
            schedule,
            caps,
            caches: BTreeMap::new(),
            constants: HashMap::new(),
            strata: HashMap::new(),
        })
    }

    pub fn graph(&self) -> &SimplyLacedGraph {
        &self.graph
    }

    fn cache(&mut self, p: u32) -> Result<&mut CatalogCache> {
        if !self.caches.contains_key(&p) {
            let field = PrimeField::new(p)?;
            self.caches.insert(p, CatalogCache::new(&self.graph, &field, self.caps));
        }
        Ok(self.caches.get_mut(&p).expect("inserted above"))
    }

    /// Strata of a dimension vector at one prime, one entry per class.
    fn class_strata(&mut self, p: u32, dims: &DimVector) -> Result<Vec<Stratum>> {
        let cat = self.cache(p)?.catalog(dims)?;
        Ok(cat
            .classes()
            .iter()
            .map(|c| Stratum {
                dims: dims.clone(),
                key: c.stable_key.clone(),
            })
            .collect())
    }

    /// The strata of `dims`; they must agree across every prime used.
    pub fn strata(&mut self, dims: &DimVector) -> Result<Vec<Stratum>> {
        if let Some(s) = self.strata.get(dims) {
            return Ok(s.clone());
        }
        let mut reference: Option<BTreeSet<Stratum>> = None;
        for p in self.schedule.primes.clone().into_iter().chain([self.schedule.held_out]) {
            let set: BTreeSet<Stratum> = self.class_strata(p, dims)?.into_iter().collect();
            match &reference {
                None => reference = Some(set),
                Some(r) if *r != set => {
                    return Err(Error::Hall(format!(
                        "rank strata of {dims} differ between primes; classes cannot be matched"
                    )))
                }
                _ => {}
            }
        }
        let out: Vec<Stratum> = reference.unwrap_or_default().into_iter().collect();
        self.strata.insert(dims.clone(), out.clone());
        Ok(out)
    }

    /// The unique stratum of the simple `C(i)`.
    pub fn simple(&mut self, i: usize) -> Result<Stratum> {
        let dims = DimVector::unit(self.graph.vertex_count(), i);
        let s = self.strata(&dims)?;
        Ok(s[0].clone())
    }

    pub fn theta(&mut self, i: usize) -> Result<HallElement> {
        Ok(HallElement::basis(self.simple(i)?))
    }

    fn counts_at(&mut self, p: u32, sub: &DimVector, target: &DimVector) -> Result<PrimeCounts> {
        let quo = target
            .checked_sub(sub)
            .ok_or_else(|| Error::Hall(format!("{sub} does not fit in {target}")))?;
        let sub_strata = self.class_strata(p, sub)?;
        let quo_strata = self.class_strata(p, &quo)?;
        let target_strata = self.class_strata(p, target)?;
        let reps: Vec<_> = self
            .cache(p)?
            .catalog(target)?
            .classes()
            .iter()
            .map(|c| c.representative.clone())
            .collect();
        // per target stratum, the aggregated profile must not depend on the class
        let mut per_stratum: BTreeMap<Stratum, BTreeMap<(Stratum, Stratum), u64>> = BTreeMap::new();
        for (cid, rep) in reps.iter().enumerate() {
            let profile = subobject_profile(self.cache(p)?, rep, sub)?;
            let mut agg: BTreeMap<(Stratum, Stratum), u64> = BTreeMap::new();
            for ((a, b), n) in profile {
                *agg.entry((sub_strata[a].clone(), quo_strata[b].clone())).or_insert(0) += n;
            }
            let s = target_strata[cid].clone();
            match per_stratum.get(&s) {
                Some(prev) if *prev != agg => {
                    return Err(Error::Hall(format!(
                        "subobject counts vary inside stratum {s} over F_{p}"
                    )))
                }
                Some(_) => {}
                None => {
                    per_stratum.insert(s, agg);
                }
            }
        }
        let mut out = PrimeCounts::new();
        for (c, agg) in per_stratum {
            for ((a, b), n) in agg {
                out.insert((a, b, c.clone()), n);
            }
        }
        Ok(out)
    }

    fn records_with(&mut self, sub: &DimVector, target: &DimVector, primes: &[u32], held_out: u32) -> Result<Vec<EulerConstantRecord>> {
        let mut tables = Vec::new();
        for &p in primes.iter().chain([&held_out]) {
            tables.push(self.counts_at(p, sub, target)?);
        }
        let keys: BTreeSet<_> = tables.iter().flat_map(|t| t.keys().cloned()).collect();
        let mut out = Vec::new();
        for key in keys {
            let counts: Vec<u64> = tables.iter().map(|t| t.get(&key).copied().unwrap_or(0)).collect();
            let samples: Vec<(u64, u64)> = primes.iter().map(|&p| p as u64).zip(counts.iter().copied()).collect();
            let polynomial = interpolate_counts(&samples)?;
            let held_out_count = *counts.last().expect("held-out count present");
            let held_out_ok = polynomial.predicts(held_out as u64, held_out_count);
            let v = polynomial.value_at_one();
            let value_at_one = as_integer(&v).ok_or_else(|| {
                Error::Hall(format!(
                    "Euler characteristic {} of ({}, {}, {}) is not an integer",
                    rational_to_string(&v),
                    key.0,
                    key.1,
                    key.2
                ))
            })?;
            out.push(EulerConstantRecord {
                sub: key.0,
                quotient: key.1,
                target: key.2,
                primes: primes.to_vec(),
                counts: counts[..primes.len()].to_vec(),
                polynomial,
                held_out,
                held_out_count,
                held_out_ok,
                value_at_one,
            });
        }
        Ok(out)
    }

    /// All structure constants `χ(G_{AB}^C)` with `dim A = sub` and
    /// `dim C = target`, validated on the held-out prime.
    pub fn constants(&mut self, sub: &DimVector, target: &DimVector) -> Result<Vec<EulerConstantRecord>> {
        let key = (sub.clone(), target.clone());
        if let Some(r) = self.constants.get(&key) {
            return Ok(r.clone());
        }
        let PrimeSchedule {
            primes,
            held_out,
            escalation,
        } = self.schedule.clone();
        let mut records = self.records_with(sub, target, &primes, held_out)?;
        if records.iter().any(|r| !r.held_out_ok) {
            if let Some((more, held)) = escalation {
                records = self.records_with(sub, target, &more, held)?;
            }
        }
        if let Some(bad) = records.iter().find(|r| !r.held_out_ok) {
            return Err(Error::Hall(format!(
                "counting polynomial {} for ({}, {}, {}) mispredicts q = {} ({} points)",
                bad.polynomial.pretty(),
                bad.sub,
                bad.quotient,
                bad.target,
                bad.held_out,
                bad.held_out_count
            )));
        }
        self.constants.insert(key, records.clone());
        Ok(records)
    }

    /// Every record computed so far, in canonical order.
    pub fn all_records(&self) -> Vec<EulerConstantRecord> {
        let mut keys: Vec<_> = self.constants.keys().cloned().collect();
        keys.sort();
        keys.iter().flat_map(|k| self.constants[k].clone()).collect()
    }

    /// `χ(G_{AB}^C)` for explicit strata.
    pub fn euler_hall_constant(&mut self, a: &Stratum, b: &Stratum, c: &Stratum) -> Result<EulerConstantRecord> {
        if a.dims.add(&b.dims) != c.dims {
            return Err(Error::Hall("dimension vectors do not add up".into()));
        }
        let records = self.constants(&a.dims, &c.dims)?;
        if let Some(r) = records.iter().find(|r| r.sub == *a && r.quotient == *b && r.target == *c) {
            return Ok(r.clone());
        }
        let PrimeSchedule { primes, held_out, .. } = self.schedule.clone();
        Ok(EulerConstantRecord {
            sub: a.clone(),
            quotient: b.clone(),
            target: c.clone(),
            counts: vec![0; primes.len()],
            polynomial: interpolate_counts(&primes.iter().map(|&p| (p as u64, 0)).collect::<Vec<_>>())?,
            primes,
            held_out,
            held_out_count: 0,
            held_out_ok: true,
            value_at_one: 0,
        })
    }

    /// Bilinear extension of `[A] * [B] = Σ_C χ(G_{AB}^C) [C]`.
    pub fn product(&mut self, f: &HallElement, g: &HallElement) -> Result<HallElement> {
        let mut out = HallElement::zero();
        for da in f.degrees() {
            for db in g.degrees() {
                let target = da.add(&db);
                let records = self.constants(&da, &target)?;
                for r in records {
                    if r.quotient.dims != db || r.value_at_one == 0 {
                        continue;
                    }
                    let (ca, cb) = (f.coefficient(&r.sub), g.coefficient(&r.quotient));
                    if ca.is_zero() || cb.is_zero() {
                        continue;
                    }
                    let c = ca * cb * BigRational::from_integer(BigInt::from(r.value_at_one));
                    out.add_term(r.target.clone(), c);
                }
            }
        }
        Ok(out)
    }

    /// `θ_i^k / k!`.
    pub fn divided_power(&mut self, i: usize, k: u32) -> Result<HallElement> {
        let theta = self.theta(i)?;
        let mut acc = self.unit();
        let mut fact = BigInt::one();
        for n in 1..=k {
            acc = self.mul(&acc, &theta)?;
            fact *= n;
        }
        Ok(acc.scale(&BigRational::new(BigInt::one(), fact)))
    }

    /// The unit: the class of the zero representation.
    pub fn unit(&self) -> HallElement {
        let n = self.graph.vertex_count();
        let zero_key = vec![0; self.zero_key_len()];
        HallElement::basis(Stratum {
            dims: DimVector::zero(n),
            key: zero_key,
        })
    }

    fn zero_key_len(&self) -> usize {
        let arrows = self.graph.arrow_count();
        let pairs = (0..arrows)
            .flat_map(|a| (0..arrows).map(move |b| (a, b)))
            .filter(|&(a, b)| self.graph.arrow(a).1 == self.graph.arrow(b).0)
            .count();
        arrows + pairs + 2 * self.graph.vertex_count()
    }

    /// Product with the unit handled without counting.
    pub fn mul(&mut self, f: &HallElement, g: &HallElement) -> Result<HallElement> {
        let unit = self.unit();
        if *f == unit {
            return Ok(g.clone());
        }
        if *g == unit {
            return Ok(f.clone());
        }
        self.product(f, g)
    }

    /// Product of generators along a word of vertices.
    pub fn word(&mut self, w: &[usize]) -> Result<HallElement> {
        let mut acc = self.unit();
        for &i in w {
            let t = self.theta(i)?;
            acc = self.mul(&acc, &t)?;
        }
        Ok(acc)
    }
}

/// `Σ_k (-1)^k θ_i^{(k)} θ_j θ_i^{(n-k)}`, `n = 1 - a_ij`.
pub fn serre_check(h: &mut HallAlgebra, cartan: &[Vec<i64>], i: usize, j: usize) -> Result<HallElement> {
    if i == j {
        return Err(Error::Hall("Serre relation needs distinct vertices".into()));
    }
    let n = (1 - cartan[i][j]) as u32;
    let theta_j = h.theta(j)?;
    let mut total = HallElement::zero();
    for k in 0..=n {
        let left = h.divided_power(i, k)?;
        let right = h.divided_power(i, n - k)?;
        let term = h.mul(&left, &theta_j)?;
        let term = h.mul(&term, &right)?;
        let sign = if k % 2 == 0 { BigRational::one() } else { -BigRational::one() };
        total = total.add(&term.scale(&sign));
    }
    Ok(total)
}

/// All words in `generators` with letter counts `alpha`.
pub fn words(alpha: &DimVector, generators: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut remaining = alpha.0.clone();
    let total = alpha.total() as usize;
    let mut cur = Vec::with_capacity(total);
    fn go(rem: &mut Vec<u32>, gens: &[usize], cur: &mut Vec<usize>, total: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == total {
            out.push(cur.clone());
            return;
        }
        for &g in gens {
            if rem[g] > 0 {
                rem[g] -= 1;
                cur.push(g);
                go(rem, gens, cur, total, out);
                cur.pop();
                rem[g] += 1;
            }
        }
    }
    if alpha.support().iter().all(|v| generators.contains(v)) {
        go(&mut remaining, generators, &mut cur, total, &mut out);
    }
    out
}

/// Dimension of the degree-`alpha` part of the subalgebra generated by the
/// `θ_i`, `i` in `generators`.
pub fn composition_dim(h: &mut HallAlgebra, alpha: &DimVector, generators: &[usize]) -> Result<usize> {
    let ws = words(alpha, generators);
    if ws.is_empty() {
        return Ok(0);
    }
    let mut memo: HashMap<Vec<usize>, HallElement> = HashMap::new();
    let mut elements = Vec::with_capacity(ws.len());
    for w in &ws {
        // reuse the longest computed prefix
        let mut start = w.len();
        while start > 0 && !memo.contains_key(&w[..start]) {
            start -= 1;
        }
        let mut acc = if start == 0 { h.unit() } else { memo[&w[..start]].clone() };
        for n in start..w.len() {
            let t = h.theta(w[n])?;
            acc = h.mul(&acc, &t)?;
            memo.insert(w[..=n].to_vec(), acc.clone());
        }
        elements.push(acc);
    }
    let strata = h.strata(alpha)?;
    let rows: Vec<Vec<BigRational>> = elements
        .iter()
        .map(|e| strata.iter().map(|s| e.coefficient(s)).collect())
        .collect();
    Ok(rational_rank(&rows))
}
