//! The positive part of the Kac–Moody algebra of a symmetric Cartan matrix,
//! presented by Chevalley generators and Serre relations, cut off by degree.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::dquiver::{DimVector, SimplyLacedGraph};
use crate::error::{Error, Result};
use crate::ffla::{integer_det, rational_rank};
use crate::hall::{composition_dim, words, HallAlgebra};

pub type Word = Vec<usize>;

/// Element of the free associative algebra on `e_0, .., e_{n-1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeElement {
    terms: BTreeMap<Word, BigRational>,
}

impl FreeElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(w: Word) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(w, BigRational::one());
        Self { terms }
    }

    pub fn terms(&self) -> &BTreeMap<Word, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, w: Word, c: BigRational) {
        let e = self.terms.entry(w.clone()).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&w);
        }
    }

    /// `u * self * v` for monomials `u`, `v`.
    pub fn sandwich(&self, u: &[usize], v: &[usize]) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            let mut nw = u.to_vec();
            nw.extend_from_slice(w);
            nw.extend_from_slice(v);
            out.add_term(nw, c.clone());
        }
        out
    }

    /// Multidegree, if homogeneous.
    pub fn degree(&self, n: usize) -> Option<DimVector> {
        let mut degs = self.terms.keys().map(|w| {
            let mut d = vec![0u32; n];
            for &i in w {
                d[i] += 1;
            }
            DimVector(d)
        });
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }
}

fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, n| acc * n)
}

/// `Σ_k (-1)^k e_i^{(k)} e_j e_i^{(n-k)}`, `n = 1 - a_ij`.
pub fn serre_element(i: usize, j: usize, cartan: &[Vec<i64>]) -> Result<FreeElement> {
    if i == j {
        return Err(Error::KacMoody("Serre element needs distinct indices".into()));
    }
    let n = (1 - cartan[i][j]) as u32;
    let mut out = FreeElement::zero();
    for k in 0..=n {
        let mut w = vec![i; k as usize];
        w.push(j);
        w.extend(std::iter::repeat_n(i, (n - k) as usize));
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let c = BigRational::new(BigInt::from(sign), factorial(k) * factorial(n - k));
        out.add_term(w, c);
    }
    Ok(out)
}

fn serre_degree(i: usize, j: usize, cartan: &[Vec<i64>]) -> DimVector {
    let mut d = vec![0u32; cartan.len()];
    d[i] = (1 - cartan[i][j]) as u32;
    d[j] += 1;
    DimVector(d)
}

fn all_vertices(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Every dimension vector `β ≤ α` componentwise.
fn sub_vectors(alpha: &DimVector) -> Vec<DimVector> {
    let mut out = vec![Vec::new()];
    for &a in &alpha.0 {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u32>| {
                (0..=a).map(move |k| {
                    let mut v = v.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(DimVector).collect()
}

#[derive(Clone, Debug)]
pub struct SerreIdealSlice {
    pub alpha: DimVector,
    pub spanning: Vec<FreeElement>,
    pub rank: usize,
}

fn rank_in(alpha: &DimVector, elements: &[FreeElement]) -> usize {
    let basis = words(alpha, &all_vertices(alpha.len()));
    let index: BTreeMap<&Word, usize> = basis.iter().enumerate().map(|(k, w)| (w, k)).collect();
    let rows: Vec<Vec<BigRational>> = elements
        .iter()
        .map(|e| {
            let mut row = vec![BigRational::zero(); basis.len()];
            for (w, c) in e.terms() {
                row[index[w]] = c.clone();
            }
            row
        })
        .collect();
    rational_rank(&rows)
}

/// Degree-`alpha` piece of the two-sided ideal generated by the Serre
/// elements, spanned by `u * r * v`.
pub fn serre_ideal_slice(cartan: &[Vec<i64>], alpha: &DimVector) -> Result<SerreIdealSlice> {
    let n = cartan.len();
    let gens = all_vertices(n);
    let mut spanning = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let beta = serre_degree(i, j, cartan);
            let Some(rest) = alpha.checked_sub(&beta) else { continue };
            let r = serre_element(i, j, cartan)?;
            for left in sub_vectors(&rest) {
                let right = rest.checked_sub(&left).expect("left is below rest");
                let lws = words(&left, &gens);
                let rws = words(&right, &gens);
                for u in &lws {
                    for v in &rws {
                        spanning.push(r.sandwich(u, v));
                    }
                }
            }
        }
    }
    let rank = rank_in(alpha, &spanning);
    Ok(SerreIdealSlice {
        alpha: alpha.clone(),
        spanning,
        rank,
    })
}

/// Rank of the degree-`alpha` slice after adding `e_k * I_{α-α_k}` (left)
/// or `I_{α-α_k} * e_k` (right). A two-sided slice is unchanged.
pub fn one_sided_rank(cartan: &[Vec<i64>], alpha: &DimVector, left: bool) -> Result<usize> {
    let n = cartan.len();
    let mut els = serre_ideal_slice(cartan, alpha)?.spanning;
    for k in 0..n {
        if let Some(lower) = alpha.checked_sub(&DimVector::unit(n, k)) {
            for e in serre_ideal_slice(cartan, &lower)?.spanning {
                els.push(if left { e.sandwich(&[k], &[]) } else { e.sandwich(&[], &[k]) });
            }
        }
    }
    Ok(rank_in(alpha, &els))
}

pub fn multinomial(alpha: &DimVector) -> u64 {
    let mut num: u64 = 1;
    let mut k: u64 = 0;
    for &a in &alpha.0 {
        for t in 1..=a as u64 {
            k += 1;
            num = num * k / t;
        }
    }
    num
}

/// `dim U(g⁺)_α` = monomials of degree `α` minus the Serre slice rank.
pub fn positive_part_dim(cartan: &[Vec<i64>], alpha: &DimVector) -> Result<usize> {
    let slice = serre_ideal_slice(cartan, alpha)?;
    Ok(multinomial(alpha) as usize - slice.rank)
}

pub fn is_positive_definite(cartan: &[Vec<i64>]) -> bool {
    (1..=cartan.len()).all(|k| {
        let minor: Vec<Vec<i64>> = cartan[..k].iter().map(|r| r[..k].to_vec()).collect();
        integer_det(&minor) > BigInt::zero()
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RootSystemData {
    pub cartan: Vec<Vec<i64>>,
    pub positive_roots: Vec<DimVector>,
}

impl RootSystemData {
    /// Positive roots by closing the simple roots under simple reflections.
    pub fn new(cartan: &[Vec<i64>]) -> Result<Self> {
        if !is_positive_definite(cartan) {
            return Err(Error::KacMoody("root closure needs a finite-type Cartan matrix".into()));
        }
        let n = cartan.len();
        let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
        let mut queue: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
            .collect();
        while let Some(beta) = queue.pop() {
            if !seen.insert(beta.clone()) {
                continue;
            }
            for i in 0..n {
                let pairing: i64 = (0..n).map(|j| beta[j] * cartan[j][i]).sum();
                let mut r = beta.clone();
                r[i] -= pairing;
                if r.iter().all(|&c| c >= 0) && r.iter().any(|&c| c > 0) && !seen.contains(&r) {
                    queue.push(r);
                }
            }
        }
        let positive_roots = seen
            .into_iter()
            .map(|v| DimVector(v.into_iter().map(|c| c as u32).collect()))
            .collect();
        Ok(Self {
            cartan: cartan.to_vec(),
            positive_roots,
        })
    }
}

/// Number of positive roots of the simply laced finite types.
pub fn classical_root_count(kind: char, rank: usize) -> Option<usize> {
    match (kind, rank) {
        ('A', n) if n >= 1 => Some(n * (n + 1) / 2),
        ('D', n) if n >= 4 => Some(n * (n - 1)),
        ('E', 6) => Some(36),
        ('E', 7) => Some(63),
        ('E', 8) => Some(120),
        _ => None,
    }
}

/// Multisets of positive roots summing to `alpha`.
pub fn pbw_dim(roots: &RootSystemData, alpha: &DimVector) -> u64 {
    let mut ways: BTreeMap<DimVector, u64> = BTreeMap::new();
    ways.insert(DimVector::zero(alpha.len()), 1);
    for r in &roots.positive_roots {
        // unbounded knapsack: iterate targets in increasing order
        let mut targets: Vec<DimVector> = sub_vectors(alpha);
        targets.sort_by_key(|d| d.total());
        for t in targets {
            if let Some(prev) = t.checked_sub(r) {
                let add = ways.get(&prev).copied().unwrap_or(0);
                if add > 0 {
                    *ways.entry(t).or_insert(0) += add;
                }
            }
        }
    }
    ways.get(alpha).copied().unwrap_or(0)
}

/// Dimension vectors of total degree `1..=cap`.
pub fn degrees_up_to(n: usize, cap: u32) -> Vec<DimVector> {
    let mut out = Vec::new();
    fn go(n: usize, rem: u32, cur: &mut Vec<u32>, out: &mut Vec<DimVector>) {
        if cur.len() == n {
            out.push(DimVector(cur.clone()));
            return;
        }
        for k in 0..=rem {
            cur.push(k);
            go(n, rem - k, cur, out);
            cur.pop();
        }
    }
    go(n, cap, &mut Vec::new(), &mut out);
    out.retain(|d| d.total() > 0);
    out.sort_by(|a, b| a.total().cmp(&b.total()).then_with(|| b.0.cmp(&a.0)));
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct DimsRow {
    pub alpha: DimVector,
    pub free_dim: u64,
    pub ideal_rank: usize,
    pub positive_dim: usize,
    pub pbw_dim: Option<u64>,
    pub hall_dim: Option<usize>,
    /// Hall side equals the positive part (recorded, not asserted).
    pub hall_equal: Option<bool>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DimsReport {
    pub cap: u32,
    pub hall_cap: u32,
    pub rows: Vec<DimsRow>,
}

impl DimsReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// For every `α` with `|α| ≤ cap`: compare the Hall composition dimension
/// (when `|α| ≤ hall_cap`), the Serre-presented dimension and, on
/// finite-type supports, the PBW count.
pub fn dims_compare(hall: &mut HallAlgebra, graph: &SimplyLacedGraph, cap: u32, hall_cap: u32, generators: &[usize]) -> Result<DimsReport> {
    let cartan = graph.cartan();
    let n = graph.vertex_count();
    let mut rows = Vec::new();
    for alpha in degrees_up_to(n, cap) {
        let support = alpha.support();
        if !support.iter().all(|v| generators.contains(v)) {
            continue;
        }
        let slice = serre_ideal_slice(&cartan, &alpha)?;
        let free_dim = multinomial(&alpha);
        let positive_dim = free_dim as usize - slice.rank;
        let sub = graph.induced(&support);
        let sub_cartan = sub.cartan();
        let pbw = if is_positive_definite(&sub_cartan) {
            let roots = RootSystemData::new(&sub_cartan)?;
            Some(pbw_dim(&roots, &DimVector(support.iter().map(|&v| alpha.0[v]).collect())))
        } else {
            None
        };
        // cyclic supports carry moduli whose strata change in characteristic 2
        let hall_dim = if alpha.total() <= hall_cap && !sub.has_cycle() {
            Some(composition_dim(hall, &alpha, generators)?)
        } else {
            None
        };
        let mut passed = pbw.is_none_or(|p| p == positive_dim as u64);
        if let Some(h) = hall_dim {
            passed &= h <= positive_dim;
            if pbw.is_some() {
                // on finite-type supports the composition algebra is the whole positive part
                passed &= h == positive_dim;
            }
        }
        rows.push(DimsRow {
            alpha,
            free_dim,
            ideal_rank: slice.rank,
            positive_dim,
            pbw_dim: pbw,
            hall_dim,
            hall_equal: hall_dim.map(|h| h == positive_dim),
            passed,
        });
    }
    Ok(DimsReport { cap, hall_cap, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a2() -> Vec<Vec<i64>> {
        vec![vec![2, -1], vec![-1, 2]]
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn serre_elements() {
        let e = serre_element(0, 1, &a2()).unwrap();
        assert_eq!(e.terms().len(), 3);
        assert_eq!(e.terms()[&vec![1, 0, 0]], r(1, 2));
        assert_eq!(e.terms()[&vec![0, 1, 0]], r(-1, 1));
        assert_eq!(e.terms()[&vec![0, 0, 1]], r(1, 2));
        assert_eq!(e.degree(2), Some(DimVector(vec![2, 1])));
        let c = vec![vec![2, 0], vec![0, 2]];
        let e = serre_element(0, 1, &c).unwrap();
        assert_eq!(e.terms()[&vec![1, 0]], r(1, 1));
        assert_eq!(e.terms()[&vec![0, 1]], r(-1, 1));
    }

    #[test]
    fn a2_dimensions() {
        let c = a2();
        for (alpha, want) in [(vec![1, 1], 2), (vec![2, 1], 2), (vec![2, 2], 3), (vec![3, 1], 2), (vec![3, 0], 1)] {
            let a = DimVector(alpha);
            assert_eq!(positive_part_dim(&c, &a).unwrap(), want, "{a}");
            let roots = RootSystemData::new(&c).unwrap();
            assert_eq!(pbw_dim(&roots, &a), want as u64);
        }
    }

    #[test]
    fn root_counts() {
        let path = |n| SimplyLacedGraph::path(n).cartan();
        for n in 1..=6 {
            let roots = RootSystemData::new(&path(n)).unwrap();
            assert_eq!(Some(roots.positive_roots.len()), classical_root_count('A', n));
        }
        let d4 = SimplyLacedGraph::new(4, &[(0, 1), (1, 2), (1, 3)]).unwrap().cartan();
        assert_eq!(RootSystemData::new(&d4).unwrap().positive_roots.len(), 12);
        let e6 = SimplyLacedGraph::new(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (2, 5)]).unwrap().cartan();
        assert_eq!(RootSystemData::new(&e6).unwrap().positive_roots.len(), 36);
    }

    #[test]
    fn slices_are_two_sided() {
        let c = SimplyLacedGraph::path(3).cartan();
        for alpha in degrees_up_to(3, 4) {
            let full = serre_ideal_slice(&c, &alpha).unwrap().rank;
            assert_eq!(one_sided_rank(&c, &alpha, true).unwrap(), full);
            assert_eq!(one_sided_rank(&c, &alpha, false).unwrap(), full);
        }
    }

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(&DimVector(vec![2, 1, 1])), 12);
        assert_eq!(multinomial(&DimVector(vec![0, 3])), 1);
    }
}
