use std::collections::BTreeMap;

use mckayhall_core::chartab::AffineType;
use mckayhall_core::dquiver::{DimVector, EnumerationCaps, SimplyLacedGraph};
use mckayhall_core::hall::{HallAlgebra, PrimeSchedule};
use mckayhall_core::kacmoody::{
    classical_root_count, degrees_up_to, dims_compare, is_positive_definite, multinomial, one_sided_rank, pbw_dim,
    positive_part_dim, serre_element, serre_ideal_slice, RootSystemData,
};

fn dynkin(n: usize, edges: &[(usize, usize)]) -> SimplyLacedGraph {
    SimplyLacedGraph::new(n, edges).unwrap()
}

fn finite_graphs() -> Vec<(char, usize, SimplyLacedGraph)> {
    let mut out = Vec::new();
    for n in 1..=7 {
        out.push(('A', n, SimplyLacedGraph::path(n)));
    }
    for n in 4..=7 {
        let mut e: Vec<(usize, usize)> = (0..n - 2).map(|i| (i, i + 1)).collect();
        e.push((n - 3, n - 1));
        out.push(('D', n, dynkin(n, &e)));
    }
    for n in 6..=8 {
        let mut e: Vec<(usize, usize)> = (0..n - 2).map(|i| (i, i + 1)).collect();
        e.push((2, n - 1));
        out.push(('E', n, dynkin(n, &e)));
    }
    out
}

#[test]
fn root_counts() {
    for (kind, rank, g) in finite_graphs() {
        let roots = RootSystemData::new(&g.cartan()).unwrap();
        assert_eq!(Some(roots.positive_roots.len()), classical_root_count(kind, rank), "{kind}{rank}");
    }
    let affine = SimplyLacedGraph::affine(AffineType::A(2)).unwrap();
    assert!(!is_positive_definite(&affine.cartan()));
    assert!(RootSystemData::new(&affine.cartan()).is_err());
}

#[test]
fn spec_examples() {
    let a2 = SimplyLacedGraph::path(2).cartan();
    let dims = |v: Vec<u32>| positive_part_dim(&a2, &DimVector(v)).unwrap();
    assert_eq!(dims(vec![1, 0]), 1);
    assert_eq!(dims(vec![1, 1]), 2);
    assert_eq!(dims(vec![2, 1]), 2);
    assert_eq!(dims(vec![1, 2]), 2);
    assert_eq!(dims(vec![2, 2]), 3);
    assert_eq!(dims(vec![3, 1]), 2);
    assert_eq!(multinomial(&DimVector(vec![2, 1])), 3);
    let r = serre_element(0, 1, &a2).unwrap();
    assert_eq!(r.terms().len(), 3);
    assert_eq!(r.degree(2), Some(DimVector(vec![2, 1])));
    // commuting vertices give x_i x_j - x_j x_i
    let a3 = SimplyLacedGraph::path(3).cartan();
    assert_eq!(serre_element(0, 2, &a3).unwrap().terms().len(), 2);
    assert!(serre_element(1, 1, &a3).is_err());
}

#[test]
fn pbw_matches_the_serre_presentation_in_finite_type() {
    let graphs = [
        SimplyLacedGraph::path(4),
        dynkin(4, &[(0, 1), (0, 2), (0, 3)]),
        SimplyLacedGraph::path(3),
    ];
    for g in graphs {
        let cartan = g.cartan();
        let roots = RootSystemData::new(&cartan).unwrap();
        for alpha in degrees_up_to(g.vertex_count(), 4) {
            assert_eq!(positive_part_dim(&cartan, &alpha).unwrap() as u64, pbw_dim(&roots, &alpha), "{alpha}");
        }
    }
}

/// Positive roots of an untwisted affine algebra with multiplicities, from
/// the roots of the finite part: `β + kδ` and `kδ` with multiplicity `rank`.
fn affine_roots(finite: &RootSystemData, delta: &[u32], extra: usize, cap: u32) -> Vec<(Vec<u32>, u64)> {
    let n = delta.len();
    let finite_vertices: Vec<usize> = (0..n).filter(|&v| v != extra).collect();
    let lift = |beta: &DimVector, sign: i64, k: u32| -> Option<Vec<u32>> {
        let mut v: Vec<i64> = delta.iter().map(|&d| (d * k) as i64).collect();
        for (i, &fv) in finite_vertices.iter().enumerate() {
            v[fv] += sign * beta.0[i] as i64;
        }
        v.iter().all(|&c| c >= 0).then(|| v.iter().map(|&c| c as u32).collect())
    };
    let mut out = Vec::new();
    let height: u32 = delta.iter().sum();
    for k in 0..=cap / height + 1 {
        for beta in &finite.positive_roots {
            if let Some(v) = lift(beta, 1, k) {
                out.push((v, 1));
            }
            if k >= 1 {
                if let Some(v) = lift(beta, -1, k) {
                    out.push((v, 1));
                }
            }
        }
        if k >= 1 {
            out.push((delta.iter().map(|&d| d * k).collect(), finite_vertices.len() as u64));
        }
    }
    out.retain(|(v, _)| v.iter().sum::<u32>() <= cap);
    out
}

/// Coefficient of `x^alpha` in `Π (1 - x^β)^{-mult β}`.
fn pbw_with_multiplicities(roots: &[(Vec<u32>, u64)], alpha: &[u32]) -> u64 {
    let targets: Vec<Vec<u32>> = degrees_up_to(alpha.len(), alpha.iter().sum())
        .into_iter()
        .map(|d| d.0)
        .filter(|d| d.iter().zip(alpha).all(|(a, b)| a <= b))
        .chain([vec![0; alpha.len()]])
        .collect();
    let mut ways: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    ways.insert(vec![0; alpha.len()], 1);
    let mut sorted = targets.clone();
    sorted.sort_by_key(|d| d.iter().sum::<u32>());
    for (r, mult) in roots {
        for _ in 0..*mult {
            for t in &sorted {
                if t.iter().zip(r).all(|(a, b)| a >= b) {
                    let prev: Vec<u32> = t.iter().zip(r).map(|(a, b)| a - b).collect();
                    let add = ways.get(&prev).copied().unwrap_or(0);
                    *ways.entry(t.clone()).or_insert(0) += add;
                }
            }
        }
    }
    ways.get(alpha).copied().unwrap_or(0)
}

#[test]
fn affine_positive_parts_match_root_multiplicities() {
    // affine A2 and A3: vertex 0 is the extending vertex, δ = (1, ..., 1)
    for n in [3usize, 4] {
        let g = SimplyLacedGraph::affine(AffineType::A(n - 1)).unwrap();
        let cartan = g.cartan();
        let finite = RootSystemData::new(&g.induced(&(1..n).collect::<Vec<_>>()).cartan()).unwrap();
        let cap = if n == 3 { 5 } else { 4 };
        let roots = affine_roots(&finite, &vec![1; n], 0, cap);
        for alpha in degrees_up_to(n, cap) {
            let want = pbw_with_multiplicities(&roots, &alpha.0);
            assert_eq!(positive_part_dim(&cartan, &alpha).unwrap() as u64, want, "affine A{} {alpha}", n - 1);
        }
    }
}

#[test]
fn dimensions_respect_graph_automorphisms() {
    let triangle = SimplyLacedGraph::affine(AffineType::A(2)).unwrap().cartan();
    for alpha in degrees_up_to(3, 4) {
        let rotated = DimVector(vec![alpha.0[2], alpha.0[0], alpha.0[1]]);
        assert_eq!(positive_part_dim(&triangle, &alpha).unwrap(), positive_part_dim(&triangle, &rotated).unwrap());
    }
    let d4 = dynkin(4, &[(0, 1), (0, 2), (0, 3)]).cartan();
    for alpha in degrees_up_to(4, 4) {
        for perm in [[0, 2, 1, 3], [0, 3, 2, 1], [0, 2, 3, 1]] {
            let moved = DimVector(perm.iter().map(|&k| alpha.0[k]).collect());
            assert_eq!(positive_part_dim(&d4, &alpha).unwrap(), positive_part_dim(&d4, &moved).unwrap());
        }
    }
}

#[test]
fn serre_slices_are_two_sided() {
    let cases = [SimplyLacedGraph::path(3).cartan(), SimplyLacedGraph::affine(AffineType::A(2)).unwrap().cartan()];
    for cartan in cases {
        for alpha in degrees_up_to(3, 4) {
            let rank = serre_ideal_slice(&cartan, &alpha).unwrap().rank;
            assert_eq!(one_sided_rank(&cartan, &alpha, true).unwrap(), rank, "{alpha}");
            assert_eq!(one_sided_rank(&cartan, &alpha, false).unwrap(), rank, "{alpha}");
        }
    }
}

#[test]
fn dims_compare_on_small_graphs() {
    let a3 = SimplyLacedGraph::path(3);
    let mut h = HallAlgebra::new(&a3, PrimeSchedule::default(), EnumerationCaps::default()).unwrap();
    let report = dims_compare(&mut h, &a3, 4, 3, &[0, 1, 2]).unwrap();
    assert!(report.passed());
    let row = report.rows.iter().find(|r| r.alpha == DimVector(vec![1, 1, 1])).unwrap();
    assert_eq!((row.free_dim, row.positive_dim, row.pbw_dim, row.hall_dim), (6, 4, Some(4), Some(4)));

    let tri = SimplyLacedGraph::affine(AffineType::A(2)).unwrap();
    let mut h = HallAlgebra::new(&tri, PrimeSchedule::default(), EnumerationCaps::default()).unwrap();
    let report = dims_compare(&mut h, &tri, 3, 3, &[0, 1, 2]).unwrap();
    assert!(report.passed());
    let cyclic = report.rows.iter().find(|r| r.alpha == DimVector(vec![1, 1, 1])).unwrap();
    assert_eq!(cyclic.hall_dim, None);
    assert_eq!(cyclic.pbw_dim, None);
    for r in &report.rows {
        if let Some(hd) = r.hall_dim {
            assert!(hd <= r.positive_dim);
        }
    }
}
