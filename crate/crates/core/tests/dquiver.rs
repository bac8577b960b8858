use std::collections::{BTreeMap, BTreeSet, HashMap};

use mckayhall_core::chartab::AffineType;
use mckayhall_core::dquiver::{
    are_isomorphic, enumerate_iso_classes, gl_order, hall_count, subobject_profile, CatalogCache, DimVector, DoubleRep,
    EnumerationCaps, SimplyLacedGraph,
};
use mckayhall_core::ffla::{enumerate_subspaces, gaussian_binomial};
use mckayhall_core::{FpMatrix, PrimeField};
use proptest::prelude::*;

/// Plain nested-vector matrices, independent of the library's linear algebra.
type Mat = Vec<Vec<u64>>;

fn mat_mul(a: &Mat, b: &Mat, inner: usize, q: u64) -> Mat {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..cols).map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum::<u64>() % q).collect())
        .collect()
}

fn all_matrices(r: usize, c: usize, q: u64) -> Vec<Mat> {
    let total = q.pow((r * c) as u32);
    (0..total)
        .map(|mut code| {
            (0..r)
                .map(|_| {
                    (0..c)
                        .map(|_| {
                            let d = code % q;
                            code /= q;
                            d
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn det(m: &Mat, q: u64) -> u64 {
    // cofactor expansion, fine for the tiny sizes used here
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut acc = 0i64;
    for j in 0..n {
        let minor: Mat = m[1..].iter().map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &x)| x).collect()).collect();
        let term = (m[0][j] * det(&minor, q)) as i64 % q as i64;
        acc += if j % 2 == 0 { term } else { -term };
    }
    acc.rem_euclid(q as i64) as u64
}

fn inverse(m: &Mat, all: &[Mat], q: u64) -> Mat {
    let n = m.len();
    let id: Mat = (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect();
    all.iter().find(|x| mat_mul(m, x, n, q) == id).unwrap().clone()
}

struct Brute {
    orbit_sizes: Vec<u64>,
    points: usize,
}

/// Relation points and their orbits under `Π GL(V_i)`, by exhaustive search.
fn brute_orbits(graph: &SimplyLacedGraph, dims: &[usize], q: u64) -> Brute {
    let arrows = graph.arrow_count();
    let shapes: Vec<(usize, usize)> = (0..arrows)
        .map(|k| {
            let (t, s) = graph.arrow(k);
            (dims[t], dims[s])
        })
        .collect();
    let choices: Vec<Vec<Mat>> = shapes.iter().map(|&(r, c)| all_matrices(r, c, q)).collect();
    let mut points: Vec<Vec<Mat>> = vec![vec![]];
    for ch in &choices {
        points = points
            .into_iter()
            .flat_map(|p| {
                ch.iter().map(move |m| {
                    let mut p = p.clone();
                    p.push(m.clone());
                    p
                })
            })
            .collect();
    }
    let satisfies = |maps: &[Mat]| {
        (0..graph.vertex_count()).all(|v| {
            let d = dims[v];
            let mut acc = vec![vec![0u64; d]; d];
            for k in 0..arrows {
                let (t, s) = graph.arrow(k);
                if t == v {
                    // x_{v s} x_{s v}: the reverse arrow is k ^ 1
                    let prod = mat_mul(&maps[k], &maps[k ^ 1], dims[s], q);
                    for i in 0..d {
                        for j in 0..d {
                            acc[i][j] = (acc[i][j] + prod[i][j]) % q;
                        }
                    }
                }
            }
            acc.iter().flatten().all(|&x| x == 0)
        })
    };
    let variety: Vec<Vec<Mat>> = points.into_iter().filter(|m| satisfies(m)).collect();
    let groups: Vec<Vec<(Mat, Mat)>> = dims
        .iter()
        .map(|&d| {
            let all = all_matrices(d, d, q);
            all.iter().filter(|m| det(m, q) != 0).map(|m| (m.clone(), inverse(m, &all, q))).collect()
        })
        .collect();
    let index: HashMap<Vec<Mat>, usize> = variety.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let mut seen = vec![false; variety.len()];
    let mut orbit_sizes = Vec::new();
    let n = dims.len();
    for start in 0..variety.len() {
        if seen[start] {
            continue;
        }
        let mut orbit = BTreeSet::new();
        let mut idx = vec![0usize; n];
        loop {
            let image: Vec<Mat> = (0..arrows)
                .map(|k| {
                    let (t, s) = graph.arrow(k);
                    let m = mat_mul(&groups[t][idx[t]].0, &variety[start][k], dims[t], q);
                    mat_mul(&m, &groups[s][idx[s]].1, dims[s], q)
                })
                .collect();
            let j = index[&image];
            seen[j] = true;
            orbit.insert(j);
            let mut v = 0;
            while v < n {
                idx[v] += 1;
                if idx[v] < groups[v].len() {
                    break;
                }
                idx[v] = 0;
                v += 1;
            }
            if v == n {
                break;
            }
        }
        orbit_sizes.push(orbit.len() as u64);
    }
    orbit_sizes.sort_unstable();
    Brute {
        orbit_sizes,
        points: variety.len(),
    }
}

fn field(p: u32) -> PrimeField {
    PrimeField::new(p).unwrap()
}

#[test]
fn catalogs_match_brute_force_orbits() {
    let edge = SimplyLacedGraph::path(2);
    let a3 = SimplyLacedGraph::path(3);
    let triangle = SimplyLacedGraph::affine(AffineType::A(2)).unwrap();
    let cases: Vec<(&SimplyLacedGraph, Vec<usize>, u32)> = vec![
        (&edge, vec![1, 1], 2),
        (&edge, vec![1, 1], 3),
        (&edge, vec![2, 1], 2),
        (&edge, vec![2, 1], 3),
        (&edge, vec![1, 2], 3),
        (&edge, vec![2, 2], 2),
        (&a3, vec![1, 1, 1], 2),
        (&a3, vec![1, 1, 1], 3),
        (&a3, vec![1, 2, 1], 2),
        (&triangle, vec![1, 1, 1], 2),
        (&triangle, vec![1, 1, 1], 3),
    ];
    for (g, dims, p) in cases {
        let dv = DimVector(dims.iter().map(|&d| d as u32).collect());
        let mut cache = CatalogCache::new(g, &field(p), EnumerationCaps::default());
        let cat = cache.catalog(&dv).unwrap();
        let brute = brute_orbits(g, &dims, p as u64);
        assert_eq!(cat.variety_size(), brute.points as u64, "{dv} q={p}");
        let mut sizes: Vec<u64> = cat.classes().iter().map(|c| c.orbit_size).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, brute.orbit_sizes, "{dv} q={p}");
        for c in cat.classes() {
            assert!(c.representative.satisfies_relation(g));
            assert_eq!(cat.group_order() % c.orbit_size as u128, 0);
        }
    }
}

#[test]
fn spec_class_counts() {
    let edge = SimplyLacedGraph::path(2);
    let caps = EnumerationCaps::default();
    for p in [2, 3, 5] {
        assert_eq!(enumerate_iso_classes(&edge, &DimVector(vec![1, 1]), &field(p), &caps).unwrap().len(), 3);
        assert_eq!(enumerate_iso_classes(&edge, &DimVector(vec![2, 1]), &field(p), &caps).unwrap().len(), 3);
        assert_eq!(enumerate_iso_classes(&edge, &DimVector(vec![0, 1]), &field(p), &caps).unwrap().len(), 1);
    }
}

#[test]
fn gl_orders() {
    assert_eq!(gl_order(0, 5), 1);
    assert_eq!(gl_order(1, 5), 4);
    assert_eq!(gl_order(2, 2), 6);
    assert_eq!(gl_order(2, 3), 48);
}

#[test]
fn isomorphism_examples() {
    let g = SimplyLacedGraph::path(2);
    let k = field(5);
    let caps = EnumerationCaps::default();
    let d = DimVector(vec![1, 1]);
    let rep = |x: i64, y: i64| {
        DoubleRep::from_maps(&g, &d, vec![FpMatrix::from_rows(5, &[vec![x]]), FpMatrix::from_rows(5, &[vec![y]])]).unwrap()
    };
    let w = are_isomorphic(&g, &rep(1, 0), &rep(1, 0), &k, &caps).unwrap().unwrap();
    assert_eq!(w.len(), 2);
    assert!(are_isomorphic(&g, &rep(1, 0), &rep(0, 1), &k, &caps).unwrap().is_none());
    // g_0 x g_1^{-1} = 4 x
    let w = are_isomorphic(&g, &rep(1, 0), &rep(4, 0), &k, &caps).unwrap().unwrap();
    assert_eq!(k.div(w[0].get(0, 0), w[1].get(0, 0)), 4);
    let wi: Vec<FpMatrix> = w.iter().map(inv).collect();
    assert_eq!(rep(1, 0).transformed(&g, &w, &wi), rep(4, 0));
    let tiny = EnumerationCaps { variety: 1 << 20, group: 3 };
    assert!(are_isomorphic(&g, &rep(1, 0), &rep(4, 0), &k, &tiny).is_err());
    let other = DimVector(vec![2, 1]);
    assert!(are_isomorphic(&g, &rep(1, 0), &DoubleRep::zero(&g, &other, 5), &k, &caps).is_err());
}

#[test]
fn hall_count_examples() {
    let g = SimplyLacedGraph::path(2);
    for p in [2u32, 3, 5, 7] {
        let mut cache = CatalogCache::new(&g, &field(p), EnumerationCaps::default());
        let s0 = cache.catalog(&DimVector::unit(2, 0)).unwrap().classes()[0].clone();
        let s1 = cache.catalog(&DimVector::unit(2, 1)).unwrap().classes()[0].clone();
        let double = cache.catalog(&DimVector(vec![2, 0])).unwrap().classes()[0].clone();
        assert_eq!(hall_count(&mut cache, &s0, &s0, &double).unwrap(), p as u64 + 1);
        let mixed = cache.catalog(&DimVector(vec![1, 1])).unwrap().classes().to_vec();
        let split = mixed.iter().find(|c| c.representative.maps().iter().all(FpMatrix::is_zero)).unwrap();
        assert_eq!(hall_count(&mut cache, &s0, &s1, split).unwrap(), 1);
        assert_eq!(hall_count(&mut cache, &s1, &s0, split).unwrap(), 1);
        // x_{01} != 0: V_0 is the only subobject
        let x = mixed.iter().find(|c| !c.representative.map(0).is_zero()).unwrap();
        assert_eq!(hall_count(&mut cache, &s0, &s1, x).unwrap(), 1);
        assert_eq!(hall_count(&mut cache, &s1, &s0, x).unwrap(), 0);
        assert!(hall_count(&mut cache, &s0, &s0, x).is_err());
    }
}

#[test]
fn single_vertex_counts_are_gaussian_binomials() {
    let g = SimplyLacedGraph::path(1);
    for p in [2u32, 3] {
        let mut cache = CatalogCache::new(&g, &field(p), EnumerationCaps::default());
        for n in 1..=3u32 {
            for k in 0..=n {
                let c = cache.catalog(&DimVector(vec![n])).unwrap().classes()[0].clone();
                let a = cache.catalog(&DimVector(vec![k])).unwrap().classes()[0].clone();
                let b = cache.catalog(&DimVector(vec![n - k])).unwrap().classes()[0].clone();
                let count = hall_count(&mut cache, &a, &b, &c).unwrap();
                assert_eq!(count as u128, gaussian_binomial(n as usize, k as usize, p as u64));
            }
        }
    }
}

/// Stable subspace tuples, counted without the library's sub/quotient code.
fn stable_tuples(graph: &SimplyLacedGraph, rep: &DoubleRep, sub: &DimVector, k: &PrimeField) -> u64 {
    let per: Vec<Vec<FpMatrix>> = (0..graph.vertex_count())
        .map(|v| enumerate_subspaces(rep.dims().get(v), sub.get(v), k).unwrap().collect())
        .collect();
    let mut count = 0;
    let mut idx = vec![0usize; per.len()];
    loop {
        let ok = (0..graph.arrow_count()).all(|a| {
            let (t, s) = graph.arrow(a);
            let (bt, bs) = (&per[t][idx[t]], &per[s][idx[s]]);
            // image of the source basis stays in the target span
            let image = bs.mul(&rep.map(a).transpose());
            bt.vstack(&image).rank() == bt.rank()
        });
        count += u64::from(ok);
        let mut v = 0;
        while v < per.len() {
            idx[v] += 1;
            if idx[v] < per[v].len() {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
        if v == per.len() {
            return count;
        }
    }
}

fn random_invertible(d: usize, p: u32, seed: &mut u64) -> FpMatrix {
    loop {
        let m = FpMatrix::from_fn(p, d, d, |_, _| {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*seed >> 33) % p as u64) as i64
        });
        if m.det() != 0 {
            return m;
        }
    }
}

fn inv(m: &FpMatrix) -> FpMatrix {
    let n = m.rows();
    let aug = FpMatrix::from_fn(m.p(), n, 2 * n, |r, c| if c < n { m.get(r, c) as i64 } else { i64::from(c - n == r) });
    let red = aug.rref().matrix;
    FpMatrix::from_fn(m.p(), n, n, |r, c| red.get(r, n + c) as i64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn profiles_are_base_change_invariant(p in prop::sample::select(vec![2u32, 3]), pick in 0usize..64, sub_pick in 0usize..8, mut seed in any::<u64>()) {
        let g = SimplyLacedGraph::path(3);
        let k = field(p);
        let dims = DimVector(vec![1, 2, 1]);
        let mut cache = CatalogCache::new(&g, &k, EnumerationCaps::default());
        let classes = cache.catalog(&dims).unwrap().classes().to_vec();
        let c = &classes[pick % classes.len()];
        let subs = [vec![0, 1, 0], vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 0], vec![0, 2, 0], vec![1, 1, 1], vec![0, 0, 1], vec![1, 2, 0]];
        let sub = DimVector(subs[sub_pick].clone());
        let gs: Vec<FpMatrix> = dims.0.iter().map(|&d| random_invertible(d as usize, p, &mut seed)).collect();
        let gi: Vec<FpMatrix> = gs.iter().map(inv).collect();
        let moved = c.representative.transformed(&g, &gs, &gi);
        prop_assert!(moved.satisfies_relation(&g));
        let before = subobject_profile(&mut cache, &c.representative, &sub).unwrap();
        let after = subobject_profile(&mut cache, &moved, &sub).unwrap();
        prop_assert_eq!(&before, &after);
        let total: u64 = before.values().sum();
        prop_assert_eq!(total, stable_tuples(&g, &c.representative, &sub, &k));
    }

    #[test]
    fn classify_agrees_with_stable_keys(p in prop::sample::select(vec![2u32, 3]), mut seed in any::<u64>()) {
        let g = SimplyLacedGraph::path(2);
        let k = field(p);
        let dims = DimVector(vec![2, 2]);
        let mut cache = CatalogCache::new(&g, &k, EnumerationCaps::default());
        let cat = cache.catalog(&dims).unwrap();
        let mut by_key: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for c in cat.classes() {
            *by_key.entry(c.stable_key.clone()).or_default() += 1;
        }
        for c in cat.classes() {
            let gs: Vec<FpMatrix> = dims.0.iter().map(|&d| random_invertible(d as usize, p, &mut seed)).collect();
            let gi: Vec<FpMatrix> = gs.iter().map(inv).collect();
            let moved = c.representative.transformed(&g, &gs, &gi);
            prop_assert_eq!(cat.classify(&moved), Some(c.id));
            prop_assert_eq!(moved.stable_key(&g), c.stable_key.clone());
        }
    }
}
