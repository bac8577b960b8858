use std::collections::BTreeSet;

use mckayhall_core::binpoly::{build_group, choose_modulus, conjugacy_classes, GroupSpec};
use mckayhall_core::chartab::{canonicalize, character_table, mckay_graph, tensor_multiplicities, AffineType};
use mckayhall_core::ffla::is_prime;
use mckayhall_core::PrimeField;

use GroupSpec::*;

/// Smallest prime `p = 1 mod e` not dividing `|G|`, with the extra square
/// roots the quaternion models need, found by direct search.
fn oracle_modulus(spec: GroupSpec) -> u32 {
    let has_sqrt = |p: u32, a: u32| (1..p).any(|x| (x as u64 * x as u64) % p as u64 == a as u64 % p as u64);
    (2..)
        .find(|&p| {
            if !is_prime(p) || (p - 1) % spec.exponent() != 0 || spec.order().is_multiple_of(p) {
                return false;
            }
            match spec {
                Cyclic(_) => true,
                BinaryDihedral(_) | BinaryTetrahedral => has_sqrt(p, p - 1),
                BinaryOctahedral => has_sqrt(p, p - 1) && has_sqrt(p, 2),
                BinaryIcosahedral => has_sqrt(p, p - 1) && has_sqrt(p, 5),
            }
        })
        .unwrap()
}

fn all_specs() -> Vec<GroupSpec> {
    let mut v: Vec<GroupSpec> = (2..=8).map(Cyclic).collect();
    v.extend((2..=5).map(BinaryDihedral));
    v.extend([BinaryTetrahedral, BinaryOctahedral, BinaryIcosahedral]);
    v
}

#[test]
fn modulus_examples() {
    assert_eq!(choose_modulus(&Cyclic(3)).p(), 7);
    assert_eq!(choose_modulus(&BinaryTetrahedral).p(), 13);
    assert_eq!(choose_modulus(&BinaryIcosahedral).p(), 61);
    for spec in all_specs() {
        assert_eq!(choose_modulus(&spec).p(), oracle_modulus(spec), "{spec}");
    }
}

#[test]
fn family_parsing() {
    assert_eq!("A 3".parse::<GroupSpec>().unwrap(), Cyclic(3));
    assert_eq!("d4".parse::<GroupSpec>().unwrap(), BinaryDihedral(4));
    assert_eq!("E8".parse::<GroupSpec>().unwrap(), BinaryIcosahedral);
    assert!("A 1".parse::<GroupSpec>().is_err());
    assert!("G2".parse::<GroupSpec>().is_err());
}

#[test]
fn group_orders_and_class_counts() {
    let cases = [
        (Cyclic(4), 4, 4),
        (BinaryDihedral(2), 8, 5),
        (BinaryDihedral(3), 12, 6),
        (BinaryDihedral(4), 16, 7),
        (BinaryTetrahedral, 24, 7),
        (BinaryOctahedral, 48, 8),
        (BinaryIcosahedral, 120, 9),
    ];
    for (spec, order, classes) in cases {
        let g = build_group(&spec, &choose_modulus(&spec)).unwrap();
        assert_eq!(g.order(), order);
        let c = conjugacy_classes(&g);
        assert_eq!(c.count(), classes, "{spec}");
        assert_eq!(c.count(), spec.affine_vertex_count());
        assert_eq!(c.sizes().iter().sum::<usize>(), order);
        assert_eq!(c.size(c.class_of(g.identity())), 1);
    }
}

#[test]
fn group_invariants() {
    for spec in all_specs() {
        let field = choose_modulus(&spec);
        let g = build_group(&spec, &field).unwrap();
        let k = g.field();
        let distinct: BTreeSet<_> = g.elements().iter().collect();
        assert_eq!(distinct.len(), g.order());
        let c = conjugacy_classes(&g);
        for (i, e) in g.elements().iter().enumerate() {
            let [a, b, cc, d] = e.0;
            assert_eq!(k.sub(k.mul(a, d), k.mul(b, cc)), 1);
            assert_eq!(spec.exponent() as usize % g.element_order(i), 0);
            assert_eq!(g.mul(i, g.inverse(i)), g.identity());
            // conjugation preserves classes and traces
            for h in [1, g.order() / 2, g.order() - 1] {
                let conj = g.mul(g.mul(h, i), g.inverse(h));
                assert_eq!(c.class_of(conj), c.class_of(i));
                let tr = |x: usize| k.add(g.element(x).0[0], g.element(x).0[3]);
                assert_eq!(tr(conj), tr(i));
            }
        }
        // closure: the product of any two listed elements is listed
        let set: BTreeSet<_> = g.elements().iter().copied().collect();
        for x in g.elements().iter().step_by(3) {
            for y in g.elements() {
                let m = x.to_matrix(k.p()).mul(&y.to_matrix(k.p()));
                let e = mckayhall_core::binpoly::GroupElement([m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1)]);
                assert!(set.contains(&e));
            }
        }
    }
}

#[test]
fn wrong_modulus_fails_loudly() {
    // 5 has no primitive cube root of unity
    assert!(build_group(&Cyclic(3), &PrimeField::new(5).unwrap()).is_err());
}

#[test]
fn character_degrees() {
    let degrees = |spec: GroupSpec| {
        let g = build_group(&spec, &choose_modulus(&spec)).unwrap();
        let t = character_table(&g, &conjugacy_classes(&g), 11).unwrap();
        t.sorted_degrees()
    };
    assert_eq!(degrees(Cyclic(3)), vec![1, 1, 1]);
    assert_eq!(degrees(BinaryDihedral(2)), vec![1, 1, 1, 1, 2]);
    assert_eq!(degrees(BinaryTetrahedral), vec![1, 1, 1, 2, 2, 2, 3]);
    assert_eq!(degrees(BinaryOctahedral), vec![1, 1, 2, 2, 2, 3, 3, 4]);
    assert_eq!(degrees(BinaryIcosahedral), vec![1, 2, 2, 3, 3, 4, 4, 5, 6]);
}

#[test]
fn tensor_multiplicity_invariants() {
    for spec in all_specs() {
        let g = build_group(&spec, &choose_modulus(&spec)).unwrap();
        let t = character_table(&g, &conjugacy_classes(&g), 5).unwrap();
        assert!(t.check_row_orthogonality());
        assert!(t.check_column_orthogonality());
        let m = tensor_multiplicities(&t).unwrap();
        let n = t.len();
        for a in 0..n {
            let row: u32 = (0..n).map(|b| m.get(a, b) * t.degree(b)).sum();
            assert_eq!(row, 2 * t.degree(a));
            for b in 0..n {
                assert_eq!(m.get(a, b), m.get(b, a));
                assert!(m.get(a, b) <= 2);
            }
            if g.order() >= 3 {
                assert_eq!(m.get(a, a), 0);
            }
        }
    }
}

#[test]
fn mckay_examples() {
    let spec = Cyclic(3);
    let g = build_group(&spec, &choose_modulus(&spec)).unwrap();
    let (t, m) = canonicalize(&character_table(&g, &conjugacy_classes(&g), 1).unwrap()).unwrap();
    let data = mckay_graph(&spec, &m, &t).unwrap();
    assert_eq!(data.affine_cartan, vec![vec![2, -1, -1], vec![-1, 2, -1], vec![-1, -1, 2]]);
    assert_eq!(data.finite_cartan, vec![vec![2, -1], vec![-1, 2]]);
    assert_eq!(data.leading_minors, vec!["2", "3"]);
    assert_eq!(data.affine_det, "0");

    let spec = BinaryTetrahedral;
    let g = build_group(&spec, &choose_modulus(&spec)).unwrap();
    let (t, m) = canonicalize(&character_table(&g, &conjugacy_classes(&g), 1).unwrap()).unwrap();
    let data = mckay_graph(&spec, &m, &t).unwrap();
    assert_eq!(data.shape, AffineType::E6);
    let mut d = data.dims.clone();
    d.sort_unstable();
    assert_eq!(d, vec![1, 1, 1, 2, 2, 2, 3]);
    assert_eq!(data.kernel_dim, 1);
}

#[test]
fn tables_agree_across_moduli_and_seeds() {
    for spec in [Cyclic(3), Cyclic(5), BinaryDihedral(2), BinaryDihedral(3), BinaryTetrahedral, BinaryOctahedral] {
        let moduli: Vec<u32> = spec.admissible_moduli().take(3).collect();
        let mut seen = Vec::new();
        for (i, &p) in moduli.iter().enumerate() {
            let g = build_group(&spec, &PrimeField::new(p).unwrap()).unwrap();
            let (t, m) = canonicalize(&character_table(&g, &conjugacy_classes(&g), 100 + i as u64).unwrap()).unwrap();
            seen.push((t.degrees().to_vec(), m));
        }
        assert!(seen.windows(2).all(|w| w[0] == w[1]), "{spec}");
    }
}
