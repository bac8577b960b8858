//! Finite subgroups of `SL_2` of types A, D and E, realized as explicit 2x2
//! matrix groups over a prime field where the reduction is faithful.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffla::{is_prime, FpMatrix, PrimeField, MAX_MODULUS};

/// One of the five families of finite subgroups of `SL_2(C)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupSpec {
    /// Cyclic group of order `n`, affine diagram of type `A_{n-1}`.
    Cyclic(u32),
    /// Binary dihedral group of order `4n`, affine diagram of type `D_{n+2}`.
    BinaryDihedral(u32),
    BinaryTetrahedral,
    BinaryOctahedral,
    BinaryIcosahedral,
}

impl GroupSpec {
    pub fn cyclic(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGroup(format!("cyclic order must be >= 2, got {n}")));
        }
        Ok(Self::Cyclic(n))
    }

    pub fn binary_dihedral(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGroup(format!(
                "binary dihedral parameter must be >= 2, got {n}"
            )));
        }
        Ok(Self::BinaryDihedral(n))
    }

    pub fn order(&self) -> u32 {
        match *self {
            Self::Cyclic(n) => n,
            Self::BinaryDihedral(n) => 4 * n,
            Self::BinaryTetrahedral => 24,
            Self::BinaryOctahedral => 48,
            Self::BinaryIcosahedral => 120,
        }
    }

    /// Least common multiple of the element orders.
    pub fn exponent(&self) -> u32 {
        match *self {
            Self::Cyclic(n) => n,
            Self::BinaryDihedral(n) => (2 * n).lcm(&4),
            Self::BinaryTetrahedral => 12,
            Self::BinaryOctahedral => 24,
            Self::BinaryIcosahedral => 60,
        }
    }

    /// Label in ADE notation: `A3` for the cyclic group of order 3, `D2` for
    /// the binary dihedral group of order 8, `E6`/`E7`/`E8`.
    pub fn label(&self) -> String {
        match *self {
            Self::Cyclic(n) => format!("A{n}"),
            Self::BinaryDihedral(n) => format!("D{n}"),
            Self::BinaryTetrahedral => "E6".into(),
            Self::BinaryOctahedral => "E7".into(),
            Self::BinaryIcosahedral => "E8".into(),
        }
    }

    /// Number of vertices of the affine Dynkin diagram of this group.
    pub fn affine_vertex_count(&self) -> usize {
        match *self {
            Self::Cyclic(n) => n as usize,
            Self::BinaryDihedral(n) => n as usize + 3,
            Self::BinaryTetrahedral => 7,
            Self::BinaryOctahedral => 8,
            Self::BinaryIcosahedral => 9,
        }
    }

    /// Whether `p` is an admissible modulus for this group.
    pub fn admits_modulus(&self, p: u32) -> bool {
        let e = self.exponent();
        if !is_prime(p) || p > MAX_MODULUS || p % e != 1 || self.order().is_multiple_of(p) {
            return false;
        }
        match self {
            Self::Cyclic(_) => true,
            Self::BinaryDihedral(_) | Self::BinaryTetrahedral => p % 4 == 1,
            Self::BinaryOctahedral => p % 8 == 1,
            Self::BinaryIcosahedral => p % 4 == 1 && p % 5 == 1,
        }
    }

    /// Admissible moduli in increasing order.
    pub fn admissible_moduli(&self) -> impl Iterator<Item = u32> + '_ {
        (2..=MAX_MODULUS).filter(move |&p| self.admits_modulus(p))
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Accepts `A3`, `A 3`, `D2`, `D 2`, `E6`, `E7`, `E8` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let upper = compact.to_ascii_uppercase();
        match upper.as_str() {
            "E6" => return Ok(Self::BinaryTetrahedral),
            "E7" => return Ok(Self::BinaryOctahedral),
            "E8" => return Ok(Self::BinaryIcosahedral),
            _ => {}
        }
        let (head, tail) = upper.split_at(upper.len().min(1));
        let n: u32 = tail
            .parse()
            .map_err(|_| Error::InvalidGroup(format!("cannot parse family '{s}'")))?;
        match head {
            "A" => Self::cyclic(n),
            "D" => Self::binary_dihedral(n),
            _ => Err(Error::InvalidGroup(format!("unknown family '{s}'"))),
        }
    }
}

/// The smallest admissible prime for `spec`: `p = 1 mod exponent`, `p` does
/// not divide the order, and the square roots needed by the quaternion models
/// exist (`-1` for D/E, `2` for E7, `5` for E8).
pub fn choose_modulus(spec: &GroupSpec) -> PrimeField {
    let p = spec
        .admissible_moduli()
        .next()
        .expect("every supported family has an admissible 16-bit prime");
    PrimeField::new(p).expect("admissible moduli are prime")
}

/// A 2x2 matrix `[[a, b], [c, d]]` stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(pub [u32; 4]);

impl GroupElement {
    pub fn mul(&self, other: &Self, k: &PrimeField) -> Self {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = other.0;
        GroupElement([
            k.add(k.mul(a, e), k.mul(b, g)),
            k.add(k.mul(a, f), k.mul(b, h)),
            k.add(k.mul(c, e), k.mul(d, g)),
            k.add(k.mul(c, f), k.mul(d, h)),
        ])
    }

    pub fn det(&self, k: &PrimeField) -> u32 {
        let [a, b, c, d] = self.0;
        k.sub(k.mul(a, d), k.mul(b, c))
    }

    pub fn trace(&self, k: &PrimeField) -> u32 {
        k.add(self.0[0], self.0[3])
    }

    /// Inverse of an element of `SL_2`.
    pub fn inverse_sl2(&self, k: &PrimeField) -> Self {
        let [a, b, c, d] = self.0;
        GroupElement([d, k.neg(b), k.neg(c), a])
    }

    pub fn to_matrix(&self, p: u32) -> FpMatrix {
        FpMatrix::from_residues(p, 2, 2, self.0.to_vec())
    }
}

/// An explicit finite subgroup of `SL_2(F_p)` with its Cayley table.
#[derive(Clone, Debug)]
pub struct FiniteMatrixGroup {
    spec: GroupSpec,
    field: PrimeField,
    elements: Vec<GroupElement>,
    identity: usize,
    inverse: Vec<usize>,
    table: Vec<u16>,
}

impl FiniteMatrixGroup {
    pub fn spec(&self) -> GroupSpec {
        self.spec
    }
    pub fn field(&self) -> &PrimeField {
        &self.field
    }
    pub fn order(&self) -> usize {
        self.elements.len()
    }
    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }
    pub fn element(&self, i: usize) -> &GroupElement {
        &self.elements[i]
    }
    pub fn identity(&self) -> usize {
        self.identity
    }
    pub fn inverse(&self, i: usize) -> usize {
        self.inverse[i]
    }
    #[inline]
    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.table[i * self.elements.len() + j] as usize
    }

    pub fn element_order(&self, i: usize) -> usize {
        let mut x = i;
        let mut n = 1;
        while x != self.identity {
            x = self.mul(x, i);
            n += 1;
        }
        n
    }
}

fn quaternion(k: &PrimeField, s: u32, q: [u32; 4]) -> GroupElement {
    let [a, b, c, d] = q;
    let bs = k.mul(b, s);
    let ds = k.mul(d, s);
    GroupElement([k.add(a, bs), k.add(c, ds), k.add(k.neg(c), ds), k.sub(a, bs)])
}

fn hurwitz_units(k: &PrimeField) -> Vec<[u32; 4]> {
    let one = 1;
    let m1 = k.neg(1);
    let mut out = Vec::with_capacity(24);
    for pos in 0..4 {
        for sign in [one, m1] {
            let mut q = [0; 4];
            q[pos] = sign;
            out.push(q);
        }
    }
    let half = k.inv(2);
    let mhalf = k.neg(half);
    for signs in (0..4).map(|_| [half, mhalf]).multi_cartesian_product() {
        out.push([signs[0], signs[1], signs[2], signs[3]]);
    }
    out
}

fn is_even_permutation(perm: &[usize]) -> bool {
    let inversions = (0..perm.len())
        .flat_map(|i| (i + 1..perm.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| perm[i] > perm[j])
        .count();
    inversions % 2 == 0
}

fn element_list(spec: &GroupSpec, k: &PrimeField) -> Result<Vec<GroupElement>> {
    let fail = |reason: &str| Error::GroupConstruction {
        family: spec.label(),
        reason: reason.into(),
    };
    match *spec {
        GroupSpec::Cyclic(n) => {
            let w = k.root_of_unity(n).ok_or_else(|| fail("no root of unity of order n"))?;
            let wi = k.inv(w);
            Ok((0..n as u64)
                .map(|e| GroupElement([k.pow(w, e), 0, 0, k.pow(wi, e)]))
                .collect())
        }
        GroupSpec::BinaryDihedral(n) => {
            let w = k
                .root_of_unity(2 * n)
                .ok_or_else(|| fail("no root of unity of order 2n"))?;
            let wi = k.inv(w);
            let j = GroupElement([0, 1, k.neg(1), 0]);
            let rot: Vec<GroupElement> = (0..2 * n as u64)
                .map(|e| GroupElement([k.pow(w, e), 0, 0, k.pow(wi, e)]))
                .collect();
            let mut out = rot.clone();
            out.extend(rot.iter().map(|r| r.mul(&j, k)));
            Ok(out)
        }
        GroupSpec::BinaryTetrahedral | GroupSpec::BinaryOctahedral | GroupSpec::BinaryIcosahedral => {
            let s = k.sqrt(k.neg(1)).ok_or_else(|| fail("-1 is not a square"))?;
            let mut quats = hurwitz_units(k);
            if *spec == GroupSpec::BinaryOctahedral {
                let r2 = k.sqrt(2).ok_or_else(|| fail("2 is not a square"))?;
                let inv_r2 = k.inv(r2);
                let vals = [inv_r2, k.neg(inv_r2)];
                for pair in (0..4).combinations(2) {
                    for (&u, &v) in vals.iter().cartesian_product(vals.iter()) {
                        let mut q = [0; 4];
                        q[pair[0]] = u;
                        q[pair[1]] = v;
                        quats.push(q);
                    }
                }
            }
            if *spec == GroupSpec::BinaryIcosahedral {
                let r5 = k.sqrt(5).ok_or_else(|| fail("5 is not a square"))?;
                let half = k.inv(2);
                let phi = k.mul(k.add(1, r5), half);
                let phi_inv = k.sub(phi, 1);
                debug_assert_eq!(k.mul(phi, phi_inv), 1);
                let base = [0, half, k.mul(phi_inv, half), k.mul(phi, half)];
                for perm in (0..4).permutations(4).filter(|p| is_even_permutation(p)) {
                    for signs in (0..3).map(|_| [false, true]).multi_cartesian_product() {
                        let mut q = [0; 4];
                        for (slot, &target) in perm.iter().enumerate() {
                            let mut v = base[slot];
                            if slot > 0 && signs[slot - 1] {
                                v = k.neg(v);
                            }
                            q[target] = v;
                        }
                        quats.push(q);
                    }
                }
            }
            Ok(quats.into_iter().map(|q| quaternion(k, s, q)).collect())
        }
    }
}

/// Build the group from its explicit element list and verify it: every
/// element in `SL_2`, no duplicates, closure under products, and the
/// expected order.
pub fn build_group(spec: &GroupSpec, field: &PrimeField) -> Result<FiniteMatrixGroup> {
    let fail = |reason: String| Error::GroupConstruction {
        family: spec.label(),
        reason,
    };
    if !spec.admits_modulus(field.p()) {
        return Err(fail(format!("modulus {} is not admissible", field.p())));
    }
    let elements = element_list(spec, field)?;
    let index: HashMap<GroupElement, usize> =
        elements.iter().enumerate().map(|(i, g)| (*g, i)).collect();
    if index.len() != elements.len() {
        return Err(fail("element list contains duplicates (reduction not faithful)".into()));
    }
    if elements.len() != spec.order() as usize {
        return Err(fail(format!(
            "expected {} elements, built {}",
            spec.order(),
            elements.len()
        )));
    }
    if let Some(g) = elements.iter().find(|g| g.det(field) != 1) {
        return Err(fail(format!("element {:?} has determinant != 1", g.0)));
    }
    let n = elements.len();
    let mut table = vec![0u16; n * n];
    for (i, a) in elements.iter().enumerate() {
        for (j, b) in elements.iter().enumerate() {
            let prod = a.mul(b, field);
            let Some(&idx) = index.get(&prod) else {
                return Err(fail(format!("not closed: product {:?} is missing", prod.0)));
            };
            table[i * n + j] = idx as u16;
        }
    }
    let id = GroupElement([1, 0, 0, 1]);
    let identity = *index
        .get(&id)
        .ok_or_else(|| fail("identity missing".into()))?;
    let inverse = elements
        .iter()
        .map(|g| index[&g.inverse_sl2(field)])
        .collect();
    let group = FiniteMatrixGroup {
        spec: *spec,
        field: field.clone(),
        elements,
        identity,
        inverse,
        table,
    };
    let e = spec.exponent() as usize;
    if let Some(i) = (0..n).find(|&i| !e.is_multiple_of(group.element_order(i))) {
        return Err(fail(format!(
            "element {i} has order {} not dividing the exponent {e}",
            group.element_order(i)
        )));
    }
    Ok(group)
}

/// Conjugacy classes in discovery order over the element list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjugacyClasses {
    class_of: Vec<usize>,
    sizes: Vec<usize>,
    representatives: Vec<usize>,
    inverse_class: Vec<usize>,
}

impl ConjugacyClasses {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
    pub fn class_of(&self, element: usize) -> usize {
        self.class_of[element]
    }
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
    pub fn size(&self, class: usize) -> usize {
        self.sizes[class]
    }
    pub fn representatives(&self) -> &[usize] {
        &self.representatives
    }
    pub fn representative(&self, class: usize) -> usize {
        self.representatives[class]
    }
    pub fn inverse_class(&self, class: usize) -> usize {
        self.inverse_class[class]
    }
    pub fn members(&self, class: usize) -> impl Iterator<Item = usize> + '_ {
        self.class_of
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == class)
            .map(|(i, _)| i)
    }
}

pub fn conjugacy_classes(g: &FiniteMatrixGroup) -> ConjugacyClasses {
    let n = g.order();
    let mut class_of = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut representatives = Vec::new();
    // start from the identity so it is always class 0
    let order = std::iter::once(g.identity()).chain((0..n).filter(|&i| i != g.identity()));
    for x in order {
        if class_of[x] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        for h in 0..n {
            let y = g.mul(g.mul(h, x), g.inverse(h));
            if class_of[y] == usize::MAX {
                class_of[y] = id;
                size += 1;
            }
        }
        sizes.push(size);
        representatives.push(x);
    }
    let inverse_class = representatives
        .iter()
        .map(|&r| class_of[g.inverse(r)])
        .collect();
    ConjugacyClasses {
        class_of,
        sizes,
        representatives,
        inverse_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(spec: GroupSpec) -> FiniteMatrixGroup {
        build_group(&spec, &choose_modulus(&spec)).unwrap()
    }

    #[test]
    fn modulus_choices() {
        assert_eq!(choose_modulus(&GroupSpec::Cyclic(3)).p(), 7);
        assert_eq!(choose_modulus(&GroupSpec::BinaryTetrahedral).p(), 13);
        assert_eq!(choose_modulus(&GroupSpec::BinaryIcosahedral).p(), 61);
        assert_eq!(choose_modulus(&GroupSpec::BinaryOctahedral).p(), 73);
        assert_eq!(choose_modulus(&GroupSpec::BinaryDihedral(2)).p(), 5);
    }

    #[test]
    fn parses_family_labels() {
        assert_eq!("A 3".parse::<GroupSpec>().unwrap(), GroupSpec::Cyclic(3));
        assert_eq!("d2".parse::<GroupSpec>().unwrap(), GroupSpec::BinaryDihedral(2));
        assert_eq!("E8".parse::<GroupSpec>().unwrap(), GroupSpec::BinaryIcosahedral);
        assert!("A1".parse::<GroupSpec>().is_err());
        assert!("F4".parse::<GroupSpec>().is_err());
    }

    #[test]
    fn cyclic_is_diagonal() {
        let g = build(GroupSpec::Cyclic(4));
        assert_eq!(g.order(), 4);
        assert!(g.elements().iter().all(|e| e.0[1] == 0 && e.0[2] == 0));
    }

    #[test]
    fn exceptional_orders_and_determinants() {
        for (spec, n) in [
            (GroupSpec::BinaryTetrahedral, 24),
            (GroupSpec::BinaryOctahedral, 48),
            (GroupSpec::BinaryIcosahedral, 120),
        ] {
            let g = build(spec);
            assert_eq!(g.order(), n);
            let k = g.field();
            assert!(g.elements().iter().all(|e| e.det(k) == 1));
        }
    }

    #[test]
    fn wrong_modulus_is_rejected() {
        let spec = GroupSpec::BinaryTetrahedral;
        assert!(build_group(&spec, &PrimeField::new(7).unwrap()).is_err());
    }

    #[test]
    fn class_counts() {
        let g = build(GroupSpec::Cyclic(5));
        let c = conjugacy_classes(&g);
        assert_eq!(c.count(), 5);
        assert!(c.sizes().iter().all(|&s| s == 1));

        let g = build(GroupSpec::BinaryDihedral(2));
        assert_eq!(conjugacy_classes(&g).count(), 5);

        let g = build(GroupSpec::BinaryTetrahedral);
        let c = conjugacy_classes(&g);
        assert_eq!(c.count(), 7);
        assert_eq!(c.sizes().iter().sum::<usize>(), 24);
        assert_eq!(c.size(0), 1);
        assert_eq!(c.representative(0), g.identity());
    }

    #[test]
    fn trace_is_a_class_function() {
        let g = build(GroupSpec::BinaryOctahedral);
        let k = g.field();
        for x in 0..g.order() {
            for h in 0..g.order() {
                let y = g.mul(g.mul(h, x), g.inverse(h));
                assert_eq!(g.element(x).trace(k), g.element(y).trace(k));
            }
        }
    }
}
