//! The metric space `A_Q(R^n)` of unordered Q-tuples of points.

use serde::{Deserialize, Serialize};

use crate::assignment::linear_sum_assignment;
use crate::error::{Error, Result};
use crate::perm;

/// Largest multiplicity handled by exhaustive lexicographic enumeration.
pub const BRUTE_FORCE_MAX_Q: usize = 6;

/// An unordered tuple of `q` points in `R^n`.
///
/// Points are stored in some order for convenience, but every query treats
/// the value as a multiset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QValue {
    q: usize,
    n: usize,
    coords: Vec<f64>,
}

impl QValue {
    pub fn new(q: usize, n: usize, coords: Vec<f64>) -> Result<Self> {
        if q == 0 || n == 0 {
            return Err(Error::Invalid("q and n must be positive".into()));
        }
        if coords.len() != q * n {
            return Err(Error::Invalid(format!(
                "expected {} coordinates for q={q}, n={n}, got {}",
                q * n,
                coords.len()
            )));
        }
        Ok(Self { q, n, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let q = points.len();
        let n = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(q * n);
        for p in points {
            let p = p.as_ref();
            if p.len() != n {
                return Err(Error::DimensionMismatch { left: n, right: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::new(q, n, coords)
    }

    /// `q` copies of the same point.
    pub fn repeated(q: usize, point: &[f64]) -> Self {
        let coords = point.iter().copied().cycle().take(q * point.len()).collect();
        Self { q, n: point.len(), coords }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.n)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    /// Reorder the stored points: new point `i` is old point `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for &i in order {
            coords.extend_from_slice(self.point(i));
        }
        Self { q: self.q, n: self.n, coords }
    }

    /// Sum of all points, a single vector in `R^n`.
    pub fn sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for p in self.points() {
            for (acc, x) in s.iter_mut().zip(p) {
                *acc += x;
            }
        }
        s
    }

    /// Translate every point by `g`.
    pub fn translated(&self, g: &[f64]) -> Result<Self> {
        if g.len() != self.n {
            return Err(Error::DimensionMismatch { left: self.n, right: g.len() });
        }
        let mut out = self.clone();
        for p in out.coords.chunks_exact_mut(self.n) {
            for (x, d) in p.iter_mut().zip(g) {
                *x += d;
            }
        }
        Ok(out)
    }

    /// Multiset union of two values of the same dimension.
    pub fn union(&self, other: &QValue) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(Self { q: self.q + other.q, n: self.n, coords })
    }

    fn check_compatible(&self, other: &QValue) -> Result<()> {
        if self.q != other.q {
            return Err(Error::MultiplicityMismatch { left: self.q, right: other.q });
        }
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A pairing of the points of two values: point `i` of the first goes with
/// point `perm[i]` of the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub perm: Vec<usize>,
    /// Sum of squared distances under `perm`.
    pub cost: f64,
}

impl Matching {
    pub fn identity(q: usize) -> Self {
        Self { perm: perm::identity(q), cost: 0.0 }
    }

    pub fn inverse(&self) -> Self {
        Self { perm: perm::inverse(&self.perm), cost: self.cost }
    }
}

/// Squared pairing cost of `perm`, summed in slot order.
pub fn pairing_cost(a: &QValue, b: &QValue, perm: &[usize]) -> f64 {
    perm.iter()
        .enumerate()
        .map(|(i, &j)| sq_dist(a.point(i), b.point(j)))
        .sum()
}

/// Optimal pairing between `a` and `b`.
///
/// Up to `BRUTE_FORCE_MAX_Q` points all permutations are scanned in
/// lexicographic order and the first strict minimum wins, which makes ties
/// resolve to the lexicographically smallest permutation. Beyond that the
/// exact assignment solver is used.
pub fn optimal_matching(a: &QValue, b: &QValue) -> Result<Matching> {
    a.check_compatible(b)?;
    Ok(optimal_matching_unchecked(a, b))
}

pub(crate) fn optimal_matching_unchecked(a: &QValue, b: &QValue) -> Matching {
    let q = a.q;
    match q {
        1 => Matching { perm: vec![0], cost: sq_dist(a.point(0), b.point(0)) },
        2 => {
            let id = sq_dist(a.point(0), b.point(0)) + sq_dist(a.point(1), b.point(1));
            let sw = sq_dist(a.point(0), b.point(1)) + sq_dist(a.point(1), b.point(0));
            if sw < id {
                Matching { perm: vec![1, 0], cost: sw }
            } else {
                Matching { perm: vec![0, 1], cost: id }
            }
        }
        _ if q <= BRUTE_FORCE_MAX_Q => {
            let mut d = vec![0.0; q * q];
            for i in 0..q {
                for j in 0..q {
                    d[i * q + j] = sq_dist(a.point(i), b.point(j));
                }
            }
            let mut p = perm::identity(q);
            let mut best = p.clone();
            let mut best_cost: f64 = (0..q).map(|i| d[i * q + i]).sum();
            while perm::next_lexicographic(&mut p) {
                let c: f64 = (0..q).map(|i| d[i * q + p[i]]).sum();
                if c < best_cost {
                    best_cost = c;
                    best.copy_from_slice(&p);
                }
            }
            Matching { perm: best, cost: best_cost }
        }
        _ => assignment_matching_unchecked(a, b),
    }
}

/// Optimal pairing computed by the assignment solver for any `q`.
pub fn assignment_matching(a: &QValue, b: &QValue) -> Result<Matching> {
    a.check_compatible(b)?;
    Ok(assignment_matching_unchecked(a, b))
}

fn assignment_matching_unchecked(a: &QValue, b: &QValue) -> Matching {
    let q = a.q;
    let mut d = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            d[i * q + j] = sq_dist(a.point(i), b.point(j));
        }
    }
    let perm = linear_sum_assignment(&d, q);
    let cost = pairing_cost(a, b, &perm);
    Matching { perm, cost }
}

/// The metric `G(a, b) = min_σ sqrt(Σ |a_i - b_σ(i)|²)`.
pub fn metric_g(a: &QValue, b: &QValue) -> Result<f64> {
    Ok(optimal_matching(a, b)?.cost.sqrt())
}

/// Minimum distance between two stored points; 0 when a point repeats and
/// `+∞` for a single point.
pub fn separation(a: &QValue) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..a.q {
        for j in i + 1..a.q {
            best = best.min(sq_dist(a.point(i), a.point(j)));
        }
    }
    best.sqrt()
}

/// A support point together with how many of the `q` points sit on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Vec<f64>,
    pub count: usize,
}

/// Cluster points closer than `tol` (single linkage) into support atoms.
///
/// Each atom is represented by its lexicographically smallest member and
/// atoms are listed in lexicographic order, so the output does not depend on
/// the stored order of the points.
pub fn support_multiplicity(a: &QValue, tol: f64) -> Vec<Atom> {
    let q = a.q;
    let tol2 = tol * tol;
    let mut parent: Vec<usize> = (0..q).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..q {
        for j in i + 1..q {
            if sq_dist(a.point(i), a.point(j)) <= tol2 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut atoms: Vec<(usize, Vec<f64>, usize)> = Vec::new();
    for i in 0..q {
        let r = find(&mut parent, i);
        let p = a.point(i);
        match atoms.iter_mut().find(|(root, _, _)| *root == r) {
            Some((_, rep, count)) => {
                *count += 1;
                if lex_less(p, rep) {
                    rep.copy_from_slice(p);
                }
            }
            None => atoms.push((r, p.to_vec(), 1)),
        }
    }
    let mut out: Vec<Atom> = atoms
        .into_iter()
        .map(|(_, point, count)| Atom { point, count })
        .collect();
    out.sort_by(|x, y| lex_cmp(&x.point, &y.point));
    out
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    lex_cmp(a, b) == std::cmp::Ordering::Less
}
