//! Small permutation helpers on `{0..q-1}` stored as index vectors.
//!
//! `p[i] = j` maps slot `i` to slot `j`. Composition `then(p, r)` applies `p`
//! first, so `then(p, r)[i] = r[p[i]]`.

pub fn identity(q: usize) -> Vec<usize> {
    (0..q).collect()
}

pub fn is_identity(p: &[usize]) -> bool {
    p.iter().enumerate().all(|(i, &j)| i == j)
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &j in p {
        if j >= p.len() || seen[j] {
            return false;
        }
        seen[j] = true;
    }
    true
}

pub fn inverse(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// `p` followed by `r`.
pub fn then(p: &[usize], r: &[usize]) -> Vec<usize> {
    p.iter().map(|&j| r[j]).collect()
}

/// Lengths of the nontrivial cycles, sorted descending. Empty for the identity.
pub fn cycle_type(p: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; p.len()];
    let mut lens = Vec::new();
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            len += 1;
        }
        if len > 1 {
            lens.push(len);
        }
    }
    lens.sort_unstable_by(|a, b| b.cmp(a));
    lens
}

/// +1 for even permutations, -1 for odd ones.
pub fn sign(p: &[usize]) -> i32 {
    let transpositions: usize = cycle_type(p).iter().map(|l| l - 1).sum();
    if transpositions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Advance `p` to the next permutation in lexicographic order.
/// Returns false (leaving `p` sorted ascending) once the last one is passed.
pub fn next_lexicographic(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        p.reverse();
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
