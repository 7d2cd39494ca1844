//! Alternating multi-indices in R^N and the signed incidence structure of
//! the exterior derivative.
//!
//! A q-form in N dimensions has `C(N, q)` components, one per strictly
//! increasing multi-index `(i_1 < ... < i_q)` with entries in `1..=N`.
//! Components are always laid out in lexicographic order of these tuples.

use std::fmt;

use crate::error::{Error, Result};

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// A strictly increasing tuple of 1-based axis labels.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    dim: usize,
    entries: Vec<usize>,
}

impl MultiIndex {
    /// Builds a multi-index, checking that the entries are strictly
    /// increasing and lie in `1..=dim`.
    pub fn new(dim: usize, entries: Vec<usize>) -> Result<Self> {
        if entries.len() > dim {
            return Err(Error::DegreeOutOfRange { dim, degree: entries.len() });
        }
        let sorted = entries.windows(2).all(|w| w[0] < w[1]);
        let in_range = entries.iter().all(|&e| e >= 1 && e <= dim);
        if !sorted || !in_range {
            return Err(Error::InvalidMultiIndex { dim, entries });
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.entries.len()
    }

    /// 1-based entries.
    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    /// 0-based axes, for indexing storage.
    pub fn axes(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e - 1)
    }

    pub fn contains(&self, axis: usize) -> bool {
        self.entries.binary_search(&axis).is_ok()
    }

    /// Lexicographic rank among all multi-indices of the same degree.
    pub fn rank(&self) -> usize {
        let n = self.dim;
        let q = self.entries.len();
        let mut rank = 0;
        let mut prev = 0;
        for (pos, &e) in self.entries.iter().enumerate() {
            // count tuples that agree so far but use a smaller entry here
            for smaller in (prev + 1)..e {
                rank += binomial(n - smaller, q - pos - 1);
            }
            prev = e;
        }
        rank
    }

    /// Inserts `axis` (1-based) in sorted position. Returns the new index
    /// and the number of existing entries smaller than `axis`.
    pub fn insert(&self, axis: usize) -> Option<(MultiIndex, usize)> {
        match self.entries.binary_search(&axis) {
            Ok(_) => None,
            Err(pos) => {
                let mut entries = self.entries.clone();
                entries.insert(pos, axis);
                Some((MultiIndex { dim: self.dim, entries }, pos))
            }
        }
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// One signed term of the exterior derivative: component `target` of `dE`
/// receives `sign * D_direction E_source`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceEntry {
    pub source: MultiIndex,
    pub target: MultiIndex,
    /// 1-based inserted axis.
    pub direction: usize,
    pub sign: i8,
    pub source_rank: usize,
    pub target_rank: usize,
}

/// All increasing `q`-tuples of `1..=dim` in lexicographic order.
pub fn enumerate_multi_indices(dim: usize, q: usize) -> Result<Vec<MultiIndex>> {
    if q > dim {
        return Err(Error::DegreeOutOfRange { dim, degree: q });
    }
    let mut out = Vec::with_capacity(binomial(dim, q));
    let mut current: Vec<usize> = (1..=q).collect();
    loop {
        out.push(MultiIndex { dim, entries: current.clone() });
        // advance to the next combination
        let mut i = q;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if current[i] < dim - (q - 1 - i) {
                current[i] += 1;
                for j in (i + 1)..q {
                    current[j] = current[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Signed sparsity pattern of `d` from degree `q` to `q + 1`. Empty when
/// `q == dim`.
pub fn incidence_table(dim: usize, q: usize) -> Result<Vec<IncidenceEntry>> {
    if q > dim {
        return Err(Error::DegreeOutOfRange { dim, degree: q });
    }
    if q == dim {
        return Ok(Vec::new());
    }
    let mut table = Vec::new();
    for target in enumerate_multi_indices(dim, q + 1)? {
        let target_rank = target.rank();
        for (pos, &direction) in target.entries.iter().enumerate() {
            let mut entries = target.entries.clone();
            entries.remove(pos);
            let source = MultiIndex { dim, entries };
            table.push(IncidenceEntry {
                source_rank: source.rank(),
                source,
                target: target.clone(),
                direction,
                sign: if pos % 2 == 0 { 1 } else { -1 },
                target_rank,
            });
        }
    }
    Ok(table)
}

/// Precomputed index lists and incidence tables for every degree of one
/// ambient dimension.
#[derive(Debug)]
pub struct ExteriorAlgebra {
    dim: usize,
    indices: Vec<Vec<MultiIndex>>,
    incidence: Vec<Vec<IncidenceEntry>>,
}

impl ExteriorAlgebra {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDomain("dimension must be at least 1".into()));
        }
        let indices = (0..=dim).map(|q| enumerate_multi_indices(dim, q)).collect::<Result<Vec<_>>>()?;
        let incidence = (0..=dim).map(|q| incidence_table(dim, q)).collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, indices, incidence })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self, q: usize) -> usize {
        binomial(self.dim, q)
    }

    pub fn indices(&self, q: usize) -> &[MultiIndex] {
        &self.indices[q]
    }

    /// Incidence entries from degree `q` to `q + 1`.
    pub fn incidence(&self, q: usize) -> &[IncidenceEntry] {
        &self.incidence[q]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuples(list: &[MultiIndex]) -> Vec<Vec<usize>> {
        list.iter().map(|m| m.entries().to_vec()).collect()
    }

    #[test]
    fn four_dim_two_forms_follow_curl_layout() {
        let idx = enumerate_multi_indices(4, 2).unwrap();
        assert_eq!(tuples(&idx), vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]]);
    }

    #[test]
    fn scalar_and_five_dim_counts() {
        for n in 1..7 {
            let idx = enumerate_multi_indices(n, 0).unwrap();
            assert_eq!(idx.len(), 1);
            assert!(idx[0].entries().is_empty());
        }
        assert_eq!(enumerate_multi_indices(5, 2).unwrap().len(), 10);
    }

    #[test]
    fn degree_out_of_range() {
        assert!(matches!(enumerate_multi_indices(3, 4), Err(Error::DegreeOutOfRange { .. })));
        assert!(incidence_table(3, 4).is_err());
        assert!(incidence_table(3, 3).unwrap().is_empty());
    }

    #[test]
    fn rank_is_position_in_enumeration() {
        for n in 1..=7 {
            for q in 0..=n {
                let idx = enumerate_multi_indices(n, q).unwrap();
                assert_eq!(idx.len(), binomial(n, q));
                for (i, m) in idx.iter().enumerate() {
                    assert_eq!(m.rank(), i, "N={n} q={q} {m}");
                }
                assert_eq!(idx.len(), enumerate_multi_indices(n, n - q).unwrap().len());
            }
        }
    }

    #[test]
    fn gradient_table_has_no_signs() {
        let t = incidence_table(2, 0).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|e| e.sign == 1));
    }

    #[test]
    fn four_dim_curl_entries() {
        let t = incidence_table(4, 1).unwrap();
        assert_eq!(t.len(), 12);
        // component (n,m): +d_n v_m - d_m v_n
        for pair in t.chunks(2) {
            let [a, b] = pair else { unreachable!() };
            assert_eq!(a.target, b.target);
            let (n, m) = (a.target.entries()[0], a.target.entries()[1]);
            assert_eq!((a.direction, a.source.entries(), a.sign), (n, &[m][..], 1));
            assert_eq!((b.direction, b.source.entries(), b.sign), (m, &[n][..], -1));
        }
    }

    #[test]
    fn three_dim_curl_matches_classical_curl() {
        // classical curl: (d2 v3 - d3 v2, d3 v1 - d1 v3, d1 v2 - d2 v1)
        // with components ordered (1,2),(1,3),(2,3) the table gives
        // (1,2) = d1 v2 - d2 v1, (1,3) = d1 v3 - d3 v1, (2,3) = d2 v3 - d3 v2
        let t = incidence_table(3, 1).unwrap();
        let terms = |rank: usize| -> Vec<(usize, usize, i8)> {
            t.iter().filter(|e| e.target_rank == rank).map(|e| (e.direction, e.source.entries()[0], e.sign)).collect()
        };
        assert_eq!(terms(0), vec![(1, 2, 1), (2, 1, -1)]); // curl_z
        assert_eq!(terms(1), vec![(1, 3, 1), (3, 1, -1)]); // -curl_y
        assert_eq!(terms(2), vec![(2, 3, 1), (3, 2, -1)]); // curl_x
    }

    #[test]
    fn sign_counts_smaller_source_entries() {
        for n in 1..=6 {
            for q in 0..n {
                for e in incidence_table(n, q).unwrap() {
                    let smaller = e.source.entries().iter().filter(|&&s| s < e.direction).count();
                    let expected = if smaller % 2 == 0 { 1 } else { -1 };
                    assert_eq!(e.sign, expected);
                    let (ins, pos) = e.source.insert(e.direction).unwrap();
                    assert_eq!(ins, e.target);
                    assert_eq!(pos, smaller);
                }
            }
        }
    }

    #[test]
    fn combinatorial_d_squared_vanishes() {
        // Sum over signed paths (q -> q+1 -> q+2) for every pair of
        // directions must cancel exactly. Paths are keyed by the ordered
        // pair of inserted directions; the two orders must carry opposite
        // signs.
        for n in 1usize..=6 {
            for q in 0..n.saturating_sub(1) {
                let first = incidence_table(n, q).unwrap();
                let second = incidence_table(n, q + 1).unwrap();
                let mut acc = std::collections::HashMap::new();
                for a in &first {
                    for b in second.iter().filter(|b| b.source == a.target) {
                        let mut dirs = [a.direction, b.direction];
                        dirs.sort_unstable();
                        let key = (a.source.rank(), b.target.rank(), dirs);
                        *acc.entry(key).or_insert(0i32) += (a.sign * b.sign) as i32;
                    }
                }
                assert!(!acc.is_empty() || q + 2 > n);
                assert!(acc.values().all(|&v| v == 0), "N={n} q={q}");
            }
        }
    }

    #[test]
    fn invalid_multi_index_rejected() {
        assert!(MultiIndex::new(3, vec![2, 1]).is_err());
        assert!(MultiIndex::new(3, vec![0]).is_err());
        assert!(MultiIndex::new(3, vec![1, 4]).is_err());
        assert_eq!(MultiIndex::new(4, vec![2, 4]).unwrap().rank(), 4);
    }
}
