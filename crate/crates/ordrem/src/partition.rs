//! Partitions of the ordered vertex set `0..n`: general labeled partitions,
//! equipartitions and interval partitions, plus the P-string view.

use std::ops::Deref;

use crate::error::{Error, Result};

/// A labeled partition of `0..n` into parts `0..k` (parts may be empty;
/// label identity matters for closeness comparisons).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::input("partition needs at least one part"));
        }
        if let Some(&bad) = assignment.iter().find(|&&p| p >= k) {
            return Err(Error::input(format!("part label {bad} out of range")));
        }
        Ok(Partition { assignment, k })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn part_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &p in &self.assignment {
            sizes[p] += 1;
        }
        sizes
    }

    /// Members of each part, in increasing vertex order.
    pub fn parts(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.k];
        for (v, &p) in self.assignment.iter().enumerate() {
            parts[p].push(v);
        }
        parts
    }

    pub fn is_equitable(&self) -> bool {
        let sizes = self.sizes();
        let min = sizes.iter().min().copied().unwrap_or(0);
        let max = sizes.iter().max().copied().unwrap_or(0);
        max - min <= 1
    }

    /// Whether every part of `self` is contained in a part of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.n() != coarser.n() {
            return false;
        }
        let mut parent = vec![usize::MAX; self.k];
        for (v, &p) in self.assignment.iter().enumerate() {
            let q = coarser.assignment[v];
            if parent[p] == usize::MAX {
                parent[p] = q;
            } else if parent[p] != q {
                return false;
            }
        }
        true
    }
}

/// A partition whose part sizes differ by at most one.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Equipartition(Partition);

impl Equipartition {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        let p = Partition::new(assignment, k)?;
        if !p.is_equitable() {
            return Err(Error::input("partition is not equitable"));
        }
        Ok(Equipartition(p))
    }

    pub fn from_partition(p: Partition) -> Result<Self> {
        if !p.is_equitable() {
            return Err(Error::input("partition is not equitable"));
        }
        Ok(Equipartition(p))
    }

    /// The canonical equipartition by consecutive vertex ranges, oversized
    /// parts first.
    pub fn canonical(n: usize, k: usize) -> Result<Self> {
        let iv = IntervalPartition::canonical(n, k)?;
        Equipartition::from_partition(iv.as_partition())
    }

    pub fn as_partition(&self) -> &Partition {
        &self.0
    }

    pub fn into_partition(self) -> Partition {
        self.0
    }
}

impl Deref for Equipartition {
    type Target = Partition;

    fn deref(&self) -> &Partition {
        &self.0
    }
}

/// The P-string of a partition: position `v` holds the part label of `v`.
pub fn p_string(p: &Partition) -> Vec<usize> {
    p.assignment().to_vec()
}

/// Reconstructs the partition a P-string came from.
pub fn partition_from_string(s: &[usize], k: usize) -> Result<Partition> {
    Partition::new(s.to_vec(), k)
}

/// A partition of `0..n` into consecutive ranges, stored as its cut
/// positions `0 = a_0 < ... < a_k = n`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntervalPartition {
    boundaries: Vec<usize>,
}

impl IntervalPartition {
    pub fn new(boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.len() < 2 || boundaries[0] != 0 {
            return Err(Error::input("interval boundaries must start at 0"));
        }
        for w in boundaries.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::input("interval boundaries must strictly increase"));
            }
        }
        Ok(IntervalPartition { boundaries })
    }

    /// The canonical interval equipartition: the first `n mod m` parts get
    /// the oversize `ceil(n/m)`, the rest `floor(n/m)`.
    pub fn canonical(n: usize, m: usize) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::input(format!(
                "cannot split {n} positions into {m} intervals"
            )));
        }
        let base = n / m;
        let extra = n % m;
        let mut boundaries = Vec::with_capacity(m + 1);
        let mut at = 0;
        boundaries.push(0);
        for i in 0..m {
            at += if i < extra { base + 1 } else { base };
            boundaries.push(at);
        }
        IntervalPartition::new(boundaries)
    }

    pub fn n(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    pub fn k(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Half-open range of interval `i`.
    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.boundaries[i]..self.boundaries[i + 1]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn part_of(&self, v: usize) -> usize {
        debug_assert!(v < self.n());
        match self.boundaries.binary_search(&v) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    pub fn is_equitable(&self) -> bool {
        let n = self.n();
        let k = self.k();
        self.sizes().iter().all(|&s| s == n / k || s == n.div_ceil(k))
    }

    /// Whether every interval of `self` lies inside an interval of `coarser`.
    pub fn refines(&self, coarser: &IntervalPartition) -> bool {
        self.n() == coarser.n()
            && coarser
                .boundaries
                .iter()
                .all(|b| self.boundaries.binary_search(b).is_ok())
    }

    pub fn as_partition(&self) -> Partition {
        let mut assignment = vec![0usize; self.n()];
        for i in 0..self.k() {
            for v in self.range(i) {
                assignment[v] = i;
            }
        }
        Partition::new(assignment, self.k()).expect("valid by construction")
    }
}
