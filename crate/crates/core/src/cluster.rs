//! Single-linkage hierarchical clustering on a distance matrix, elbow
//! selection of `k`, Fowlkes–Mallows comparison and scatter export.

use std::collections::HashMap;
use std::io::Write;
use std::ops::RangeInclusive;

use crate::distances::DistanceMatrix;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// One agglomeration step. Leaves are `0..n`; the cluster created by merge
/// `t` gets id `n + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

/// Flat cluster assignment with ids `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl Clustering {
    /// Relabels arbitrary ids by first appearance.
    pub fn from_labels<T: Eq + std::hash::Hash + Clone>(raw: &[T]) -> Self {
        let mut ids = HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        Self { labels, k: ids.len() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `index,label` per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(w, "{i},{l}")?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut raw = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fmt_err = |message: String| Error::Format {
                path: "<labels>".into(),
                line: idx + 1,
                message,
            };
            let (i, l) = line
                .split_once(',')
                .ok_or_else(|| fmt_err(format!("expected `index,label`, got `{line}`")))?;
            let i: usize = i.trim().parse().map_err(|e| fmt_err(format!("{e}")))?;
            if i != raw.len() {
                return Err(fmt_err(format!("expected index {}, got {i}", raw.len())));
            }
            raw.push(l.trim().to_string());
        }
        Ok(Self::from_labels(&raw))
    }
}

/// Greedy single linkage: repeatedly merge the closest pair of clusters,
/// breaking ties by the lexicographically smallest pair of cluster
/// representatives (smallest member index).
pub fn single_linkage(dist: &DistanceMatrix) -> Result<Dendrogram> {
    let n = dist.n();
    if n < 2 {
        return Err(Error::Parameter(format!("single linkage needs at least 2 items, got {n}")));
    }
    // Working copy indexed by slot; a merged cluster reuses the slot of
    // whichever side holds the smaller representative.
    let mut d = dist.values().to_vec();
    let mut active = vec![true; n];
    let rep: Vec<usize> = (0..n).collect();
    let mut id: Vec<usize> = (0..n).collect();
    // nearest[i] = (distance, slot) of the closest other active cluster,
    // ties broken by smaller representative.
    let better = |(da, ra): (f64, usize), (db, rb): (f64, usize)| da < db || (da == db && ra < rb);
    let find_nearest = |d: &[f64], active: &[bool], rep: &[usize], i: usize| {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if j == i || !active[j] {
                continue;
            }
            let cand = (d[i * n + j], j);
            best = match best {
                Some(b) if !better((cand.0, rep[cand.1]), (b.0, rep[b.1])) => Some(b),
                _ => Some(cand),
            };
        }
        best
    };
    let mut nearest: Vec<Option<(f64, usize)>> = (0..n).map(|i| find_nearest(&d, &active, &rep, i)).collect();

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        // global minimum over (distance, ordered representative pair)
        let mut best: Option<(f64, usize, usize, usize)> = None; // (dist, lo_rep, hi_rep, slot)
        for i in 0..n {
            if !active[i] {
                continue;
            }
            let (dij, j) = nearest[i].expect("active cluster has a neighbour");
            let (lo, hi) = (rep[i].min(rep[j]), rep[i].max(rep[j]));
            let replace = match best {
                None => true,
                Some((bd, bl, bh, _)) => (dij, lo, hi) < (bd, bl, bh),
            };
            if replace {
                best = Some((dij, lo, hi, i));
            }
        }
        let (height, _, _, i) = best.unwrap();
        let j = nearest[i].unwrap().1;
        let (keep, gone) = if rep[i] < rep[j] { (i, j) } else { (j, i) };
        let (id_a, id_b) = (id[keep].min(id[gone]), id[keep].max(id[gone]));
        merges.push(Merge { a: id_a, b: id_b, height });

        active[gone] = false;
        id[keep] = n + step;
        for k in 0..n {
            if !active[k] || k == keep {
                continue;
            }
            let merged = d[keep * n + k].min(d[gone * n + k]);
            d[keep * n + k] = merged;
            d[k * n + keep] = merged;
        }
        for k in 0..n {
            if !active[k] || k == keep {
                continue;
            }
            let Some((bd, bs)) = nearest[k] else { continue };
            if bs == gone || bs == keep {
                // distance to the merged cluster equals the old best and its
                // representative can only have become smaller
                nearest[k] = Some((d[k * n + keep], keep));
                debug_assert!(d[k * n + keep] <= bd);
            } else if better((d[k * n + keep], rep[keep]), (bd, rep[bs])) {
                nearest[k] = Some((d[k * n + keep], keep));
            }
        }
        nearest[gone] = None;
        nearest[keep] = find_nearest(&d, &active, &rep, keep);
        if merges.len() == n - 1 {
            break;
        }
    }
    Ok(Dendrogram { n, merges })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Stops agglomerating at `k` clusters. Labels follow the order of each
/// cluster's smallest member.
pub fn cut(dendrogram: &Dendrogram, k: usize) -> Result<Clustering> {
    let n = dendrogram.n;
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("k = {k} outside 1..={n}")));
    }
    // any leaf of each created cluster, to union through
    let mut leaf_of: Vec<usize> = (0..n).collect();
    let mut uf = UnionFind::new(n);
    for m in dendrogram.merges.iter().take(n - k) {
        let (la, lb) = (leaf_of[m.a], leaf_of[m.b]);
        uf.union(la, lb);
        leaf_of.push(la);
    }
    let roots: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();
    let c = Clustering::from_labels(&roots);
    debug_assert_eq!(c.k, k);
    Ok(c)
}

/// `Σ_clusters Σ_{i<j in cluster} d_ij² / |cluster|`.
pub fn within_cluster_dispersion(dist: &DistanceMatrix, clustering: &Clustering) -> f64 {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); clustering.k];
    for (i, &l) in clustering.labels.iter().enumerate() {
        members[l].push(i);
    }
    members
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| {
            let mut s = 0.0;
            for (a, &i) in m.iter().enumerate() {
                for &j in &m[a + 1..] {
                    s += dist.get(i, j).powi(2);
                }
            }
            s / m.len() as f64
        })
        .sum()
}

/// Interior `k` maximizing `W(k-1) - 2W(k) + W(k+1)` on a dispersion
/// curve indexed from `first_k`; ties go to the smallest `k`.
pub fn elbow_of_curve(first_k: usize, curve: &[f64]) -> Result<usize> {
    if curve.len() < 3 {
        return Err(Error::Parameter("elbow needs at least three values of k".into()));
    }
    let mut best = (f64::NEG_INFINITY, first_k + 1);
    for t in 1..curve.len() - 1 {
        let second = curve[t - 1] - 2.0 * curve[t] + curve[t + 1];
        if second > best.0 {
            best = (second, first_k + t);
        }
    }
    Ok(best.1)
}

/// Dispersion curve over `k_range` from one dendrogram.
pub fn dispersion_curve(dist: &DistanceMatrix, k_range: RangeInclusive<usize>) -> Result<Vec<f64>> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo == 0 || hi > dist.n() || lo > hi {
        return Err(Error::Parameter(format!("k range {lo}..={hi} outside 1..={}", dist.n())));
    }
    let dendrogram = single_linkage(dist)?;
    let ks: Vec<usize> = (lo..=hi).collect();
    let curve = par::map_slice(&ks, Execution::Parallel, |&k| {
        cut(&dendrogram, k).map(|c| within_cluster_dispersion(dist, &c))
    });
    curve.into_iter().collect()
}

pub fn elbow_k(dist: &DistanceMatrix, k_range: RangeInclusive<usize>) -> Result<usize> {
    if k_range.clone().count() < 3 {
        return Err(Error::Parameter("elbow needs at least three values of k".into()));
    }
    let start = *k_range.start();
    let curve = dispersion_curve(dist, k_range)?;
    elbow_of_curve(start, &curve)
}

/// Pair counts between a reference clustering `c1` and a candidate `c2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

pub fn pair_counts(c1: &Clustering, c2: &Clustering) -> Result<PairCounts> {
    if c1.len() != c2.len() {
        return Err(Error::Dimension(format!(
            "clusterings have different sizes: {} vs {}",
            c1.len(),
            c2.len()
        )));
    }
    let pairs = |x: u64| x * x.saturating_sub(1) / 2;
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut a = vec![0u64; c1.k];
    let mut b = vec![0u64; c2.k];
    for (&x, &y) in c1.labels.iter().zip(&c2.labels) {
        *joint.entry((x, y)).or_default() += 1;
        a[x] += 1;
        b[y] += 1;
    }
    let tp: u64 = joint.values().map(|&c| pairs(c)).sum();
    let same1: u64 = a.iter().map(|&c| pairs(c)).sum();
    let same2: u64 = b.iter().map(|&c| pairs(c)).sum();
    Ok(PairCounts {
        tp,
        fp: same2 - tp,
        fn_: same1 - tp,
    })
}

/// `TP / sqrt((TP + FP)(TP + FN))`. Two clusterings without any co-clustered
/// pair (all singletons on both sides) agree perfectly and score 1;
/// otherwise `TP = 0` scores 0.
pub fn fowlkes_mallows(c1: &Clustering, c2: &Clustering) -> Result<f64> {
    let PairCounts { tp, fp, fn_ } = pair_counts(c1, c2)?;
    if tp == 0 {
        return Ok(if fp == 0 && fn_ == 0 { 1.0 } else { 0.0 });
    }
    Ok(tp as f64 / (((tp + fp) as f64) * ((tp + fn_) as f64)).sqrt())
}

/// `(dA[i][j], dB[i][j])` for every `i < j`, row-major.
pub fn distance_scatter(da: &DistanceMatrix, db: &DistanceMatrix) -> Result<Vec<(f64, f64)>> {
    if da.n() != db.n() {
        return Err(Error::Dimension(format!("matrix sizes differ: {} vs {}", da.n(), db.n())));
    }
    Ok(da.condensed().into_iter().zip(db.condensed()).collect())
}

pub fn write_scatter_csv<W: Write>(points: &[(f64, f64)], mut w: W) -> std::io::Result<()> {
    writeln!(w, "dA,dB")?;
    for (a, b) in points {
        writeln!(w, "{a},{b}")?;
    }
    Ok(())
}
