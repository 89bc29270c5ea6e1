//! End-to-end evaluation on synthetic data: train a hash on uniform
//! diagrams, then check how well Hamming clustering of a separate,
//! clustered dataset reproduces its W1 clustering.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::cluster::{cut, fowlkes_mallows, single_linkage, Clustering};
use crate::diagrams::{generate_training_set, normalize, BoundingBox, DiagramSet, PersistenceDiagram, PersistencePoint};
use crate::distances::{distance_matrix, hamming_matrix, DistanceMatrix, hw_matrix, SinkhornConfig, Wasserstein};
use crate::error::Result;
use crate::hashgan::{train_with, EpochStats, HashConfig, HashModel};
use crate::par::{map_slice, Execution};
use crate::seed;
use crate::similarity::SimilarityStrategy;
use crate::vectorize::{histogram, HistogramVector};

/// Centres of the two planted clusters, as (birth, death).
pub const PLANTED_CENTRES: [(f64, f64); 2] = [(0.2, 0.4), (0.5, 0.9)];
pub const PLANTED_SPREAD: f64 = 0.05;

/// One diagram of `n_points` Gaussian points around `centre`, redrawing any
/// point with `death <= birth`.
pub fn planted_diagram<R: Rng + ?Sized>(centre: (f64, f64), spread: f64, n_points: usize, rng: &mut R) -> PersistenceDiagram {
    let nb = Normal::new(centre.0, spread).expect("finite spread");
    let nd = Normal::new(centre.1, spread).expect("finite spread");
    let mut points = Vec::with_capacity(n_points);
    while points.len() < n_points {
        if let Some(p) = PersistencePoint::new(nb.sample(rng), nd.sample(rng)) {
            points.push(p);
        }
    }
    PersistenceDiagram::new(points)
}

/// `per_cluster` diagrams around each planted centre, in cluster order.
pub fn planted_clusters<R: Rng + ?Sized>(
    per_cluster: usize,
    n_points: usize,
    rng: &mut R,
) -> (Vec<PersistenceDiagram>, Clustering) {
    let mut diagrams = Vec::with_capacity(2 * per_cluster);
    let mut labels = Vec::with_capacity(2 * per_cluster);
    for (c, &centre) in PLANTED_CENTRES.iter().enumerate() {
        for _ in 0..per_cluster {
            diagrams.push(planted_diagram(centre, PLANTED_SPREAD, n_points, rng).with_label(format!("c{c}")));
            labels.push(c);
        }
    }
    (diagrams, Clustering::from_labels(&labels))
}

/// Normalized histograms of a training set with their HW distance matrix.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub histograms: Vec<HistogramVector>,
    pub bounding_box: BoundingBox,
    pub hw: DistanceMatrix,
    pub epsilon: f64,
}

/// Normalize, histogram, and compute HW distances with the given solver
/// settings. `epsilon` defaults to `0.1 / mean points`.
pub fn prepare_training(
    set: &DiagramSet,
    resolution: usize,
    sinkhorn: SinkhornConfig,
    epsilon: Option<f64>,
    exec: Execution,
) -> Result<TrainingData> {
    let (normalized, bounding_box) = normalize(set)?;
    let histograms = normalized
        .diagrams
        .iter()
        .map(|d| histogram(d, resolution))
        .collect::<Result<Vec<_>>>()?;
    let epsilon = epsilon.unwrap_or_else(|| SinkhornConfig::dataset_epsilon(set.mean_points()));
    let config = SinkhornConfig { epsilon, ..sinkhorn };
    let hw = hw_matrix(&histograms, config, exec)?;
    Ok(TrainingData {
        histograms,
        bounding_box,
        hw,
        epsilon,
    })
}

/// A clustered evaluation set with its W1 ground truth.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub diagrams: Vec<PersistenceDiagram>,
    pub planted: Clustering,
    pub w1: DistanceMatrix,
    pub ground_truth: Clustering,
    pub k: usize,
}

impl Benchmark {
    pub fn new(diagrams: Vec<PersistenceDiagram>, planted: Clustering, k: usize, exec: Execution) -> Result<Self> {
        let w1 = distance_matrix(&diagrams, &Wasserstein::default(), exec)?;
        let ground_truth = cut(&single_linkage(&w1)?, k)?;
        Ok(Self {
            diagrams,
            planted,
            w1,
            ground_truth,
            k,
        })
    }

    /// Two planted clusters of `per_cluster` diagrams with `n_points` each.
    pub fn planted(per_cluster: usize, n_points: usize, seed: u64, exec: Execution) -> Result<Self> {
        let mut rng = seed::rng(seed);
        let (diagrams, planted) = planted_clusters(per_cluster, n_points, &mut rng);
        Self::new(diagrams, planted, 2, exec)
    }

    /// Hamming matrix of the model's codes.
    pub fn hamming(&self, model: &HashModel, exec: Execution) -> Result<DistanceMatrix> {
        let codes: Vec<_> = map_slice(&self.diagrams, exec, |d| model.hash(d));
        hamming_matrix(&codes, exec)
    }

    /// FMS between the single-linkage Hamming clustering and the W1 one.
    pub fn score(&self, model: &HashModel, exec: Execution) -> Result<f64> {
        let clustering = cut(&single_linkage(&self.hamming(model, exec)?)?, self.k)?;
        fowlkes_mallows(&self.ground_truth, &clustering)
    }
}

/// Settings of a protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub training_count: usize,
    pub training_points: usize,
    pub per_cluster: usize,
    pub cluster_points: usize,
    pub resolution: usize,
    pub sinkhorn: SinkhornConfig,
    pub hash: HashConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            training_count: 1000,
            training_points: 20,
            per_cluster: 100,
            cluster_points: 20,
            resolution: 50,
            sinkhorn: SinkhornConfig::default(),
            hash: HashConfig::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn training_set(&self, seed: u64) -> DiagramSet {
        let mut rng = seed::rng(seed::stage(seed, "training-set"));
        generate_training_set(self.training_count, self.training_points, &mut rng)
    }

    pub fn benchmark(&self, seed: u64, exec: Execution) -> Result<Benchmark> {
        Benchmark::planted(self.per_cluster, self.cluster_points, seed::stage(seed, "benchmark"), exec)
    }
}

/// One trained model's score.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub strategy: String,
    pub code_length: usize,
    pub seed: u64,
    pub fms: f64,
    pub final_epoch: Option<EpochStats>,
}

/// Trains with `strategy` and `cfg` and scores on `bench`.
pub fn run_once(
    data: &TrainingData,
    bench: &Benchmark,
    strategy: SimilarityStrategy,
    cfg: &HashConfig,
    exec: Execution,
) -> Result<StudyResult> {
    let sp = strategy.build(&data.hw)?;
    let mut last = None;
    let model = train_with(&data.histograms, &sp, data.bounding_box, cfg, exec, |s| last = Some(*s))?;
    Ok(StudyResult {
        strategy: strategy.to_string(),
        code_length: cfg.code_length,
        seed: cfg.seed,
        fms: bench.score(&model, exec)?,
        final_epoch: last,
    })
}

/// Every similarity strategy, each over `seeds`.
pub fn strategy_study(
    data: &TrainingData,
    bench: &Benchmark,
    base: &HashConfig,
    seeds: &[u64],
    exec: Execution,
) -> Result<Vec<StudyResult>> {
    let mut out = Vec::new();
    for &s in seeds {
        for (_, strategy) in SimilarityStrategy::all() {
            let cfg = HashConfig {
                seed: seed::stage(s, "train"),
                ..base.clone()
            };
            let mut r = run_once(data, bench, strategy, &cfg, exec)?;
            r.seed = s;
            out.push(r);
        }
    }
    Ok(out)
}

/// The default (two-pass binary) strategy at each code length over `seeds`.
pub fn bit_length_study(
    data: &TrainingData,
    bench: &Benchmark,
    base: &HashConfig,
    lengths: &[usize],
    seeds: &[u64],
    exec: Execution,
) -> Result<Vec<StudyResult>> {
    let mut out = Vec::new();
    for &s in seeds {
        for &l in lengths {
            let cfg = HashConfig {
                code_length: l,
                seed: seed::stage(s, "train"),
                ..base.clone()
            };
            let mut r = run_once(data, bench, SimilarityStrategy::S5, &cfg, exec)?;
            r.seed = s;
            out.push(r);
        }
    }
    Ok(out)
}
