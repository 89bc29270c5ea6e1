//! Acceptance report: one PASS / FAIL / WARN line per criterion.
//!
//! Criteria 7 to 9 share one prepared training set and one benchmark; the
//! similarity-strategy comparison (9) is reported but only warns.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topohash::cluster::{cut, fowlkes_mallows, single_linkage, Clustering};
use topohash::code::{hamming, CodeBook};
use topohash::distances::{sinkhorn_hw, wasserstein, SinkhornConfig};
use topohash::hashgan::{Architecture, HashConfig, LossWeights, Networks, Sample};
use topohash::protocol::{prepare_training, run_once, Benchmark, ProtocolConfig, StudyResult, TrainingData};
use topohash::similarity::SimilarityStrategy;
use topohash::vectorize::{histogram, HistogramVector};
use topohash::{seed, BinaryCode, DistanceMatrix, Execution, PersistenceDiagram, PersistencePoint};

enum Verdict {
    Pass,
    Fail,
    Warn,
}

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, verdict: Verdict, detail: String) {
        let tag = match verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                self.failed += 1;
                "FAIL"
            }
            Verdict::Warn => "WARN",
        };
        println!("[{tag}] {id:>2}. {name}: {detail}");
    }

    fn check(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        self.line(id, name, if ok { Verdict::Pass } else { Verdict::Fail }, detail);
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

// ---------------------------------------------------------------------------
// 1. W1 against enumeration of augmented matchings

fn random_diagram(rng: &mut impl Rng, max_points: usize) -> PersistenceDiagram {
    let n = rng.gen_range(0..=max_points);
    let pts = (0..n)
        .map(|_| loop {
            if let Some(p) = PersistencePoint::new(rng.gen(), rng.gen()) {
                break p;
            }
        })
        .collect();
    PersistenceDiagram::new(pts)
}

fn brute_w1(a: &[PersistencePoint], b: &[PersistencePoint]) -> f64 {
    fn rec(i: usize, a: &[PersistencePoint], b: &[PersistencePoint], used: &mut [bool]) -> f64 {
        if i == a.len() {
            return b.iter().zip(used.iter()).filter(|(_, &u)| !u).map(|(p, _)| p.death - p.birth).sum();
        }
        let mut best = (a[i].death - a[i].birth) + rec(i + 1, a, b, used);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                let c = (a[i].birth - b[j].birth).abs().max((a[i].death - b[j].death).abs());
                best = best.min(c + rec(i + 1, a, b, used));
                used[j] = false;
            }
        }
        best
    }
    rec(0, a, b, &mut vec![false; b.len()])
}

fn criterion_1(r: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let (a, b) = (random_diagram(&mut rng, 4), random_diagram(&mut rng, 4));
        let got = wasserstein(&a, &b, 1.0).unwrap();
        worst = worst.max((got - brute_w1(&a.points, &b.points)).abs());
    }
    let t = start.elapsed();
    r.check(
        1,
        "W1 oracle equivalence",
        worst < 1e-9 && t < Duration::from_secs(30),
        format!("500 pairs, max |err| {worst:.1e}, {}", secs(t)),
    );
}

// ---------------------------------------------------------------------------
// 2. Hamming exactness and all-pairs speed

fn criterion_2(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut mismatches = 0;
    for _ in 0..1_000_000 {
        let (x, y): (u64, u64) = (rng.gen(), rng.gen());
        let naive = (0..64).filter(|k| (x >> k) & 1 != (y >> k) & 1).count() as u32;
        if hamming(&BinaryCode::from_u64(x, 64), &BinaryCode::from_u64(y, 64)).unwrap() != naive {
            mismatches += 1;
        }
    }
    let codes: Vec<BinaryCode> = (0..10_000).map(|_| BinaryCode::from_u64(rng.gen(), 64)).collect();
    let book = CodeBook::new(&codes).unwrap();
    let start = Instant::now();
    let all = book.condensed(Execution::Serial);
    let t = start.elapsed();
    // spot-check the big matrix against the loop
    let mut spot_ok = true;
    for _ in 0..10_000 {
        let i = rng.gen_range(0..9_999);
        let j = rng.gen_range(i + 1..10_000);
        let t_idx = i * 10_000 - i * (i + 1) / 2 + (j - i - 1);
        let (x, y) = (codes[i].words()[0], codes[j].words()[0]);
        let naive = (0..64).filter(|k| (x >> k) & 1 != (y >> k) & 1).count() as u16;
        spot_ok &= all[t_idx] == naive;
    }
    r.check(
        2,
        "Hamming exactness and speed",
        mismatches == 0 && spot_ok && all.len() == 49_995_000 && t < Duration::from_secs(5),
        format!(
            "1e6 pairs, {mismatches} mismatches; 10k codes all-pairs single-threaded in {}",
            secs(t)
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. Loss gradients against central finite differences

const GRID: usize = 12;
const FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, PartialEq)]
enum Net {
    Encoder,
    Generator,
    Discriminator,
}

fn net_params(nets: &mut Networks, net: Net) -> &mut Vec<f64> {
    match net {
        Net::Encoder => &mut nets.encoder.params,
        Net::Generator => &mut nets.generator.params,
        Net::Discriminator => &mut nets.discriminator.params,
    }
}

/// Norm-relative error over sampled coordinates, and how many coordinates
/// were skipped because a max-pool switch fell inside the step.
fn gradient_error(rng: &mut ChaCha8Rng, loss: usize, net: Net) -> (f64, usize) {
    let cfg = HashConfig {
        code_length: 8,
        architecture: Architecture {
            encoder_channels: vec![3, 4],
            generator_channels: [4, 3, 3],
            discriminator_channels: vec![3, 4],
        },
        ..HashConfig::default()
    };
    let mut nets = Networks::init(GRID, &cfg, rng).unwrap();
    for net in [Net::Encoder, Net::Generator, Net::Discriminator] {
        for p in net_params(&mut nets, net).iter_mut() {
            *p += rng.gen_range(-0.05..0.05);
        }
    }
    let m = 4;
    let batch: Vec<Sample> = (0..m)
        .map(|_| Sample {
            grid: (0..GRID * GRID).map(|_| rng.gen()).collect(),
            side: rng.gen(),
        })
        .collect();
    let refs: Vec<&Sample> = batch.iter().collect();
    let mut sp = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let v = rng.gen_range(-1.0..1.0);
            sp[i * m + j] = v;
            sp[j * m + i] = v;
        }
    }
    let mut w = [0.0; 3];
    w[loss] = 1.0;
    let weights = LossWeights { similarity: w[0], diagram: w[1], adversarial: w[2] };
    let (_, grads) = nets.gradients(&refs, &sp, weights, Execution::Serial).unwrap();
    let analytic = match net {
        Net::Encoder => grads.encoder,
        Net::Generator => grads.generator,
        Net::Discriminator => grads.discriminator,
    };
    let value = |n: &Networks| {
        let l = n.losses(&refs, &sp, Execution::Serial).unwrap();
        [l.similarity, l.diagram, l.adversarial][loss]
    };
    let mut central = |k: usize, h: f64| {
        let base = net_params(&mut nets, net)[k];
        net_params(&mut nets, net)[k] = base + h;
        let up = value(&nets);
        net_params(&mut nets, net)[k] = base - h;
        let down = value(&nets);
        net_params(&mut nets, net)[k] = base;
        (up - down) / (2.0 * h)
    };
    let (mut num, mut den, mut kinks) = (0.0f64, 0.0f64, 0);
    for _ in 0..24 {
        let k = rng.gen_range(0..analytic.len());
        let fd = central(k, FD_STEP);
        let fine = central(k, FD_STEP / 100.0);
        if (fd - fine).abs() > 1e-5 * fd.abs().max(fine.abs()) + 1e-8 {
            kinks += 1;
            continue;
        }
        num += (fd - analytic[k]).powi(2);
        den += fd.powi(2).max(analytic[k].powi(2));
    }
    (if den == 0.0 { 0.0 } else { (num / den).sqrt() }, kinks)
}

fn criterion_3(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let cases = [
        ("sim/encoder", 0, Net::Encoder),
        ("dia/encoder", 1, Net::Encoder),
        ("dia/generator", 1, Net::Generator),
        ("adv/generator", 2, Net::Generator),
        ("adv/discriminator", 2, Net::Discriminator),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    let mut skipped = 0;
    for (name, loss, net) in cases {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let (e, k) = gradient_error(&mut rng, loss, net);
            worst = worst.max(e);
            skipped += k;
        }
        ok &= worst < 1e-4;
        parts.push(format!("{name} {worst:.1e}"));
    }
    ok &= skipped < 5 * 50 * 24 / 10;
    r.check(
        3,
        "Gradient checks",
        ok,
        format!("L=8, 12x12, 50 draws each, max rel err: {} ({skipped} kinked coords skipped)", parts.join(", ")),
    );
}

// ---------------------------------------------------------------------------
// 4. FMS against pair enumeration

fn brute_fms(a: &[usize], b: &[usize]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
        }
    }
    if tp == 0 {
        return if fp == 0 && fn_ == 0 { 1.0 } else { 0.0 };
    }
    tp as f64 / (((tp + fp) as f64) * ((tp + fn_) as f64)).sqrt()
}

fn criterion_4(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let (mut exact, mut self_one, mut invariant) = (0, 0, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=50);
        let ka = rng.gen_range(1..=n.min(8));
        let kb = rng.gen_range(1..=n.min(8));
        let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..ka)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..kb)).collect();
        let (ca, cb) = (Clustering::from_labels(&a), Clustering::from_labels(&b));
        let got = fowlkes_mallows(&ca, &cb).unwrap();
        exact += (got == brute_fms(&a, &b)) as usize;
        self_one += (fowlkes_mallows(&ca, &ca).unwrap() == 1.0) as usize;
        // rename labels and reorder items jointly
        let mut names: Vec<usize> = (0..ka).collect();
        names.shuffle(&mut rng);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let pa: Vec<usize> = order.iter().map(|&i| names[a[i]]).collect();
        let pb: Vec<usize> = order.iter().map(|&i| b[i]).collect();
        let moved = fowlkes_mallows(&Clustering::from_labels(&pa), &Clustering::from_labels(&pb)).unwrap();
        invariant += ((moved - got).abs() < 1e-15) as usize;
    }
    r.check(
        4,
        "FMS oracle",
        exact == 1000 && self_one == 1000 && invariant == 1000,
        format!("1000 trials: {exact} exact, {self_one} with FMS(c,c)=1, {invariant} permutation-invariant"),
    );
}

// ---------------------------------------------------------------------------
// 5. Single linkage against MST components

fn mst_components(d: &DistanceMatrix, k: usize) -> Vec<usize> {
    let n = d.n();
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, 0usize); n];
    let mut edges = Vec::with_capacity(n);
    in_tree[0] = true;
    for j in 1..n {
        best[j] = (d.get(0, j), 0);
    }
    for _ in 1..n {
        let v = (0..n).filter(|&j| !in_tree[j]).min_by(|&a, &b| best[a].0.total_cmp(&best[b].0)).unwrap();
        in_tree[v] = true;
        edges.push((best[v].0, best[v].1, v));
        for j in 0..n {
            if !in_tree[j] && d.get(v, j) < best[j].0 {
                best[j] = (d.get(v, j), v);
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    edges.truncate(n - k);
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    for (_, a, b) in edges {
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    (0..n).map(|i| root(&mut parent, i)).collect()
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

fn criterion_5(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let (mut agree, mut total) = (0, 0);
    for _ in 0..200 {
        let n = rng.gen_range(2..=40);
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let x: f64 = rng.gen();
                v[i * n + j] = x;
                v[j * n + i] = x;
            }
        }
        let d = DistanceMatrix::from_full(n, v, "random").unwrap();
        let dendrogram = single_linkage(&d).unwrap();
        let k = rng.gen_range(1..=n);
        total += 1;
        agree += same_partition(&cut(&dendrogram, k).unwrap().labels, &mst_components(&d, k)) as usize;
    }
    r.check(5, "Single-linkage oracle", agree == total, format!("{agree}/{total} random matrices agree"));
}

// ---------------------------------------------------------------------------
// 6. Sinkhorn at small epsilon against the exact cost

fn criterion_6(r: &mut Report) {
    const RES: usize = 50;
    let centre = |i: usize| (i as f64 + 0.5) / RES as f64;
    let l1 = |a: (usize, usize), b: (usize, usize)| {
        (centre(a.0) - centre(b.0)).abs() + (centre(a.1) - centre(b.1)).abs()
    };
    let cfg = SinkhornConfig { epsilon: 1e-3, max_iterations: 200_000, tolerance: 1e-9, ..SinkhornConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = (rng.gen_range(0..RES), rng.gen_range(0..RES));
        let q = (rng.gen_range(0..RES), rng.gen_range(0..RES));
        let mut hp = HistogramVector::zeros(RES);
        let mut hq = HistogramVector::zeros(RES);
        hp.grid[p.0 * RES + p.1] = 1;
        hq.grid[q.0 * RES + q.1] = 1;
        worst = worst.max((sinkhorn_hw(&hp, &hq, &cfg).unwrap().cost - l1(p, q)).abs());

        // a diagram point and its reflection on each side
        let cell = |rng: &mut ChaCha8Rng| {
            let i = rng.gen_range(0..RES - 1);
            (i, rng.gen_range(i + 1..RES))
        };
        let (p, q) = (cell(&mut rng), cell(&mut rng));
        let hist = |c: (usize, usize)| {
            histogram(&PersistenceDiagram::from_pairs(&[(centre(c.0), centre(c.1))]), RES).unwrap()
        };
        let (pr, qr) = ((p.1, p.0), (q.1, q.0));
        let exact = (0.5 * (l1(p, q) + l1(pr, qr))).min(0.5 * (l1(p, qr) + l1(pr, q)));
        worst = worst.max((sinkhorn_hw(&hist(p), &hist(q), &cfg).unwrap().cost - exact).abs());
    }
    r.check(
        6,
        "Sinkhorn limit",
        worst < 1e-3,
        format!("eps=1e-3, 50x50, 20 point-mass pairs + 20 reflected pairs, max |err| {worst:.1e}"),
    );
}

// ---------------------------------------------------------------------------
// 7 to 9. Domain-oblivious protocol

const TRAIN_SEEDS: [u64; 3] = [1, 2, 3];

fn protocol_config() -> ProtocolConfig {
    ProtocolConfig {
        sinkhorn: SinkhornConfig { tolerance: 1e-2, ..SinkhornConfig::default() },
        hash: HashConfig {
            code_length: 64,
            learning_rate: 1e-6,
            epochs: 4,
            batch_size: 256,
            architecture: Architecture {
                encoder_channels: vec![8, 16, 16, 16],
                generator_channels: [16, 8, 8],
                discriminator_channels: vec![4, 8, 8],
            },
            ..HashConfig::default()
        },
        ..ProtocolConfig::default()
    }
}

struct Protocol {
    data: TrainingData,
    bench: Benchmark,
    base: HashConfig,
    prep: Duration,
}

impl Protocol {
    fn new() -> Self {
        let pc = protocol_config();
        let start = Instant::now();
        let set = pc.training_set(0);
        let data = prepare_training(&set, pc.resolution, pc.sinkhorn, None, Execution::Parallel).unwrap();
        let bench = pc.benchmark(0, Execution::Parallel).unwrap();
        Self { data, bench, base: pc.hash, prep: start.elapsed() }
    }

    fn run(&self, strategy: SimilarityStrategy, bits: usize, s: u64) -> (StudyResult, Duration) {
        let cfg = HashConfig { code_length: bits, seed: seed::stage(s, "train"), ..self.base.clone() };
        let start = Instant::now();
        let r = run_once(&self.data, &self.bench, strategy, &cfg, Execution::Parallel).unwrap();
        (r, start.elapsed())
    }
}

fn criteria_7_to_9(r: &mut Report) {
    let p = Protocol::new();
    let planted_vs_w1 = fowlkes_mallows(&p.bench.planted, &p.bench.ground_truth).unwrap();

    let mut by_strategy: Vec<(String, Vec<f64>)> = Vec::new();
    let mut times = Vec::new();
    for (name, strategy) in SimilarityStrategy::all() {
        let mut scores = Vec::new();
        for s in TRAIN_SEEDS {
            let (res, t) = p.run(strategy, 64, s);
            scores.push(res.fms);
            times.push(t);
        }
        by_strategy.push((name.to_string(), scores));
    }
    let s5 = by_strategy.iter().find(|(n, _)| n == "s5").unwrap().1.clone();
    let real = by_strategy.iter().find(|(n, _)| n == "real").unwrap().1.clone();
    let slowest = times.iter().max().copied().unwrap_or_default();

    r.check(
        7,
        "Domain-oblivious protocol",
        s5[0] >= 0.9 && slowest <= Duration::from_secs(600),
        format!(
            "64-bit FMS vs W1 clustering {:.3} (seed {}), training {} (slowest run), data prep {}; planted vs W1 FMS {planted_vs_w1:.3}",
            s5[0],
            TRAIN_SEEDS[0],
            secs(slowest),
            secs(p.prep)
        ),
    );

    let short: Vec<f64> = TRAIN_SEEDS.iter().map(|&s| p.run(SimilarityStrategy::S5, 24, s).0.fms).collect();
    let wins = s5.iter().zip(&short).filter(|(a, b)| a >= b).count();
    r.check(
        8,
        "Bit-length trend",
        wins >= 2,
        format!("FMS 64 bits {} vs 24 bits {}; 64 >= 24 in {wins}/3 seeds", fmt_scores(&s5), fmt_scores(&short)),
    );

    let table: Vec<String> = by_strategy.iter().map(|(n, v)| format!("{n} {}", fmt_scores(v))).collect();
    let s5_wins = s5.iter().zip(&real).filter(|(a, b)| a >= b).count();
    r.line(
        9,
        "Similarity-strategy comparison",
        if s5_wins >= 2 { Verdict::Pass } else { Verdict::Warn },
        format!("{}; s5 >= real in {s5_wins}/3 seeds", table.join(", ")),
    );
}

fn fmt_scores(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", s.join(" "))
}

// ---------------------------------------------------------------------------
// 10. CLI determinism

fn topohash(dir: &Path, threads: usize, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_topohash"))
        .current_dir(dir)
        .args(["--seed", "17", "--threads", &threads.to_string()])
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "topohash {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

const OUTPUTS: [&str; 13] = [
    "uniform/manifest.json",
    "uniform/diagram_0007.csv",
    "planted/diagram_0003.json",
    "model.bin",
    "losses.csv",
    "codes.txt",
    "hamming.csv",
    "w1.bin",
    "hw.csv",
    "pi.csv",
    "hamming_labels.csv",
    "w1_labels.csv",
    "scatter.csv",
];

/// Runs the whole pipeline in a fresh directory and returns every output,
/// plus the stdout of the commands that print results.
fn pipeline(threads: usize) -> Vec<(String, Vec<u8>)> {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let run = |args: &[&str]| topohash(d, threads, args);
    run(&["gen", "40", "12", "-o", "uniform"]);
    run(&["gen", "12", "12", "--planted", "--format", "json", "-o", "planted"]);
    let train = run(&[
        "train", "uniform/manifest.json", "-o", "model.bin", "--bits", "16", "--epochs", "3", "--lr", "1e-6",
        "--batch-size", "16", "--encoder-widths", "4,4", "--generator-widths", "4,4,4",
        "--discriminator-widths", "4,4", "--resolution", "16", "--sinkhorn-tolerance", "1e-3",
        "--losses", "losses.csv",
    ]);
    run(&["hash", "--model", "model.bin", "planted/manifest.json", "-o", "codes.txt"]);
    run(&["distmat", "codes.txt", "--metric", "hamming", "-o", "hamming.csv"]);
    run(&["distmat", "planted/manifest.json", "--metric", "w1", "-o", "w1.bin"]);
    run(&["distmat", "planted/manifest.json", "--metric", "hw", "--resolution", "16", "-o", "hw.csv"]);
    run(&["distmat", "planted/manifest.json", "--metric", "l2-pi", "--resolution", "16", "-o", "pi.csv"]);
    run(&["cluster", "hamming.csv", "--k", "2", "-o", "hamming_labels.csv"]);
    let elbow = run(&["cluster", "w1.bin", "--k-range", "1..6", "-o", "w1_labels.csv"]);
    let fms = run(&["evaluate", "w1_labels.csv", "hamming_labels.csv"]);
    run(&["scatter", "w1.bin", "hamming.csv", "-o", "scatter.csv"]);
    let mut out: Vec<(String, Vec<u8>)> =
        OUTPUTS.iter().map(|f| (f.to_string(), std::fs::read(d.join(f)).unwrap())).collect();
    out.push(("train stdout".into(), train));
    out.push(("elbow stdout".into(), elbow));
    out.push(("evaluate stdout".into(), fms));
    out
}

fn criterion_10(r: &mut Report) {
    let start = Instant::now();
    let a = pipeline(2);
    let b = pipeline(2);
    let c = pipeline(1);
    let differ = |x: &[(String, Vec<u8>)], y: &[(String, Vec<u8>)]| -> Vec<String> {
        x.iter().zip(y).filter(|(p, q)| p.1 != q.1).map(|(p, _)| p.0.clone()).collect()
    };
    let rerun = differ(&a, &b);
    let threads = differ(&a, &c);
    r.check(
        10,
        "CLI determinism",
        rerun.is_empty() && threads.is_empty(),
        format!(
            "{} artifacts compared; rerun diffs {:?}, 2-vs-1 thread diffs {:?}; {}",
            a.len(),
            rerun,
            threads,
            secs(start.elapsed())
        ),
    );
}

fn main() {
    let mut r = Report { failed: 0 };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r);
    criteria_7_to_9(&mut r);
    criterion_10(&mut r);
    println!("{} criteria failed", r.failed);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
