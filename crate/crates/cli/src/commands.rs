use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use topohash::cluster::{cut, distance_scatter, elbow_k, fowlkes_mallows, single_linkage, write_scatter_csv, Clustering};
use topohash::diagrams::{
    generate_synthetic_diagram, load_manifest, normalize, save_diagram, DiagramFormat, DiagramSet, Manifest, ManifestEntry,
};
use topohash::distances::{
    distance_matrix, hamming_matrix, hw_matrix, Euclidean, SinkhornConfig, Wasserstein,
};
use topohash::hashgan::{load_model, save_model, train_with, Architecture, HashConfig};
use topohash::protocol::{self, planted_clusters, prepare_training, Benchmark, ProtocolConfig};
use topohash::vectorize::{betti_curve, histogram, persistence_image, PersistenceWeight, DEFAULT_BANDWIDTH};
use topohash::{seed, BinaryCode, DistanceMatrix, Execution, SimilarityStrategy};

use crate::args::*;

const EXEC: Execution = Execution::Parallel;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn read_matrix(path: &Path) -> Result<DistanceMatrix> {
    let tag = path.file_stem().and_then(|s| s.to_str()).unwrap_or("matrix");
    if path.extension().is_some_and(|e| e == "bin") {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(DistanceMatrix::read_binary(&bytes, tag)?)
    } else {
        let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(DistanceMatrix::read_csv(BufReader::new(f), tag)?)
    }
}

fn write_matrix(m: &DistanceMatrix, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    if path.extension().is_some_and(|e| e == "bin") {
        m.write_binary(&mut w)?;
    } else {
        m.write_csv(&mut w)?;
    }
    finish(w, path)
}

fn read_labels(path: &Path) -> Result<Clustering> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Clustering::read_csv(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_codes(path: &Path, bits: Option<usize>) -> Result<Vec<BinaryCode>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let len = match (bits, lines.first()) {
        (Some(b), _) => b,
        (None, Some(first)) => first.len() * 4,
        (None, None) => bail!("{} contains no codes", path.display()),
    };
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| BinaryCode::from_hex(l, len).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn sinkhorn_config(flags: &SinkhornFlags, set: &DiagramSet) -> SinkhornConfig {
    SinkhornConfig {
        epsilon: flags
            .epsilon
            .unwrap_or_else(|| SinkhornConfig::dataset_epsilon(set.mean_points())),
        tolerance: flags.sinkhorn_tolerance,
        max_iterations: flags.sinkhorn_iterations,
        ..Default::default()
    }
}

fn hash_config(flags: &TrainingFlags, seed: u64) -> Result<HashConfig> {
    let w = &flags.widths;
    let generator_channels: [usize; 3] = w
        .generator_widths
        .as_slice()
        .try_into()
        .context("--generator-widths takes exactly three values")?;
    let cfg = HashConfig {
        code_length: flags.bits,
        learning_rate: flags.lr,
        omega1: flags.omega1,
        omega2: flags.omega2,
        epochs: flags.epochs,
        batch_size: flags.batch_size,
        seed,
        architecture: Architecture {
            encoder_channels: w.encoder_widths.clone(),
            generator_channels,
            discriminator_channels: w.discriminator_widths.clone(),
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn strategy(s: Similarity) -> SimilarityStrategy {
    match s {
        Similarity::Binary | Similarity::S5 => SimilarityStrategy::S5,
        Similarity::Real => SimilarityStrategy::Real,
        Similarity::S1 => SimilarityStrategy::S1,
        Similarity::S2 => SimilarityStrategy::S2,
        Similarity::S3 => SimilarityStrategy::S3,
        Similarity::S4 => SimilarityStrategy::S4,
    }
}

pub fn gen(args: &GenArgs, root_seed: u64) -> Result<()> {
    let mut rng = seed::rng(seed::stage(root_seed, "gen"));
    let diagrams = if args.planted {
        planted_clusters(args.count, args.points, &mut rng).0
    } else {
        (0..args.count)
            .map(|_| generate_synthetic_diagram(args.points, &mut rng))
            .collect()
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let (format, ext) = match args.format {
        FileFormat::Csv => (DiagramFormat::Csv, "csv"),
        FileFormat::Json => (DiagramFormat::Json, "json"),
    };
    let width = diagrams.len().saturating_sub(1).to_string().len().max(4);
    let mut manifest = Manifest::default();
    for (i, d) in diagrams.iter().enumerate() {
        let name = format!("diagram_{i:0width$}.{ext}");
        save_diagram(d, &args.out.join(&name), format)?;
        manifest.diagrams.push(ManifestEntry {
            path: name.into(),
            label: d.label.clone(),
        });
    }
    manifest.write(&args.out.join("manifest.json"))?;
    println!("wrote {} diagrams to {}", diagrams.len(), args.out.display());
    Ok(())
}

pub fn train(args: &TrainArgs, root_seed: u64) -> Result<()> {
    let cfg = hash_config(&args.training, seed::stage(root_seed, "train"))?;
    let set = load_manifest(&args.manifest)?;
    if set.len() < 2 {
        bail!("training needs at least two diagrams, manifest lists {}", set.len());
    }
    let sinkhorn = sinkhorn_config(&args.sinkhorn, &set);
    let data = prepare_training(&set, args.resolution, sinkhorn, args.sinkhorn.epsilon, EXEC)?;
    let sp = strategy(args.similarity).build(&data.hw)?;
    let mut log = Vec::new();
    let model = train_with(&data.histograms, &sp, data.bounding_box, &cfg, EXEC, |s| {
        println!(
            "epoch {:>4}  l_sim {:.6}  l_dia {:.6}  l_adv {:.6}  combined {:.6}",
            s.epoch, s.similarity, s.diagram, s.adversarial, s.combined
        );
        log.push(*s);
    })?;
    save_model(&model, &args.out)?;
    if let Some(path) = &args.losses {
        let mut w = create(path)?;
        writeln!(w, "epoch,similarity,diagram,adversarial,combined")?;
        for s in &log {
            writeln!(w, "{},{},{},{},{}", s.epoch, s.similarity, s.diagram, s.adversarial, s.combined)?;
        }
        finish(w, path)?;
    }
    println!("saved {}-bit model to {}", model.code_length(), args.out.display());
    Ok(())
}

pub fn hash(args: &HashArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let set = load_manifest(&args.manifest)?;
    let codes = model.hash_all(&set.diagrams, EXEC);
    let clamped = codes.iter().filter(|(_, c)| *c).count();
    if clamped > 0 {
        log::warn!("{clamped} diagrams had coordinates outside the model's bounding box and were clamped");
    }
    let mut w = create(&args.out)?;
    for (code, _) in &codes {
        writeln!(w, "{}", code.to_hex())?;
    }
    finish(w, &args.out)
}

pub fn distmat(args: &DistmatArgs) -> Result<()> {
    let m = if args.metric == Metric::Hamming {
        hamming_matrix(&read_codes(&args.input, args.bits)?, EXEC)?
    } else {
        let set = load_manifest(&args.input)?;
        match args.metric {
            Metric::W1 => distance_matrix(&set.diagrams, &Wasserstein::default(), EXEC)?,
            Metric::Hw => {
                let config = sinkhorn_config(&args.sinkhorn, &set);
                let (norm, _) = normalize(&set)?;
                let hs = norm
                    .diagrams
                    .iter()
                    .map(|d| histogram(d, args.resolution))
                    .collect::<topohash::Result<Vec<_>>>()?;
                hw_matrix(&hs, config, EXEC)?
            }
            Metric::L2Pi | Metric::L2Bc => {
                let (norm, _) = normalize(&set)?;
                let vs = norm
                    .diagrams
                    .iter()
                    .map(|d| {
                        if args.metric == Metric::L2Pi {
                            persistence_image(d, args.resolution, DEFAULT_BANDWIDTH, PersistenceWeight::Linear)
                        } else {
                            betti_curve(d, args.resolution)
                        }
                    })
                    .collect::<topohash::Result<Vec<_>>>()?;
                distance_matrix(&vs, &Euclidean, EXEC)?
            }
            Metric::Hamming => unreachable!(),
        }
    };
    write_matrix(&m, &args.out)
}

pub fn cluster(args: &ClusterArgs) -> Result<()> {
    let m = read_matrix(&args.matrix)?;
    let k = match (&args.k, &args.k_range) {
        (Some(k), _) => *k,
        (None, Some(range)) => {
            let k = elbow_k(&m, range.clone())?;
            println!("k={k}");
            k
        }
        (None, None) => bail!("either --k or --k-range is required"),
    };
    let labels = cut(&single_linkage(&m)?, k)?;
    let mut w = create(&args.out)?;
    labels.write_csv(&mut w)?;
    finish(w, &args.out)
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let a = read_labels(&args.labels_a)?;
    let b = read_labels(&args.labels_b)?;
    println!("{}", fowlkes_mallows(&a, &b)?);
    Ok(())
}

pub fn scatter(args: &ScatterArgs) -> Result<()> {
    let a = read_matrix(&args.matrix_a)?;
    let b = read_matrix(&args.matrix_b)?;
    let points = distance_scatter(&a, &b)?;
    let mut w = create(&args.out)?;
    write_scatter_csv(&points, &mut w)?;
    finish(w, &args.out)
}

pub fn protocol(args: &ProtocolArgs, root_seed: u64) -> Result<()> {
    let base = hash_config(&args.training, 0)?;
    let pc = ProtocolConfig {
        training_count: args.training_count,
        training_points: args.points,
        per_cluster: args.per_cluster,
        cluster_points: args.points,
        resolution: args.resolution,
        sinkhorn: SinkhornConfig {
            tolerance: args.sinkhorn.sinkhorn_tolerance,
            max_iterations: args.sinkhorn.sinkhorn_iterations,
            ..Default::default()
        },
        hash: base.clone(),
    };
    let set = pc.training_set(root_seed);
    let data = prepare_training(&set, pc.resolution, pc.sinkhorn, args.sinkhorn.epsilon, EXEC)?;
    log::info!("training set ready: {} histograms, epsilon {}", data.histograms.len(), data.epsilon);
    let mut rows = vec!["study,strategy,bits,seed,fms".to_string()];
    for &s in &args.seeds {
        let bench: Benchmark = pc.benchmark(s, EXEC)?;
        let strategies = protocol::strategy_study(&data, &bench, &base, &[s], EXEC)?;
        for r in strategies {
            rows.push(format!("strategy,{},{},{},{}", r.strategy, r.code_length, s, r.fms));
        }
        let lengths = protocol::bit_length_study(&data, &bench, &base, &args.bits_list, &[s], EXEC)?;
        for r in lengths {
            rows.push(format!("bits,{},{},{},{}", r.strategy, r.code_length, s, r.fms));
        }
    }
    let table = rows.join("\n") + "\n";
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(table.as_bytes())?;
            finish(w, path)
        }
        None => {
            print!("{table}");
            Ok(())
        }
    }
}
