//! Central finite differences of the batch losses against the analytic
//! parameter gradients on a small random network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topohash::hashgan::{Architecture, HashConfig, LossWeights, Networks, Sample};
use topohash::Execution;

const RES: usize = 12;
const BITS: usize = 8;
const H: f64 = 1e-5;
const COORDS: usize = 24;

fn toy_config() -> HashConfig {
    HashConfig {
        code_length: BITS,
        architecture: Architecture {
            encoder_channels: vec![3, 4],
            generator_channels: [4, 3, 3],
            discriminator_channels: vec![3, 4],
        },
        ..HashConfig::default()
    }
}

fn random_networks(rng: &mut ChaCha8Rng) -> Networks {
    let mut nets = Networks::init(RES, &toy_config(), rng).unwrap();
    for p in nets
        .encoder
        .params
        .iter_mut()
        .chain(nets.generator.params.iter_mut())
        .chain(nets.discriminator.params.iter_mut())
    {
        *p += rng.gen_range(-0.05..0.05);
    }
    nets
}

fn random_batch(rng: &mut ChaCha8Rng, m: usize) -> (Vec<Sample>, Vec<f64>) {
    let samples = (0..m)
        .map(|_| Sample {
            grid: (0..RES * RES).map(|_| rng.gen()).collect(),
            side: rng.gen(),
        })
        .collect();
    let mut sp = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let v = rng.gen_range(-1.0..1.0);
            sp[i * m + j] = v;
            sp[j * m + i] = v;
        }
    }
    (samples, sp)
}

#[derive(Clone, Copy, PartialEq)]
enum Net {
    Encoder,
    Generator,
    Discriminator,
}

#[derive(Clone, Copy)]
enum Loss {
    Similarity,
    Diagram,
    Adversarial,
}

fn params(nets: &mut Networks, net: Net) -> &mut Vec<f64> {
    match net {
        Net::Encoder => &mut nets.encoder.params,
        Net::Generator => &mut nets.generator.params,
        Net::Discriminator => &mut nets.discriminator.params,
    }
}

/// Norm-relative error over a random subset of coordinates.
fn check(nets: &Networks, batch: &[Sample], sp: &[f64], loss: Loss, net: Net, rng: &mut ChaCha8Rng) -> (f64, usize) {
    let refs: Vec<&Sample> = batch.iter().collect();
    let weights = match loss {
        Loss::Similarity => LossWeights { similarity: 1.0, diagram: 0.0, adversarial: 0.0 },
        Loss::Diagram => LossWeights { similarity: 0.0, diagram: 1.0, adversarial: 0.0 },
        Loss::Adversarial => LossWeights { similarity: 0.0, diagram: 0.0, adversarial: 1.0 },
    };
    let (_, grads) = nets.gradients(&refs, sp, weights, Execution::Serial).unwrap();
    let analytic = match net {
        Net::Encoder => &grads.encoder,
        Net::Generator => &grads.generator,
        Net::Discriminator => &grads.discriminator,
    };
    let value = |n: &Networks| {
        let l = n.losses(&refs, sp, Execution::Serial).unwrap();
        match loss {
            Loss::Similarity => l.similarity,
            Loss::Diagram => l.diagram,
            Loss::Adversarial => l.adversarial,
        }
    };
    let mut probe = nets.clone();
    let mut central = |k: usize, h: f64| {
        let base = params(&mut probe, net)[k];
        params(&mut probe, net)[k] = base + h;
        let up = value(&probe);
        params(&mut probe, net)[k] = base - h;
        let down = value(&probe);
        params(&mut probe, net)[k] = base;
        (up - down) / (2.0 * h)
    };
    let (mut num, mut den, mut kinks) = (0.0f64, 0.0f64, 0);
    for _ in 0..COORDS {
        let k = rng.gen_range(0..analytic.len());
        let fd = central(k, H);
        // a max-pool winner switching inside [-H, H] shows up as a
        // disagreement with a much finer difference
        let fine = central(k, H / 100.0);
        if (fd - fine).abs() > 1e-5 * fd.abs().max(fine.abs()) + 1e-8 {
            kinks += 1;
            continue;
        }
        num += (fd - analytic[k]).powi(2);
        den += fd.powi(2).max(analytic[k].powi(2));
    }
    let err = if den == 0.0 { 0.0 } else { (num / den).sqrt() };
    (err, kinks)
}

/// Worst error over 50 draws; kinked coordinates must stay rare.
fn worst(loss: Loss, net: Net, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total_kinks = 0;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let nets = random_networks(&mut rng);
        let (batch, sp) = random_batch(&mut rng, 4);
        let (err, kinks) = check(&nets, &batch, &sp, loss, net, &mut rng);
        worst = worst.max(err);
        total_kinks += kinks;
    }
    assert!(total_kinks < 50 * COORDS / 10, "{total_kinks} kinked coordinates");
    worst
}

#[test]
fn similarity_gradient_of_encoder() {
    let e = worst(Loss::Similarity, Net::Encoder, 1);
    assert!(e < 1e-4, "{e}");
}

#[test]
fn diagram_gradient_of_encoder_and_generator() {
    for (net, seed) in [(Net::Encoder, 2), (Net::Generator, 3)] {
        let e = worst(Loss::Diagram, net, seed);
        assert!(e < 1e-4, "{e}");
    }
}

#[test]
fn adversarial_gradient_of_generator_and_discriminator() {
    for (net, seed) in [(Net::Generator, 4), (Net::Discriminator, 5)] {
        let e = worst(Loss::Adversarial, net, seed);
        assert!(e < 1e-4, "{e}");
    }
}
