//! Rough hot-path timing (diagnostic scaffolding).

use dgev_core::rng::{RngTree, StreamDomain};
use dgev_core::special::{obs_mean, obs_mean_deriv, GevParams};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use std::time::Instant;

fn main() {
    let n = 2_000_000u64;
    let tree = RngTree::new(7);
    let gev = GevParams::new(0.5, 0.3, 0.05).unwrap();

    let t0 = Instant::now();
    let mut acc = 0.0f64;
    for i in 0..n {
        let mut rng = tree.stream(StreamDomain::PgasPropose, 3, i, i ^ 7);
        let z: f64 = StandardNormal.sample(&mut rng);
        let u: f64 = rng.random();
        acc += z + u;
    }
    println!("chacha stream init + 2 draws: {:.1} ns/it (acc {acc:.2})", t0.elapsed().as_nanos() as f64 / n as f64);

    let t1 = Instant::now();
    let mut acc = 0.0f64;
    let mut rng = tree.stream(StreamDomain::Generic, 0, 0, 0);
    let t_dist = StudentT::new(5.0).unwrap();
    for _ in 0..n {
        let v: f64 = t_dist.sample(&mut rng);
        acc += v;
    }
    println!("student t draw: {:.1} ns/it (acc {acc:.2})", t1.elapsed().as_nanos() as f64 / n as f64);

    let t2 = Instant::now();
    let mut acc = 0.0f64;
    for i in 0..n {
        let b = (i as f64 / n as f64) * 6.0 - 3.0;
        acc += obs_mean(b, gev);
    }
    println!("obs_mean: {:.1} ns/it (acc {acc:.2})", t2.elapsed().as_nanos() as f64 / n as f64);

    let t3 = Instant::now();
    let mut acc = 0.0f64;
    for i in 0..n {
        let b = (i as f64 / n as f64) * 6.0 - 3.0;
        acc += obs_mean_deriv(b, gev);
    }
    println!("obs_mean_deriv: {:.1} ns/it (acc {acc:.2})", t3.elapsed().as_nanos() as f64 / n as f64);

    let t4 = Instant::now();
    let mut acc = 0.0f64;
    for i in 0..n {
        let x = (i as f64 + 1.0) / n as f64;
        acc += dgev_core::special::ln_gamma(3.0 + x);
    }
    println!("ln_gamma: {:.1} ns/it (acc {acc:.2})", t4.elapsed().as_nanos() as f64 / n as f64);
}
