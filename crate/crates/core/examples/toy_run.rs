//! Trains on the synthetic toy graph and prints metrics and pattern defects.
//!
//! `cargo run --release -p golde-core --example toy_run -- [seed] [steps] [lr] [batch] [neg] [gamma] [alpha] [norm]`

use std::time::Instant;

use golde_core::model::diagnostics::{composition_defect, inversion_defect, symmetry_defect};
use golde_core::synthetic::toy_kg;
use golde_core::{train, ManifoldConfig, TrainConfig};

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let arg = |i: usize, d: f64| args.get(i).copied().unwrap_or(d);
    let seed = arg(0, 0.0) as u64;
    let kg = toy_kg(seed);
    let manifold = ManifoldConfig::from_partition(16, None, 2, 2, arg(7, 2.0) as u32).unwrap();
    let cfg = TrainConfig {
        seed,
        steps: arg(1, 2000.0) as usize,
        lr: arg(2, 0.02),
        batch_size: arg(3, 256.0) as usize,
        neg_size: arg(4, 8.0) as usize,
        gamma: arg(5, 0.5),
        alpha: arg(6, 1.0),
        valid_every: 200,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let out = train(&kg.dataset, &manifold, &cfg, &mut |row| {
        if row.metrics.is_some() {
            println!("{}", row.tsv());
        }
    })
    .expect("training succeeds");
    let m = &out.best.model;
    let (next, prev) = kg.inverse;
    let (c1, c2, c3) = kg.composition;
    println!(
        "time {:.1}s test {} sym {:.4} inv {:.4} random-pair {:.4} comp {:.4}",
        start.elapsed().as_secs_f64(),
        out.test.map(|t| t.mrr).unwrap_or(f64::NAN),
        symmetry_defect(m, kg.symmetric).unwrap(),
        inversion_defect(m, next, prev).unwrap(),
        inversion_defect(m, kg.symmetric, kg.hierarchy).unwrap(),
        composition_defect(m, c1, c2, c3).unwrap(),
    );
}
