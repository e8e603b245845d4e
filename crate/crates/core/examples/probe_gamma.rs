use clsdoa_core::*;
use ndarray::{array, Array2};
use rayon::prelude::*;

fn two_src(m: usize) -> (UlaElectrical, SparseRepresentation) {
    let pi = std::f64::consts::PI;
    let ula = UlaElectrical::new(m);
    let truth = SparseRepresentation::new(
        vec![0.0, 4.0 * pi / m as f64],
        array![[C64::new(1.0, 0.0)], [C64::new(1.0, 0.0)]],
        AngleUnit::Electrical,
    ).unwrap();
    (ula, truth)
}

fn main() {
    let sigma = 1e-3;
    println!("-- continuum max ||a^H N|| (lambda_approx) constant --");
    for &mm in &[64usize, 256, 1024] {
        let ula = UlaElectrical::new(mm);
        let noise = NoiseModel::white(sigma, 30 + mm as u64);
        let trials = 300u64;
        let vals: Vec<f64> = (0..trials).into_par_iter().map(|tr| {
            let n = noise.with_stream(tr).draw(mm, 1);
            lambda_approx(&ula, &n, 0.0)
        }).collect();
        let e2 = vals.iter().map(|v| v * v).sum::<f64>() / trials as f64;
        println!("m={mm:5}: gamma_const = {:.3}", e2 / (sigma * sigma * mm as f64) - (mm as f64).ln());
    }
    println!("-- DFT-grid max constant (expect ~0.577) --");
    for &mm in &[256usize, 1024] {
        let noise = NoiseModel::white(sigma, 60 + mm as u64);
        let trials = 2000u64;
        let ula = UlaElectrical::new(mm);
        let vals: Vec<f64> = (0..trials).into_par_iter().map(|tr| {
            let n = noise.with_stream(tr).draw(mm, 1);
            let mut best = 0.0f64;
            for k in 0..mm {
                let phi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / mm as f64;
                let a = steering_vector(&ula, phi).unwrap();
                let mut z = C64::new(0.0, 0.0);
                for i in 0..mm { z += a[i].conj() * n[[i, 0]]; }
                best = best.max(z.norm_sqr());
            }
            best
        }).collect();
        let e2 = vals.iter().sum::<f64>() / trials as f64;
        println!("m={mm:5}: gamma_const = {:.3}", e2 / (sigma * sigma * mm as f64) - (mm as f64).ln());
    }
    println!("-- true estimator lambda (smallest with cardinality 2, bisected) at m=32 --");
    let (ula, truth) = two_src(32);
    let noise = NoiseModel::white(sigma, 777);
    let trials = 60u64;
    let vals: Vec<f64> = (0..trials).into_par_iter().filter_map(|tr| {
        let obs = generate_observation(&ula, &truth, &noise.with_stream(tr), 1).unwrap();
        // bisect on lambda for cardinality 2
        let card = |lam: f64| -> Option<usize> {
            solve_class(&obs.x, &ula, lam, &ClassOptions::default()).ok().map(|s| s.order())
        };
        let mut hi = 0.5 * lambda_approx(&ula, &obs.x, 0.0);
        while card(hi) != Some(2) { hi *= 0.7; if hi < 1e-8 { return None; } }
        let mut lo = hi;
        loop {
            lo *= 0.7;
            match card(lo) { Some(c2) if c2 == 2 => continue, _ => break }
        }
        for _ in 0..25 {
            let mid = 0.5 * (lo + hi);
            match card(mid) { Some(2) => hi = mid, _ => lo = mid }
        }
        Some(hi)
    }).collect();
    let e2 = vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64;
    println!("m=32 (n={} ok trials): gamma_const = {:.3}", vals.len(), e2 / (sigma * sigma * 32.0) - 32f64.ln());
    let _ : Array2<C64>;
}
