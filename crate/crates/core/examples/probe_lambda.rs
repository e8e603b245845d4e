use clsdoa_core::*;
use clsdoa_core::performance::optimal_lambda_bisection;
use ndarray::{array, Array2};
use rayon::prelude::*;

fn main() {
    let pi = std::f64::consts::PI;
    let m = 15;
    let ula = UlaElectrical::new(m);
    let dphi = 4.0 * pi / m as f64;
    let truth = SparseRepresentation::new(
        vec![0.0, dphi],
        array![[C64::new(1.0, 0.0)], [C64::new(1.0, 0.0)]],
        AngleUnit::Electrical,
    ).unwrap();
    let exp = build_expansion(&ula, &truth).unwrap();
    println!("beta = {:?}  (antisymmetric, shift ~ lambda*beta)", exp.beta);

    // 1) homogeneity for alpha in {2, j, -0.5}
    let n = NoiseModel::white(1e-3, 123).draw(m, 1);
    let l0 = optimal_lambda_exact(&exp, &ula, &n, 0.0).unwrap();
    for (name, alpha) in [("2", C64::new(2.0, 0.0)), ("j", C64::new(0.0, 1.0)), ("-0.5", C64::new(-0.5, 0.0))] {
        let la = optimal_lambda_exact(&exp, &ula, &n.mapv(|z| z * alpha), 0.0).unwrap();
        println!("alpha={name}: lambda(aN)={la:.12e} |a|lambda(N)={:.12e} rel dev {:.3e}",
                 alpha.norm()*l0, (la - alpha.norm()*l0).abs()/(alpha.norm()*l0));
    }

    // 2) bisection oracle agreement on 20 draws
    let mut worst = 0.0f64;
    for trial in 0..20u64 {
        let n = NoiseModel::white(1e-3, 500).with_stream(trial).draw(m, 1);
        let a = optimal_lambda_exact(&exp, &ula, &n, 0.0).unwrap();
        let b = optimal_lambda_bisection(&exp, &ula, &n, 0.0).unwrap();
        worst = worst.max((a - b).abs() / b);
    }
    println!("bisection oracle worst rel dev over 20 draws: {worst:.3e}");

    // 3) empirical E(gamma) from the m-sweep
    println!("-- E(lambda^2)/(sigma^2 m) - ln m  (empirical gamma constant) --");
    let sigma = 1e-3;
    for &mm in &[32usize, 64, 128, 256, 512, 1024] {
        let ula = UlaElectrical::new(mm);
        let dphi = 4.0 * pi / mm as f64;
        let truth = SparseRepresentation::new(
            vec![0.0, dphi],
            array![[C64::new(1.0, 0.0)], [C64::new(1.0, 0.0)]],
            AngleUnit::Electrical,
        ).unwrap();
        let exp = build_expansion(&ula, &truth).unwrap();
        let trials = 300u64;
        let noise = NoiseModel::white(sigma, 900 + mm as u64);
        let vals: Vec<f64> = (0..trials).into_par_iter().map(|tr| {
            let n = noise.with_stream(tr).draw(mm, 1);
            optimal_lambda_exact(&exp, &ula, &n, 0.0).unwrap()
        }).collect();
        let e2 = vals.iter().map(|v| v * v).sum::<f64>() / trials as f64;
        let gamma_emp = e2 / (sigma * sigma * mm as f64) - (mm as f64).ln();
        println!("m={mm:5}: empirical gamma constant = {gamma_emp:.3}");
    }
    let _ : Array2<C64>;
}
