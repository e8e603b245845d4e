use clsdoa_core::*;
use ndarray::{array, Array2};

fn main() {
    // properness symmetric case
    let m = 5;
    let ula = UlaElectrical::new(m);
    let phi0 = 1.1;
    let a1 = steering_vector(&ula, phi0).unwrap();
    let a2 = steering_vector(&ula, -phi0).unwrap();
    let mut z = Array2::zeros((m, 2));
    for i in 0..m {
        z[[i, 0]] = a1[i];
        z[[i, 1]] = a2[i];
    }
    let report = properness_max_count(&z, &ula).unwrap();
    println!("symmetric: count={} locations={:?} fallback={}", report.count, report.locations, report.used_fallback);

    // two-source noiseless verify scenario
    let m = 10;
    let ula = UlaElectrical::new(m);
    let truth = SparseRepresentation::new(
        vec![-0.8, 0.9],
        array![[C64::new(1.0, 0.0)], [C64::new(0.6, 0.8)]],
        AngleUnit::Electrical,
    ).unwrap();
    let obs = generate_observation(&ula, &truth, &NoiseModel::white(0.0, 1), 1).unwrap();
    let lambda = 1e-3 * m as f64;
    match solve_class(&obs.x, &ula, lambda, &ClassOptions::default()) {
        Ok(sol) => println!("solve ok: thetas {:?}", sol.support()),
        Err(e) => println!("solve err: {e}"),
    }
}
