use clsdoa_core::*;
use ndarray::Array2;

fn main() {
    let mut seed = 11u64;
    for trial in 0..10 {
        seed = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        let m = 4 + (seed % 5) as usize;
        let t = 1 + (seed % 3) as usize;
        if trial != 4 && trial != 9 { continue; }
        let ula = UlaElectrical::new(m);
        let grid = Grid::uniform(ula.domain(), 24 + (seed % 40) as usize);
        let noise = NoiseModel::white(1.0, seed);
        let x = noise.draw(m, t);
        let lambda = 0.35 * lambda_max(&x, &grid, &ula);
        let sol = solve_group_lasso(&x, &grid, &ula, lambda, &SolverOptions::default()).unwrap();
        // dual norms from the final residual
        let duals: Vec<f64> = grid.points().iter().map(|&th| {
            let a = steering_vector(&ula, th).unwrap();
            let mut s = 0.0;
            for tt in 0..t {
                let mut z = C64::new(0.0, 0.0);
                for i in 0..m { z += a[i].conj() * sol.residual[[i, tt]]; }
                s += z.norm_sqr();
            }
            s.sqrt() / lambda
        }).collect();
        println!("trial {trial}: m={m} t={t} N={} support={} kkt={:.1e}", grid.len(), sol.support.len(), sol.kkt_residual);
        println!("  duals/lambda: {:?}", duals.iter().map(|d| format!("{:.6}", d)).collect::<Vec<_>>());
        let _ : Array2<C64>;
    }
}
