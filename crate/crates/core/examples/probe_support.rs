use clsdoa_core::*;

fn main() {
    let mut seed = 11u64;
    for trial in 0..10 {
        seed = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        let m = 4 + (seed % 5) as usize;
        let t = 1 + (seed % 3) as usize;
        let ula = UlaElectrical::new(m);
        let grid = Grid::uniform(ula.domain(), 24 + (seed % 40) as usize);
        let noise = NoiseModel::white(1.0, seed);
        let x = noise.draw(m, t);
        let lambda = 0.35 * lambda_max(&x, &grid, &ula);
        let sol = solve_group_lasso(&x, &grid, &ula, lambda, &SolverOptions::default()).unwrap();
        let mut gammas: Vec<f64> = sol
            .support
            .iter()
            .map(|&(i, _)| {
                (0..sol.s_hat.ncols())
                    .map(|tt| sol.s_hat[[i, tt]].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        gammas.sort_by(|a, b| b.partial_cmp(a).unwrap());
        println!(
            "trial {trial}: m={m} t={t} N={} support={} 2m={} gammas(sorted)={:?}",
            grid.len(), sol.support.len(), 2*m,
            gammas.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>()
        );
    }
}
