use clsdoa_core::consistency::*;
use clsdoa_core::C64;
use ndarray::array;

fn main() {
    let pi = std::f64::consts::PI;
    let scan = DprimeScan::default();

    // Threshold for specific Xi structures: Xi = [[1, rho],[conj rho, 1]]
    println!("-- threshold vs phase of rho (|rho| = 1, i.e. T=1) --");
    for k in 0..8 {
        let ph = k as f64 * pi / 4.0;
        let rho = C64::from_polar(1.0, ph);
        let xi = array![[C64::new(1.0,0.0), rho],[rho.conj(), C64::new(1.0,0.0)]];
        // bisect for this single Xi
        let (mut lo, mut hi) = (1.2*pi, 4.0*pi);
        if asymptotic_consistency_test(lo, &xi, &scan) { println!("phase {ph:.3}: passes at 1.2pi already"); continue; }
        for _ in 0..26 { let mid = 0.5*(lo+hi); if asymptotic_consistency_test(mid, &xi, &scan) { hi = mid } else { lo = mid } }
        println!("phase {:.3}pi: threshold = {:.4}pi", ph/pi, hi/pi);
    }

    println!("-- threshold vs |rho| (phase 0) --");
    for k in 0..6 {
        let r = k as f64 / 5.0;
        let rho = C64::new(r, 0.0);
        let xi = array![[C64::new(1.0,0.0), rho],[rho.conj(), C64::new(1.0,0.0)]];
        let (mut lo, mut hi) = (1.05*pi, 4.0*pi);
        if asymptotic_consistency_test(lo, &xi, &scan) { println!("|rho| {r:.2}: passes at 1.05pi already"); continue; }
        for _ in 0..26 { let mid = 0.5*(lo+hi); if asymptotic_consistency_test(mid, &xi, &scan) { hi = mid } else { lo = mid } }
        println!("|rho| {r:.2}: threshold = {:.4}pi", hi/pi);
    }

    // Default sampler (T=1, K=200)
    for (t, k) in [(1usize, 200usize), (2, 200), (4, 200), (1, 50)] {
        let sampler = XiSampler { seed: 7, snapshots: t, count: k };
        match resolution_threshold_search(&sampler, 0.005*pi, &scan) {
            Ok((d, _)) => println!("sampler T={t} K={k}: threshold = {:.4}pi", d/pi),
            Err(e) => println!("sampler T={t} K={k}: {e}"),
        }
    }
}
