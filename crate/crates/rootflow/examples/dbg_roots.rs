use num_complex::Complex64;
use rootflow::polyroots::*;
use std::time::Instant;

fn main() {
    // simple cases
    let pol = PrecisionPolicy::new(128, -30.0, 60);
    let ens = RootEnsemble::from_c64(
        &[Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)], 128, Provenance::Sampled, None);
    let p = poly_from_roots(&ens, &pol);
    let r = find_roots(&p, &pol).unwrap();
    println!("z^2+1 roots: {:?}", r.to_c64());

    let ens3 = RootEnsemble::from_c64(
        &[Complex64::new(1.0,0.0), Complex64::new(2.0,0.0), Complex64::new(3.0,0.0)], 128, Provenance::Sampled, None);
    let p3 = poly_from_roots(&ens3, &pol);
    let mut rads = find_roots(&p3, &pol).unwrap().radii();
    rads.sort_by(|a,b| a.partial_cmp(b).unwrap());
    println!("(z-1)(z-2)(z-3): {:?}", rads);

    // derivative of z^8 - 1 = 8 z^7: all roots at 0
    let octic = RootEnsemble::from_c64(
        &(0..8).map(|j| Complex64::from_polar(1.0, 2.0*std::f64::consts::PI*j as f64/8.0)).collect::<Vec<_>>(),
        256, Provenance::Sampled, None);
    let p8 = poly_from_roots(&octic, &PrecisionPolicy::new(256, -60.0, 60));
    let d8 = differentiate(&p8, 1).unwrap();
    let r8 = find_roots(&d8, &PrecisionPolicy::new(256, -60.0, 60)).unwrap();
    println!("(z^8-1)' roots max |z| = {:.3e}, count {}", r8.radii().iter().fold(0.0f64, |a,&b| a.max(b)), r8.len());

    // round-trip at B=512, size 64
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let ens = sample_radial_roots(&RadialLaw::ComplexGaussian, 64, seed).unwrap();
        let pol = PrecisionPolicy::new(512, -256.0, 60);
        let p = poly_from_roots(&ens, &pol);
        let sol = find_roots(&p, &pol).unwrap();
        // greedy match under small perturbation
        let a = ens.to_c64();
        let mut b = sol.to_c64();
        let scale = a.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        for za in &a {
            let (idx, d) = b.iter().enumerate()
                .map(|(i, zb)| (i, (za - zb).norm()))
                .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap()).unwrap();
            worst = worst.max(d / scale);
            b.swap_remove(idx);
        }
    }
    println!("round-trip 20x size-64 at B=512: worst rel err {:.3e}, {:.2?}", worst, t0.elapsed());

    // KZ pipeline timing
    for &n in &[64usize, 128, 256, 512] {
        let t = Instant::now();
        let p = random_taylor(n, 1);
        let pol = PrecisionPolicy::for_degree(n);
        let sol = find_roots(&p, &pol).unwrap();
        let mut radii = sol.radii();
        radii.sort_by(|a,b| a.partial_cmp(b).unwrap());
        let nn = radii.len() as f64;
        let ks = radii.iter().enumerate().map(|(i, r)| {
            let f = (r / n as f64).clamp(0.0, 1.0);
            (f - i as f64/nn).abs().max((f - (i+1) as f64/nn).abs())
        }).fold(0.0f64, f64::max);
        println!("kz n={n}: ks={ks:.4}  time {:.2?}", t.elapsed());
    }
}
