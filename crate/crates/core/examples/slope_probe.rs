use parlab::littlewood_paley::BumpProfile;
use parlab::multiplier::eval_m;

fn main() {
    let p = BumpProfile::default();
    for (name, lo, hi) in [("nonstat 2^2..2^7", 2, 7), ("nonstat 2^3..2^8", 3, 8)] {
        let mut pts = vec![];
        for e in lo..=hi {
            let lam = 2.0f64.powi(e);
            let (xi, eta) = (lam, lam.powf(0.25));
            let s = eval_m(&p, xi, eta, 1e-13).unwrap();
            let ok = s.value.norm() > 10.0 * s.abs_error_bound.max(1e-15);
            println!("{name} 2^{e}: |m|={:.3e} err={:.1e} certified_nonzero={ok}", s.value.norm(), s.abs_error_bound);
            pts.push((lam.log2(), s.value.norm().log2()));
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        println!("== {name}: slope {:.3}\n", (n * sxy - sx * sy) / (n * sxx - sx * sx));
    }
}
