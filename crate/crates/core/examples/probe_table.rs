use num_complex::Complex64;
use peribem_core::greenfn::{GreenFn, SParam};
use peribem_core::material::{calibrate, ElasticConstants, KernelFamily};
use peribem_core::spline::SplineC;

fn main() {
    let c = ElasticConstants::new(1.0, 1.0 / 3.0, 1.0, 2).unwrap();
    let k = calibrate(&c, KernelFamily::Constant, 0.05, 4.0).unwrap();
    let gf = GreenFn::new(&k, &c, SParam::Laplace(Complex64::new(1.5, 3.0))).unwrap();
    let (r_min, r_max) = (0.0005f64, 1.0f64);
    let rel_tol = 1e-6;

    let n0 = 120usize;
    let mut ln_r: Vec<f64> = (0..=n0)
        .map(|i| r_min.ln() + (r_max.ln() - r_min.ln()) * i as f64 / n0 as f64)
        .collect();
    let mut cache = std::collections::BTreeMap::new();
    let ev = |lr: f64| {
        let g = gf.eval(lr.exp()).unwrap();
        (g.ua_smooth, g.ub)
    };
    for &l in &ln_r {
        cache.insert(l.to_bits(), ev(l));
    }
    for round in 0..6 {
        ln_r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ln_r.dedup();
        let ua: Vec<Complex64> = ln_r.iter().map(|l| cache[&l.to_bits()].0).collect();
        let ub: Vec<Complex64> = ln_r.iter().map(|l| cache[&l.to_bits()].1).collect();
        let sua = SplineC::new(ln_r.clone(), &ua);
        let sub = SplineC::new(ln_r.clone(), &ub);
        let sa = sua.max_abs();
        let sb = sub.max_abs();
        let mids: Vec<f64> = ln_r.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mut bad = vec![];
        for &m in &mids {
            let (da, db) = *cache.entry(m.to_bits()).or_insert_with(|| ev(m));
            let ea = (sua.eval(m) - da).norm() / da.norm().max(1e-3 * sa);
            let eb = (sub.eval(m) - db).norm() / db.norm().max(1e-3 * sb);
            if ea > rel_tol || eb > rel_tol {
                bad.push((m.exp(), ea, eb));
            }
        }
        println!(
            "round {round}: nodes {}, bad {} (worst: {:?})",
            ln_r.len(),
            bad.len(),
            bad.iter()
                .map(|(r, a, b)| (*r, a.max(*b)))
                .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc })
        );
        if bad.is_empty() {
            break;
        }
        if round == 5 {
            for (r, a, b) in bad.iter().take(30) {
                println!("  bad r={r:11.6} ea={a:9.2e} eb={b:9.2e} (r/h={})", r / 0.05);
            }
        }
        for (r, _, _) in &bad {
            ln_r.push(r.ln());
        }
    }
}
