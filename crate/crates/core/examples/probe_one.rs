use num_complex::Complex64;
use peribem_core::greenfn::{GreenFn, SParam};
use peribem_core::material::{calibrate, ElasticConstants, KernelFamily};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let r: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.049356);
    let c = ElasticConstants::new(1.0, 1.0 / 3.0, 1.0, 2).unwrap();
    let k = calibrate(&c, KernelFamily::Constant, 0.05, 4.0).unwrap();
    let gf = GreenFn::new(&k, &c, SParam::Laplace(Complex64::new(1.5, 3.0))).unwrap();
    match gf.eval(r) {
        Ok(g) => println!(
            "r={r}: ua_smooth = {:+.12e} {:+.12e}i   ub = {:+.12e} {:+.12e}i",
            g.ua_smooth.re, g.ua_smooth.im, g.ub.re, g.ub.im
        ),
        Err(e) => println!("r={r}: ERROR {e}"),
    }
}
