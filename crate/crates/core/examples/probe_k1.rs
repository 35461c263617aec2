use cutfem::problems::Example1;
use cutfem::stepper::{run, RunConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let order: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(3);
    let mut prev = (0.0, 0.0, 0.0);
    for n in [24usize, 48, 96] {
        let h = 1.5 / n as f64;
        let t0 = std::time::Instant::now();
        match run(&Example1, &RunConfig::new(order, h)) {
            Ok(rep) => {
                eprintln!(
                    "1/{:3} e0={:.4e} ({:.2}) e1={:.4e} ({:.2}) eOm={:.4e} ({:.2}) [{:.1}s]",
                    n * 2 / 3,
                    rep.e0, (prev.0 / rep.e0).log2(),
                    rep.e1, (prev.1 / rep.e1).log2(),
                    rep.e_omega, (prev.2 / rep.e_omega).log2(),
                    t0.elapsed().as_secs_f64()
                );
                prev = (rep.e0, rep.e1, rep.e_omega);
            }
            Err(e) => eprintln!("1/{} FAILED: {e}", n * 2 / 3),
        }
    }
}
