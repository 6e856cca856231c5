use holoapprox::corrugation::{solve, SolveOptions};
use holoapprox::extension::extend;
use holoapprox::jetmodel::{Dims, JetSection};
use holoapprox::verify::{certify_solution, CertifyGrid};
use std::time::Instant;

fn main() {
    let section = JetSection::from_sources(
        Dims::new(2, 1, 2).unwrap(),
        &["x1 + x2", "x1 + x2"],
        &[vec!["0", "0", "0", "0"], vec!["0", "0", "0", "0"]],
        0.1,
    )
    .unwrap();
    let eps = 2.0;
    let t0 = Instant::now();
    let opts = SolveOptions { margin_floor: 0.1, ..SolveOptions::default() };
    match solve(&section, eps, &opts) {
        Ok((pair, rep)) => {
            println!("solve ok in {:?}", t0.elapsed());
            for d in &rep.directions {
                println!(
                    "dir {} N={} margin={:.4} shape={:?} drift={:.4}",
                    d.direction, d.frequency, d.margin_after, d.shape, d.cross_partial_drift
                );
            }
            println!("final margin {:.4}", rep.final_margin);
            let ext = extend(&section, &pair).unwrap();
            for (x_res, fiber, r) in [(128usize, 2usize, 0.004), (256, 2, 0.002)] {
                let t1 = Instant::now();
                let cert = certify_solution(
                    &section, eps, &pair.delta, &ext,
                    &CertifyGrid { x_res, fiber_res: fiber, tube_radius: r },
                    &[], 0,
                ).unwrap();
                println!(
                    "certify x_res={x_res} r={r}: pass={} dm={:.4} zm={:.4} fm={:.4} Ld={:.1} Lj={:.1} infld={:.4} inflj={:.4} ({:?})",
                    cert.pass, cert.delta_margin, cert.zeroth_margin, cert.first_margin,
                    cert.lipschitz_delta, cert.lipschitz_jet, cert.inflation_delta, cert.inflation_jet,
                    t1.elapsed()
                );
            }
        }
        Err(e) => println!("solve error: {e}"),
    }
}
