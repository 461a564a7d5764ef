//! Apply a random shear schedule to a point, invert it, and compare the
//! tangent flow with finite differences. Points of the fixed set stay put.
//!
//! ```text
//! cargo run --release --example shear_flow -- [seed] [n_pairs] [T]
//! ```

use shearmix::{
    flow, flow_inverse, make_schedule, tangent_flow, wrap_signed, Provenance, TorusPoint, FIXED_SET,
};

fn main() -> shearmix::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().map_or(1, |s| s.parse().expect("seed"));
    let n_pairs: usize = args.get(1).map_or(3, |s| s.parse().expect("n_pairs"));
    let t_max: f64 = args.get(2).map_or(10.0, |s| s.parse().expect("T"));

    let sched = make_schedule(Provenance::RandomUniform { t_max, seed }, n_pairs)?;
    println!("{}", sched.to_json());

    let p = TorusPoint::new(1.0, 2.0);
    let q = flow(p, &sched);
    let back = flow_inverse(q, &sched);
    println!("p = ({:.6}, {:.6}) -> ({:.6}, {:.6})", p.x1(), p.x2(), q.x1(), q.x2());
    println!("round trip error {:.3e}", back.dist(&p));

    let (_, m) = tangent_flow(p, &sched);
    println!("D Phi = [[{:.6}, {:.6}], [{:.6}, {:.6}]], det - 1 = {:.3e}", m.a, m.b, m.c, m.d, m.det() - 1.0);
    let h = 1e-6;
    let plus = flow(TorusPoint::new(p.x1() + h, p.x2()), &sched);
    let minus = flow(TorusPoint::new(p.x1() - h, p.x2()), &sched);
    println!(
        "first column by central differences: ({:.6}, {:.6})",
        wrap_signed(plus.x1() - minus.x1()) / (2.0 * h),
        wrap_signed(plus.x2() - minus.x2()) / (2.0 * h)
    );

    for f in FIXED_SET {
        println!("fixed point ({}, {}) maps to itself: {}", f.x1(), f.x2(), flow(f, &sched) == f);
    }
    Ok(())
}
