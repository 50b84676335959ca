//! The built-in quantizers side by side on a few inputs, at two sharpness
//! levels, plus the monotonicity / fixed-point checks for each.
//!
//! ```text
//! cargo run --example quantizer_gallery
//! ```

use proxconnect::quantizers::{
    check_fixed_points, check_prox_axioms, probe_grid, PiecewiseLinearQuantizer, QuantizationGrid, QuantizerSpec,
};

fn main() -> proxconnect::Result<()> {
    let g = QuantizationGrid::ternary();
    let specs = [
        ("identity", QuantizerSpec::Identity),
        ("projector", QuantizerSpec::Projector(g.clone())),
        ("plq 0.2/0.1", QuantizerSpec::PiecewiseLinear(PiecewiseLinearQuantizer::new(g.clone(), 0.2, 0.1)?)),
        (
            "plq unclamped",
            QuantizerSpec::PiecewiseLinear(PiecewiseLinearQuantizer::new(g.clone(), 0.2, 0.1)?.unclamped()),
        ),
        ("binary_relax mu=1", QuantizerSpec::binary_relax(g.clone(), 1.0)?),
        ("example43 eps=0.5", QuantizerSpec::example43(0.5, 1.0)?),
    ];
    let xs = [-1.6, -0.7, -0.3, 0.1, 0.45, 0.8, 1.4];
    print!("{:<18} {:>4}", "quantizer", "s");
    for x in xs {
        print!(" {x:>7}");
    }
    println!();
    for (name, q) in &specs {
        for s in [1.0, 10.0] {
            print!("{name:<18} {s:>4}");
            for x in xs {
                print!(" {:>7.3}", q.eval_scalar(x, s, 0)?);
            }
            println!();
        }
    }

    println!();
    let probes = probe_grid(-2.0, 2.0, 10_000);
    for (name, q) in &specs {
        let rep = check_prox_axioms(q, &probes, 3.0)?;
        let fixed = check_fixed_points(q, 3.0)?;
        println!("{name:<18} monotone violations {}, levels moved {}", rep.monotonicity_violations, fixed.len());
    }
    Ok(())
}
