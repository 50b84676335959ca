//! Moreau envelope gradients: closed form vs prox-of-conjugate vs finite
//! differences, for each dual regularizer and a few smoothing levels.

use proxconnect::cli::verify::dual_regularizers;
use proxconnect::gcg::moreau_check;

fn main() -> proxconnect::Result<()> {
    let probes: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
    for reg in dual_regularizers() {
        for mu in [0.1, 1.0, 5.0] {
            let c = moreau_check(&reg, mu, &probes)?;
            println!(
                "{:<60} mu={mu:<4} routes {:.1e}  fd {:.1e}  conjugate {:.1e}",
                format!("{reg:?}"),
                c.route_gap,
                c.fd_gap,
                c.conjugate_gap
            );
        }
    }
    Ok(())
}
