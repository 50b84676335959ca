use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::weights::Weights;

/// Both sides of an exact identity and their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `1 + sum of |terms|`, the magnitude the residual is compared to.
    pub scale: f64,
}

impl IdentityCheck {
    pub fn relative(&self) -> f64 {
        self.residual / self.scale
    }
}

/// Residual of the telescoping identity behind the PC bounds:
///
/// `sum_{tau=s}^t eta_tau [<w_tau - w, -z*_tau> + g(w_tau) - g(w)]
///   = delta_{s-1}(w) - delta_t(w) + sum_{tau=s}^t delta_tau(w_tau)`
///
/// with `delta_tau(w) = (g(w) - g(w_{tau+1}))/pi_tau - <w - w_{tau+1}, W_{tau+1}>`,
/// `W_{tau+1} = W_tau + eta_tau z*_tau` and `1/pi_tau = 1 + sum_{k<=tau} eta_k`.
///
/// `etas` and `z_stars` run over `tau = 1..=T`, `ws` over `1..=T+1`; `w_star_1`
/// is `W_1`. Any `g` works, the identity is pure algebra.
#[allow(clippy::too_many_arguments)]
pub fn lemma_a1_residual(
    etas: &[f64],
    z_stars: &[Weights],
    ws: &[Weights],
    w_star_1: &Weights,
    g: &dyn Fn(&Weights) -> f64,
    w: &Weights,
    s: usize,
    t: usize,
) -> Result<IdentityCheck> {
    let n = etas.len();
    if z_stars.len() != n || ws.len() != n + 1 {
        return Err(Error::Length(format!(
            "{} step sizes need as many directions and {} iterates, got {} and {}",
            n,
            n + 1,
            z_stars.len(),
            ws.len()
        )));
    }
    if s == 0 || t > n || s > t + 1 {
        return Err(Error::Length(format!("window [{s}, {t}] outside 1..={n}")));
    }
    for x in z_stars.iter().chain(ws) {
        w_star_1.check_same_layout(x)?;
    }
    w_star_1.check_same_layout(w)?;

    // inv_pi[tau] = 1/pi_tau, big_w[tau - 1] = W_tau
    let mut inv_pi = vec![1.0];
    let mut acc = CompensatedSum::new();
    for &e in etas {
        acc.add(e);
        inv_pi.push(1.0 + acc.value());
    }
    let mut big_w = vec![w_star_1.clone()];
    for (e, z) in etas.iter().zip(z_stars) {
        let next = big_w.last().unwrap().axpy(*e, z)?;
        big_w.push(next);
    }
    let gw = g(w);
    let delta = |tau: usize, x: &Weights, gx: f64| -> Result<f64> {
        let next = &ws[tau];
        Ok((gx - g(next)) * inv_pi[tau] - x.sub(next)?.dot(&big_w[tau])?)
    };

    let mut lhs = CompensatedSum::new();
    let mut scale = 1.0;
    for tau in s..=t {
        let wt = &ws[tau - 1];
        let gwt = g(wt);
        let inner = -wt.sub(w)?.dot(&z_stars[tau - 1])?;
        let term = etas[tau - 1] * (inner + gwt - gw);
        scale += term.abs();
        lhs.add(term);
    }
    let mut rhs = CompensatedSum::new();
    let first = delta(s - 1, w, gw)?;
    let last = delta(t, w, gw)?;
    rhs.add(first);
    rhs.add(-last);
    scale += first.abs() + last.abs();
    for tau in s..=t {
        let wt = &ws[tau - 1];
        let d = delta(tau, wt, g(wt))?;
        scale += d.abs();
        rhs.add(d);
    }
    let (lhs, rhs) = (lhs.value(), rhs.value());
    Ok(IdentityCheck { lhs, rhs, residual: (lhs - rhs).abs(), scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_case(seed: u64, steps: usize, dim: usize) -> (Vec<f64>, Vec<Weights>, Vec<Weights>, Weights, Weights) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = |rng: &mut ChaCha8Rng| Weights::single((0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let etas = (0..steps).map(|_| rng.gen_range(0.01..1.0)).collect();
        let zs = (0..steps).map(|_| v(&mut rng)).collect();
        let ws = (0..=steps).map(|_| v(&mut rng)).collect();
        let w1 = v(&mut rng);
        let w = v(&mut rng);
        (etas, zs, ws, w1, w)
    }

    fn g(x: &Weights) -> f64 {
        x.iter().map(|v| v.abs() + 0.3 * v.powi(3)).sum()
    }

    #[test]
    fn exact_on_random_sequences() {
        for seed in 0..100 {
            let (etas, zs, ws, w1, w) = random_case(seed, 10, 3);
            for (s, t) in [(1, 10), (3, 7), (10, 10)] {
                let r = lemma_a1_residual(&etas, &zs, &ws, &w1, &g, &w, s, t).unwrap();
                assert!(r.relative() <= 1e-9, "seed {seed}: {r:?}");
            }
        }
    }

    #[test]
    fn empty_window_and_single_step() {
        let (etas, zs, ws, w1, w) = random_case(7, 4, 3);
        let r = lemma_a1_residual(&etas, &zs, &ws, &w1, &g, &w, 3, 2).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.residual < 1e-15);
        let (etas, zs, ws, w1, w) = random_case(8, 1, 2);
        let r = lemma_a1_residual(&etas, &zs, &ws, &w1, &g, &w, 1, 1).unwrap();
        assert!(r.residual <= 4.0 * f64::EPSILON * r.scale, "{r:?}");
    }

    #[test]
    fn length_mismatch() {
        let (etas, zs, ws, w1, w) = random_case(9, 4, 3);
        assert!(lemma_a1_residual(&etas[..3], &zs, &ws, &w1, &g, &w, 1, 3).is_err());
        assert!(lemma_a1_residual(&etas, &zs, &ws, &w1, &g, &w, 1, 5).is_err());
    }
}
