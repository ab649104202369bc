//! Brute-force reference computations used to validate the samplers and
//! dynamics. Everything here enumerates states directly and never calls
//! into the event-driven machinery, so it can serve as an independent
//! cross-check.

use crate::engine::ModelParams;
use crate::lattice::{BoundaryCondition, Domain, Neighbor};

/// Exact Gibbs distribution over all `2^N` configurations of `domain`,
/// indexed by bitmask (bit i set = site i carries +1).
///
/// Energy convention: `pi(sigma) ∝ exp(beta * sum_{v~w} sigma_v sigma_w
/// + beta * sum_{v~ghost} sigma_v eta_ghost + h * sum_v sigma_v)`, each
/// interior edge counted once. Panics above 20 sites.
pub fn enumerate_gibbs(domain: &Domain, bc: &BoundaryCondition, params: &ModelParams) -> Vec<f64> {
    let n = domain.site_count();
    assert!(n <= 20, "enumeration limited to 20 sites");
    assert!(params.beta.is_finite());
    let states = 1usize << n;
    let mut weights = vec![0.0f64; states];
    let mut z = 0.0;
    for mask in 0..states {
        let spin = |i: u32| -> f64 {
            if mask >> i & 1 == 1 {
                1.0
            } else {
                -1.0
            }
        };
        let mut energy = 0.0;
        for i in 0..n {
            let si = spin(i as u32);
            for nb in domain.neighbors_of(i) {
                match *nb {
                    // count interior edges once
                    Neighbor::Site(j) => {
                        if (j as usize) > i {
                            energy += si * spin(j);
                        }
                    }
                    Neighbor::Ghost(g) => energy += si * bc.ghost_spin(g) as f64,
                }
            }
            energy += params.h / params.beta * si;
        }
        let w = (params.beta * energy).exp();
        weights[mask] = w;
        z += w;
    }
    for w in &mut weights {
        *w /= z;
    }
    weights
}

/// `enumerate_gibbs` conditioned on nonnegative total magnetization, the
/// torus plus-phase reference.
pub fn enumerate_gibbs_nonneg(domain: &Domain, bc: &BoundaryCondition, params: &ModelParams) -> Vec<f64> {
    let n = domain.site_count() as u32;
    let mut w = enumerate_gibbs(domain, bc, params);
    let mut z = 0.0;
    for (mask, p) in w.iter_mut().enumerate() {
        let plus = (mask as u64).count_ones();
        // sum sigma = 2*plus - n
        if 2 * plus < n {
            *p = 0.0;
        } else {
            z += *p;
        }
    }
    for p in &mut w {
        *p /= z;
    }
    w
}

/// Spontaneous magnetization `m*(beta) = (1 - sinh(2 beta)^{-4})^{1/8}`
/// for `beta > beta_c` (Onsager-Yang closed form).
pub fn spontaneous_magnetization(beta: f64) -> f64 {
    let s = (2.0 * beta).sinh();
    (1.0 - s.powi(-4)).powf(0.125)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SpinConfig;

    #[test]
    fn single_site_marginal() {
        // 1x1 box, plus bc, beta=1: P(+) = 1/(1+e^{-8})
        let d = Domain::new_box((0, 0), 1, 1).unwrap();
        let bc = BoundaryCondition::all_plus(&d);
        let w = enumerate_gibbs(&d, &bc, &ModelParams::new(1.0));
        assert!((w[1] - 1.0 / (1.0 + (-8.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn distribution_sums_to_one_and_prefers_aligned_states() {
        let d = Domain::new_box((0, 0), 2, 2).unwrap();
        let bc = BoundaryCondition::all_plus(&d);
        let w = enumerate_gibbs(&d, &bc, &ModelParams::new(1.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let all_plus = 0b1111;
        assert!(w.iter().enumerate().all(|(m, &p)| p <= w[all_plus] || m == all_plus));
    }

    #[test]
    fn field_shifts_marginal() {
        let d = Domain::new_box((0, 0), 1, 1).unwrap();
        let bc = BoundaryCondition::free(&d);
        let w = enumerate_gibbs(&d, &bc, &ModelParams::with_field(1.0, 0.7));
        // free single site: P(+) = e^h/(e^h+e^{-h})
        assert!((w[1] - 1.0 / (1.0 + (-1.4f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn nonneg_conditioning() {
        let d = Domain::new_torus(3).unwrap();
        let bc = BoundaryCondition::free(&d);
        let w = enumerate_gibbs_nonneg(&d, &bc, &ModelParams::new(1.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (mask, &p) in w.iter().enumerate() {
            if (mask.count_ones() as i64) * 2 < 9 {
                assert_eq!(p, 0.0);
            }
        }
        let _ = SpinConfig::all_plus(&d);
    }

    #[test]
    fn spontaneous_magnetization_values() {
        assert!((spontaneous_magnetization(0.6) - 0.9736086674403005).abs() < 1e-12);
        assert!(spontaneous_magnetization(1.0) > 0.999);
    }
}
