use rand::Rng;

use super::ChangeMap;
use crate::costmodel::CostMap;
use crate::error::{Error, Result};
use crate::rng;

pub const LAMBDA_MIN: f64 = 1e-10;
pub const LAMBDA_MAX: f64 = 1e10;
pub const MAX_BISECTIONS: usize = 200;

/// Ternary change probabilities for one Lagrange multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    pub width: usize,
    pub height: usize,
    pub p_plus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub p_zero: Vec<f64>,
    pub lambda: f64,
}

impl ProbabilityMap {
    pub fn len(&self) -> usize {
        self.p_zero.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_zero.is_empty()
    }
}

#[inline]
fn gibbs(lambda: f64, rho_plus: f64, rho_minus: f64) -> (f64, f64, f64) {
    // exponents are never positive, so the denominator stays in [1, 3]
    let ep = (-lambda * rho_plus).exp();
    let em = (-lambda * rho_minus).exp();
    let z = 1.0 + ep + em;
    (ep / z, em / z, 1.0 / z)
}

#[inline]
fn entropy_bits(probs: [f64; 3]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

pub fn probabilities_from_costs(costs: &CostMap, lambda: f64) -> Result<ProbabilityMap> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda {lambda} must be finite and nonnegative")));
    }
    let n = costs.len();
    let (mut p_plus, mut p_minus, mut p_zero) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (&rp, &rm) in costs.rho_plus.iter().zip(&costs.rho_minus) {
        let (a, b, c) = gibbs(lambda, rp, rm);
        p_plus.push(a);
        p_minus.push(b);
        p_zero.push(c);
    }
    Ok(ProbabilityMap {
        width: costs.width,
        height: costs.height,
        p_plus,
        p_minus,
        p_zero,
        lambda,
    })
}

/// Total ternary entropy in bits.
pub fn payload_of(probs: &ProbabilityMap) -> f64 {
    (0..probs.len())
        .map(|i| entropy_bits([probs.p_plus[i], probs.p_minus[i], probs.p_zero[i]]))
        .sum()
}

fn payload_at(costs: &CostMap, lambda: f64) -> f64 {
    costs
        .rho_plus
        .iter()
        .zip(&costs.rho_minus)
        .map(|(&rp, &rm)| {
            let (a, b, c) = gibbs(lambda, rp, rm);
            entropy_bits([a, b, c])
        })
        .sum()
}

fn tolerance(target: f64) -> f64 {
    (1e-6 * target).max(1e-3)
}

/// Finds the multiplier whose Gibbs distribution carries `target_bits`.
///
/// The payload is strictly decreasing in lambda, so the search doubles from
/// [`LAMBDA_MIN`] until the payload falls below the target, then bisects the
/// last doubling interval down to floating-point resolution.
pub fn solve_lambda(costs: &CostMap, target_bits: f64) -> Result<ProbabilityMap> {
    if !(target_bits >= 0.0) || !target_bits.is_finite() {
        return Err(Error::InvalidArgument(format!("target payload {target_bits} bits")));
    }
    let tol = tolerance(target_bits);
    if target_bits == 0.0 {
        let probs = probabilities_from_costs(costs, LAMBDA_MAX)?;
        let payload = payload_of(&probs);
        if payload > tol {
            return Err(Error::NoConvergence { payload, target: 0.0 });
        }
        return Ok(probs);
    }
    let mut hi = LAMBDA_MIN;
    let mut payload_hi = payload_at(costs, hi);
    if payload_hi <= target_bits {
        if target_bits - payload_hi <= tol {
            return probabilities_from_costs(costs, hi);
        }
        return Err(Error::InfeasiblePayload {
            target: target_bits,
            max: payload_hi,
        });
    }
    while payload_hi > target_bits {
        if hi >= LAMBDA_MAX {
            // target ~ 0: the cap is the answer if it is close enough
            if payload_hi - target_bits <= tol {
                return probabilities_from_costs(costs, LAMBDA_MAX);
            }
            return Err(Error::NoConvergence {
                payload: payload_hi,
                target: target_bits,
            });
        }
        hi = (hi * 2.0).min(LAMBDA_MAX);
        payload_hi = payload_at(costs, hi);
    }
    let mut lo = hi / 2.0;
    let mut payload_lo = payload_at(costs, lo);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let p = payload_at(costs, mid);
        if p > target_bits {
            lo = mid;
            payload_lo = p;
        } else {
            hi = mid;
            payload_hi = p;
        }
    }
    let (lambda, payload) = if payload_lo - target_bits <= target_bits - payload_hi {
        (lo, payload_lo)
    } else {
        (hi, payload_hi)
    };
    if (payload - target_bits).abs() > tol {
        return Err(Error::NoConvergence {
            payload,
            target: target_bits,
        });
    }
    probabilities_from_costs(costs, lambda)
}

/// Expected additive distortion of a probability map under `costs`.
pub fn expected_distortion(probs: &ProbabilityMap, costs: &CostMap) -> f64 {
    (0..probs.len())
        .map(|i| probs.p_plus[i] * costs.rho_plus[i] + probs.p_minus[i] * costs.rho_minus[i])
        .sum()
}

/// Draws one uniform sample per pixel in row-major order: +1 below `p_plus`,
/// -1 above `1 - p_minus`, else 0. Wet directions are never taken.
pub fn sample_changes<R: Rng>(probs: &ProbabilityMap, costs: &CostMap, rng: &mut R) -> ChangeMap {
    let delta = (0..probs.len())
        .map(|i| {
            let p: f64 = rng.gen();
            if p < probs.p_plus[i] && !costs.is_wet(costs.rho_plus[i]) {
                1
            } else if p > 1.0 - probs.p_minus[i] && !costs.is_wet(costs.rho_minus[i]) {
                -1
            } else {
                0
            }
        })
        .collect();
    ChangeMap {
        width: probs.width,
        height: probs.height,
        delta,
    }
}

/// Optimal embedding simulator: solve for lambda, then sample.
pub fn simulate_embedding(costs: &CostMap, target_bits: f64, seed: u64) -> Result<ChangeMap> {
    let probs = solve_lambda(costs, target_bits)?;
    Ok(sample_changes(&probs, costs, &mut rng::stream(seed, &[])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::WET_VALUE;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_costs(w: usize, h: usize, seed: u64) -> CostMap {
        let mut r = rng::stream(seed, &[42]);
        let plus = (0..w * h).map(|_| r.gen_range(0.01..10.0)).collect();
        let minus = (0..w * h).map(|_| r.gen_range(0.01..10.0)).collect();
        CostMap::new(w, h, plus, minus).unwrap()
    }

    #[test]
    fn ln2_example() {
        let c = CostMap::uniform(2, 2, 3.0).unwrap();
        let p = probabilities_from_costs(&c, std::f64::consts::LN_2 / 3.0).unwrap();
        for i in 0..4 {
            assert!((p.p_plus[i] - 0.25).abs() < 1e-15);
            assert!((p.p_minus[i] - 0.25).abs() < 1e-15);
            assert!((p.p_zero[i] - 0.5).abs() < 1e-15);
        }
        let one = CostMap::uniform(1, 1, 1.0).unwrap();
        let q = probabilities_from_costs(&one, std::f64::consts::LN_2).unwrap();
        assert!((payload_of(&q) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_is_uniform_even_when_wet() {
        let c = CostMap::new(2, 1, vec![WET_VALUE, 1.0], vec![2.0, WET_VALUE]).unwrap();
        let p = probabilities_from_costs(&c, 0.0).unwrap();
        for i in 0..2 {
            assert_eq!(p.p_plus[i], 1.0 / 3.0);
            assert_eq!(p.p_zero[i], 1.0 / 3.0);
        }
        assert!((payload_of(&p) - 2.0 * 3f64.log2()).abs() < 1e-12);
        assert!(probabilities_from_costs(&c, -1.0).is_err());
    }

    #[test]
    fn wet_probability_underflows() {
        let c = CostMap::new(1, 1, vec![WET_VALUE], vec![1.0]).unwrap();
        let p = probabilities_from_costs(&c, 1e-6).unwrap();
        assert!(p.p_plus[0] < 1e-300);
        let z = CostMap::uniform(3, 1, 5.0).unwrap();
        let p = probabilities_from_costs(&z, 1e6).unwrap();
        assert_eq!(payload_of(&p), 0.0);
    }

    #[test]
    fn zero_target_drives_lambda_to_cap() {
        let c = random_costs(8, 8, 1);
        let p = solve_lambda(&c, 0.0).unwrap();
        assert_eq!(p.lambda, LAMBDA_MAX);
        assert!(payload_of(&p) < 1e-3);
        assert!(p.p_zero.iter().all(|&z| (z - 1.0).abs() < 1e-12));
        let changes = simulate_embedding(&c, 0.0, 3).unwrap();
        assert_eq!(changes.count_changes(), 0);
    }

    #[test]
    fn near_maximal_target_on_uniform_costs() {
        let n = 64usize;
        let c = CostMap::uniform(8, 8, 1.0).unwrap();
        let target = n as f64 * 3f64.log2() * (1.0 - 1e-9);
        let p = solve_lambda(&c, target).unwrap();
        assert!(p.lambda > 0.0 && p.lambda < 1e-3);
        for i in 0..n {
            assert!((p.p_plus[i] - 1.0 / 3.0).abs() < 1e-3);
        }
    }

    #[test]
    fn infeasible_target() {
        let c = CostMap::uniform(2, 2, 1.0).unwrap();
        assert!(matches!(solve_lambda(&c, 7.0), Err(Error::InfeasiblePayload { .. })));
        assert!(solve_lambda(&c, -1.0).is_err());
    }

    /// Independent reference: fixed 1000-step bisection on a wide bracket.
    fn oracle_lambda(costs: &CostMap, target: f64) -> f64 {
        let entropy = |lambda: f64| -> f64 {
            let mut total = 0.0;
            for i in 0..costs.len() {
                let a = (-lambda * costs.rho_plus[i]).exp();
                let b = (-lambda * costs.rho_minus[i]).exp();
                let z = 1.0 + a + b;
                for p in [a / z, b / z, 1.0 / z] {
                    if p > 0.0 {
                        total -= p * p.log2();
                    }
                }
            }
            total
        };
        let (mut lo, mut hi) = (0.0f64, 1e6f64);
        for _ in 0..1000 {
            let mid = 0.5 * (lo + hi);
            if entropy(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lambda_matches_bisection_oracle() {
        for seed in 0..5 {
            let c = random_costs(4, 4, seed);
            let got = solve_lambda(&c, 8.0).unwrap();
            let want = oracle_lambda(&c, 8.0);
            assert!(
                ((got.lambda - want) / want).abs() < 1e-6,
                "seed {seed}: {} vs {want}",
                got.lambda
            );
            assert!((payload_of(&got) - 8.0).abs() <= 1e-3);
        }
    }

    #[test]
    fn simulator_branches() {
        let probs = ProbabilityMap {
            width: 1,
            height: 1,
            p_plus: vec![0.1],
            p_minus: vec![0.05],
            p_zero: vec![0.85],
            lambda: 1.0,
        };
        let costs = CostMap::uniform(1, 1, 1.0).unwrap();
        struct Fixed(f64);
        impl rand::RngCore for Fixed {
            fn next_u32(&mut self) -> u32 {
                unreachable!()
            }
            fn next_u64(&mut self) -> u64 {
                // rand maps the top 53 bits to [0, 1)
                ((self.0 * (1u64 << 53) as f64) as u64) << 11
            }
            fn fill_bytes(&mut self, _: &mut [u8]) {
                unreachable!()
            }
            fn try_fill_bytes(&mut self, _: &mut [u8]) -> std::result::Result<(), rand::Error> {
                unreachable!()
            }
        }
        assert_eq!(sample_changes(&probs, &costs, &mut Fixed(0.05)).delta, vec![1]);
        assert_eq!(sample_changes(&probs, &costs, &mut Fixed(0.97)).delta, vec![-1]);
        assert_eq!(sample_changes(&probs, &costs, &mut Fixed(0.5)).delta, vec![0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn payload_strictly_decreasing(seed in any::<u64>(), a in -6.0f64..0.5, step in 0.01f64..1.0) {
            let c = random_costs(4, 4, seed);
            let l1 = 10f64.powf(a);
            let l2 = l1 * (1.0 + step);
            prop_assert!(payload_at(&c, l1) > payload_at(&c, l2));
        }

        #[test]
        fn gibbs_scale_invariance(seed in any::<u64>(), s in 0.01f64..100.0, lambda in 0.01f64..5.0) {
            let c = random_costs(4, 4, seed);
            let scaled = CostMap::new(4, 4,
                c.rho_plus.iter().map(|v| v * s).collect(),
                c.rho_minus.iter().map(|v| v * s).collect()).unwrap();
            let p = probabilities_from_costs(&c, lambda).unwrap();
            let q = probabilities_from_costs(&scaled, lambda / s).unwrap();
            for i in 0..16 {
                prop_assert!((p.p_plus[i] - q.p_plus[i]).abs() <= 1e-12);
                prop_assert!((p.p_minus[i] - q.p_minus[i]).abs() <= 1e-12);
                prop_assert!((p.p_zero[i] - q.p_zero[i]).abs() <= 1e-12);
            }
        }

        #[test]
        fn probabilities_sum_to_one(seed in any::<u64>(), lambda in 0.0f64..1e3) {
            let c = random_costs(4, 4, seed);
            let p = probabilities_from_costs(&c, lambda).unwrap();
            for i in 0..16 {
                prop_assert!((p.p_plus[i] + p.p_minus[i] + p.p_zero[i] - 1.0).abs() <= 1e-12);
            }
        }
    }
}
