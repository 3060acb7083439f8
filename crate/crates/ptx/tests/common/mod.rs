//! Shared test support: an exhaustive dynamic-programming oracle for the
//! day-ahead dispatch problem on a discretized grid, plus a seeded instance
//! generator. The oracle never touches the production solver: it enumerates
//! grid schedules directly from the constraint definitions.

use ptx::scheduler::{DayProblem, NetworkState};
use ptx::tech::{
    weighted_marginal_cost, ConverterParams, Normalization, TechnologyKind, TechnologyNetwork,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Dispatch grid resolution, MW.
pub const STEP: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub conv: ConverterParams,
    pub g_prev: f64,
    pub g_e: f64,
    pub alpha: f64,
    pub price: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl OracleInstance {
    pub fn network(&self) -> TechnologyNetwork {
        TechnologyNetwork {
            kind: TechnologyKind::Electrolyzer,
            converters: [("electrolyzer".to_string(), self.conv)].into_iter().collect(),
            stores: BTreeMap::new(),
            fuel: None,
            product_load: 0.0,
        }
    }

    pub fn day_problem(&self) -> DayProblem {
        let network = self.network();
        let mut prev = NetworkState::fresh(&network);
        prev.dispatch.insert("electrolyzer".to_string(), self.g_prev);
        DayProblem {
            network,
            start_hour: 0,
            price: self.price.clone(),
            intensity: self.intensity.clone(),
            g_e: self.g_e,
            alpha: self.alpha,
            norm: Normalization::identity(),
            prev,
        }
    }

    pub fn hour_cost(&self, i: usize) -> f64 {
        weighted_marginal_cost(self.alpha, self.price[i], self.intensity[i], &Normalization::identity())
    }
}

fn steps(value: f64) -> usize {
    let s = value / STEP;
    let r = s.round();
    assert!((s - r).abs() < 1e-9, "{value} is not a multiple of the dispatch step");
    r as usize
}

/// Exhaustive minimum over all grid schedules: dynamic program over
/// (hour, level, on-age, energy spent). Returns `None` when no grid schedule
/// meets the budget.
pub fn brute_force_optimum(inst: &OracleInstance) -> Option<f64> {
    let conv = &inst.conv;
    let levels = steps(conv.p_nom);
    let budget = steps(inst.g_e);
    let su = conv.ramp_start_up;
    let su_steps = if su > 0.0 { steps(su.min(conv.p_nom)) } else { levels };
    let ru_steps = if conv.ramp_up > 0.0 { steps(conv.ramp_up.min(conv.p_nom)) } else { levels };
    let rd_steps = steps(conv.ramp_down.min(conv.p_nom));
    let min_level = steps(conv.min_part_load * conv.p_nom).max(1);
    let t_up = conv.min_up_time.max(1) as usize;

    let l0 = steps(inst.g_prev);
    let a0 = if l0 > 0 { t_up } else { 0 }; // boundary runs count as aged out

    // state index: ((hour's level) * (t_up+1) + age) * (budget+1) + energy
    let width = (levels + 1) * (t_up + 1) * (budget + 1);
    let idx = |l: usize, a: usize, e: usize| (l * (t_up + 1) + a) * (budget + 1) + e;
    let mut cur = vec![f64::INFINITY; width];
    cur[idx(l0, a0.min(t_up), 0)] = 0.0;

    for hour in 0..24 {
        let mut next = vec![f64::INFINITY; width];
        let rate = inst.hour_cost(hour);
        for l in 0..=levels {
            for a in 0..=t_up {
                for e in 0..=budget {
                    let base = cur[idx(l, a, e)];
                    if !base.is_finite() {
                        continue;
                    }
                    // candidate next levels
                    let (lo, hi, may_off) = if l == 0 {
                        (min_level, su_steps.min(levels), true)
                    } else if a < t_up {
                        ((min_level).max(l.saturating_sub(rd_steps)), (l + ru_steps).min(levels), false)
                    } else {
                        ((min_level).max(l.saturating_sub(rd_steps)), (l + ru_steps).min(levels), conv.shutdown_exempt || l <= rd_steps)
                    };
                    if may_off {
                        let t = &mut next[idx(0, 0, e)];
                        if base < *t {
                            *t = base;
                        }
                    }
                    for l2 in lo..=hi {
                        if l2 == 0 {
                            continue;
                        }
                        let e2 = e + l2;
                        if e2 > budget {
                            break;
                        }
                        let a2 = if l == 0 { 1 } else { (a + 1).min(t_up) };
                        let cost = base + rate * l2 as f64 * STEP;
                        let t = &mut next[idx(l2, a2, e2)];
                        if cost < *t {
                            *t = cost;
                        }
                    }
                }
            }
        }
        cur = next;
    }

    let mut best = f64::INFINITY;
    for l in 0..=levels {
        for a in 0..=t_up {
            let v = cur[idx(l, a, budget)];
            if v < best {
                best = v;
            }
        }
    }
    best.is_finite().then_some(best)
}

/// Which constraint texture an instance carries.
///
/// `GridExact` instances (bounded start-up, unlimited running ramps, min-up,
/// part-load floor) provably attain their continuous optimum on the dispatch
/// grid: with integral commitment fixed, every active constraint pins a
/// variable to a grid constant and only the budget residual floats, so the
/// solver must match grid enumeration exactly. `Ramped` instances add
/// running ramp limits whose active chains can push the continuous optimum
/// off the grid; enumeration is then an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    GridExact,
    Ramped,
}

/// Draw one instance whose budget is witnessed by a random feasible grid
/// trajectory, so the brute force always has at least one candidate.
pub fn random_instance(rng: &mut ChaCha8Rng, family: Family) -> OracleInstance {
    let (ramp_up, ramp_start_up, ramp_down) = match family {
        Family::GridExact => match rng.gen_range(0..3) {
            0 => (0.0, 0.0, 1.0),  // fully unlimited
            1 => (0.0, 0.15, 1.0), // binding start-up only
            _ => (0.0, 0.25, 1.0),
        },
        Family::Ramped => match rng.gen_range(0..2) {
            0 => (0.3, 0.15, 0.3),
            _ => (0.5, 0.25, 0.5),
        },
    };
    let conv = ConverterParams {
        efficiency: 1.0,
        p_nom: 1.0,
        ramp_up,
        ramp_down,
        ramp_start_up,
        min_up_time: *[0u32, 2, 3].get(rng.gen_range(0..3)).unwrap(),
        min_part_load: 0.05,
        shutdown_exempt: false,
    };
    let g_prev = *[0.0, 0.3, 1.0].get(rng.gen_range(0..3)).unwrap();

    // random feasible grid walk as the budget witness
    let levels = 20usize;
    let su_steps = if conv.ramp_start_up > 0.0 { steps(conv.ramp_start_up) } else { levels };
    let ru_steps = if conv.ramp_up > 0.0 { steps(conv.ramp_up) } else { levels };
    let rd_steps = steps(conv.ramp_down);
    let t_up = conv.min_up_time.max(1) as usize;
    let mut l = steps(g_prev);
    let mut age = if l > 0 { t_up } else { 0 };
    let mut total = 0usize;
    for _ in 0..24 {
        let choices: Vec<usize> = if l == 0 {
            let mut c = vec![0];
            c.extend(1..=su_steps.min(levels));
            c
        } else {
            let lo = 1.max(l.saturating_sub(rd_steps));
            let hi = (l + ru_steps).min(levels);
            let mut c: Vec<usize> = (lo..=hi).collect();
            if age >= t_up && l <= rd_steps {
                c.push(0);
            }
            c
        };
        let l2 = choices[rng.gen_range(0..choices.len())];
        age = if l2 == 0 {
            0
        } else if l == 0 {
            1
        } else {
            (age + 1).min(t_up)
        };
        l = l2;
        total += l2;
    }

    let price: Vec<f64> = (0..24).map(|_| rng.gen_range(5.0..95.0)).collect();
    let intensity: Vec<f64> = (0..24).map(|_| rng.gen_range(20.0..600.0)).collect();
    let alpha = *[0.0, 0.25, 0.5, 0.75, 1.0].get(rng.gen_range(0..5)).unwrap();
    OracleInstance {
        conv,
        g_prev,
        g_e: total as f64 * STEP,
        alpha,
        price,
        intensity,
    }
}
