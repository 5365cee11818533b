//! Quick randomized checks of the library's core identities, for the
//! `selftest` subcommand. Each check draws from its own seeded stream.

use std::f64::consts::PI;

use rand::Rng;

use crate::bayes::{prior_from_decoherence, q_functional, q_permutation_form, Prior};
use crate::highdim::solve_commuting;
use crate::linalg::{self, CMatrix};
use crate::qubit::{
    brute_force_planar, grid_alpha, optimal_alpha, optimal_pvm, planar_from_angles, random_feasible_angles,
    reduce_to_plane, PlanarGeometry,
};
use crate::sampling::{random_density, random_povm, random_qubit_state, random_rank_one_povm, stream_rng};
use crate::simulator::ppt_threshold;
use crate::state::{real_vector, DensityMatrix, Povm};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check { name, passed: worst <= tol, detail: format!("worst {worst:.3e}, tolerance {tol:.1e}") }
}

pub fn run_all(seed: u64) -> Vec<Check> {
    vec![
        q_plus_mean_variance(seed),
        optimum_dominates_random_povms(seed),
        closed_form_matches_grid(),
        plane_projection_preserves_q(seed),
        permutation_symmetry(seed),
        pinching_preserves_q(seed),
        decoherence_moments(),
        bell_ppt_threshold(),
        planar_three_outcome(seed),
    ]
}

fn q_plus_mean_variance(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 0);
    let u = Prior::uniform();
    let worst = (0..50)
        .map(|_| {
            let d = rng.gen_range(2..=4);
            let (r1, r2) = (random_density(d, &mut rng), random_density(d, &mut rng));
            let s = q_functional(&random_povm(d, 3, &mut rng), &u, &r1, &r2).unwrap();
            (s.q_value + s.mean_variance - 1.0 / 3.0).abs()
        })
        .fold(0.0, f64::max);
    check("Q + mean variance = 1/3 under the uniform prior", worst, 1e-14)
}

fn optimum_dominates_random_povms(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 1);
    let u = Prior::uniform();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let r1 = random_qubit_state(0.0, 1.0, &mut rng);
        let r2 = random_qubit_state(0.0, 1.0, &mut rng);
        let best = optimal_pvm(&u, &r1, &r2).unwrap().score.q_value;
        for _ in 0..50 {
            let p = random_povm(2, rng.gen_range(2..=5), &mut rng);
            worst = worst.max(q_functional(&p, &u, &r1, &r2).unwrap().q_value - best);
        }
    }
    check("no random qubit POVM beats the optimal PVM", worst, 1e-10)
}

fn closed_form_matches_grid() -> Check {
    let worst = (1..=200)
        .map(|k| {
            let gamma = -PI + 2.0 * PI * k as f64 / 200.0;
            let a = optimal_alpha(&PlanarGeometry::new(0.2, 0.8, gamma)).unwrap();
            crate::qubit::angle_distance(a.closed_form, grid_alpha(gamma, 0.8, 2000))
        })
        .fold(0.0, f64::max);
    check("closed-form optimal angle agrees with grid search", worst, 1e-6)
}

fn plane_projection_preserves_q(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 2);
    let u = Prior::uniform();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let r1 = random_qubit_state(0.0, 1.0, &mut rng);
        let r2 = random_qubit_state(0.0, 1.0, &mut rng);
        let (ra, rb) = crate::bayes::effective_states(&u, &r1, &r2).unwrap();
        let p = random_povm(2, 4, &mut rng);
        let red = reduce_to_plane(&p, &ra, &rb).unwrap();
        let q = q_functional(&p, &u, &r1, &r2).unwrap().q_value;
        let qp = q_functional(&red.projected, &u, &r1, &r2).unwrap().q_value;
        let qs = q_functional(&red.planar.to_povm().unwrap(), &u, &r1, &r2).unwrap().q_value;
        worst = worst.max((q - qp).abs()).max(q - qs);
    }
    check("plane projection keeps Q and splitting never lowers it", worst, 1e-12)
}

fn permutation_symmetry(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 3);
    let u = Prior::uniform();
    let worst = (0..100)
        .map(|_| {
            let d = rng.gen_range(2..=4);
            let (r1, r2) = (random_density(d, &mut rng), random_density(d, &mut rng));
            let p = random_povm(d, 3, &mut rng);
            let a = q_functional(&p, &u, &r1, &r2).unwrap().q_value;
            let b = q_functional(&p, &u, &r2, &r1).unwrap().q_value;
            let s = q_permutation_form(&p, &u, &r1, &r2).unwrap();
            (a - b).abs().max((a - s).abs())
        })
        .fold(0.0, f64::max);
    check("Q is symmetric under exchanging the states", worst, 1e-12)
}

fn pinching_preserves_q(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 4);
    let u = Prior::uniform();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = rng.gen_range(2..=4);
        let w1: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let w2: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let n1: f64 = w1.iter().sum();
        let n2: f64 = w2.iter().sum();
        let r1 = DensityMatrix::diagonal(&w1.iter().map(|x| x / n1).collect::<Vec<_>>()).unwrap();
        let r2 = DensityMatrix::diagonal(&w2.iter().map(|x| x / n2).collect::<Vec<_>>()).unwrap();
        let p = random_rank_one_povm(d, 3, &mut rng);
        let pinched: Vec<CMatrix> = p
            .effects()
            .iter()
            .map(|e| linalg::diag(&(0..d).map(|i| e.matrix()[(i, i)].re).collect::<Vec<_>>()))
            .collect();
        let pinched = Povm::from_matrices(pinched).unwrap();
        let a = q_functional(&p, &u, &r1, &r2).unwrap().q_value;
        let b = q_functional(&pinched, &u, &r1, &r2).unwrap().q_value;
        let best = solve_commuting(&u, &r1, &r2).unwrap().score.unwrap().q_value;
        worst = worst.max((a - b).abs()).max(a - best);
    }
    check("pinching keeps Q for commuting states", worst, 1e-12)
}

fn decoherence_moments() -> Check {
    let t = std::f64::consts::LN_2;
    let p = prior_from_decoherence(t).unwrap();
    let mean = crate::quad::adaptive_simpson(|_| 1.0 / t, 0.5, 1.0, 1e-13);
    let second = crate::quad::adaptive_simpson(|l| l / t, 0.5, 1.0, 1e-13);
    let worst = (p.mean - mean).abs().max((p.second_moment - second).abs());
    check("decoherence prior moments match quadrature", worst, 1e-9)
}

fn bell_ppt_threshold() -> Check {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t = ppt_threshold(&real_vector(&[h, 0.0, 0.0, h])).unwrap().unwrap_or(f64::NAN);
    check("PPT threshold of the Bell state is 1/3", (t - 1.0 / 3.0).abs(), 1e-9)
}

fn planar_three_outcome(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 5);
    let u = Prior::uniform();
    let mut worst = f64::NEG_INFINITY;
    for k in 0..10 {
        let r1 = random_qubit_state(0.05, 0.95, &mut rng);
        let r2 = random_qubit_state(0.05, 0.95, &mut rng);
        let geom = PlanarGeometry::from_problem(&u, &r1, &r2).unwrap();
        let best = optimal_pvm(&u, &r1, &r2).unwrap().score.q_value;
        for _ in 0..100 {
            let a = random_feasible_angles(3, &mut rng);
            let q = planar_from_angles(&a, geom.frame).unwrap().q(&geom);
            worst = worst.max(q - best);
        }
        let bf = brute_force_planar(&u, &r1, &r2, 3, 2, seed.wrapping_add(k)).unwrap();
        worst = worst.max(bf.q - best);
    }
    check("no planar three-outcome POVM beats the optimal PVM", worst, 1e-9)
}
