//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with `cargo test --test acceptance`.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;

use onecopy::bayes::{effective_states, prior_from_decoherence, q_functional, q_permutation_form, Prior};
use onecopy::cli_io::sweep_gamma;
use onecopy::highdim::solve_commuting;
use onecopy::linalg::{self, CMatrix};
use onecopy::qubit::{optimal_pvm, reduce_to_plane};
use onecopy::sampling::{
    random_density, random_povm, random_psd_split, random_qubit_state, random_rank_one_povm, random_unit_vector3,
    stream_rng,
};
use onecopy::simulator::{ppt_min_eigenvalue, ppt_threshold, run_simulation, solve_decay_estimation, DecoherenceModel};
use onecopy::state::{bloch_decompose, qubit_state, real_vector, BlochVector, DensityMatrix, Povm};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64()))
}

fn q(povm: &Povm, prior: &Prior, r1: &DensityMatrix, r2: &DensityMatrix) -> f64 {
    q_functional(povm, prior, r1, r2).unwrap().q_value
}

/// Golden-section maximum of a unimodal function on [a, b].
fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// Dense grid over (−π/2, π/2] followed by golden-section refinement.
fn grid_argmax(f: &dyn Fn(f64) -> f64, n: usize) -> f64 {
    let h = PI / n as f64;
    let best = (1..=n)
        .map(|k| -FRAC_PI_2 + h * k as f64)
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    golden(f, best - h, best + h)
}

/// Gauss–Legendre (5 nodes) on equal panels.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let x = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    let w = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let m = a + h * (k as f64 + 0.5);
            x.iter().zip(w).map(|(xi, wi)| wi * f(m + 0.5 * h * xi)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let u = Prior::uniform();
    let mut worst = 0.0f64;
    for theta in [PI / 6.0, FRAC_PI_2, PI] {
        let r1 = qubit_state(BlochVector::new(0.0, 0.0, 1.0)).unwrap();
        let r2 = qubit_state(BlochVector::new(theta.sin(), 0.0, theta.cos())).unwrap();
        let rep = optimal_pvm(&u, &r1, &r2).map_err(|e| e.to_string())?;
        let comm = linalg::commutator(rep.povm.effects()[0].matrix(), &(r1.matrix() - r2.matrix()));
        ensure(linalg::max_abs(&comm) < 1e-10, || format!("theta {theta}: PVM does not commute with rho1 - rho2"))?;
        // geometry from the Bloch vectors directly
        let (ra, rb) = effective_states(&u, &r1, &r2).unwrap();
        let (va, vb) = (bloch_decompose(&ra).unwrap(), bloch_decompose(&rb).unwrap());
        let d = va.sub(vb);
        let dr = d.norm();
        let rbn = vb.norm();
        let cos_g = if rbn > 0.0 { d.dot(vb) / (dr * rbn) } else { 1.0 };
        let gamma = cos_g.clamp(-1.0, 1.0).acos();
        let q_alpha = |a: f64| 0.25 * (1.0 + dr * dr * a.cos().powi(2) / (1.0 - rbn * rbn * (a + gamma).cos().powi(2)));
        let q_grid = q_alpha(grid_argmax(&q_alpha, 200_000));
        let closed = 0.25 * (1.0 + dr * dr);
        worst = worst.max((rep.score.q_value - q_grid).abs()).max((rep.score.q_value - closed).abs());
    }
    ensure(worst <= 1e-10, || format!("|dQ| = {worst:.3e}"))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("max |dQ| = {worst:.2e} over theta in {{pi/6, pi/2, pi}}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let r1 = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
    let r2 = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
    let u = Prior::uniform();
    let rep = optimal_pvm(&u, &r1, &r2).map_err(|e| e.to_string())?;
    // ∫ Σ_m p(m|λ)(λ − g_m)² dλ with p(0|λ) = λ, p(1|λ) = 1 − λ
    let g0 = integrate(&|l| l * l, 0.0, 1.0, 10) / integrate(&|l| l, 0.0, 1.0, 10);
    let g1 = integrate(&|l| (1.0 - l) * l, 0.0, 1.0, 10) / integrate(&|l| 1.0 - l, 0.0, 1.0, 10);
    let oracle = integrate(&|l| l * (l - g0).powi(2) + (1.0 - l) * (l - g1).powi(2), 0.0, 1.0, 10);
    ensure((oracle - 1.0 / 18.0).abs() < 1e-14, || format!("oracle gives {oracle}"))?;
    ensure((rep.mean_variance() - oracle).abs() < 1e-14, || format!("analytic {}", rep.mean_variance()))?;
    let s = run_simulation(&rep.povm, &u, &r1, &r2, 100_000, 2).map_err(|e| e.to_string())?;
    ensure(!s.flagged, || format!("MC {} vs {} (se {})", s.empirical_mse, s.analytic_mean_variance, s.std_error))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("analytic 1/18, MC {:.6} +- {:.1e} ({:+.2} se)", s.empirical_mse, s.std_error, s.z_score()))
}

fn criterion_3() -> Outcome {
    let mut rng = stream_rng(3, 0);
    let u = Prior::uniform();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.gen_range(2..=4);
        let rho = random_density(d, &mut rng);
        let other = random_density(d, &mut rng);
        let p = random_povm(d, 3, &mut rng);
        let same = q_functional(&p, &u, &rho, &rho).unwrap().mean_variance;
        let trivial = q_functional(&Povm::trivial(d), &u, &rho, &other).unwrap().mean_variance;
        worst = worst.max((same - 1.0 / 12.0).abs()).max((trivial - 1.0 / 12.0).abs());
    }
    ensure(worst <= 1e-12, || format!("deviation {worst:.3e}"))?;
    Ok(format!("max |MV - 1/12| = {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let rb = 0.8;
    let rows = sweep_gamma(rb, 400, 1.0 / 3.0).map_err(|e| e.to_string())?;
    let mut worst_oracle = 0.0f64;
    for r in &rows {
        let f = |a: f64| a.cos().powi(2) / (1.0 - rb * rb * (a + r.gamma).cos().powi(2));
        let oracle = grid_argmax(&f, 20_000);
        let mut diff = (r.alpha0 - oracle).abs();
        diff = diff.min((diff - PI).abs());
        worst_oracle = worst_oracle.max(diff);
    }
    ensure(worst_oracle <= 1e-6, || format!("closed form vs grid {worst_oracle:.3e} rad"))?;
    for target in [FRAC_PI_2, -FRAC_PI_2] {
        let row = rows.iter().find(|r| (r.gamma - target).abs() < 1e-12).ok_or("sweep misses +-pi/2")?;
        ensure(row.alpha0.abs() <= 1e-9, || format!("alpha0({target}) = {}", row.alpha0))?;
    }
    let mut max_step = 0.0f64;
    for w in rows.windows(2) {
        let near_branch = [0.0, PI, -PI].iter().any(|b| (w[0].gamma - b).abs() < 0.05 || (w[1].gamma - b).abs() < 0.05);
        if !near_branch {
            max_step = max_step.max((w[1].alpha0 - w[0].alpha0).abs());
        }
    }
    ensure(max_step < 0.1, || format!("discontinuity of {max_step:.3} rad away from 0, +-pi"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("400 points, oracle agreement {worst_oracle:.1e} rad, max step {max_step:.3} rad"))
}

/// Three unit directions at angles θ_k in the plane spanned by e1, e2, weighted
/// so that Σ p_k n_k = 0 and Σ p_k = 1, as a qubit POVM.
fn planar_three_outcome(theta: [f64; 3], e1: BlochVector, e2: BlochVector) -> Option<Povm> {
    let n: Vec<BlochVector> = theta.iter().map(|t| e1.scale(t.cos()).add(e2.scale(t.sin()))).collect();
    // solve [cos θ; sin θ; 1] p = [0; 0; 1]
    let m = nalgebra::Matrix3::new(
        theta[0].cos(), theta[1].cos(), theta[2].cos(),
        theta[0].sin(), theta[1].sin(), theta[2].sin(),
        1.0, 1.0, 1.0,
    );
    let p = m.lu().solve(&nalgebra::Vector3::new(0.0, 0.0, 1.0))?;
    if p.iter().any(|&x| x <= 1e-9) {
        return None;
    }
    let effects: Vec<CMatrix> = (0..3).map(|k| (linalg::identity(2) + n[k].dot_sigma()).scale(p[k])).collect();
    Povm::from_matrices(effects).ok()
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let u = Prior::uniform();
    let mut rng = stream_rng(5, 0);
    let mut worst = f64::NEG_INFINITY;
    let mut evaluated = 0usize;
    for _ in 0..100 {
        let r1 = random_qubit_state(0.0, 1.0, &mut rng);
        let r2 = random_qubit_state(0.0, 1.0, &mut rng);
        let best = optimal_pvm(&u, &r1, &r2).map_err(|e| e.to_string())?.score.q_value;
        let (ra, rb) = effective_states(&u, &r1, &r2).unwrap();
        let (va, vb) = (bloch_decompose(&ra).unwrap(), bloch_decompose(&rb).unwrap());
        let e1 = {
            let d = va.sub(vb);
            d.scale(1.0 / d.norm())
        };
        let e2 = {
            let p = vb.sub(e1.scale(vb.dot(e1)));
            if p.norm() > 1e-9 { p.scale(1.0 / p.norm()) } else {
                let a = random_unit_vector3(&mut rng);
                let p = a.sub(e1.scale(a.dot(e1)));
                p.scale(1.0 / p.norm())
            }
        };
        let mut count = 0;
        while count < 1000 {
            let theta = [rng.gen_range(-PI..PI), rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)];
            if let Some(p) = planar_three_outcome(theta, e1, e2) {
                worst = worst.max(q(&p, &u, &r1, &r2) - best);
                count += 1;
            }
        }
        evaluated += count;
    }
    ensure(worst <= 1e-9, || format!("a three-outcome POVM exceeds Q(alpha0) by {worst:.3e}"))?;
    within(start.elapsed(), 60.0)?;
    Ok(format!("{evaluated} POVMs on 100 pairs, max Q - Q(alpha0) = {worst:.2e}"))
}

fn criterion_6() -> Outcome {
    let mut rng = stream_rng(6, 0);
    let u = Prior::uniform();
    let mut worst_split = f64::NEG_INFINITY;
    let mut worst_proj = 0.0f64;
    for _ in 0..1000 {
        let d = rng.gen_range(2..=4);
        let (r1, r2) = (random_density(d, &mut rng), random_density(d, &mut rng));
        let p = random_povm(d, 3, &mut rng);
        let k = rng.gen_range(0..3);
        let (a, b) = random_psd_split(&p.effects()[k], &mut rng);
        let mut ms: Vec<CMatrix> = p.effects().iter().map(|e| e.matrix().clone()).collect();
        ms.remove(k);
        ms.push(a);
        ms.push(b);
        let split = Povm::from_matrices(ms).unwrap();
        worst_split = worst_split.max(q(&p, &u, &r1, &r2) - q(&split, &u, &r1, &r2));

        let (q1, q2) = (random_qubit_state(0.0, 1.0, &mut rng), random_qubit_state(0.0, 1.0, &mut rng));
        let (ra, rb) = effective_states(&u, &q1, &q2).unwrap();
        let qp = random_povm(2, 4, &mut rng);
        let red = reduce_to_plane(&qp, &ra, &rb).map_err(|e| e.to_string())?;
        worst_proj = worst_proj.max((q(&qp, &u, &q1, &q2) - q(&red.projected, &u, &q1, &q2)).abs());
    }
    ensure(worst_split <= 1e-12, || format!("splitting lowered Q by {worst_split:.3e}"))?;
    ensure(worst_proj <= 1e-12, || format!("projection changed Q by {worst_proj:.3e}"))?;
    Ok(format!("split max decrease {worst_split:.1e}, projection max change {worst_proj:.1e}"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let u = Prior::uniform();
    let mut rng = stream_rng(7, 0);
    let (mut worst_pinch, mut worst_dom) = (0.0f64, f64::NEG_INFINITY);
    for d in 2..=4 {
        for _ in 0..5 {
            let w1: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..1.0)).collect();
            let w2: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..1.0)).collect();
            let norm = |w: &[f64]| {
                let s: f64 = w.iter().sum();
                DensityMatrix::diagonal(&w.iter().map(|x| x / s).collect::<Vec<_>>()).unwrap()
            };
            let (r1, r2) = (norm(&w1), norm(&w2));
            let best = solve_commuting(&u, &r1, &r2).map_err(|e| e.to_string())?.score.unwrap().q_value;
            for _ in 0..1000 {
                let p = random_rank_one_povm(d, d + 1, &mut rng);
                let pinched: Vec<CMatrix> = p
                    .effects()
                    .iter()
                    .map(|e| linalg::diag(&(0..d).map(|i| e.matrix()[(i, i)].re).collect::<Vec<_>>()))
                    .collect();
                let qp = q(&p, &u, &r1, &r2);
                worst_pinch = worst_pinch.max((qp - q(&Povm::from_matrices(pinched).unwrap(), &u, &r1, &r2)).abs());
                worst_dom = worst_dom.max(qp - best);
            }
        }
    }
    ensure(worst_pinch <= 1e-12, || format!("pinching changed Q by {worst_pinch:.3e}"))?;
    ensure(worst_dom <= 1e-10, || format!("a random POVM beats the eigenbasis PVM by {worst_dom:.3e}"))?;
    within(start.elapsed(), 60.0)?;
    Ok(format!("d = 2,3,4: pinching {worst_pinch:.1e}, dominance margin {:.1e}", -worst_dom))
}

fn criterion_8() -> Outcome {
    let mut rng = stream_rng(8, 0);
    let u = Prior::uniform();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = rng.gen_range(2..=4);
        let (r1, r2) = (random_density(d, &mut rng), random_density(d, &mut rng));
        let p = random_povm(d, rng.gen_range(2..=5), &mut rng);
        let a = q(&p, &u, &r1, &r2);
        let b = q(&p, &u, &r2, &r1);
        let sym = q_permutation_form(&p, &u, &r1, &r2).map_err(|e| e.to_string())?;
        worst = worst.max((a - b).abs()).max((a - sym).abs());
    }
    ensure(worst <= 1e-12, || format!("asymmetry {worst:.3e}"))?;
    Ok(format!("1000 problems, max deviation {worst:.1e}"))
}

fn criterion_9() -> Outcome {
    let mut worst = 0.0f64;
    for t in [0.1, LN_2, 1.0, 3.0] {
        let p = prior_from_decoherence(t).map_err(|e| e.to_string())?;
        let lo = (-t).exp();
        let dens = |l: f64| 1.0 / (l * t);
        let m1 = integrate(&|l| l * dens(l), lo, 1.0, 200);
        let m2 = integrate(&|l| l * l * dens(l), lo, 1.0, 200);
        let m3 = integrate(&|l| l * l * l * dens(l), lo, 1.0, 200);
        let z = integrate(&dens, lo, 1.0, 200);
        worst = worst
            .max((z - 1.0).abs())
            .max((p.mean - m1).abs())
            .max((p.second_moment - m2).abs())
            .max((p.third_moment - m3).abs());
    }
    ensure(worst <= 1e-9, || format!("moments off by {worst:.3e}"))?;
    let model = DecoherenceModel::new(0.5, 1.0, LN_2, DensityMatrix::diagonal(&[1.0, 0.0]).unwrap())
        .map_err(|e| e.to_string())?;
    let est = solve_decay_estimation(&model).map_err(|e| e.to_string())?;
    let target = 1.0 / (2.0 * LN_2);
    ensure((est.prior.mean - target).abs() < 1e-14, || format!("mean {} vs {target}", est.prior.mean))?;
    let s = run_simulation(&est.report.povm, &est.prior, &est.rho1, &est.rho2, 100_000, 9).map_err(|e| e.to_string())?;
    ensure(!s.flagged, || format!("MC {} vs {} (se {})", s.empirical_mse, s.analytic_mean_variance, s.std_error))?;
    Ok(format!(
        "moments {worst:.1e}, mean 1/(2 ln 2), MC {:.6} vs {:.6} ({:+.2} se)",
        s.empirical_mse,
        s.analytic_mean_variance,
        s.z_score()
    ))
}

fn criterion_10() -> Outcome {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = real_vector(&[h, 0.0, 0.0, h]);
    let t = ppt_threshold(&bell).map_err(|e| e.to_string())?.ok_or("no threshold found")?;
    ensure((t - 1.0 / 3.0).abs() <= 1e-9, || format!("threshold {t}"))?;
    // the partial transpose of λ|Φ⁺⟩⟨Φ⁺| + (1−λ)/4 has smallest eigenvalue (1 − 3λ)/4
    let mut worst = 0.0f64;
    for k in 0..=20 {
        let l = k as f64 / 20.0;
        let rho = DensityMatrix::mixture(l, &DensityMatrix::pure(&bell).unwrap(), &DensityMatrix::maximally_mixed(4)).unwrap();
        let exact = ((1.0 - 3.0 * l) / 4.0).min((1.0 + l) / 4.0);
        worst = worst.max((ppt_min_eigenvalue(&rho).unwrap() - exact).abs());
    }
    ensure(worst < 1e-12, || format!("partial-transpose eigenvalue off by {worst:.3e}"))?;
    Ok(format!("threshold {t:.12}, |t - 1/3| = {:.1e}", (t - 1.0 / 3.0).abs()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("pure-state optimum", criterion_1),
        ("orthogonal pure benchmark", criterion_2),
        ("no-information baselines", criterion_3),
        ("optimal angle sweep at r_b = 0.8", criterion_4),
        ("no planar three-outcome POVM beats the PVM", criterion_5),
        ("splitting and plane projection", criterion_6),
        ("commuting states", criterion_7),
        ("permutation symmetry", criterion_8),
        ("decoherence pipeline", criterion_9),
        ("entanglement threshold", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2} s]", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
