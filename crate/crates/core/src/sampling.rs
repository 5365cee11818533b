//! Seeded random states and measurements.
//!
//! Streams are derived from a base seed by counter: stream `k` of seed `s`
//! is a ChaCha8 generator keyed by `s` on stream `k`, so work items can be
//! processed in any order or in parallel and still reproduce bit-for-bit.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, StandardNormal};

use crate::linalg::{self, c, CMatrix, CVector};
use crate::state::{BlochVector, DensityMatrix, Effect, Povm};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Haar-random unit vector in C^d.
pub fn haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let n = v.norm();
    v.unscale(n)
}

pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::pure(&haar_vector(dim, rng)).expect("non-zero vector")
}

/// Full-rank state G G† / tr(G G†) with G complex Ginibre.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(dim, rng);
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityMatrix::new(m.unscale(tr)).expect("Ginibre state is valid")
}

/// A qubit state with Bloch vector uniform in direction and with norm drawn
/// uniformly from [r_min, r_max].
pub fn random_qubit_state<R: Rng + ?Sized>(r_min: f64, r_max: f64, rng: &mut R) -> DensityMatrix {
    let dir = random_unit_vector3(rng);
    let r = rng.gen_range(r_min..=r_max);
    crate::state::qubit_state(dir.scale(r)).expect("norm <= 1")
}

pub fn random_unit_vector3<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    loop {
        let v = BlochVector::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-8 {
            return v.scale(1.0 / n);
        }
    }
}

/// `n_rank_one` rank-one effects w_k |v_k⟩⟨v_k| with Haar v_k and Dirichlet
/// weights, completed by 1 − Σ_k w_k |v_k⟩⟨v_k|. The Dirichlet draw has one
/// extra component that is discarded, so Σ_k w_k < 1 and the completion is
/// positive definite.
pub fn random_rank_one_povm<R: Rng + ?Sized>(dim: usize, n_rank_one: usize, rng: &mut R) -> Povm {
    let alpha = vec![1.0; n_rank_one + 1];
    let dirichlet = Dirichlet::new(&alpha).expect("valid concentration");
    loop {
        let w: Vec<f64> = dirichlet.sample(rng);
        let mut effects = Vec::with_capacity(n_rank_one + 1);
        let mut rest = linalg::identity(dim);
        for &wk in &w[..n_rank_one] {
            let e = linalg::outer(&haar_vector(dim, rng)).scale(wk);
            rest -= &e;
            effects.push(e);
        }
        effects.push(rest);
        if let Ok(p) = Povm::from_matrices(effects) {
            return p;
        }
    }
}

/// A generic `n`-outcome POVM: random positive A_k normalized as
/// S^{-1/2} A_k S^{-1/2} with S = Σ A_k.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> Povm {
    loop {
        let parts: Vec<CMatrix> = (0..n)
            .map(|_| {
                let rank = rng.gen_range(1..=dim);
                let g = CMatrix::from_fn(dim, rank, |_, _| {
                    c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
                });
                &g * g.adjoint()
            })
            .collect();
        let s: CMatrix = parts.iter().fold(CMatrix::zeros(dim, dim), |acc, a| acc + a);
        if linalg::min_eigenvalue(&s) < 1e-8 {
            continue;
        }
        let s_inv_half = linalg::spectral_map(&s, |x| 1.0 / x.sqrt());
        let effects = parts.iter().map(|a| &s_inv_half * a * &s_inv_half).collect();
        if let Ok(p) = Povm::from_matrices(effects) {
            return p;
        }
    }
}

/// Random projective measurement onto a Haar-random orthonormal basis.
pub fn random_basis_pvm<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Povm {
    let g = ginibre(dim, rng);
    let q = g.qr().q();
    Povm::from_basis(&q).expect("unitary columns give a PVM")
}

/// Splits E into E_A + E_B with both parts positive: E_A = E^{1/2} X E^{1/2}
/// for a random 0 ≤ X ≤ 1.
pub fn random_psd_split<R: Rng + ?Sized>(effect: &Effect, rng: &mut R) -> (CMatrix, CMatrix) {
    let dim = effect.dim();
    let u = ginibre(dim, rng).qr().q();
    let x_diag: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let x = &u * linalg::diag(&x_diag) * u.adjoint();
    let root = linalg::spectral_map(effect.matrix(), |v| v.max(0.0).sqrt());
    let a = linalg::hermitian_part(&(&root * x * &root));
    let b = effect.matrix() - &a;
    (a, b)
}

fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}
