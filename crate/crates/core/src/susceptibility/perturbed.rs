use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{resolvent, sqrtu, JointView, Problem};
use crate::error::{Error, Result};
use crate::hilbert::{omega_kn_lm, HBAR};
use crate::linalg::{dagger, CMatrix};
use crate::states::JointEquilibrium;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencyLabel {
    Zero,
    PlusOmega,
    MinusOmega,
    PlusTwoOmega,
    MinusTwoOmega,
}

/// Amplitude of one oscillating component of a perturbative order.
#[derive(Debug, Clone)]
pub struct PerturbedRho {
    pub order: u8,
    pub label: FrequencyLabel,
    pub matrix: CMatrix,
}

/// First-order amplitudes at `+ω` and `−ω` along the field polarization.
pub fn rho_first_order(eq: &JointEquilibrium, p: &Problem) -> Result<(PerturbedRho, PerturbedRho)> {
    let plus = first_order_matrix(eq, p)?;
    let minus = dagger(&plus);
    Ok((
        PerturbedRho { order: 1, label: FrequencyLabel::PlusOmega, matrix: plus },
        PerturbedRho { order: 1, label: FrequencyLabel::MinusOmega, matrix: minus },
    ))
}

fn check_space(eq: &JointEquilibrium, p: &Problem) -> Result<()> {
    if eq.space != *p.space() {
        return Err(Error::DimensionMismatch(format!(
            "equilibrium built on {:?}, problem on {:?}",
            eq.space,
            p.space()
        )));
    }
    Ok(())
}

fn first_order_matrix(eq: &JointEquilibrium, p: &Problem) -> Result<CMatrix> {
    check_space(eq, p)?;
    let s = *p.space();
    let rho = JointView::new(&eq.rho_eq, s);
    let mu = p.matter.dipole_along(&p.field.polarization);
    let w = p.omega();
    let pref = C64::new(0.0, p.field.amplitude() / HBAR);
    let dm = s.matter_dim();
    let mut out = CMatrix::zeros((s.dim(), s.dim()));
    for i in 0..s.dim() {
        let (k, n) = s.split(i);
        let ni = n as i64;
        for j in 0..s.dim() {
            let (l, m) = s.split(j);
            let mi = m as i64;
            let mut acc = C64::new(0.0, 0.0);
            for big_l in 0..dm {
                acc += sqrtu(ni + 1) * rho.get(big_l, ni + 1, l, mi) * mu[[k, big_l]];
                acc -= sqrtu(mi) * rho.get(k, ni, big_l, mi - 1) * mu[[big_l, l]];
            }
            let det = omega_kn_lm(&p.matter, w, k, n, l, m) - w;
            let g = p.rates.g(k, n, l, m);
            out[[i, j]] = pref * resolvent(acc, det, g, || format!("({k}{n},{l}{m}) at ω"))?;
        }
    }
    Ok(out)
}

/// Second-order amplitude at `+2ω` along the field polarization.
pub fn rho_second_order_2w(eq: &JointEquilibrium, p: &Problem) -> Result<PerturbedRho> {
    check_space(eq, p)?;
    let s = *p.space();
    if s.fock_cutoff() < 3 {
        return Err(Error::InvalidSpace(format!("second order needs fock_cutoff ≥ 3, got {}", s.fock_cutoff())));
    }
    let rho = JointView::new(&eq.rho_eq, s);
    let mu = p.matter.dipole_along(&p.field.polarization);
    let w = p.omega();
    let amp = p.field.amplitude();
    let pref = C64::new(amp * amp / (HBAR * HBAR), 0.0);
    let dm = s.matter_dim();
    let nmax = s.fock_cutoff() as i64;
    let matter = &p.matter;
    let gamma = |k: usize, n: i64, l: usize, m: i64| p.rates.g(k, n as usize, l, m as usize);
    let freq = |k: usize, n: i64, l: usize, m: i64| omega_kn_lm(matter, w, k, n as usize, l, m as usize);

    let mut out = CMatrix::zeros((s.dim(), s.dim()));
    for i in 0..s.dim() {
        let (k, n) = s.split(i);
        let ni = n as i64;
        for j in 0..s.dim() {
            let (l, m) = s.split(j);
            let mi = m as i64;
            let mut acc = C64::new(0.0, 0.0);
            for big_l in 0..dm {
                // first-order element ⟨kn|ρ¹|L(m−1)⟩ followed by absorption on the right
                if mi >= 1 {
                    let mut inner = C64::new(0.0, 0.0);
                    for big_k in 0..dm {
                        inner += sqrtu(ni + 1) * rho.get(big_k, ni + 1, big_l, mi - 1) * mu[[k, big_k]];
                        inner -= sqrtu(mi - 1) * rho.get(k, ni, big_k, mi - 2) * mu[[big_k, big_l]];
                    }
                    let t = resolvent(inner, freq(k, ni, big_l, mi - 1) - w, gamma(k, ni, big_l, mi - 1), || {
                        format!("({k}{n},{big_l}{}) at ω", mi - 1)
                    })?;
                    acc += t * mu[[big_l, l]] * sqrtu(mi);
                }
                // first-order element ⟨L(n+1)|ρ¹|lm⟩ followed by absorption on the left
                if ni + 1 <= nmax {
                    let mut inner = C64::new(0.0, 0.0);
                    for big_k in 0..dm {
                        inner += sqrtu(ni + 2) * rho.get(big_k, ni + 2, l, mi) * mu[[big_l, big_k]];
                        inner -= sqrtu(mi) * rho.get(big_l, ni + 1, big_k, mi - 1) * mu[[big_k, l]];
                    }
                    let t = resolvent(inner, freq(big_l, ni + 1, l, mi) - w, gamma(big_l, ni + 1, l, mi), || {
                        format!("({big_l}{},{l}{m}) at ω", ni + 1)
                    })?;
                    acc -= t * mu[[k, big_l]] * sqrtu(ni + 1);
                }
            }
            let det = freq(k, ni, l, mi) - 2.0 * w;
            out[[i, j]] = pref * resolvent(acc, det, gamma(k, ni, l, mi), || format!("({k}{n},{l}{m}) at 2ω"))?;
        }
    }
    Ok(PerturbedRho { order: 2, label: FrequencyLabel::PlusTwoOmega, matrix: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::susceptibility::testing::*;
    use crate::linalg::max_abs;

    /// Independent route: `(1/ħ)[μ_e ⊗ iA a, ρ] / (Ω − νω − iγ)` with dense matrices.
    fn commutator_route(p: &Problem, harmonic: f64, rho: &CMatrix) -> CMatrix {
        let s = *p.space();
        let fo = crate::hilbert::field_operator_parts(&p.field, &s);
        let x = crate::linalg::kron(&p.matter.dipole_along(&p.field.polarization), &fo.e_plus);
        let comm = &x.dot(rho) - &rho.dot(&x);
        CMatrix::from_shape_fn(comm.dim(), |(i, j)| {
            let (k, n) = s.split(i);
            let (l, m) = s.split(j);
            let det = omega_kn_lm(&p.matter, p.omega(), k, n, l, m) - harmonic * p.omega();
            comm[[i, j]] / HBAR / C64::new(det, -p.rates.g(k, n, l, m))
        })
    }

    #[test]
    fn first_and_second_order_match_commutator_route() {
        for scenario in ["a", "b", "c"] {
            let (p, eq) = qd_coherent("MS", 1.0, 1.0, 0.003, scenario, 8);
            let (plus, minus) = rho_first_order(&eq, &p).unwrap();
            let r1 = commutator_route(&p, 1.0, &eq.rho_eq);
            let scale = max_abs(&r1);
            assert!(max_abs(&(&plus.matrix - &r1)) <= 1e-12 * scale, "{scenario}");
            assert_eq!(minus.matrix, dagger(&plus.matrix));
            let r2 = commutator_route(&p, 2.0, &r1);
            let two = rho_second_order_2w(&eq, &p).unwrap();
            assert!(max_abs(&(&two.matrix - &r2)) <= 1e-12 * max_abs(&r2), "{scenario}");
        }
    }

    #[test]
    fn zero_dipole_gives_zero() {
        let (p, eq) = qd_coherent("MS", 1.0, 1.0, 0.0, "c", 9);
        let p = zero_dipole(&p);
        let (plus, _) = rho_first_order(&eq, &p).unwrap();
        assert_eq!(max_abs(&plus.matrix), 0.0);
        assert_eq!(max_abs(&rho_second_order_2w(&eq, &p).unwrap().matrix), 0.0);
    }

    #[test]
    fn pg_vacuum_single_photon_shift() {
        let (p, eq) = qd_fock("PG", 0, 0.0, 0.0, "a", 2);
        let (plus, _) = rho_first_order(&eq, &p).unwrap();
        let s = *p.space();
        for ((i, j), z) in plus.matrix.indexed_iter() {
            let (_, n) = s.split(i);
            let (_, m) = s.split(j);
            if z.norm() > 0.0 {
                assert_eq!((n as i64 - m as i64).abs(), 1);
            }
        }
        // index 0 is the excited level; with A = 0 only ⟨g0|ρ|e1⟩ survives
        assert!(plus.matrix[[s.index(1, 0), s.index(0, 1)]].norm() > 0.0);
        assert_eq!(plus.matrix[[s.index(1, 0), s.index(1, 1)]].norm(), 0.0);
    }

    #[test]
    fn cutoff_three_required_for_second_order() {
        let (p, eq) = qd_coherent_tol("PG", 0.1, 0.0, 0.0, "a", 2, 1e-2);
        assert!(matches!(rho_second_order_2w(&eq, &p), Err(Error::InvalidSpace(_))));
    }
}
