//! Integrating-factor RK4 for `ρ̇ = L∘ρ + F(t, ρ)` on the truncated joint space.
//!
//! `L = −(iΩ + γ)` is diagonal in the elementwise sense and is integrated exactly;
//! the drive is applied through the ladder structure of `μ_e ⊗ a` without forming
//! dense operators.

use num_complex::Complex64 as C64;

use crate::hilbert::{omega_kn_lm, HBAR};
use crate::linalg::CMatrix;
use crate::susceptibility::Problem;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[inline]
fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Flat row-major square matrix.
pub(crate) type Flat = Vec<C64>;

pub(crate) fn to_flat(m: &CMatrix) -> Flat {
    m.iter().copied().collect()
}

pub(crate) fn from_flat(v: &[C64], d: usize) -> CMatrix {
    CMatrix::from_shape_vec((d, d), v.to_vec()).expect("square")
}

/// Ladder-structured drive `B = μ_e ⊗ a` together with the diagonal generator.
pub(crate) struct Dynamics {
    pub d: usize,
    dm: usize,
    nf: usize,
    mu: Vec<C64>,
    sqrt_n: Vec<f64>,
    /// `−(iΩ + γ)` elementwise.
    pub generator: Flat,
    pub omega: f64,
    /// `A/ħ`: converts `B` into a rate.
    pub coupling: f64,
}

impl Dynamics {
    pub fn new(p: &Problem) -> Self {
        let s = *p.space();
        let d = s.dim();
        let dm = s.matter_dim();
        let nf = s.fock_dim();
        let mu_e = p.matter.dipole_along(&p.field.polarization);
        let omega = p.omega();
        let mut generator = vec![ZERO; d * d];
        for i in 0..d {
            let (k, n) = s.split(i);
            for j in 0..d {
                let (l, m) = s.split(j);
                let w = omega_kn_lm(&p.matter, omega, k, n, l, m);
                generator[i * d + j] = C64::new(-p.rates.g(k, n, l, m), -w);
            }
        }
        Self {
            d,
            dm,
            nf,
            mu: mu_e.iter().copied().collect(),
            sqrt_n: (0..nf + 1).map(|n| (n as f64).sqrt()).collect(),
            generator,
            omega,
            coupling: p.field.amplitude() / HBAR,
        }
    }

    /// Largest `|μ_e ⊗ a|`-type rate, used for step heuristics and λ scaling.
    pub fn drive_norm(&self) -> f64 {
        let mut mu_norm = 0.0_f64;
        for k in 0..self.dm {
            let row: f64 = (0..self.dm).map(|l| self.mu[k * self.dm + l].norm()).sum();
            mu_norm = mu_norm.max(row);
        }
        mu_norm * self.sqrt_n[self.nf - 1] * self.coupling
    }

    /// `out += c_minus·(Bσ − σB) + c_plus·(B†σ − σB†)` with `B = μ_e ⊗ a`.
    pub fn add_commutators(&self, sigma: &[C64], c_minus: C64, c_plus: C64, out: &mut [C64]) {
        let (d, dm, nf) = (self.d, self.dm, self.nf);
        let sq = &self.sqrt_n;
        // Left products act on whole rows: row (k,n) collects rows (L,n±1).
        for k in 0..dm {
            for big_l in 0..dm {
                let mu = self.mu[k * dm + big_l];
                if mu == ZERO {
                    continue;
                }
                for n in 0..nf {
                    let dst = (k * nf + n) * d;
                    if n + 1 < nf {
                        let coef = c_minus * mu * sq[n + 1];
                        let src = (big_l * nf + n + 1) * d;
                        axpy(coef, &sigma[src..src + d], &mut out[dst..dst + d]);
                    }
                    if n >= 1 {
                        let coef = c_plus * mu * sq[n];
                        let src = (big_l * nf + n - 1) * d;
                        axpy(coef, &sigma[src..src + d], &mut out[dst..dst + d]);
                    }
                }
            }
        }
        // Right products act within each row: column (l,m) collects columns (L,m∓1).
        for big_l in 0..dm {
            for l in 0..dm {
                let mu = self.mu[big_l * dm + l];
                if mu == ZERO {
                    continue;
                }
                let lower = -c_minus * mu;
                let raise = -c_plus * mu;
                for row in 0..d {
                    let src = &sigma[row * d + big_l * nf..row * d + (big_l + 1) * nf];
                    let dst = &mut out[row * d + l * nf..row * d + (l + 1) * nf];
                    for m in 1..nf {
                        dst[m] += lower * sq[m] * src[m - 1];
                        dst[m - 1] += raise * sq[m] * src[m];
                    }
                }
            }
        }
    }

    /// Drive coefficients for `−(iλ/ħ)[V(t), ·]` with `V = −A(iB e^{−iωt} − iB† e^{iωt})`.
    #[inline]
    pub fn drive_phases(&self, lambda: f64, t: f64) -> (C64, C64) {
        let g = lambda * self.coupling;
        let ph = C64::from_polar(1.0, -self.omega * t);
        (-g * ph, g * ph.conj())
    }
}

/// Integrating-factor fourth-order Runge-Kutta with fixed step.
pub(crate) struct Lawson {
    half: Flat,
    full: Flat,
    pub h: f64,
}

impl Lawson {
    pub fn new(generator: &[C64], h: f64) -> Self {
        Self {
            half: generator.iter().map(|g| (g * (0.5 * h)).exp()).collect(),
            full: generator.iter().map(|g| (g * h).exp()).collect(),
            h,
        }
    }

    /// One step of `y' = L∘y + f(t, y)` for a block of stacked matrices.
    pub fn step<F>(&self, t: f64, y: &mut [Flat], f: &F, scratch: &mut Scratch)
    where
        F: Fn(f64, &[Flat], &mut [Flat]),
    {
        let h = self.h;
        let blocks = y.len();
        scratch.ensure(blocks, y[0].len());
        let Scratch { k1, k2, k3, k4, tmp } = scratch;
        f(t, y, k1);
        for b in 0..blocks {
            for (i, v) in tmp[b].iter_mut().enumerate() {
                *v = self.half[i] * (y[b][i] + 0.5 * h * k1[b][i]);
            }
        }
        f(t + 0.5 * h, tmp, k2);
        for b in 0..blocks {
            for (i, v) in tmp[b].iter_mut().enumerate() {
                *v = self.half[i] * y[b][i] + 0.5 * h * k2[b][i];
            }
        }
        f(t + 0.5 * h, tmp, k3);
        for b in 0..blocks {
            for (i, v) in tmp[b].iter_mut().enumerate() {
                *v = self.full[i] * y[b][i] + h * self.half[i] * k3[b][i];
            }
        }
        f(t + h, tmp, k4);
        for b in 0..blocks {
            for i in 0..y[b].len() {
                y[b][i] = self.full[i] * y[b][i]
                    + h / 6.0 * (self.full[i] * k1[b][i] + 2.0 * self.half[i] * (k2[b][i] + k3[b][i]) + k4[b][i]);
            }
        }
    }
}

#[derive(Default)]
pub(crate) struct Scratch {
    k1: Vec<Flat>,
    k2: Vec<Flat>,
    k3: Vec<Flat>,
    k4: Vec<Flat>,
    tmp: Vec<Flat>,
}

impl Scratch {
    fn ensure(&mut self, blocks: usize, len: usize) {
        for v in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.tmp] {
            if v.len() != blocks || v.first().map(|x| x.len()) != Some(len) {
                *v = vec![vec![ZERO; len]; blocks];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{field_operator_parts, hamiltonian};
    use crate::linalg::{kron, max_abs};
    use crate::susceptibility::testing::*;

    #[test]
    fn structured_commutator_matches_dense() {
        let (p, eq) = qd_coherent("MS", 1.0, 0.8, 0.001, "c", 9);
        let s = *p.space();
        let dynm = Dynamics::new(&p);
        let sigma = to_flat(&eq.rho_eq);
        let (cm, cp) = (C64::new(0.3, -1.1), C64::new(-0.7, 0.4));
        let mut out = vec![ZERO; s.dim() * s.dim()];
        dynm.add_commutators(&sigma, cm, cp, &mut out);

        let fo = field_operator_parts(&p.field, &s);
        let amp = fo.amplitude;
        let b = kron(&p.matter.dipole_along(&p.field.polarization), &fo.e_plus.mapv(|z| z / C64::new(0.0, amp)));
        let bd = crate::linalg::dagger(&b);
        let r = &eq.rho_eq;
        let dense = (&b.dot(r) - &r.dot(&b)).mapv(|z| z * cm) + (&bd.dot(r) - &r.dot(&bd)).mapv(|z| z * cp);
        let got = from_flat(&out, s.dim());
        assert!(max_abs(&(&got - &dense)) <= 1e-14 * max_abs(&dense));

        // the phase convention reproduces −(i/ħ)[H_int(t), ρ]
        let h = hamiltonian(&p.matter, &p.field, &s).unwrap();
        let t = 3.7e-13;
        let ph = C64::from_polar(1.0, -p.omega() * t);
        let v = &h.int_plus.mapv(|z| z * ph) + &h.int_minus.mapv(|z| z * ph.conj());
        let expect = (&v.dot(r) - &r.dot(&v)).mapv(|z| z * C64::new(0.0, -1.0 / HBAR));
        let (a, c) = dynm.drive_phases(1.0, t);
        let mut out = vec![ZERO; s.dim() * s.dim()];
        dynm.add_commutators(&sigma, a, c, &mut out);
        let got = from_flat(&out, s.dim());
        assert!(max_abs(&(&got - &expect)) <= 1e-12 * max_abs(&expect));
    }

    #[test]
    fn lawson_is_exact_for_pure_decay() {
        let gen = vec![C64::new(-2.0, -5.0), C64::new(-0.5, 1.0)];
        let l = Lawson::new(&gen, 0.1);
        let mut y = vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]];
        let mut sc = Scratch::default();
        let f = |_t: f64, _y: &[Flat], out: &mut [Flat]| out[0].iter_mut().for_each(|v| *v = ZERO);
        for s in 0..10 {
            l.step(s as f64 * 0.1, &mut y, &f, &mut sc);
        }
        assert!((y[0][0] - gen[0].exp()).norm() < 1e-14);
        assert!((y[0][1] - C64::new(0.0, 1.0) * gen[1].exp()).norm() < 1e-14);
    }

    #[test]
    fn lawson_fourth_order_on_forced_decay() {
        // y' = −y + e^{it}, y(0) = 0
        let exact = |t: f64| (C64::new(0.0, t).exp() - (-t as f64).exp()) / C64::new(1.0, 1.0);
        let run = |h: f64| {
            let l = Lawson::new(&[C64::new(-1.0, 0.0)], h);
            let mut y = vec![vec![ZERO]];
            let mut sc = Scratch::default();
            let f = |t: f64, _y: &[Flat], out: &mut [Flat]| out[0][0] = C64::new(0.0, t).exp();
            let steps = (2.0 / h).round() as usize;
            for s in 0..steps {
                l.step(s as f64 * h, &mut y, &f, &mut sc);
            }
            (y[0][0] - exact(2.0)).norm()
        };
        let e1 = run(0.1);
        let e2 = run(0.05);
        let order = (e1 / e2).log2();
        assert!(order > 3.7 && order < 4.5, "{order}");
    }
}
