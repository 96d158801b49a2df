use num_complex::Complex64;

use super::PropagatorError;
use crate::fields::Vec2;
use crate::modes::{Dispersion, ModeTrajectory};

/// Which similarity transform the symbol is expressed in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weighting {
    /// `(ψ, ψ₁)` pairs, no `K_α^{1/2}` conjugation.
    Raw,
    /// `U₀,α`: conjugated by `K_α^{1/2}` at `0` and `t`.
    Alpha(f64),
}

impl Weighting {
    pub fn alpha(&self) -> Option<f64> {
        match self {
            Weighting::Raw => None,
            Weighting::Alpha(a) => Some(*a),
        }
    }
}

/// The 2×2 Fourier-multiplier symbol at one `(t, ξ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorSymbol {
    pub t: f64,
    pub xi: Vec2,
    pub alpha: Option<f64>,
    pub m: [[Complex64; 2]; 2],
}

impl PropagatorSymbol {
    pub fn identity(xi: Vec2, alpha: Option<f64>) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        Self {
            t: 0.0,
            xi,
            alpha,
            m: [[one, zero], [zero, one]],
        }
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// `(σ_max, σ_min)` from the eigenvalues of `M*M`.
    pub fn singular_values(&self) -> (f64, f64) {
        singular_values(&self.m)
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

pub(crate) fn singular_values(m: &[[Complex64; 2]; 2]) -> (f64, f64) {
    // MM* = [[p, r], [r̄, q]]; its eigenvalue gap is hypot(p − q, 2|r|).
    let p = m[0][0].norm_sqr() + m[0][1].norm_sqr();
    let q = m[1][0].norm_sqr() + m[1][1].norm_sqr();
    let r = (m[0][0] * m[1][0].conj() + m[0][1] * m[1][1].conj()).norm();
    let frob = p + q;
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = (p - q).hypot(2.0 * r);
    let smax = (0.5 * (frob + disc)).sqrt();
    let smin = if smax > 0.0 { det / smax } else { 0.0 };
    (smax, smin)
}

/// Symbol at sample `index` of a trajectory:
/// `diag(L_t^{1/4−α/2}, L_t^{−1/4−α/2}) · [[ζ₀, −iζ₁], [iζ₀′, ζ₁′]] · diag(L₀^{−1/4+α/2}, L₀^{1/4+α/2})`.
pub fn symbol_at(disp: &Dispersion, traj: &ModeTrajectory, index: usize, weighting: Weighting) -> PropagatorSymbol {
    let s = traj.sample(index);
    let i = Complex64::i();
    let z = [
        [Complex64::new(s.zeta0, 0.0), -i * s.zeta1],
        [i * s.zeta0_prime, Complex64::new(s.zeta1_prime, 0.0)],
    ];
    let m = match weighting {
        Weighting::Raw => z,
        Weighting::Alpha(alpha) => {
            let lt = s.q * s.q;
            let l0 = disp.l0(traj.xi);
            let row = [lt.powf(0.25 - 0.5 * alpha), lt.powf(-0.25 - 0.5 * alpha)];
            let col = [l0.powf(-0.25 + 0.5 * alpha), l0.powf(0.25 + 0.5 * alpha)];
            let mut m = z;
            for r in 0..2 {
                for c in 0..2 {
                    m[r][c] *= row[r] * col[c];
                }
            }
            m
        }
    };
    PropagatorSymbol {
        t: s.t,
        xi: traj.xi,
        alpha: weighting.alpha(),
        m,
    }
}

/// `M_α(t, ξ)` from a trajectory that was sampled at `t`.
pub fn assemble_symbol(
    disp: &Dispersion,
    traj: &ModeTrajectory,
    t: f64,
    alpha: f64,
) -> Result<PropagatorSymbol, PropagatorError> {
    let index = traj.index_of(t).ok_or(PropagatorError::NotSampled { t })?;
    Ok(symbol_at(disp, traj, index, Weighting::Alpha(alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldKind, FieldModel, PhysicalParams};
    use crate::modes::{integrate_amplitude_phase, integrate_direct};

    fn disp(kind: FieldKind) -> Dispersion {
        let p = PhysicalParams::default();
        Dispersion::new(p, FieldModel::new(kind, &p, 0).unwrap()).unwrap()
    }

    #[test]
    fn identity_at_time_zero() {
        let d = disp(FieldKind::Logarithmic { e3: 1.0, e4: 1.0 });
        for xi in [-2.0, 0.3, 5.0] {
            let traj = integrate_amplitude_phase(&d, [xi, 0.0], &[0.0, 1.0], 1e-10).unwrap();
            for alpha in [-0.5, 0.0, 0.25] {
                let sym = assemble_symbol(&d, &traj, 0.0, alpha).unwrap();
                let id = PropagatorSymbol::identity([xi, 0.0], Some(alpha));
                for r in 0..2 {
                    for c in 0..2 {
                        assert!((sym.m[r][c] - id.m[r][c]).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_field_symbol_is_rotation() {
        let d = disp(FieldKind::Constant { e0: [0.0, 0.0] });
        let t = 2.3;
        let traj = integrate_direct(&d, [0.0, 0.0], &[0.0, t], 1e-12).unwrap();
        let sym = assemble_symbol(&d, &traj, t, 0.0).unwrap();
        let i = Complex64::i();
        let expect = [[Complex64::new(t.cos(), 0.0), -i * t.sin()], [-i * t.sin(), Complex64::new(t.cos(), 0.0)]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((sym.m[r][c] - expect[r][c]).norm() < 1e-10);
            }
        }
        let (smax, smin) = sym.singular_values();
        assert!((smax - 1.0).abs() < 1e-10 && (smin - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unit_determinant_and_alpha_scaling() {
        let d = disp(FieldKind::PowerLaw {
            gamma: 0.5,
            coeff: 1.0,
            rho: vec![],
            theta1: vec![],
        });
        let times = crate::modes::uniform_times(200.0, 50);
        let traj = integrate_amplitude_phase(&d, [-4.0, 0.0], &times, 1e-11).unwrap();
        for &t in &times {
            let m0 = assemble_symbol(&d, &traj, t, 0.0).unwrap();
            assert!((m0.det().norm() - 1.0).abs() < 1e-8);
            let ma = assemble_symbol(&d, &traj, t, 0.25).unwrap();
            let ratio = (d.l(t, [-4.0, 0.0]) / d.l0([-4.0, 0.0])).powf(-0.125);
            assert!((ma.singular_values().0 - ratio * m0.singular_values().0).abs() < 1e-9);
        }
        assert!(matches!(
            assemble_symbol(&d, &traj, 3.3, 0.0),
            Err(PropagatorError::NotSampled { .. })
        ));
    }

    #[test]
    fn closed_form_singular_values() {
        let m = [
            [Complex64::new(3.0, 0.0), Complex64::default()],
            [Complex64::default(), Complex64::new(0.0, -0.5)],
        ];
        assert_eq!(singular_values(&m), (3.0, 0.5));
    }

    proptest::proptest! {
        #[test]
        fn singular_values_match_invariants(v in proptest::collection::vec(-3.0f64..3.0, 8)) {
            let c = |k: usize| Complex64::new(v[2 * k], v[2 * k + 1]);
            let m = [[c(0), c(1)], [c(2), c(3)]];
            let (smax, smin) = singular_values(&m);
            let frob: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum();
            let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
            proptest::prop_assert!(smax >= smin && smin >= 0.0);
            proptest::prop_assert!((smax * smax + smin * smin - frob).abs() <= 1e-12 * (1.0 + frob));
            proptest::prop_assert!((smax * smin - det).abs() <= 1e-12 * (1.0 + frob));
        }
    }
}
