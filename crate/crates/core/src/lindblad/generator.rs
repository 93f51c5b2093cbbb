use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::jump::JumpOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, c, Spectrum, C64, I};
use crate::operator_core::{DensityMatrix, FockOperator};
use crate::superop::Superoperator;

/// Largest site count for which the `4^N` superoperator is formed.
pub const SUPEROP_MAX_SITES: usize = 6;

/// Eigenvalue floor tolerated in evolved states before clipping.
pub const EVOLVED_FLOOR: f64 = -1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LindbladForm {
    /// `-W W rho - rho W* W* + 2 W* rho W`. Trace preserving only for
    /// selfadjoint `W`, where it equals the standard form with jump `sqrt(2) W`
    /// and the double commutator `-[W, [W, rho]]`.
    Literal,
    /// `W rho W* - (W* W rho + rho W* W) / 2`.
    Gksl,
}

#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    jump: JumpOperator,
    form: LindbladForm,
    hamiltonian: Option<FockOperator>,
}

impl LindbladGenerator {
    pub fn new(jump: JumpOperator, form: LindbladForm) -> Result<Self> {
        if form == LindbladForm::Literal && !jump.is_selfadjoint() {
            return Err(Error::Precondition(
                "the literal form preserves trace only for a selfadjoint jump operator; use the GKSL form".into(),
            ));
        }
        Ok(LindbladGenerator { jump, form, hamiltonian: None })
    }

    /// Add the coherent part `-i [H, rho]`.
    pub fn with_hamiltonian(mut self, h: FockOperator) -> Result<Self> {
        if h.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: h.dim() });
        }
        if !h.is_hermitian(1e-12) {
            return Err(Error::Precondition("Hamiltonian part is not Hermitian".into()));
        }
        self.hamiltonian = Some(h);
        Ok(self)
    }

    pub fn jump(&self) -> &JumpOperator {
        &self.jump
    }

    pub fn form(&self) -> LindbladForm {
        self.form
    }

    pub fn hamiltonian(&self) -> Option<&FockOperator> {
        self.hamiltonian.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.jump.operator().dim()
    }

    /// True when the generator is the pure double commutator `-[W, [W, .]]`,
    /// which is solved exactly in the eigenbasis of `W`.
    pub fn is_dephasing(&self) -> bool {
        self.form == LindbladForm::Literal && self.hamiltonian.is_none()
    }

    /// `d rho / d tau` for an arbitrary matrix argument.
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let w = self.jump.operator().matrix();
        let wa = linalg::adjoint(w);
        let mut out = match self.form {
            LindbladForm::Literal => {
                let left = w.dot(w).dot(rho);
                let right = rho.dot(&wa).dot(&wa);
                let mid = wa.dot(rho).dot(w);
                mid.mapv(|z| z * 2.0) - left - right
            }
            LindbladForm::Gksl => {
                let wdw = wa.dot(w);
                let anti = wdw.dot(rho) + rho.dot(&wdw);
                w.dot(rho).dot(&wa) - anti.mapv(|z| z * 0.5)
            }
        };
        if let Some(h) = &self.hamiltonian {
            out = out - linalg::commutator(h.matrix(), rho).mapv(|z| z * I);
        }
        out
    }

    /// The generator as an explicit `4^N x 4^N` matrix.
    pub fn superoperator(&self) -> Result<Superoperator> {
        let sites = self.jump.operator().lattice().sites();
        if sites > SUPEROP_MAX_SITES {
            return Err(Error::TooManySites(sites, SUPEROP_MAX_SITES));
        }
        let w = self.jump.operator().matrix();
        let wa = linalg::adjoint(w);
        let mut l = match self.form {
            LindbladForm::Literal => {
                let mid = Superoperator::sandwich(&wa, w).scaled(c(2.0));
                &(&mid - &Superoperator::left(&w.dot(w))) - &Superoperator::right(&wa.dot(&wa))
            }
            LindbladForm::Gksl => {
                let wdw = wa.dot(w);
                let anti = &Superoperator::left(&wdw) + &Superoperator::right(&wdw);
                &Superoperator::sandwich(w, &wa) - &anti.scaled(c(0.5))
            }
        };
        if let Some(h) = &self.hamiltonian {
            l = &l - &Superoperator::commutator(h.matrix()).scaled(I);
        }
        Ok(l)
    }
}

/// `d rho / d tau` at a state.
pub fn lindblad_rhs(rho: &DensityMatrix, generator: &LindbladGenerator) -> Result<Array2<C64>> {
    if rho.dim() != generator.dim() {
        return Err(Error::DimensionMismatch { expected: generator.dim(), got: rho.dim() });
    }
    Ok(generator.apply(rho.matrix()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EvolveMethod {
    /// Exponentiate the explicit superoperator.
    ExactExponential,
    /// Fixed-step fourth-order Runge-Kutta.
    Rk4 { dtau: f64 },
    /// Closed form `rho_jk e^{-tau (w_j - w_k)^2}` in the eigenbasis of a
    /// selfadjoint `W`; literal form without Hamiltonian part only.
    Dephasing,
}

/// Fixed-time evolution map, reusable across many states.
#[derive(Clone, Debug)]
pub enum Propagator {
    Matrix(Superoperator),
    Rk4 { generator: LindbladGenerator, tau: f64, steps: usize },
    Dephasing { spectrum: Spectrum, factors: Array2<f64> },
}

impl Propagator {
    pub fn new(generator: &LindbladGenerator, tau: f64, method: EvolveMethod) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("evolution time must be nonnegative, got {tau}")));
        }
        match method {
            EvolveMethod::ExactExponential => Ok(Propagator::Matrix(generator.superoperator()?.exp(tau)?)),
            EvolveMethod::Rk4 { dtau } => {
                if !(dtau.is_finite() && dtau > 0.0) {
                    return Err(Error::InvalidParameter(format!("step size must be positive, got {dtau}")));
                }
                let steps = (tau / dtau).ceil() as usize;
                Ok(Propagator::Rk4 { generator: generator.clone(), tau, steps })
            }
            EvolveMethod::Dephasing => {
                if !generator.is_dephasing() {
                    return Err(Error::Unsupported(
                        "closed-form dephasing needs the literal form without a Hamiltonian part".into(),
                    ));
                }
                let spectrum = Spectrum::of(generator.jump().operator().matrix())?;
                let w = spectrum.values();
                let d = w.len();
                let factors = Array2::from_shape_fn((d, d), |(j, k)| (-tau * (w[j] - w[k]).powi(2)).exp());
                Ok(Propagator::Dephasing { spectrum, factors })
            }
        }
    }

    /// Raw image of a matrix, without state validation.
    pub fn apply_matrix(&self, rho: &Array2<C64>) -> Array2<C64> {
        match self {
            Propagator::Matrix(s) => s.apply(rho),
            Propagator::Rk4 { generator, tau, steps } => {
                let mut x = rho.clone();
                if *steps > 0 {
                    let h = tau / *steps as f64;
                    for _ in 0..*steps {
                        x = rk4_step(generator, &x, h);
                    }
                }
                x
            }
            Propagator::Dephasing { spectrum, factors } => {
                let mut m = spectrum.to_eigenbasis(rho);
                m.zip_mut_with(factors, |z, f| *z *= f);
                spectrum.from_eigenbasis(&m)
            }
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_evolved(self.apply_matrix(rho.matrix()), EVOLVED_FLOOR)
    }
}

fn rk4_step(g: &LindbladGenerator, x: &Array2<C64>, h: f64) -> Array2<C64> {
    let k1 = g.apply(x);
    let k2 = g.apply(&(x + &k1.mapv(|z| z * (0.5 * h))));
    let k3 = g.apply(&(x + &k2.mapv(|z| z * (0.5 * h))));
    let k4 = g.apply(&(x + &k3.mapv(|z| z * h)));
    let incr = k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4;
    x + &incr.mapv(|z| z * (h / 6.0))
}

/// `rho(tau)` from `rho0`.
pub fn evolve(rho0: &DensityMatrix, generator: &LindbladGenerator, tau: f64, method: EvolveMethod) -> Result<DensityMatrix> {
    if rho0.dim() != generator.dim() {
        return Err(Error::DimensionMismatch { expected: generator.dim(), got: rho0.dim() });
    }
    if tau == 0.0 {
        return Ok(rho0.clone());
    }
    Propagator::new(generator, tau, method)?.apply(rho0)
}
