use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};

use super::grid::{Dispersion, MomentumGrid};
use super::OccupationFunction;
use crate::error::{Error, Result};
use crate::par;

/// Relative shell-membership tolerance, in units of the dispersion scale.
pub const SHELL_TOL: f64 = 1e-9;

/// Largest number of `(p1, p2, p3)` triples the table builder will scan.
const MAX_SCAN: usize = 1 << 31;

/// Two-body scattering amplitude `W(p1 p2; p3 p4)`.
///
/// Must be nonnegative and symmetric under `p1 <-> p2`, `p3 <-> p4` and
/// `(p1 p2) <-> (p3 p4)`; the table builder checks every entry it stores.
pub trait Vertex: Send + Sync + fmt::Debug {
    fn amplitude(&self, p1: usize, p2: usize, p3: usize, p4: usize) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantVertex(pub f64);

impl Vertex for ConstantVertex {
    fn amplitude(&self, _: usize, _: usize, _: usize, _: usize) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShellMode {
    /// Energy conservation as an indicator, up to [`SHELL_TOL`].
    Exact,
    /// Energy delta replaced by a normalized Gaussian of width `eta`.
    Broadened { eta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CollisionForm {
    /// `rho3 rho4 (1-rho1)(1-rho2) - rho1 rho2 (1-rho3)(1-rho4)`.
    #[default]
    GainLoss,
    /// `rho3 rho4 - rho1 rho2`, the classical truncation without Pauli blocking.
    Bilinear,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    p2: u32,
    p3: u32,
    p4: u32,
    weight: f64,
}

/// Momentum- and energy-conserving quadruples grouped by `p1`, with the
/// combined vertex and shell weight. Trivial quadruples (`{p3,p4} = {p1,p2}`)
/// contribute nothing and are left out.
#[derive(Debug)]
pub struct CollisionTable {
    offsets: Vec<usize>,
    entries: Vec<Entry>,
}

impl CollisionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn row(&self, p1: usize) -> &[Entry] {
        &self.entries[self.offsets[p1]..self.offsets[p1 + 1]]
    }

    /// Quadruples `(p1, p2, p3, p4, weight)` in table order.
    pub fn quadruples(&self) -> impl Iterator<Item = (usize, usize, usize, usize, f64)> + '_ {
        (0..self.offsets.len() - 1).flat_map(move |p1| {
            self.row(p1).iter().map(move |e| (p1, e.p2 as usize, e.p3 as usize, e.p4 as usize, e.weight))
        })
    }
}

/// Collision kernel: band, vertex, shell mode and the cached quadruple table.
#[derive(Clone, Debug)]
pub struct CollisionKernel {
    grid: MomentumGrid,
    dispersion: Dispersion,
    energies: Vec<f64>,
    vertex: Arc<dyn Vertex>,
    mode: ShellMode,
    form: CollisionForm,
    table: Arc<CollisionTable>,
}

impl CollisionKernel {
    /// Constant unit vertex, gain-loss form.
    pub fn new(grid: MomentumGrid, dispersion: Dispersion, mode: ShellMode) -> Result<Self> {
        Self::with_options(grid, dispersion, mode, Arc::new(ConstantVertex(1.0)), CollisionForm::GainLoss)
    }

    pub fn with_options(
        grid: MomentumGrid,
        dispersion: Dispersion,
        mode: ShellMode,
        vertex: Arc<dyn Vertex>,
        form: CollisionForm,
    ) -> Result<Self> {
        match mode {
            ShellMode::Broadened { eta } if !(eta.is_finite() && eta > 0.0) => {
                return Err(Error::InvalidParameter(format!("broadening width must be positive, got {eta}")));
            }
            ShellMode::Exact if grid.dims() == 1 => {
                return Err(Error::Unsupported(
                    "1D grids have no nontrivial exact-shell collisions; use broadened mode".into(),
                ));
            }
            _ => {}
        }
        let energies = dispersion.energies(&grid)?;
        let table = build_table(&grid, &energies, dispersion.scale(), mode, vertex.as_ref())?;
        log::debug!("collision table: {} quadruples on {} points", table.len(), grid.len());
        Ok(CollisionKernel { grid, dispersion, energies, vertex, mode, form, table: Arc::new(table) })
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn dispersion(&self) -> &Dispersion {
        &self.dispersion
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn vertex(&self) -> &dyn Vertex {
        self.vertex.as_ref()
    }

    pub fn mode(&self) -> ShellMode {
        self.mode
    }

    pub fn form(&self) -> CollisionForm {
        self.form
    }

    pub fn table(&self) -> &CollisionTable {
        &self.table
    }

    /// `C[rho](p1)` for every `p1`. Accepts raw values so integrator stages
    /// may sit marginally outside `[0, 1]`.
    pub fn apply(&self, rho: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rho.len()];
        par::fill(&mut out, |p1| self.at(rho, p1));
        out
    }

    /// Single-threaded [`apply`](Self::apply); identical per-point summation order.
    pub fn apply_sequential(&self, rho: &[f64]) -> Vec<f64> {
        (0..rho.len()).map(|p1| self.at(rho, p1)).collect()
    }

    fn at(&self, rho: &[f64], p1: usize) -> f64 {
        let r1 = rho[p1];
        let mut acc = 0.0;
        match self.form {
            CollisionForm::GainLoss => {
                for e in self.table.row(p1) {
                    let (r2, r3, r4) = (rho[e.p2 as usize], rho[e.p3 as usize], rho[e.p4 as usize]);
                    acc += e.weight * (r3 * r4 * (1.0 - r1) * (1.0 - r2) - r1 * r2 * (1.0 - r3) * (1.0 - r4));
                }
            }
            CollisionForm::Bilinear => {
                for e in self.table.row(p1) {
                    let (r2, r3, r4) = (rho[e.p2 as usize], rho[e.p3 as usize], rho[e.p4 as usize]);
                    acc += e.weight * (r3 * r4 - r1 * r2);
                }
            }
        }
        acc
    }

    /// Dimension of the space of collision invariants: functions `phi` with
    /// `phi1 + phi2 = phi3 + phi4` on every stored quadruple. Number and energy
    /// always qualify, so the answer is at least 2 on a connected shell graph.
    pub fn invariant_dimension(&self) -> Result<usize> {
        let m = self.grid.len();
        let mut gram = Array2::<f64>::zeros((m, m));
        for (p1, p2, p3, p4, _) in self.table.quadruples() {
            let v = [(p1, 1.0), (p2, 1.0), (p3, -1.0), (p4, -1.0)];
            for &(a, x) in &v {
                for &(b, y) in &v {
                    gram[[a, b]] += x * y;
                }
            }
        }
        let vals = gram.eigvalsh(UPLO::Lower)?;
        let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(vals.iter().filter(|v| v.abs() <= 1e-9 * top.max(1.0)).count())
    }
}

/// `C[rho]` on the kernel's grid.
pub fn collision_operator(rho: &OccupationFunction, kernel: &CollisionKernel) -> Result<Vec<f64>> {
    if rho.len() != kernel.grid.len() {
        return Err(Error::DimensionMismatch { expected: kernel.grid.len(), got: rho.len() });
    }
    Ok(kernel.apply(rho.values()))
}

fn gaussian(x: f64, eta: f64) -> f64 {
    (-0.5 * (x / eta).powi(2)).exp() / ((2.0 * PI).sqrt() * eta)
}

fn build_table(
    grid: &MomentumGrid,
    energies: &[f64],
    scale: f64,
    mode: ShellMode,
    vertex: &dyn Vertex,
) -> Result<CollisionTable> {
    let m = grid.len();
    if m.saturating_mul(m).saturating_mul(m) > MAX_SCAN {
        return Err(Error::Budget(format!("collision table scan of {m}^3 triples exceeds the budget")));
    }
    let tol = SHELL_TOL * scale;
    let rows: Vec<Result<Vec<Entry>>> = par::map_range(m, |p1| {
        let mut row = Vec::new();
        for p2 in 0..m {
            let total = grid.add(p1, p2);
            for p3 in 0..m {
                let p4 = grid.sub(total, p3);
                if (p3 == p1 && p4 == p2) || (p3 == p2 && p4 == p1) {
                    continue;
                }
                let de = energies[p1] + energies[p2] - energies[p3] - energies[p4];
                let shell = match mode {
                    ShellMode::Exact => {
                        if de.abs() <= tol {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    ShellMode::Broadened { eta } => gaussian(de, eta),
                };
                if shell == 0.0 {
                    continue;
                }
                let w = vertex.amplitude(p1, p2, p3, p4);
                check_vertex(vertex, w, p1, p2, p3, p4)?;
                if w == 0.0 {
                    continue;
                }
                row.push(Entry { p2: p2 as u32, p3: p3 as u32, p4: p4 as u32, weight: w * shell });
            }
        }
        Ok(row)
    });
    let mut offsets = Vec::with_capacity(m + 1);
    let mut entries = Vec::new();
    offsets.push(0);
    for row in rows {
        entries.extend(row?);
        offsets.push(entries.len());
    }
    Ok(CollisionTable { offsets, entries })
}

fn check_vertex(vertex: &dyn Vertex, w: f64, p1: usize, p2: usize, p3: usize, p4: usize) -> Result<()> {
    if !(w.is_finite() && w >= 0.0) {
        return Err(Error::InvalidParameter(format!("vertex W({p1} {p2}; {p3} {p4}) = {w} is not a nonnegative number")));
    }
    for (other, label) in [
        (vertex.amplitude(p2, p1, p3, p4), "p1 <-> p2"),
        (vertex.amplitude(p1, p2, p4, p3), "p3 <-> p4"),
        (vertex.amplitude(p3, p4, p1, p2), "in <-> out"),
    ] {
        if (other - w).abs() > 1e-12 * w.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!("vertex is not symmetric under {label} at ({p1} {p2}; {p3} {p4})")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::fermi_dirac;
    use crate::rng;

    /// Quadruple loop straight from the definition, independent of the table.
    fn brute_force(grid: &MomentumGrid, eps: &[f64], rho: &[f64], mode: ShellMode) -> Vec<f64> {
        let m = grid.len();
        let l = grid.side();
        let comp = |k: usize| [k % l, k / l];
        let mut out = vec![0.0; m];
        for p1 in 0..m {
            for p2 in 0..m {
                for p3 in 0..m {
                    for p4 in 0..m {
                        let (a, b, c, d) = (comp(p1), comp(p2), comp(p3), comp(p4));
                        if !(a[0] + b[0] + 2 * l - c[0] - d[0]).is_multiple_of(l) || !(a[1] + b[1] + 2 * l - c[1] - d[1]).is_multiple_of(l) {
                            continue;
                        }
                        let de = eps[p1] + eps[p2] - eps[p3] - eps[p4];
                        let shell = match mode {
                            ShellMode::Exact => f64::from(u8::from(de.abs() < 1e-9)),
                            ShellMode::Broadened { eta } => {
                                (-de * de / (2.0 * eta * eta)).exp() / (eta * (2.0 * PI).sqrt())
                            }
                        };
                        let (r1, r2, r3, r4) = (rho[p1], rho[p2], rho[p3], rho[p4]);
                        out[p1] += shell * (r3 * r4 * (1.0 - r1) * (1.0 - r2) - r1 * r2 * (1.0 - r3) * (1.0 - r4));
                    }
                }
            }
        }
        out
    }

    fn grid4() -> MomentumGrid {
        MomentumGrid::new(2, 4).unwrap()
    }

    #[test]
    fn matches_brute_force_exact_shell() {
        let grid = grid4();
        for disp in [Dispersion::Cosine { hopping: 1.0 }, Dispersion::Quadratic { hopping: 1.0 }] {
            let kernel = CollisionKernel::new(grid, disp, ShellMode::Exact).unwrap();
            let mut r = rng::seeded(11);
            let rho = OccupationFunction::random(grid.len(), &mut r);
            let fast = collision_operator(&rho, &kernel).unwrap();
            let slow = brute_force(&grid, kernel.energies(), rho.values(), ShellMode::Exact);
            let err = fast.iter().zip(&slow).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-13, "{err}");
            assert!(fast.iter().any(|c| c.abs() > 1e-3));
        }
    }

    #[test]
    fn matches_brute_force_broadened() {
        let grid = MomentumGrid::new(2, 3).unwrap();
        let mode = ShellMode::Broadened { eta: 0.1 };
        let kernel = CollisionKernel::new(grid, Dispersion::Cosine { hopping: 1.0 }, mode).unwrap();
        let rho = OccupationFunction::random(grid.len(), &mut rng::seeded(5));
        let fast = kernel.apply(rho.values());
        let slow = brute_force(&grid, kernel.energies(), rho.values(), mode);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn constant_occupation_is_stationary() {
        let kernel = CollisionKernel::new(grid4(), Dispersion::Cosine { hopping: 1.0 }, ShellMode::Exact).unwrap();
        let rho = OccupationFunction::constant(16, 0.37).unwrap();
        assert!(kernel.apply(rho.values()).iter().all(|c| *c == 0.0));
    }

    #[test]
    fn fermi_dirac_is_stationary() {
        let grid = MomentumGrid::new(2, 8).unwrap();
        let kernel = CollisionKernel::new(grid, Dispersion::Quadratic { hopping: 1.0 }, ShellMode::Exact).unwrap();
        let rho = fermi_dirac(0.7, 3.0, kernel.energies());
        let c = kernel.apply(rho.values());
        assert!(c.iter().all(|x| x.abs() < 1e-14), "{:e}", c.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }

    #[test]
    fn pauli_bounds_on_boundary_inputs() {
        let grid = MomentumGrid::new(2, 6).unwrap();
        let kernel = CollisionKernel::new(grid, Dispersion::Cosine { hopping: 1.0 }, ShellMode::Exact).unwrap();
        let mut r = rng::seeded(3);
        let mut rho = OccupationFunction::random(grid.len(), &mut r).into_values();
        for k in (0..rho.len()).step_by(3) {
            rho[k] = 0.0;
        }
        for k in (1..rho.len()).step_by(3) {
            rho[k] = 1.0;
        }
        let c = kernel.apply(&rho);
        for (k, v) in c.iter().enumerate() {
            match k % 3 {
                0 => assert!(*v >= 0.0),
                1 => assert!(*v <= 0.0),
                _ => {}
            }
        }
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let grid = MomentumGrid::new(2, 8).unwrap();
        let kernel = CollisionKernel::new(grid, Dispersion::Cosine { hopping: 1.0 }, ShellMode::Exact).unwrap();
        let rho = OccupationFunction::random(grid.len(), &mut rng::seeded(9));
        assert_eq!(kernel.apply(rho.values()), kernel.apply_sequential(rho.values()));
    }

    #[test]
    fn invariant_counts() {
        // On 8x8 the cosine band carries one collision invariant beyond number
        // and energy; the wrapped quadratic band does not.
        let grid = MomentumGrid::new(2, 8).unwrap();
        let cos = CollisionKernel::new(grid, Dispersion::Cosine { hopping: 1.0 }, ShellMode::Exact).unwrap();
        let quad = CollisionKernel::new(grid, Dispersion::Quadratic { hopping: 1.0 }, ShellMode::Exact).unwrap();
        assert_eq!(cos.invariant_dimension().unwrap(), 3);
        assert_eq!(quad.invariant_dimension().unwrap(), 2);
        assert_eq!(quad.table().len(), 17470);
    }

    #[derive(Debug)]
    struct Lopsided;
    impl Vertex for Lopsided {
        fn amplitude(&self, p1: usize, _: usize, _: usize, _: usize) -> f64 {
            p1 as f64
        }
    }

    #[test]
    fn rejects_bad_kernels() {
        let d = Dispersion::Cosine { hopping: 1.0 };
        assert!(CollisionKernel::new(grid4(), d.clone(), ShellMode::Broadened { eta: 0.0 }).is_err());
        assert!(CollisionKernel::new(MomentumGrid::new(1, 8).unwrap(), d.clone(), ShellMode::Exact).is_err());
        let bad = CollisionKernel::with_options(grid4(), d, ShellMode::Exact, Arc::new(Lopsided), CollisionForm::GainLoss);
        assert!(bad.is_err());
    }
}
