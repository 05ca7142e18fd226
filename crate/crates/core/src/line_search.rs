//! Searches over complex lines for a fixed rotation `O`.
//!
//! Everything is parametrized by `z = Oᵀe` on the unit sphere. For the line
//! through `e = Oz` the shadow generators are `(z_i, (Az)_i)` with
//! `A = OᵀJO`, so every objective here is a function of `(z, Az)`.
//!
//! Minima found by [`minimize_shadow_area`], [`minimize_diam_proxy`] and
//! [`octahedron_section_diameter`] are attained at explicit points and hence
//! are upper bounds on the true infima; they certify nothing from below.

use crate::error::Result;
use crate::linalg::{norm1, rotated_complex_structure, Matrix, RotationMatrix};
use crate::optimize::{minimize_on_sphere, OptimizerConfig, PairObjective, SphereMinimum};
use crate::zonogon::{area_with_gradient, project_generators, AreaWorkspace, ComplexLine};

use std::cell::RefCell;

/// Which function of `(z, Az)` a [`MinimizationResult`] minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Shadow area of the rotated cube on the line through `Oz`.
    Area,
    /// `max{‖z‖₁, ‖Az‖₁}`, a lower bound for the shadow diameter.
    DiamProxy,
    /// `‖z‖₁ + ‖Az‖₁`.
    L1Sum,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Area => "area",
            Objective::DiamProxy => "diam_proxy",
            Objective::L1Sum => "l1_sum",
        }
    }

    /// Evaluates the objective at `z` directly (no optimizer state).
    pub fn evaluate(&self, a: &Matrix, z: &[f64]) -> f64 {
        let w = a.matvec(z);
        match self {
            Objective::Area => AreaObjective.eval(z, &w, None),
            Objective::DiamProxy => DiamProxyObjective.eval(z, &w, None),
            Objective::L1Sum => L1SumObjective.eval(z, &w, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizationResult {
    pub best_line: ComplexLine,
    /// `Oᵀe` for the best line.
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub restarts_used: usize,
    pub converged: bool,
    pub iterations: usize,
    pub objective: Objective,
    pub restart_values: Vec<f64>,
}

impl MinimizationResult {
    fn from_sphere(o: &RotationMatrix, objective: Objective, min: SphereMinimum) -> Result<Self> {
        let best_line = ComplexLine::through(&o.apply(&min.point))?;
        Ok(Self {
            best_line,
            best_point: min.point,
            best_value: min.value,
            restarts_used: min.restarts_used,
            converged: min.converged,
            iterations: min.iterations,
            objective,
            restart_values: min.restart_values,
        })
    }

    /// Spread of per-restart values: `max - min`.
    pub fn spread(&self) -> f64 {
        let max = self.restart_values.iter().cloned().fold(f64::MIN, f64::max);
        max - self.best_value
    }
}

thread_local! {
    static AREA_WS: RefCell<AreaWorkspace> = RefCell::new(AreaWorkspace::default());
}

struct AreaObjective;

impl PairObjective for AreaObjective {
    fn eval(&self, z: &[f64], w: &[f64], grads: Option<(&mut [f64], &mut [f64])>) -> f64 {
        AREA_WS.with(|ws| {
            let ws = &mut ws.borrow_mut();
            match grads {
                Some((gz, gw)) => area_with_gradient(z, w, Some(gz), Some(gw), ws),
                None => area_with_gradient(z, w, None, None, ws),
            }
        })
    }
}

fn sign_into(v: &[f64], out: &mut [f64]) {
    for (o, x) in out.iter_mut().zip(v) {
        *o = if *x > 0.0 {
            1.0
        } else if *x < 0.0 {
            -1.0
        } else {
            0.0
        };
    }
}

struct DiamProxyObjective;

impl PairObjective for DiamProxyObjective {
    fn eval(&self, z: &[f64], w: &[f64], grads: Option<(&mut [f64], &mut [f64])>) -> f64 {
        let (nz, nw) = (norm1(z), norm1(w));
        if let Some((gz, gw)) = grads {
            if nz >= nw {
                sign_into(z, gz);
                gw.iter_mut().for_each(|g| *g = 0.0);
            } else {
                gz.iter_mut().for_each(|g| *g = 0.0);
                sign_into(w, gw);
            }
        }
        nz.max(nw)
    }
}

struct L1SumObjective;

impl PairObjective for L1SumObjective {
    fn eval(&self, z: &[f64], w: &[f64], grads: Option<(&mut [f64], &mut [f64])>) -> f64 {
        if let Some((gz, gw)) = grads {
            sign_into(z, gz);
            sign_into(w, gw);
        }
        norm1(z) + norm1(w)
    }
}

/// Basis vector `e_0`, the body-frame coordinates of the constructive
/// minimal-width line. Used as a warm start by every minimizer here.
fn width_warm_start(dim: usize) -> Vec<f64> {
    let mut z = vec![0.0; dim];
    z[0] = 1.0;
    z
}

fn run(
    o: &RotationMatrix,
    objective: Objective,
    cfg: &OptimizerConfig,
    extra_starts: &[Vec<f64>],
) -> Result<MinimizationResult> {
    let a = rotated_complex_structure(o);
    let mut starts = vec![width_warm_start(o.dim())];
    starts.extend_from_slice(extra_starts);
    let min = match objective {
        Objective::Area => minimize_on_sphere(&AreaObjective, &a, cfg, &starts)?,
        Objective::DiamProxy => minimize_on_sphere(&DiamProxyObjective, &a, cfg, &starts)?,
        Objective::L1Sum => minimize_on_sphere(&L1SumObjective, &a, cfg, &starts)?,
    };
    MinimizationResult::from_sphere(o, objective, min)
}

/// Area of the shadow of `OQ` on the complex line through `e`.
pub fn shadow_area(o: &RotationMatrix, e: &[f64]) -> Result<f64> {
    let line = ComplexLine::new(e.to_vec())?;
    Ok(project_generators(o, &line)?.area())
}

/// Upper estimate of `min_L Area(π_L(OQ))` over complex lines `L`.
pub fn minimize_shadow_area(o: &RotationMatrix, cfg: &OptimizerConfig) -> Result<MinimizationResult> {
    run(o, Objective::Area, cfg, &[])
}

/// Upper estimate of `min_{|v|=1} max{‖v‖₁, ‖Av‖₁}`.
pub fn minimize_diam_proxy(o: &RotationMatrix, cfg: &OptimizerConfig) -> Result<MinimizationResult> {
    run(o, Objective::DiamProxy, cfg, &[])
}

/// As [`minimize`] with extra warm starts given as body-frame points `z = Oᵀe`.
pub fn minimize_from(
    o: &RotationMatrix,
    objective: Objective,
    cfg: &OptimizerConfig,
    warm_starts: &[Vec<f64>],
) -> Result<MinimizationResult> {
    run(o, objective, cfg, warm_starts)
}

pub fn minimize(o: &RotationMatrix, objective: Objective, cfg: &OptimizerConfig) -> Result<MinimizationResult> {
    run(o, objective, cfg, &[])
}

/// The line `span{v, Jv}` for a minimal-width direction `v = O e_k` of `OQ`
/// and its exact shadow area.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthBound {
    pub line: ComplexLine,
    pub axis: usize,
    pub area_ub: f64,
}

/// Every `O e_k` has width exactly 2 in `OQ`; the computed widths differ only
/// by rounding, and ties within 1e-12 go to the lowest index.
pub fn width_direction_upper_bound(o: &RotationMatrix) -> Result<WidthBound> {
    let d = o.dim();
    let mut axis = 0;
    let mut best = f64::INFINITY;
    for k in 0..d {
        let v = o.matrix().column(k);
        let width = 2.0 * norm1(&o.apply_transpose(&v));
        if width < best - 1e-12 {
            best = width;
            axis = k;
        }
    }
    let line = ComplexLine::through(&o.matrix().column(axis))?;
    let area_ub = project_generators(o, &line)?.area();
    Ok(WidthBound { line, axis, area_ub })
}

/// `‖J‖_{(OQ)° → OQ} = max_{x ∈ B₁} ‖OᵀJOx‖_∞`, the largest entry of `|A|`.
pub fn j_operator_norm_cube(o: &RotationMatrix) -> f64 {
    rotated_complex_structure(o).max_abs()
}

/// `1/‖J‖ ≤ c_EHZ ≤ c̄ ≤ c̄_Sp ≤ 4/‖J‖`, together with the optimizer's
/// estimate of the unitary minimum, which bounds `c̄_Sp` from above.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySandwich {
    pub j_norm: f64,
    pub lower: f64,
    pub upper: f64,
    pub cun_estimate: f64,
}

pub fn capacity_sandwich(o: &RotationMatrix, cfg: &OptimizerConfig) -> Result<CapacitySandwich> {
    let j_norm = j_operator_norm_cube(o);
    let cun_estimate = minimize_shadow_area(o, cfg)?.best_value;
    Ok(CapacitySandwich {
        j_norm,
        lower: 1.0 / j_norm,
        upper: 4.0 / j_norm,
        cun_estimate,
    })
}

/// Diameter of the section of `B₁^{4n}` by `L_O = {(x, Ax)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionDiameter {
    /// `2√2 / m₂`.
    pub diameter: f64,
    /// Optimizer value of `min_{|x|=1} ‖x‖₁ + ‖Ax‖₁`.
    pub m2: f64,
    /// Always true: `m₂` is an upper bound, so `diameter` is a lower estimate.
    pub is_lower_estimate: bool,
    pub search: MinimizationResult,
}

pub fn octahedron_section_diameter(o: &RotationMatrix, cfg: &OptimizerConfig) -> Result<SectionDiameter> {
    octahedron_section_diameter_from(o, cfg, &[])
}

/// As [`octahedron_section_diameter`], also starting from the given body-frame
/// points (for instance the diameter-proxy minimizer, which makes
/// `m₂ ≤ 2·proxy` hold by construction).
pub fn octahedron_section_diameter_from(
    o: &RotationMatrix,
    cfg: &OptimizerConfig,
    warm_starts: &[Vec<f64>],
) -> Result<SectionDiameter> {
    let search = minimize_from(o, Objective::L1Sum, cfg, warm_starts)?;
    let m2 = search.best_value;
    Ok(SectionDiameter {
        diameter: 2.0 * std::f64::consts::SQRT_2 / m2,
        m2,
        is_lower_estimate: true,
        search,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_orthogonal, random_unit_vector, RngSeed};
    use crate::zonogon::project_generators;
    use rand::Rng;

    fn quick(seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            restarts: 16,
            rng: RngSeed::new(seed, 0),
            ..Default::default()
        }
    }

    #[test]
    fn identity_area_is_four_on_axis_line() {
        let o = RotationMatrix::identity(6).unwrap();
        let mut e = vec![0.0; 6];
        e[0] = 1.0;
        assert_eq!(shadow_area(&o, &e).unwrap(), 4.0);
        let res = minimize_shadow_area(&o, &quick(1)).unwrap();
        assert!(res.best_value <= 4.0 + 1e-6);
    }

    #[test]
    fn identity_proxy_is_one() {
        let o = RotationMatrix::identity(8).unwrap();
        let res = minimize_diam_proxy(&o, &quick(2)).unwrap();
        assert!((res.best_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn best_value_reevaluates() {
        let o = haar_orthogonal(12, RngSeed::new(5, 0)).unwrap();
        let res = minimize_shadow_area(&o, &quick(3)).unwrap();
        let z = project_generators(&o, &res.best_line).unwrap();
        assert!((z.area() - res.best_value).abs() < 1e-10, "{} vs {}", z.area(), res.best_value);
        assert!(res.restart_values.iter().all(|&v| res.best_value <= v));

        let res = minimize_diam_proxy(&o, &quick(3)).unwrap();
        let a = o.apply_transpose(res.best_line.e());
        let b = o.apply_transpose(res.best_line.je());
        assert!((norm1(&a).max(norm1(&b)) - res.best_value).abs() < 1e-10);
    }

    #[test]
    fn phase_invariance_of_area() {
        let o = haar_orthogonal(10, RngSeed::new(6, 0)).unwrap();
        let mut rng = RngSeed::new(6, 1).rng();
        for _ in 0..20 {
            let line = ComplexLine::new(random_unit_vector(10, &mut rng)).unwrap();
            let t = rng.random_range(0.0..6.3);
            let rotated = line.phase_rotated(t);
            let a1 = shadow_area(&o, line.e()).unwrap();
            let a2 = shadow_area(&o, rotated.e()).unwrap();
            assert!((a1 - a2).abs() < 1e-10);
        }
    }

    #[test]
    fn width_bound_identity() {
        let o = RotationMatrix::identity(4).unwrap();
        let wb = width_direction_upper_bound(&o).unwrap();
        assert_eq!(wb.axis, 0);
        assert_eq!(wb.area_ub, 4.0);
    }

    #[test]
    fn width_bound_random() {
        for s in 0..100 {
            let o = haar_orthogonal(20, RngSeed::new(100 + s, 0)).unwrap();
            let wb = width_direction_upper_bound(&o).unwrap();
            assert!(wb.area_ub <= 4.0 * 20f64.sqrt());
        }
    }

    #[test]
    fn j_norm_range() {
        assert_eq!(j_operator_norm_cube(&RotationMatrix::identity(6).unwrap()), 1.0);
        for s in 0..20 {
            let n = 1 + s as usize % 9;
            let o = haar_orthogonal(2 * n, RngSeed::new(s, 9)).unwrap();
            let j = j_operator_norm_cube(&o);
            assert!(j >= 1.0 / (2.0 * n as f64).sqrt() - 1e-12 && j <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn sandwich_identity() {
        let o = RotationMatrix::identity(4).unwrap();
        let s = capacity_sandwich(&o, &quick(4)).unwrap();
        assert_eq!(s.lower, 1.0);
        assert_eq!(s.upper, 4.0);
        assert!(s.cun_estimate <= 4.0 + 1e-6);
    }

    #[test]
    fn section_identity_n1() {
        let o = RotationMatrix::identity(2).unwrap();
        let s = octahedron_section_diameter(&o, &quick(5)).unwrap();
        assert!((s.m2 - 2.0).abs() < 1e-12);
        assert!((s.diameter - 2f64.sqrt()).abs() < 1e-12);
        assert!(s.is_lower_estimate);
    }

    #[test]
    fn proxy_at_least_half_l1_sum() {
        let o = haar_orthogonal(16, RngSeed::new(7, 0)).unwrap();
        let proxy = minimize_diam_proxy(&o, &quick(7)).unwrap();
        let section =
            octahedron_section_diameter_from(&o, &quick(7), std::slice::from_ref(&proxy.best_point)).unwrap();
        assert!(proxy.best_value >= section.m2 / 2.0 - 1e-12);
        assert!(section.m2 >= 2.0 - 1e-12);
    }
}
