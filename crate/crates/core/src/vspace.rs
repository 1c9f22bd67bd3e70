//! The admissible-parameter set `Θ_t` — an `ℓ₂`-ball of radius `B`
//! intersected with accumulated slab constraints `|⟨Δ̃ᵢ, 1 ⊕ θ⟩| ≤ τᵢ` —
//! and the optimistic linear program over it.
//!
//! Snapshots are immutable: [`VersionSpace::add_constraint`] returns a new
//! space, so `Θ_t ⊆ Θ_{t−1}` holds by construction and earlier snapshots
//! stay valid for auditing.
//!
//! The solver is projected gradient ascent on the linear objective, with the
//! projection onto ball∩slabs computed by cyclic Dykstra alternating
//! projections (every member set has a closed-form projection). A final
//! active-set refinement solves the equality-constrained program on the
//! faces the iterate has settled on, which is what pushes the objective from
//! first-order accuracy down to solver-tolerance accuracy. Ties are broken
//! toward the minimum-norm maximizer.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{axpy, dot, norm2, one_oplus_dot, sub};
use crate::mdp::StateId;
use crate::report::ConstraintRecord;
use crate::td::TdVector;

/// Tolerance used by feasibility certification: if alternating projections
/// cannot do better than this, the space is declared empty.
const EMPTY_DECLARE_TOL: f64 = 1e-4;
/// Dykstra stopping tolerance (per-cycle displacement).
const PROJECTION_TOL: f64 = 1e-8;
/// Cap on projected-gradient outer iterations.
const PGA_CAP: usize = 10_000;
/// Dykstra cycle cap per projection call.
const DYKSTRA_CYCLE_CAP: usize = 400;

#[derive(Debug, Error)]
pub enum VspaceError {
    #[error("constraint threshold must be positive (got {0})")]
    InvalidThreshold(f64),
    #[error("constraint capacity {cap} exceeded: the driver is broken")]
    IterationOverflow { cap: usize },
    #[error("dimension mismatch: {0}")]
    DimensionError(String),
    #[error("version space is empty (worst violation {worst_violation:.3e})")]
    EmptyVersionSpace { worst_violation: f64 },
    #[error("solver stalled; best objective {0:.6e}")]
    SolverStall(f64),
}

/// Membership report from [`VersionSpace::contains`].
#[derive(Debug, Clone, PartialEq)]
pub struct Containment {
    pub inside: bool,
    /// `max(0, ‖θ‖ − B)`.
    pub ball_residual: f64,
    /// Worst slab overshoot `(index, max(0, |⟨Δ̃,1⊕θ⟩| − τ))`, if any slabs.
    pub worst_slab: Option<(usize, f64)>,
}

/// Solution of the optimistic program.
#[derive(Debug, Clone)]
pub struct OptimisticSolution {
    pub theta: Vec<f64>,
    pub value: f64,
    /// Worst constraint violation at `theta` (residual units).
    pub feasibility_residual: f64,
    /// Projected-gradient iterations consumed.
    pub iterations: u32,
}

/// `Θ = Ball(B) ∩ {|⟨Δ̃ᵢ, 1 ⊕ θ⟩| ≤ τᵢ}`.
#[derive(Debug, Clone)]
pub struct VersionSpace {
    dim: usize,
    radius: f64,
    constraints: Vec<ConstraintRecord>,
    max_constraints: usize,
}

impl VersionSpace {
    /// The unconstrained ball `Θ₀`, with a capacity for how many slabs a
    /// correct driver may ever append.
    pub fn ball(dim: usize, radius: f64, max_constraints: usize) -> Self {
        assert!(radius > 0.0, "ball radius must be positive");
        Self {
            dim,
            radius,
            constraints: Vec::new(),
            max_constraints,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn constraints(&self) -> &[ConstraintRecord] {
        &self.constraints
    }

    /// Append a slab, returning the shrunken space. Existing constraints are
    /// never touched.
    pub fn add_constraint(
        &self,
        delta: &TdVector,
        tau: f64,
        origin_state: StateId,
        iteration: u32,
    ) -> Result<Self, VspaceError> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(VspaceError::InvalidThreshold(tau));
        }
        if delta.values.len() != self.dim + 1 {
            return Err(VspaceError::DimensionError(format!(
                "TD vector has {} coordinates, want {}",
                delta.values.len(),
                self.dim + 1
            )));
        }
        if delta.values.iter().any(|v| !v.is_finite()) {
            return Err(VspaceError::DimensionError(
                "TD vector has non-finite coordinates".into(),
            ));
        }
        if self.constraints.len() >= self.max_constraints {
            return Err(VspaceError::IterationOverflow {
                cap: self.max_constraints,
            });
        }
        let mut next = self.clone();
        next.constraints.push(ConstraintRecord {
            delta: delta.values.clone(),
            tau,
            origin_state,
            iteration,
        });
        Ok(next)
    }

    /// Closed-set membership with 1e-9 numerical slack.
    pub fn contains(&self, theta: &[f64]) -> Containment {
        let ball_residual = (norm2(theta) - self.radius).max(0.0);
        let mut worst_slab: Option<(usize, f64)> = None;
        for (i, c) in self.constraints.iter().enumerate() {
            let overshoot = (one_oplus_dot(&c.delta, theta).abs() - c.tau).max(0.0);
            if worst_slab.map_or(true, |(_, w)| overshoot > w) {
                worst_slab = Some((i, overshoot));
            }
        }
        let slab_ok = worst_slab.map_or(true, |(_, w)| w <= 1e-9);
        Containment {
            inside: ball_residual <= 1e-9 && slab_ok,
            ball_residual,
            worst_slab,
        }
    }

    /// Worst violation at `theta` in residual units (0 when feasible).
    fn violation(&self, theta: &[f64]) -> f64 {
        let c = self.contains(theta);
        let slab = c.worst_slab.map_or(0.0, |(_, w)| w);
        c.ball_residual.max(slab)
    }

    /// `argmax_{θ∈Θ} ⟨c, θ⟩`, ties broken toward the minimum-norm maximizer.
    pub fn optimistic_argmax(&self, c: &[f64]) -> Result<OptimisticSolution, VspaceError> {
        if c.len() != self.dim {
            return Err(VspaceError::DimensionError(format!(
                "objective has {} coordinates, want {}",
                c.len(),
                self.dim
            )));
        }
        // Inconsistent zero-normal slabs empty the space outright.
        for cons in &self.constraints {
            if norm2(&cons.delta[1..]) <= 1e-15 && cons.delta[0].abs() > cons.tau + 1e-12 {
                return Err(VspaceError::EmptyVersionSpace {
                    worst_violation: cons.delta[0].abs() - cons.tau,
                });
            }
        }

        // Feasible anchor: project the origin (and a ball point along c).
        let zero = vec![0.0; self.dim];
        let (anchor, mut iterations) = self.dykstra(&zero);
        let mut anchor_viol = self.violation(&anchor);
        let mut anchor = anchor;
        if anchor_viol > PROJECTION_TOL * 10.0 && norm2(c) > 0.0 {
            let mut alt = c.to_vec();
            crate::linalg::scale(&mut alt, self.radius / norm2(c));
            let (alt, extra) = self.dykstra(&alt);
            iterations += extra;
            if self.violation(&alt) < anchor_viol {
                anchor_viol = self.violation(&alt);
                anchor = alt;
            }
        }
        if anchor_viol > EMPTY_DECLARE_TOL {
            return Err(VspaceError::EmptyVersionSpace {
                worst_violation: anchor_viol,
            });
        }

        let cnorm = norm2(c);
        if cnorm == 0.0 {
            // Flat objective: the tie-break alone decides. The projection of
            // the origin is the minimum-norm feasible point.
            return Ok(OptimisticSolution {
                value: 0.0,
                feasibility_residual: self.violation(&anchor),
                theta: anchor,
                iterations: iterations as u32,
            });
        }

        // Projected gradient ascent with a geometrically decaying step.
        let mut x = anchor.clone();
        let mut best = x.clone();
        let mut best_val = dot(c, &x);
        let mut eta = self.radius / cnorm;
        let phases = 25;
        let steps_per_phase = PGA_CAP / phases;
        'outer: for _ in 0..phases {
            for _ in 0..steps_per_phase {
                let (next, cycles) = self.dykstra(&axpy(&x, eta, c));
                iterations += cycles;
                let moved = norm2(&sub(&next, &x));
                x = next;
                let val = dot(c, &x);
                if val > best_val && self.violation(&x) <= PROJECTION_TOL * 10.0 {
                    best_val = val;
                    best = x.clone();
                }
                if moved < 1e-12 * self.radius.max(1.0) {
                    break;
                }
                if iterations > 400_000 {
                    break 'outer;
                }
            }
            eta *= 0.5;
        }

        // Active-set refinement around the incumbent.
        if let Some((theta, value)) = self.refine_active_sets(c, &best) {
            if value > best_val {
                best_val = value;
                best = theta;
            }
        }

        // Minimum-norm point on the optimal face.
        let face_slack = 1e-9 * (1.0 + cnorm * self.radius);
        let (min_norm, extra) = self.dykstra_with_halfspace(&zero, c, best_val - face_slack);
        iterations += extra;
        if self.violation(&min_norm) <= PROJECTION_TOL * 10.0
            && dot(c, &min_norm) >= best_val - 2.0 * face_slack
        {
            best = min_norm;
            best_val = dot(c, &best);
        }

        let residual = self.violation(&best);
        if residual > 1e-6 {
            return Err(VspaceError::SolverStall(best_val));
        }
        Ok(OptimisticSolution {
            value: best_val,
            feasibility_residual: residual,
            theta: best,
            iterations: iterations as u32,
        })
    }

    // -- projections --------------------------------------------------------

    fn project_ball(&self, x: &[f64]) -> Vec<f64> {
        let n = norm2(x);
        if n <= self.radius {
            x.to_vec()
        } else {
            x.iter().map(|&v| v * self.radius / n).collect()
        }
    }

    fn project_slab(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let cons = &self.constraints[i];
        let normal = &cons.delta[1..];
        let nn = dot(normal, normal);
        if nn <= 1e-30 {
            return x.to_vec();
        }
        let value = cons.delta[0] + dot(normal, x);
        let overshoot = if value > cons.tau {
            value - cons.tau
        } else if value < -cons.tau {
            value + cons.tau
        } else {
            return x.to_vec();
        };
        axpy(x, -overshoot / nn, normal)
    }

    /// Cyclic Dykstra projection of `x0` onto ball ∩ slabs. Returns the
    /// projection and cycle count.
    fn dykstra(&self, x0: &[f64]) -> (Vec<f64>, usize) {
        let m = 1 + self.constraints.len();
        let mut corrections = vec![vec![0.0; self.dim]; m];
        let mut x = x0.to_vec();
        let mut cycles = 0;
        loop {
            let x_before = x.clone();
            for i in 0..m {
                let y = axpy(&x, 1.0, &corrections[i]);
                let projected = if i == 0 {
                    self.project_ball(&y)
                } else {
                    self.project_slab(i - 1, &y)
                };
                corrections[i] = sub(&y, &projected);
                x = projected;
            }
            cycles += 1;
            if norm2(&sub(&x, &x_before)) < PROJECTION_TOL || cycles >= DYKSTRA_CYCLE_CAP {
                break;
            }
        }
        (x, cycles)
    }

    /// Dykstra onto ball ∩ slabs ∩ {⟨c, θ⟩ ≥ bound}.
    fn dykstra_with_halfspace(&self, x0: &[f64], c: &[f64], bound: f64) -> (Vec<f64>, usize) {
        let m = 2 + self.constraints.len();
        let cc = dot(c, c);
        let mut corrections = vec![vec![0.0; self.dim]; m];
        let mut x = x0.to_vec();
        let mut cycles = 0;
        loop {
            let x_before = x.clone();
            for i in 0..m {
                let y = axpy(&x, 1.0, &corrections[i]);
                let projected = if i == 0 {
                    self.project_ball(&y)
                } else if i <= self.constraints.len() {
                    self.project_slab(i - 1, &y)
                } else if cc > 1e-30 && dot(c, &y) < bound {
                    axpy(&y, (bound - dot(c, &y)) / cc, c)
                } else {
                    y.clone()
                };
                corrections[i] = sub(&y, &projected);
                x = projected;
            }
            cycles += 1;
            if norm2(&sub(&x, &x_before)) < PROJECTION_TOL || cycles >= DYKSTRA_CYCLE_CAP {
                break;
            }
        }
        (x, cycles)
    }

    // -- active-set refinement ----------------------------------------------

    /// Solve the equality-constrained maximizations suggested by the slacks
    /// at `x`, and return the best feasible candidate.
    fn refine_active_sets(&self, c: &[f64], x: &[f64]) -> Option<(Vec<f64>, f64)> {
        // Constraints ordered by how close to their boundary x sits.
        let mut order: Vec<(usize, f64)> = self
            .constraints
            .iter()
            .enumerate()
            .filter(|(_, cons)| norm2(&cons.delta[1..]) > 1e-15)
            .map(|(i, cons)| {
                let value = one_oplus_dot(&cons.delta, x);
                (i, (cons.tau - value.abs()).abs())
            })
            .collect();
        order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());

        let mut best: Option<(Vec<f64>, f64)> = None;
        let consider = |theta: Vec<f64>, best: &mut Option<(Vec<f64>, f64)>| {
            if self.violation(&theta) <= 1e-8 {
                let value = dot(c, &theta);
                if best.as_ref().map_or(true, |(_, v)| value > *v) {
                    *best = Some((theta, value));
                }
            }
        };

        // Ball-only candidate.
        let cn = norm2(c);
        if cn > 0.0 {
            consider(c.iter().map(|&v| v * self.radius / cn).collect(), &mut best);
        }
        consider(x.to_vec(), &mut best);

        let max_k = order.len().min(self.dim);
        for k in 1..=max_k {
            let active: Vec<usize> = order[..k].iter().map(|&(i, _)| i).collect();
            let rows: Vec<Vec<f64>> = active
                .iter()
                .map(|&i| self.constraints[i].delta[1..].to_vec())
                .collect();
            let rhs: Vec<f64> = active
                .iter()
                .map(|&i| {
                    let cons = &self.constraints[i];
                    let side = if one_oplus_dot(&cons.delta, x) >= 0.0 {
                        cons.tau
                    } else {
                        -cons.tau
                    };
                    side - cons.delta[0]
                })
                .collect();
            for candidate in self.equality_candidates(c, &rows, &rhs) {
                consider(candidate, &mut best);
            }
        }
        best
    }

    /// Maximize `⟨c, θ⟩` subject to `A θ = b` and the ball; returns the
    /// affine-only and ball-active solutions.
    fn equality_candidates(&self, c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> Vec<Vec<f64>> {
        let k = rows.len();
        let d = self.dim;
        let a = DMatrix::from_fn(k, d, |r, cidx| rows[r][cidx]);
        let bv = DVector::from_column_slice(b);
        let svd = a.clone().svd(true, true);
        let theta0 = match svd.solve(&bv, 1e-12) {
            Ok(sol) => sol,
            Err(_) => return Vec::new(),
        };
        let theta0: Vec<f64> = theta0.iter().copied().collect();

        // Component of c orthogonal to the active rows (via the right
        // singular vectors of the row space).
        let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
        let mut c_null = c.to_vec();
        for (idx, sigma) in svd.singular_values.iter().enumerate() {
            if *sigma > 1e-10 {
                let row: Vec<f64> = v_t.row(idx).iter().copied().collect();
                let proj = dot(&c_null, &row);
                c_null = axpy(&c_null, -proj, &row);
            }
        }
        let cn = norm2(&c_null);
        let mut out = Vec::new();
        let n0 = norm2(&theta0);
        if cn <= 1e-12 {
            // Objective is constant on the affine set; θ0 is its min-norm
            // point (and the tie-break winner) if it fits the ball.
            if n0 <= self.radius + 1e-9 {
                out.push(theta0);
            }
            return out;
        }
        if n0 <= self.radius + 1e-12 {
            let reach = (self.radius * self.radius - n0 * n0).max(0.0).sqrt();
            out.push(axpy(&theta0, reach / cn, &c_null));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Brute-force reference maximizer
// ---------------------------------------------------------------------------

/// Grid-search reference for the optimistic program, independent of the
/// projected-gradient route. Only sensible in low dimension (`d ≤ 3`).
///
/// Sweeps directions on the unit sphere at ~1e-3 angular resolution from a
/// feasible anchor, walks each ray to the boundary in closed form, and
/// locally refines the best direction.
pub mod reference {
    use super::VersionSpace;
    use crate::linalg::{axpy, dot, norm2};

    /// Maximize `⟨c, θ⟩` over the space by boundary sweep from `anchor`
    /// (which must be feasible). Returns `(argmax, value)`.
    pub fn grid_argmax(space: &VersionSpace, c: &[f64], anchor: &[f64]) -> (Vec<f64>, f64) {
        assert!(space.dim() <= 3, "grid reference is for d ≤ 3");
        assert!(
            space.violation(anchor) <= 1e-7,
            "anchor must be feasible (violation {})",
            space.violation(anchor)
        );
        match space.dim() {
            0 => (Vec::new(), 0.0),
            1 => sweep(space, c, anchor, &[vec![1.0], vec![-1.0]]),
            2 => {
                let coarse: Vec<Vec<f64>> = (0..6284)
                    .map(|i| {
                        let ang = i as f64 * 1e-3;
                        vec![ang.cos(), ang.sin()]
                    })
                    .collect();
                let (mut best_theta, mut best_val) = sweep(space, c, anchor, &coarse);
                // Refine around the incumbent angle.
                let mut center = best_incumbent_angle(&best_theta, anchor);
                let mut width = 2e-3;
                for _ in 0..4 {
                    let fine: Vec<Vec<f64>> = (-40..=40)
                        .map(|i| {
                            let ang = center + i as f64 * width / 40.0;
                            vec![ang.cos(), ang.sin()]
                        })
                        .collect();
                    let (theta, val) = sweep(space, c, anchor, &fine);
                    if val > best_val {
                        best_val = val;
                        best_theta = theta;
                        center = best_incumbent_angle(&best_theta, anchor);
                    }
                    width /= 20.0;
                }
                (best_theta, best_val)
            }
            _ => {
                let mut dirs = Vec::with_capacity(1001 * 2001);
                for ip in 0..=1000 {
                    let polar = ip as f64 * std::f64::consts::PI / 1000.0;
                    for ia in 0..2000 {
                        let azim = ia as f64 * std::f64::consts::PI / 1000.0;
                        dirs.push(vec![
                            polar.sin() * azim.cos(),
                            polar.sin() * azim.sin(),
                            polar.cos(),
                        ]);
                    }
                }
                let (mut best_theta, mut best_val) = sweep(space, c, anchor, &dirs);
                let mut width = std::f64::consts::PI / 1000.0;
                for _ in 0..5 {
                    let center = direction_of(&best_theta, anchor);
                    let fine = perturbed_directions(&center, width);
                    let (theta, val) = sweep(space, c, anchor, &fine);
                    if val > best_val {
                        best_val = val;
                        best_theta = theta;
                    }
                    width /= 8.0;
                }
                (best_theta, best_val)
            }
        }
    }

    fn best_incumbent_angle(theta: &[f64], anchor: &[f64]) -> f64 {
        let dir = direction_of(theta, anchor);
        dir[1].atan2(dir[0])
    }

    fn direction_of(theta: &[f64], anchor: &[f64]) -> Vec<f64> {
        let mut dir: Vec<f64> = theta.iter().zip(anchor).map(|(t, a)| t - a).collect();
        let n = norm2(&dir);
        if n < 1e-12 {
            dir[0] = 1.0;
        } else {
            for v in dir.iter_mut() {
                *v /= n;
            }
        }
        dir
    }

    fn perturbed_directions(center: &[f64], width: f64) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for i in -10..=10i32 {
            for j in -10..=10i32 {
                for k in -10..=10i32 {
                    if i.abs() + j.abs() + k.abs() > 14 {
                        continue;
                    }
                    let mut dir = vec![
                        center[0] + i as f64 * width / 10.0,
                        center[1] + j as f64 * width / 10.0,
                        center[2] + k as f64 * width / 10.0,
                    ];
                    let n = norm2(&dir);
                    if n < 1e-12 {
                        continue;
                    }
                    for v in dir.iter_mut() {
                        *v /= n;
                    }
                    out.push(dir);
                }
            }
        }
        out
    }

    fn sweep(
        space: &VersionSpace,
        c: &[f64],
        anchor: &[f64],
        directions: &[Vec<f64>],
    ) -> (Vec<f64>, f64) {
        let mut best_val = f64::NEG_INFINITY;
        let mut best_theta = anchor.to_vec();
        for u in directions {
            let t = max_step(space, anchor, u);
            let theta = axpy(anchor, t, u);
            let val = dot(c, &theta);
            if val > best_val {
                best_val = val;
                best_theta = theta;
            }
        }
        (best_theta, best_val)
    }

    /// Largest `t ≥ 0` with `anchor + t·u` feasible, in closed form.
    fn max_step(space: &VersionSpace, anchor: &[f64], u: &[f64]) -> f64 {
        let b = space.radius();
        let au = dot(anchor, u);
        let inside = (b * b - dot(anchor, anchor)).max(0.0);
        let mut t = -au + (au * au + inside).sqrt();
        for cons in space.constraints() {
            let normal = &cons.delta[1..];
            let w = dot(normal, u);
            if w.abs() < 1e-15 {
                continue;
            }
            let at = cons.delta[0] + dot(normal, anchor);
            let bound = if w > 0.0 {
                (cons.tau - at) / w
            } else {
                (-cons.tau - at) / w
            };
            t = t.min(bound.max(0.0));
        }
        t.max(0.0)
    }
}
