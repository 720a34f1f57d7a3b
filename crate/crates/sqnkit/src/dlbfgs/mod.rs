//! Stochastic damped limited-memory BFGS inverse-Hessian operator.
//!
//! The operator keeps a bounded FIFO of curvature pairs (s, y_bar, rho) and
//! applies H*g via the two-loop recursion from a scaled identity seed
//! H_0 = gamma^{-1} I. Damping replaces the raw gradient difference y with
//!
//! ```text
//! y_bar = theta * y + (1 - theta) * gamma * s
//! ```
//!
//! choosing theta so that s'y_bar >= 0.25 * gamma * ||s||^2 always holds.
//! That floor keeps the operator positive definite without any convexity
//! assumption on the objective, which is what makes the scheme usable with
//! noisy mini-batch gradients on nonconvex problems.

pub mod dense;

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::numerics::{dot, sub, ParameterVector};

/// Pairs with `rho` beyond this are discarded as numerically degenerate.
pub const RHO_GUARD: f64 = 1e14;

/// Steps with `||s|| <= TINY_STEP * (1 + ||x||)` skip the memory update.
pub const TINY_STEP: f64 = 1e-14;

/// One stored curvature pair plus its damping metadata.
#[derive(Debug, Clone)]
pub struct CurvaturePair {
    s: ParameterVector,
    y_bar: ParameterVector,
    rho: f64,
    theta: f64,
    damped: bool,
    gamma_at_creation: f64,
}

impl CurvaturePair {
    pub fn s(&self) -> &ParameterVector {
        &self.s
    }

    pub fn y_bar(&self) -> &ParameterVector {
        &self.y_bar
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn damped(&self) -> bool {
        self.damped
    }

    pub fn gamma_at_creation(&self) -> f64 {
        self.gamma_at_creation
    }
}

/// Scaling seed `gamma = max(y'y / s'y, delta)`, falling back to `delta`
/// whenever `s'y <= 0` (the ratio is negative or undefined there).
pub fn compute_gamma(s: &ParameterVector, y: &ParameterVector, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Argument(format!("delta must be positive, got {delta}")));
    }
    let sy = dot(s, y)?;
    let yy = dot(y, y)?;
    let gamma = if sy > 0.0 { (yy / sy).max(delta) } else { delta };
    if !gamma.is_finite() {
        return Err(Error::NonFinite {
            context: "compute_gamma",
        });
    }
    Ok(gamma)
}

/// Damps a raw gradient difference into a curvature pair.
///
/// With B_0 = gamma*I: theta = 0.75*gamma*||s||^2 / (gamma*||s||^2 - s'y)
/// when s'y < 0.25*gamma*||s||^2, else 1 (the boundary itself is undamped).
/// On the damped branch s'y_bar equals 0.25*gamma*||s||^2 exactly, so rho
/// is formed from that closed form rather than a recomputed inner product.
pub fn damp(s: ParameterVector, y: &ParameterVector, gamma: f64) -> Result<CurvaturePair> {
    let mut mults = 0u64;
    damp_counted(s, y, gamma, None, None, &mut mults)
}

/// As [`damp`], reusing precomputed `s'y` / `s's` and counting the length-n
/// multiplications it performs.
fn damp_counted(
    s: ParameterVector,
    y: &ParameterVector,
    gamma: f64,
    precomputed_sy: Option<f64>,
    precomputed_ss: Option<f64>,
    mults: &mut u64,
) -> Result<CurvaturePair> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Argument(format!("gamma must be positive, got {gamma}")));
    }
    let n = s.len() as u64;
    let sy = match precomputed_sy {
        Some(v) => v,
        None => {
            *mults += n;
            dot(&s, y)?
        }
    };
    let ss = match precomputed_ss {
        Some(v) => v,
        None => {
            *mults += n;
            dot(&s, &s)?
        }
    };
    if ss == 0.0 {
        return Err(Error::DegenerateStep);
    }
    let floor = 0.25 * gamma * ss;
    let (y_bar, rho_inv, theta, damped) = if sy < floor {
        let theta = 0.75 * gamma * ss / (gamma * ss - sy);
        // y_bar = theta * y + (1 - theta) * gamma * s
        let mut y_bar = ParameterVector::zeros(s.len());
        y_bar.add_scaled(theta, y)?;
        y_bar.add_scaled((1.0 - theta) * gamma, &s)?;
        *mults += 2 * n;
        (y_bar, floor, theta, true)
    } else {
        (y.clone(), sy, 1.0, false)
    };
    if !(rho_inv > 0.0) {
        return Err(Error::NonFinite { context: "damp rho" });
    }
    Ok(CurvaturePair {
        s,
        y_bar,
        rho: 1.0 / rho_inv,
        theta,
        damped,
        gamma_at_creation: gamma,
    })
}

/// What a memory update did with the proposed pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    /// Pair damped (maybe trivially) and pushed; `negative_curvature`
    /// records whether the raw s'y was negative.
    Stored { damped: bool, negative_curvature: bool },
    /// `||s||` numerically zero: memory and gamma untouched.
    SkippedDegenerateStep,
    /// rho guard tripped: gamma refreshed, pair dropped.
    RejectedIllConditioned { negative_curvature: bool },
}

/// Bounded FIFO of curvature pairs with the scaling state gamma.
#[derive(Debug, Clone)]
pub struct LbfgsMemory {
    pairs: VecDeque<CurvaturePair>,
    capacity: usize,
    delta: f64,
    current_gamma: f64,
}

impl LbfgsMemory {
    /// Creates an empty memory with capacity `p` and scaling floor `delta`.
    ///
    /// The initial gamma seeds H_1 before any curvature information exists;
    /// it must be at least `delta`.
    pub fn new(capacity: usize, delta: f64, initial_gamma: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Argument(format!("delta must be positive, got {delta}")));
        }
        if !(initial_gamma >= delta && initial_gamma.is_finite()) {
            return Err(Error::Argument(format!(
                "initial gamma {initial_gamma} must be at least delta {delta}"
            )));
        }
        Ok(LbfgsMemory {
            pairs: VecDeque::with_capacity(capacity + 1),
            capacity,
            delta,
            current_gamma: initial_gamma,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Freshly computed scaling for the current iteration.
    pub fn current_gamma(&self) -> f64 {
        self.current_gamma
    }

    /// Stored pairs, oldest first.
    pub fn pairs(&self) -> impl Iterator<Item = &CurvaturePair> {
        self.pairs.iter()
    }

    /// Appends a pair, evicting the oldest when over capacity. A capacity
    /// of zero keeps the memory empty (the operator is then gamma^{-1} I).
    pub fn push_pair(&mut self, pair: CurvaturePair) {
        if self.capacity == 0 {
            return;
        }
        self.pairs.push_back(pair);
        while self.pairs.len() > self.capacity {
            self.pairs.pop_front();
        }
    }

    /// Forms and stores the pair for one solver step.
    ///
    /// `g_prev` is the mini-batch gradient at `x_prev`; `regrad_at_curr` is
    /// the same batch re-evaluated at `x_curr`, so y is a same-sample
    /// gradient difference. Refreshes gamma from the raw (s, y) before
    /// damping.
    pub fn update(
        &mut self,
        x_prev: &ParameterVector,
        x_curr: &ParameterVector,
        g_prev: &ParameterVector,
        regrad_at_curr: &ParameterVector,
    ) -> Result<UpdateOutcome> {
        let mut mults = 0u64;
        self.update_counted(x_prev, x_curr, g_prev, regrad_at_curr, &mut mults)
    }

    /// As [`Self::update`], accumulating the number of length-n
    /// multiplications (inner products and scalar-vector products count n
    /// each).
    pub fn update_counted(
        &mut self,
        x_prev: &ParameterVector,
        x_curr: &ParameterVector,
        g_prev: &ParameterVector,
        regrad_at_curr: &ParameterVector,
        mults: &mut u64,
    ) -> Result<UpdateOutcome> {
        let s = sub(x_curr, x_prev)?;
        let n = s.len() as u64;
        let ss = dot(&s, &s)?;
        *mults += n;
        let tiny = TINY_STEP * (1.0 + x_curr.norm());
        if ss.sqrt() <= tiny {
            return Ok(UpdateOutcome::SkippedDegenerateStep);
        }
        let y = sub(regrad_at_curr, g_prev)?;
        let sy = dot(&s, &y)?;
        let yy = dot(&y, &y)?;
        *mults += 2 * n;
        let negative_curvature = sy < 0.0;
        let gamma = if sy > 0.0 {
            (yy / sy).max(self.delta)
        } else {
            self.delta
        };
        if !gamma.is_finite() {
            return Err(Error::NonFinite {
                context: "update gamma",
            });
        }
        self.current_gamma = gamma;
        let pair = damp_counted(s, &y, gamma, Some(sy), Some(ss), mults)?;
        if pair.rho > RHO_GUARD {
            return Ok(UpdateOutcome::RejectedIllConditioned { negative_curvature });
        }
        let damped = pair.damped;
        self.push_pair(pair);
        Ok(UpdateOutcome::Stored {
            damped,
            negative_curvature,
        })
    }

    /// One-line structured dump of the memory state for debug traces:
    /// gamma, pair count, and per-pair (theta, rho, damped) oldest first.
    pub fn debug_dump(&self) -> String {
        let mut out = format!(
            "gamma={} pairs={}/{}",
            self.current_gamma,
            self.pairs.len(),
            self.capacity
        );
        for (i, pair) in self.pairs.iter().enumerate() {
            out.push_str(&format!(
                " [{i}] theta={:.6} rho={:.6e} damped={}",
                pair.theta,
                pair.rho,
                u8::from(pair.damped)
            ));
        }
        out
    }

    /// Two-loop recursion computing `H * g` for the operator seeded at
    /// `H_0 = gamma^{-1} I` over the stored pairs.
    pub fn two_loop_direction(&self, gamma: f64, g: &ParameterVector) -> Result<ParameterVector> {
        let mut mults = 0u64;
        self.two_loop_direction_counted(gamma, g, &mut mults)
    }

    /// As [`Self::two_loop_direction`], counting length-n multiplications. For q
    /// stored pairs the count is (4q + 1) * n; together with the 5n spent by
    /// a damped [`Self::update_counted`] one full step costs (4q + 6) * n.
    pub fn two_loop_direction_counted(
        &self,
        gamma: f64,
        g: &ParameterVector,
        mults: &mut u64,
    ) -> Result<ParameterVector> {
        if !(gamma >= self.delta && gamma.is_finite()) {
            return Err(Error::Argument(format!(
                "gamma {gamma} below scaling floor {}",
                self.delta
            )));
        }
        let n = g.len() as u64;
        let q = self.pairs.len();
        let mut u = g.clone();
        let mut mu = vec![0.0; q];
        // Newest pair first.
        for (i, pair) in self.pairs.iter().rev().enumerate() {
            if pair.s.len() != g.len() {
                return Err(Error::Dimension {
                    expected: g.len(),
                    actual: pair.s.len(),
                });
            }
            let m = pair.rho * dot(&u, &pair.s)?;
            u.add_scaled(-m, &pair.y_bar)?;
            mu[i] = m;
            *mults += 2 * n;
        }
        let mut v = u;
        v.scale(1.0 / gamma)?;
        *mults += n;
        // Oldest pair first, pairing each with its first-loop mu.
        for (i, pair) in self.pairs.iter().enumerate() {
            let nu = pair.rho * dot(&v, &pair.y_bar)?;
            v.add_scaled(mu[q - 1 - i] - nu, &pair.s)?;
            *mults += 2 * n;
        }
        Ok(v)
    }
}
