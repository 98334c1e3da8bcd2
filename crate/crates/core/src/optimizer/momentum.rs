//! Momentum parameters of the conjugate direction update.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentumKind {
    /// `β = 0`: the Riemannian gradient method.
    Zero,
    /// Dai–Yuan
    Dy,
    /// Fletcher–Reeves
    Fr,
    /// Polak–Ribière
    Pr,
    /// Hestenes–Stiefel
    Hs,
}

impl MomentumKind {
    pub const ALL: [MomentumKind; 5] = [
        MomentumKind::Zero,
        MomentumKind::Dy,
        MomentumKind::Fr,
        MomentumKind::Pr,
        MomentumKind::Hs,
    ];
}

impl fmt::Display for MomentumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentumKind::Zero => "ZERO",
            MomentumKind::Dy => "DY",
            MomentumKind::Fr => "FR",
            MomentumKind::Pr => "PR",
            MomentumKind::Hs => "HS",
        })
    }
}

impl FromStr for MomentumKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ZERO" | "0" | "NONE" => Ok(MomentumKind::Zero),
            "DY" => Ok(MomentumKind::Dy),
            "FR" => Ok(MomentumKind::Fr),
            "PR" => Ok(MomentumKind::Pr),
            "HS" => Ok(MomentumKind::Hs),
            _ => Err(format!("unknown momentum '{s}' (expected ZERO, DY, FR, PR or HS)")),
        }
    }
}

/// Scalars entering the momentum formulas at iteration `n`, with `g` the
/// current and `g_prev` the previous Riemannian gradient and `X` the current metric.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentumInputs {
    /// `‖g‖²_X`
    pub grad_norm_sq: f64,
    /// `X(g, d_prev)`
    pub grad_dot_prev_dir: f64,
    /// `⟨E′(u_prev), d_prev⟩`, i.e. `a_{u_prev}(u_prev, d_prev)`
    pub prev_descent: f64,
    /// `‖g_prev‖²` in the previous metric
    pub prev_grad_norm_sq: f64,
    /// `X(g, g_prev)`
    pub grad_dot_prev_grad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta {
    pub value: f64,
    /// The formula's denominator vanished and `β = 0` was substituted.
    pub degenerate: bool,
}

impl MomentumInputs {
    /// Common denominator of DY and HS.
    pub fn dy_denominator(&self) -> f64 {
        self.grad_dot_prev_dir - self.prev_descent
    }

    /// Common numerator of PR and HS: `X(g, g − g_prev)`.
    pub fn pr_numerator(&self) -> f64 {
        self.grad_norm_sq - self.grad_dot_prev_grad
    }
}

fn ratio(num: f64, den: f64, clamp: bool) -> Beta {
    if den == 0.0 || !den.is_finite() || !num.is_finite() {
        return Beta {
            value: 0.0,
            degenerate: true,
        };
    }
    let v = num / den;
    Beta {
        value: if clamp { v.max(0.0) } else { v },
        degenerate: false,
    }
}

/// `βⁿ` for the chosen rule; DY, PR and HS are clamped at zero, FR is not.
pub fn momentum_beta(kind: MomentumKind, s: &MomentumInputs) -> Beta {
    match kind {
        MomentumKind::Zero => Beta {
            value: 0.0,
            degenerate: false,
        },
        MomentumKind::Dy => ratio(s.grad_norm_sq, s.dy_denominator(), true),
        MomentumKind::Fr => ratio(s.grad_norm_sq, s.prev_grad_norm_sq, false),
        MomentumKind::Pr => ratio(s.pr_numerator(), s.prev_grad_norm_sq, true),
        MomentumKind::Hs => ratio(s.pr_numerator(), s.dy_denominator(), true),
    }
}
