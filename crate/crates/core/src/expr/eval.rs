use thiserror::Error;

use super::{BinaryOp, Expr, Func, UnaryOp, Var};

/// Evaluation fault. `expr` is the canonical rendering of the offending
/// subexpression.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("domain fault in `{expr}`: {reason}")]
pub struct EvalError {
    pub expr: String,
    pub reason: String,
}

impl Expr {
    /// Evaluates the expression at `(t, theta, thetadot)`.
    ///
    /// Domain faults (division by zero, `log` or `sqrt` outside their real
    /// domain, negative base with non-integer exponent) and non-finite
    /// results are reported instead of returning NaN or infinity.
    pub fn eval(&self, t: f64, theta: f64, thetadot: f64) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Constant(c) => *c,
            Expr::Variable(Var::T) => t,
            Expr::Variable(Var::Theta) => theta,
            Expr::Variable(Var::ThetaDot) => thetadot,
            Expr::Unary(UnaryOp::Neg, e) => -e.eval(t, theta, thetadot)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval(t, theta, thetadot)?;
                let b = r.eval(t, theta, thetadot)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(self.fault("division by zero"));
                        }
                        a / b
                    }
                    BinaryOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(self.fault("negative base with non-integer exponent"));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(self.fault("zero raised to a negative power"));
                        }
                        a.powf(b)
                    }
                }
            }
            Expr::Call(func, e) => {
                let x = e.eval(t, theta, thetadot)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(self.fault("log of a nonpositive value"));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(self.fault("sqrt of a negative value"));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                }
            }
        };
        if !value.is_finite() {
            return Err(self.fault("non-finite result"));
        }
        Ok(value)
    }

    fn fault(&self, reason: &str) -> EvalError {
        EvalError {
            expr: self.canonical(),
            reason: reason.to_string(),
        }
    }
}
