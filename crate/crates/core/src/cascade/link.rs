//! Inverse link functions and their log-derivatives.
//!
//! | model    | f(z)                 | (log f)'         | (log(1-f))'    |
//! |----------|----------------------|------------------|----------------|
//! | IC       | 1 - e^{-z}           | 1 / (e^z - 1)    | -1             |
//! | voter    | z                    | 1 / z            | -1 / (1 - z)   |
//! | CICE     | 1 - e^{-εz}          | ε / (e^{εz} - 1) | -ε             |
//! | logistic | 1 / (1 + e^{-z + t}) | 1 - f            | -f             |

use super::{CascadeError, CascadeModel, ModelKind};

const DOMAIN_SLACK: f64 = 1e-9;

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

// log(1 + e^u) without overflow.
fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

impl CascadeModel {
    /// `f(z)` without domain checks. Voter values are clipped to `[0, 1]`.
    pub fn prob(&self, z: f64) -> f64 {
        match self.kind {
            ModelKind::Ic => -(-z).exp_m1(),
            ModelKind::Cice => -(-self.epsilon * z).exp_m1(),
            ModelKind::Voter => z.clamp(0.0, 1.0),
            ModelKind::Logistic => sigmoid(z - self.threshold),
        }
    }

    /// Inverse link value `f(z)`, checking the model's domain.
    pub fn link_value(&self, z: f64) -> Result<f64, CascadeError> {
        if z.is_nan() {
            return Err(CascadeError::Domain("z is NaN".into()));
        }
        match self.kind {
            ModelKind::Ic | ModelKind::Cice | ModelKind::Voter if z < -DOMAIN_SLACK => Err(
                CascadeError::Domain(format!("{} link needs z >= 0, got {z}", self.kind)),
            ),
            ModelKind::Voter if z > 1.0 + DOMAIN_SLACK => Err(CascadeError::Domain(format!(
                "voter link needs z <= 1, got {z}; incoming weights are not normalized"
            ))),
            ModelKind::Logistic => Ok(self.prob(z)),
            _ => Ok(self.prob(z.max(0.0))),
        }
    }

    /// Derivative `f'(z)`.
    pub fn link_derivative(&self, z: f64) -> f64 {
        match self.kind {
            ModelKind::Ic => (-z).exp(),
            ModelKind::Cice => self.epsilon * (-self.epsilon * z).exp(),
            ModelKind::Voter => 1.0,
            ModelKind::Logistic => {
                let f = sigmoid(z - self.threshold);
                f * (1.0 - f)
            }
        }
    }

    /// `(log f(z), log(1 - f(z)))`, computed stably. Values may be `-inf`
    /// at the boundary of the model's domain.
    pub fn log_link(&self, z: f64) -> (f64, f64) {
        match self.kind {
            ModelKind::Ic => ((-(-z).exp_m1()).ln(), -z),
            ModelKind::Cice => {
                let ez = self.epsilon * z;
                ((-(-ez).exp_m1()).ln(), -ez)
            }
            ModelKind::Voter => (z.ln(), (-z).ln_1p()),
            ModelKind::Logistic => {
                let u = z - self.threshold;
                (-softplus(-u), -softplus(u))
            }
        }
    }

    fn at_boundary(&self, z: f64) -> bool {
        match self.kind {
            ModelKind::Ic | ModelKind::Cice => z <= 0.0,
            ModelKind::Voter => z <= 0.0 || z >= 1.0,
            ModelKind::Logistic => false,
        }
    }

    /// Exact `((log f)'(z), (log(1 - f))'(z))`.
    ///
    /// Fails with [`CascadeError::Boundary`] where `f(z)` is 0 or 1.
    pub fn link_log_derivatives(&self, z: f64) -> Result<(f64, f64), CascadeError> {
        if self.at_boundary(z) || z.is_nan() {
            return Err(CascadeError::Boundary { z });
        }
        Ok(self.log_first_unchecked(z))
    }

    pub(crate) fn log_first_unchecked(&self, z: f64) -> (f64, f64) {
        match self.kind {
            ModelKind::Ic => (1.0 / z.exp_m1(), -1.0),
            ModelKind::Cice => (self.epsilon / (self.epsilon * z).exp_m1(), -self.epsilon),
            ModelKind::Voter => (1.0 / z, -1.0 / (1.0 - z)),
            ModelKind::Logistic => {
                let f = sigmoid(z - self.threshold);
                (1.0 - f, -f)
            }
        }
    }

    /// Exact `((log f)''(z), (log(1 - f))''(z))`.
    pub fn link_log_second_derivatives(&self, z: f64) -> Result<(f64, f64), CascadeError> {
        if self.at_boundary(z) || z.is_nan() {
            return Err(CascadeError::Boundary { z });
        }
        Ok(self.log_second_unchecked(z))
    }

    pub(crate) fn log_second_unchecked(&self, z: f64) -> (f64, f64) {
        match self.kind {
            ModelKind::Ic => {
                // -e^z / (e^z - 1)^2 = -1 / (4 sinh^2(z / 2))
                let s = (0.5 * z).sinh();
                (-1.0 / (4.0 * s * s), 0.0)
            }
            ModelKind::Cice => {
                let s = (0.5 * self.epsilon * z).sinh();
                (-self.epsilon * self.epsilon / (4.0 * s * s), 0.0)
            }
            ModelKind::Voter => (-1.0 / (z * z), -1.0 / ((1.0 - z) * (1.0 - z))),
            ModelKind::Logistic => {
                let f = sigmoid(z - self.threshold);
                let v = -f * (1.0 - f);
                (v, v)
            }
        }
    }

    /// The `z` at which `f(z) = prob`, for `prob` in (0, 1).
    pub fn inverse_link(&self, prob: f64) -> f64 {
        match self.kind {
            ModelKind::Ic => -(-prob).ln_1p(),
            ModelKind::Cice => -(-prob).ln_1p() / self.epsilon,
            ModelKind::Voter => prob,
            ModelKind::Logistic => self.threshold + (prob / (1.0 - prob)).ln(),
        }
    }
}
