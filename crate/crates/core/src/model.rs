//! Model parameters, the optimal-velocity family and the Bando-FtL acceleration.
//!
//! The acceleration of a follower with headway `h`, velocity `v` and
//! predecessor velocity `v_lead` is
//!
//! ```text
//! acc(h, v, v_lead) = alpha * (V(h) - v) + beta * (v_lead - v) / h^2
//! ```
//!
//! where `V` is a strictly increasing, bounded, C¹ optimal-velocity function.
//! The tanh family takes `c * h`, `length` and `d_s` as dimensionless
//! arguments, with `length` numerically equal to the vehicle length in meters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bracket width at which inverse bisection stops.
const INVERSE_BRACKET: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Relaxation rate of the optimal-velocity term (1/s).
    pub alpha: f64,
    /// Follow-the-leader gain (m²/s).
    pub beta: f64,
    /// Vehicle length (m).
    pub length: f64,
    /// Supremum of the optimal-velocity function (m/s).
    pub v_max: f64,
    /// Lower edge of the leader velocity band (m/s).
    pub v_min: f64,
    pub shape: OptimalVelocityShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimalVelocityShape {
    /// `V(h) = v_max (tanh(c h - d_s) + tanh(l + d_s)) / (1 + tanh(l + d_s))`.
    Tanh { c: f64, d_s: f64 },
    /// Monotone cubic interpolation through `(h, V(h))` samples, constant past the last knot.
    Tabulated(MonotoneTable),
}

impl ModelParams {
    /// The parameter set shared by the reference figures:
    /// alpha = 0.5, beta = 20, l = 4.5, v_max = 30, v_min = 3, tanh shape with c = 1, d_s = 2.5.
    pub fn reference() -> Self {
        ModelParams {
            alpha: 0.5,
            beta: 20.0,
            length: 4.5,
            v_max: 30.0,
            v_min: 3.0,
            shape: OptimalVelocityShape::Tanh { c: 1.0, d_s: 2.5 },
        }
    }

    pub fn tanh(alpha: f64, beta: f64, length: f64, v_max: f64, v_min: f64, c: f64, d_s: f64) -> Self {
        ModelParams {
            alpha,
            beta,
            length,
            v_max,
            v_min,
            shape: OptimalVelocityShape::Tanh { c, d_s },
        }
    }

    pub fn with_alpha_beta(&self, alpha: f64, beta: f64) -> Self {
        ModelParams {
            alpha,
            beta,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("length", self.length),
            ("v_max", self.v_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        match &self.shape {
            OptimalVelocityShape::Tanh { c, d_s } => {
                if !(c.is_finite() && *c > 0.0 && d_s.is_finite() && *d_s > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "tanh shape needs c > 0 and d_s > 0, got c = {c}, d_s = {d_s}"
                    )));
                }
            }
            OptimalVelocityShape::Tabulated(table) => {
                let top = table.sup();
                if (top - self.v_max).abs() > 1e-12 * self.v_max.max(1.0) {
                    return Err(Error::InvalidParams(format!(
                        "v_max = {} must equal the last tabulated velocity {top}",
                        self.v_max
                    )));
                }
            }
        }
        if !self.v_min.is_finite() || self.v_min > self.v_max {
            return Err(Error::InvalidParams(format!(
                "v_min = {} must not exceed v_max = {}",
                self.v_min, self.v_max
            )));
        }
        let floor = self.ov(0.0);
        if self.v_min <= floor {
            return Err(Error::InvalidParams(format!(
                "v_min = {} must exceed V(0) = {floor}",
                self.v_min
            )));
        }
        Ok(())
    }

    /// Optimal velocity `V(h)` for `h >= 0`.
    pub fn v_opt(&self, h: f64) -> Result<f64> {
        check_headway(h)?;
        Ok(self.ov(h))
    }

    /// Derivative `V'(h)` for `h >= 0`.
    pub fn v_opt_prime(&self, h: f64) -> Result<f64> {
        check_headway(h)?;
        Ok(self.ov_prime(h))
    }

    /// Headway at which the optimal velocity equals `v`; defined on the open range `(V(0), v_max)`.
    pub fn v_opt_inverse(&self, v: f64) -> Result<f64> {
        let floor = self.ov(0.0);
        if !(v > floor && v < self.v_max) {
            return Err(Error::domain(
                "v_opt_inverse",
                v,
                format!("open interval ({floor}, {})", self.v_max),
            ));
        }
        match &self.shape {
            OptimalVelocityShape::Tanh { c, d_s } => {
                let t = (self.length + d_s).tanh();
                let y = v * (1.0 + t) / self.v_max - t;
                let mut h = (d_s + y.atanh()) / c;
                // One Newton polish; the closed form loses digits through the subtraction above.
                let slope = self.ov_prime(h);
                if slope > 0.0 {
                    let polished = h - (self.ov(h) - v) / slope;
                    if polished.is_finite() && polished >= 0.0 {
                        h = polished;
                    }
                }
                Ok(h)
            }
            OptimalVelocityShape::Tabulated(table) => {
                let (mut lo, mut hi) = (0.0, table.h_last());
                while hi - lo > INVERSE_BRACKET {
                    let mid = 0.5 * (lo + hi);
                    if table.eval(mid) < v {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    /// Bando-FtL acceleration; `h <= 0` means the vehicles overlap and is rejected.
    pub fn acc(&self, h: f64, v: f64, v_lead: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::domain("acc headway", h, "h > 0"));
        }
        Ok(self.acc_unchecked(h, v, v_lead))
    }

    #[inline]
    pub(crate) fn acc_unchecked(&self, h: f64, v: f64, v_lead: f64) -> f64 {
        self.alpha * (self.ov(h) - v) + self.beta * (v_lead - v) / (h * h)
    }

    /// `V(h)` without the domain check. Negative `h` is clamped to 0.
    #[inline]
    pub fn ov(&self, h: f64) -> f64 {
        let h = h.max(0.0);
        match &self.shape {
            OptimalVelocityShape::Tanh { c, d_s } => {
                let t = (self.length + d_s).tanh();
                self.v_max * ((c * h - d_s).tanh() + t) / (1.0 + t)
            }
            OptimalVelocityShape::Tabulated(table) => table.eval(h),
        }
    }

    /// `V'(h)` without the domain check.
    #[inline]
    pub fn ov_prime(&self, h: f64) -> f64 {
        let h = h.max(0.0);
        match &self.shape {
            OptimalVelocityShape::Tanh { c, d_s } => {
                let t = (self.length + d_s).tanh();
                c * self.v_max * sech_squared(c * h - d_s) / (1.0 + t)
            }
            OptimalVelocityShape::Tabulated(table) => table.slope(h),
        }
    }

    /// Grid maximum of `V'` on `[lo, hi]`, reported as the Lipschitz constant `L`.
    pub fn lipschitz_bound(&self, lo: f64, hi: f64, points: usize) -> f64 {
        let n = points.max(2);
        (0..n)
            .map(|k| self.ov_prime(lo + (hi - lo) * k as f64 / (n - 1) as f64))
            .fold(0.0, f64::max)
    }

    /// Headway range on which `V' > 0` is guaranteed: the table span, or `[0, inf)` for tanh.
    pub fn working_interval(&self) -> (f64, f64) {
        match &self.shape {
            OptimalVelocityShape::Tanh { .. } => (0.0, f64::INFINITY),
            OptimalVelocityShape::Tabulated(table) => (0.0, table.h_last()),
        }
    }
}

fn check_headway(h: f64) -> Result<()> {
    if h >= 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("headway", h, "h >= 0"))
    }
}

/// `sech²(x)` without overflow for large `|x|`.
fn sech_squared(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// Strictly increasing sample table with Fritsch–Butland slopes, which keep the
/// cubic Hermite interpolant monotone and C¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct MonotoneTable {
    h: Vec<f64>,
    v: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    h: Vec<f64>,
    v: Vec<f64>,
}

impl TryFrom<RawTable> for MonotoneTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        MonotoneTable::new(raw.h, raw.v)
    }
}

impl From<MonotoneTable> for RawTable {
    fn from(t: MonotoneTable) -> Self {
        RawTable { h: t.h, v: t.v }
    }
}

impl MonotoneTable {
    pub fn new(h: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if h.len() != v.len() || h.len() < 2 {
            return Err(Error::InvalidParams(
                "tabulated shape needs two or more (h, V) pairs of equal length".into(),
            ));
        }
        if h[0] != 0.0 {
            return Err(Error::InvalidParams("tabulated shape must start at h = 0".into()));
        }
        if v[0] < 0.0 || h.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams(
                "tabulated values must be finite with V(0) >= 0".into(),
            ));
        }
        let increasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&h) || !increasing(&v) {
            return Err(Error::InvalidParams(
                "tabulated h and V must be strictly increasing".into(),
            ));
        }

        let n = h.len();
        let secant: Vec<f64> = (0..n - 1).map(|k| (v[k + 1] - v[k]) / (h[k + 1] - h[k])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secant[0];
        slopes[n - 1] = secant[n - 2];
        for k in 1..n - 1 {
            let (h0, h1) = (h[k] - h[k - 1], h[k + 1] - h[k]);
            let (w0, w1) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            slopes[k] = (w0 + w1) / (w0 / secant[k - 1] + w1 / secant[k]);
        }
        Ok(MonotoneTable { h, v, slopes })
    }

    pub fn h_last(&self) -> f64 {
        *self.h.last().unwrap()
    }

    pub fn sup(&self) -> f64 {
        *self.v.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        match self.h.binary_search_by(|probe| probe.total_cmp(&x)) {
            Ok(k) => k.min(self.h.len() - 2),
            Err(k) => k.saturating_sub(1).min(self.h.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x >= self.h_last() {
            return self.sup();
        }
        let k = self.segment(x);
        let dx = self.h[k + 1] - self.h[k];
        let s = (x - self.h[k]) / dx;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.v[k] + h10 * dx * self.slopes[k] + h01 * self.v[k + 1] + h11 * dx * self.slopes[k + 1]
    }

    pub fn slope(&self, x: f64) -> f64 {
        if x > self.h_last() {
            return 0.0;
        }
        let k = self.segment(x);
        let dx = self.h[k + 1] - self.h[k];
        let s = (x - self.h[k]) / dx;
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        (d00 * self.v[k] + d01 * self.v[k + 1]) / dx + d10 * self.slopes[k] + d11 * self.slopes[k + 1]
    }
}
