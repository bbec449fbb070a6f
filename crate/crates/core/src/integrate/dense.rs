use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MobilityState;

/// Continuous interpolant over one accepted step.
///
/// Stored in the nested form
/// `y(θ) = y0 + θ (Δ + (1-θ) (b + θ (c + (1-θ) d)))` with `θ = (t - t_left) / h`.
/// With `d = 0` this is the cubic Hermite interpolant through both endpoints
/// and their slopes; the Dormand–Prince continuous extension fills in `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseSegment {
    pub t_left: f64,
    pub t_right: f64,
    y_left: [f64; 2],
    y_right: [f64; 2],
    coeffs: [[f64; 2]; 3],
}

impl DenseSegment {
    pub(crate) fn from_parts(
        t_left: f64,
        t_right: f64,
        y_left: [f64; 2],
        y_right: [f64; 2],
        coeffs: [[f64; 2]; 3],
    ) -> Self {
        Self {
            t_left,
            t_right,
            y_left,
            y_right,
            coeffs,
        }
    }

    /// Cubic Hermite segment from endpoint values and derivatives.
    pub fn hermite(
        t_left: f64,
        t_right: f64,
        y_left: MobilityState,
        y_right: MobilityState,
        f_left: [f64; 2],
        f_right: [f64; 2],
    ) -> Self {
        let h = t_right - t_left;
        let (y0, y1) = (y_left.to_array(), y_right.to_array());
        let mut coeffs = [[0.0; 2]; 3];
        for i in 0..2 {
            let delta = y1[i] - y0[i];
            let b = h * f_left[i] - delta;
            coeffs[0][i] = b;
            coeffs[1][i] = delta - h * f_right[i] - b;
        }
        Self::from_parts(t_left, t_right, y0, y1, coeffs)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_left && t <= self.t_right
    }

    /// Evaluates the interpolant; callers guarantee `t` lies in the segment.
    pub fn eval(&self, t: f64) -> MobilityState {
        if t == self.t_left {
            return MobilityState::from_array(self.y_left);
        }
        if t == self.t_right {
            return MobilityState::from_array(self.y_right);
        }
        let s = (t - self.t_left) / (self.t_right - self.t_left);
        let s1 = 1.0 - s;
        let [b, c, d] = self.coeffs;
        let mut out = [0.0; 2];
        for i in 0..2 {
            let delta = self.y_right[i] - self.y_left[i];
            out[i] = self.y_left[i] + s * (delta + s1 * (b[i] + s * (c[i] + s1 * d[i])));
        }
        MobilityState::from_array(out)
    }
}

/// Piecewise interpolant covering an integrated span.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DenseOutput {
    pub segments: Vec<DenseSegment>,
}

impl DenseOutput {
    pub fn t_start(&self) -> Option<f64> {
        self.segments.first().map(|s| s.t_left)
    }

    pub fn t_end(&self) -> Option<f64> {
        self.segments.last().map(|s| s.t_right)
    }

    pub fn evaluate(&self, t: f64) -> Result<MobilityState> {
        let (Some(t0), Some(t1)) = (self.t_start(), self.t_end()) else {
            return Err(Error::Contract("dense output has no segments".into()));
        };
        if !(t >= t0 && t <= t1) {
            return Err(Error::OutOfRange { t, t0, t1 });
        }
        let idx = self
            .segments
            .partition_point(|s| s.t_right < t)
            .min(self.segments.len() - 1);
        Ok(self.segments[idx].eval(t))
    }
}

/// Evaluates a dense-output handle at `t`.
pub fn evaluate_dense(dense: &DenseOutput, t: f64) -> Result<MobilityState> {
    dense.evaluate(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        // y = t^3 - 2 t, y' = 3 t^2 - 2 on [1, 3]
        let y = |t: f64| t * t * t - 2.0 * t;
        let dy = |t: f64| 3.0 * t * t - 2.0;
        let seg = DenseSegment::hermite(
            1.0,
            3.0,
            MobilityState::new(y(1.0), 0.0),
            MobilityState::new(y(3.0), 1.0),
            [dy(1.0), 0.5],
            [dy(3.0), 0.5],
        );
        for t in [1.0, 1.3, 2.0, 2.71, 3.0] {
            let v = seg.eval(t);
            assert!((v.congestion - y(t)).abs() < 1e-12, "t={t}");
            assert!((v.adoption - 0.5 * (t - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluate_out_of_range() {
        let seg = DenseSegment::hermite(
            0.0,
            1.0,
            MobilityState::new(1.0, 1.0),
            MobilityState::new(2.0, 2.0),
            [1.0, 1.0],
            [1.0, 1.0],
        );
        let dense = DenseOutput {
            segments: vec![seg],
        };
        assert!(matches!(dense.evaluate(1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(dense.evaluate(-0.1), Err(Error::OutOfRange { .. })));
        assert_eq!(dense.evaluate(1.0).unwrap(), MobilityState::new(2.0, 2.0));
        assert!(DenseOutput::default().evaluate(0.0).is_err());
    }
}
