use serde::{Deserialize, Serialize};

/// Piecewise-linear map from wind speed (m/s) to per-step failure
/// probability. Below the first breakpoint and above the last one the curve
/// is held flat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragilityCurve {
    pub id: String,
    pub breakpoints: Vec<(f64, f64)>,
}

impl FragilityCurve {
    pub fn new(id: impl Into<String>, breakpoints: Vec<(f64, f64)>) -> Self {
        Self {
            id: id.into(),
            breakpoints,
        }
    }

    pub fn constant(id: impl Into<String>, p: f64) -> Self {
        Self::new(id, vec![(0.0, p)])
    }

    pub fn probability(&self, wind: f64) -> f64 {
        let pts = &self.breakpoints;
        let Some(&(w0, p0)) = pts.first() else {
            return 0.0;
        };
        if wind <= w0 {
            return p0;
        }
        for pair in pts.windows(2) {
            let ((wa, pa), (wb, pb)) = (pair[0], pair[1]);
            if wind <= wb {
                return pa + (pb - pa) * (wind - wa) / (wb - wa);
            }
        }
        pts[pts.len() - 1].1
    }

    /// Invariant violations, empty when the curve is well formed.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.breakpoints.is_empty() {
            out.push("no breakpoints".to_string());
        }
        for (w, p) in &self.breakpoints {
            if !w.is_finite() || *w < 0.0 {
                out.push(format!("wind speed {w} is not a finite non-negative number"));
            }
            if !(0.0..=1.0).contains(p) {
                out.push(format!("probability {p} outside [0, 1]"));
            }
        }
        for pair in self.breakpoints.windows(2) {
            if pair[1].0 <= pair[0].0 {
                out.push(format!(
                    "wind speeds not strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                ));
            }
            if pair[1].1 < pair[0].1 {
                out.push(format!(
                    "probability decreases from {} to {}",
                    pair[0].1, pair[1].1
                ));
            }
        }
        out
    }

    /// `true` when this curve is pointwise no higher than `other`.
    ///
    /// Both curves are piecewise linear, so comparing at the union of their
    /// breakpoints decides the question everywhere.
    pub fn dominated_by(&self, other: &FragilityCurve) -> bool {
        self.breakpoints
            .iter()
            .chain(&other.breakpoints)
            .all(|&(w, _)| self.probability(w) <= other.probability(w) + 1e-15)
    }
}
