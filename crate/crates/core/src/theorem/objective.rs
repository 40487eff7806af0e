/// Twice-differentiable scalar loss `L(w)` with analytic derivatives.
pub trait Objective1D: Send + Sync {
    fn value(&self, w: f64) -> f64;
    fn d1(&self, w: f64) -> f64;
    fn d2(&self, w: f64) -> f64;
    /// Interval searched for minima.
    fn domain(&self) -> (f64, f64) {
        (-10.0, 10.0)
    }
    fn tag(&self) -> String;
    /// Starting points used to locate local minima.
    fn seeds(&self) -> Vec<f64>;
}

/// `scale * (w - center)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub center: f64,
    pub scale: f64,
}

impl Default for Quadratic {
    fn default() -> Self {
        Self {
            center: 1.0,
            scale: 1.0,
        }
    }
}

impl Objective1D for Quadratic {
    fn value(&self, w: f64) -> f64 {
        self.scale * (w - self.center).powi(2)
    }
    fn d1(&self, w: f64) -> f64 {
        2.0 * self.scale * (w - self.center)
    }
    fn d2(&self, _w: f64) -> f64 {
        2.0 * self.scale
    }
    fn tag(&self) -> String {
        format!("quadratic(c={},s={})", self.center, self.scale)
    }
    fn seeds(&self) -> Vec<f64> {
        vec![self.center]
    }
}

/// Double well `(w^2 - 1)^2` with minima at `w = +-1`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleWell;

impl Objective1D for DoubleWell {
    fn value(&self, w: f64) -> f64 {
        (w * w - 1.0).powi(2)
    }
    fn d1(&self, w: f64) -> f64 {
        4.0 * w * (w * w - 1.0)
    }
    fn d2(&self, w: f64) -> f64 {
        12.0 * w * w - 4.0
    }
    fn tag(&self) -> String {
        "double_well".into()
    }
    fn seeds(&self) -> Vec<f64> {
        vec![1.0, -1.0]
    }
}

/// `(w - center)^2 + amp * cos(freq * w)`: a quadratic bowl with ripples
/// that create several local minima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RippledQuadratic {
    pub center: f64,
    pub amp: f64,
    pub freq: f64,
}

impl Default for RippledQuadratic {
    fn default() -> Self {
        Self {
            center: 1.0,
            amp: 0.3,
            freq: 5.0,
        }
    }
}

impl Objective1D for RippledQuadratic {
    fn value(&self, w: f64) -> f64 {
        (w - self.center).powi(2) + self.amp * (self.freq * w).cos()
    }
    fn d1(&self, w: f64) -> f64 {
        2.0 * (w - self.center) - self.amp * self.freq * (self.freq * w).sin()
    }
    fn d2(&self, w: f64) -> f64 {
        2.0 - self.amp * self.freq * self.freq * (self.freq * w).cos()
    }
    fn tag(&self) -> String {
        format!("rippled(c={},a={},k={})", self.center, self.amp, self.freq)
    }
    fn seeds(&self) -> Vec<f64> {
        vec![-0.6, 0.3, 0.9, 1.6, 2.2]
    }
}

/// Convex, double-well and multi-minimum test objectives.
pub fn library() -> Vec<Box<dyn Objective1D>> {
    vec![
        Box::new(Quadratic::default()),
        Box::new(Quadratic {
            center: -2.0,
            scale: 0.5,
        }),
        Box::new(DoubleWell),
        Box::new(RippledQuadratic::default()),
    ]
}
