//! Small 2D geometric primitives and the quadrature rules used for cell and
//! face means of analytic data.

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// Axis-aligned rectangle, used as the computational domain of the generated
/// mesh families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        assert!(max.x > min.x && max.y > min.y, "empty rectangle");
        Self { min, max }
    }

    /// The unit square `[0,1]^2`.
    pub fn unit() -> Self {
        Self::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0))
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Degree-4 symmetric triangle rule (6 points, barycentric), weights summing
/// to one. Applied on the fan triangulation of a cell it integrates
/// polynomials of total degree <= 4 exactly.
pub const TRIANGLE_RULE: [(f64, f64, f64); 6] = {
    const A1: f64 = 0.108_103_018_168_070;
    const B1: f64 = 0.445_948_490_915_965;
    const W1: f64 = 0.223_381_589_678_011;
    const A2: f64 = 0.816_847_572_980_459;
    const B2: f64 = 0.091_576_213_509_771;
    const W2: f64 = 0.109_951_743_655_322;
    [
        (A1, B1, W1),
        (B1, A1, W1),
        (B1, B1, W1),
        (A2, B2, W2),
        (B2, A2, W2),
        (B2, B2, W2),
    ]
};

/// 5-point Gauss-Legendre rule on `[-1,1]`, exact for polynomials of degree
/// <= 9. Face means of traces up to degree 9 (e.g. curls of bubble
/// streamfunctions) are therefore exact.
pub const SEGMENT_RULE: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (-0.906_179_845_938_664_0, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664_0, 0.236_926_885_056_189_08),
];

/// Integrates `f` over the triangle `(a, b, c)` with the degree-4 rule.
pub fn integrate_triangle(a: Vec2, b: Vec2, c: Vec2, mut f: impl FnMut(Vec2) -> f64) -> f64 {
    let area = 0.5 * ((b - a).perp(&(c - a))).abs();
    let mut acc = 0.0;
    for &(l1, l2, w) in &TRIANGLE_RULE {
        let l3 = 1.0 - l1 - l2;
        let p = a * l1 + b * l2 + c * l3;
        acc += w * f(p);
    }
    acc * area
}

/// Integrates `f` over the segment `[a, b]` with the 5-point Gauss rule.
pub fn integrate_segment(a: Vec2, b: Vec2, mut f: impl FnMut(Vec2) -> f64) -> f64 {
    let half = (b - a) * 0.5;
    let mid = (a + b) * 0.5;
    let len = (b - a).norm();
    let mut acc = 0.0;
    for &(x, w) in &SEGMENT_RULE {
        acc += w * f(mid + half * x);
    }
    acc * 0.5 * len
}
