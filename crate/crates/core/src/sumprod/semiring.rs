use std::ops::{Add, Mul};

/// A commutative semiring together with the per-feature lift `q_f`.
///
/// `compact` is applied to every aggregated message; exact semirings leave
/// it as the identity, approximate ones use it to bound element size.
pub trait Semiring: Sync {
    type Elem: Clone + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn lift(&self, feature: usize, value: f64) -> Self::Elem;

    fn compact(&self, e: Self::Elem) -> Self::Elem {
        e
    }

    fn add_assign(&self, acc: &mut Self::Elem, e: &Self::Elem) {
        *acc = self.add(acc, e);
    }
}

/// Counts join rows.
#[derive(Debug, Clone, Copy, Default)]
pub struct Counting;

impl Semiring for Counting {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        a + b
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b
    }
    fn lift(&self, _: usize, _: f64) -> u64 {
        1
    }
    fn add_assign(&self, acc: &mut u64, e: &u64) {
        *acc += e;
    }
}

/// `(aggregate cost, count)` pair. Multiplication is
/// `(a, b)(c, d) = (ad + cb, bd)`, so a product of `(cost_f, 1)` factors sums
/// the costs and summing products over join rows yields
/// `(Σ_x Σ_f cost_f(x_f), |J|)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostPair {
    pub cost: f64,
    pub count: f64,
}

impl CostPair {
    pub const ZERO: CostPair = CostPair { cost: 0.0, count: 0.0 };
    pub const ONE: CostPair = CostPair { cost: 0.0, count: 1.0 };

    pub fn new(cost: f64, count: f64) -> Self {
        Self { cost, count }
    }
}

impl Add for CostPair {
    type Output = CostPair;
    fn add(self, o: CostPair) -> CostPair {
        CostPair::new(self.cost + o.cost, self.count + o.count)
    }
}

impl Mul for CostPair {
    type Output = CostPair;
    fn mul(self, o: CostPair) -> CostPair {
        CostPair::new(self.cost * o.count + o.cost * self.count, self.count * o.count)
    }
}

/// Squared Euclidean distance to a fixed target point, aggregated over the join.
#[derive(Debug, Clone)]
pub struct SquaredDistance {
    pub target: Vec<f64>,
}

impl SquaredDistance {
    pub fn new(target: Vec<f64>) -> Self {
        Self { target }
    }
}

impl Semiring for SquaredDistance {
    type Elem = CostPair;

    fn zero(&self) -> CostPair {
        CostPair::ZERO
    }
    fn one(&self) -> CostPair {
        CostPair::ONE
    }
    fn add(&self, a: &CostPair, b: &CostPair) -> CostPair {
        *a + *b
    }
    fn mul(&self, a: &CostPair, b: &CostPair) -> CostPair {
        *a * *b
    }
    fn lift(&self, feature: usize, value: f64) -> CostPair {
        let d = value - self.target[feature];
        CostPair::new(d * d, 1.0)
    }
}
