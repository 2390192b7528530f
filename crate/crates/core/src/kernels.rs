//! Scalar kernel families on intervals of the real line and their
//! multi-task lifts `G(x, y) · A`.
//!
//! The builtin families are
//!
//! * `TFamily`: `min(x, y) - t·x·y` on `(0, 1)`, `t ∈ [-1, 1]`. `t = 1` is the
//!   Brownian bridge, `t = 0` the Brownian motion covariance.
//! * `Wendland`: `max(1 - |x - y|, 0)` on `(0, 1)`.
//! * `Exponential`: `exp(-|x - y|)` on a user-chosen interval.
//! * `Combination`: `C1·K_t + C2·K_w` with `C1, C2 ≥ 0`, `C1 + C2 > 0`.
//!
//! Anything implementing [`ScalarKernel`] can be lifted, which is how
//! non-admissible reference kernels such as [`GaussianKernel`] are plugged
//! into the certification and solver code.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Open interval `(lo, hi)`. Either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };
    pub const REAL_LINE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::Config(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Interval { lo, hi })
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain { value: x, lo: self.lo, hi: self.hi })
        }
    }

    /// `count` equispaced interior points `lo + k·h`, `h = width / (count + 1)`.
    pub fn interior_grid(&self, count: usize) -> Vec<f64> {
        let h = self.width() / (count as f64 + 1.0);
        (1..=count).map(|k| self.lo + k as f64 * h).collect()
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let end = |v: f64| if v.is_finite() { Some(v) } else { None };
        [end(self.lo), end(self.hi)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[Option<f64>; 2]>::deserialize(d)?;
        Interval::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))
            .map_err(serde::de::Error::custom)
    }
}

/// Group exponent `p ∈ [1, ∞]` of the `‖·‖_{p,1}` norm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GroupExponent(f64);

impl GroupExponent {
    pub const ONE: GroupExponent = GroupExponent(1.0);
    pub const TWO: GroupExponent = GroupExponent(2.0);
    pub const INF: GroupExponent = GroupExponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p >= 1.0 {
            Ok(GroupExponent(p))
        } else {
            Err(Error::Config(format!("group exponent must be >= 1, got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> GroupExponent {
        if self.0 == 1.0 {
            GroupExponent::INF
        } else if self.0.is_infinite() {
            GroupExponent::ONE
        } else {
            GroupExponent(self.0 / (self.0 - 1.0))
        }
    }

    /// Exact `ℓ^p` norm of one block.
    pub fn norm(self, v: &[f64]) -> f64 {
        let p = self.0;
        if p == 1.0 {
            v.iter().map(|x| x.abs()).sum()
        } else if p == 2.0 {
            v.iter().map(|x| x * x).sum::<f64>().sqrt()
        } else if p.is_infinite() {
            v.iter().fold(0.0, |m, x| m.max(x.abs()))
        } else {
            // scale by the max entry so large/small blocks do not over/underflow
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            scale * v.iter().map(|x| (x.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }

    /// Solvers support only the lasso (`p = 1`) and group-lasso (`p = 2`) cases.
    pub fn require_solver_supported(self) -> Result<()> {
        if self.0 == 1.0 || self.0 == 2.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("solvers support p in {{1, 2}}, got {self}")))
        }
    }
}

impl fmt::Display for GroupExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl std::str::FromStr for GroupExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" => Ok(GroupExponent::INF),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad group exponent '{other}'")))
                .and_then(GroupExponent::new),
        }
    }
}

impl Serialize for GroupExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for GroupExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => GroupExponent::new(p),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// A real-valued kernel on an open interval.
pub trait ScalarKernel: Send + Sync {
    /// Kernel value without the domain check.
    fn value(&self, x: f64, y: f64) -> f64;

    fn domain(&self) -> Interval;

    /// Whether every Gram matrix on distinct points is positive definite.
    /// Certification expects Cholesky to succeed for such kernels.
    fn strictly_positive_definite(&self) -> bool;

    /// JSON description used in reports.
    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "family": "custom", "domain": self.domain() })
    }

    fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let dom = self.domain();
        dom.check(x)?;
        dom.check(y)?;
        Ok(self.value(x, y))
    }
}

impl<K: ScalarKernel + ?Sized> ScalarKernel for &K {
    fn value(&self, x: f64, y: f64) -> f64 {
        (**self).value(x, y)
    }
    fn domain(&self) -> Interval {
        (**self).domain()
    }
    fn strictly_positive_definite(&self) -> bool {
        (**self).strictly_positive_definite()
    }
    fn describe(&self) -> serde_json::Value {
        (**self).describe()
    }
}

/// The builtin kernel families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarKernelSpec {
    /// `min(x, y) - x·y` on `(0, 1)`; identical to `TFamily { t: 1 }`.
    BrownianBridge,
    /// `exp(-|x - y|)` restricted to `domain`.
    Exponential { domain: Interval },
    TFamily { t: f64 },
    Wendland,
    /// `c1·K_t + c2·K_w`.
    Combination { t: f64, c1: f64, c2: f64 },
}

#[inline]
fn t_family(t: f64, x: f64, y: f64) -> f64 {
    x.min(y) - t * (x * y)
}

#[inline]
fn wendland(x: f64, y: f64) -> f64 {
    (1.0 - (x - y).abs()).max(0.0)
}

impl ScalarKernelSpec {
    pub fn brownian_bridge() -> Self {
        ScalarKernelSpec::BrownianBridge
    }

    pub fn t_family(t: f64) -> Result<Self> {
        check_t(t)?;
        Ok(ScalarKernelSpec::TFamily { t })
    }

    pub fn wendland() -> Self {
        ScalarKernelSpec::Wendland
    }

    pub fn exponential(domain: Interval) -> Self {
        ScalarKernelSpec::Exponential { domain }
    }

    pub fn combination(t: f64, c1: f64, c2: f64) -> Result<Self> {
        check_t(t)?;
        if !(c1 >= 0.0 && c2 >= 0.0 && c1 + c2 > 0.0) {
            return Err(Error::Config(format!(
                "combination weights must be nonnegative with positive sum, got ({c1}, {c2})"
            )));
        }
        Ok(ScalarKernelSpec::Combination { t, c1, c2 })
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            ScalarKernelSpec::BrownianBridge => "brownian_bridge",
            ScalarKernelSpec::Exponential { .. } => "exponential",
            ScalarKernelSpec::TFamily { .. } => "tfamily",
            ScalarKernelSpec::Wendland => "wendland",
            ScalarKernelSpec::Combination { .. } => "combination",
        }
    }

    /// Closed-form uniform bound on `|G|` over the domain, where one is known.
    pub fn uniform_bound(&self) -> Option<f64> {
        match *self {
            ScalarKernelSpec::BrownianBridge | ScalarKernelSpec::TFamily { .. } => Some(2.0),
            ScalarKernelSpec::Exponential { .. } | ScalarKernelSpec::Wendland => Some(1.0),
            ScalarKernelSpec::Combination { c1, c2, .. } => Some(2.0 * (c1 + c2)),
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Config(format!("t must lie in [-1, 1], got {t}")))
    }
}

impl ScalarKernel for ScalarKernelSpec {
    fn value(&self, x: f64, y: f64) -> f64 {
        match *self {
            ScalarKernelSpec::BrownianBridge => t_family(1.0, x, y),
            ScalarKernelSpec::Exponential { .. } => (-(x - y).abs()).exp(),
            ScalarKernelSpec::TFamily { t } => t_family(t, x, y),
            ScalarKernelSpec::Wendland => wendland(x, y),
            ScalarKernelSpec::Combination { t, c1, c2 } => {
                c1 * t_family(t, x, y) + c2 * wendland(x, y)
            }
        }
    }

    fn domain(&self) -> Interval {
        match *self {
            ScalarKernelSpec::Exponential { domain } => domain,
            _ => Interval::UNIT,
        }
    }

    fn strictly_positive_definite(&self) -> bool {
        true
    }

    fn describe(&self) -> serde_json::Value {
        let mut doc = serde_json::json!({ "family": self.family_name(), "domain": self.domain() });
        match *self {
            ScalarKernelSpec::TFamily { t } => doc["t"] = t.into(),
            ScalarKernelSpec::Combination { t, c1, c2 } => {
                doc["t"] = t.into();
                doc["weights"] = serde_json::json!([c1, c2]);
            }
            _ => {}
        }
        doc
    }
}

/// `exp(-(x - y)² / (2·width²))`. Strictly positive definite but its
/// Lebesgue constants exceed one, so it is the standard non-admissible
/// reference kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    pub width: f64,
    pub domain: Interval,
}

impl GaussianKernel {
    pub fn new(width: f64, domain: Interval) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Config(format!("gaussian width must be positive, got {width}")));
        }
        Ok(GaussianKernel { width, domain })
    }
}

impl ScalarKernel for GaussianKernel {
    fn value(&self, x: f64, y: f64) -> f64 {
        let d = (x - y) / self.width;
        (-0.5 * d * d).exp()
    }

    fn domain(&self) -> Interval {
        self.domain
    }

    fn strictly_positive_definite(&self) -> bool {
        true
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "family": "gaussian", "width": self.width, "domain": self.domain })
    }
}

/// Symmetric positive-definite task coupling matrix with a cached inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskCoupling {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl TaskCoupling {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::Shape(format!(
                "coupling must be a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("coupling has non-finite entries".into()));
        }
        let scale = matrix.amax();
        for i in 0..n {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Config(format!(
                        "coupling is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        let chol = matrix.clone().cholesky().ok_or_else(|| {
            Error::Singular("coupling matrix is not positive definite".into())
        })?;
        let mut inverse = chol.inverse();
        inverse = (&inverse + inverse.transpose()) * 0.5;
        let residual = (&matrix * &inverse - DMatrix::identity(n, n)).amax();
        if residual > 1e-12 {
            return Err(Error::Singular(format!(
                "coupling too ill-conditioned: A·A⁻¹ deviates from identity by {residual:.3e}"
            )));
        }
        Ok(TaskCoupling { matrix, inverse })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("coupling rows must all have length n".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Reads `n` rows of `n` comma-separated reals, no header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let rows = crate::io::read_matrix_csv(path)?;
        Self::from_rows(&rows)
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn spectral_norm(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    pub fn condition_number(&self) -> f64 {
        let ev = self.eigenvalues();
        ev[ev.len() - 1] / ev[0]
    }

    /// Upper bound on the `ℓ^p → ℓ^q` operator norm (`q` conjugate to `p`).
    /// Exact for `p ∈ {1, 2}` and for `p = ∞` with `n ≤ 16`.
    pub fn operator_norm(&self, p: GroupExponent) -> f64 {
        let n = self.n();
        let pv = p.value();
        if pv == 1.0 {
            self.matrix.amax()
        } else if pv == 2.0 {
            self.spectral_norm()
        } else if pv.is_infinite() && n <= 16 {
            // ‖A‖_{∞→1} is attained at a sign vector
            (0u32..(1 << n))
                .map(|mask| {
                    let s = DMatrix::from_fn(n, 1, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 });
                    (&self.matrix * s).iter().map(|v| v.abs()).sum::<f64>()
                })
                .fold(0.0, f64::max)
        } else if pv < 2.0 {
            self.spectral_norm()
        } else {
            let expo = if pv.is_infinite() { 1.0 } else { 1.0 - 2.0 / pv };
            (n as f64).powf(expo) * self.spectral_norm()
        }
    }
}

impl Serialize for TaskCoupling {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc {
            n: usize,
            #[serde(rename = "A")]
            a: Vec<Vec<f64>>,
        }
        let n = self.n();
        let a = (0..n).map(|i| (0..n).map(|j| self.matrix[(i, j)]).collect()).collect();
        Doc { n, a }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TaskCoupling {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Doc {
            n: usize,
            #[serde(rename = "A")]
            a: Vec<Vec<f64>>,
        }
        let doc = Doc::deserialize(d)?;
        if doc.a.len() != doc.n {
            return Err(serde::de::Error::custom(format!(
                "coupling declares n = {} but has {} rows",
                doc.n,
                doc.a.len()
            )));
        }
        TaskCoupling::from_rows(&doc.a).map_err(serde::de::Error::custom)
    }
}

/// Multi-task kernel `K(x, y) = G(x, y)·A` together with the group exponent
/// shared by norms, solvers and certification.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorKernel<G = ScalarKernelSpec> {
    pub scalar: G,
    pub coupling: TaskCoupling,
    pub p: GroupExponent,
}

impl<G: ScalarKernel> OperatorKernel<G> {
    pub fn new(scalar: G, coupling: TaskCoupling, p: GroupExponent) -> Self {
        OperatorKernel { scalar, coupling, p }
    }

    /// Number of tasks.
    pub fn n(&self) -> usize {
        self.coupling.n()
    }

    pub fn domain(&self) -> Interval {
        self.scalar.domain()
    }

    pub fn eval_scalar(&self, x: f64, y: f64) -> Result<f64> {
        self.scalar.eval(x, y)
    }

    /// The `n×n` matrix `G(x, y)·A`.
    pub fn eval(&self, x: f64, y: f64) -> Result<DMatrix<f64>> {
        let g = self.scalar.eval(x, y)?;
        Ok(self.coupling.matrix() * g)
    }

    /// Report description: the scalar family plus `p` and the coupling.
    pub fn describe(&self) -> serde_json::Value {
        let mut doc = self.scalar.describe();
        doc["p"] = serde_json::to_value(self.p).expect("exponent serializes");
        doc["coupling"] = serde_json::to_value(&self.coupling).expect("coupling serializes");
        doc
    }

    /// Scalar part `(G(x, x_i))_i` of `K_x(x)`; each entry times `A` gives the
    /// operator-valued vector.
    pub fn kernel_vector(&self, centers: &[f64], x: f64) -> Result<Vec<f64>> {
        check_centers(&self.scalar, centers)?;
        self.domain().check(x)?;
        Ok(centers.iter().map(|&c| self.scalar.value(x, c)).collect())
    }
}

/// Every center lies in the domain and no two are equal.
pub fn check_centers<G: ScalarKernel + ?Sized>(kernel: &G, centers: &[f64]) -> Result<()> {
    let dom = kernel.domain();
    for &c in centers {
        dom.check(c)?;
    }
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));
    for w in order.windows(2) {
        if centers[w[0]] == centers[w[1]] {
            let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::DuplicateCenter { first, second, value: centers[first] });
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct KernelDoc {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<[f64; 2]>,
    #[serde(default)]
    domain: Option<Interval>,
    #[serde(default = "default_p")]
    p: GroupExponent,
    #[serde(default)]
    coupling: Option<TaskCoupling>,
}

fn default_p() -> GroupExponent {
    GroupExponent::TWO
}

impl ScalarKernelSpec {
    /// Builds a spec from the flat description used by the JSON and CLI layers.
    pub fn from_parts(
        family: &str,
        t: Option<f64>,
        weights: Option<[f64; 2]>,
        domain: Option<Interval>,
    ) -> Result<Self> {
        let fixed_unit = |domain: Option<Interval>| match domain {
            Some(d) if d != Interval::UNIT => Err(Error::Config(format!(
                "family '{family}' is defined on (0, 1) only"
            ))),
            _ => Ok(()),
        };
        match family {
            "brownian_bridge" | "brownian" | "kmin" => {
                fixed_unit(domain)?;
                Ok(ScalarKernelSpec::BrownianBridge)
            }
            "tfamily" => {
                fixed_unit(domain)?;
                let t = t.ok_or_else(|| Error::Config("tfamily requires t".into()))?;
                ScalarKernelSpec::t_family(t)
            }
            "wendland" => {
                fixed_unit(domain)?;
                Ok(ScalarKernelSpec::Wendland)
            }
            "combination" => {
                fixed_unit(domain)?;
                let [c1, c2] =
                    weights.ok_or_else(|| Error::Config("combination requires weights".into()))?;
                ScalarKernelSpec::combination(t.unwrap_or(1.0), c1, c2)
            }
            "exponential" => Ok(ScalarKernelSpec::Exponential {
                domain: domain.unwrap_or(Interval::REAL_LINE),
            }),
            other => Err(Error::Config(format!("unknown kernel family '{other}'"))),
        }
    }
}

impl Serialize for OperatorKernel<ScalarKernelSpec> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (t, weights) = match self.scalar {
            ScalarKernelSpec::TFamily { t } => (Some(t), None),
            ScalarKernelSpec::Combination { t, c1, c2 } => (Some(t), Some([c1, c2])),
            _ => (None, None),
        };
        KernelDoc {
            family: self.scalar.family_name().to_string(),
            t,
            weights,
            domain: Some(self.scalar.domain()),
            p: self.p,
            coupling: Some(self.coupling.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorKernel<ScalarKernelSpec> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = KernelDoc::deserialize(d)?;
        let scalar = ScalarKernelSpec::from_parts(&doc.family, doc.t, doc.weights, doc.domain)
            .map_err(serde::de::Error::custom)?;
        let coupling = match doc.coupling {
            Some(c) => c,
            None => TaskCoupling::identity(1).map_err(serde::de::Error::custom)?,
        };
        Ok(OperatorKernel { scalar, coupling, p: doc.p })
    }
}
