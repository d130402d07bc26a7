use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};

/// Catalogue of drivers `g(t, z)`, addressed by `name` in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Zero,
    /// `kappa |z|`
    Abs { kappa: f64 },
    /// `k1 z^+ - k2 z^-`
    Asymmetric { k1: f64, k2: f64 },
    /// `|z|^4` on `|z| <= 1`, `|z|^2` beyond. Named `example41` in model files.
    #[serde(rename = "example41", alias = "quartic_quadratic")]
    QuarticQuadratic,
    /// `base(z) + (gamma / 2) z^2`
    QuadraticEntropic {
        gamma: f64,
        #[serde(default = "zero_base")]
        base: Box<GeneratorSpec>,
    },
    /// `min(kappa |z|, cap)`; normalized but not star-shaped.
    Saturating { kappa: f64, cap: f64 },
    /// `-c z^2`; normalized but not star-shaped.
    NegativeQuadratic { c: f64 },
}

fn zero_base() -> Box<GeneratorSpec> {
    Box::new(GeneratorSpec::Zero)
}

/// Owner-declared properties of a driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorFlags {
    pub normalized: bool,
    #[serde(default)]
    pub lipschitz_k: Option<f64>,
    #[serde(default)]
    pub growth_c: Option<f64>,
    pub star_shaped: bool,
    pub convex: bool,
    #[serde(default)]
    pub concave: bool,
    pub positively_homogeneous: bool,
}

/// A driver plus its declared flags. Flags default to the catalogue's own
/// declaration when omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    #[serde(flatten)]
    pub spec: GeneratorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flags: Option<GeneratorFlags>,
}

impl From<GeneratorSpec> for Generator {
    fn from(spec: GeneratorSpec) -> Self {
        Self { spec, flags: None }
    }
}

impl GeneratorSpec {
    pub fn eval(&self, _t: f64, z: f64) -> f64 {
        match self {
            GeneratorSpec::Zero => 0.0,
            GeneratorSpec::Abs { kappa } => kappa * z.abs(),
            GeneratorSpec::Asymmetric { k1, k2 } => k1 * z.max(0.0) - k2 * (-z).max(0.0),
            GeneratorSpec::QuarticQuadratic => {
                let a = z.abs();
                if a <= 1.0 {
                    a.powi(4)
                } else {
                    a * a
                }
            }
            GeneratorSpec::QuadraticEntropic { gamma, base } => base.eval(_t, z) + 0.5 * gamma * z * z,
            GeneratorSpec::Saturating { kappa, cap } => (kappa * z.abs()).min(*cap),
            GeneratorSpec::NegativeQuadratic { c } => -c * z * z,
        }
    }

    /// Upper bound of `|dg/dz|` over `|z| <= r`.
    pub fn slope_bound(&self, r: f64) -> f64 {
        match self {
            GeneratorSpec::Zero => 0.0,
            GeneratorSpec::Abs { kappa } => kappa.abs(),
            GeneratorSpec::Asymmetric { k1, k2 } => k1.abs().max(k2.abs()),
            GeneratorSpec::QuarticQuadratic => {
                if r <= 1.0 {
                    4.0 * r.powi(3)
                } else {
                    (2.0 * r).max(4.0)
                }
            }
            GeneratorSpec::QuadraticEntropic { gamma, base } => base.slope_bound(r) + gamma * r,
            GeneratorSpec::Saturating { kappa, .. } => kappa.abs(),
            GeneratorSpec::NegativeQuadratic { c } => 2.0 * c.abs() * r,
        }
    }

    pub fn catalogue_flags(&self) -> GeneratorFlags {
        let f = |k: f64, star, convex, concave, ph| GeneratorFlags {
            normalized: true,
            lipschitz_k: Some(k),
            growth_c: Some(k),
            star_shaped: star,
            convex,
            concave,
            positively_homogeneous: ph,
        };
        match self {
            GeneratorSpec::Zero => f(0.0, true, true, true, true),
            GeneratorSpec::Abs { kappa } => f(*kappa, true, true, false, true),
            GeneratorSpec::Asymmetric { k1, k2 } => f(k1.max(*k2), true, k1 >= k2, k1 <= k2, true),
            GeneratorSpec::QuarticQuadratic => GeneratorFlags { lipschitz_k: Some(4.0), growth_c: Some(1.0), ..f(0.0, true, false, false, false) },
            GeneratorSpec::QuadraticEntropic { gamma, base } => {
                let b = base.catalogue_flags();
                GeneratorFlags {
                    normalized: b.normalized,
                    lipschitz_k: b.lipschitz_k.map(|k| k + gamma / 2.0),
                    growth_c: b.growth_c.map(|c| c + gamma / 2.0),
                    star_shaped: b.star_shaped,
                    convex: b.convex,
                    concave: false,
                    positively_homogeneous: false,
                }
            }
            GeneratorSpec::Saturating { kappa, .. } => f(*kappa, false, false, false, false),
            GeneratorSpec::NegativeQuadratic { c } => f(*c, false, false, true, false),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            GeneratorSpec::Zero | GeneratorSpec::QuarticQuadratic => true,
            GeneratorSpec::Abs { kappa } => kappa.is_finite() && *kappa > 0.0,
            GeneratorSpec::Asymmetric { k1, k2 } => k1.is_finite() && k2.is_finite() && *k1 > 0.0 && *k2 > 0.0,
            GeneratorSpec::QuadraticEntropic { gamma, base } => {
                base.validate()?;
                gamma.is_finite() && *gamma > 0.0
            }
            GeneratorSpec::Saturating { kappa, cap } => *kappa > 0.0 && *cap > 0.0 && kappa.is_finite() && cap.is_finite(),
            GeneratorSpec::NegativeQuadratic { c } => c.is_finite() && *c > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(RiskError::Parameter(format!("invalid generator parameters: {self:?}")))
        }
    }
}

impl Generator {
    pub fn new(spec: GeneratorSpec) -> Self {
        spec.into()
    }

    pub fn zero() -> Self {
        GeneratorSpec::Zero.into()
    }

    pub fn abs(kappa: f64) -> Self {
        GeneratorSpec::Abs { kappa }.into()
    }

    pub fn asymmetric(k1: f64, k2: f64) -> Self {
        GeneratorSpec::Asymmetric { k1, k2 }.into()
    }

    pub fn quartic_quadratic() -> Self {
        GeneratorSpec::QuarticQuadratic.into()
    }

    pub fn quadratic_entropic(gamma: f64, base: GeneratorSpec) -> Self {
        GeneratorSpec::QuadraticEntropic { gamma, base: Box::new(base) }.into()
    }

    pub fn eval(&self, t: f64, z: f64) -> f64 {
        self.spec.eval(t, z)
    }

    pub fn slope_bound(&self, r: f64) -> f64 {
        self.spec.slope_bound(r)
    }

    pub fn flags(&self) -> GeneratorFlags {
        self.flags.unwrap_or_else(|| self.spec.catalogue_flags())
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()
    }
}

/// One flag of the generator audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagCheck {
    pub property: String,
    pub declared: bool,
    /// Whether the grid found no counterexample.
    pub observed: bool,
    /// Largest violation seen on the grid (0 when none).
    pub max_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<GridWitness>,
}

impl FlagCheck {
    /// A declared property must be observed; an undeclared one may go either way.
    pub fn consistent(&self) -> bool {
        !self.declared || self.observed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWitness {
    pub t: f64,
    pub z: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub generator: Generator,
    pub sampled_lipschitz_k: f64,
    pub sampled_growth_c: f64,
    pub checks: Vec<FlagCheck>,
}

impl GeneratorReport {
    pub fn consistent(&self) -> bool {
        self.checks.iter().all(FlagCheck::consistent)
    }

    pub fn check(&self, property: &str) -> Option<&FlagCheck> {
        self.checks.iter().find(|c| c.property == property)
    }
}

const GRID_TOL: f64 = 1e-12;

fn rel_tol(a: f64, b: f64) -> f64 {
    GRID_TOL * (1.0 + a.abs().max(b.abs()))
}

struct Worst {
    violation: f64,
    witness: Option<GridWitness>,
}

impl Worst {
    fn new() -> Self {
        Self { violation: 0.0, witness: None }
    }

    /// Records `lhs >= rhs` as the required relation.
    fn require_ge(&mut self, lhs: f64, rhs: f64, t: f64, z: Vec<f64>, alpha: Option<f64>) {
        let v = rhs - lhs;
        if v > rel_tol(lhs, rhs) && v > self.violation {
            self.violation = v;
            self.witness = Some(GridWitness { t, z, alpha, lhs, rhs });
        }
    }

    fn finish(self, property: &str, declared: bool) -> FlagCheck {
        FlagCheck { property: property.into(), declared, observed: self.witness.is_none(), max_violation: self.violation, witness: self.witness }
    }
}

/// Grid audit of the generator conditions: growth, local Lipschitz,
/// normalization, star-shapedness, plus convexity, concavity and positive
/// homogeneity.
pub fn check_generator(gen: &Generator, t_grid: &[f64], z_grid: &[f64], alpha_grid: &[f64]) -> Result<GeneratorReport> {
    if t_grid.is_empty() || z_grid.is_empty() || alpha_grid.is_empty() {
        return Err(RiskError::InvalidInput("generator audit needs non-empty grids".into()));
    }
    if alpha_grid.iter().any(|&a| !(a >= 1.0 && a.is_finite())) {
        return Err(RiskError::InvalidInput("alpha grid must lie in [1, inf)".into()));
    }
    gen.validate()?;
    let flags = gen.flags();
    let g = |t, z| gen.eval(t, z);

    let mut k_hat: f64 = 0.0;
    let mut c_hat: f64 = 0.0;
    let mut norm = Worst::new();
    let mut star = Worst::new();
    let mut convex = Worst::new();
    let mut concave = Worst::new();
    let mut homog = Worst::new();
    for &t in t_grid {
        let g0 = g(t, 0.0);
        if !g0.is_finite() {
            return Err(RiskError::Numeric(format!("generator not finite at t={t}, z=0")));
        }
        norm.require_ge(0.0, g0.abs(), t, vec![0.0], None);
        for (i, &z1) in z_grid.iter().enumerate() {
            let g1 = g(t, z1);
            if !g1.is_finite() {
                return Err(RiskError::Numeric(format!("generator not finite at t={t}, z={z1}")));
            }
            c_hat = c_hat.max(g1.abs() / (1.0 + z1 * z1));
            for &a in alpha_grid {
                let ga = g(t, a * z1);
                star.require_ge(ga, a * g1, t, vec![z1], Some(a));
                let d = (ga - a * g1).abs();
                homog.require_ge(0.0, d, t, vec![z1], Some(a));
            }
            for &z2 in &z_grid[i + 1..] {
                if z1 == z2 {
                    continue;
                }
                let g2 = g(t, z2);
                let k = (g1 - g2).abs() / ((1.0 + z1.abs() + z2.abs()) * (z1 - z2).abs());
                k_hat = k_hat.max(k);
                let mid = g(t, 0.5 * (z1 + z2));
                let chord = 0.5 * (g1 + g2);
                convex.require_ge(chord, mid, t, vec![z1, z2], None);
                concave.require_ge(mid, chord, t, vec![z1, z2], None);
            }
        }
    }

    let bound_check = |name: &str, declared: Option<f64>, sampled: f64| {
        let (decl, observed, viol) = match declared {
            Some(k) => (true, sampled <= k * (1.0 + 1e-12) + 1e-12, (sampled - k).max(0.0)),
            None => (false, true, 0.0),
        };
        FlagCheck { property: name.into(), declared: decl, observed, max_violation: viol, witness: None }
    };
    let checks = vec![
        bound_check("growth", flags.growth_c, c_hat),
        bound_check("lipschitz", flags.lipschitz_k, k_hat),
        norm.finish("normalized", flags.normalized),
        star.finish("star_shaped", flags.star_shaped),
        convex.finish("convex", flags.convex),
        concave.finish("concave", flags.concave),
        homog.finish("positively_homogeneous", flags.positively_homogeneous),
    ];
    Ok(GeneratorReport { generator: gen.clone(), sampled_lipschitz_k: k_hat, sampled_growth_c: c_hat, checks })
}

/// Symmetric `z` grid on `[-r, r]` with `2 * half + 1` points.
pub fn symmetric_grid(r: f64, half: usize) -> Vec<f64> {
    (-(half as i64)..=half as i64).map(|k| r * k as f64 / half as f64).collect()
}

/// Default audit grids: `t` in `{0, 0.5, 1}`, `z` on `[-3, 3]` step 0.05, `alpha` in `[1, 4]` step 0.25.
pub fn default_grids() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let t = vec![0.0, 0.5, 1.0];
    let z = symmetric_grid(3.0, 60);
    let a = (0..=12).map(|k| 1.0 + 0.25 * k as f64).collect();
    (t, z, a)
}
