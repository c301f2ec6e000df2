use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse, Expr};
use crate::error::{Error, Result};

/// Symmetric 2×2 matrix, used for diffusion tensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { xx: 1.0, xy: 0.0, yy: 1.0 };
    pub const ZERO: Sym2 = Sym2 { xx: 0.0, xy: 0.0, yy: 0.0 };

    pub fn scalar(s: f64) -> Self {
        Sym2 { xx: s, xy: 0.0, yy: s }
    }

    pub fn scale(self, s: f64) -> Self {
        Sym2 {
            xx: self.xx * s,
            xy: self.xy * s,
            yy: self.yy * s,
        }
    }

    pub fn sub(self, other: Sym2) -> Self {
        Sym2 {
            xx: self.xx - other.xx,
            xy: self.xy - other.xy,
            yy: self.yy - other.yy,
        }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        mean - half_diff.hypot(self.xy)
    }
}

/// Diffusion coefficient: either a scalar multiple of the identity or a full
/// symmetric matrix. Symmetry is structural, a single `a12` expression fills
/// both off-diagonal slots.
#[derive(Debug, Clone, PartialEq)]
pub enum Diffusion {
    Scalar(Expr),
    Matrix { a11: Expr, a12: Expr, a22: Expr },
}

impl Diffusion {
    pub fn eval(&self, x1: f64, y1: f64, y2: f64) -> Result<Sym2> {
        match self {
            Diffusion::Scalar(a) => Ok(Sym2::scalar(a.eval(x1, y1, y2)?)),
            Diffusion::Matrix { a11, a12, a22 } => Ok(Sym2 {
                xx: a11.eval(x1, y1, y2)?,
                xy: a12.eval(x1, y1, y2)?,
                yy: a22.eval(x1, y1, y2)?,
            }),
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Diffusion::Scalar(_))
    }

    fn components(&self) -> Vec<&Expr> {
        match self {
            Diffusion::Scalar(a) => vec![a],
            Diffusion::Matrix { a11, a12, a22 } => vec![a11, a12, a22],
        }
    }
}

/// The coefficient pair `(a, rho)` of the fine-scale problem, with fast
/// variables `(y1, y2)` on the unit cell and slow variable `x1 ∈ [-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientProblem {
    pub name: String,
    pub description: String,
    pub a: Diffusion,
    pub rho: Expr,
}

/// `[problem]` table of a configuration file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSource {
    pub name: Option<String>,
    pub description: Option<String>,
    pub a: Option<String>,
    pub a11: Option<String>,
    pub a12: Option<String>,
    pub a22: Option<String>,
    pub rho: String,
}

const P_CONST_RHO: &str = "cos(2*pi*y1) - 0.5";
const P_LOC_RHO: &str = "cos(2*pi*y1) - (0.5 + 0.3*x1^2)";

impl CoefficientProblem {
    pub fn new(name: &str, a: Diffusion, rho: Expr) -> Self {
        CoefficientProblem {
            name: name.to_string(),
            description: String::new(),
            a,
            rho,
        }
    }

    /// Scalar `a` and `rho` given as source strings.
    pub fn from_strs(name: &str, a: &str, rho: &str) -> Result<Self> {
        Ok(Self::new(name, Diffusion::Scalar(parse(a)?), parse(rho)?))
    }

    pub fn from_source(src: &ProblemSource) -> Result<Self> {
        let field = |key: &str, s: &str| {
            parse(s).map_err(|e| Error::Precondition(format!("problem.{key}: {e}")))
        };
        let a = match (&src.a, &src.a11, &src.a12, &src.a22) {
            (Some(a), None, None, None) => Diffusion::Scalar(field("a", a)?),
            (None, Some(a11), a12, Some(a22)) => Diffusion::Matrix {
                a11: field("a11", a11)?,
                a12: field("a12", a12.as_deref().unwrap_or("0"))?,
                a22: field("a22", a22)?,
            },
            (None, None, None, None) => {
                return Err(Error::Precondition(
                    "problem needs either `a` or `a11`/`a22`".into(),
                ))
            }
            _ => {
                return Err(Error::Precondition(
                    "give either scalar `a` or the matrix entries `a11`, `a12`, `a22`, not both".into(),
                ))
            }
        };
        Ok(CoefficientProblem {
            name: src.name.clone().unwrap_or_else(|| "unnamed".into()),
            description: src.description.clone().unwrap_or_default(),
            a,
            rho: field("rho", &src.rho)?,
        })
    }

    pub fn to_source(&self) -> ProblemSource {
        let mut src = ProblemSource {
            name: Some(self.name.clone()),
            description: Some(self.description.clone()),
            rho: self.rho.to_string(),
            ..Default::default()
        };
        match &self.a {
            Diffusion::Scalar(a) => src.a = Some(a.to_string()),
            Diffusion::Matrix { a11, a12, a22 } => {
                src.a11 = Some(a11.to_string());
                src.a12 = Some(a12.to_string());
                src.a22 = Some(a22.to_string());
            }
        }
        src
    }

    /// Parses a TOML document holding a `[problem]` table and nothing else.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            problem: ProblemSource,
        }
        let doc: Doc = toml::from_str(text).map_err(|e| Error::Precondition(e.to_string()))?;
        Self::from_source(&doc.problem)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn diffusion(&self, x1: f64, y1: f64, y2: f64) -> Result<Sym2> {
        self.a.eval(x1, y1, y2).map_err(|e| at(e, x1, y1, y2))
    }

    pub fn weight(&self, x1: f64, y1: f64, y2: f64) -> Result<f64> {
        self.rho.eval(x1, y1, y2).map_err(|e| at(e, x1, y1, y2))
    }

    /// Central difference in `x1` of the diffusion tensor.
    pub fn diffusion_dx1(&self, x1: f64, y1: f64, y2: f64, step: f64) -> Result<Sym2> {
        let plus = self.diffusion(x1 + step, y1, y2)?;
        let minus = self.diffusion(x1 - step, y1, y2)?;
        Ok(plus.sub(minus).scale(0.5 / step))
    }

    pub fn weight_dx1(&self, x1: f64, y1: f64, y2: f64, step: f64) -> Result<f64> {
        let plus = self.weight(x1 + step, y1, y2)?;
        let minus = self.weight(x1 - step, y1, y2)?;
        Ok((plus - minus) * (0.5 / step))
    }

    pub fn depends_on_x1(&self) -> bool {
        self.rho.depends_on_x1() || self.a.components().iter().any(|e| e.depends_on_x1())
    }

    pub(crate) fn expressions(&self) -> Vec<&Expr> {
        let mut all = self.a.components();
        all.push(&self.rho);
        all
    }

    /// Same problem with the weight multiplied by `s`.
    pub fn with_weight_scaled(&self, s: f64) -> Self {
        let rho = Expr::Binary(
            super::BinOp::Mul,
            Box::new(Expr::Num(s)),
            Box::new(self.rho.clone()),
        );
        CoefficientProblem {
            name: format!("{}*{s}", self.name),
            description: self.description.clone(),
            a: self.a.clone(),
            rho,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["P_CONST", "P_LOC", "P_LOC_SHIFTED", "P_TILT", "P_MATRIX"]
    }

    /// Shipped coefficient pairs. All satisfy H2–H5; H6 holds for `P_LOC`,
    /// `P_TILT` and `P_MATRIX`, fails for `P_CONST` (μ constant) and
    /// `P_LOC_SHIFTED` (minimum at x1 = 0.5).
    pub fn builtin(name: &str) -> Option<Self> {
        let (a, rho, description): (Diffusion, &str, &str) = match name {
            "P_CONST" => (
                Diffusion::Scalar(Expr::Num(1.0)),
                P_CONST_RHO,
                "identity diffusion, x1-independent sign-changing weight",
            ),
            "P_LOC" => (
                Diffusion::Scalar(Expr::Num(1.0)),
                P_LOC_RHO,
                "identity diffusion, weight average decreasing away from x1 = 0",
            ),
            "P_LOC_SHIFTED" => (
                Diffusion::Scalar(Expr::Num(1.0)),
                "cos(2*pi*y1) - (0.5 + 0.1*(x1 - 0.5)^2)",
                "P_LOC with the minimum of mu moved to x1 = 0.5",
            ),
            "P_TILT" => (
                Diffusion::Scalar(Expr::Num(1.0)),
                "cos(2*pi*y1 + x1) - (0.5 + 0.3*x1^2)",
                "P_LOC with an x1-dependent phase; same mu(x1), nonzero c_eff",
            ),
            "P_MATRIX" => (
                Diffusion::Matrix {
                    a11: parse("1.5 + 0.5*cos(2*pi*y1)").ok()?,
                    a12: parse("0.25*sin(2*pi*y1)").ok()?,
                    a22: parse("1 + 0.3*cos(pi*y2)^2").ok()?,
                },
                "cos(2*pi*y1) + 0.2*cos(pi*y2) - (0.5 + 0.3*x1^2)",
                "anisotropic diffusion with a y2-dependent weight",
            ),
            _ => return None,
        };
        let mut p = CoefficientProblem::new(name, a, parse(rho).ok()?);
        p.description = description.to_string();
        Some(p)
    }
}

fn at(e: Error, x1: f64, y1: f64, y2: f64) -> Error {
    Error::EvalAt {
        x1,
        y1,
        y2,
        source: Box::new(e),
    }
}
