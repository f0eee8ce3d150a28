use std::f64::consts::PI;

use crate::local::DiffusionField;
use crate::mesh::Mesh;
use crate::{Error, Result, Tensor, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    /// `p = sin(πx) sin(πy)`, `Λ = Id`.
    A,
    /// Same `p`, `Λ = R(30°) diag(1, 10) R(30°)ᵀ`.
    B,
    /// `λ = 1` for `x < 1/2` and `10` otherwise,
    /// `p = sin(2πx) sin(πy) / λ`.
    C,
    /// `p = 2x - y + 0.3` with a constant tensor; needs Dirichlet data.
    Affine(Tensor),
}

/// Exact solution with its tensor and source on the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    pub name: String,
    kind: Kind,
}

fn case_b_tensor() -> Tensor {
    let (s, c) = (PI / 6.0).sin_cos();
    let r = Tensor::new(c, -s, s, c);
    let t = r * Tensor::new(1.0, 0.0, 0.0, 10.0) * r.transpose();
    (t + t.transpose()) * 0.5
}

fn lambda_c(x: Vec2) -> f64 {
    if x.x < 0.5 {
        1.0
    } else {
        10.0
    }
}

impl ManufacturedCase {
    pub fn case_a() -> ManufacturedCase {
        ManufacturedCase { name: "case-a".into(), kind: Kind::A }
    }

    pub fn case_b() -> ManufacturedCase {
        ManufacturedCase { name: "case-b".into(), kind: Kind::B }
    }

    pub fn case_c() -> ManufacturedCase {
        ManufacturedCase { name: "case-c".into(), kind: Kind::C }
    }

    pub fn affine(lambda: Tensor) -> ManufacturedCase {
        ManufacturedCase { name: "affine".into(), kind: Kind::Affine(lambda) }
    }

    pub fn by_name(name: &str) -> Result<ManufacturedCase> {
        match name {
            "case-a" => Ok(ManufacturedCase::case_a()),
            "case-b" => Ok(ManufacturedCase::case_b()),
            "case-c" => Ok(ManufacturedCase::case_c()),
            "affine" => Ok(ManufacturedCase::affine(Tensor::identity())),
            _ => Err(Error::Parameter(format!("unknown manufactured case `{name}`"))),
        }
    }

    /// The named tensor field of a case (`case-a`, `case-b`, `case-c`).
    pub fn named_tensor(name: &str) -> Result<fn(Vec2) -> Tensor> {
        match name {
            "case-a" => Ok(|_| Tensor::identity()),
            "case-b" => Ok(|_| case_b_tensor()),
            "case-c" => Ok(|x| Tensor::identity() * lambda_c(x)),
            _ => Err(Error::Parameter(format!("unknown tensor field `{name}`"))),
        }
    }

    pub fn with_tensor(self, lambda: Tensor) -> ManufacturedCase {
        match self.kind {
            Kind::Affine(_) => ManufacturedCase { kind: Kind::Affine(lambda), ..self },
            _ => self,
        }
    }

    /// Whether the exact solution is nonzero on the boundary.
    pub fn needs_dirichlet(&self) -> bool {
        matches!(self.kind, Kind::Affine(_))
    }

    pub fn exact(&self, x: Vec2) -> f64 {
        match self.kind {
            Kind::A | Kind::B => (PI * x.x).sin() * (PI * x.y).sin(),
            Kind::C => (2.0 * PI * x.x).sin() * (PI * x.y).sin() / lambda_c(x),
            Kind::Affine(_) => 2.0 * x.x - x.y + 0.3,
        }
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        match self.kind {
            Kind::A | Kind::B => Vec2::new(
                PI * (PI * x.x).cos() * (PI * x.y).sin(),
                PI * (PI * x.x).sin() * (PI * x.y).cos(),
            ),
            Kind::C => {
                Vec2::new(
                    2.0 * PI * (2.0 * PI * x.x).cos() * (PI * x.y).sin(),
                    PI * (2.0 * PI * x.x).sin() * (PI * x.y).cos(),
                ) / lambda_c(x)
            }
            Kind::Affine(_) => Vec2::new(2.0, -1.0),
        }
    }

    pub fn tensor(&self, x: Vec2) -> Tensor {
        match self.kind {
            Kind::A => Tensor::identity(),
            Kind::B => case_b_tensor(),
            Kind::C => Tensor::identity() * lambda_c(x),
            Kind::Affine(t) => t,
        }
    }

    /// `f = -div(Λ∇p)`.
    pub fn source(&self, x: Vec2) -> f64 {
        match self.kind {
            Kind::A => 2.0 * PI * PI * self.exact(x),
            Kind::B => {
                let t = case_b_tensor();
                let p = self.exact(x);
                let pxy = PI * PI * (PI * x.x).cos() * (PI * x.y).cos();
                PI * PI * (t[(0, 0)] + t[(1, 1)]) * p - 2.0 * t[(0, 1)] * pxy
            }
            Kind::C => 5.0 * PI * PI * (2.0 * PI * x.x).sin() * (PI * x.y).sin(),
            Kind::Affine(_) => 0.0,
        }
    }

    /// Cell means of the tensor.
    pub fn field(&self, mesh: &Mesh) -> Result<DiffusionField> {
        DiffusionField::from_fn(mesh, |x| self.tensor(x))
    }
}
