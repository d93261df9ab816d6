use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{cross, dot, sub, Point};

pub type Mat4 = [[f64; 4]; 4];

/// Scalar coefficient field.
pub type Coefficient = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Bilinear forms on P1 elements.
#[derive(Clone)]
pub enum Form {
    /// `(grad u, grad v)`
    Diffusion,
    /// `(u, v)`
    Mass,
    /// `(k grad u, grad v)` with `k` sampled at quadrature points.
    DivKGrad(Coefficient),
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Form {
    pub fn div_k_grad(k: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Form::DivKGrad(Arc::new(k))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Form::Diffusion => "diffusion",
            Form::Mass => "mass",
            Form::DivKGrad(_) => "divkgrad",
        }
    }

    pub fn is_constant(&self) -> bool {
        !matches!(self, Form::DivKGrad(_))
    }
}

/// Symmetric 4-point rule on the reference tetrahedron, exact for
/// quadratics: barycentric points `(a, b, b, b)` and permutations, equal
/// weights.
pub const QUAD4_A: f64 = 0.585_410_196_624_968_5;
pub const QUAD4_B: f64 = 0.138_196_601_125_010_5;

/// Barycentric coordinates of the 4-point rule.
pub fn quad4_points() -> [[f64; 4]; 4] {
    std::array::from_fn(|q| std::array::from_fn(|v| if v == q { QUAD4_A } else { QUAD4_B }))
}

/// Mean of `k` over the tetrahedron by the 4-point rule. Fails if `k` is
/// not strictly positive at a quadrature point.
pub fn mean_coefficient(k: &Coefficient, pts: &[Point; 4]) -> Result<f64> {
    let mut sum = 0.0;
    for bary in quad4_points() {
        let mut x = [0.0; 3];
        for (v, l) in pts.iter().zip(bary) {
            for d in 0..3 {
                x[d] += l * v[d];
            }
        }
        let kx = k(x);
        if !(kx > 0.0) {
            return Err(Error::Unsupported(format!(
                "coefficient must be positive, k({x:?}) = {kx}"
            )));
        }
        sum += 0.25 * kx;
    }
    Ok(sum)
}

/// Gradients of the barycentric basis functions and the volume.
pub fn p1_gradients(pts: &[Point; 4]) -> Result<([Point; 4], f64)> {
    let e1 = sub(pts[1], pts[0]);
    let e2 = sub(pts[2], pts[0]);
    let e3 = sub(pts[3], pts[0]);
    let det = dot(e1, cross(e2, e3));
    if det == 0.0 || !det.is_finite() {
        return Err(Error::DegenerateCell {
            cell: usize::MAX,
            volume6: det,
        });
    }
    let g1 = cross(e2, e3).map(|v| v / det);
    let g2 = cross(e3, e1).map(|v| v / det);
    let g3 = cross(e1, e2).map(|v| v / det);
    let g0 = [
        -(g1[0] + g2[0] + g3[0]),
        -(g1[1] + g2[1] + g3[1]),
        -(g1[2] + g2[2] + g3[2]),
    ];
    Ok(([g0, g1, g2, g3], det.abs() / 6.0))
}

/// Element matrix of `form` on the tetrahedron `pts`.
pub fn local_matrix(form: &Form, pts: &[Point; 4]) -> Result<Mat4> {
    match form {
        Form::Diffusion => {
            let (g, vol) = p1_gradients(pts)?;
            Ok(std::array::from_fn(|i| std::array::from_fn(|j| vol * dot(g[i], g[j]))))
        }
        Form::Mass => {
            let (_, vol) = p1_gradients(pts)?;
            Ok(std::array::from_fn(|i| {
                std::array::from_fn(|j| if i == j { vol / 10.0 } else { vol / 20.0 })
            }))
        }
        Form::DivKGrad(k) => {
            let kbar = mean_coefficient(k, pts)?;
            let a = local_matrix(&Form::Diffusion, pts)?;
            Ok(a.map(|row| row.map(|v| v * kbar)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const REF: [Point; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    #[test]
    fn mass_on_reference() {
        let m = local_matrix(&Form::Mass, &REF).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 / 60.0 } else { 1.0 / 120.0 };
                assert_relative_eq!(m[i][j], expected, epsilon = 1e-17);
            }
        }
        let total: f64 = m.iter().flatten().sum();
        assert_relative_eq!(total, 1.0 / 6.0, epsilon = 1e-16);
    }

    #[test]
    fn diffusion_on_reference() {
        let a = local_matrix(&Form::Diffusion, &REF).unwrap();
        for row in &a {
            assert!(row.iter().sum::<f64>().abs() < 1e-16);
        }
        assert_relative_eq!(a[0][0], 0.5, epsilon = 1e-16);
        assert_relative_eq!(a[1][1], 1.0 / 6.0, epsilon = 1e-16);
        assert_relative_eq!(a[0][1], -1.0 / 6.0, epsilon = 1e-16);
        assert_eq!(a[1][2], 0.0);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a[i][j], a[j][i]);
            }
        }
    }

    #[test]
    fn variable_coefficient_reduces() {
        let pts = [[0.1, 0.0, 0.2], [1.0, 0.3, 0.0], [0.0, 1.2, 0.1], [0.2, 0.1, 0.9]];
        let a = local_matrix(&Form::Diffusion, &pts).unwrap();
        let k1 = local_matrix(&Form::div_k_grad(|_| 1.0), &pts).unwrap();
        let k2 = local_matrix(&Form::div_k_grad(|_| 2.0), &pts).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((k1[i][j] - a[i][j]).abs() <= 1e-14 * a[i][j].abs().max(1.0));
                assert!((k2[i][j] - 2.0 * a[i][j]).abs() <= 1e-12 * a[i][j].abs().max(1.0));
            }
        }
        assert!(local_matrix(&Form::div_k_grad(|_| -1.0), &pts).is_err());
    }

    #[test]
    fn quadrature_integrates_quadratics() {
        // mean of x^2 over the reference tet is 1/10, of x*y is 1/20
        let x2 = mean_coefficient(&(Arc::new(|p: Point| 1.0 + p[0] * p[0]) as Coefficient), &REF).unwrap();
        assert_relative_eq!(x2, 1.1, epsilon = 1e-15);
        let xy = mean_coefficient(&(Arc::new(|p: Point| 1.0 + p[0] * p[1]) as Coefficient), &REF).unwrap();
        assert_relative_eq!(xy, 1.05, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_element() {
        let flat = [[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        assert!(local_matrix(&Form::Mass, &flat).is_err());
    }
}
