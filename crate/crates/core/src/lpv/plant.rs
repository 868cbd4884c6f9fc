use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{LpvModel, LpvPoint, LpvSource};
use crate::error::{Error, Result};
use crate::lti::{Labels, OperatingPoint, StateSpaceModel};
use crate::surrogate::{PlantDesign, Surrogate};

/// LPV models on a full-factorial `(c_s, c_d)` grid, blended bilinearly.
#[derive(Debug, Clone)]
pub struct PlantLpvFamily {
    cs: Vec<f64>,
    cd: Vec<f64>,
    /// Node `(i, j)` at index `i * cd.len() + j`.
    nodes: Vec<LpvModel>,
    fingerprint: String,
}

fn strictly_increasing(v: &[f64]) -> bool {
    !v.is_empty() && v.windows(2).all(|w| w[1] > w[0]) && v.iter().all(|x| x.is_finite())
}

impl PlantLpvFamily {
    pub fn new(cs: Vec<f64>, cd: Vec<f64>, nodes: Vec<LpvModel>) -> Result<Self> {
        if !strictly_increasing(&cs) || !strictly_increasing(&cd) {
            return Err(Error::Build(
                "plant axes must be strictly increasing".into(),
            ));
        }
        if nodes.len() != cs.len() * cd.len() {
            return Err(Error::Build(format!(
                "{} nodes for a {}x{} grid",
                nodes.len(),
                cs.len(),
                cd.len()
            )));
        }
        let first = &nodes[0];
        for (k, node) in nodes.iter().enumerate() {
            let (i, j) = (k / cd.len(), k % cd.len());
            if node.wind_samples() != first.wind_samples()
                || node.dims() != first.dims()
                || node.labels() != first.labels()
            {
                return Err(Error::Build(format!(
                    "node ({i}, {j}) does not share the wind samples and structure of node (0, 0)"
                )));
            }
            if node.plant() != [cs[i], cd[j]] {
                return Err(Error::Build(format!(
                    "node ({i}, {j}) was built for plant {:?}, grid expects {:?}",
                    node.plant(),
                    [cs[i], cd[j]]
                )));
            }
        }
        let mut h = Sha256::new();
        for node in &nodes {
            h.update(node.fingerprint().as_bytes());
        }
        let fingerprint = hex::encode(h.finalize());
        Ok(Self {
            cs,
            cd,
            nodes,
            fingerprint,
        })
    }

    pub fn cs_axis(&self) -> &[f64] {
        &self.cs
    }

    pub fn cd_axis(&self) -> &[f64] {
        &self.cd
    }

    pub fn node(&self, i: usize, j: usize) -> &LpvModel {
        &self.nodes[i * self.cd.len() + j]
    }

    pub fn nodes(&self) -> &[LpvModel] {
        &self.nodes
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn contains(&self, x_p: &PlantDesign) -> bool {
        let (cs0, cs1) = (self.cs[0], self.cs[self.cs.len() - 1]);
        let (cd0, cd1) = (self.cd[0], self.cd[self.cd.len() - 1]);
        (cs0..=cs1).contains(&x_p.c_s) && (cd0..=cd1).contains(&x_p.c_d)
    }

    /// Evaluates the family at plant `x_p` and wind `w`.
    pub fn eval_plant(&self, x_p: &PlantDesign, w: f64) -> Result<LpvPoint> {
        if !self.contains(x_p) {
            return Err(Error::OutOfHull {
                cs: x_p.c_s,
                cd: x_p.c_d,
            });
        }
        let (i, s) = locate(&self.cs, x_p.c_s);
        let (j, t) = locate(&self.cd, x_p.c_d);
        let corners = [
            (i, j, (1.0 - s) * (1.0 - t)),
            (i + 1, j, s * (1.0 - t)),
            (i, j + 1, (1.0 - s) * t),
            (i + 1, j + 1, s * t),
        ];
        let mut acc: Option<LpvPoint> = None;
        for (ci, cj, wt) in corners {
            if wt == 0.0 {
                continue;
            }
            let pt = self.node(ci, cj).eval(w)?;
            acc = Some(match acc {
                None => scale(pt, wt),
                Some(a) => add_scaled(a, &pt, wt),
            });
        }
        let mut pt = acc.expect("at least one corner carries weight");
        pt.op.x_p = x_p.as_array();
        Ok(pt)
    }

    /// Fixes the plant, giving a wind-only LPV source.
    pub fn slice(&self, x_p: PlantDesign) -> Result<PlantSlice<'_>> {
        if !self.contains(&x_p) {
            return Err(Error::OutOfHull {
                cs: x_p.c_s,
                cd: x_p.c_d,
            });
        }
        Ok(PlantSlice { family: self, x_p })
    }
}

/// Cell index and local coordinate in `[0, 1]`.
fn locate(axis: &[f64], v: f64) -> (usize, f64) {
    if axis.len() == 1 {
        return (0, 0.0);
    }
    let n = axis.len();
    let i = axis.partition_point(|&x| x <= v).clamp(1, n - 1) - 1;
    let t = (v - axis[i]) / (axis[i + 1] - axis[i]);
    if t == 1.0 && i + 2 < n {
        return (i + 1, 0.0);
    }
    (i, t)
}

fn scale(mut p: LpvPoint, k: f64) -> LpvPoint {
    if k != 1.0 {
        p.model.a *= k;
        p.model.b *= k;
        p.model.c *= k;
        p.model.d *= k;
        p.model.g *= k;
        p.op.xi_o *= k;
        p.op.u_o *= k;
        p.dxi_dw *= k;
    }
    p
}

fn add_scaled(mut a: LpvPoint, b: &LpvPoint, k: f64) -> LpvPoint {
    fn axpy(y: &mut DMatrix<f64>, x: &DMatrix<f64>, k: f64) {
        *y += x * k;
    }
    fn axpyv(y: &mut DVector<f64>, x: &DVector<f64>, k: f64) {
        *y += x * k;
    }
    axpy(&mut a.model.a, &b.model.a, k);
    axpy(&mut a.model.b, &b.model.b, k);
    axpy(&mut a.model.c, &b.model.c, k);
    axpy(&mut a.model.d, &b.model.d, k);
    axpyv(&mut a.model.g, &b.model.g, k);
    axpyv(&mut a.op.xi_o, &b.op.xi_o, k);
    axpyv(&mut a.op.u_o, &b.op.u_o, k);
    axpyv(&mut a.dxi_dw, &b.dxi_dw, k);
    a.op.extrapolated |= b.op.extrapolated;
    a
}

/// A plant family evaluated at one fixed design.
#[derive(Debug, Clone, Copy)]
pub struct PlantSlice<'a> {
    family: &'a PlantLpvFamily,
    x_p: PlantDesign,
}

impl PlantSlice<'_> {
    pub fn plant(&self) -> PlantDesign {
        self.x_p
    }
}

impl LpvSource for PlantSlice<'_> {
    fn eval(&self, w: f64) -> Result<LpvPoint> {
        self.family.eval_plant(&self.x_p, w)
    }

    fn span(&self) -> (f64, f64) {
        self.family.nodes[0].span()
    }

    fn labels(&self) -> &Labels {
        self.family.nodes[0].labels()
    }

    fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.family.fingerprint.as_bytes());
        h.update(self.x_p.c_s.to_le_bytes());
        h.update(self.x_p.c_d.to_le_bytes());
        hex::encode(h.finalize())
    }
}

/// Linearizes the surrogate on every `(c_s, c_d, w)` node and fits the family.
pub fn build_plant_family(
    surrogate: &Surrogate,
    cs: &[f64],
    cd: &[f64],
    winds: &[f64],
) -> Result<PlantLpvFamily> {
    let jobs: Vec<(f64, f64)> = cs
        .iter()
        .flat_map(|&a| cd.iter().map(move |&b| (a, b)))
        .collect();
    let nodes = jobs
        .par_iter()
        .map(|&(a, b)| {
            let x_p = PlantDesign { c_s: a, c_d: b };
            let samples = winds
                .iter()
                .map(|&w| surrogate.linearize(w, &x_p))
                .collect::<Result<Vec<(StateSpaceModel, OperatingPoint)>>>()?;
            LpvModel::build(samples)
        })
        .collect::<Result<Vec<_>>>()?;
    PlantLpvFamily::new(cs.to_vec(), cd.to_vec(), nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpv::default_wind_samples;
    use crate::trajectory::linspace;

    fn small_family() -> PlantLpvFamily {
        let s = Surrogate::reference();
        build_plant_family(
            &s,
            &linspace(36.0, 78.0, 7),
            &linspace(6.0, 24.0, 7),
            &default_wind_samples(),
        )
        .unwrap()
    }

    #[test]
    fn node_evaluation_is_exact() {
        let fam = small_family();
        let x_p = PlantDesign {
            c_s: fam.cs_axis()[2],
            c_d: fam.cd_axis()[5],
        };
        for w in [4.0, 12.0, 17.3] {
            let a = fam.eval_plant(&x_p, w).unwrap();
            let b = fam.node(2, 5).eval(w).unwrap();
            assert_eq!(a.model, b.model);
            assert_eq!(a.op.xi_o, b.op.xi_o);
        }
    }

    #[test]
    fn midpoint_close_to_direct_linearization() {
        let fam = small_family();
        let s = Surrogate::reference();
        let x_p = PlantDesign {
            c_s: 0.5 * (fam.cs_axis()[3] + fam.cs_axis()[4]),
            c_d: 0.5 * (fam.cd_axis()[1] + fam.cd_axis()[2]),
        };
        let pt = fam.eval_plant(&x_p, 12.0).unwrap();
        let (m, _) = s.linearize(12.0, &x_p).unwrap();
        let scale = m.a.abs().max();
        for (x, y) in pt.model.a.iter().zip(m.a.iter()) {
            assert!(
                (x - y).abs() <= 0.01 * y.abs().max(1e-6 * scale),
                "{x} vs {y}"
            );
        }
    }

    #[test]
    fn outside_hull_is_rejected() {
        let fam = small_family();
        let x_p = PlantDesign {
            c_s: 80.0,
            c_d: 10.0,
        };
        assert!(matches!(
            fam.eval_plant(&x_p, 10.0),
            Err(Error::OutOfHull { .. })
        ));
    }

    #[test]
    fn locate_cells() {
        let ax = [0.0, 1.0, 2.0];
        assert_eq!(locate(&ax, 0.0), (0, 0.0));
        assert_eq!(locate(&ax, 1.0), (1, 0.0));
        assert_eq!(locate(&ax, 2.0), (1, 1.0));
        assert_eq!(locate(&ax, 1.25), (1, 0.25));
    }
}
