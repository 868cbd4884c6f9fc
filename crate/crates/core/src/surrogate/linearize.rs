use nalgebra::{DMatrix, DVector};

use super::{
    PlantDesign, Surrogate, INPUT_LABELS, N_INPUTS, N_OUTPUTS, N_STATES, OUTPUT_LABELS,
    STATE_LABELS,
};
use crate::error::{Error, Result};
use crate::lti::{rk4, Labels, OperatingPoint, StateSpaceModel};
use crate::trajectory::Trajectory;

/// Central-difference step `max(rel·|z|, floor)` per variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizeOptions {
    pub rel_step: f64,
    pub abs_floor: f64,
}

impl Default for LinearizeOptions {
    fn default() -> Self {
        Self {
            rel_step: 1e-6,
            abs_floor: 1e-8,
        }
    }
}

pub fn surrogate_labels() -> Labels {
    let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
    Labels {
        states: own(&STATE_LABELS),
        inputs: own(&INPUT_LABELS),
        outputs: own(&OUTPUT_LABELS),
    }
}

impl Surrogate {
    /// Trim at `(w, x_p)` and linearize about the result.
    pub fn linearize(
        &self,
        w: f64,
        x_p: &PlantDesign,
    ) -> Result<(StateSpaceModel, OperatingPoint)> {
        self.linearize_with(w, x_p, LinearizeOptions::default())
    }

    pub fn linearize_with(
        &self,
        w: f64,
        x_p: &PlantDesign,
        opts: LinearizeOptions,
    ) -> Result<(StateSpaceModel, OperatingPoint)> {
        let op = self.trim(w, x_p)?;
        let model = self.jacobians(&op, x_p, opts)?;
        Ok((model, op))
    }

    /// Finite-difference Jacobians of dynamics and outputs about `op`.
    pub fn jacobians(
        &self,
        op: &OperatingPoint,
        x_p: &PlantDesign,
        opts: LinearizeOptions,
    ) -> Result<StateSpaceModel> {
        let xi: Vec<f64> = op.xi_o.iter().copied().collect();
        let u: Vec<f64> = op.u_o.iter().copied().collect();
        let w = op.w;
        let eval = |xi: &[f64], u: &[f64]| -> Result<([f64; 5], [f64; 5])> {
            Ok((self.dynamics(xi, u, w, x_p)?, self.outputs(xi, u, w, x_p)?))
        };
        let step = |z: f64| (opts.rel_step * z.abs()).max(opts.abs_floor);

        let mut a = DMatrix::zeros(N_STATES, N_STATES);
        let mut c = DMatrix::zeros(N_OUTPUTS, N_STATES);
        for j in 0..N_STATES {
            let h = step(xi[j]);
            let (mut xp, mut xm) = (xi.clone(), xi.clone());
            xp[j] += h;
            xm[j] -= h;
            let ((fp, yp), (fm, ym)) = (eval(&xp, &u)?, eval(&xm, &u)?);
            let dh = xp[j] - xm[j];
            for i in 0..N_STATES {
                a[(i, j)] = (fp[i] - fm[i]) / dh;
            }
            for i in 0..N_OUTPUTS {
                c[(i, j)] = (yp[i] - ym[i]) / dh;
            }
        }
        let mut b = DMatrix::zeros(N_STATES, N_INPUTS);
        let mut d = DMatrix::zeros(N_OUTPUTS, N_INPUTS);
        for j in 0..N_INPUTS {
            let h = step(u[j]);
            let (mut up, mut um) = (u.clone(), u.clone());
            up[j] += h;
            um[j] -= h;
            let ((fp, yp), (fm, ym)) = (eval(&xi, &up)?, eval(&xi, &um)?);
            let dh = up[j] - um[j];
            for i in 0..N_STATES {
                b[(i, j)] = (fp[i] - fm[i]) / dh;
            }
            for i in 0..N_OUTPUTS {
                d[(i, j)] = (yp[i] - ym[i]) / dh;
            }
        }
        let g = DVector::from_row_slice(&self.outputs(&xi, &u, w, x_p)?);
        StateSpaceModel::new(a, b, c, d, g, surrogate_labels())
    }

    /// Nonlinear response under wind `wind` and absolute inputs `u`, RK4 on `grid`.
    pub fn simulate_nonlinear(
        &self,
        wind: &Trajectory,
        u: &Trajectory,
        xi0: &[f64],
        x_p: &PlantDesign,
        grid: &[f64],
    ) -> Result<Trajectory> {
        if xi0.len() != N_STATES || u.width() != N_INPUTS || wind.width() != 1 {
            return Err(Error::Dimension(
                "expected 5 initial states, 2 input channels and 1 wind channel".into(),
            ));
        }
        let mut uu = [0.0; N_INPUTS];
        let mut ww = [0.0];
        let rows = rk4(grid, xi0, |t, x, dx| {
            u.sample_into(t, &mut uu);
            wind.sample_into(t, &mut ww);
            let f = self.dynamics(x, &uu, ww[0], x_p).map_err(|e| match e {
                Error::Domain(_) => Error::Divergence { time: t },
                e => e,
            })?;
            dx.copy_from_slice(&f);
            Ok(())
        })?;
        Trajectory::new(grid.to_vec(), rows, surrogate_labels().states)
    }

    /// Input schedule following the trim curve of the sampled wind.
    pub fn trim_schedule(&self, wind: &Trajectory, x_p: &PlantDesign) -> Result<Trajectory> {
        let mut rows = Vec::with_capacity(wind.len());
        for r in wind.rows() {
            let op = self.trim(r[0], x_p)?;
            rows.push(op.u_o.iter().copied().collect());
        }
        Trajectory::new(
            wind.times().to_vec(),
            rows,
            INPUT_LABELS.iter().map(|s| s.to_string()).collect(),
        )
    }
}
