//! Plain-text exports: CSV with a one-line header and 17 significant digits.

use crate::arc1d::{ArcProblem, ArcSolution, QuantumAction};
use crate::caustic::Caustic;
use crate::classical::{CausticPointCloud, Trajectory};
use crate::error::{Error, Result};
use crate::oracle::ActionSurface;
use std::fmt::Write;

/// Shortest form that still carries 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_optional(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

/// A CSV table built row by row.
#[derive(Debug, Clone)]
pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { columns: header.len(), text: format!("{}\n", header.join(",")) }
    }

    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        if cells.len() != self.columns {
            return Err(Error::InvalidArgument(format!("CSV row has {} cells, header has {}", cells.len(), self.columns)));
        }
        let _ = writeln!(self.text, "{}", cells.join(","));
        Ok(())
    }

    pub fn values(&mut self, values: &[f64]) -> Result<()> {
        let cells: Vec<String> = values.iter().map(|&v| format_value(v)).collect();
        self.row(&cells)
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let mut csv = Csv::new(&["t", "x", "y", "px", "py"]);
    for s in &trajectory.samples {
        csv.values(&[s.t, s.state.q.x, s.state.q.y, s.state.p.x, s.state.p.y]).expect("five columns");
    }
    csv.finish()
}

pub fn cloud_csv(cloud: &CausticPointCloud) -> String {
    let mut csv = Csv::new(&["x", "y"]);
    for c in &cloud.points {
        csv.values(&[c.q.x, c.q.y]).expect("two columns");
    }
    csv.finish()
}

/// Each fitted arc sampled at `samples` points between its vertices.
pub fn arcs_csv(caustic: &Caustic, samples: usize) -> String {
    let mut csv = Csv::new(&["arc", "parameter", "x", "y"]);
    let samples = samples.max(2);
    for arc in &caustic.arcs {
        for i in 0..samples {
            let t = arc.domain.0 + arc.length() * i as f64 / (samples - 1) as f64;
            let q = arc.point(t);
            csv.row(&[arc.index.to_string(), format_value(t), format_value(q.x), format_value(q.y)]).expect("four columns");
        }
    }
    csv.finish()
}

pub fn vertices_csv(caustic: &Caustic) -> String {
    let mut csv = Csv::new(&["vertex", "x", "y", "residual"]);
    for v in &caustic.vertices {
        csv.row(&[v.index.to_string(), format_value(v.position.x), format_value(v.position.y), format_value(v.residual)])
            .expect("four columns");
    }
    csv.finish()
}

/// Everything along one arc on the solver grid. `oracle` is the matrix
/// eigenstate on the same grid, when available.
pub fn arc_csv(problem: &ArcProblem, solution: &ArcSolution, action: &QuantumAction, oracle: Option<&[f64]>) -> Result<String> {
    let n = problem.grid.len();
    if oracle.is_some_and(|o| o.len() != n) {
        return Err(Error::InvalidArgument("oracle profile does not match the arc grid".into()));
    }
    let mut csv = Csv::new(&["parameter", "x", "y", "U", "g", "psi", "psi_oracle", "X", "Y"]);
    for i in 0..n {
        let q = problem.arc.point(problem.grid[i]);
        csv.row(&[
            format_value(problem.grid[i]),
            format_value(q.x),
            format_value(q.y),
            format_value(problem.u[i]),
            format_value(problem.g[i]),
            format_value(solution.psi[i]),
            format_optional(oracle.map(|o| o[i])),
            format_value(action.x[i]),
            format_value(action.y[i]),
        ])?;
    }
    Ok(csv.finish())
}

/// Long-format grid `x, y, value`; cells outside `Ω_F` have an empty value.
pub fn surface_csv(surface: &ActionSurface, values: &[Option<f64>]) -> Result<String> {
    let (nx, ny) = (surface.xs.len(), surface.ys.len());
    if values.len() != nx * ny {
        return Err(Error::InvalidArgument("surface values do not match the grid".into()));
    }
    let mut csv = Csv::new(&["x", "y", "value"]);
    for (r, &y) in surface.ys.iter().enumerate() {
        for (c, &x) in surface.xs.iter().enumerate() {
            csv.row(&[format_value(x), format_value(y), format_optional(values[r * nx + c])])?;
        }
    }
    Ok(csv.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, -5.182655e-7, 1e300, f64::MIN_POSITIVE, 2.0f64.sqrt()] {
            let s = format_value(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn rows_must_match_header() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.values(&[1.0, 2.0]).unwrap();
        assert!(csv.values(&[1.0]).is_err());
        let text = csv.finish();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next(), Some("a,b"));
    }
}
