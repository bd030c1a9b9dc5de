//! CSV time series and legacy ASCII VTK snapshots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::deviatoric_stress;
use crate::error::{Error, Result};
use crate::evolution::TimeSeries;
use crate::fields::{check_len, Model, State};

pub const CSV_HEADER: &str = "t,avg_von_mises,energy,diss_plast_cum,diss_dam_cum,amdp_step,amdp_cum";

const LOG_FLOOR: f64 = 1e-300;

/// CSV text of a series. `{:e}` prints the shortest round-trip digits,
/// so the output is exact and deterministic.
pub fn timeseries_csv(series: &TimeSeries) -> String {
    let mut s = String::with_capacity(64 * (series.records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in &series.records {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t,
            r.avg_von_mises,
            r.energy,
            r.diss_plast_cum,
            r.diss_dam_cum,
            r.amdp_step,
            r.amdp_cum
        );
    }
    s
}

pub fn write_timeseries_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    if series.records.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "empty time series",
        )));
    }
    fs::write(path, timeseries_csv(series))?;
    Ok(())
}

/// Legacy ASCII unstructured grid with ζ and u on the points and |π|,
/// |dev σ_el|, the residuum and its log on the cells.
pub fn vtk_snapshot(model: &Model, state: &State, residuum: &[f64], step: usize, t: f64) -> Result<String> {
    let mesh = &model.mesh;
    state.validate(mesh)?;
    check_len("residuum field", mesh.n_elements(), residuum.len())?;
    let np = mesh.n_nodes();
    let ne = mesh.n_elements();
    let mut s = String::with_capacity(80 * (np + ne));
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "step {step} t {t:e}");
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {np} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {ne} {}", 4 * ne);
    for tri in &mesh.elements {
        let _ = writeln!(s, "3 {} {} {}", tri[0], tri[1], tri[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("5\n");
    }

    let _ = writeln!(s, "POINT_DATA {np}");
    s.push_str("SCALARS zeta double 1\nLOOKUP_TABLE default\n");
    for z in &state.zeta {
        let _ = writeln!(s, "{z:e}");
    }
    s.push_str("VECTORS u double\n");
    for u in &state.u {
        let _ = writeln!(s, "{:e} {:e} 0", u[0], u[1]);
    }

    let _ = writeln!(s, "CELL_DATA {ne}");
    let mut scalars = |name: &str, values: &mut dyn Iterator<Item = f64>| {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(s, "{v:e}");
        }
    };
    scalars("pi_norm", &mut state.pi.iter().map(|p| p.norm()));
    scalars(
        "dev_stress_norm",
        &mut (0..ne).map(|e| deviatoric_stress(model, state, e).norm()),
    );
    scalars("residuum", &mut residuum.iter().copied());
    scalars(
        "log10_abs_residuum",
        &mut residuum.iter().map(|r| (r.abs() + LOG_FLOOR).log10()),
    );
    Ok(s)
}

pub fn write_vtk_snapshot(
    path: &Path,
    model: &Model,
    state: &State,
    residuum: &[f64],
    step: usize,
    t: f64,
) -> Result<()> {
    fs::write(path, vtk_snapshot(model, state, residuum, step, t)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::StepRecord;
    use crate::fields::LoadProgram;
    use crate::material::MaterialParams;
    use crate::mesh::Variant;

    fn model(n: usize) -> Model {
        Model::tension(n, MaterialParams::reference(), LoadProgram::reference(Variant::Symmetric)).unwrap()
    }

    fn declared(text: &str, keyword: &str) -> usize {
        text.lines()
            .find_map(|l| l.strip_prefix(keyword))
            .and_then(|rest| rest.split_whitespace().next())
            .and_then(|n| n.parse().ok())
            .unwrap()
    }

    #[test]
    fn single_cell_mesh_declares_five_points_four_cells() {
        let m = model(1);
        let s = State::virgin(&m.mesh);
        let text = vtk_snapshot(&m, &s, &[0.0; 4], 0, 0.0).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert_eq!(declared(&text, "POINTS "), 5);
        assert_eq!(declared(&text, "CELLS "), 4);
        assert_eq!(declared(&text, "CELL_TYPES "), 4);
    }

    #[test]
    fn virgin_state_fields() {
        let m = model(3);
        let s = State::virgin(&m.mesh);
        let ne = m.mesh.n_elements();
        let text = vtk_snapshot(&m, &s, &vec![0.0; ne], 0, 0.0).unwrap();
        let block = |name: &str, n: usize| -> Vec<f64> {
            let start = text.find(&format!("SCALARS {name} ")).unwrap();
            text[start..]
                .lines()
                .skip(2)
                .take(n)
                .map(|l| l.parse().unwrap())
                .collect()
        };
        assert!(block("zeta", m.mesh.n_nodes()).iter().all(|&z| z == 1.0));
        assert!(block("pi_norm", ne).iter().all(|&p| p == 0.0));
        assert!(block("log10_abs_residuum", ne).iter().all(|&p| p == -300.0));
        assert_eq!(declared(&text, "CELLS "), ne);
    }

    #[test]
    fn wrong_residuum_length_is_rejected() {
        let m = model(2);
        let s = State::virgin(&m.mesh);
        assert!(vtk_snapshot(&m, &s, &[0.0; 3], 0, 0.0).is_err());
    }

    #[test]
    fn csv_rows_round_trip() {
        let r = StepRecord {
            step: 1,
            t: 0.1,
            avg_von_mises: 1.0 / 3.0,
            energy: 2e-17,
            diss_plast_step: 0.0,
            diss_dam_step: 0.0,
            diss_plast_cum: 0.0,
            diss_dam_cum: 12345.678,
            amdp_step: -1e-300,
            amdp_cum: 7.0,
            balance: crate::diagnostics::StepBalance { lhs: 0.0, rhs: 0.0 },
            plastic: Default::default(),
            damage_iterations: 0,
            damage_kkt_residual: 0.0,
        };
        let csv = timeseries_csv(&TimeSeries { records: vec![r] });
        let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![0.1, 1.0 / 3.0, 2e-17, 0.0, 12345.678, -1e-300, 7.0]);
    }
}
