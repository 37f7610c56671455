//! Legacy ASCII VTK export of nodal fields on a tetrahedral mesh.

use std::io::{self, Write};

use dbcontrol_core::mesh::Mesh;

const VTK_TETRA: u8 = 10;

/// Writes `mesh` as an unstructured grid with the given point data.
pub fn write_vtk(mesh: &Mesh, fields: &[(&str, &[f64])], mut out: impl Write) -> io::Result<()> {
    for (name, values) in fields {
        if values.len() != mesh.n_vertices() || name.contains(char::is_whitespace) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("field {name:?} does not match the mesh"),
            ));
        }
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "dbcontrol level {}", mesh.level())?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_vertices())?;
    for [x, y, z] in mesh.vertices() {
        writeln!(out, "{x:e} {y:e} {z:e}")?;
    }
    writeln!(out, "CELLS {} {}", mesh.n_tets(), 5 * mesh.n_tets())?;
    for [a, b, c, d] in mesh.tets() {
        writeln!(out, "4 {a} {b} {c} {d}")?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.n_tets())?;
    for _ in 0..mesh.n_tets() {
        writeln!(out, "{VTK_TETRA}")?;
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {}", mesh.n_vertices())?;
        for (name, values) in fields {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in *values {
                writeln!(out, "{v:e}")?;
            }
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use dbcontrol_core::mesh::{build_prism_mesh, HalfSpaceDomain};

    #[test]
    fn cube_export_layout() {
        let mesh = build_prism_mesh(&HalfSpaceDomain::benchmark(std::f64::consts::FRAC_PI_2).unwrap(), 0)
            .unwrap();
        let u = vec![1.0; 8];
        let mut out = Vec::new();
        write_vtk(&mesh, &[("u", &u)], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("POINTS 8 double"));
        assert!(text.contains("CELLS 6 30"));
        assert_eq!(text.lines().filter(|l| *l == "10").count(), 6);
        assert!(text.contains("SCALARS u double 1"));
        assert!(write_vtk(&mesh, &[("u", &u[..3])], Vec::new()).is_err());
    }
}
