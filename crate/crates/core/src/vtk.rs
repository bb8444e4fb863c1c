//! Legacy ASCII VTK output of triangle meshes with cell and vertex data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Named scalar field.
pub type Field<'a> = (&'a str, &'a [f64]);

pub fn write_vtk(out: &mut impl Write, mesh: &Mesh, cell_data: &[Field<'_>], point_data: &[Field<'_>]) -> Result<()> {
    let (nv, nc) = (mesh.num_vertices(), mesh.num_cells());
    for (name, v) in cell_data {
        if v.len() != nc {
            return Err(Error::InvalidParameter(format!("cell field '{name}' has {} values for {nc} cells", v.len())));
        }
    }
    for (name, v) in point_data {
        if v.len() != nv {
            return Err(Error::InvalidParameter(format!(
                "point field '{name}' has {} values for {nv} vertices",
                v.len()
            )));
        }
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "tr-afem mesh generation {}", mesh.generation())?;
    writeln!(out, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nv} double")?;
    for p in mesh.vertices() {
        writeln!(out, "{:e} {:e} 0", p[0], p[1])?;
    }
    writeln!(out, "CELLS {nc} {}", 4 * nc)?;
    for c in mesh.cells() {
        writeln!(out, "3 {} {} {}", c[0], c[1], c[2])?;
    }
    writeln!(out, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(out, "5")?;
    }
    write_block(out, "CELL_DATA", nc, cell_data)?;
    write_block(out, "POINT_DATA", nv, point_data)?;
    Ok(())
}

fn write_block(out: &mut impl Write, kind: &str, n: usize, fields: &[Field<'_>]) -> Result<()> {
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(out, "{kind} {n}")?;
    for (name, values) in fields {
        writeln!(out, "SCALARS {} double 1\nLOOKUP_TABLE default", name.replace(char::is_whitespace, "_"))?;
        for v in *values {
            writeln!(out, "{v:e}")?;
        }
    }
    Ok(())
}

pub fn write_vtk_file(path: &Path, mesh: &Mesh, cell_data: &[Field<'_>], point_data: &[Field<'_>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vtk(&mut w, mesh, cell_data, point_data)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{create_rect_mesh, BoundaryTag, RectGrid};

    #[test]
    fn layout() {
        let m = create_rect_mesh(&RectGrid::unit(1, 1), None, &|_, _| BoundaryTag::Dirichlet).unwrap();
        let mut buf = Vec::new();
        write_vtk(&mut buf, &m, &[("z", &[1.0, 2.0])], &[("u", &[0.0; 4])]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("POINTS 4 double"));
        assert!(s.contains("CELLS 2 8"));
        assert!(s.contains("CELL_DATA 2\nSCALARS z double 1"));
        assert!(s.contains("POINT_DATA 4\nSCALARS u double 1"));
        assert!(write_vtk(&mut Vec::new(), &m, &[("z", &[1.0])], &[]).is_err());
    }
}
