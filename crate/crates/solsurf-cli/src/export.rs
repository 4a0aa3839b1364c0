//! Mesh export (OBJ, binary PLY, CSV) and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use solsurf::geometry::Immersion3;

use crate::config::MeshFormat;
use crate::CliError;

/// Triangulated mesh over the kept grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    /// Grid node index of every vertex, in row-major node order.
    pub nodes: Vec<usize>,
    /// Vertex index triples with counter-clockwise (u, v) winding.
    pub triangles: Vec<[usize; 3]>,
}

/// Builds the mesh: every grid quad splits into two triangles; nodes with
/// `drop[k]` or non-finite coordinates are removed. A quad with one removed
/// corner keeps the triangle of its other three corners, and the diamond of
/// a removed node's four edge neighbours is filled with two triangles.
pub fn triangulate(surface: &Immersion3, drop: Option<&[bool]>) -> Mesh {
    let g = surface.grid;
    let keep: Vec<bool> = (0..g.len())
        .map(|k| surface.points[k].iter().all(|x| x.is_finite()) && !drop.is_some_and(|d| d[k]))
        .collect();
    let mut vid = vec![usize::MAX; g.len()];
    let mut nodes = Vec::new();
    for k in 0..g.len() {
        if keep[k] {
            vid[k] = nodes.len();
            nodes.push(k);
        }
    }
    let mut triangles = Vec::new();
    for j in 0..g.nv - 1 {
        for i in 0..g.nu - 1 {
            let q = [g.idx(i, j), g.idx(i + 1, j), g.idx(i + 1, j + 1), g.idx(i, j + 1)];
            let kept: Vec<usize> = q.iter().copied().filter(|&k| keep[k]).collect();
            match kept.len() {
                4 => {
                    triangles.push([vid[q[0]], vid[q[1]], vid[q[2]]]);
                    triangles.push([vid[q[0]], vid[q[2]], vid[q[3]]]);
                }
                3 => triangles.push([vid[kept[0]], vid[kept[1]], vid[kept[2]]]),
                _ => {}
            }
        }
    }
    for j in 1..g.nv.saturating_sub(1) {
        for i in 1..g.nu.saturating_sub(1) {
            if keep[g.idx(i, j)] {
                continue;
            }
            let d = [g.idx(i, j - 1), g.idx(i + 1, j), g.idx(i, j + 1), g.idx(i - 1, j)];
            if d.iter().all(|&k| keep[k]) {
                triangles.push([vid[d[0]], vid[d[1]], vid[d[2]]]);
                triangles.push([vid[d[0]], vid[d[2]], vid[d[3]]]);
            }
        }
    }
    Mesh { nodes, triangles }
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn encode(surface: &Immersion3, mesh: &Mesh, format: MeshFormat) -> Vec<u8> {
    let g = surface.grid;
    match format {
        MeshFormat::Obj => {
            let mut s = String::new();
            for &k in &mesh.nodes {
                let p = surface.points[k];
                let _ = writeln!(s, "v {} {} {}", num(p.x), num(p.y), num(p.z));
            }
            for t in &mesh.triangles {
                let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
            }
            s.into_bytes()
        }
        MeshFormat::Ply => {
            let mut out = format!(
                "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
                mesh.nodes.len(),
                mesh.triangles.len()
            )
            .into_bytes();
            for &k in &mesh.nodes {
                for c in surface.points[k].iter() {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
            for t in &mesh.triangles {
                out.push(3);
                for &v in t {
                    out.extend_from_slice(&(v as i32).to_le_bytes());
                }
            }
            out
        }
        MeshFormat::Csv => {
            let mut s = String::from("u,v,x1,x2,x3\n");
            for &k in &mesh.nodes {
                let (i, j) = g.ij(k);
                let p = surface.points[k];
                let _ = writeln!(s, "{},{},{},{},{}", num(g.u(i)), num(g.v(j)), num(p.x), num(p.y), num(p.z));
            }
            s.into_bytes()
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().ok_or_else(|| CliError::Io(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let res = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    res.map_err(io)
}
