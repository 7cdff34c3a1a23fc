use std::io::{self, Write};

use super::{SparseTransitionMatrix, Trajectory};

/// Matrix Market coordinate format, 1-based indices, clipped rows listed in a comment.
pub fn write_coordinate<W: Write>(mat: &SparseTransitionMatrix, mut out: W) -> io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "% base={} probs={}", mat.base(), mat.probs())?;
    let clipped = mat.clipped_rows();
    if !clipped.is_empty() {
        let list: Vec<String> = clipped.iter().map(|r| (r + 1).to_string()).collect();
        writeln!(out, "% clipped_rows={}", list.join(","))?;
    }
    writeln!(out, "{} {} {}", mat.dim(), mat.dim(), mat.nnz())?;
    for row in mat.rows() {
        for &(c, p) in &row.entries {
            writeln!(out, "{} {} {:.16e}", row.source + 1, c + 1, p)?;
        }
    }
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "step,state")?;
    for (i, s) in traj.states.iter().enumerate() {
        writeln!(out, "{i},{s}")?;
    }
    Ok(())
}
