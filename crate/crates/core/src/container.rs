//! Binary operator container: fixed little-endian header carrying the grid
//! parameters, canonical mode-order hash and the hermitian flag, followed by
//! the dense matrix entries. Import rejects any header mismatch against the
//! target grid. A CSV debug dump accompanies the format.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{build_grid, GridSpec};
use crate::kernel::KernelOperator;
use crate::report::CsvWriter;

const MAGIC: &[u8; 8] = b"FBOXOP01";

pub fn export_operator(q: &KernelOperator, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let g = q.grid();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(MAGIC)?;
    f.write_all(&(g.d() as u64).to_le_bytes())?;
    f.write_all(&(g.modes_per_dim() as u64).to_le_bytes())?;
    f.write_all(&g.box_length().to_le_bytes())?;
    f.write_all(&g.mu().to_le_bytes())?;
    f.write_all(&g.fermi_floor().to_le_bytes())?;
    f.write_all(&g.mode_order_hash().to_le_bytes())?;
    f.write_all(&[q.hermitian() as u8])?;
    let n = q.n();
    for j in 0..n {
        for i in 0..n {
            let z = q.data()[(i, j)];
            f.write_all(&z.re.to_le_bytes())?;
            f.write_all(&z.im.to_le_bytes())?;
        }
    }
    f.flush()?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Import an operator, rebuilding (and verifying) its grid from the header.
pub fn import_operator(path: &Path) -> Result<KernelOperator> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Container(format!("bad magic in {}", path.display())));
    }
    let d = read_u64(&mut f)? as usize;
    let m = read_u64(&mut f)? as usize;
    let l = read_f64(&mut f)?;
    let mu = read_f64(&mut f)?;
    let floor = read_f64(&mut f)?;
    let hash = read_u64(&mut f)?;
    let mut herm = [0u8; 1];
    f.read_exact(&mut herm)?;
    let grid = build_grid(d, m, l, mu, floor)?;
    if grid.mode_order_hash() != hash {
        return Err(Error::Container(
            "mode-order hash mismatch: file was written with a different enumeration".into(),
        ));
    }
    let n = grid.n_modes();
    let mut data = Mat::<C64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let re = read_f64(&mut f)?;
            let im = read_f64(&mut f)?;
            data[(i, j)] = C64::new(re, im);
        }
    }
    KernelOperator::new(grid, data, herm[0] != 0)
}

/// Import verifying the grid matches an expected one.
pub fn import_operator_for(grid: &Arc<GridSpec>, path: &Path) -> Result<KernelOperator> {
    let q = import_operator(path)?;
    grid.check_same(q.grid())?;
    Ok(q)
}

/// Human-readable dump: one row per entry, canonical order.
pub fn dump_operator_csv(q: &KernelOperator, path: &Path) -> Result<()> {
    let mut w = CsvWriter::create(path, &["row", "col", "re", "im"])?;
    let n = q.n();
    for i in 0..n {
        for j in 0..n {
            let z = q.data()[(i, j)];
            w.field_usize(i);
            w.field_usize(j);
            w.field_f64(z.re);
            w.field_f64(z.im);
            w.end_row()?;
        }
    }
    w.finish()
}
