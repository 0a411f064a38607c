//! Binary field snapshots: header (magic, version, dim, per-axis bounds and
//! counts, eps, t) followed by the complex samples as little-endian 64-bit
//! float pairs, row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::grid::{GridField, UniformGrid};
use crate::{CoreError, Result};

const MAGIC: &[u8; 8] = b"GWTSNAP\0";
const VERSION: u32 = 1;

pub fn save_snapshot(path: &Path, field: &GridField, eps: f64, t: f64) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    let grid = field.grid();
    out.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for ax in grid.axes() {
        out.write_all(&ax.a.to_le_bytes())?;
        out.write_all(&ax.b.to_le_bytes())?;
        out.write_all(&(ax.n as u64).to_le_bytes())?;
    }
    out.write_all(&eps.to_le_bytes())?;
    out.write_all(&t.to_le_bytes())?;
    for z in field.values() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<(GridField, f64, f64)> {
    let mut inp = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    inp.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CoreError::SnapshotFormat("bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    inp.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(CoreError::SnapshotFormat(format!(
            "unsupported version {version}"
        )));
    }
    inp.read_exact(&mut u32buf)?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    if dim == 0 || dim > crate::grid::MAX_DIM {
        return Err(CoreError::SnapshotFormat(format!("bad dimension {dim}")));
    }
    let mut f64buf = [0u8; 8];
    let mut read_f64 = |inp: &mut BufReader<File>| -> Result<f64> {
        inp.read_exact(&mut f64buf)?;
        Ok(f64::from_le_bytes(f64buf))
    };
    let mut bounds = Vec::with_capacity(dim);
    let mut counts = Vec::with_capacity(dim);
    for _ in 0..dim {
        let a = read_f64(&mut inp)?;
        let b = read_f64(&mut inp)?;
        let mut u64buf = [0u8; 8];
        inp.read_exact(&mut u64buf)?;
        counts.push(u64::from_le_bytes(u64buf) as usize);
        bounds.push((a, b));
    }
    let eps = read_f64(&mut inp)?;
    let t = read_f64(&mut inp)?;
    let grid = UniformGrid::new(&bounds, &counts)?;
    let total = grid.num_nodes();
    let mut raw = vec![0u8; total * 16];
    inp.read_exact(&mut raw)?;
    let mut trailing = [0u8; 1];
    if inp.read(&mut trailing)? != 0 {
        return Err(CoreError::SnapshotFormat("trailing bytes".into()));
    }
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..16].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Ok((GridField::new(grid, values)?, eps, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn roundtrip_is_bitwise() {
        let grid = make_grid(&[(-1.0, 2.0), (0.0, 4.0)], &[8, 6]).unwrap();
        let field = GridField::from_fn(grid, |x| Complex64::new(x[0] * 1.7, x[1] - 0.3));
        let dir = std::env::temp_dir().join("gwt_snapshot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.snap");
        save_snapshot(&path, &field, 0.0625, 0.5).unwrap();
        let (loaded, eps, t) = load_snapshot(&path).unwrap();
        assert_eq!(eps, 0.0625);
        assert_eq!(t, 0.5);
        assert_eq!(loaded.grid(), field.grid());
        for (a, b) in loaded.values().iter().zip(field.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn rejects_corrupt_header() {
        let dir = std::env::temp_dir().join("gwt_snapshot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.snap");
        std::fs::write(&path, b"NOTASNAPxxxxyyyyzzzz").unwrap();
        assert!(load_snapshot(&path).is_err());
        std::fs::remove_file(&path).unwrap();
    }
}
