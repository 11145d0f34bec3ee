use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ScalarField, SpaceTimeGrid, MAX_DIM};

const MAGIC: &[u8; 8] = b"FDLSNAP1";

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.bytes.len() {
            return Err(Error::Format("truncated snapshot".into()));
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Binary record: magic, header, then little-endian node values in storage order.
pub fn encode_snapshot(field: &ScalarField) -> Vec<u8> {
    let g = &field.grid;
    let mut out = Vec::with_capacity(128 + 8 * field.values.len());
    out.extend_from_slice(MAGIC);
    put_u64(&mut out, field.name.len() as u64);
    out.extend_from_slice(field.name.as_bytes());
    put_u64(&mut out, g.n as u64);
    for a in 0..g.n {
        put_u64(&mut out, g.cells[a] as u64);
        put_f64(&mut out, g.lo[a]);
        put_f64(&mut out, g.hi[a]);
    }
    put_f64(&mut out, g.t_start);
    put_f64(&mut out, g.t_end);
    put_u64(&mut out, g.steps as u64);
    put_f64(&mut out, g.h);
    put_f64(&mut out, g.dt);
    out.push(field.nonnegative as u8);
    put_u64(&mut out, field.values.len() as u64);
    for v in &field.values {
        put_f64(&mut out, *v);
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<ScalarField> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Format("bad snapshot magic".into()));
    }
    let name_len = r.u64()? as usize;
    let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|e| Error::Format(e.to_string()))?;
    let n = r.u64()? as usize;
    if n == 0 || n > MAX_DIM {
        return Err(Error::Format(format!("bad dimension {n}")));
    }
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    let mut cells = vec![0; n];
    for a in 0..n {
        cells[a] = r.u64()? as usize;
        lo[a] = r.f64()?;
        hi[a] = r.f64()?;
    }
    let t_start = r.f64()?;
    let t_end = r.f64()?;
    let steps = r.u64()? as usize;
    let h = r.f64()?;
    let dt = r.f64()?;
    let mut grid = SpaceTimeGrid::new(&lo, &hi, &cells, (t_start, t_end), steps)?;
    grid.h = h;
    grid.dt = dt;
    let nonnegative = r.take(1)?[0] != 0;
    let count = r.u64()? as usize;
    if count != grid.node_count() {
        return Err(Error::Format(format!("{count} values for {} nodes", grid.node_count())));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(r.f64()?);
    }
    let mut f = ScalarField::new(grid, values, &name)?;
    if nonnegative {
        f = ScalarField::nonnegative(grid, f.values, &name)?;
    }
    Ok(f)
}

/// CSV view: `#` header lines, then one row per time slice (t, node values).
pub fn snapshot_csv(field: &ScalarField) -> String {
    let g = &field.grid;
    let mut s = String::new();
    s.push_str(&format!("# name={}\n# n={}\n", field.name, g.n));
    let nodes: Vec<String> = (0..g.n).map(|a| g.axis_nodes(a).to_string()).collect();
    s.push_str(&format!("# nodes={}\n", nodes.join("x")));
    let bx: Vec<String> = (0..g.n).map(|a| format!("[{:e},{:e}]", g.lo[a], g.hi[a])).collect();
    s.push_str(&format!("# box={}\n", bx.join("x")));
    s.push_str(&format!("# t_range=[{:e},{:e}]\n# h={:e}\n# dt={:e}\n", g.t_start, g.t_end, g.h, g.dt));
    for k in 0..g.time_nodes() {
        let row: Vec<String> = field.slice(k).iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&format!("{:e},{}\n", g.time(k), row.join(",")));
    }
    s
}

pub fn write_snapshot(field: &ScalarField, bin_path: &Path, csv_path: Option<&Path>) -> Result<()> {
    let mut file = fs::File::create(bin_path)?;
    file.write_all(&encode_snapshot(field))?;
    if let Some(p) = csv_path {
        fs::write(p, snapshot_csv(field))?;
    }
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<ScalarField> {
    decode_snapshot(&fs::read(path)?)
}

/// Every `stride`-th time slice; `stride` must divide the step count.
pub fn time_subsample(field: &ScalarField, stride: usize) -> Result<ScalarField> {
    let g = &field.grid;
    if stride == 0 || g.steps % stride != 0 {
        return Err(Error::InvalidGrid(format!("stride {stride} does not divide {} steps", g.steps)));
    }
    let mut sub = *g;
    sub.steps = g.steps / stride;
    sub.dt = g.dt * stride as f64;
    let mut values = Vec::with_capacity(sub.node_count());
    for k in (0..g.time_nodes()).step_by(stride) {
        values.extend_from_slice(field.slice(k));
    }
    let mut f = ScalarField::new(sub, values, &field.name)?;
    f.nonnegative = field.nonnegative;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let g = SpaceTimeGrid::new(&[-1.0, 0.0], &[1.0, 0.5], &[8, 2], (0.25, 1.0), 3).unwrap();
        let f = ScalarField::from_fn(g, "u", |x, t| (x[0] * 1.3 + x[1] * t).exp());
        let back = decode_snapshot(&encode_snapshot(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_has_one_row_per_slice() {
        let g = SpaceTimeGrid::cube(1, 1.0, 4, (0.0, 1.0), 2).unwrap();
        let f = ScalarField::constant(g, 1.5, "c");
        let csv = snapshot_csv(&f);
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].split(',').count(), 6);
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode_snapshot(b"NOTASNAP").is_err());
        let g = SpaceTimeGrid::cube(1, 1.0, 4, (0.0, 1.0), 2).unwrap();
        let bytes = encode_snapshot(&ScalarField::zeros(g, "z"));
        assert!(decode_snapshot(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn subsample_keeps_endpoints() {
        let g = SpaceTimeGrid::cube(1, 1.0, 2, (0.0, 1.0), 4).unwrap();
        let f = ScalarField::from_fn(g, "t", |_, t| t);
        let s = time_subsample(&f, 2).unwrap();
        assert_eq!(s.grid.steps, 2);
        assert_eq!(s.at(2, 0), 1.0);
        assert!(time_subsample(&f, 3).is_err());
    }
}
