use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::numerics::{Grid, GridFunction, Topology};
use crate::{Error, Real, Result};

const MAGIC: &[u8; 8] = b"TRAMSNAP";
const VERSION: u32 = 1;

/// States sampled at equidistant times; column `k` of `data` is the stacked
/// state at `times[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSet<T: Real> {
    grid: Grid<T>,
    components: usize,
    times: Vec<T>,
    data: DMatrix<T>,
    model_tag: String,
}

impl<T: Real> SnapshotSet<T> {
    pub fn new(grid: Grid<T>, components: usize, times: Vec<T>, data: DMatrix<T>, model_tag: impl Into<String>) -> Result<Self> {
        if data.nrows() != components * grid.n() || data.ncols() != times.len() || times.is_empty() {
            return Err(Error::Dimension(format!(
                "snapshot data is {}x{}, expected {}x{}",
                data.nrows(),
                data.ncols(),
                components * grid.n(),
                times.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("snapshot times must be strictly increasing".into()));
        }
        Ok(Self { grid, components, times, data, model_tag: model_tag.into() })
    }

    /// Builds a set from a list of stacked states.
    pub fn from_states(grid: Grid<T>, components: usize, times: Vec<T>, states: &[Vec<T>], model_tag: impl Into<String>) -> Result<Self> {
        let rows = components * grid.n();
        if states.iter().any(|s| s.len() != rows) {
            return Err(Error::Dimension("state length does not match the grid".into()));
        }
        let data = DMatrix::from_fn(rows, states.len(), |i, j| states[j][i]);
        Self::new(grid, components, times, data, model_tag)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn data(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    /// Number of snapshots.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Spacing of the sample times (zero for a single snapshot).
    pub fn tau(&self) -> T {
        if self.times.len() < 2 {
            T::zero()
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn column(&self, k: usize) -> &[T] {
        let rows = self.data.nrows();
        &self.data.as_slice()[k * rows..(k + 1) * rows]
    }

    pub fn state(&self, k: usize) -> GridFunction<T> {
        GridFunction::new(self.grid, self.components, DVector::from_column_slice(self.column(k))).expect("consistent shape")
    }

    /// Trapezoid-in-time norm of the trajectory.
    pub fn norm(&self) -> T {
        trajectory_norm(&self.grid, &self.data, &self.times)
    }

    pub fn with_data(&self, data: DMatrix<T>, model_tag: impl Into<String>) -> Result<Self> {
        Self::new(self.grid, self.components, self.times.clone(), data, model_tag)
    }

    /// Binary layout (little endian): magic, version u32, components u32,
    /// n u32, m u64, dxi f64, tau f64, tag length u32 + UTF-8 tag, then the
    /// grid extension fields xi0 f64, length f64, topology u8, first time
    /// f64, followed by the c·n·m values in column-major order as f64.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        write_header(&mut w, self.components, &self.grid, self.len(), self.tau(), &self.model_tag, self.times[0])?;
        write_values(&mut w, self.data.as_slice())?;
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let h = read_header::<T, _>(&mut r)?;
        let values = read_values::<T, _>(&mut r, h.components * h.grid.n() * h.m)?;
        let times = (0..h.m).map(|k| h.t0 + T::from_usize_lossy(k) * h.tau).collect();
        let data = DMatrix::from_vec(h.components * h.grid.n(), h.m, values);
        Self::new(h.grid, h.components, times, data, h.tag)
    }

    /// One row per time; columns are `t` followed by every node of every component.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        write!(w, "t")?;
        for c in 0..self.components {
            for k in 0..self.grid.n() {
                if self.components == 1 {
                    write!(w, ",x{k}")?;
                } else {
                    write!(w, ",c{c}_x{k}")?;
                }
            }
        }
        writeln!(w)?;
        for (j, t) in self.times.iter().enumerate() {
            write!(w, "{:.17e}", t.as_f64())?;
            for v in self.column(j) {
                write!(w, ",{:.17e}", v.as_f64())?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `sqrt(Σ_k w_k ⟨e_k, e_k⟩)` with trapezoid weights in time.
pub fn trajectory_norm<T: Real>(grid: &Grid<T>, data: &DMatrix<T>, times: &[T]) -> T {
    let m = data.ncols();
    let rows = data.nrows();
    let mut total = T::zero();
    for j in 0..m {
        let col = &data.as_slice()[j * rows..(j + 1) * rows];
        total += time_weight(times, j) * grid.dot(col, col);
    }
    total.sqrt()
}

/// Trapezoid weight of sample `j`.
pub fn time_weight<T: Real>(times: &[T], j: usize) -> T {
    let m = times.len();
    if m == 1 {
        return T::one();
    }
    let left = if j > 0 { times[j] - times[j - 1] } else { T::zero() };
    let right = if j + 1 < m { times[j + 1] - times[j] } else { T::zero() };
    (left + right) * T::lit(0.5)
}

/// Relative space-time error `‖truth − approx‖ / ‖truth‖`.
pub fn relative_error<T: Real>(truth: &SnapshotSet<T>, approx: &SnapshotSet<T>) -> Result<T> {
    if truth.data.shape() != approx.data.shape() || !truth.grid.same_as(&approx.grid) {
        return Err(Error::Dimension("relative error of differently shaped snapshot sets".into()));
    }
    let same_times = truth.times.iter().zip(&approx.times).all(|(a, b)| (*a - *b).abs() <= T::lit(1e-12) * (T::one() + a.abs()));
    if !same_times {
        return Err(Error::InvalidArgument("relative error needs identical sample times".into()));
    }
    relative_error_data(&truth.grid, &truth.times, &truth.data, &approx.data)
}

pub fn relative_error_data<T: Real>(grid: &Grid<T>, times: &[T], truth: &DMatrix<T>, approx: &DMatrix<T>) -> Result<T> {
    let denom = trajectory_norm(grid, truth, times);
    if denom == T::zero() {
        return Err(Error::InvalidArgument("relative error against a zero trajectory".into()));
    }
    let diff = truth - approx;
    Ok(trajectory_norm(grid, &diff, times) / denom)
}

pub(crate) struct Header<T: Real> {
    pub components: usize,
    pub grid: Grid<T>,
    pub m: usize,
    pub tau: T,
    pub t0: T,
    pub tag: String,
}

pub(crate) fn write_header<T: Real, W: Write>(w: &mut W, components: usize, grid: &Grid<T>, m: usize, tau: T, tag: &str, t0: T) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(components as u32).to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&(m as u64).to_le_bytes())?;
    w.write_all(&grid.dxi().as_f64().to_le_bytes())?;
    w.write_all(&tau.as_f64().to_le_bytes())?;
    w.write_all(&(tag.len() as u32).to_le_bytes())?;
    w.write_all(tag.as_bytes())?;
    w.write_all(&grid.xi0().as_f64().to_le_bytes())?;
    w.write_all(&grid.length().as_f64().to_le_bytes())?;
    w.write_all(&[match grid.topology() {
        Topology::Periodic => 0u8,
        Topology::Bounded => 1u8,
    }])?;
    w.write_all(&t0.as_f64().to_le_bytes())?;
    Ok(())
}

fn read_exact<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(b)
}

pub(crate) fn read_header<T: Real, R: BufRead>(r: &mut R) -> Result<Header<T>> {
    let magic: [u8; 8] = read_exact(r)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a snapshot file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(read_exact(r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let components = u32::from_le_bytes(read_exact(r)?) as usize;
    let n = u32::from_le_bytes(read_exact(r)?) as usize;
    let m = u64::from_le_bytes(read_exact(r)?) as usize;
    let _dxi = f64::from_le_bytes(read_exact(r)?);
    let tau = f64::from_le_bytes(read_exact(r)?);
    let tag_len = u32::from_le_bytes(read_exact(r)?) as usize;
    let mut tag = vec![0u8; tag_len];
    r.read_exact(&mut tag)?;
    let tag = String::from_utf8(tag).map_err(|_| Error::Format("model tag is not UTF-8".into()))?;
    let xi0 = f64::from_le_bytes(read_exact(r)?);
    let length = f64::from_le_bytes(read_exact(r)?);
    let topology = match read_exact::<1, _>(r)?[0] {
        0 => Topology::Periodic,
        1 => Topology::Bounded,
        t => return Err(Error::Format(format!("unknown topology code {t}"))),
    };
    let t0 = f64::from_le_bytes(read_exact(r)?);
    let grid = Grid::new(n, T::lit(xi0), T::lit(length), topology)?;
    Ok(Header { components, grid, m, tau: T::lit(tau), t0: T::lit(t0), tag })
}

pub(crate) fn write_values<T: Real, W: Write>(w: &mut W, values: &[T]) -> Result<()> {
    for v in values {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_values<T: Real, R: Read>(r: &mut R, count: usize) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let b: [u8; 8] = read_exact(r)?;
        out.push(T::lit(f64::from_le_bytes(b)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SnapshotSet<f64> {
        let g = Grid::periodic(16, 0.0, 1.0).unwrap();
        let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.1).collect();
        let data = DMatrix::from_fn(16, 5, |i, j| ((i + 3 * j) as f64 * 0.2).sin());
        SnapshotSet::new(g, 1, times, data, "test").unwrap()
    }

    #[test]
    fn relative_error_examples() {
        let s = sample();
        assert_eq!(relative_error(&s, &s).unwrap(), 0.0);
        let zero = s.with_data(DMatrix::zeros(16, 5), "zero").unwrap();
        assert!((relative_error(&s, &zero).unwrap() - 1.0).abs() < 1e-15);
        let scaled = s.with_data(s.data() * (1.0 + 1e-3), "scaled").unwrap();
        assert!((relative_error(&s, &scaled).unwrap() - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let s = sample();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.bin");
        s.write_binary(&p).unwrap();
        let back = SnapshotSet::<f64>::read_binary(&p).unwrap();
        assert_eq!(back.data(), s.data());
        assert_eq!(back.model_tag(), "test");
        assert!((back.tau() - 0.1).abs() < 1e-15);
        s.write_csv(&dir.path().join("s.csv")).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("t,x0,x1"));
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.bin");
        std::fs::write(&p, b"not a snapshot file at all").unwrap();
        assert!(matches!(SnapshotSet::<f64>::read_binary(&p), Err(Error::Format(_))));
    }

    #[test]
    fn non_increasing_times_rejected() {
        let g = Grid::periodic(8, 0.0, 1.0).unwrap();
        assert!(SnapshotSet::new(g, 1, vec![0.0, 0.0], DMatrix::zeros(8, 2), "x").is_err());
    }
}
