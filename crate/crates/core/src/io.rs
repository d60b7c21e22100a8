//! Versioned binary storage for kernel and propagator series, and CSV exchange formats.

use crate::gqme::{KernelOrigin, KernelSeries};
use crate::inversion::SpectralSamples;
use crate::pathsum::PropagatorSeries;
use crate::system::{DensityVector, LiouvilleMatrix};
use crate::{Error, Result, C64};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 8] = b"MEMKRNL\0";
pub const FORMAT_VERSION: u32 = 1;
pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    Kernels,
    Propagators,
}

/// JSON sidecar written next to each binary series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub format_version: u32,
    pub library_version: String,
    pub kind: SeriesKind,
    pub dt: f64,
    pub dim: usize,
    /// Highest stored order (kernels) or step (propagators).
    pub max_order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<KernelOrigin>,
    /// Hash of the configuration that produced the series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
}

/// `path` with `.json` appended.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_series(path: &Path, meta: &SeriesMeta, mats: &[LiouvilleMatrix]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u32::<LittleEndian>(meta.dim as u32)?;
    w.write_u32::<LittleEndian>(mats.len() as u32)?;
    w.write_f64::<LittleEndian>(meta.dt)?;
    for m in mats {
        for v in m.to_row_major() {
            w.write_f64::<LittleEndian>(v.re)?;
            w.write_f64::<LittleEndian>(v.im)?;
        }
    }
    w.flush()?;
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)? + "\n")?;
    Ok(())
}

fn read_series(path: &Path) -> Result<(SeriesMeta, Vec<LiouvilleMatrix>)> {
    let meta: SeriesMeta = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data(format!("{} is not a series file", path.display())));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(Error::Data(format!("unsupported series format version {version}")));
    }
    let d = r.read_u32::<LittleEndian>()? as usize;
    let count = r.read_u32::<LittleEndian>()? as usize;
    let dt = r.read_f64::<LittleEndian>()?;
    if d != meta.dim || dt != meta.dt || count != meta.max_order + 1 {
        return Err(Error::Data(format!("{} disagrees with its metadata", path.display())));
    }
    let n = d * d;
    let mut mats = Vec::with_capacity(count);
    let mut buf = vec![C64::default(); n * n];
    for _ in 0..count {
        for v in buf.iter_mut() {
            *v = C64::new(r.read_f64::<LittleEndian>()?, r.read_f64::<LittleEndian>()?);
        }
        mats.push(LiouvilleMatrix::from_row_major(d, &buf));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Data(format!("{} has {} trailing bytes", path.display(), rest.len())));
    }
    Ok((meta, mats))
}

pub fn write_kernels(path: &Path, k: &KernelSeries) -> Result<()> {
    write_kernels_tagged(path, k, None)
}

/// As [`write_kernels`], recording `config_hash` in the sidecar.
pub fn write_kernels_tagged(path: &Path, k: &KernelSeries, config_hash: Option<&str>) -> Result<()> {
    let meta = SeriesMeta {
        format_version: FORMAT_VERSION,
        library_version: LIBRARY_VERSION.into(),
        kind: SeriesKind::Kernels,
        dt: k.dt,
        dim: k.kernels[0].dim(),
        max_order: k.max_order(),
        origin: Some(k.origin),
        config: config_hash.map(str::to_owned),
    };
    write_series(path, &meta, &k.kernels)
}

pub fn read_kernels(path: &Path) -> Result<KernelSeries> {
    let (meta, kernels) = read_series(path)?;
    match (meta.kind, meta.origin) {
        (SeriesKind::Kernels, Some(origin)) => Ok(KernelSeries { dt: meta.dt, kernels, origin }),
        _ => Err(Error::Data(format!("{} does not hold kernels", path.display()))),
    }
}

pub fn write_propagators(path: &Path, u: &PropagatorSeries) -> Result<()> {
    write_propagators_tagged(path, u, None)
}

/// As [`write_propagators`], recording `config_hash` in the sidecar.
pub fn write_propagators_tagged(path: &Path, u: &PropagatorSeries, config_hash: Option<&str>) -> Result<()> {
    let meta = SeriesMeta {
        format_version: FORMAT_VERSION,
        library_version: LIBRARY_VERSION.into(),
        kind: SeriesKind::Propagators,
        dt: u.dt,
        dim: u.props[0].dim(),
        max_order: u.n_max(),
        origin: None,
        config: config_hash.map(str::to_owned),
    };
    write_series(path, &meta, &u.props)
}

pub fn read_propagators(path: &Path) -> Result<PropagatorSeries> {
    let (meta, props) = read_series(path)?;
    if meta.kind != SeriesKind::Propagators {
        return Err(Error::Data(format!("{} does not hold propagators", path.display())));
    }
    Ok(PropagatorSeries { dt: meta.dt, props })
}

/// Comment line heading every numerical output: `# memkernel <version> config=<hash>`.
pub fn header_line(config_hash: &str) -> String {
    format!("# memkernel {LIBRARY_VERSION} config={config_hash}")
}

/// Shortest round-trip form, switching to exponent notation for very small or large values.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

fn writer<W: Write>(mut w: W, config_hash: &str) -> Result<csv::Writer<W>> {
    writeln!(w, "{}", header_line(config_hash))?;
    Ok(csv::Writer::from_writer(w))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

fn parse(field: &str, line: u64) -> Result<f64> {
    field.parse().map_err(|_| Error::Data(format!("line {line}: '{field}' is not a number")))
}

/// Columns `t`, then `re_ij, im_ij` for each row-major density entry.
pub fn write_trajectory_csv<W: Write>(w: W, config_hash: &str, dt: f64, traj: &[DensityVector]) -> Result<()> {
    let n = traj.first().map_or(0, |v| v.len());
    let d = (n as f64).sqrt().round() as usize;
    let mut wr = writer(w, config_hash)?;
    let mut head = vec!["t".to_string()];
    for i in 0..d {
        for j in 0..d {
            head.push(format!("re_{i}{j}"));
            head.push(format!("im_{i}{j}"));
        }
    }
    wr.write_record(&head).map_err(csv_error)?;
    for (step, rho) in traj.iter().enumerate() {
        let mut row = vec![num(step as f64 * dt)];
        for v in rho.iter() {
            row.push(num(v.re));
            row.push(num(v.im));
        }
        wr.write_record(&row).map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

/// Times and densities from a trajectory CSV.
pub fn read_trajectory_csv<R: Read>(r: R) -> Result<(Vec<f64>, Vec<DensityVector>)> {
    let mut rd = reader(r);
    let width = rd.headers().map_err(csv_error)?.len();
    if width < 3 || width % 2 == 0 {
        return Err(Error::Data(format!("trajectory CSV has {width} columns; expected t plus Re/Im pairs")));
    }
    let n = (width - 1) / 2;
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::Data(format!("{n} density entries do not form a square matrix")));
    }
    let (mut times, mut rhos) = (Vec::new(), Vec::new());
    for rec in rd.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let vals = rec.iter().map(|f| parse(f, line)).collect::<Result<Vec<_>>>()?;
        times.push(vals[0]);
        rhos.push(DensityVector::from_iterator(n, (0..n).map(|k| C64::new(vals[1 + 2 * k], vals[2 + 2 * k]))));
    }
    Ok((times, rhos))
}

/// Columns `omega, J, masked`; masked rows leave `J` empty.
pub fn write_spectral_csv<W: Write>(w: W, config_hash: &str, s: &SpectralSamples) -> Result<()> {
    let mut wr = writer(w, config_hash)?;
    wr.write_record(["omega", "J", "masked"]).map_err(csv_error)?;
    for (w, j) in s.omega.iter().zip(&s.j) {
        let (val, flag) = match j {
            Some(v) => (num(*v), "0"),
            None => (String::new(), "1"),
        };
        wr.write_record([num(*w), val, flag.to_string()]).map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_spectral_csv<R: Read>(r: R) -> Result<SpectralSamples> {
    let mut rd = reader(r);
    let (mut omega, mut j) = (Vec::new(), Vec::new());
    for rec in rd.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(Error::Data(format!("line {line}: expected omega, J, masked")));
        }
        omega.push(parse(&rec[0], line)?);
        j.push(if &rec[2] == "1" { None } else { Some(parse(&rec[1], line)?) });
    }
    Ok(SpectralSamples { omega, j })
}

/// Two-column `(omega, J)` table for a tabulated spectral density; a header row is optional.
pub fn read_density_table<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).has_headers(false).from_reader(r);
    let (mut omega, mut j) = (Vec::new(), Vec::new());
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(Error::Data(format!("line {line}: expected two columns")));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                omega.push(a);
                j.push(b);
            }
            _ if i == 0 => continue,
            _ => return Err(Error::Data(format!("line {line}: non-numeric entry"))),
        }
    }
    Ok((omega, j))
}

/// Generic numeric table with named columns.
pub fn write_table_csv<W: Write>(w: W, config_hash: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut wr = writer(w, config_hash)?;
    wr.write_record(columns).map_err(csv_error)?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Data(format!("row has {} values for {} columns", row.len(), columns.len())));
        }
        wr.write_record(row.iter().map(|&v| num(v))).map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::pauli;

    fn series() -> KernelSeries {
        let a = LiouvilleMatrix::from_row_major(
            2,
            &(0..16).map(|i| C64::new(i as f64, -0.5 * i as f64)).collect::<Vec<_>>(),
        );
        KernelSeries {
            dt: 0.1,
            kernels: vec![a.clone(), a.scale(1e-300), a.scale(-3.25)],
            origin: KernelOrigin::TtmExtracted,
        }
    }

    #[test]
    fn kernel_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.bin");
        let k = series();
        write_kernels(&p, &k).unwrap();
        assert_eq!(read_kernels(&p).unwrap(), k);
        assert!(read_propagators(&p).is_err());
        let meta: SeriesMeta = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(meta.max_order, 2);
    }

    #[test]
    fn propagator_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.bin");
        let u = PropagatorSeries { dt: 0.05, props: series().kernels };
        write_propagators(&p, &u).unwrap();
        assert_eq!(read_propagators(&p).unwrap(), u);
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[0] = b'X';
        std::fs::write(&p, &bytes).unwrap();
        assert!(read_propagators(&p).is_err());
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let rho = crate::system::density_to_vector(&(pauli::identity() + pauli::y()).scale(0.5));
        let traj = vec![rho.clone(), rho.scale(0.5)];
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, "abc", 0.1, &traj).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# memkernel ") && text.lines().next().unwrap().ends_with("config=abc"));
        let (t, back) = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(t, vec![0.0, 0.1]);
        assert_eq!(back, traj);
    }

    #[test]
    fn spectral_csv_marks_masked_rows() {
        let s = SpectralSamples { omega: vec![0.0, 1.5], j: vec![None, Some(0.25)] };
        let mut buf = Vec::new();
        write_spectral_csv(&mut buf, "h", &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\n0.0,,1\n"));
        assert_eq!(read_spectral_csv(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn density_table_with_and_without_header() {
        let (w, j) = read_density_table("omega,J\n0.5,1\n1.0,2\n".as_bytes()).unwrap();
        assert_eq!((w, j), (vec![0.5, 1.0], vec![1.0, 2.0]));
        let (w, _) = read_density_table("# note\n0.5,1\n".as_bytes()).unwrap();
        assert_eq!(w, vec![0.5]);
        assert!(read_density_table("0.5,1\nx,2\n".as_bytes()).is_err());
    }
}
