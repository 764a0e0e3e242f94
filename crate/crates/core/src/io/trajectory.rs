use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dynamics::{MeanTrajectory, TrialEnsemble};
use crate::error::{Error, Result};

pub const TRAJECTORY_FORMAT: &str = "lesde-trajectory/1";

/// Metadata carried in the `# key=value` header.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryHeader {
    pub k: usize,
    pub p: usize,
    /// Samples per class behind each stored mean.
    pub n: usize,
    pub trials: usize,
    /// Grid spacing if the grid is uniform.
    pub dt: Option<f64>,
    pub source: String,
}

/// Per-trial class-mean trajectories on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryFile {
    pub header: TrajectoryHeader,
    pub trials: Vec<MeanTrajectory>,
}

fn grid_spacing(grid: &[f64]) -> Option<f64> {
    crate::estimation::uniform_spacing(grid).ok()
}

impl TrajectoryFile {
    pub fn from_ensemble(ens: &TrialEnsemble, source: &str) -> Result<Self> {
        ens.validate()?;
        let trials = ens
            .trials
            .iter()
            .map(|snaps| MeanTrajectory::new(ens.grid.clone(), ens.k, ens.p, snaps.iter().map(|s| s.class_means()).collect()))
            .collect::<Result<Vec<_>>>()?;
        let header = TrajectoryHeader {
            k: ens.k,
            p: ens.p,
            n: ens.n,
            trials: trials.len(),
            dt: grid_spacing(&ens.grid),
            source: source.to_string(),
        };
        Ok(TrajectoryFile { header, trials })
    }

    pub fn from_mean(traj: &MeanTrajectory, n: usize, source: &str) -> Result<Self> {
        traj.validate()?;
        let header =
            TrajectoryHeader { k: traj.k, p: traj.p, n, trials: 1, dt: grid_spacing(&traj.grid), source: source.to_string() };
        Ok(TrajectoryFile { header, trials: vec![traj.clone()] })
    }

    /// Average over trials.
    pub fn mean(&self) -> Result<MeanTrajectory> {
        let first = self.trials.first().ok_or_else(|| Error::schema("trajectory file has no trials"))?;
        let m = self.trials.len() as f64;
        let mut means = vec![vec![0.0; first.k * first.p]; first.len()];
        for tr in &self.trials {
            for (acc, row) in means.iter_mut().zip(&tr.means) {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v / m;
                }
            }
        }
        MeanTrajectory::new(first.grid.clone(), first.k, first.p, means)
    }
}

/// Shortest-round-trip is not byte-stable across writers; fixed
/// scientific notation with 17 significant digits is.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory<W: Write>(w: &mut W, file: &TrajectoryFile) -> Result<()> {
    let h = &file.header;
    if file.trials.len() != h.trials {
        return Err(Error::schema(format!("header says {} trials, have {}", h.trials, file.trials.len())));
    }
    let grid = file.trials.first().map(|t| t.grid.clone()).unwrap_or_default();
    for tr in &file.trials {
        tr.validate()?;
        if (tr.k, tr.p) != (h.k, h.p) || tr.grid != grid {
            return Err(Error::schema("trials disagree on K, p or grid"));
        }
    }
    if h.source.contains('\n') {
        return Err(Error::schema("source label must be a single line"));
    }
    writeln!(w, "# format={TRAJECTORY_FORMAT}")?;
    writeln!(w, "# K={}", h.k)?;
    writeln!(w, "# p={}", h.p)?;
    writeln!(w, "# n={}", h.n)?;
    writeln!(w, "# trials={}", h.trials)?;
    if let Some(dt) = h.dt {
        writeln!(w, "# dt={}", fmt_f64(dt))?;
    }
    writeln!(w, "# source={}", h.source)?;
    writeln!(w, "{}", column_line(h.p))?;
    for (ti, t) in grid.iter().enumerate() {
        for (trial, tr) in file.trials.iter().enumerate() {
            for k in 0..h.k {
                let mut line = format!("{},{trial},{k}", fmt_f64(*t));
                for v in tr.class_mean(ti, k) {
                    line.push(',');
                    line.push_str(&fmt_f64(*v));
                }
                writeln!(w, "{line}")?;
            }
        }
    }
    Ok(())
}

fn column_line(p: usize) -> String {
    let mut s = String::from("t,trial,class");
    for j in 0..p {
        s.push_str(&format!(",coord_{j}"));
    }
    s
}

fn parse_num<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse { line, msg: format!("{what}: cannot parse {field:?}") })
}

pub fn read_trajectory<R: BufRead>(r: R) -> Result<TrajectoryFile> {
    let mut meta: BTreeMap<String, (String, usize)> = BTreeMap::new();
    let mut columns_seen = false;
    let mut rows: BTreeMap<(u64, usize, usize), Vec<f64>> = BTreeMap::new();
    let mut times: BTreeMap<u64, f64> = BTreeMap::new();
    let mut p = 0;
    let (mut k_count, mut trial_count) = (0, 0);
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if !columns_seen {
            if let Some(rest) = line.strip_prefix('#') {
                let (key, value) = rest
                    .trim_start()
                    .split_once('=')
                    .ok_or_else(|| Error::Parse { line: lineno, msg: "header line must be '# key=value'".into() })?;
                let key = key.trim().to_string();
                if meta.insert(key.clone(), (value.to_string(), lineno)).is_some() {
                    return Err(Error::Schema { line: Some(lineno), msg: format!("duplicate header key {key:?}") });
                }
                continue;
            }
            for key in meta.keys() {
                if !["format", "K", "p", "n", "trials", "dt", "source"].contains(&key.as_str()) {
                    let l = meta[key].1;
                    return Err(Error::Schema { line: Some(l), msg: format!("unknown header key {key:?}") });
                }
            }
            let get = |key: &str| -> Result<(String, usize)> {
                meta.get(key).cloned().ok_or_else(|| Error::Schema { line: Some(lineno), msg: format!("missing header key {key:?}") })
            };
            let (fmt, fl) = get("format")?;
            if fmt != TRAJECTORY_FORMAT {
                return Err(Error::Schema { line: Some(fl), msg: format!("unsupported format {fmt:?}") });
            }
            let (v, l) = get("K")?;
            k_count = parse_num(&v, l, "K")?;
            let (v, l) = get("p")?;
            p = parse_num(&v, l, "p")?;
            let (v, l) = get("trials")?;
            trial_count = parse_num(&v, l, "trials")?;
            let (v, l) = get("n")?;
            let _: usize = parse_num(&v, l, "n")?;
            if k_count == 0 || p == 0 || trial_count == 0 {
                return Err(Error::Schema { line: Some(l), msg: "K, p and trials must be positive".into() });
            }
            if line != column_line(p) {
                return Err(Error::Schema { line: Some(lineno), msg: format!("expected columns {:?}", column_line(p)) });
            }
            columns_seen = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 + p {
            return Err(Error::Parse { line: lineno, msg: format!("expected {} fields, found {}", 3 + p, fields.len()) });
        }
        let t: f64 = parse_num(fields[0], lineno, "t")?;
        let trial: usize = parse_num(fields[1], lineno, "trial")?;
        let class: usize = parse_num(fields[2], lineno, "class")?;
        let coords = fields[3..].iter().map(|f| parse_num::<f64>(f, lineno, "coordinate")).collect::<Result<Vec<_>>>()?;
        if !t.is_finite() || coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema { line: Some(lineno), msg: "non-finite value".into() });
        }
        if trial >= trial_count || class >= k_count {
            return Err(Error::Schema { line: Some(lineno), msg: format!("trial {trial} or class {class} out of range") });
        }
        // Order times by value; key by bit pattern (values are finite, and -0.0 is folded into 0.0).
        let t = if t == 0.0 { 0.0 } else { t };
        let key = ordered_key(t);
        times.insert(key, t);
        if rows.insert((key, trial, class), coords).is_some() {
            return Err(Error::Schema { line: Some(lineno), msg: format!("duplicate row for t={t}, trial={trial}, class={class}") });
        }
    }
    if !columns_seen {
        return Err(Error::Schema { line: None, msg: "missing column line".into() });
    }
    let grid: Vec<f64> = times.values().copied().collect();
    if grid.is_empty() {
        return Err(Error::schema("trajectory has no rows"));
    }
    let expected = grid.len() * trial_count * k_count;
    if rows.len() != expected {
        return Err(Error::schema(format!("expected {expected} rows (every time × trial × class), found {}", rows.len())));
    }
    let mut trials = Vec::with_capacity(trial_count);
    for trial in 0..trial_count {
        let means = times
            .keys()
            .map(|&key| (0..k_count).flat_map(|class| rows[&(key, trial, class)].iter().copied()).collect())
            .collect();
        trials.push(MeanTrajectory::new(grid.clone(), k_count, p, means)?);
    }
    let num = |key: &str| -> Result<Option<f64>> {
        meta.get(key).map(|(v, l)| parse_num::<f64>(v, *l, key)).transpose()
    };
    let header = TrajectoryHeader {
        k: k_count,
        p,
        n: parse_num(&meta["n"].0, meta["n"].1, "n")?,
        trials: trial_count,
        dt: num("dt")?,
        source: meta.get("source").map(|(v, _)| v.clone()).unwrap_or_default(),
    };
    Ok(TrajectoryFile { header, trials })
}

/// Monotone map from finite f64 to u64.
fn ordered_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

pub fn write_trajectory_file(path: &Path, file: &TrajectoryFile) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trajectory(&mut w, file)?;
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_file(path: &Path) -> Result<TrajectoryFile> {
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_trajectory(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TrajectoryFile {
        let grid = vec![0.0, 0.5, 1.0];
        let t0 = MeanTrajectory::new(grid.clone(), 2, 2, vec![vec![1.0, 2.0, 3.0, 4.0]; 3]).unwrap();
        let t1 = MeanTrajectory::new(grid, 2, 2, vec![vec![0.1, -0.2, 1e-300, 4.5e10]; 3]).unwrap();
        let header = TrajectoryHeader { k: 2, p: 2, n: 5, trials: 2, dt: Some(0.5), source: "unit".into() };
        TrajectoryFile { header, trials: vec![t0, t1] }
    }

    fn to_string(f: &TrajectoryFile) -> String {
        let mut buf = Vec::new();
        write_trajectory(&mut buf, f).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = to_string(&sample());
        let back = read_trajectory(text.as_bytes()).unwrap();
        assert_eq!(back, sample());
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let text = to_string(&sample());
        let mut lines: Vec<&str> = text.lines().collect();
        lines[9] = "0.0,0,0,1.0";
        match read_trajectory(lines.join("\n").as_bytes()) {
            Err(Error::Parse { line: 10, .. }) => {}
            other => panic!("{other:?}"),
        }
        let mut lines: Vec<&str> = text.lines().collect();
        let dup = lines[8];
        lines[9] = dup;
        match read_trajectory(lines.join("\n").as_bytes()) {
            Err(Error::Schema { line: Some(10), .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rows_in_any_order_are_accepted() {
        let text = to_string(&sample());
        let lines: Vec<&str> = text.lines().collect();
        let (head, body) = lines.split_at(8);
        let mut shuffled: Vec<&str> = head.to_vec();
        shuffled.extend(body.iter().rev());
        assert_eq!(read_trajectory(shuffled.join("\n").as_bytes()).unwrap(), sample());
    }

    #[test]
    fn missing_rows_are_a_schema_error() {
        let text = to_string(&sample());
        let lines: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
        assert!(matches!(read_trajectory(lines.join("\n").as_bytes()), Err(Error::Schema { .. })));
    }
}
