//! On-disk dataset layout, loading and summary statistics.
//!
//! ```text
//! netlists/<circuit>/template.sp, testbench.sp, pairs.txt, netlist_<iiii>.sp
//! data/<circuit>/simulations/{pre,post}/
//!                metrics/{pex_score,area}/
//!                layouts/GDS/
//!                metadata/{tiles,moves}/      netlist_<iiii>_variant_<jjjj>.<ext>
//! ```
//!
//! Generation times go to `timing.tsv` next to the two trees, so the trees
//! themselves are identical across runs with the same seed.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acsim::SimulationTrace;
use crate::explore::{NetlistRun, Variant};
use crate::gds::write_gds;
use crate::netlist::write_netlist;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{0}: exists with different content")]
    Collision(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("no variants under {0}")]
    Empty(PathBuf),
    #[error(transparent)]
    Gds(#[from] crate::gds::GdsError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The seven per-variant files, by (folder, extension).
pub const VARIANT_FILES: [(&str, &str); 7] = [
    ("simulations/pre", "txt"),
    ("simulations/post", "txt"),
    ("metrics/pex_score", "txt"),
    ("metrics/area", "txt"),
    ("layouts/GDS", "gds"),
    ("metadata/tiles", "json"),
    ("metadata/moves", "txt"),
];

pub fn variant_stem(netlist: usize, variant: usize) -> String {
    format!("netlist_{netlist:04}_variant_{variant:04}")
}

fn parse_stem(stem: &str) -> Option<(usize, usize)> {
    let rest = stem.strip_prefix("netlist_")?;
    let (i, j) = rest.split_once("_variant_")?;
    Some((i.parse().ok()?, j.parse().ok()?))
}

/// Writes `bytes` unless an identical file already exists; refuses to
/// overwrite different content.
pub fn write_guarded(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    match fs::read(path) {
        Ok(existing) if existing == bytes => return Ok(()),
        Ok(_) => return Err(DatasetError::Collision(path.to_path_buf())),
        Err(e) if e.kind() == io::ErrorKind::NotFound => {}
        Err(e) => return Err(io_err(path)(e)),
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Per-variant payload, already serialised.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantArtifacts {
    pub pre: SimulationTrace,
    pub post: SimulationTrace,
    pub pscore: f64,
    pub area: f64,
    pub gds: Vec<u8>,
    pub tiles: String,
    pub moves: String,
}

impl VariantArtifacts {
    pub fn from_variant(v: &Variant, pre: &SimulationTrace, wire_width: i64) -> Result<Self, crate::gds::GdsError> {
        Ok(Self {
            pre: pre.clone(),
            post: v.post.clone(),
            pscore: v.qos.pscore,
            area: v.qos.area,
            gds: write_gds(&v.layout, wire_width)?,
            tiles: v.ir.to_json(),
            moves: v.ir.moves.iter().map(|m| format!("{m}\n")).collect(),
        })
    }

    fn payloads(&self) -> [Vec<u8>; 7] {
        [
            self.pre.to_text().into_bytes(),
            self.post.to_text().into_bytes(),
            format!("{}\n", self.pscore).into_bytes(),
            format!("{}\n", self.area).into_bytes(),
            self.gds.clone(),
            self.tiles.clone().into_bytes(),
            self.moves.clone().into_bytes(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
}

impl Dataset {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn netlist_dir(&self, circuit: &str) -> PathBuf {
        self.root.join("netlists").join(circuit)
    }

    pub fn data_dir(&self, circuit: &str) -> PathBuf {
        self.root.join("data").join(circuit)
    }

    pub fn variant_path(&self, circuit: &str, folder: &str, ext: &str, i: usize, j: usize) -> PathBuf {
        self.data_dir(circuit).join(folder).join(format!("{}.{ext}", variant_stem(i, j)))
    }

    /// Template, testbench and pairs shared by every netlist of a circuit.
    pub fn emit_circuit(&self, circuit: &str, template: &str, testbench: &str, pairs: &str) -> Result<(), DatasetError> {
        let dir = self.netlist_dir(circuit);
        write_guarded(&dir.join("template.sp"), template.as_bytes())?;
        write_guarded(&dir.join("testbench.sp"), testbench.as_bytes())?;
        write_guarded(&dir.join("pairs.txt"), pairs.as_bytes())
    }

    pub fn emit_netlist(&self, circuit: &str, i: usize, text: &str) -> Result<PathBuf, DatasetError> {
        let path = self.netlist_dir(circuit).join(format!("netlist_{i:04}.sp"));
        write_guarded(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn emit_variant(&self, circuit: &str, i: usize, j: usize, a: &VariantArtifacts) -> Result<Vec<PathBuf>, DatasetError> {
        let mut paths = Vec::with_capacity(VARIANT_FILES.len());
        for ((folder, ext), bytes) in VARIANT_FILES.iter().zip(a.payloads()) {
            let p = self.variant_path(circuit, folder, ext, i, j);
            write_guarded(&p, &bytes)?;
            paths.push(p);
        }
        Ok(paths)
    }

    /// Writes a finished run: its netlist, every variant, and timing rows.
    /// Returns the number of variants written.
    pub fn emit_run(&self, circuit: &str, run: &NetlistRun, wire_width: i64) -> Result<usize, DatasetError> {
        self.emit_netlist(circuit, run.netlist.index, &write_netlist(&run.netlist))?;
        let Some(pre) = &run.pre else { return Ok(0) };
        let mut timing = Vec::with_capacity(run.variants.len());
        for v in &run.variants {
            let a = VariantArtifacts::from_variant(v, pre, wire_width)?;
            self.emit_variant(circuit, run.netlist.index, v.qos.variant, &a)?;
            timing.push((run.netlist.index, v.qos.variant, v.qos.elapsed));
        }
        if !timing.is_empty() {
            self.append_timing(circuit, &timing)?;
        }
        Ok(timing.len())
    }

    pub fn load_variant(&self, circuit: &str, i: usize, j: usize) -> Result<VariantArtifacts, DatasetError> {
        let read = |k: usize| {
            let (folder, ext) = VARIANT_FILES[k];
            let p = self.variant_path(circuit, folder, ext, i, j);
            fs::read(&p).map(|b| (p.clone(), b)).map_err(io_err(&p))
        };
        let text = |k: usize| -> Result<(PathBuf, String), DatasetError> {
            let (p, b) = read(k)?;
            let s = String::from_utf8(b).map_err(|_| DatasetError::Parse {
                path: p.clone(),
                msg: "not UTF-8".into(),
            })?;
            Ok((p, s))
        };
        let trace = |k: usize| -> Result<SimulationTrace, DatasetError> {
            let (p, s) = text(k)?;
            SimulationTrace::from_text(&s).map_err(|e| DatasetError::Parse { path: p, msg: e.to_string() })
        };
        let scalar = |k: usize| -> Result<f64, DatasetError> {
            let (p, s) = text(k)?;
            s.trim().parse().map_err(|_| DatasetError::Parse {
                path: p,
                msg: "expected one decimal value".into(),
            })
        };
        Ok(VariantArtifacts {
            pre: trace(0)?,
            post: trace(1)?,
            pscore: scalar(2)?,
            area: scalar(3)?,
            gds: read(4)?.1,
            tiles: text(5)?.1,
            moves: text(6)?.1,
        })
    }

    pub fn circuits(&self) -> Result<Vec<String>, DatasetError> {
        let dir = self.root.join("data");
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for e in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let e = e.map_err(io_err(&dir))?;
            if e.path().is_dir() {
                out.push(e.file_name().to_string_lossy().into_owned());
            }
        }
        out.sort();
        Ok(out)
    }

    /// `(netlist, variant)` pairs that have a pscore file.
    pub fn variants(&self, circuit: &str) -> Result<Vec<(usize, usize)>, DatasetError> {
        let dir = self.data_dir(circuit).join("metrics/pex_score");
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for e in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let e = e.map_err(io_err(&dir))?;
            let name = e.file_name().to_string_lossy().into_owned();
            if let Some(ij) = name.strip_suffix(".txt").and_then(parse_stem) {
                out.push(ij);
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn timing_path(&self) -> PathBuf {
        self.root.join("timing.tsv")
    }

    /// Appends `circuit  netlist  variant  seconds` rows in one write.
    pub fn append_timing(&self, circuit: &str, rows: &[(usize, usize, f64)]) -> Result<(), DatasetError> {
        let path = self.timing_path();
        fs::create_dir_all(&self.root).map_err(io_err(&self.root))?;
        let text: String = rows.iter().map(|(i, j, s)| format!("{circuit}\t{i}\t{j}\t{s}\n")).collect();
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        f.write_all(text.as_bytes()).map_err(io_err(&path))
    }

    fn wall_times(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        if let Ok(text) = fs::read_to_string(self.timing_path()) {
            for line in text.lines() {
                let cols: Vec<&str> = line.split('\t').collect();
                if let [c, _, _, s] = cols[..] {
                    if let Ok(s) = s.parse::<f64>() {
                        *out.entry(c.to_string()).or_insert(0.0) += s;
                    }
                }
            }
        }
        out
    }

    pub fn summarize(&self) -> Result<Vec<CircuitSummary>, DatasetError> {
        let times = self.wall_times();
        let mut out = Vec::new();
        for circuit in self.circuits()? {
            let vs = self.variants(&circuit)?;
            if vs.is_empty() {
                continue;
            }
            let mut ps = Vec::with_capacity(vs.len());
            let mut areas = Vec::with_capacity(vs.len());
            for &(i, j) in &vs {
                let read = |folder: &str| -> Result<f64, DatasetError> {
                    let p = self.variant_path(&circuit, folder, "txt", i, j);
                    let s = fs::read_to_string(&p).map_err(io_err(&p))?;
                    s.trim().parse().map_err(|_| DatasetError::Parse {
                        path: p,
                        msg: "expected one decimal value".into(),
                    })
                };
                ps.push(read("metrics/pex_score")?);
                areas.push(read("metrics/area")?);
            }
            let netlists = vs.iter().map(|v| v.0).collect::<std::collections::BTreeSet<_>>().len();
            let (pm, pv) = mean_var(&ps);
            let (am, av) = mean_var(&areas);
            out.push(CircuitSummary {
                wall_time: times.get(&circuit).copied().unwrap_or(0.0),
                circuit,
                netlists,
                variants_per_netlist: vs.len() as f64 / netlists as f64,
                total: vs.len(),
                pscore_mean: pm,
                pscore_var: pv,
                area_mean: am,
                area_var: av,
            });
        }
        if out.is_empty() {
            return Err(DatasetError::Empty(self.root.clone()));
        }
        Ok(out)
    }
}

/// Mean and population variance.
pub fn mean_var(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (0.0, 0.0);
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n)
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSummary {
    pub circuit: String,
    pub netlists: usize,
    pub variants_per_netlist: f64,
    pub total: usize,
    pub pscore_mean: f64,
    pub pscore_var: f64,
    pub area_mean: f64,
    pub area_var: f64,
    /// Seconds.
    pub wall_time: f64,
}

pub fn format_summary(rows: &[CircuitSummary]) -> String {
    let mut s = format!(
        "{:<24} {:>8} {:>10} {:>8} {:>12} {:>12} {:>12} {:>12} {:>10}\n",
        "circuit", "netlists", "per_nl", "total", "pscore_mean", "pscore_var", "area_mean", "area_var", "time_s"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<24} {:>8} {:>10.1} {:>8} {:>12.4e} {:>12.4e} {:>12.4} {:>12.4e} {:>10.2}\n",
            r.circuit, r.netlists, r.variants_per_netlist, r.total, r.pscore_mean, r.pscore_var, r.area_mean, r.area_var, r.wall_time
        ));
    }
    s
}
