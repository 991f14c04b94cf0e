//! File formats: columnar CSV for paths and rough paths with a JSON header,
//! directory layouts for ensembles and measures, sparse triplet CSV for
//! transport plans.
//!
//! Floats are written with 17 significant decimal digits, which round-trips
//! every finite f64 bit-exactly.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::RoughMeasure;
use crate::particle::ParticleEnsemble;
use crate::path::GridPath;
use crate::roughpath::GridRoughPath;
use crate::transport::TransportPlan;

/// 17-significant-digit decimal form (bit-exact round trip for f64).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad float {s:?}: {e}")))
}

/// JSON header accompanying a path or rough-path CSV.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PathHeader {
    pub dim: usize,
    pub steps: usize,
    pub horizon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// (base seed, stream indices) lineage of the sample.
    pub seed_lineage: Vec<u64>,
}

/// Write a rough path as `<stem>.csv` + `<stem>.json`.
///
/// CSV columns: `t, x_1..x_e, a_11..a_ee` where row j >= 1 carries the
/// level-2 increment of step j-1 (row 0 carries zeros).
pub fn save_rough_path(stem: &Path, p: &GridRoughPath, header: &PathHeader) -> Result<()> {
    let e = p.dim();
    let csv_path = stem.with_extension("csv");
    let mut w = BufWriter::new(fs::File::create(&csv_path)?);
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=e).map(|i| format!("x_{i}")));
    for r in 1..=e {
        for c in 1..=e {
            cols.push(format!("a_{r}{c}"));
        }
    }
    writeln!(w, "{}", cols.join(","))?;
    for j in 0..=p.steps() {
        let mut row = Vec::with_capacity(1 + e + e * e);
        row.push(fmt_f64(p.times()[j]));
        row.extend(p.point(j).iter().map(|x| fmt_f64(*x)));
        if j == 0 {
            row.extend(std::iter::repeat_n(fmt_f64(0.0), e * e));
        } else {
            row.extend(p.step_area(j - 1).iter().map(|x| fmt_f64(*x)));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    let json_path = stem.with_extension("json");
    fs::write(&json_path, serde_json::to_string_pretty(header)?)?;
    Ok(())
}

/// Read back a rough path written by [`save_rough_path`].
pub fn load_rough_path(stem: &Path) -> Result<(GridRoughPath, PathHeader)> {
    let header: PathHeader =
        serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
    let e = header.dim;
    let file = fs::File::open(stem.with_extension("csv"))?;
    let mut lines = BufReader::new(file).lines();
    let _ = lines
        .next()
        .ok_or_else(|| Error::Parse("empty rough path csv".into()))??;
    let mut times = Vec::new();
    let mut level1 = Vec::new();
    let mut level2 = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + e + e * e {
            return Err(Error::Parse(format!(
                "row {lineno}: expected {} fields, got {}",
                1 + e + e * e,
                fields.len()
            )));
        }
        times.push(parse_f64(fields[0])?);
        for f in &fields[1..1 + e] {
            level1.push(parse_f64(f)?);
        }
        if lineno > 0 {
            for f in &fields[1 + e..] {
                level2.push(parse_f64(f)?);
            }
        }
    }
    let p = GridRoughPath::new(e, times, level1, level2)?;
    Ok((p, header))
}

/// Manifest of a stored ensemble directory.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnsembleManifest {
    pub n: usize,
    pub dim: usize,
    pub steps: usize,
    pub horizon: f64,
    pub base_seed: u64,
    pub particle_seeds: Vec<u64>,
    pub interaction: String,
}

/// Layout: `manifest.json`, `paths.csv` (particle, t, x_1..x_d),
/// `increments.csv` (particle, step, dx_1..dx_d).
pub fn save_ensemble(dir: &Path, ens: &ParticleEnsemble) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = EnsembleManifest {
        n: ens.len(),
        dim: ens.dim(),
        steps: ens.steps(),
        horizon: ens.horizon(),
        base_seed: ens.base_seed(),
        particle_seeds: ens.particle_seeds().to_vec(),
        interaction: ens.interaction_id().to_string(),
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    let d = ens.dim();
    let mut w = BufWriter::new(fs::File::create(dir.join("paths.csv"))?);
    let mut cols = vec!["particle".to_string(), "t".to_string()];
    cols.extend((1..=d).map(|i| format!("x_{i}")));
    writeln!(w, "{}", cols.join(","))?;
    for i in 0..ens.len() {
        let p = ens.path(i);
        for j in 0..=ens.steps() {
            let mut row = vec![i.to_string(), fmt_f64(ens.times()[j])];
            row.extend(p.point(j).iter().map(|x| fmt_f64(*x)));
            writeln!(w, "{}", row.join(","))?;
        }
    }
    w.flush()?;
    let mut w = BufWriter::new(fs::File::create(dir.join("increments.csv"))?);
    let mut cols = vec!["particle".to_string(), "step".to_string()];
    cols.extend((1..=d).map(|i| format!("dx_{i}")));
    writeln!(w, "{}", cols.join(","))?;
    for i in 0..ens.len() {
        for j in 0..ens.steps() {
            let mut row = vec![i.to_string(), j.to_string()];
            row.extend(
                ens.increments(i)[j * d..(j + 1) * d]
                    .iter()
                    .map(|x| fmt_f64(*x)),
            );
            writeln!(w, "{}", row.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read back an ensemble directory (drift evaluations are not persisted;
/// rows must appear particle-major as written by [`save_ensemble`]).
pub fn load_ensemble(dir: &Path) -> Result<ParticleEnsemble> {
    let manifest: EnsembleManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let d = manifest.dim;
    let nodes = manifest.steps + 1;
    let file = fs::File::open(dir.join("paths.csv"))?;
    let mut lines = BufReader::new(file).lines();
    lines
        .next()
        .ok_or_else(|| Error::Parse("empty paths.csv".into()))??;
    let mut times = vec![0.0; nodes];
    let mut values = vec![vec![0.0; nodes * d]; manifest.n];
    for i in 0..manifest.n {
        for j in 0..nodes {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("paths.csv truncated".into()))??;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 + d {
                return Err(Error::Parse("paths.csv field count mismatch".into()));
            }
            let pi: usize = fields[0]
                .parse()
                .map_err(|_| Error::Parse("bad particle index".into()))?;
            if pi != i {
                return Err(Error::Parse("paths.csv rows out of order".into()));
            }
            times[j] = parse_f64(fields[1])?;
            for c in 0..d {
                values[i][j * d + c] = parse_f64(fields[2 + c])?;
            }
        }
    }
    let shared: Arc<[f64]> = Arc::from(times.into_boxed_slice());
    let paths = values
        .iter()
        .map(|v| Ok(Arc::new(GridPath::new(d, Arc::clone(&shared), v.clone())?)))
        .collect::<Result<Vec<_>>>()?;

    let file = fs::File::open(dir.join("increments.csv"))?;
    let mut lines = BufReader::new(file).lines();
    lines.next().transpose()?;
    let mut increments = vec![vec![0.0; manifest.steps * d]; manifest.n];
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + d {
            return Err(Error::Parse("increments.csv field count mismatch".into()));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| Error::Parse("bad particle index".into()))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| Error::Parse("bad step index".into()))?;
        for c in 0..d {
            increments[i][j * d + c] = parse_f64(fields[2 + c])?;
        }
    }
    Ok(ParticleEnsemble::from_parts(
        d,
        shared,
        paths,
        increments,
        None,
        manifest.base_seed,
        manifest.particle_seeds.clone(),
        manifest.interaction.clone(),
    ))
}

/// Measure metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureMeta {
    pub dim: usize,
    pub layers: usize,
    pub steps: usize,
    pub horizon: f64,
    pub seed_lineage: Vec<u64>,
}

/// Layout: `meta.json`, `weights.csv` (atom, weight), `atoms.csv`
/// (atom, file stem) and one rough-path CSV/JSON pair per atom under
/// `atoms/`.
pub fn save_rough_measure(dir: &Path, mu: &RoughMeasure, meta: &MeasureMeta) -> Result<()> {
    fs::create_dir_all(dir.join("atoms"))?;
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(meta)?)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("weights.csv"))?);
    writeln!(w, "atom,weight")?;
    for i in 0..mu.len() {
        writeln!(w, "{},{}", i, fmt_f64(mu.weight(i)))?;
    }
    w.flush()?;
    let mut w = BufWriter::new(fs::File::create(dir.join("atoms.csv"))?);
    writeln!(w, "atom,file")?;
    for i in 0..mu.len() {
        let stem = format!("atoms/atom_{i:06}");
        writeln!(w, "{i},{stem}")?;
        let header = PathHeader {
            dim: mu.atom(i).dim(),
            steps: mu.atom(i).steps(),
            horizon: mu.atom(i).horizon(),
            alpha: None,
            seed_lineage: meta.seed_lineage.clone(),
        };
        save_rough_path(&dir.join(&stem), mu.atom(i), &header)?;
    }
    w.flush()?;
    Ok(())
}

/// Transport plans as sparse triplets `row,col,mass` plus the objective in
/// the header comment line.
pub fn save_transport_plan(path: &Path, plan: &TransportPlan) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "row,col,mass")?;
    for &(i, j, mass) in &plan.entries {
        writeln!(w, "{i},{j},{}", fmt_f64(mass))?;
    }
    w.flush()?;
    Ok(())
}
