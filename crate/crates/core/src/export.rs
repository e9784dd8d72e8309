//! File formats: spin-chain configurations (JSON) and trajectories (CSV or JSON).
//!
//! Trajectory CSV layout:
//!
//! ```text
//! # {"kind":"spin_chain","n":2,...}
//! t,Re_Z11,Im_Z11,Re_Z12,Im_Z12,...,H,det_ZZ
//! ```
//!
//! The first line is `# ` followed by the JSON metadata. Matrix entries are
//! row-major; geodesic exports use `U` in place of `Z`, set `"unitary": true` and
//! carry the magnetic charges. `H` and `det_ZZ` are the energy and `det(Z†Z)`.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesics::MagneticGeodesic;
use crate::linalg::{c, CMatrix};
use crate::spinchain::{hamiltonian, SpinChainConfig, SpinChainState, Trajectory};

/// Complex matrix as row-major real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrixFile {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ComplexMatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&crate::linalg::C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.re.len();
        let m = self.re.first().map_or(0, Vec::len);
        let shape_ok = self.im.len() == n
            && self.re.iter().all(|r| r.len() == m)
            && self.im.iter().all(|r| r.len() == m);
        if !shape_ok {
            return Err(Error::InvalidSpec(
                "real and imaginary parts must be rectangular and of equal shape".into(),
            ));
        }
        Ok(CMatrix::from_fn(n, m, |i, j| c(self.re[i][j], self.im[i][j])))
    }
}

/// On-disk spin-chain configuration: `p` plus either `alpha` (full matrix) or nested `levels`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<ComplexMatrixFile>,
}

impl ChainFile {
    pub fn from_config(config: &SpinChainConfig, z0: Option<&CMatrix>) -> Self {
        let (alpha, levels) = match config.levels() {
            Ok(l) => (None, Some(l[1..].to_vec())),
            Err(_) => {
                let a = config.alpha();
                (
                    Some(
                        (0..a.nrows())
                            .map(|i| a.row(i).iter().copied().collect())
                            .collect(),
                    ),
                    None,
                )
            }
        };
        Self {
            p: config.p().to_vec(),
            alpha,
            levels,
            z0: z0.map(ComplexMatrixFile::from_matrix),
        }
    }

    pub fn config(&self) -> Result<SpinChainConfig> {
        match (&self.alpha, &self.levels) {
            (Some(alpha), None) => {
                let n = self.p.len();
                if alpha.len() != n || alpha.iter().any(|r| r.len() != n) {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: alpha.len(),
                    });
                }
                SpinChainConfig::new(self.p.clone(), DMatrix::from_fn(n, n, |i, j| alpha[i][j]))
            }
            (None, Some(levels)) => SpinChainConfig::nested(self.p.clone(), levels),
            _ => Err(Error::InvalidSpec(
                "give exactly one of 'alpha' and 'levels'".into(),
            )),
        }
    }

    pub fn initial_state(&self) -> Result<Option<CMatrix>> {
        self.z0.as_ref().map(ComplexMatrixFile::to_matrix).transpose()
    }
}

/// Metadata stored with every exported trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub kind: String,
    pub n: usize,
    pub config: ChainFile,
    pub gauge: String,
    pub samples: usize,
    #[serde(default)]
    pub unitary: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charges: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub t: f64,
    pub matrix: ComplexMatrixFile,
    #[serde(rename = "H")]
    pub energy: f64,
    #[serde(rename = "det_ZZ")]
    pub det_gram: f64,
}

/// A trajectory or geodesic in exchange form; CSV and JSON carry the same data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub meta: TrajectoryMeta,
    pub samples: Vec<SampleRecord>,
}

impl TrajectoryFile {
    pub fn from_trajectory(trajectory: &Trajectory) -> Self {
        let samples = trajectory
            .samples
            .iter()
            .map(|s| SampleRecord {
                t: s.time(),
                matrix: ComplexMatrixFile::from_matrix(&s.state.z),
                energy: s.diagnostics.energy,
                det_gram: s.diagnostics.det_gram,
            })
            .collect();
        Self {
            meta: TrajectoryMeta {
                kind: "spin_chain".into(),
                n: trajectory.config.n(),
                config: ChainFile::from_config(&trajectory.config, None),
                gauge: trajectory.gauge.clone(),
                samples: trajectory.samples.len(),
                unitary: false,
                charges: None,
            },
            samples,
        }
    }

    /// `H` and `det_ZZ` are evaluated on `Z = U K^{1/2}`, i.e. from `K`.
    pub fn from_geodesic(geodesic: &MagneticGeodesic, config: &SpinChainConfig) -> Self {
        let samples = geodesic
            .samples
            .iter()
            .map(|s| {
                let h = crate::linalg::hermitian_function(&s.k, |x| x.max(0.0).sqrt());
                let state = SpinChainState {
                    z: &s.u * h,
                    time: s.time,
                };
                SampleRecord {
                    t: s.time,
                    matrix: ComplexMatrixFile::from_matrix(&s.u),
                    energy: hamiltonian(&state, config),
                    det_gram: s.k.determinant().re,
                }
            })
            .collect();
        Self {
            meta: TrajectoryMeta {
                kind: "geodesic".into(),
                n: config.n(),
                config: ChainFile::from_config(config, None),
                gauge: crate::spinchain::Gauge::Nested.label().into(),
                samples: geodesic.samples.len(),
                unitary: true,
                charges: Some(geodesic.charges.clone()),
            },
            samples,
        }
    }

    fn symbol(&self) -> char {
        if self.meta.unitary {
            'U'
        } else {
            'Z'
        }
    }

    pub fn csv_header(&self) -> Vec<String> {
        let n = self.meta.n;
        let s = self.symbol();
        let mut cols = vec!["t".to_string()];
        for i in 1..=n {
            for j in 1..=n {
                cols.push(format!("Re_{s}{i}{j}"));
                cols.push(format!("Im_{s}{i}{j}"));
            }
        }
        cols.push("H".into());
        cols.push("det_ZZ".into());
        cols
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", serde_json::to_string(&self.meta)?)?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(self.csv_header())?;
        for s in &self.samples {
            let mut row = vec![s.t.to_string()];
            for (re, im) in s.matrix.re.iter().zip(&s.matrix.im) {
                for (a, b) in re.iter().zip(im) {
                    row.push(a.to_string());
                    row.push(b.to_string());
                }
            }
            row.push(s.energy.to_string());
            row.push(s.det_gram.to_string());
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let meta_text = first
            .trim_end()
            .strip_prefix("# ")
            .ok_or_else(|| Error::InvalidSpec("CSV must start with a '# {metadata}' line".into()))?;
        let meta: TrajectoryMeta = serde_json::from_str(meta_text)?;
        let n = meta.n;
        let mut reader = csv::Reader::from_reader(input);
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record?;
            let values = record
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::InvalidSpec(format!("bad number in CSV: {e}")))?;
            if values.len() != 2 * n * n + 3 {
                return Err(Error::DimensionMismatch {
                    expected: 2 * n * n + 3,
                    got: values.len(),
                });
            }
            let entry = |i: usize, j: usize, part: usize| values[1 + 2 * (i * n + j) + part];
            samples.push(SampleRecord {
                t: values[0],
                matrix: ComplexMatrixFile {
                    re: (0..n).map(|i| (0..n).map(|j| entry(i, j, 0)).collect()).collect(),
                    im: (0..n).map(|i| (0..n).map(|j| entry(i, j, 1)).collect()).collect(),
                },
                energy: values[2 * n * n + 1],
                det_gram: values[2 * n * n + 2],
            });
        }
        Ok(Self { meta, samples })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::magnetic_geodesic;
    use crate::spinchain::{integrate, random_state};

    fn small_trajectory() -> Trajectory {
        let cfg = SpinChainConfig::nested(vec![1.0, 2.0], &[0.5]).unwrap();
        let z0 = random_state(&cfg, 1).z;
        integrate(&cfg, &z0, 0.05, 0.01).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let file = TrajectoryFile::from_trajectory(&small_trajectory());
        let mut buf = Vec::new();
        file.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# {"));
        assert_eq!(
            lines.next().unwrap(),
            "t,Re_Z11,Im_Z11,Re_Z12,Im_Z12,Re_Z21,Im_Z21,Re_Z22,Im_Z22,H,det_ZZ"
        );
        let back = TrajectoryFile::read_csv(&buf[..]).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn json_round_trip() {
        let file = TrajectoryFile::from_trajectory(&small_trajectory());
        let back = TrajectoryFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn geodesic_export_is_flagged() {
        let cfg = SpinChainConfig::nested(vec![1.0, 2.0, 3.0], &[0.5, 1.0]).unwrap();
        let z0 = random_state(&cfg, 2).z;
        let geo = magnetic_geodesic(&z0, &cfg, &[0.0, 0.1, 0.2]).unwrap();
        let file = TrajectoryFile::from_geodesic(&geo, &cfg);
        assert!(file.meta.unitary);
        assert_eq!(file.meta.charges, Some(vec![1.0, 1.0]));
        assert!(file.csv_header()[1].starts_with("Re_U"));
        let mut buf = Vec::new();
        file.write_csv(&mut buf).unwrap();
        assert_eq!(TrajectoryFile::read_csv(&buf[..]).unwrap(), file);
    }

    #[test]
    fn chain_file_variants() {
        let nested: ChainFile = serde_json::from_str(r#"{"p":[1,1,1],"levels":[1,2]}"#).unwrap();
        let cfg = nested.config().unwrap();
        assert!(cfg.is_nested());
        assert_eq!(ChainFile::from_config(&cfg, None), nested);

        let general: ChainFile =
            serde_json::from_str(r#"{"p":[1,1,1],"alpha":[[0,1,2],[1,0,1],[2,1,0]]}"#).unwrap();
        let cfg = general.config().unwrap();
        assert!(!cfg.is_nested());
        assert_eq!(ChainFile::from_config(&cfg, None), general);

        let both: ChainFile =
            serde_json::from_str(r#"{"p":[1,1],"levels":[1],"alpha":[[0,1],[1,0]]}"#).unwrap();
        assert!(both.config().is_err());
        assert!(serde_json::from_str::<ChainFile>(r#"{"p":[1,1],"level":[1]}"#).is_err());
    }

    #[test]
    fn z0_round_trip() {
        let cfg = SpinChainConfig::nested(vec![1.0, 2.0], &[0.5]).unwrap();
        let z0 = random_state(&cfg, 3).z;
        let file = ChainFile::from_config(&cfg, Some(&z0));
        let text = serde_json::to_string(&file).unwrap();
        let back: ChainFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.initial_state().unwrap().unwrap(), z0);
    }
}
