//! File formats: gate files, line-delimited run records, and entanglement
//! distributions (summary object plus histogram CSV).
//!
//! Floating-point values are written with 17 significant digits so every `f64`
//! survives a write/read cycle bit for bit.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::gates::{GateSource, Provenance, UnitaryGate};
use crate::linalg::{unitarity_deviation, ComplexMatrix, TOL_UNITARY};
use crate::sampling::{random_product_state, StreamKey, GENERATOR};
use crate::search::{DeConfig, MinEntanglement, SearchReport, Verdict};
use crate::states::{apply_gate, entanglement_entropy, BipartiteShape, ProductState};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_BINS: usize = 60;

/// An `f64` serialized in exponent form with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sig17(pub f64);

pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(S::Error::custom(format!("cannot serialize non-finite value {}", self.0)));
        }
        let raw = RawValue::from_string(format_sig17(self.0)).map_err(S::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Sig17 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Sig17)
    }
}

fn sig_vec(v: impl IntoIterator<Item = f64>) -> Vec<Sig17> {
    v.into_iter().map(Sig17).collect()
}

// ---------------------------------------------------------------------------
// Gate files

#[derive(Debug, Serialize, Deserialize)]
struct GateFile {
    label: String,
    m: usize,
    n: usize,
    matrix: Vec<Vec<[Sig17; 2]>>,
}

/// Serializes a gate as `{label, m, n, matrix}` with `[re, im]` pairs per entry.
pub fn gate_to_string(gate: &UnitaryGate, shape: BipartiteShape) -> Result<String> {
    if shape.dim() != gate.dim() {
        return Err(Error::ShapeMismatch(format!(
            "shape {shape} does not match gate dimension {}",
            gate.dim()
        )));
    }
    let m = gate.matrix();
    let file = GateFile {
        label: gate.label().to_string(),
        m: shape.m,
        n: shape.n,
        matrix: (0..m.rows())
            .map(|i| m.row(i).iter().map(|z| [Sig17(z.re), Sig17(z.im)]).collect())
            .collect(),
    };
    let mut text = serde_json::to_string(&file)?;
    text.push('\n');
    Ok(text)
}

pub fn gate_from_str(text: &str) -> Result<UnitaryGate> {
    let file: GateFile = serde_json::from_str(text).map_err(|e| Error::GateFileInvalid(e.to_string()))?;
    let dim = file.matrix.len();
    if dim == 0 || file.matrix.iter().any(|row| row.len() != dim) {
        return Err(Error::GateFileInvalid("matrix must be square and nonempty".into()));
    }
    let shape = BipartiteShape::new(file.m, file.n).map_err(|e| Error::GateFileInvalid(e.to_string()))?;
    if shape.dim() != dim {
        return Err(Error::GateFileInvalid(format!(
            "m*n = {} does not match matrix dimension {dim}",
            shape.dim()
        )));
    }
    let data: Vec<Complex64> = file
        .matrix
        .iter()
        .flatten()
        .map(|[re, im]| Complex64::new(re.0, im.0))
        .collect();
    let matrix = ComplexMatrix::new(dim, dim, data).map_err(|e| Error::GateFileInvalid(e.to_string()))?;
    let deviation = unitarity_deviation(&matrix);
    if deviation > TOL_UNITARY {
        return Err(Error::NotUnitary {
            deviation,
            tol: TOL_UNITARY,
        });
    }
    let provenance = Provenance {
        expression: file.label.clone(),
        sqrt_branch: None,
        source: GateSource::File,
    };
    UnitaryGate::new(matrix, file.label, Some(shape), provenance)
}

pub fn write_gate_file(gate: &UnitaryGate, shape: BipartiteShape, path: &Path) -> Result<()> {
    std::fs::write(path, gate_to_string(gate, shape)?)?;
    Ok(())
}

pub fn read_gate_file(path: &Path) -> Result<UnitaryGate> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::GateFileInvalid(format!("{}: {e}", path.display())))?;
    gate_from_str(&text)
}

// ---------------------------------------------------------------------------
// Run records

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplitudes {
    pub re: Vec<Sig17>,
    pub im: Vec<Sig17>,
}

impl Amplitudes {
    pub fn from_complex(v: &[Complex64]) -> Self {
        Self {
            re: sig_vec(v.iter().map(|z| z.re)),
            im: sig_vec(v.iter().map(|z| z.im)),
        }
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.re.iter().zip(&self.im).map(|(r, i)| Complex64::new(r.0, i.0)).collect()
    }
}

/// A product input, stored both flattened and factor by factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub amplitudes: Amplitudes,
    pub factor_a: Amplitudes,
    pub factor_b: Amplitudes,
}

impl StateRecord {
    pub fn from_product(p: &ProductState) -> Self {
        Self {
            amplitudes: Amplitudes::from_complex(p.flatten().amplitudes()),
            factor_a: Amplitudes::from_complex(p.factor_a.amplitudes()),
            factor_b: Amplitudes::from_complex(p.factor_b.amplitudes()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub gate_label: String,
    pub gate_expression: String,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub restarts: u32,
    pub budget: u64,
    pub population: usize,
    pub weight_f: Sig17,
    pub crossover_cr: Sig17,
    pub residual_tol: Sig17,
    pub entropy_tol: Sig17,
    pub skip_filter: bool,
    pub evals_used: u64,
    pub verdict: String,
    pub filter_column: Option<usize>,
    pub best_residual: Option<Sig17>,
    pub best_entanglement: Option<Sig17>,
    /// Present when a counterexample was found.
    pub counterexample: Option<StateRecord>,
    /// Best input found when no counterexample was certified.
    pub best_state: Option<StateRecord>,
    pub restart_bests: Vec<Sig17>,
    pub sqrt_branch: Option<String>,
    pub log_base: Sig17,
    pub generator: String,
    pub tool_version: String,
    pub timestamp: String,
}

pub fn utc_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl RunRecord {
    fn base(command: &str, gate: &UnitaryGate, shape: BipartiteShape, config: &DeConfig, log_base: f64) -> Self {
        Self {
            command: command.to_string(),
            gate_label: gate.label().to_string(),
            gate_expression: gate.provenance().expression.clone(),
            m: shape.m,
            n: shape.n,
            seed: config.seed,
            restarts: config.restarts,
            budget: config.max_evals,
            population: config.population,
            weight_f: Sig17(config.weight_f),
            crossover_cr: Sig17(config.crossover_cr),
            residual_tol: Sig17(config.residual_tol),
            entropy_tol: Sig17(config.entropy_tol),
            skip_filter: config.skip_filter,
            evals_used: 0,
            verdict: String::new(),
            filter_column: None,
            best_residual: None,
            best_entanglement: None,
            counterexample: None,
            best_state: None,
            restart_bests: Vec::new(),
            sqrt_branch: gate.provenance().sqrt_branch.clone(),
            log_base: Sig17(log_base),
            generator: GENERATOR.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            timestamp: utc_timestamp(),
        }
    }

    /// Record of a counterexample search. Entanglement values are in nats.
    pub fn from_search(gate: &UnitaryGate, shape: BipartiteShape, config: &DeConfig, report: &SearchReport) -> Self {
        let mut rec = Self::base("check", gate, shape, config, std::f64::consts::E);
        rec.verdict = report.verdict.kind().to_string();
        rec.restart_bests = sig_vec(report.restarts.iter().map(|r| r.outcome.best_value));
        match &report.verdict {
            Verdict::CounterexampleFound {
                state,
                residual,
                entanglement,
                evals_used,
            } => {
                rec.evals_used = *evals_used;
                rec.best_residual = Some(Sig17(*residual));
                rec.best_entanglement = Some(Sig17(*entanglement));
                rec.counterexample = Some(StateRecord::from_product(state));
            }
            Verdict::SurvivedBudget {
                best_residual,
                best_entanglement,
                best_state,
                evals_used,
            } => {
                rec.evals_used = *evals_used;
                rec.best_residual = Some(Sig17(*best_residual));
                rec.best_entanglement = Some(Sig17(*best_entanglement));
                rec.best_state = Some(StateRecord::from_product(best_state));
            }
            Verdict::RejectedByColumnFilter { column } => {
                rec.filter_column = Some(*column);
                rec.best_residual = Some(Sig17(0.0));
                rec.best_entanglement = Some(Sig17(0.0));
                // the failing column is the image of this basis product state
                let (a, b) = (column / shape.n, column % shape.n);
                let state = ProductState::new(
                    crate::states::PureState::basis(shape.m, a),
                    crate::states::PureState::basis(shape.n, b),
                );
                rec.counterexample = Some(StateRecord::from_product(&state));
            }
        }
        rec
    }

    pub fn from_min_entanglement(
        gate: &UnitaryGate,
        shape: BipartiteShape,
        config: &DeConfig,
        result: &MinEntanglement,
    ) -> Self {
        let mut rec = Self::base("min-ent", gate, shape, config, result.log_base);
        rec.verdict = "MinEntanglement".to_string();
        rec.evals_used = result.evals_used;
        rec.best_residual = Some(Sig17(result.best_residual));
        rec.best_entanglement = Some(Sig17(result.best_entanglement));
        rec.best_state = Some(StateRecord::from_product(&result.best_state));
        rec.restart_bests = sig_vec(result.restarts.iter().map(|r| r.outcome.best_value));
        rec
    }

    pub fn rejected(
        command: &str,
        gate: &UnitaryGate,
        shape: BipartiteShape,
        config: &DeConfig,
        column: usize,
        log_base: f64,
    ) -> Self {
        let mut rec = Self::base(command, gate, shape, config, log_base);
        rec.verdict = "RejectedByColumnFilter".to_string();
        rec.filter_column = Some(column);
        rec.best_entanglement = Some(Sig17(0.0));
        rec
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Appends one record as a single line and flushes.
pub fn append_record(path: &Path, record: &RunRecord) -> Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(file, "{}", record.to_json_line()?)?;
    file.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

// ---------------------------------------------------------------------------
// Entanglement distributions

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_lo: Sig17,
    pub bin_hi: Sig17,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub gate_label: String,
    pub m: usize,
    pub n: usize,
    pub sample_count: u64,
    pub seed: u64,
    pub log_base: Sig17,
    pub mean: Sig17,
    pub std_dev: Sig17,
    pub min: Sig17,
    pub max: Sig17,
    pub histogram: Vec<HistogramBin>,
    pub generator: String,
    pub tool_version: String,
}

/// Output entanglement of `samples` random product inputs, sample `i` drawn
/// from `StreamKey(seed, i)`. Values come back in sample order.
pub fn sample_entanglement(
    gate: &UnitaryGate,
    shape: BipartiteShape,
    samples: u64,
    log_base: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let input = random_product_state(shape, StreamKey::new(seed, i)).flatten();
            entanglement_entropy(&apply_gate(gate, &input)?, shape, log_base)
        })
        .collect()
}

/// Summary statistics and a histogram over `[0, log_base(min(m, n))]`.
pub fn distribution_report(
    gate: &UnitaryGate,
    shape: BipartiteShape,
    samples: u64,
    log_base: f64,
    bins: usize,
    seed: u64,
) -> Result<DistributionReport> {
    if samples == 0 || bins == 0 {
        return Err(Error::InvalidConfig("samples and bins must be at least 1".into()));
    }
    let values = sample_entanglement(gate, shape, samples, log_base, seed)?;
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)
    } else {
        0.0
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let upper = (shape.m.min(shape.n) as f64).ln() / log_base.ln();
    let width = upper / bins as f64;
    let mut counts = vec![0u64; bins];
    for v in &values {
        let idx = ((v / width).floor().max(0.0) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let histogram = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            bin_lo: Sig17(i as f64 * width),
            bin_hi: Sig17(if i + 1 == bins { upper } else { (i + 1) as f64 * width }),
            count,
        })
        .collect();

    Ok(DistributionReport {
        gate_label: gate.label().to_string(),
        m: shape.m,
        n: shape.n,
        sample_count: samples,
        seed,
        log_base: Sig17(log_base),
        mean: Sig17(mean),
        std_dev: Sig17(var.sqrt()),
        min: Sig17(min),
        max: Sig17(max),
        histogram,
        generator: GENERATOR.to_string(),
        tool_version: TOOL_VERSION.to_string(),
    })
}

pub fn histogram_csv(report: &DistributionReport) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for b in &report.histogram {
        out.push_str(&format!("{},{},{}\n", format_sig17(b.bin_lo.0), format_sig17(b.bin_hi.0), b.count));
    }
    out
}

/// `hist.csv` → `hist.summary.json`.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary.json")
}

pub fn write_distribution(report: &DistributionReport, csv_path: &Path) -> Result<PathBuf> {
    std::fs::write(csv_path, histogram_csv(report))?;
    let summary = summary_path(csv_path);
    let mut w = BufWriter::new(File::create(&summary)?);
    serde_json::to_writer(&mut w, report)?;
    writeln!(w)?;
    w.flush()?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{builtin, hadamard_uh, identity};

    #[test]
    fn sig17_round_trips() {
        for x in [0.0, -0.0, 1.0, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.1 + 0.2] {
            let text = serde_json::to_string(&Sig17(x)).unwrap();
            let back: Sig17 = serde_json::from_str(&text).unwrap();
            assert_eq!(back.0.to_bits(), x.to_bits(), "{text}");
        }
        assert!(serde_json::to_string(&Sig17(f64::NAN)).is_err());
        assert_eq!(serde_json::to_string(&Sig17(0.5)).unwrap(), "5.0000000000000000e-1");
    }

    #[test]
    fn gate_file_rejects_bad_input() {
        assert!(matches!(gate_from_str("{"), Err(Error::GateFileInvalid(_))));
        let not_square = r#"{"label":"x","m":2,"n":2,"matrix":[[[1,0],[0,0]]]}"#;
        assert!(matches!(gate_from_str(not_square), Err(Error::GateFileInvalid(_))));
        let mut two = String::from(r#"{"label":"two","m":2,"n":2,"matrix":["#);
        for i in 0..4 {
            let row: Vec<String> = (0..4).map(|j| if i == j { "[2,0]".into() } else { "[0,0]".into() }).collect();
            two.push_str(&format!("[{}]{}", row.join(","), if i < 3 { "," } else { "" }));
        }
        two.push_str("]}");
        assert!(matches!(gate_from_str(&two), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn gate_file_round_trip_is_byte_stable() {
        let g = builtin("UE1").unwrap();
        let shape = g.shape().unwrap();
        let text = gate_to_string(&g, shape).unwrap();
        let back = gate_from_str(&text).unwrap();
        assert_eq!(back.matrix(), g.matrix());
        assert_eq!(back.provenance().source, GateSource::File);
        assert_eq!(gate_to_string(&back, shape).unwrap(), text);
    }

    #[test]
    fn identity_distribution_is_zero() {
        let shape = BipartiteShape::new(3, 4).unwrap();
        let r = distribution_report(&identity(12), shape, 500, 2.0, 10, 1).unwrap();
        assert!(r.mean.0 < 1e-9);
        assert_eq!(r.histogram[0].count, 500);
    }

    #[test]
    fn histogram_partitions_range() {
        let g = hadamard_uh().unwrap();
        let shape = g.shape().unwrap();
        let r = distribution_report(&g, shape, 2000, 2.0, DEFAULT_BINS, 3).unwrap();
        assert_eq!(r.histogram.iter().map(|b| b.count).sum::<u64>(), 2000);
        assert_eq!(r.histogram.len(), DEFAULT_BINS);
        assert_eq!(r.histogram[0].bin_lo.0, 0.0);
        assert!((r.histogram.last().unwrap().bin_hi.0 - 3f64.log2()).abs() < 1e-15);
        for w in r.histogram.windows(2) {
            assert_eq!(w[0].bin_hi, w[1].bin_lo);
        }
        let csv = histogram_csv(&r);
        assert!(csv.starts_with("bin_lo,bin_hi,count\n"));
        assert_eq!(csv.lines().count(), DEFAULT_BINS + 1);
        assert!(distribution_report(&g, shape, 0, 2.0, 10, 0).is_err());
    }
}
