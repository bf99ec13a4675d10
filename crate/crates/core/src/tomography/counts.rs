//! Measurement settings, count tables and the CSV formats.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::optics::{backprop_projector, tomo_analyzer_settings, TOMO_SETTINGS};
use crate::quantum::{kets, CMatrix, DensityOperator, Ket};

/// Projective qubit settings; P and M stand for |+⟩ and |−⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QubitSetting {
    H,
    V,
    P,
    M,
    R,
    L,
}

pub const QUBIT_SETTINGS: usize = 6;

impl QubitSetting {
    pub const ALL: [QubitSetting; QUBIT_SETTINGS] = [
        QubitSetting::H,
        QubitSetting::V,
        QubitSetting::P,
        QubitSetting::M,
        QubitSetting::R,
        QubitSetting::L,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Which of the three complementary bases {H,V}, {P,M}, {R,L}.
    pub fn basis(self) -> usize {
        self.index() / 2
    }

    pub fn label(self) -> &'static str {
        match self {
            QubitSetting::H => "H",
            QubitSetting::V => "V",
            QubitSetting::P => "P",
            QubitSetting::M => "M",
            QubitSetting::R => "R",
            QubitSetting::L => "L",
        }
    }

    pub fn ket(self) -> Ket {
        match self {
            QubitSetting::H => kets::h(),
            QubitSetting::V => kets::v(),
            QubitSetting::P => kets::plus(),
            QubitSetting::M => kets::minus(),
            QubitSetting::R => kets::r(),
            QubitSetting::L => kets::l(),
        }
    }
}

impl fmt::Display for QubitSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for QubitSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" => Ok(QubitSetting::H),
            "V" => Ok(QubitSetting::V),
            "P" | "+" => Ok(QubitSetting::P),
            "M" | "-" => Ok(QubitSetting::M),
            "R" => Ok(QubitSetting::R),
            "L" => Ok(QubitSetting::L),
            other => Err(Error::Data(format!("unknown qubit setting `{other}`"))),
        }
    }
}

/// Qubit-1 setting, qubit-4 setting and qutrit column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub qubit1: QubitSetting,
    pub qubit4: QubitSetting,
    pub qutrit: usize,
}

pub const SETTINGS: usize = QUBIT_SETTINGS * QUBIT_SETTINGS * TOMO_SETTINGS;

impl MeasurementSetting {
    pub fn new(qubit1: QubitSetting, qubit4: QubitSetting, qutrit: usize) -> Result<Self> {
        if qutrit >= TOMO_SETTINGS {
            return Err(Error::Data(format!(
                "qutrit setting {qutrit} out of range 0..{TOMO_SETTINGS}"
            )));
        }
        Ok(Self {
            qubit1,
            qubit4,
            qutrit,
        })
    }

    pub fn index(&self) -> usize {
        (self.qubit1.index() * QUBIT_SETTINGS + self.qubit4.index()) * TOMO_SETTINGS + self.qutrit
    }

    pub fn from_index(i: usize) -> Self {
        let qutrit = i % TOMO_SETTINGS;
        let pair = i / TOMO_SETTINGS;
        Self {
            qubit1: QubitSetting::ALL[pair / QUBIT_SETTINGS],
            qubit4: QubitSetting::ALL[pair % QUBIT_SETTINGS],
            qutrit,
        }
    }

    /// All settings in table order: qubit 1 outermost, qutrit innermost.
    pub fn all() -> impl Iterator<Item = MeasurementSetting> {
        (0..SETTINGS).map(Self::from_index)
    }

    pub fn column_label(&self) -> String {
        format!("q{:02}", self.qutrit)
    }
}

/// Unit vector |a⟩⊗|q_k⟩⊗|b⟩ and the qutrit success probability of each setting.
#[derive(Clone, Debug)]
pub struct SettingModel {
    qutrits: Vec<(Ket, f64)>,
}

impl Default for SettingModel {
    fn default() -> Self {
        Self::new()
    }
}

impl SettingModel {
    pub fn new() -> Self {
        let qutrits = tomo_analyzer_settings()
            .into_iter()
            .map(|t| {
                let p =
                    backprop_projector(&t.setting).expect("tabulated settings are non-degenerate");
                (p.target, p.success_probability)
            })
            .collect();
        Self { qutrits }
    }

    pub fn success_probability(&self, qutrit: usize) -> f64 {
        self.qutrits[qutrit].1
    }

    pub fn vector(&self, s: &MeasurementSetting) -> Ket {
        s.qubit1
            .ket()
            .tensor(&self.qutrits[s.qutrit].0)
            .tensor(&s.qubit4.ket())
    }

    /// p_k |a, q_k, b⟩⟨a, q_k, b|.
    pub fn operator(&self, s: &MeasurementSetting) -> CMatrix {
        let v = self.vector(s);
        v.to_density().into_matrix() * crate::quantum::c(self.success_probability(s.qutrit), 0.0)
    }

    /// N₀ · Tr(ρ E_s).
    pub fn expected_rate(
        &self,
        rho: &DensityOperator,
        s: &MeasurementSetting,
        n0: f64,
    ) -> Result<f64> {
        Ok(
            n0 * self.success_probability(s.qutrit)
                * rho.expectation_ket(&self.vector(s))?.max(0.0),
        )
    }
}

pub fn setting_operator(s: &MeasurementSetting) -> CMatrix {
    SettingModel::new().operator(s)
}

pub fn expected_rate(rho: &DensityOperator, s: &MeasurementSetting, n0: f64) -> Result<f64> {
    SettingModel::new().expected_rate(rho, s, n0)
}

/// Four-fold coincidence counts over the 6 × 6 × 15 settings. Absent settings
/// are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct CountTable {
    counts: Vec<Option<u64>>,
    /// Integration time per setting in seconds (metadata only).
    pub integration_time: Option<f64>,
}

impl Default for CountTable {
    fn default() -> Self {
        Self::empty()
    }
}

impl CountTable {
    pub fn empty() -> Self {
        Self {
            counts: vec![None; SETTINGS],
            integration_time: None,
        }
    }

    pub fn from_fn(mut f: impl FnMut(&MeasurementSetting) -> u64) -> Self {
        Self {
            counts: MeasurementSetting::all().map(|s| Some(f(&s))).collect(),
            integration_time: None,
        }
    }

    pub fn get(&self, s: &MeasurementSetting) -> Option<u64> {
        self.counts[s.index()]
    }

    pub fn set(&mut self, s: &MeasurementSetting, count: u64) {
        self.counts[s.index()] = Some(count);
    }

    pub fn iter(&self) -> impl Iterator<Item = (MeasurementSetting, Option<u64>)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, c)| (MeasurementSetting::from_index(i), *c))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn missing(&self) -> Vec<MeasurementSetting> {
        self.iter()
            .filter(|(_, c)| c.is_none())
            .map(|(s, _)| s)
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.counts.iter().all(Option::is_some)
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        Self {
            counts: self.counts.iter().map(|c| c.map(|n| n * factor)).collect(),
            integration_time: self.integration_time,
        }
    }

    /// Sums over each (qubit1, qubit4) row, in table order.
    pub fn row_sums(&self) -> Vec<u64> {
        self.counts
            .chunks(TOMO_SETTINGS)
            .map(|row| row.iter().flatten().sum())
            .collect()
    }

    /// Sums over each qutrit column.
    pub fn column_sums(&self) -> Vec<u64> {
        (0..TOMO_SETTINGS)
            .map(|k| {
                self.counts
                    .iter()
                    .skip(k)
                    .step_by(TOMO_SETTINGS)
                    .flatten()
                    .sum()
            })
            .collect()
    }

    /// Parses either the wide form (`qubit1,qubit4,q00..q14`) or the long
    /// form (`qubit1,qubit4,qutrit,count`), chosen by header.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let position = |name: &str| headers.iter().position(|h| h == name);
        let q1 = position("qubit1").ok_or_else(|| Error::Data("missing column `qubit1`".into()))?;
        let q4 = position("qubit4").ok_or_else(|| Error::Data("missing column `qubit4`".into()))?;
        let mut table = Self::empty();
        let parse_count = |field: &str, what: &str| -> Result<u64> {
            field.parse::<u64>().map_err(|_| {
                Error::Data(format!(
                    "count `{field}` for {what} is not a non-negative integer"
                ))
            })
        };
        if let (Some(qt), Some(ct)) = (position("qutrit"), position("count")) {
            for record in rdr.records() {
                let record = record?;
                let k: usize = record[qt].parse().map_err(|_| {
                    Error::Data(format!("qutrit index `{}` is not an integer", &record[qt]))
                })?;
                let s = MeasurementSetting::new(record[q1].parse()?, record[q4].parse()?, k)?;
                if table.get(&s).is_some() {
                    return Err(Error::Data(format!(
                        "duplicate entry for {},{},q{:02}",
                        s.qubit1, s.qubit4, k
                    )));
                }
                table.set(
                    &s,
                    parse_count(&record[ct], &format!("{},{},q{:02}", s.qubit1, s.qubit4, k))?,
                );
            }
            return Ok(table);
        }
        let columns: Vec<usize> = (0..TOMO_SETTINGS)
            .map(|k| {
                let name = format!("q{k:02}");
                position(&name).ok_or_else(|| {
                    Error::Data(format!("missing column `{name}` (qutrit setting {k})"))
                })
            })
            .collect::<Result<_>>()?;
        for record in rdr.records() {
            let record = record?;
            let (a, b): (QubitSetting, QubitSetting) = (record[q1].parse()?, record[q4].parse()?);
            for (k, &col) in columns.iter().enumerate() {
                let s = MeasurementSetting::new(a, b, k)?;
                if table.get(&s).is_some() {
                    return Err(Error::Data(format!("duplicate row {a},{b}")));
                }
                table.set(&s, parse_count(&record[col], &format!("{a},{b},q{k:02}"))?);
            }
        }
        Ok(table)
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        Self::from_csv_reader(s.as_bytes())
    }

    /// Wide form; rows with any missing entry are omitted.
    pub fn to_wide_csv(&self) -> String {
        let mut out = String::from("qubit1,qubit4");
        for k in 0..TOMO_SETTINGS {
            out.push_str(&format!(",q{k:02}"));
        }
        out.push('\n');
        for (pair, row) in self.counts.chunks(TOMO_SETTINGS).enumerate() {
            if row.iter().any(Option::is_none) {
                continue;
            }
            let a = QubitSetting::ALL[pair / QUBIT_SETTINGS];
            let b = QubitSetting::ALL[pair % QUBIT_SETTINGS];
            out.push_str(&format!("{a},{b}"));
            for n in row.iter().flatten() {
                out.push_str(&format!(",{n}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("qubit1,qubit4,qutrit,count\n");
        for (s, n) in self.iter() {
            if let Some(n) = n {
                out.push_str(&format!("{},{},{},{n}\n", s.qubit1, s.qubit4, s.qutrit));
            }
        }
        out
    }
}

/// Independent Poisson draws at the expected rates for `settings`.
pub fn simulate_counts(
    rho: &DensityOperator,
    settings: &[MeasurementSetting],
    n0: f64,
    seed: u64,
) -> Result<CountTable> {
    if !(n0 >= 0.0) || !n0.is_finite() {
        return Err(Error::ParameterRange {
            name: "n0",
            value: n0,
            range: "[0, inf)",
        });
    }
    let model = SettingModel::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = CountTable::empty();
    for s in settings {
        let rate = model.expected_rate(rho, s, n0)?;
        table.set(s, poisson_draw(rate, &mut rng));
    }
    Ok(table)
}

pub fn simulate_all_counts(rho: &DensityOperator, n0: f64, seed: u64) -> Result<CountTable> {
    simulate_counts(
        rho,
        &MeasurementSetting::all().collect::<Vec<_>>(),
        n0,
        seed,
    )
}

pub(crate) fn poisson_draw(mean: f64, rng: &mut impl rand::Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .map(|d| d.sample(rng) as u64)
        .unwrap_or(0)
}

/// The transcribed published count table (wide form).
pub const PUBLISHED_COUNTS_CSV: &str = include_str!("../../data/tomography_counts.csv");
/// SHA-256 of [`PUBLISHED_COUNTS_CSV`] at transcription time.
pub const PUBLISHED_COUNTS_SHA256: &str =
    "93e6024b4eceebbdab1c65627e8e7112999bfc8f45cb2f4857c64e507666e789";
pub const PUBLISHED_TOTAL: u64 = 56079;
pub const PUBLISHED_ROW_SUMS: [u64; 36] = [
    2039, 1348, 1716, 1887, 1629, 1794, 891, 1799, 1415, 1424, 1418, 1357, 1403, 1592, 1965, 1127,
    1523, 1563, 1529, 1666, 1125, 2045, 1560, 1599, 1482, 1496, 1452, 1620, 1948, 1203, 1355, 1704,
    1660, 1607, 1184, 1954,
];
pub const PUBLISHED_COLUMN_SUMS: [u64; TOMO_SETTINGS] = [
    5451, 3027, 5699, 3591, 3606, 3914, 3836, 2957, 2807, 3966, 3619, 3992, 3824, 2875, 2915,
];
/// Integration time per setting, seconds.
pub const PUBLISHED_INTEGRATION_TIME: f64 = 480.0;

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Parses a copy of the published table and checks the recorded row and
/// column sums. Returns the table and whether the checksum also matches.
pub fn verify_published_table(csv: &str) -> Result<(CountTable, bool)> {
    let mut table = CountTable::from_csv_str(csv)?;
    if !table.is_complete() {
        return Err(Error::Data(format!(
            "{} settings missing from the published table",
            table.missing().len()
        )));
    }
    if table.row_sums() != PUBLISHED_ROW_SUMS
        || table.column_sums() != PUBLISHED_COLUMN_SUMS
        || table.total() != PUBLISHED_TOTAL
    {
        return Err(Error::Data(
            "row/column sums differ from the transcription record".into(),
        ));
    }
    table.integration_time = Some(PUBLISHED_INTEGRATION_TIME);
    Ok((table, sha256_hex(csv.as_bytes()) == PUBLISHED_COUNTS_SHA256))
}

/// The bundled published counts, verified.
pub fn published_counts() -> Result<CountTable> {
    let (table, checksum_ok) = verify_published_table(PUBLISHED_COUNTS_CSV)?;
    if !checksum_ok {
        return Err(Error::Data("bundled count table checksum mismatch".into()));
    }
    Ok(table)
}
