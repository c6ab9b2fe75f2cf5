//! CSV and text formats for count records, projector settings, scans,
//! spectra, correlation matrices and density matrices.
//!
//! Every writer takes a list of `key = value` metadata pairs that are emitted
//! as leading `#` comment lines; readers skip them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::binops::EomKind;
use crate::correlate::FringeScan;
use crate::error::{Error, Result};
use crate::pairgen::CountRecord;
use crate::qudit::CorrelationMatrix;
use crate::state::CMatrix;
use crate::tomo::{ArmSetting, TomographySettings};

/// Metadata emitted as `# key = value` lines.
pub type Meta = [(String, String)];

fn comment_block(meta: &Meta) -> String {
    let mut s = String::new();
    for (k, v) in meta {
        writeln!(s, "# {k} = {v}").unwrap();
    }
    s
}

fn with_csv<F>(meta: &Meta, body: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    body(&mut w)?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))?;
    Ok(comment_block(meta) + &text)
}

/// One row of the count-record table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub setting_id: usize,
    pub proj_s: String,
    pub proj_i: String,
    pub phase_s_rad: f64,
    pub phase_i_rad: f64,
    pub singles_s: u64,
    pub singles_i: u64,
    pub coinc: u64,
    pub accidental: f64,
    pub t_acq_s: f64,
}

impl CountRow {
    /// Record with the given window and seed (neither is stored in the table).
    pub fn record(&self, window_s: f64, seed: u64) -> CountRecord {
        CountRecord {
            setting_id: self.setting_id,
            singles_signal: self.singles_s,
            singles_idler: self.singles_i,
            coincidences: self.coinc,
            accidentals: self.accidental,
            window_s,
            t_acq_s: self.t_acq_s,
            seed,
        }
    }
}

fn arm_phase(a: &ArmSetting) -> f64 {
    a.eom.as_ref().map_or(0.0, |e| e.drive_phase)
}

/// Count records, labelled with projector names when `settings` is given.
pub fn write_counts(records: &[CountRecord], settings: Option<&TomographySettings>, meta: &Meta) -> Result<String> {
    with_csv(meta, |w| {
        for r in records {
            let s = settings.and_then(|set| set.settings.iter().find(|s| s.id == r.setting_id));
            let row = CountRow {
                setting_id: r.setting_id,
                proj_s: s.map_or("-".into(), |s| s.signal.name.clone()),
                proj_i: s.map_or("-".into(), |s| s.idler.name.clone()),
                phase_s_rad: s.map_or(0.0, |s| arm_phase(&s.signal)),
                phase_i_rad: s.map_or(0.0, |s| arm_phase(&s.idler)),
                singles_s: r.singles_signal,
                singles_i: r.singles_idler,
                coinc: r.coincidences,
                accidental: r.accidentals,
                t_acq_s: r.t_acq_s,
            };
            w.serialize(row)?;
        }
        Ok(())
    })
}

pub fn read_counts(text: &str) -> Result<Vec<CountRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let rows = r.deserialize().collect::<std::result::Result<Vec<CountRow>, _>>()?;
    Ok(rows)
}

#[derive(Serialize)]
struct SettingRow<'a> {
    setting_id: usize,
    arm: &'a str,
    kind: &'a str,
    #[serde(rename = "f_m_GHz")]
    f_m_ghz: f64,
    beta: f64,
    phase_rad: f64,
    #[serde(rename = "selected_center_GHz")]
    selected_center_ghz: f64,
}

/// Two rows per setting (signal, idler); untuned arms report NaN.
pub fn write_settings(settings: &TomographySettings, meta: &Meta) -> Result<String> {
    with_csv(meta, |w| {
        for s in &settings.settings {
            for (arm, a) in [("signal", &s.signal), ("idler", &s.idler)] {
                let kind = match a.eom.as_ref().map(|e| e.kind) {
                    Some(EomKind::AmplitudeDsbSc) => "amplitude",
                    Some(EomKind::Phase) => "phase",
                    None => "ideal",
                };
                w.serialize(SettingRow {
                    setting_id: s.id,
                    arm,
                    kind,
                    f_m_ghz: a.eom.as_ref().map_or(f64::NAN, |e| e.f_m_ghz),
                    beta: a.eom.as_ref().map_or(f64::NAN, |e| e.beta),
                    phase_rad: arm_phase(a),
                    selected_center_ghz: a.selected_center_ghz.unwrap_or(f64::NAN),
                })?;
            }
        }
        Ok(())
    })
}

pub fn write_fringe(scan: &FringeScan, meta: &Meta) -> Result<String> {
    with_csv(meta, |w| {
        w.write_record(["x_value", "rate_hz_or_g2", "sigma"])?;
        for s in &scan.samples {
            w.write_record([s.x.to_string(), s.y.to_string(), s.sigma.to_string()])?;
        }
        Ok(())
    })
}

/// Two-column spectrum; frequencies as given (GHz).
pub fn write_spectrum(points: &[(f64, f64)], meta: &Meta) -> Result<String> {
    write_table(&["frequency_GHz", "transmission"], &points.iter().map(|&(f, t)| vec![f, t]).collect::<Vec<_>>(), meta)
}

/// Generic numeric table.
pub fn write_table(columns: &[&str], rows: &[Vec<f64>], meta: &Meta) -> Result<String> {
    with_csv(meta, |w| {
        w.write_record(columns)?;
        for row in rows {
            if row.len() != columns.len() {
                return Err(Error::DimensionMismatch { expected: columns.len(), found: row.len() });
            }
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        Ok(())
    })
}

/// Counts block with signal bins as rows and idler bins as columns.
pub fn write_correlation_matrix(m: &CorrelationMatrix, meta: &Meta) -> Result<String> {
    let mut meta = meta.to_vec();
    meta.push(("t_acq_s".into(), m.t_acq_s.to_string()));
    meta.push(("floor_hz".into(), m.floor_hz.to_string()));
    meta.push(("correlated_ratio".into(), m.correlated_ratio().to_string()));
    let di = m.counts.first().map_or(0, Vec::len);
    with_csv(&meta, |w| {
        let mut head = vec!["signal_bin".to_string()];
        head.extend((0..di).map(|k| format!("idler_{k}")));
        w.write_record(&head)?;
        for (l, row) in m.counts.iter().enumerate() {
            let mut rec = vec![l.to_string()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

fn sig12(x: f64) -> String {
    // 12 significant digits
    format!("{x:.11e}")
}

/// Real block, imaginary block (row-major, 12 significant digits) and a
/// `key = value` metrics block.
pub fn write_density_matrix(rho: &CMatrix, metrics: &Meta, meta: &Meta) -> String {
    let mut s = comment_block(meta);
    for (title, part) in [("real", rho.map(|z| z.re)), ("imag", rho.map(|z| z.im))] {
        writeln!(s, "[{title}]").unwrap();
        for r in 0..part.nrows() {
            let row: Vec<String> = (0..part.ncols()).map(|c| sig12(part[(r, c)])).collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
    }
    writeln!(s, "[metrics]").unwrap();
    for (k, v) in metrics {
        writeln!(s, "{k} = {v}").unwrap();
    }
    s
}
