//! CSV rows of a study, rate columns and the summary table.

use std::io::Write;
use std::path::Path;

use crate::CliError;

pub const HEADER: [&str; 22] = [
    "mesh",
    "k",
    "mu",
    "rho0",
    "lambda_policy",
    "estimator",
    "N",
    "h",
    "ndof",
    "E1",
    "rate_E1",
    "E2",
    "rate_E2",
    "E3",
    "rate_E3",
    "eta",
    "rate_eta",
    "err_uhuI_1h",
    "rate_uhuI",
    "knorm_L2",
    "J0_jump",
    "status",
];

/// One (k, mu, N) cell. Error fields are `None` when not computed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyRecord {
    pub mesh: String,
    pub k: f64,
    pub mu: f64,
    pub rho0: f64,
    pub lambda_policy: String,
    pub estimator: String,
    pub n: usize,
    pub h: Option<f64>,
    pub ndof: Option<usize>,
    pub e1: Option<f64>,
    pub rate_e1: Option<f64>,
    pub e2: Option<f64>,
    pub rate_e2: Option<f64>,
    pub e3: Option<f64>,
    pub rate_e3: Option<f64>,
    pub eta: Option<f64>,
    pub rate_eta: Option<f64>,
    pub err_uhui_1h: Option<f64>,
    pub rate_uhui: Option<f64>,
    pub knorm_l2: Option<f64>,
    pub j0_jump: Option<f64>,
    pub status: String,
    /// Seconds spent on the cell; not part of the CSV.
    pub wall_time: f64,
}

/// Scientific notation with 6 significant digits and a two-digit exponent,
/// e.g. `4.80520e-02`.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Parameters print in their shortest round-trip form.
fn format_param(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sci).unwrap_or_default()
}

/// The value as it will read back from the CSV.
fn rounded(x: f64) -> f64 {
    format_sci(x).parse().unwrap_or(x)
}

fn rate(prev: Option<f64>, curr: Option<f64>) -> Option<f64> {
    let (p, c) = (rounded(prev?), rounded(curr?));
    if p == 0.0 || c == 0.0 {
        return None;
    }
    Some((p / c).log2())
}

impl StudyRecord {
    fn group(&self) -> (&str, u64, u64) {
        (&self.mesh, self.k.to_bits(), self.mu.to_bits())
    }

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.mesh.clone(),
            format_param(self.k),
            format_param(self.mu),
            format_param(self.rho0),
            self.lambda_policy.clone(),
            self.estimator.clone(),
            self.n.to_string(),
            opt(self.h),
            self.ndof.map(|d| d.to_string()).unwrap_or_default(),
            opt(self.e1),
            opt(self.rate_e1),
            opt(self.e2),
            opt(self.rate_e2),
            opt(self.e3),
            opt(self.rate_e3),
            opt(self.eta),
            opt(self.rate_eta),
            opt(self.err_uhui_1h),
            opt(self.rate_uhui),
            opt(self.knorm_l2),
            opt(self.j0_jump),
            self.status.clone(),
        ]
    }

    pub fn from_fields(f: &csv::StringRecord) -> Result<Self, CliError> {
        if f.len() != HEADER.len() {
            return Err(CliError::Config(format!("row has {} fields, expected {}", f.len(), HEADER.len())));
        }
        let num = |i: usize| -> Result<Option<f64>, CliError> {
            let s = &f[i];
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("column {}: `{s}` is not a number", HEADER[i])))
        };
        let req = |i: usize| num(i)?.ok_or_else(|| CliError::Config(format!("column {} is empty", HEADER[i])));
        let int = |i: usize| -> Result<Option<usize>, CliError> {
            if f[i].is_empty() {
                return Ok(None);
            }
            f[i].parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("column {}: `{}` is not an integer", HEADER[i], &f[i])))
        };
        Ok(StudyRecord {
            mesh: f[0].to_string(),
            k: req(1)?,
            mu: req(2)?,
            rho0: req(3)?,
            lambda_policy: f[4].to_string(),
            estimator: f[5].to_string(),
            n: int(6)?.ok_or_else(|| CliError::Config("column N is empty".into()))?,
            h: num(7)?,
            ndof: int(8)?,
            e1: num(9)?,
            rate_e1: num(10)?,
            e2: num(11)?,
            rate_e2: num(12)?,
            e3: num(13)?,
            rate_e3: num(14)?,
            eta: num(15)?,
            rate_eta: num(16)?,
            err_uhui_1h: num(17)?,
            rate_uhui: num(18)?,
            knorm_l2: num(19)?,
            j0_jump: num(20)?,
            status: f[21].to_string(),
            wall_time: 0.0,
        })
    }
}

/// Fills the rate columns: `log2(E_prev / E_curr)` between consecutive rows
/// of the same (mesh, k, mu) group, blank where either value is missing or
/// zero. Rows of a group must have N doubling from one to the next.
pub fn compute_rates(records: &mut [StudyRecord]) -> Result<(), CliError> {
    for i in 0..records.len() {
        let prev = records[..i].iter().rposition(|r| r.group() == records[i].group());
        let Some(p) = prev else {
            let r = &mut records[i];
            (r.rate_e1, r.rate_e2, r.rate_e3, r.rate_eta, r.rate_uhui) = (None, None, None, None, None);
            continue;
        };
        if records[i].n != 2 * records[p].n {
            return Err(CliError::Config(format!(
                "non-doubling N sequence ({} then {}) for mesh {} k = {} mu = {}",
                records[p].n, records[i].n, records[i].mesh, records[i].k, records[i].mu
            )));
        }
        let prev = records[p].clone();
        let r = &mut records[i];
        r.rate_e1 = rate(prev.e1, r.e1);
        r.rate_e2 = rate(prev.e2, r.e2);
        r.rate_e3 = rate(prev.e3, r.e3);
        r.rate_eta = rate(prev.eta, r.eta);
        r.rate_uhui = rate(prev.err_uhui_1h, r.err_uhui_1h);
    }
    Ok(())
}

pub fn write_csv_to<W: Write>(records: &[StudyRecord], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial CSV.
pub fn write_csv(records: &[StudyRecord], path: &Path) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_csv_to(records, tmp.as_file_mut())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<StudyRecord>, CliError> {
    let mut rd = csv::Reader::from_path(path)?;
    let header = rd.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(CliError::Config(format!("{}: unexpected CSV header", path.display())));
    }
    rd.records().map(|r| StudyRecord::from_fields(&r?)).collect()
}

const SUMMARY_COLUMNS: [&str; 14] = [
    "mesh",
    "k",
    "mu",
    "N",
    "E1",
    "rate_E1",
    "E2",
    "rate_E2",
    "E3",
    "rate_E3",
    "eta",
    "err_uhuI_1h",
    "rate_uhuI",
    "status",
];

/// Fixed-width table of selected CSV columns, with the CSV's own strings.
pub fn summary_table(records: &[StudyRecord]) -> String {
    let idx: Vec<usize> = SUMMARY_COLUMNS
        .iter()
        .map(|c| HEADER.iter().position(|h| h == c).expect("summary column in header"))
        .collect();
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let f = r.fields();
            idx.iter().map(|&i| f[i].clone()).collect()
        })
        .collect();
    let mut width: Vec<usize> = SUMMARY_COLUMNS.iter().map(|c| c.len()).collect();
    for row in &rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&SUMMARY_COLUMNS.map(String::from));
    for row in &rows {
        out += &line(row);
    }
    out
}
