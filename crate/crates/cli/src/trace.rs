//! CSV trace files.
//!
//! Line 1 is `# created: <timestamp>`, line 2 is
//! `# problem=<name> k=<k> rho=<ρ> eps_prime=<ε′> alpha=<α>`, then a header row
//! and one row per outer iteration. Oracle-backed columns are empty when no
//! oracle was available. Floats use the shortest representation that parses
//! back to the same value.

use std::path::Path;

use stackelberg_core::Record;

use crate::error::CliError;

pub const FIXED_COLUMNS: [&str; 15] = [
    "t",
    "lambda",
    "delta",
    "eta",
    "M_y",
    "M_z",
    "grad_evals_cum",
    "surrogate_grad_norm",
    "true_grad_norm",
    "follower_gap_max",
    "E1",
    "E2",
    "E3",
    "err_sq",
    "F_value",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub problem: String,
    pub k: usize,
    pub rho: f64,
    pub eps_prime: f64,
    pub alpha: f64,
}

/// One CSV row. `m_y` and `m_z` are the inner iterations actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub lambda: f64,
    pub delta: f64,
    pub eta: f64,
    pub m_y: usize,
    pub m_z: usize,
    pub grad_evals_cum: usize,
    pub surrogate_grad_norm: f64,
    pub true_grad_norm: Option<f64>,
    pub follower_gap_max: Option<f64>,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub e3: Option<f64>,
    pub err_sq: Option<f64>,
    pub f_value: Option<f64>,
    pub x: Vec<f64>,
}

impl From<&Record> for TraceRow {
    fn from(r: &Record) -> Self {
        Self {
            t: r.t,
            lambda: r.lambda,
            delta: r.delta,
            eta: r.eta,
            m_y: r.m_y_used,
            m_z: r.m_z_used,
            grad_evals_cum: r.grad_evals_cumulative,
            surrogate_grad_norm: r.surrogate_grad_norm,
            true_grad_norm: r.true_grad_norm,
            follower_gap_max: r.follower_gap_max,
            e1: r.e1,
            e2: r.e2,
            e3: r.e3,
            err_sq: r.err_sq,
            f_value: r.f_value,
            x: r.x.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
}

fn float(v: f64) -> String {
    // Debug formatting is the shortest round-trip representation
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

impl Trace {
    /// Number of leader coordinates, taken from the first row.
    pub fn n0(&self) -> usize {
        self.rows.first().map_or(0, |r| r.x.len())
    }

    pub fn header(&self) -> Vec<String> {
        FIXED_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain((0..self.n0()).map(|j| format!("x_{j}")))
            .collect()
    }

    /// Everything after the timestamp line.
    pub fn body(&self) -> Result<String, CliError> {
        let m = &self.meta;
        let mut out = format!(
            "# problem={} k={} rho={} eps_prime={} alpha={}\n",
            m.problem,
            m.k,
            float(m.rho),
            float(m.eps_prime),
            float(m.alpha)
        );
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Trace(e.to_string());
        w.write_record(self.header()).map_err(csv_err)?;
        for r in &self.rows {
            if r.x.len() != self.n0() {
                return Err(CliError::Trace(format!(
                    "row t={} has {} leader coordinates",
                    r.t,
                    r.x.len()
                )));
            }
            let mut cells = vec![
                r.t.to_string(),
                float(r.lambda),
                float(r.delta),
                float(r.eta),
                r.m_y.to_string(),
                r.m_z.to_string(),
                r.grad_evals_cum.to_string(),
                float(r.surrogate_grad_norm),
                opt(r.true_grad_norm),
                opt(r.follower_gap_max),
                opt(r.e1),
                opt(r.e2),
                opt(r.e3),
                opt(r.err_sq),
                opt(r.f_value),
            ];
            cells.extend(r.x.iter().map(|&v| float(v)));
            w.write_record(&cells).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Trace(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn emit(&self, created: &str) -> Result<String, CliError> {
        Ok(format!("# created: {created}\n{}", self.body()?))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let created = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        std::fs::write(path, self.emit(&created)?).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Trace(m) => CliError::Trace(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = |m: String| CliError::Trace(m);
        let mut lines = text.splitn(3, '\n');
        let created = lines.next().unwrap_or_default();
        if !created.starts_with("# created:") {
            return Err(bad("first line must be `# created: ...`".into()));
        }
        let meta_line = lines.next().ok_or_else(|| bad("missing metadata line".into()))?;
        let meta = parse_meta(meta_line)?;
        let rest = lines.next().unwrap_or_default();

        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(rest.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.len() < FIXED_COLUMNS.len() || header[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
            return Err(bad(format!("unexpected header {header:?}")));
        }
        let n0 = header.len() - FIXED_COLUMNS.len();
        for (j, h) in header[FIXED_COLUMNS.len()..].iter().enumerate() {
            if *h != format!("x_{j}") {
                return Err(bad(format!("unexpected column `{h}`")));
            }
        }

        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let cell = |i: usize| rec.get(i).unwrap_or_default();
            let f = |i: usize| -> Result<f64, CliError> {
                cell(i)
                    .parse::<f64>()
                    .map_err(|_| bad(format!("column {}: `{}` is not a number", header[i], cell(i))))
            };
            let u = |i: usize| -> Result<usize, CliError> {
                cell(i)
                    .parse::<usize>()
                    .map_err(|_| bad(format!("column {}: `{}` is not an integer", header[i], cell(i))))
            };
            let o = |i: usize| -> Result<Option<f64>, CliError> {
                if cell(i).is_empty() {
                    Ok(None)
                } else {
                    f(i).map(Some)
                }
            };
            rows.push(TraceRow {
                t: u(0)?,
                lambda: f(1)?,
                delta: f(2)?,
                eta: f(3)?,
                m_y: u(4)?,
                m_z: u(5)?,
                grad_evals_cum: u(6)?,
                surrogate_grad_norm: f(7)?,
                true_grad_norm: o(8)?,
                follower_gap_max: o(9)?,
                e1: o(10)?,
                e2: o(11)?,
                e3: o(12)?,
                err_sq: o(13)?,
                f_value: o(14)?,
                x: (0..n0).map(|j| f(FIXED_COLUMNS.len() + j)).collect::<Result<_, _>>()?,
            });
        }
        Ok(Self { meta, rows })
    }
}

fn parse_meta(line: &str) -> Result<TraceMeta, CliError> {
    let bad = |m: String| CliError::Trace(m);
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| bad("second line must start with `#`".into()))?;
    let mut problem = None;
    let (mut k, mut rho, mut eps_prime, mut alpha) = (None, None, None, None);
    for tok in body.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("metadata token `{tok}` is not key=value")))?;
        let num = || {
            value
                .parse::<f64>()
                .map_err(|_| bad(format!("metadata `{key}` is not a number")))
        };
        match key {
            "problem" => problem = Some(value.to_string()),
            "k" => {
                k = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| bad("metadata `k` is not an integer".into()))?,
                )
            }
            "rho" => rho = Some(num()?),
            "eps_prime" => eps_prime = Some(num()?),
            "alpha" => alpha = Some(num()?),
            other => return Err(bad(format!("unknown metadata key `{other}`"))),
        }
    }
    let missing = |name: &str| bad(format!("metadata is missing `{name}`"));
    Ok(TraceMeta {
        problem: problem.ok_or_else(|| missing("problem"))?,
        k: k.ok_or_else(|| missing("k"))?,
        rho: rho.ok_or_else(|| missing("rho"))?,
        eps_prime: eps_prime.ok_or_else(|| missing("eps_prime"))?,
        alpha: alpha.ok_or_else(|| missing("alpha"))?,
    })
}
