//! CSV rows and gnuplot-ready data files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "experiment",
    "scheme",
    "N",
    "L_over_lambda",
    "sigma_theta_deg",
    "theta_bin_deg",
    "M",
    "stat",
    "value",
    "flags",
];

/// Floats carry 9 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// One CSV record. Descriptor columns that do not apply stay empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvRow {
    pub experiment: String,
    pub scheme: String,
    pub n: Option<usize>,
    pub l_over_lambda: Option<f64>,
    pub sigma_theta_deg: Option<f64>,
    /// Bin centre in degrees, or `pooled` over all bins.
    pub theta_bin: Option<String>,
    /// Snapshot count, or `perfect` for true statistics.
    pub m: Option<String>,
    pub stat: String,
    pub value: f64,
    pub flags: String,
}

impl CsvRow {
    fn fields(&self) -> [String; 10] {
        let opt_f = |x: Option<f64>| x.map(format_float).unwrap_or_default();
        [
            self.experiment.clone(),
            self.scheme.clone(),
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            opt_f(self.l_over_lambda),
            opt_f(self.sigma_theta_deg),
            self.theta_bin.clone().unwrap_or_default(),
            self.m.clone().unwrap_or_default(),
            self.stat.clone(),
            format_float(self.value),
            self.flags.clone(),
        ]
    }

    fn from_record(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::MalformedCsv(format!(
                "line {line}: expected {} fields, found {}",
                CSV_HEADER.len(),
                rec.len()
            )));
        }
        let bad = |what: &str, s: &str| Error::MalformedCsv(format!("line {line}: bad {what} {s:?}"));
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
        let opt_f = |i: usize, what: &str| -> Result<Option<f64>> {
            let s = &rec[i];
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(what, s))
            }
        };
        Ok(CsvRow {
            experiment: rec[0].to_string(),
            scheme: rec[1].to_string(),
            n: if rec[2].is_empty() {
                None
            } else {
                Some(rec[2].parse().map_err(|_| bad("N", &rec[2]))?)
            },
            l_over_lambda: opt_f(3, "L_over_lambda")?,
            sigma_theta_deg: opt_f(4, "sigma_theta_deg")?,
            theta_bin: opt(&rec[5]),
            m: opt(&rec[6]),
            stat: rec[7].to_string(),
            value: rec[8].parse().map_err(|_| bad("value", &rec[8]))?,
            flags: rec[9].to_string(),
        })
    }
}

pub fn write_csv<W: Write>(rows: &[CsvRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[CsvRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::MalformedCsv(e.to_string()))
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = r.headers().map_err(|e| Error::MalformedCsv(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::MalformedCsv(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::MalformedCsv(e.to_string()))?;
        rows.push(CsvRow::from_record(&rec, i + 2)?);
    }
    Ok(rows)
}

/// Float key with a total order, for deterministic grouping.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn series_name(row: &CsvRow) -> String {
    match &row.m {
        Some(m) => format!("{}_M{}", row.scheme, m),
        None => row.scheme.clone(),
    }
}

fn write_table(
    path: &Path,
    x_name: &str,
    table: &BTreeMap<Key, BTreeMap<String, f64>>,
    columns: &BTreeSet<String>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# {x_name}"));
    for c in columns {
        out.push(' ');
        out.push_str(c);
    }
    out.push('\n');
    for (x, row) in table {
        out.push_str(&format_float(x.0));
        for c in columns {
            out.push(' ');
            out.push_str(&row.get(c).map_or_else(|| "NaN".to_string(), |v| format_float(*v)));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_script(path: &Path, data: &Path, x_name: &str, columns: &BTreeSet<String>, logscale: &str) -> Result<()> {
    let file = data.file_name().and_then(|s| s.to_str()).unwrap_or_default();
    let mut s = format!("set xlabel '{x_name}'\nset ylabel 'NMSEE'\nset logscale {logscale}\nset key outside\nplot \\\n");
    let n = columns.len();
    for (i, c) in columns.iter().enumerate() {
        s.push_str(&format!("  '{file}' using 1:{} with linespoints title '{c}'", i + 2));
        s.push_str(if i + 1 < n { ", \\\n" } else { "\n" });
    }
    fs::write(path, s)?;
    Ok(())
}

/// Writes one whitespace-delimited `.dat` file per experiment in `rows` (plus
/// a `.gp` script stub), returning the paths written. Line-plot experiments
/// tabulate the `mean` (bench: timing medians) against the swept variable;
/// fig3 gets a box table and a separate outlier list.
pub fn emit_plotdata(rows: &[CsvRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let experiments: BTreeSet<&str> = rows.iter().map(|r| r.experiment.as_str()).collect();
    let mut written = Vec::new();
    for exp in experiments {
        let of_exp = rows.iter().filter(|r| r.experiment == exp);
        match exp {
            "fig1" | "fig2" | "fig4" | "bench" => {
                let (x_name, logscale) = match exp {
                    "fig2" => ("sigma_theta_deg", "y"),
                    "bench" => ("N", "xy"),
                    _ => ("L_over_lambda", "xy"),
                };
                let mut table: BTreeMap<Key, BTreeMap<String, f64>> = BTreeMap::new();
                let mut columns = BTreeSet::new();
                for r in of_exp {
                    let (x, col) = match exp {
                        "bench" => match r.n {
                            Some(n) if r.stat.ends_with("_s") => (n as f64, format!("{}_{}", r.scheme, r.stat)),
                            _ => continue,
                        },
                        _ if r.stat != "mean" => continue,
                        "fig2" => (
                            r.sigma_theta_deg
                                .ok_or_else(|| Error::MalformedCsv("fig2 row without sigma_theta_deg".into()))?,
                            series_name(r),
                        ),
                        _ => (
                            r.l_over_lambda
                                .ok_or_else(|| Error::MalformedCsv(format!("{exp} row without L_over_lambda")))?,
                            series_name(r),
                        ),
                    };
                    table.entry(Key(x)).or_default().insert(col.clone(), r.value);
                    columns.insert(col);
                }
                let data = out_dir.join(format!("{exp}.dat"));
                write_table(&data, x_name, &table, &columns)?;
                let script = out_dir.join(format!("{exp}.gp"));
                write_script(&script, &data, x_name, &columns, logscale)?;
                written.push(data);
                written.push(script);
            }
            "fig3" => {
                const BOX: [&str; 6] = ["median", "q1", "q3", "whisker_low", "whisker_high", "mean"];
                type BoxKey = (String, String, Key);
                let mut boxes: BTreeMap<BoxKey, BTreeMap<&str, f64>> = BTreeMap::new();
                let mut outliers: Vec<(BoxKey, Key)> = Vec::new();
                for r in of_exp {
                    let Some(theta) = r.theta_bin.as_deref().and_then(|t| t.parse::<f64>().ok()) else {
                        continue;
                    };
                    let key = (r.scheme.clone(), r.m.clone().unwrap_or_default(), Key(theta));
                    if r.stat == "outlier" {
                        outliers.push((key, Key(r.value)));
                    } else if let Some(s) = BOX.iter().find(|s| **s == r.stat) {
                        boxes.entry(key).or_default().insert(s, r.value);
                    }
                }
                outliers.sort();
                let data = out_dir.join("fig3_box.dat");
                let mut s = format!("# scheme M theta_bin_deg {}\n", BOX.join(" "));
                for ((scheme, m, theta), stats) in &boxes {
                    s.push_str(&format!("{scheme} {m} {}", format_float(theta.0)));
                    for b in BOX {
                        s.push(' ');
                        s.push_str(&stats.get(b).map_or_else(|| "NaN".to_string(), |v| format_float(*v)));
                    }
                    s.push('\n');
                }
                fs::write(&data, s)?;
                let odata = out_dir.join("fig3_outliers.dat");
                let mut s = String::from("# scheme M theta_bin_deg value\n");
                for ((scheme, m, theta), v) in &outliers {
                    s.push_str(&format!("{scheme} {m} {} {}\n", format_float(theta.0), format_float(v.0)));
                }
                fs::write(&odata, s)?;
                let script = out_dir.join("fig3.gp");
                fs::write(
                    &script,
                    "set xlabel 'theta_bin_deg'\nset ylabel 'NMSEE'\nset logscale y\n\
                     # columns: 3 theta, 5 q1, 7 whisker_low, 8 whisker_high, 6 q3, 4 median\n\
                     plot 'fig3_box.dat' using 3:5:7:8:6 with candlesticks whiskerbars title 'box', \\\n  \
                     'fig3_box.dat' using 3:4:4:4:4 with candlesticks notitle, \\\n  \
                     'fig3_outliers.dat' using 3:4 with points pt 6 title 'outliers'\n",
                )?;
                written.extend([data, odata, script]);
            }
            other => return Err(Error::MalformedCsv(format!("unknown experiment {other:?}"))),
        }
    }
    Ok(written)
}
