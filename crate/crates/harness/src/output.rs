//! CSV metrics and gnuplot scripts.

use std::fs;
use std::io::Write;
use std::path::Path;

use arcs::record::{RecordRow, RowFlag};
use arcs::RunRecord;

use crate::HarnessError;

pub const CSV_HEADER: [&str; 10] = ["solver", "epoch", "t", "gqo", "fqo", "lo", "elapsed_ns", "objective", "subopt", "flag"];

/// Rows of all records, stably sorted by `(solver, epoch, t)`.
pub fn sorted_rows(records: &[RunRecord]) -> Vec<&RecordRow> {
    let mut rows: Vec<&RecordRow> = records.iter().flat_map(|r| &r.rows).collect();
    rows.sort_by(|a, b| (&a.solver, a.epoch, a.t).cmp(&(&b.solver, b.epoch, b.t)));
    rows
}

fn float(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in sorted_rows(records) {
        w.write_record([
            r.solver.clone(),
            r.epoch.to_string(),
            r.t.to_string(),
            r.gqo.to_string(),
            r.fqo.to_string(),
            r.lo.to_string(),
            r.elapsed_ns.to_string(),
            float(r.objective),
            r.subopt.map(float).unwrap_or_default(),
            r.flag.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv(records, std::io::BufWriter::new(file)).map_err(|e| HarnessError::Output {
        file: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Parses a metrics CSV back into rows.
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<RecordRow>, String> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(format!("unexpected header {header:?}"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let int = |k: usize| rec[k].parse::<u64>().map_err(|e| format!("column {}: {e}", CSV_HEADER[k]));
        let subopt = if rec[8].is_empty() {
            None
        } else {
            Some(rec[8].parse::<f64>().map_err(|e| format!("subopt: {e}"))?)
        };
        rows.push(RecordRow {
            solver: rec[0].to_string(),
            epoch: int(1)?,
            t: int(2)?,
            gqo: int(3)?,
            fqo: int(4)?,
            lo: int(5)?,
            elapsed_ns: int(6)?,
            objective: rec[7].parse().map_err(|e| format!("objective: {e}"))?,
            subopt,
            flag: RowFlag::parse(&rec[9]).ok_or_else(|| format!("unknown flag `{}`", &rec[9]))?,
        });
    }
    Ok(rows)
}

/// A record is plotted against function queries when it issued no
/// gradient queries.
fn x_column(record: &RunRecord) -> (usize, &'static str) {
    let last = record.rows.last();
    match last {
        Some(r) if r.gqo == 0 && r.fqo > 0 => (5, "fqo"),
        _ => (4, "gqo"),
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Gnuplot script plotting suboptimality (log scale) against oracle calls
/// for every solver in `records`, reading `csv_name` from its own directory.
pub fn plot_script(records: &[RunRecord], csv_name: &str) -> String {
    let mut series: Vec<(&str, usize, &str)> = Vec::new();
    for r in records {
        if !series.iter().any(|(s, _, _)| *s == r.solver) {
            let (col, axis) = x_column(r);
            series.push((&r.solver, col, axis));
        }
    }
    series.sort();
    let axes: Vec<&str> = series.iter().map(|s| s.2).collect();
    let xlabel = if axes.iter().all(|a| *a == "fqo") {
        "function queries"
    } else if axes.iter().all(|a| *a == "gqo") {
        "gradient queries"
    } else {
        "oracle queries (gqo first-order, fqo zeroth-order)"
    };
    let mut s = String::new();
    s.push_str("set datafile separator \",\"\n");
    s.push_str("set terminal png size 900,600\n");
    s.push_str("set output \"plot.png\"\n");
    s.push_str("set logscale y\n");
    s.push_str("set format y \"%.0e\"\n");
    s.push_str(&format!("set xlabel \"{xlabel}\"\n"));
    s.push_str("set ylabel \"f(x) - f*\"\n");
    s.push_str("set key top right\n");
    if series.is_empty() {
        s.push_str("set label \"no data\" at graph 0.5, graph 0.5 center\n");
        s.push_str("plot 1/0 notitle\n");
        return s;
    }
    let parts: Vec<String> = series
        .iter()
        .map(|(name, col, _)| {
            format!(
                "{file} skip 1 using (strcol(1) eq {id} ? column({col}) : 1/0):(column(9) > 0 ? column(9) : 1/0) \
                 with linespoints title {id}",
                file = quote(csv_name),
                id = quote(name),
            )
        })
        .collect();
    s.push_str("plot ");
    s.push_str(&parts.join(", \\\n     "));
    s.push('\n');
    s
}

pub fn emit_plot_script(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    fs::write(path, plot_script(records, "metrics.csv")).map_err(|e| HarnessError::io(path, e))
}
