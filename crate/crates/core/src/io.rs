//! Plain-text series files, CSV columns and `s,F` curve tables.
//!
//! Numbers are written with 17 significant digits so every `f64` survives a
//! write/read cycle unchanged.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fluctuation::{FluctuationCurve, Method};
use crate::series::Series;

/// Formats a value with 17 significant decimal digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses the plain-text series format: one value per line; blank lines and
/// lines starting with `#` are skipped.
pub fn parse_series_text(text: &str) -> Result<Series> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v = t
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("line {}: `{t}` is not a number", lineno + 1)))?;
        values.push(v);
    }
    Series::new(values)
}

pub fn read_series_text(path: &Path) -> Result<Series> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let label = path.file_name().map(|n| n.to_string_lossy().into_owned());
    let s = parse_series_text(&text)?;
    Ok(match label {
        Some(l) => s.with_label(l),
        None => s,
    })
}

pub fn series_to_text(series: &Series, header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    for v in series.values() {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

/// Reads one numeric column of a CSV file. `column` is a header name or a
/// zero-based index; `None` selects the first column. A header row is
/// detected when the selected field of the first row is not a number.
pub fn read_csv_column(path: &Path, column: Option<&str>) -> Result<Series> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_csv_column(&text, column)
}

pub fn parse_csv_column(text: &str, column: Option<&str>) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let first = records
        .next()
        .ok_or_else(|| Error::InvalidInput("CSV input is empty".into()))??;

    let by_index = column.map(|c| c.parse::<usize>());
    let (idx, header) = match by_index {
        None => (0, first.get(0).is_some_and(|f| f.parse::<f64>().is_err())),
        Some(Ok(i)) => (i, first.get(i).is_some_and(|f| f.parse::<f64>().is_err())),
        Some(Err(_)) => {
            let name = column.unwrap_or_default();
            let i = first
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidInput(format!("CSV has no column named `{name}`")))?;
            (i, true)
        }
    };

    let mut values = Vec::new();
    let parse = |rec: &csv::StringRecord, row: usize| -> Result<f64> {
        let field = rec
            .get(idx)
            .ok_or_else(|| Error::Parse(format!("row {row}: missing column {idx}")))?;
        field
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("row {row}: `{field}` is not a number")))
    };
    if !header {
        values.push(parse(&first, 1)?);
    }
    for (i, rec) in records.enumerate() {
        values.push(parse(&rec?, i + 2)?);
    }
    Series::new(values)
}

/// Serializes a curve as CSV with header `s,F`.
pub fn curve_to_csv(curve: &FluctuationCurve) -> String {
    let mut out = String::from("s,F\n");
    for (s, f) in curve.points() {
        out.push_str(&format!("{s},{}\n", fmt_f64(f)));
    }
    out
}

/// Parses an `s,F` table back into a curve. Method and series length are not
/// part of the table and must be supplied.
pub fn parse_curve_csv(
    text: &str,
    method: Method,
    series_length: usize,
) -> Result<FluctuationCurve> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("curve CSV lacks a `{name}` column")))
    };
    let (is, iff) = (col("s")?, col("F")?);
    let (mut scales, mut values) = (Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let s = rec[is]
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("row {}: bad scale `{}`", row + 2, &rec[is])))?;
        let f = rec[iff]
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("row {}: bad value `{}`", row + 2, &rec[iff])))?;
        scales.push(s);
        values.push(f);
    }
    FluctuationCurve::from_points(method, scales, values, series_length)
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partially written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let res = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = res {
        let _ = fs::remove_file(&tmp);
        return Err(Error::Io(format!("{}: {e}", path.display())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_format_skips_comments() {
        let s = parse_series_text("# header\n1.5\n\n  -2\n# mid\n3e-1\n").unwrap();
        assert_eq!(s.values(), &[1.5, -2.0, 0.3]);
        assert!(parse_series_text("1\nabc\n").is_err());
        assert!(parse_series_text("# only comments\n").is_err());
    }

    #[test]
    fn text_round_trip_is_lossless() {
        let v = vec![
            0.1,
            -1.0 / 3.0,
            1e-300,
            12345.678901234567,
            f64::MIN_POSITIVE,
        ];
        let s = Series::new(v).unwrap();
        let back = parse_series_text(&series_to_text(&s, &["x".into()])).unwrap();
        assert_eq!(back.values(), s.values());
    }

    #[test]
    fn csv_column_selection() {
        let text = "t,value,other\n0,1.5,9\n1,2.5,8\n";
        assert_eq!(
            parse_csv_column(text, Some("value")).unwrap().values(),
            &[1.5, 2.5]
        );
        assert_eq!(
            parse_csv_column(text, Some("2")).unwrap().values(),
            &[9.0, 8.0]
        );
        assert_eq!(
            parse_csv_column("4\n5\n", None).unwrap().values(),
            &[4.0, 5.0]
        );
        assert!(parse_csv_column(text, Some("missing")).is_err());
    }

    #[test]
    fn curve_csv_round_trip() {
        let c = FluctuationCurve::from_points(
            Method::Cma,
            vec![3, 5, 7],
            vec![0.1, 1.0 / 7.0, 2.5e10],
            100,
        )
        .unwrap();
        let text = curve_to_csv(&c);
        assert!(text.starts_with("s,F\n3,"));
        let back = parse_curve_csv(&text, Method::Cma, 100).unwrap();
        assert_eq!(back, c);
    }
}
