//! CSV formats.
//!
//! * dataset: one point per row, comma-separated coordinates, optional first
//!   line `# dim=<d>`;
//! * weighted set: same, with the weight as the final column;
//! * finite metric: the full distance matrix, one row per line.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Dataset, FiniteMetric, Point, WeightedSet};

fn parse_rows(text: &str) -> Result<(Option<usize>, Vec<Vec<f64>>)> {
    let mut dim = None;
    if let Some(first) = text.lines().find(|l| !l.trim().is_empty()) {
        if let Some(rest) = first.trim().strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("dim=") {
                let d = v.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: 1,
                    message: format!("bad dim header: {e}"),
                })?;
                dim = Some(d);
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: format!("`{f}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((dim, rows))
}

fn check_width(rows: &[Vec<f64>], width: usize) -> Result<()> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {width} columns, found {}", r.len()),
            });
        }
    }
    Ok(())
}

fn fmt_row(values: impl IntoIterator<Item = f64>) -> Vec<String> {
    values.into_iter().map(|v| v.to_string()).collect()
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<Dataset> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (dim, rows) = parse_rows(&text)?;
    if let Some(d) = dim {
        check_width(&rows, d)?;
    }
    Dataset::from_rows(rows)
}

pub fn write_dataset<W: Write>(w: W, data: &Dataset) -> Result<()> {
    write_points(w, data.dim(), data.points().iter().map(|p| p.coords().to_vec()))
}

pub fn write_points<W: Write>(
    mut w: W,
    dim: usize,
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    writeln!(w, "# dim={dim}")?;
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.write_record(fmt_row(row))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_weighted<R: Read>(mut r: R) -> Result<WeightedSet> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (dim, rows) = parse_rows(&text)?;
    if let Some(d) = dim {
        check_width(&rows, d + 1)?;
    }
    let mut points = Vec::with_capacity(rows.len());
    let mut weights = Vec::with_capacity(rows.len());
    for (i, mut row) in rows.into_iter().enumerate() {
        if row.len() < 2 {
            return Err(Error::Parse {
                line: i + 1,
                message: "weighted row needs coordinates and a weight".into(),
            });
        }
        weights.push(row.pop().expect("nonempty row"));
        points.push(Point::new(row)?);
    }
    WeightedSet::new(points, weights)
}

pub fn write_weighted<W: Write>(mut w: W, set: &WeightedSet) -> Result<()> {
    writeln!(w, "# dim={}", set.dim().unwrap_or(0))?;
    let mut out = csv::Writer::from_writer(w);
    for (p, wt) in set.iter() {
        out.write_record(fmt_row(p.coords().iter().copied().chain([wt])))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<FiniteMetric> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (_, rows) = parse_rows(&text)?;
    FiniteMetric::from_rows(rows)
}

pub fn write_matrix<W: Write>(w: W, m: &FiniteMetric) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in m.rows() {
        out.write_record(fmt_row(row))?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

pub fn load_weighted(path: impl AsRef<Path>) -> Result<WeightedSet> {
    read_weighted(BufReader::new(File::open(path)?))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<FiniteMetric> {
    read_matrix(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_with_and_without_header() {
        let x = read_dataset("# dim=2\n0,0\n3, 4\n".as_bytes()).unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(x.point(1).coords(), &[3.0, 4.0]);
        let y = read_dataset("1.5\n-2\n\n7\n".as_bytes()).unwrap();
        assert_eq!(y.scalars().unwrap(), vec![1.5, -2.0, 7.0]);
    }

    #[test]
    fn header_width_is_enforced() {
        assert!(matches!(
            read_dataset("# dim=3\n1,2\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
        assert!(read_dataset("1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn weighted_round_trip() {
        let set = WeightedSet::new(
            vec![Point::new(vec![0.1, -3.0]).unwrap(), Point::new(vec![1e-300, 2.0]).unwrap()],
            vec![3.0, 0.0],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_weighted(&mut buf, &set).unwrap();
        assert_eq!(read_weighted(buf.as_slice()).unwrap(), set);
    }

    #[test]
    fn matrix_is_validated() {
        assert!(read_matrix("0,1\n1,0\n".as_bytes()).is_ok());
        assert!(matches!(
            read_matrix("0,1\n2,0\n".as_bytes()),
            Err(Error::Metric(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dataset_csv_round_trip(rows in prop::collection::vec(
                prop::collection::vec(-1e6f64..1e6, 3), 1..40)) {
                let data = Dataset::from_rows(rows).unwrap();
                let mut buf = Vec::new();
                write_dataset(&mut buf, &data).unwrap();
                prop_assert_eq!(read_dataset(buf.as_slice()).unwrap(), data);
            }
        }
    }
}
