//! Plain-text table rendering and CSV helpers shared by the report emitters.

use std::io::{self, Write};

/// A rectangular report: one header row plus data rows, all rendered as text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new<I, S>(headers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }

    /// Column-aligned rendering. The first column is left aligned, the rest right aligned.
    pub fn render(&self) -> String {
        let ncols = self.rows.iter().map(Vec::len).chain(std::iter::once(self.headers.len())).max().unwrap_or(0);
        let mut widths = vec![0usize; ncols];
        for row in std::iter::once(&self.headers).chain(self.rows.iter()) {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let fmt_row = |row: &[String], out: &mut String| {
            let mut line = String::new();
            for (i, w) in widths.iter().enumerate() {
                let cell = row.get(i).map(String::as_str).unwrap_or("");
                let pad = w - cell.chars().count();
                if i > 0 {
                    line.push_str("  ");
                }
                if i == 0 {
                    line.push_str(cell);
                    line.extend(std::iter::repeat_n(' ', pad));
                } else {
                    line.extend(std::iter::repeat_n(' ', pad));
                    line.push_str(cell);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        };
        fmt_row(&self.headers, &mut out);
        let total: usize = widths.iter().sum::<usize>() + 2 * ncols.saturating_sub(1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for row in &self.rows {
            fmt_row(row, &mut out);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        writer.write_record(&self.headers)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Ratio with two decimals, `<0.01` for small non-zero values as printed in replication tables.
pub fn ratio_cell(num: usize, den: usize) -> String {
    if den == 0 {
        return "-".to_string();
    }
    let r = num as f64 / den as f64;
    if num > 0 && r < 0.005 {
        "<0.01".to_string()
    } else {
        format!("{r:.2}")
    }
}

/// Integer percentage, rounded half away from zero.
pub fn percent(num: usize, den: usize) -> u32 {
    if den == 0 {
        return 0;
    }
    ((num as f64 * 100.0 / den as f64) + 0.5).floor() as u32
}
