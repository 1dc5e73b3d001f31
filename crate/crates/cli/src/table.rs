use std::io::{self, Write};

/// A header plus string rows, written as CSV or as aligned text.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()
    }

    pub fn write_human<W: Write>(&self, mut w: W) -> io::Result<()> {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].len())
                    .chain([self.header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |w: &mut W, cells: &[String]| -> io::Result<()> {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &n)| format!("{c:>n$}"))
                .collect();
            writeln!(w, "{}", padded.join("  "))
        };
        line(&mut w, &self.header)?;
        for row in &self.rows {
            line(&mut w, row)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_human() {
        let mut t = Table::new(["x", "err"]);
        t.push(vec!["0.5".into(), "1.000000e-02".into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,err\n0.5,1.000000e-02\n");
        let mut buf = Vec::new();
        t.write_human(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "  x           err\n0.5  1.000000e-02\n"
        );
    }
}
