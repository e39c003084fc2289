//! Numeric CSV output: comma separated, LF line endings, header first.

use std::io::{self, Write};

/// Format `x` with `digits` significant digits, `%g` style: plain decimal
/// for exponents in `[-5, digits)`, scientific otherwise; trailing zeros
/// are dropped.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    let digits = digits.clamp(1, 17);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub struct CsvWriter<W: Write> {
    out: W,
    digits: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(out: W, digits: usize, header: &[&str]) -> io::Result<Self> {
        let mut w = CsvWriter { out, digits };
        w.raw_row(header.iter().map(|s| s.to_string()))?;
        Ok(w)
    }

    pub fn raw_row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> io::Result<()> {
        let line = fields.into_iter().collect::<Vec<_>>().join(",");
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")
    }

    pub fn row(&mut self, fields: &[Field]) -> io::Result<()> {
        let digits = self.digits;
        self.raw_row(fields.iter().map(|f| match *f {
            Field::Int(i) => i.to_string(),
            Field::Real(x) => fmt_sig(x, digits),
            Field::Missing => "NA".to_string(),
        }))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Field {
    Int(u64),
    Real(f64),
    Missing,
}
