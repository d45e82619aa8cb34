use std::fmt::Write as _;

use crate::error::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sample {
    pub x: u64,
    pub y: bool,
}

impl Sample {
    pub fn new(x: u64, y: bool) -> Self {
        Sample { x, y }
    }
}

/// Labeled samples over inputs of a fixed bit width.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dataset {
    width: u32,
    samples: Vec<Sample>,
}

impl Dataset {
    /// Panics if a sample does not fit in `width` bits or `width` is outside
    /// 1..=32.
    pub fn new(width: u32, samples: Vec<Sample>) -> Self {
        assert!((1..=32).contains(&width), "input width {width} out of range");
        assert!(samples.iter().all(|s| s.x >> width == 0), "sample input does not fit in {width} bits");
        Dataset { width, samples }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter()
    }

    /// Splits into the first `at` samples and the rest, preserving order.
    pub fn split_at(&self, at: usize) -> (Dataset, Dataset) {
        let (a, b) = self.samples.split_at(at);
        (Dataset { width: self.width, samples: a.to_vec() }, Dataset { width: self.width, samples: b.to_vec() })
    }

    /// Text form: header `n=<n> width=<w>`, then one `x,y` record per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 8 + 32);
        writeln!(out, "n={} width={}", self.samples.len(), self.width).expect("string write");
        for s in &self.samples {
            writeln!(out, "{},{}", s.x, u8::from(s.y)).expect("string write");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, FormatError> {
        let mut lines =
            text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| FormatError::new("empty dataset file"))?;
        let mut n = None;
        let mut width = None;
        for field in header.split_whitespace() {
            let bad = || FormatError::at_line(hline + 1, format!("malformed header field {field:?}"));
            let (key, value) = field.split_once('=').ok_or_else(bad)?;
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
                "width" => width = Some(value.parse::<u32>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        let n = n.ok_or_else(|| FormatError::at_line(hline + 1, "header missing n"))?;
        let width = width.ok_or_else(|| FormatError::at_line(hline + 1, "header missing width"))?;
        if !(1..=32).contains(&width) {
            return Err(FormatError::at_line(hline + 1, "width must be in 1..=32"));
        }
        let mut samples = Vec::with_capacity(n);
        for (lineno, line) in lines {
            let bad = |msg: &str| FormatError::at_line(lineno + 1, msg.to_string());
            let (x, y) = line.trim().split_once(',').ok_or_else(|| bad("expected `x,y`"))?;
            let x: u64 = x.trim().parse().map_err(|_| bad("x is not a nonnegative integer"))?;
            if x >> width != 0 {
                return Err(bad("x does not fit in the declared width"));
            }
            let y = match y.trim() {
                "0" => false,
                "1" => true,
                _ => return Err(bad("y must be 0 or 1")),
            };
            samples.push(Sample { x, y });
        }
        if samples.len() != n {
            return Err(FormatError::new(format!("header declares {n} records, found {}", samples.len())));
        }
        Ok(Dataset { width, samples })
    }
}

/// Bits needed to write every value in `0..domain_size`, at least 1.
pub fn width_for_domain(domain_size: u64) -> u32 {
    (64 - domain_size.saturating_sub(1).leading_zeros()).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let d = Dataset::new(3, vec![Sample::new(5, true), Sample::new(0, false)]);
        let text = d.to_text();
        assert_eq!(text, "n=2 width=3\n5,1\n0,0\n");
        assert_eq!(Dataset::from_text(&text).unwrap(), d);
    }

    #[test]
    fn rejects_bad_records() {
        assert!(Dataset::from_text("n=1 width=2\n4,1\n").is_err());
        assert!(Dataset::from_text("n=2 width=2\n1,1\n").is_err());
        assert!(Dataset::from_text("n=1 width=2\n1,2\n").is_err());
        let err = Dataset::from_text("n=1 width=2\n\nfoo\n").unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn domain_widths() {
        assert_eq!(width_for_domain(1), 1);
        assert_eq!(width_for_domain(2), 1);
        assert_eq!(width_for_domain(256), 8);
        assert_eq!(width_for_domain(257), 9);
        assert_eq!(width_for_domain(1_000_000), 20);
    }
}
