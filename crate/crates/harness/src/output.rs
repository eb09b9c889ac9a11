//! CSV rows with a fixed schema.

use std::io::Write;

use crate::Result;

pub const HEADER: [&str; 12] = [
    "experiment",
    "method",
    "s",
    "l",
    "t",
    "matrix_loads",
    "matvecs",
    "mu",
    "rel_err_anorm",
    "residual_norm",
    "kappa_actual",
    "seed",
];

/// Suffix appended to the method label of rows recording a failed method.
pub const ERROR_SUFFIX: &str = "[error]";

/// One CSV record; `None` fields are written empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub experiment: String,
    pub method: String,
    pub s: Option<usize>,
    pub l: Option<usize>,
    pub t: Option<usize>,
    pub matrix_loads: Option<u64>,
    pub matvecs: Option<u64>,
    pub mu: Option<f64>,
    pub rel_err_anorm: Option<f64>,
    pub residual_norm: Option<f64>,
    pub kappa_actual: Option<f64>,
    pub seed: Option<u64>,
}

impl Row {
    pub fn new(experiment: &str, method: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            method: method.to_string(),
            seed: Some(seed),
            ..Default::default()
        }
    }

    pub fn is_error(&self) -> bool {
        self.method.ends_with(ERROR_SUFFIX)
    }

    fn fields(&self) -> [String; 12] {
        fn int<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        fn float(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.16e}")).unwrap_or_default()
        }
        [
            self.experiment.clone(),
            self.method.clone(),
            int(self.s),
            int(self.l),
            int(self.t),
            int(self.matrix_loads),
            int(self.matvecs),
            float(self.mu),
            float(self.rel_err_anorm),
            float(self.residual_norm),
            float(self.kappa_actual),
            int(self.seed),
        ]
    }
}

/// Writes the header and rows.
pub fn write_rows<W: Write>(out: W, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_rows`].
pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(crate::HarnessError::Config(format!(
            "unexpected CSV header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let opt = |i: usize| Some(&rec[i]).filter(|s| !s.is_empty());
        let parse_err = |i: usize| {
            crate::HarnessError::Config(format!("bad value `{}` in column {}", &rec[i], HEADER[i]))
        };
        let int = |i: usize| {
            opt(i)
                .map(|s| s.parse::<u64>().map_err(|_| parse_err(i)))
                .transpose()
        };
        let float = |i: usize| {
            opt(i)
                .map(|s| s.parse::<f64>().map_err(|_| parse_err(i)))
                .transpose()
        };
        rows.push(Row {
            experiment: rec[0].to_string(),
            method: rec[1].to_string(),
            s: int(2)?.map(|v| v as usize),
            l: int(3)?.map(|v| v as usize),
            t: int(4)?.map(|v| v as usize),
            matrix_loads: int(5)?,
            matvecs: int(6)?,
            mu: float(7)?,
            rel_err_anorm: float(8)?,
            residual_norm: float(9)?,
            kappa_actual: float(10)?,
            seed: int(11)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_round_trip() {
        let mut row = Row::new("x", "nystrom:s=3;theta=auto", 4);
        row.t = Some(7);
        row.mu = Some(0.1);
        row.rel_err_anorm = Some(1.0 / 3.0);
        let mut buf = Vec::new();
        write_rows(&mut buf, &[row.clone(), Row::new("x", "cg[error]", 4)]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,method,s,l,t,matrix_loads,matvecs,mu,rel_err_anorm,residual_norm,kappa_actual,seed"
        );
        assert_eq!(
            lines.next().unwrap(),
            "x,nystrom:s=3;theta=auto,,,7,,,1.0000000000000001e-1,3.3333333333333331e-1,,,4"
        );
        let back = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back[0], row);
        assert!(back[1].is_error());
    }
}
