use std::fmt;
use std::io::Write;

use plfam_core::Method;

use crate::run::ReplicationReport;
use crate::{BenchError, Result};

/// `design,R2,n,method,replication,mspe,mse`, one row per requested method
/// and successful replication.
pub fn write_raw_csv<W: Write>(reports: &[ReplicationReport], mut out: W) -> Result<()> {
    writeln!(out, "design,R2,n,method,replication,mspe,mse")?;
    for report in reports {
        let c = &report.config;
        for &method in &report.methods {
            for r in &report.records {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    c.design.number(),
                    c.r2,
                    c.n_train,
                    method,
                    r.replication,
                    r.mspe(method),
                    r.mse(method)
                )?;
            }
        }
    }
    Ok(())
}

/// `design,R2,n,method,nmspe,nmse`.
pub fn write_summary_csv<W: Write>(reports: &[ReplicationReport], mut out: W) -> Result<()> {
    writeln!(out, "design,R2,n,method,nmspe,nmse")?;
    for report in reports {
        let c = &report.config;
        for &method in &report.methods {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.design.number(),
                c.r2,
                c.n_train,
                method,
                report.nmspe(method),
                report.nmse(method)
            )?;
        }
    }
    Ok(())
}

/// NMSPE by method (rows) and R² level (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct NmspeTable {
    pub methods: Vec<Method>,
    pub r2_levels: Vec<f64>,
    /// `values[row][col]`.
    pub values: Vec<Vec<f64>>,
}

/// Reports must share their method list; each contributes one column.
pub fn nmspe_table(reports: &[ReplicationReport]) -> Result<NmspeTable> {
    let first = reports
        .first()
        .ok_or_else(|| BenchError::Config("no reports to tabulate".into()))?;
    if reports.iter().any(|r| r.methods != first.methods) {
        return Err(BenchError::Config("reports disagree on methods".into()));
    }
    let values = first
        .methods
        .iter()
        .map(|&m| reports.iter().map(|r| r.nmspe(m)).collect())
        .collect();
    Ok(NmspeTable {
        methods: first.methods.clone(),
        r2_levels: reports.iter().map(|r| r.config.r2).collect(),
        values,
    })
}

impl NmspeTable {
    pub fn get(&self, method: Method, r2_index: usize) -> Option<f64> {
        let row = self.methods.iter().position(|&m| m == method)?;
        self.values[row].get(r2_index).copied()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("method");
        for r2 in &self.r2_levels {
            s.push_str(&format!(",R2={r2}"));
        }
        s.push('\n');
        for (m, row) in self.methods.iter().zip(&self.values) {
            s.push_str(m.name());
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for NmspeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<8}", "NMSPE")?;
        for r2 in &self.r2_levels {
            write!(f, "{:>10}", format!("R2={r2}"))?;
        }
        writeln!(f)?;
        for (m, row) in self.methods.iter().zip(&self.values) {
            write!(f, "{:<8}", m.name())?;
            for v in row {
                write!(f, "{v:>10.4}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
