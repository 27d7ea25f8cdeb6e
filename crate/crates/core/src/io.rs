//! CSV and JSON formats shared with the command line.
//!
//! | record       | format                                   |
//! |--------------|------------------------------------------|
//! | loop         | `k,re_1,im_1,...,re_d,im_d`              |
//! | spectrum     | `k,d_k,lambda_k`                         |
//! | trajectory   | `t,body,x_1..x_d,v_1..v_d`               |
//! | scan         | `sigma,seed,predicted_min,...,converged` |
//! | converge     | `N,force_gap,omega2,omega2_gap`          |

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::continuum::Spectrum;
use crate::error::{Error, Result};
use crate::fourier::FourierLoop;
use crate::minimize::ScanRow;
use crate::nbody::{ConvergeRow, Trajectory};

fn format_err(e: impl std::fmt::Display) -> Error {
    Error::Format(e.to_string())
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(out)
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_loop<W: Write>(loop_: &FourierLoop, out: W) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["k".to_string()];
    for j in 1..=loop_.dim() {
        header.push(format!("re_{j}"));
        header.push(format!("im_{j}"));
    }
    w.write_record(&header).map_err(format_err)?;
    for k in 1..=loop_.modes() {
        let mut row = vec![k.to_string()];
        for a in loop_.mode(k) {
            row.push(num(a.re));
            row.push(num(a.im));
        }
        w.write_record(&row).map_err(format_err)?;
    }
    w.flush().map_err(format_err)
}

/// Reads a loop written by [`write_loop`]. Modes must appear as `1, 2, ...`.
pub fn read_loop<R: Read>(input: R) -> Result<FourierLoop> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = r.headers().map_err(format_err)?.clone();
    if header.len() < 5 || header.len() % 2 == 0 || &header[0] != "k" {
        return Err(Error::Format(format!(
            "loop header must be k,re_1,im_1,...; got {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(format_err)?;
        let values: Vec<f64> = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Format(format!("{f:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if values[0] != (i + 1) as f64 {
            return Err(Error::Format(format!(
                "row {} has mode {}",
                i + 1,
                values[0]
            )));
        }
        rows.push(
            values[1..]
                .chunks_exact(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect::<Vec<_>>(),
        );
    }
    FourierLoop::from_modes(&rows)
}

pub fn write_spectrum<W: Write>(spectrum: &Spectrum, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["k", "d_k", "lambda_k"])
        .map_err(format_err)?;
    for k in 1..=spectrum.modes() {
        w.write_record([k.to_string(), num(spectrum.d(k)), num(spectrum.lambda(k))])
            .map_err(format_err)?;
    }
    w.flush().map_err(format_err)
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = writer(out);
    let dim = traj.states.first().map_or(2, |s| s.dim);
    let mut header = vec!["t".to_string(), "body".to_string()];
    header.extend((1..=dim).map(|j| format!("x_{j}")));
    header.extend((1..=dim).map(|j| format!("v_{j}")));
    w.write_record(&header).map_err(format_err)?;
    for state in &traj.states {
        for i in 0..state.bodies() {
            let mut row = vec![num(state.time), i.to_string()];
            row.extend(state.position(i).iter().map(|x| num(*x)));
            row.extend(state.velocity(i).iter().map(|x| num(*x)));
            w.write_record(&row).map_err(format_err)?;
        }
    }
    w.flush().map_err(format_err)
}

pub fn write_scan<W: Write>(rows: &[ScanRow], out: W) -> Result<()> {
    let mut w = writer(out);
    for row in rows {
        w.serialize(row).map_err(format_err)?;
    }
    if rows.is_empty() {
        w.write_record([
            "sigma",
            "seed",
            "predicted_min",
            "achieved_min",
            "gap",
            "circle_distance",
            "iterations",
            "converged",
        ])
        .map_err(format_err)?;
    }
    w.flush().map_err(format_err)
}

pub fn write_converge<W: Write>(rows: &[ConvergeRow], out: W) -> Result<()> {
    let mut w = writer(out);
    for row in rows {
        w.serialize(row).map_err(format_err)?;
    }
    if rows.is_empty() {
        w.write_record(["N", "force_gap", "omega2", "omega2_gap"])
            .map_err(format_err)?;
    }
    w.flush().map_err(format_err)
}
