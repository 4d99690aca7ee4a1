//! `diagnostics.csv`: one row per recorded state, fixed column order.
//! Floats are written in Rust's shortest round-trip exponent form, so
//! re-reading a file reproduces every value bit for bit.

use std::io::{BufRead, Write};

use super::{DiagnosticsRow, EnergyReport, MonitorRow};
use crate::error::{Error, Result};

pub const HEADER: &str = "step,time,E,kinetic,elastic,potential,entropy_p,entropy_m,electric,dissipation,budget_residual,mass_p,mass_m,min_cp,max_cp,min_cm,max_cm,phi_inf,grad_phi_p,lap_n_2,sup_n,v_2,grad_v_2,poisson_iters,poisson_residual";

const COLUMNS: usize = 25;

pub fn write_header<W: Write>(w: &mut W) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    Ok(())
}

pub fn format_row(row: &DiagnosticsRow) -> String {
    let e = &row.energy;
    let m = &row.monitor;
    let floats = [
        m.time,
        e.total,
        e.kinetic,
        e.elastic,
        e.potential_f,
        e.entropy_p,
        e.entropy_m,
        e.electric,
        e.dissipation_rate,
        e.budget_residual,
        m.mass_p,
        m.mass_m,
        m.min_cp,
        m.max_cp,
        m.min_cm,
        m.max_cm,
        m.phi_inf,
        m.grad_phi_p,
        m.lap_n_2,
        m.sup_n,
        m.v_2,
        m.grad_v_2,
    ];
    let mut s = m.step.to_string();
    for x in floats {
        s.push(',');
        s.push_str(&format!("{x:e}"));
    }
    s.push_str(&format!(",{},{:e}", m.poisson_iters, m.poisson_residual));
    s
}

pub fn write_row<W: Write>(w: &mut W, row: &DiagnosticsRow) -> Result<()> {
    writeln!(w, "{}", format_row(row))?;
    Ok(())
}

pub fn parse_row(line: &str) -> Result<DiagnosticsRow> {
    let cells: Vec<&str> = line.trim().split(',').collect();
    if cells.len() != COLUMNS {
        return Err(Error::Format(format!(
            "expected {COLUMNS} columns, found {}",
            cells.len()
        )));
    }
    let f = |i: usize| -> Result<f64> {
        cells[i]
            .parse::<f64>()
            .map_err(|e| Error::Format(format!("column {i}: {e}")))
    };
    let u = |i: usize| -> Result<u64> {
        cells[i]
            .parse::<u64>()
            .map_err(|e| Error::Format(format!("column {i}: {e}")))
    };
    Ok(DiagnosticsRow {
        energy: EnergyReport {
            total: f(2)?,
            kinetic: f(3)?,
            elastic: f(4)?,
            potential_f: f(5)?,
            entropy_p: f(6)?,
            entropy_m: f(7)?,
            electric: f(8)?,
            dissipation_rate: f(9)?,
            budget_residual: f(10)?,
        },
        monitor: MonitorRow {
            step: u(0)?,
            time: f(1)?,
            mass_p: f(11)?,
            mass_m: f(12)?,
            min_cp: f(13)?,
            max_cp: f(14)?,
            min_cm: f(15)?,
            max_cm: f(16)?,
            phi_inf: f(17)?,
            grad_phi_p: f(18)?,
            lap_n_2: f(19)?,
            sup_n: f(20)?,
            v_2: f(21)?,
            grad_v_2: f(22)?,
            poisson_iters: u(23)?,
            poisson_residual: f(24)?,
        },
    })
}

/// Reads a whole table, insisting on the exact header.
pub fn read_table<R: BufRead>(r: R) -> Result<Vec<DiagnosticsRow>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(HEADER) {
        return Err(Error::Format("missing or unexpected diagnostics header".into()));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_row(&line)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::num::f64 as pf;
    use proptest::prelude::*;

    fn row_from(x: &[f64], step: u64, iters: u64) -> DiagnosticsRow {
        DiagnosticsRow {
            energy: EnergyReport {
                total: x[0],
                kinetic: x[1],
                elastic: x[2],
                potential_f: x[3],
                entropy_p: x[4],
                entropy_m: x[5],
                electric: x[6],
                dissipation_rate: x[7],
                budget_residual: x[8],
            },
            monitor: MonitorRow {
                step,
                time: x[9],
                mass_p: x[10],
                mass_m: x[11],
                min_cp: x[12],
                max_cp: x[13],
                min_cm: x[14],
                max_cm: x[15],
                phi_inf: x[16],
                grad_phi_p: x[17],
                lap_n_2: x[18],
                sup_n: x[19],
                v_2: x[20],
                grad_v_2: x[21],
                poisson_iters: iters,
                poisson_residual: x[22],
            },
        }
    }

    #[test]
    fn header_has_one_name_per_column() {
        assert_eq!(HEADER.split(',').count(), COLUMNS);
        let mut buf = Vec::new();
        write_header(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{HEADER}\n"));
    }

    #[test]
    fn column_order_follows_header() {
        let x: Vec<f64> = (0..23).map(|i| i as f64 + 0.5).collect();
        let line = format_row(&row_from(&x, 7, 3));
        let cells: Vec<&str> = line.split(',').collect();
        let names: Vec<&str> = HEADER.split(',').collect();
        let at = |name: &str| cells[names.iter().position(|n| *n == name).unwrap()];
        assert_eq!(at("step"), "7");
        assert_eq!(at("E"), "5e-1");
        assert_eq!(at("time"), "9.5e0");
        assert_eq!(at("poisson_iters"), "3");
        assert_eq!(at("poisson_residual"), "2.25e1");
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_table("".as_bytes()).is_err());
        assert!(read_table("step,time\n".as_bytes()).is_err());
        assert!(parse_row("1,2,3").is_err());
        let good = format_row(&row_from(&[1.0; 23], 0, 0));
        assert!(parse_row(&good.replacen("1e0", "x", 1)).is_err());
        assert!(parse_row(&good.replacen('0', "-1", 1)).is_err());
        let table = format!("{HEADER}\n{good}\n\n");
        assert_eq!(read_table(table.as_bytes()).unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn rows_round_trip_bit_for_bit(
            x in proptest::collection::vec(pf::POSITIVE | pf::NEGATIVE | pf::NORMAL | pf::SUBNORMAL | pf::ZERO | pf::INFINITE, 23),
            step in any::<u64>(),
            iters in any::<u64>(),
        ) {
            let row = row_from(&x, step, iters);
            let mut buf = Vec::new();
            write_header(&mut buf).unwrap();
            write_row(&mut buf, &row).unwrap();
            let back = read_table(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), 1);
            let again = format_row(&back[0]);
            prop_assert_eq!(again, format_row(&row));
            prop_assert_eq!(back[0].monitor.time.to_bits(), row.monitor.time.to_bits());
            prop_assert_eq!(back[0].energy.total.to_bits(), row.energy.total.to_bits());
        }
    }
}
