//! Gnuplot data and scripts from an artifact directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};

/// A CSV file reduced to the requested columns.
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn format_error(path: &Path, reason: impl Into<String>) -> LabError {
    LabError::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_columns(path: &Path, wanted: &[&str]) -> Result<Table> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| format_error(path, "missing header"))?
        .split(',')
        .map(str::trim)
        .collect();
    let index: Vec<usize> = wanted
        .iter()
        .map(|w| {
            header
                .iter()
                .position(|h| h == w)
                .ok_or_else(|| format_error(path, format!("missing column `{w}`")))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (line_no, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(format_error(path, format!("row {} has {} fields", line_no + 2, fields.len())));
        }
        rows.push(index.iter().map(|&i| fields[i].to_string()).collect());
    }
    Ok(Table {
        columns: wanted.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

fn write_dat(path: &Path, table: &Table, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").expect("writing to a String");
    }
    writeln!(out, "# {}", table.columns.join(" ")).expect("writing to a String");
    for row in &table.rows {
        writeln!(out, "{}", row.join(" ")).expect("writing to a String");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Whether `h1` is nondecreasing over the last quarter of the samples.
pub fn monotone_tail(h1: &[f64]) -> Option<bool> {
    if h1.len() < 2 {
        return None;
    }
    let start = h1.len() - (h1.len() / 4).max(2);
    Some(h1[start..].windows(2).all(|w| w[1] >= w[0]))
}

/// Files named `<prefix>N<n>.csv`, sorted by `n`.
fn per_particle_files(dir: &Path, prefix: &str) -> Result<Vec<(usize, PathBuf)>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(n) = name
            .strip_prefix(prefix)
            .and_then(|rest| rest.strip_prefix('N'))
            .and_then(|rest| rest.strip_suffix(".csv"))
            .and_then(|n| n.parse::<usize>().ok())
        {
            found.push((n, path));
        }
    }
    found.sort();
    Ok(found)
}

fn script(title: &str, xlabel: &str, ylabel: &str, logscale: &str, extra: &str, series: &[(String, String)]) -> String {
    let mut out = String::new();
    writeln!(out, "set title \"{title}\"").expect("writing to a String");
    writeln!(out, "set xlabel \"{xlabel}\"").expect("writing to a String");
    writeln!(out, "set ylabel \"{ylabel}\"").expect("writing to a String");
    if !logscale.is_empty() {
        writeln!(out, "set logscale {logscale}").expect("writing to a String");
    }
    out.push_str(extra);
    let plots: Vec<String> = series
        .iter()
        .map(|(file, label)| format!("\"{file}\" using 1:2 with linespoints title \"{label}\""))
        .collect();
    writeln!(out, "plot {}", plots.join(", \\\n     ")).expect("writing to a String");
    out
}

/// Writes `.dat` and `.plt` files for every recognized CSV in `dir` and
/// returns the paths written.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(format_error(dir, "not an artifact directory"));
    }
    let mut written = Vec::new();
    let mut emit = |name: &str, table: &Table, comments: &[String], plt: String| -> Result<()> {
        let dat = dir.join(format!("{name}.dat"));
        write_dat(&dat, table, comments)?;
        let plt_path = dir.join(format!("{name}.plt"));
        fs::write(&plt_path, plt)?;
        written.push(dat);
        written.push(plt_path);
        Ok(())
    };

    let rate = dir.join("rate.csv");
    if rate.exists() {
        let table = read_columns(&rate, &["N", "l2_error"])?;
        let plt = script(
            "Hartree vs NLS",
            "N",
            "L2 error",
            "xy",
            "",
            &[("error_vs_n.dat".into(), "|u_N - phi|".into())],
        );
        emit("error_vs_n", &table, &[], plt)?;
    }

    let blowup = dir.join("blowup.csv");
    if blowup.exists() {
        let table = read_columns(&blowup, &["t", "h1"])?;
        let h1: Vec<f64> = table
            .rows
            .iter()
            .map(|r| r[1].parse::<f64>().map_err(|e| format_error(&blowup, e.to_string())))
            .collect::<Result<_>>()?;
        let note = match monotone_tail(&h1) {
            Some(true) => "monotone tail: yes".to_string(),
            Some(false) => "monotone tail: no".to_string(),
            None => "monotone tail: n/a".to_string(),
        };
        let extra = format!("set label 1 \"{note}\" at graph 0.05, graph 0.9\n");
        let plt = script(
            "H1 norm",
            "t",
            "|phi(t)|_H1",
            "y",
            &extra,
            &[("h1_vs_t.dat".into(), "H1".into())],
        );
        emit("h1_vs_t", &table, &[note], plt)?;
    }

    let condensation = per_particle_files(dir, "condensation_")?;
    if !condensation.is_empty() {
        let mut series = Vec::new();
        for (n, path) in &condensation {
            let name = format!("trace_distance_N{n}");
            let table = read_columns(path, &["t", "trace_distance"])?;
            write_dat(&dir.join(format!("{name}.dat")), &table, &[])?;
            written.push(dir.join(format!("{name}.dat")));
            series.push((format!("{name}.dat"), format!("N = {n}")));
        }
        let plt = dir.join("trace_distance.plt");
        fs::write(&plt, script("Condensation", "t", "trace distance", "", "", &series))?;
        written.push(plt);
    }

    let norm_approx = per_particle_files(dir, "norm_approx_")?;
    if !norm_approx.is_empty() {
        let mut series = Vec::new();
        for (n, path) in &norm_approx {
            let name = format!("number_N{n}");
            let table = read_columns(path, &["t", "number_expect"])?;
            write_dat(&dir.join(format!("{name}.dat")), &table, &[])?;
            written.push(dir.join(format!("{name}.dat")));
            series.push((format!("{name}.dat"), format!("N = {n}")));
        }
        let plt = dir.join("number.plt");
        fs::write(&plt, script("Excitation number", "t", "<N_exc>", "", "", &series))?;
        written.push(plt);
    }
    Ok(written)
}
