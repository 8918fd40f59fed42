//! Empirical design CSV ingestion.
//!
//! Rows are numbered from 1 for the first data row after the header. The
//! constant adjustor is added automatically, so `lambda` starts with the
//! intercept followed by one value per `z` column.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use glm_pss::glm::{irls_fit, with_estimated_dispersion};
use glm_pss::{EffectSummary, EmpiricalDesign, FamilyLink};
use nalgebra::DMatrix;

use crate::error::{CliError, ErrorKind, Result};

/// Column roles in a design file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DesignSchema {
    pub z_cols: Vec<String>,
    pub x_cols: Vec<String>,
    pub y_col: Option<String>,
}

/// Intercept and adjustor coefficients, then predictor coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Parsed design columns; `z` rows start with the constant 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignTable {
    pub z: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub y: Option<Vec<f64>>,
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CliError::ingestion(format!("column '{name}' not found in header")))
}

fn cell(record: &csv::StringRecord, idx: usize, row: usize, name: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("").trim();
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::ingestion(format!("row {row}, column '{name}': '{raw}' is not a finite number"))),
    }
}

/// Reads the declared columns of a design CSV.
pub fn read_design_table<R: Read>(reader: R, schema: &DesignSchema) -> Result<DesignTable> {
    if schema.x_cols.is_empty() {
        return Err(CliError::config("at least one predictor column is required"));
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CliError::ingestion(format!("cannot read header: {e}")))?.clone();
    let z_idx = schema.z_cols.iter().map(|c| column_index(&headers, c)).collect::<Result<Vec<_>>>()?;
    let x_idx = schema.x_cols.iter().map(|c| column_index(&headers, c)).collect::<Result<Vec<_>>>()?;
    let y_idx = schema.y_col.as_deref().map(|c| column_index(&headers, c)).transpose()?;
    let mut table = DesignTable { z: Vec::new(), x: Vec::new(), y: y_idx.map(|_| Vec::new()) };
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::ingestion(format!("row {row}: {e}")))?;
        let mut z = vec![1.0];
        for (&j, name) in z_idx.iter().zip(&schema.z_cols) {
            z.push(cell(&record, j, row, name)?);
        }
        let x =
            x_idx.iter().zip(&schema.x_cols).map(|(&j, name)| cell(&record, j, row, name)).collect::<Result<_>>()?;
        if let (Some(j), Some(ys), Some(name)) = (y_idx, table.y.as_mut(), schema.y_col.as_deref()) {
            ys.push(cell(&record, j, row, name)?);
        }
        table.z.push(z);
        table.x.push(x);
    }
    if table.x.is_empty() {
        return Err(CliError::ingestion("design file has no data rows"));
    }
    Ok(table)
}

/// Fits the GLM of `y` on `(z, x)`; returns the coefficients and the family,
/// with its dispersion re-estimated from the fit when `estimate_dispersion`.
pub fn fit_coefficients(
    table: &DesignTable,
    y: &[f64],
    fl: &FamilyLink,
    y_col: &str,
    estimate_dispersion: bool,
) -> Result<(Coefficients, FamilyLink)> {
    if let Some(i) = y.iter().position(|&v| !fl.valid_outcome(v)) {
        return Err(CliError::ingestion(format!(
            "row {}, column '{y_col}': {} is not a valid {} outcome",
            i + 1,
            y[i],
            fl.family()
        )));
    }
    let q = table.z[0].len();
    let p = table.x[0].len();
    let x = DMatrix::from_fn(y.len(), q + p, |i, j| if j < q { table.z[i][j] } else { table.x[i][j - q] });
    let fit = irls_fit(&x, y, fl)?;
    if !fit.converged {
        return Err(CliError::new(
            ErrorKind::NonConvergence,
            format!("outcome fit did not converge after {} iterations", fit.iterations),
        ));
    }
    let fit = if estimate_dispersion { with_estimated_dispersion(fit, y)? } else { fit };
    let c = fit.coefficients.as_slice();
    Ok((Coefficients { lambda: c[..q].to_vec(), beta: c[q..].to_vec() }, fit.family))
}

/// Builds a design from parsed columns and coefficients, checking every row
/// against the link domain.
pub fn design_from_table(
    table: DesignTable,
    fl: FamilyLink,
    coefficients: &Coefficients,
    schema: &DesignSchema,
) -> Result<EmpiricalDesign> {
    let q = table.z[0].len();
    let p = table.x[0].len();
    if coefficients.lambda.len() != q || coefficients.beta.len() != p {
        return Err(CliError::config(format!(
            "expected {q} adjustor coefficients (intercept first) and {p} predictor coefficients, got {} and {}",
            coefficients.lambda.len(),
            coefficients.beta.len()
        )));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    for i in 0..table.x.len() {
        let eta = dot(&coefficients.lambda, &table.z[i]) + dot(&coefficients.beta, &table.x[i]);
        if let Err(e) = fl.link_eval(eta) {
            let cols: Vec<&str> = schema.z_cols.iter().chain(&schema.x_cols).map(String::as_str).collect();
            return Err(CliError::ingestion(format!(
                "row {}, columns '{}': linear predictor {eta} is outside the model domain ({e})",
                i + 1,
                cols.join("', '")
            )));
        }
    }
    EmpiricalDesign::new(fl, table.x, table.z, coefficients.beta.clone(), coefficients.lambda.clone())
        .map_err(|e| CliError::ingestion(e.to_string()))
}

/// Loads an empirical design. Without `coefficients` the file must have an
/// outcome column; the model is then fitted and its coefficients are taken
/// as the truth.
pub fn load_design_csv(
    path: &Path,
    schema: &DesignSchema,
    fl: FamilyLink,
    coefficients: Option<&Coefficients>,
) -> Result<EmpiricalDesign> {
    load_design_csv_with(path, schema, fl, coefficients, false)
}

/// As [`load_design_csv`]; with `estimate_dispersion` a fitted model also
/// replaces the normal variance or gamma / inverse Gaussian shape of `fl`
/// by its estimate.
pub fn load_design_csv_with(
    path: &Path,
    schema: &DesignSchema,
    fl: FamilyLink,
    coefficients: Option<&Coefficients>,
    estimate_dispersion: bool,
) -> Result<EmpiricalDesign> {
    let file = File::open(path).map_err(|e| CliError::ingestion(format!("cannot open {}: {e}", path.display())))?;
    let table = read_design_table(file, schema)?;
    match (coefficients, &table.y, schema.y_col.as_deref()) {
        (Some(c), _, _) => design_from_table(table, fl, c, schema),
        (None, Some(y), Some(y_col)) => {
            let (c, fitted_fl) = fit_coefficients(&table, &y.clone(), &fl, y_col, estimate_dispersion)?;
            design_from_table(table, fitted_fl, &c, schema)
        }
        _ => Err(CliError::config("give coefficients (--lambda and --beta) or an outcome column (--y-col)")),
    }
}

/// Effect sizes of an empirical design with equal row mass.
pub fn compute_empirical_effects(design: &EmpiricalDesign) -> Result<EffectSummary> {
    Ok(design.effect_sizes()?)
}
