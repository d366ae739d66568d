//! TOML chart files.
//!
//! ```toml
//! name = "heisenberg"
//! n = 0
//! m = 3
//! sigma = []
//! p = ["v1 + w1", "v2 + w2", "v3 + w3 + v1*w2"]
//! radius_u = 1.0
//! radius_v = 1.0
//! ```
//!
//! `sigma` lists `n` expressions over `u1..un, v1..vm`; `p` lists `m`
//! expressions over `u1..un, v1..vm, w1..wm`. Exporting a chart built from
//! expressions and re-importing it reproduces the identical expression
//! trees, so all derived structure data round-trips bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chart::LocalGroupoidChart;
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ChartFileData {
    name: String,
    n: usize,
    m: usize,
    sigma: Vec<String>,
    p: Vec<String>,
    radius_u: f64,
    radius_v: f64,
}

/// Parse a chart from TOML text.
pub fn parse_chart_str(text: &str) -> Result<LocalGroupoidChart> {
    let data: ChartFileData = toml::from_str(text).map_err(|e| Error::ChartFile {
        message: e.to_string(),
    })?;
    let sigma: Vec<&str> = data.sigma.iter().map(String::as_str).collect();
    let p: Vec<&str> = data.p.iter().map(String::as_str).collect();
    LocalGroupoidChart::from_exprs(
        data.name,
        data.n,
        data.m,
        &sigma,
        &p,
        data.radius_u,
        data.radius_v,
    )
}

/// Load a chart from a TOML file.
pub fn load_chart(path: impl AsRef<Path>) -> Result<LocalGroupoidChart> {
    let text = std::fs::read_to_string(path)?;
    parse_chart_str(&text)
}

/// Serialize an expression-backed chart to TOML text. Native charts have no
/// source form and cannot be exported.
pub fn chart_to_string(chart: &LocalGroupoidChart) -> Result<String> {
    let (sigma_env, sigma_exprs) = chart
        .sigma_program()
        .as_exprs()
        .ok_or(Error::NativeChartNotExportable)?;
    let (prod_env, prod_exprs) = chart
        .prod_program()
        .as_exprs()
        .ok_or(Error::NativeChartNotExportable)?;
    let data = ChartFileData {
        name: chart.name().to_string(),
        n: chart.n(),
        m: chart.m(),
        sigma: sigma_exprs.iter().map(|e| e.unparse(sigma_env)).collect(),
        p: prod_exprs.iter().map(|e| e.unparse(prod_env)).collect(),
        radius_u: chart.radius_u(),
        radius_v: chart.radius_v(),
    };
    toml::to_string(&data).map_err(|e| Error::ChartFile {
        message: e.to_string(),
    })
}

/// Write a chart to a TOML file.
pub fn save_chart(chart: &LocalGroupoidChart, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, chart_to_string(chart)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEISENBERG: &str = r#"
name = "heisenberg"
n = 0
m = 3
sigma = []
p = ["v1 + w1", "v2 + w2", "v3 + w3 + v1*w2"]
radius_u = 1.0
radius_v = 1.0
"#;

    #[test]
    fn parse_and_evaluate() {
        let chart = parse_chart_str(HEISENBERG).unwrap();
        assert_eq!(chart.n(), 0);
        assert_eq!(chart.m(), 3);
        assert_eq!(
            chart.eval_prod(&[], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(),
            vec![1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn export_import_round_trip() {
        let chart = parse_chart_str(HEISENBERG).unwrap();
        let text = chart_to_string(&chart).unwrap();
        let again = parse_chart_str(&text).unwrap();
        let text2 = chart_to_string(&again).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn bad_toml_reports_position() {
        let err = parse_chart_str("name = ").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line") || msg.contains("column") || msg.contains("byte"), "{msg}");
    }

    #[test]
    fn bad_expression_reports_field() {
        let text = HEISENBERG.replace("v3 + w3 + v1*w2", "v3 + q");
        let err = parse_chart_str(&text).unwrap_err();
        assert!(matches!(err, Error::UnknownIdentifier { .. }));
    }
}
