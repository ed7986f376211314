//! Price-series ingestion and gas/USD cost reports.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gas::{GasKey, GasTable, INTRINSIC_GAS};

#[derive(Debug, Error)]
pub enum CostError {
    #[error("price csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("price csv line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("unknown workflow {0:?}")]
    UnknownWorkflow(String),
}

/// One row of the price series: an ISO day, the ETH/USD close, and the gas
/// price assumed for that day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub eth_usd: f64,
    pub gas_price_wei: u128,
}

#[derive(Debug, Deserialize)]
struct PriceRow {
    date: String,
    eth_usd: f64,
    gas_price_wei: String,
}

/// Parse and validate a `date,eth_usd,gas_price_wei` CSV. Dates must be
/// strictly increasing; values must be positive. Errors carry the offending
/// line number (header is line 1).
pub fn ingest_prices<R: std::io::Read>(reader: R) -> Result<Vec<PricePoint>, CostError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut points: Vec<PricePoint> = Vec::new();
    for (i, row) in csv_reader.deserialize::<PriceRow>().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| CostError::Row {
            line,
            message: e.to_string(),
        })?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|e| CostError::Row {
            line,
            message: format!("bad date {:?}: {e}", row.date),
        })?;
        if row.eth_usd <= 0.0 {
            return Err(CostError::Row {
                line,
                message: format!("eth_usd must be positive, got {}", row.eth_usd),
            });
        }
        let gas_price_wei: u128 = row.gas_price_wei.parse().map_err(|_| CostError::Row {
            line,
            message: format!("bad gas_price_wei {:?}", row.gas_price_wei),
        })?;
        if gas_price_wei == 0 {
            return Err(CostError::Row {
                line,
                message: "gas_price_wei must be positive".into(),
            });
        }
        if let Some(last) = points.last() {
            if date <= last.date {
                return Err(CostError::Row {
                    line,
                    message: format!("dates must strictly increase ({} after {})", date, last.date),
                });
            }
        }
        points.push(PricePoint {
            date,
            eth_usd: row.eth_usd,
            gas_price_wei,
        });
    }
    Ok(points)
}

/// A named list of operations whose gas sums to the workflow cost.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Workflow {
    pub name: String,
    pub items: Vec<CostItem>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostItem {
    Method(GasKey),
    /// A plain value transfer at intrinsic cost.
    Transfer,
}

impl Workflow {
    pub fn new(name: &str, items: Vec<CostItem>) -> Workflow {
        Workflow {
            name: name.into(),
            items,
        }
    }

    /// The workflows behind the reported cost figures.
    pub fn builtins() -> Vec<Workflow> {
        vec![
            Workflow::new(
                "treatment-approval",
                vec![
                    CostItem::Method(GasKey::CreateTreatment),
                    CostItem::Method(GasKey::ApproveTreatment),
                ],
            ),
            Workflow::new(
                "evaluation",
                vec![CostItem::Method(GasKey::SubmitEvaluation)],
            ),
            Workflow::new("transfer", vec![CostItem::Transfer]),
        ]
    }

    pub fn builtin(name: &str) -> Result<Workflow, CostError> {
        Workflow::builtins()
            .into_iter()
            .find(|w| w.name == name)
            .ok_or_else(|| CostError::UnknownWorkflow(name.into()))
    }

    pub fn gas(&self, per_op: &BTreeMap<GasKey, u64>) -> u64 {
        self.items
            .iter()
            .map(|item| match item {
                CostItem::Method(key) => per_op.get(key).copied().unwrap_or(0),
                CostItem::Transfer => INTRINSIC_GAS,
            })
            .sum()
    }
}

/// USD cost of `gas` units at a wei gas price and an ETH/USD rate.
/// One ether is 10^18 wei.
pub fn usd_cost(gas: u64, gas_price_wei: u128, eth_usd: f64) -> f64 {
    let wei = gas as u128 * gas_price_wei;
    (wei as f64) * eth_usd / 1e18
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesRow {
    pub workflow: String,
    pub date: NaiveDate,
    pub gas: u64,
    pub wei_cost: u128,
    pub usd_cost: f64,
}

/// Gas and cost summary: per-operation gas, per-workflow gas, and the price
/// series per workflow (empty when no prices are supplied).
#[derive(Clone, Debug, Serialize)]
pub struct CostReport {
    pub per_op_gas: BTreeMap<String, u64>,
    pub workflow_gas: BTreeMap<String, u64>,
    pub series: Vec<SeriesRow>,
}

/// Build a report from observed (or calibrated) per-operation gas.
pub fn cost_report(
    per_op: &BTreeMap<GasKey, u64>,
    workflows: &[Workflow],
    prices: &[PricePoint],
) -> CostReport {
    let mut workflow_gas = BTreeMap::new();
    let mut series = Vec::new();
    for workflow in workflows {
        let gas = workflow.gas(per_op);
        workflow_gas.insert(workflow.name.clone(), gas);
        for point in prices {
            let wei_cost = gas as u128 * point.gas_price_wei;
            series.push(SeriesRow {
                workflow: workflow.name.clone(),
                date: point.date,
                gas,
                wei_cost,
                usd_cost: usd_cost(gas, point.gas_price_wei, point.eth_usd),
            });
        }
    }
    CostReport {
        per_op_gas: per_op.iter().map(|(k, v)| (k.name(), *v)).collect(),
        workflow_gas,
        series,
    }
}

/// Calibrated per-operation gas, straight from the measured table.
pub fn table_gas(table: &GasTable) -> BTreeMap<GasKey, u64> {
    table.entries().into_iter().collect()
}

impl CostReport {
    /// `workflow,date,gas,wei_cost,usd_cost` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("workflow,date,gas,wei_cost,usd_cost\n");
        for row in &self.series {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.workflow, row.date, row.gas, row.wei_cost, row.usd_cost
            ));
        }
        out
    }

    /// Minimal self-contained SVG line plot of USD cost over the series.
    pub fn to_svg(&self) -> String {
        let (width, height, margin) = (800.0f64, 400.0f64, 60.0f64);
        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
             viewBox=\"0 0 {width} {height}\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        if self.series.is_empty() {
            svg.push_str("<text x=\"20\" y=\"40\">no price series supplied</text>\n</svg>\n");
            return svg;
        }
        let min_date = self.series.iter().map(|r| r.date).min().expect("nonempty");
        let max_date = self.series.iter().map(|r| r.date).max().expect("nonempty");
        let max_usd = self
            .series
            .iter()
            .map(|r| r.usd_cost)
            .fold(f64::MIN, f64::max)
            .max(1e-12);
        let span_days = (max_date - min_date).num_days().max(1) as f64;
        let x_of = |date: NaiveDate| {
            margin + (date - min_date).num_days() as f64 / span_days * (width - 2.0 * margin)
        };
        let y_of = |usd: f64| height - margin - usd / max_usd * (height - 2.0 * margin);

        // axes
        svg.push_str(&format!(
            "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
             <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
            m = margin,
            b = height - margin,
            r = width - margin,
            t = margin,
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            margin,
            height - margin + 20.0,
            min_date
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            width - margin,
            height - margin + 20.0,
            max_date
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{:.4} USD</text>\n",
            margin + 4.0,
            margin - 8.0,
            max_usd
        ));

        let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
        let mut workflows: Vec<&str> = self.series.iter().map(|r| r.workflow.as_str()).collect();
        workflows.sort_unstable();
        workflows.dedup();
        for (i, workflow) in workflows.iter().enumerate() {
            let color = palette[i % palette.len()];
            let points: Vec<String> = self
                .series
                .iter()
                .filter(|r| r.workflow == *workflow)
                .map(|r| format!("{:.2},{:.2}", x_of(r.date), y_of(r.usd_cost)))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                points.join(" ")
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{workflow}</text>\n",
                width - margin + 4.0,
                margin + 16.0 * i as f64,
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }
}
