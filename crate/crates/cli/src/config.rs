use std::path::{Path, PathBuf};

use gml_core::harness::{parse_seeds, ClassifierKind, LabelColumn, OptimizerSettings};
use gml_core::{Error, Result, StepRule};
use serde::Deserialize;

/// Output format for reports and predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Table,
}

/// Seeds in a config file: the same range syntax as the flag, or a list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Range(String),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn resolve(&self) -> Result<Vec<u64>> {
        match self {
            SeedSpec::Range(s) => parse_seeds(s),
            SeedSpec::List(v) if v.is_empty() => Err(Error::Config("empty seed list".into())),
            SeedSpec::List(v) => Ok(v.clone()),
        }
    }
}

/// JSON config file. Keys mirror the long flag names with `_` for `-`;
/// command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub label_col: Option<LabelColumn>,
    pub delimiter: Option<String>,
    pub standardize: Option<bool>,
    pub classifier: Option<ClassifierKind>,
    pub k: Option<usize>,
    pub seeds: Option<SeedSpec>,
    pub folds: Option<usize>,
    pub trace_cap: Option<f64>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub fw_step: Option<StepRule>,
    pub fw_max_iters: Option<usize>,
    pub outer_max_iters: Option<usize>,
    pub bcd_sweeps: Option<usize>,
    pub obj_rel_tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub positive_class: Option<String>,
    pub metric: Option<PathBuf>,
    pub query: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
    pub timing: Option<bool>,
    pub seed: Option<u64>,
    pub instances: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn parse_delimiter(s: &str) -> Result<u8> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(Error::Config(format!("delimiter must be one ASCII character or `tab`, got `{s}`"))),
    }
}

/// Optimizer flags, each overriding the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct OptimizerArgs {
    /// Trace cap C [default: number of features]
    #[arg(long)]
    pub trace_cap: Option<f64>,
    /// Disc left-end floor [default: 1e-4 C/K]
    #[arg(long)]
    pub rho: Option<f64>,
    /// Connectivity floor for off-diagonal entries [default: 1e-3 C/K]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Frank-Wolfe step rule: line_search or diminishing
    #[arg(long)]
    pub fw_step: Option<StepRule>,
    #[arg(long)]
    pub fw_max_iters: Option<usize>,
    #[arg(long)]
    pub outer_max_iters: Option<usize>,
    #[arg(long)]
    pub bcd_sweeps: Option<usize>,
    #[arg(long)]
    pub obj_rel_tol: Option<f64>,
}

impl OptimizerArgs {
    pub fn merge(&self, file: &FileConfig) -> OptimizerSettings {
        OptimizerSettings {
            trace_cap: self.trace_cap.or(file.trace_cap),
            rho: self.rho.or(file.rho),
            epsilon: self.epsilon.or(file.epsilon),
            fw_max_iters: self.fw_max_iters.or(file.fw_max_iters),
            outer_max_iters: self.outer_max_iters.or(file.outer_max_iters),
            bcd_sweeps: self.bcd_sweeps.or(file.bcd_sweeps),
            obj_rel_tol: self.obj_rel_tol.or(file.obj_rel_tol),
            fw_step: self.fw_step.or(file.fw_step),
        }
    }
}

/// Dataset flags shared by `learn`, `classify` and `experiment`.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct DataArgs {
    /// CSV file with numeric features and one label column
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Label column: zero-based index, header name, `first` or `last`
    #[arg(long)]
    pub label_col: Option<LabelColumn>,
    /// Field delimiter (one character, or `tab`)
    #[arg(long)]
    pub delimiter: Option<String>,
}

pub struct Data {
    pub dataset: PathBuf,
    pub label_col: LabelColumn,
    pub delimiter: u8,
}

impl DataArgs {
    pub fn merge(&self, file: &FileConfig) -> Result<Data> {
        let dataset = self
            .dataset
            .clone()
            .or_else(|| file.dataset.clone())
            .ok_or_else(|| Error::Config("no dataset given (use --dataset)".into()))?;
        let label_col = self.label_col.clone().or_else(|| file.label_col.clone()).unwrap_or_default();
        let delimiter = match self.delimiter.as_deref().or(file.delimiter.as_deref()) {
            Some(d) => parse_delimiter(d)?,
            None => b',',
        };
        Ok(Data {
            dataset,
            label_col,
            delimiter,
        })
    }
}

/// Where results go and in which form.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct OutputArgs {
    /// Write the result here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl OutputArgs {
    pub fn merge(&self, file: &FileConfig, default: Format) -> (Option<PathBuf>, Format) {
        (
            self.out.clone().or_else(|| file.out.clone()),
            self.format.or(file.format).unwrap_or(default),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delimiters() {
        assert_eq!(parse_delimiter(",").unwrap(), b',');
        assert_eq!(parse_delimiter("tab").unwrap(), b'\t');
        assert_eq!(parse_delimiter(";").unwrap(), b';');
        assert!(parse_delimiter("ab").is_err());
    }

    #[test]
    fn file_config_parses_all_seed_forms() {
        let c: FileConfig = serde_json::from_str(r#"{"seeds": "0..3", "fw_step": "diminishing"}"#).unwrap();
        assert_eq!(c.seeds.unwrap().resolve().unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(c.fw_step, Some(StepRule::Diminishing));
        let c: FileConfig = serde_json::from_str(r#"{"seeds": [4, 9], "label_col": 2}"#).unwrap();
        assert_eq!(c.seeds.unwrap().resolve().unwrap(), vec![4, 9]);
        assert_eq!(c.label_col, Some(LabelColumn::Index(2)));
        assert!(serde_json::from_str::<FileConfig>(r#"{"sedes": "0..3"}"#).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = serde_json::from_str(r#"{"rho": 0.5, "epsilon": 0.25}"#).unwrap();
        let flags = OptimizerArgs {
            rho: Some(0.1),
            ..Default::default()
        };
        let s = flags.merge(&file);
        assert_eq!(s.rho, Some(0.1));
        assert_eq!(s.epsilon, Some(0.25));
    }
}
