//! Versioned text format for trained models.
//!
//! ```text
//! DEEPLCP-MODEL
//! format 1
//! learning_rate <x>
//! epochs <n>
//! batch_size <n>
//! optimizer sgd|adam
//! seed <n>
//! tensor <name> <dims...>
//! <row-major values, one matrix row per line>
//! ...
//! end
//! ```
//!
//! Values are written with 17 significant digits so loading restores every
//! parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::cnn::{CnnModel, CnnParams};
use super::optim::OptimizerKind;
use super::{NnError, TrainConfig};

pub const MAGIC: &str = "DEEPLCP-MODEL";
pub const FORMAT_VERSION: u32 = 1;

fn write_tensor(out: &mut String, name: &str, dims: &[usize], values: &[f64]) {
    let dims_text: Vec<String> = dims.iter().map(usize::to_string).collect();
    writeln!(out, "tensor {name} {}", dims_text.join(" ")).unwrap();
    let cols = *dims.last().unwrap_or(&1);
    for row in values.chunks(cols.max(1)) {
        let row: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
}

pub fn model_to_string(model: &CnnModel) -> String {
    let c = &model.config;
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "format {FORMAT_VERSION}").unwrap();
    writeln!(out, "learning_rate {:.16e}", c.learning_rate).unwrap();
    writeln!(out, "epochs {}", c.epochs).unwrap();
    writeln!(out, "batch_size {}", c.batch_size).unwrap();
    writeln!(out, "optimizer {}", c.optimizer.as_str()).unwrap();
    writeln!(out, "seed {}", c.seed).unwrap();
    for (i, f) in model.params.filters.iter().enumerate() {
        write_tensor(&mut out, &format!("filter{i}.weights"), &[f.height, f.width], &f.weights);
        write_tensor(&mut out, &format!("filter{i}.bias"), &[1], &[f.bias]);
    }
    let d = &model.params.dense;
    write_tensor(&mut out, "dense.weights", &[d.outputs, d.inputs], &d.weights);
    write_tensor(&mut out, "dense.bias", &[d.outputs], &d.bias);
    writeln!(out, "end").unwrap();
    out
}

pub fn save_model(model: &CnnModel, path: impl AsRef<Path>) -> Result<(), NnError> {
    std::fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CnnModel, NnError> {
    model_from_str(&std::fs::read_to_string(path)?)
}

struct Reader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Reader<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str), NnError> {
        let (i, line) = self.lines.next().ok_or_else(|| NnError::Format {
            line: self.last + 1,
            message: "unexpected end of file".into(),
        })?;
        self.last = i + 1;
        Ok((i + 1, line.trim()))
    }

    fn field(&mut self, key: &str) -> Result<(usize, &'a str), NnError> {
        let (line, text) = self.next_line()?;
        match text.split_once(' ') {
            Some((k, v)) if k == key => Ok((line, v.trim())),
            _ => Err(NnError::Format {
                line,
                message: format!("expected `{key} <value>`, found `{text}`"),
            }),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, NnError> {
        let (line, v) = self.field(key)?;
        v.parse().map_err(|_| NnError::Format {
            line,
            message: format!("bad value `{v}` for `{key}`"),
        })
    }

    fn tensor(&mut self, name: &str, dims: &[usize]) -> Result<Vec<f64>, NnError> {
        let (line, v) = self.field("tensor")?;
        let expected: Vec<String> = std::iter::once(name.to_string())
            .chain(dims.iter().map(usize::to_string))
            .collect();
        if v.split_whitespace().collect::<Vec<_>>() != expected {
            return Err(NnError::Format {
                line,
                message: format!("expected tensor `{}`, found `{v}`", expected.join(" ")),
            });
        }
        let total: usize = dims.iter().product();
        let cols = *dims.last().unwrap_or(&1);
        let mut values = Vec::with_capacity(total);
        while values.len() < total {
            let (line, text) = self.next_line()?;
            let row: Vec<f64> = text
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| NnError::Format {
                    line,
                    message: format!("bad number in tensor `{name}`"),
                })?;
            if row.len() != cols {
                return Err(NnError::Format {
                    line,
                    message: format!("tensor `{name}` row has {} values, expected {cols}", row.len()),
                });
            }
            values.extend(row);
        }
        Ok(values)
    }
}

pub fn model_from_str(text: &str) -> Result<CnnModel, NnError> {
    let mut r = Reader {
        lines: text.lines().enumerate().peekable(),
        last: 0,
    };
    let (_, magic) = r.next_line()?;
    if magic != MAGIC {
        return Err(NnError::FormatVersion(format!("not a model file (header `{magic}`)")));
    }
    let version: u32 = r.parsed("format")?;
    if version != FORMAT_VERSION {
        return Err(NnError::FormatVersion(format!(
            "format {version} is not supported (expected {FORMAT_VERSION})"
        )));
    }
    let learning_rate = r.parsed("learning_rate")?;
    let epochs = r.parsed("epochs")?;
    let batch_size = r.parsed("batch_size")?;
    let (line, opt) = r.field("optimizer")?;
    let optimizer = OptimizerKind::parse(opt).ok_or_else(|| NnError::Format {
        line,
        message: format!("unknown optimizer `{opt}`"),
    })?;
    let seed = r.parsed("seed")?;

    let mut params = CnnParams::zeros();
    for (i, f) in params.filters.iter_mut().enumerate() {
        f.weights = r.tensor(&format!("filter{i}.weights"), &[f.height, f.width])?;
        f.bias = r.tensor(&format!("filter{i}.bias"), &[1])?[0];
    }
    let (outs, ins) = (params.dense.outputs, params.dense.inputs);
    params.dense.weights = r.tensor("dense.weights", &[outs, ins])?;
    params.dense.bias = r.tensor("dense.bias", &[outs])?;
    let (line, end) = r.next_line()?;
    if end != "end" {
        return Err(NnError::Format {
            line,
            message: format!("expected `end`, found `{end}`"),
        });
    }
    Ok(CnnModel {
        params,
        config: TrainConfig {
            learning_rate,
            epochs,
            batch_size,
            optimizer,
            seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut model = CnnModel::new(TrainConfig { seed: 11, learning_rate: 0.1 / 3.0, ..TrainConfig::default() });
        model.params.filters[2].bias = std::f64::consts::PI * 1e-300;
        model.params.dense.bias[1] = -1.0 / 7.0;
        let text = model_to_string(&model);
        let back = model_from_str(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(model_to_string(&back), text);
    }

    #[test]
    fn bad_headers() {
        assert!(matches!(model_from_str("HELLO\n"), Err(NnError::FormatVersion(_))));
        let text = model_to_string(&CnnModel::new(TrainConfig::default())).replace("format 1", "format 2");
        assert!(matches!(model_from_str(&text), Err(NnError::FormatVersion(_))));
        assert!(matches!(model_from_str(""), Err(NnError::Format { .. })));
    }

    #[test]
    fn truncated_file() {
        let text = model_to_string(&CnnModel::new(TrainConfig::default()));
        let cut: String = text.lines().take(20).collect::<Vec<_>>().join("\n");
        assert!(matches!(model_from_str(&cut), Err(NnError::Format { .. })));
    }
}
