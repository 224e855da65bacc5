//! Plain-text dataset, model and state files.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` exactly, so save → load → save is byte-identical. Every write
//! goes to a temporary sibling file that is then renamed over the target.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Activation, DenseLayer, Loss, NeuralNet};
use crate::sampling::{Dataset, Provenance, Sample};
use crate::tensor::{QuditState, Shape};

const DATA_MAGIC: &str = "EALM-DATA";
const MODEL_MAGIC: &str = "EALM-MODEL";
const STATE_MAGIC: &str = "EALM-STATE";
const VERSION: &str = "1";

fn push_floats(out: &mut String, xs: &[f64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{x:.16e}").unwrap();
    }
}

fn parse_floats(line: &str, lineno: usize, expected: usize) -> Result<Vec<f64>> {
    let xs = line
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(lineno, format!("bad number {t:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if xs.len() != expected {
        return Err(Error::parse(
            lineno,
            format!("expected {expected} values, found {}", xs.len()),
        ));
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::parse(lineno, format!("non-finite value {x}")));
    }
    Ok(xs)
}

/// Splits `MAGIC VERSION key=value ...` and checks the magic and version.
fn parse_header<'a>(line: Option<&'a str>, magic: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let line = line.ok_or_else(|| Error::parse(1, "empty file"))?;
    let mut tokens = line.split_ascii_whitespace();
    if tokens.next() != Some(magic) {
        return Err(Error::parse(1, format!("expected {magic} header")));
    }
    if tokens.next() != Some(VERSION) {
        return Err(Error::parse(1, "unsupported format version"));
    }
    tokens
        .map(|t| {
            t.split_once('=')
                .ok_or_else(|| Error::parse(1, format!("expected key=value, found {t:?}")))
        })
        .collect()
}

fn field<'a>(fields: &[(&'a str, &'a str)], key: &str, lineno: usize) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::parse(lineno, format!("missing {key}=")))
}

fn field_num<T: std::str::FromStr>(fields: &[(&str, &str)], key: &str, lineno: usize) -> Result<T> {
    let v = field(fields, key, lineno)?;
    v.parse()
        .map_err(|_| Error::parse(lineno, format!("bad value {key}={v}")))
}

fn with_line<T>(r: Result<T>, lineno: usize) -> Result<T> {
    r.map_err(|e| match e {
        Error::Argument(msg) | Error::Domain(msg) => Error::parse(lineno, msg),
        other => other,
    })
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::arg(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

pub fn dataset_to_string(data: &Dataset) -> String {
    let shape = data.shape();
    let prov = data.provenance();
    let mut out = format!(
        "{DATA_MAGIC} {VERSION} d={} n={} classes={} seed={} recipe={}\n",
        shape.d(),
        shape.n(),
        data.num_classes(),
        prov.seed,
        prov.recipe
    );
    for s in data.samples() {
        push_floats(&mut out, s.state.coords());
        writeln!(out, ";{}", s.label).unwrap();
    }
    out
}

pub fn dataset_from_str(text: &str) -> Result<Dataset> {
    let mut lines = text.lines();
    let header = parse_header(lines.next(), DATA_MAGIC)?;
    let shape = with_line(
        Shape::new(field_num(&header, "d", 1)?, field_num(&header, "n", 1)?),
        1,
    )?;
    let classes: usize = field_num(&header, "classes", 1)?;
    if classes < 1 {
        return Err(Error::parse(1, "classes must be >= 1"));
    }
    let provenance = Provenance {
        seed: field_num(&header, "seed", 1)?,
        recipe: field(&header, "recipe", 1)?.to_string(),
    };

    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.is_empty() {
            continue;
        }
        let (coords, label) = line
            .rsplit_once(';')
            .ok_or_else(|| Error::parse(lineno, "missing ;label"))?;
        let label: usize = label
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad label {label:?}")))?;
        if label >= classes {
            return Err(Error::parse(
                lineno,
                format!("label {label} outside 0..{classes}"),
            ));
        }
        let coords = parse_floats(coords, lineno, shape.len())?;
        let state = with_line(QuditState::new(shape, coords), lineno)?;
        samples.push(Sample { state, label });
    }
    Dataset::new(shape, samples, classes, provenance)
}

pub fn save_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    write_atomic(path.as_ref(), &dataset_to_string(data))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    dataset_from_str(&fs::read_to_string(path)?)
}

pub fn model_to_string(net: &NeuralNet) -> String {
    let mut out = format!("{MODEL_MAGIC} {VERSION} loss={}\n", net.loss());
    for layer in net.layers() {
        writeln!(
            out,
            "layer dense in={} out={} act={}",
            layer.inputs(),
            layer.outputs(),
            layer.activation()
        )
        .unwrap();
        for row in layer.weights().chunks(layer.inputs()) {
            push_floats(&mut out, row);
            out.push('\n');
        }
        push_floats(&mut out, layer.thresholds());
        out.push('\n');
    }
    out
}

pub fn model_from_str(text: &str) -> Result<NeuralNet> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = parse_header(lines.next().map(|(_, l)| l), MODEL_MAGIC)?;
    let loss: Loss = with_line(field(&header, "loss", 1)?.parse(), 1)?;

    let mut layers = Vec::new();
    while let Some((lineno, line)) = lines.next() {
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_ascii_whitespace();
        if tokens.next() != Some("layer") || tokens.next() != Some("dense") {
            return Err(Error::parse(lineno, "expected `layer dense ...`"));
        }
        let fields = tokens
            .map(|t| {
                t.split_once('=')
                    .ok_or_else(|| Error::parse(lineno, format!("expected key=value, found {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let inputs: usize = field_num(&fields, "in", lineno)?;
        let outputs: usize = field_num(&fields, "out", lineno)?;
        let act: Activation = with_line(field(&fields, "act", lineno)?.parse(), lineno)?;
        if inputs == 0 || outputs == 0 {
            return Err(Error::parse(lineno, "layer dimensions must be positive"));
        }

        let mut next_values = |count: usize| -> Result<Vec<f64>> {
            let (n, l) = lines
                .next()
                .ok_or_else(|| Error::Format(format!("layer at line {lineno} is truncated")))?;
            parse_floats(l, n, count)
        };
        let mut weights = Vec::with_capacity(inputs * outputs);
        for _ in 0..outputs {
            weights.extend(next_values(inputs)?);
        }
        let thresholds = next_values(outputs)?;
        layers.push(with_line(DenseLayer::new(inputs, outputs, weights, thresholds, act), lineno)?);
    }
    if layers.is_empty() {
        return Err(Error::Format("model has no layers".into()));
    }
    NeuralNet::new(layers, loss).map_err(|e| match e {
        Error::Argument(msg) => Error::Format(msg),
        other => other,
    })
}

pub fn save_model(path: impl AsRef<Path>, net: &NeuralNet) -> Result<()> {
    write_atomic(path.as_ref(), &model_to_string(net))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NeuralNet> {
    model_from_str(&fs::read_to_string(path)?)
}

pub fn state_to_string(state: &QuditState) -> String {
    let shape = state.shape();
    let mut out = format!("{STATE_MAGIC} {VERSION} d={} n={}\n", shape.d(), shape.n());
    push_floats(&mut out, state.coords());
    out.push('\n');
    out
}

pub fn state_from_str(text: &str) -> Result<QuditState> {
    let mut lines = text.lines();
    let header = parse_header(lines.next(), STATE_MAGIC)?;
    let shape = with_line(
        Shape::new(field_num(&header, "d", 1)?, field_num(&header, "n", 1)?),
        1,
    )?;
    let line = lines
        .next()
        .ok_or_else(|| Error::parse(2, "missing coordinate line"))?;
    with_line(QuditState::new(shape, parse_floats(line, 2, shape.len())?), 2)
}

pub fn save_state(path: impl AsRef<Path>, state: &QuditState) -> Result<()> {
    write_atomic(path.as_ref(), &state_to_string(state))
}

pub fn load_state(path: impl AsRef<Path>) -> Result<QuditState> {
    state_from_str(&fs::read_to_string(path)?)
}
