//! Model files: a text header followed by little-endian `f64` parameters.
//!
//! ```text
//! version: 1
//! kind: logreg|mlp
//! classes: <K>
//! features: <D>
//! include_angles: true|false
//! layers: <in>x<out> <in>x<out> ...
//! ```
//!
//! The payload holds the standardisation means (D values), then the stds
//! (D values), then for every layer its row-major weights followed by its
//! biases.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ClassifierModel, DenseLayer, ModelKind, Network, Standardizer};
use crate::error::{Error, Result};

const VERSION: u32 = 1;

pub fn save_model(model: &ClassifierModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_model(model, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ClassifierModel> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(f)
}

pub fn write_model<W: Write>(model: &ClassifierModel, mut w: W) -> std::io::Result<()> {
    let layers: Vec<String> = model
        .network()
        .layers()
        .iter()
        .map(|l| format!("{}x{}", l.n_in, l.n_out))
        .collect();
    writeln!(w, "version: {VERSION}")?;
    writeln!(w, "kind: {}", model.kind())?;
    writeln!(w, "classes: {}", model.n_classes())?;
    writeln!(w, "features: {}", model.n_features())?;
    writeln!(w, "include_angles: {}", model.include_angles())?;
    writeln!(w, "layers: {}", layers.join(" "))?;
    let s = model.standardizer();
    let mut put = |xs: &[f64]| -> std::io::Result<()> {
        for x in xs {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    };
    put(&s.mean)?;
    put(&s.std)?;
    for l in model.network().layers() {
        put(&l.weights)?;
        put(&l.bias)?;
    }
    w.flush()
}

pub fn read_model<R: Read>(r: R) -> Result<ClassifierModel> {
    let mut r = BufReader::new(r);
    let mut header = Vec::new();
    for (i, key) in [
        "version",
        "kind",
        "classes",
        "features",
        "include_angles",
        "layers",
    ]
    .into_iter()
    .enumerate()
    {
        let loc = format!("line {}", i + 1);
        let mut line = String::new();
        r.read_line(&mut line)
            .map_err(|e| Error::parse(loc.clone(), e.to_string()))?;
        let value = line
            .strip_suffix('\n')
            .and_then(|l| l.strip_prefix(key))
            .and_then(|l| l.strip_prefix(": "))
            .ok_or_else(|| Error::parse(loc.clone(), format!("expected `{key}: ...`")))?;
        header.push(value.to_owned());
    }
    let bad = |line: usize, what: &str| Error::parse(format!("line {line}"), format!("bad {what}"));
    if header[0].parse::<u32>().map_err(|_| bad(1, "version"))? != VERSION {
        return Err(bad(1, "version"));
    }
    let kind: ModelKind = header[1].parse().map_err(|_| bad(2, "kind"))?;
    let classes: usize = header[2].parse().map_err(|_| bad(3, "classes"))?;
    let features: usize = header[3].parse().map_err(|_| bad(4, "features"))?;
    let include_angles: bool = header[4].parse().map_err(|_| bad(5, "include_angles"))?;
    let shapes = header[5]
        .split_whitespace()
        .map(|s| {
            let (a, b) = s.split_once('x')?;
            Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?))
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| bad(6, "layer shape"))?;
    if shapes.is_empty() {
        return Err(bad(6, "layer list"));
    }

    let mut payload = Vec::new();
    r.read_to_end(&mut payload)
        .map_err(|e| Error::parse("payload", e.to_string()))?;
    let expected: usize = 2 * features + shapes.iter().map(|(i, o)| i * o + o).sum::<usize>();
    if payload.len() != expected * 8 {
        return Err(Error::Shape(format!(
            "model payload has {} bytes, header implies {}",
            payload.len(),
            expected * 8
        )));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
    let mean = take(features);
    let std = take(features);
    let layers: Vec<DenseLayer> = shapes
        .iter()
        .map(|&(n_in, n_out)| DenseLayer {
            n_in,
            n_out,
            weights: take(n_in * n_out),
            bias: take(n_out),
        })
        .collect();
    let network = Network::from_layers(layers)
        .ok_or_else(|| Error::Shape("inconsistent layer shapes".into()))?;
    if network.n_inputs() != features || network.n_outputs() != classes {
        return Err(Error::Shape(format!(
            "layers map {} -> {}, header says {features} -> {classes}",
            network.n_inputs(),
            network.n_outputs()
        )));
    }
    if network
        .params()
        .iter()
        .chain(&mean)
        .chain(&std)
        .any(|v| !v.is_finite())
    {
        return Err(Error::Input("non-finite model parameter".into()));
    }
    ClassifierModel::new(kind, include_angles, Standardizer { mean, std }, network)
}
