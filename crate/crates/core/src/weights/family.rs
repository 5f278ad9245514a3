//! Weight families and their textual specifications.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::RadialGridFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightFamily {
    /// `c`
    Constant(f64),
    /// `(alpha + 1) (1 - r^2)^alpha`
    Standard(f64),
    /// `(1 - r)^gamma`
    PowerOneMinus(f64),
    /// `(1 - r)^alpha (log(e / (1 - r)))^beta`
    Logarithmic(f64, f64),
    /// `exp(-c / (1 - r)^k)`
    ExponentialDecay(f64, f64),
    /// Piecewise-linear samples.
    Tabulated(RadialGridFunction),
}

impl WeightFamily {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::domain(msg));
        match *self {
            WeightFamily::Constant(c) if !(c > 0.0 && c.is_finite()) => bad(format!("constant weight needs c > 0, got {c}")),
            WeightFamily::Standard(a) if !(a > -1.0 && a.is_finite()) => bad(format!("standard weight needs alpha > -1, got {a}")),
            WeightFamily::PowerOneMinus(g) if !(g > -1.0 && g.is_finite()) => bad(format!("power weight needs gamma > -1, got {g}")),
            WeightFamily::Logarithmic(a, b) => {
                let integrable = (a > -1.0 && a.is_finite() && b.is_finite()) || (a == -1.0 && b < -1.0);
                if integrable {
                    Ok(())
                } else {
                    bad(format!("logarithmic weight ({a}, {b}) is not integrable on [0, 1)"))
                }
            }
            WeightFamily::ExponentialDecay(c, k) if !(c > 0.0 && k > 0.0 && c.is_finite() && k.is_finite()) => {
                bad(format!("exponential weight needs c, k > 0, got ({c}, {k})"))
            }
            WeightFamily::Tabulated(ref g) => {
                if g.values().iter().any(|v| v.im != 0.0 || v.re < 0.0) {
                    return bad("tabulated weight values must be real and nonnegative".into());
                }
                if g.values().last().is_none_or(|v| v.re <= 0.0) {
                    return bad("tabulated weight must be positive at its last node so that the tail never vanishes".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Read a tabulated weight from a CSV file with header `r,omega`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let headers = rdr.headers().map_err(|e| Error::config(e.to_string()))?.clone();
        if headers.len() != 2 || &headers[0] != "r" || &headers[1] != "omega" {
            return Err(Error::config(format!("{}: expected header `r,omega`", path.display())));
        }
        let (mut nodes, mut values) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::config(e.to_string()))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::config(format!("{}: row {}: not a number: {s}", path.display(), line + 2)))
            };
            nodes.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        let grid = RadialGridFunction::from_real(nodes, values).map_err(|e| Error::config(e.to_string()))?;
        let fam = WeightFamily::Tabulated(grid);
        fam.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(fam)
    }

    /// Parse `family:params` (e.g. `standard:0.5`, `log:0,1`) or the key-value
    /// form `family=standard alpha=0.5`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let fam = if spec.contains('=') {
            parse_key_value(spec)?
        } else {
            parse_compact(spec)?
        };
        fam.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(fam)
    }
}

fn number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::config(format!("not a number: `{s}`")))
}

fn canonical(name: &str) -> Result<&'static str> {
    Ok(match name.trim().to_ascii_lowercase().as_str() {
        "constant" | "const" => "constant",
        "standard" | "std" => "standard",
        "power" | "poweroneminus" | "power_one_minus" => "power",
        "log" | "logarithmic" => "log",
        "exp" | "exponential" | "exponentialdecay" => "exp",
        "tabulated" | "table" => "tabulated",
        other => return Err(Error::config(format!("unknown weight family `{other}`"))),
    })
}

fn build(name: &str, params: &[f64]) -> Result<WeightFamily> {
    let need = |n: usize| {
        if params.len() == n {
            Ok(())
        } else {
            Err(Error::config(format!("family `{name}` takes {n} parameter(s), got {}", params.len())))
        }
    };
    match name {
        "constant" => {
            if params.is_empty() {
                return Ok(WeightFamily::Constant(1.0));
            }
            need(1)?;
            Ok(WeightFamily::Constant(params[0]))
        }
        "standard" => need(1).map(|_| WeightFamily::Standard(params[0])),
        "power" => need(1).map(|_| WeightFamily::PowerOneMinus(params[0])),
        "log" => need(2).map(|_| WeightFamily::Logarithmic(params[0], params[1])),
        "exp" => need(2).map(|_| WeightFamily::ExponentialDecay(params[0], params[1])),
        _ => unreachable!(),
    }
}

fn parse_compact(spec: &str) -> Result<WeightFamily> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let name = canonical(name)?;
    if name == "tabulated" {
        return WeightFamily::from_csv(Path::new(rest.trim()));
    }
    let params = if rest.trim().is_empty() {
        Vec::new()
    } else {
        rest.split(',').map(number).collect::<Result<Vec<_>>>()?
    };
    build(name, &params)
}

fn parse_key_value(spec: &str) -> Result<WeightFamily> {
    let mut family = None;
    let mut kv = Vec::new();
    for tok in spec.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::config(format!("expected key=value, got `{tok}`")))?;
        if k == "family" {
            family = Some(canonical(v)?);
        } else {
            kv.push((k.to_string(), v.to_string()));
        }
    }
    let name = family.ok_or_else(|| Error::config("missing `family=`"))?;
    let get = |keys: &[&str]| -> Result<f64> {
        let found = kv.iter().find(|(k, _)| keys.contains(&k.as_str()));
        match found {
            Some((_, v)) => number(v),
            None => Err(Error::config(format!("family `{name}` needs `{}=`", keys[0]))),
        }
    };
    let known: &[&str] = match name {
        "constant" => &["c"],
        "standard" => &["alpha"],
        "power" => &["gamma"],
        "log" => &["alpha", "beta"],
        "exp" => &["c", "k"],
        _ => &["file"],
    };
    if let Some((k, _)) = kv.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return Err(Error::config(format!("unknown key `{k}` for family `{name}`")));
    }
    match name {
        "tabulated" => {
            let file = kv
                .iter()
                .find(|(k, _)| k == "file")
                .ok_or_else(|| Error::config("tabulated weight needs `file=`"))?;
            WeightFamily::from_csv(Path::new(&file.1))
        }
        "constant" => Ok(WeightFamily::Constant(if kv.is_empty() { 1.0 } else { get(&["c"])? })),
        "standard" => Ok(WeightFamily::Standard(get(&["alpha"])?)),
        "power" => Ok(WeightFamily::PowerOneMinus(get(&["gamma"])?)),
        "log" => Ok(WeightFamily::Logarithmic(get(&["alpha"])?, get(&["beta"])?)),
        "exp" => Ok(WeightFamily::ExponentialDecay(get(&["c"])?, get(&["k"])?)),
        _ => unreachable!(),
    }
}

impl FromStr for WeightFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        WeightFamily::parse(s)
    }
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFamily::Constant(c) => write!(f, "constant:{c}"),
            WeightFamily::Standard(a) => write!(f, "standard:{a}"),
            WeightFamily::PowerOneMinus(g) => write!(f, "power:{g}"),
            WeightFamily::Logarithmic(a, b) => write!(f, "log:{a},{b}"),
            WeightFamily::ExponentialDecay(c, k) => write!(f, "exp:{c},{k}"),
            WeightFamily::Tabulated(g) => write!(f, "tabulated[{} nodes]", g.nodes().len()),
        }
    }
}
